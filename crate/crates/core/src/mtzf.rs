//! Multicasting-tailored zero-forcing (MTZF) and the loss-minimizing RIS design.
//!
//! Each group is represented by the arithmetic mean of its users' effective
//! channels (its representative channel, RC). The transmit beamformer is the
//! zero-forcing pseudo-inverse of the RC matrix. A first-order diagonal
//! Neumann-series expansion of the Gram inverse splits every beam into an
//! intended part and a nulling part; the nulling part costs group `g` the
//! signal `K_g h_g^H A_g h_g / |h_g|^2` where `A_g` sums the projectors onto
//! the other groups' RCs. The RIS of group `g` is steered so that its RC lines
//! up with a minimum eigenvector of `A_g`, in closed form, with no
//! alternation against the beamformer.

use serde::{Deserialize, Serialize};

use crate::bd::{DesignOutcome, IterationTrace};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{eigh, row_dot, unit_phase, CMat, CVec, C64, ONE};
use crate::system::{effective_channel, BeamformerMatrix, PhaseInit, RisPhaseVector};

/// Largest Gram condition number accepted by [`mtzf_beamformer`].
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepUpdate {
    /// Each group sees the phases already updated earlier in the same sweep.
    #[default]
    GaussSeidel,
    /// Each group sees the previous sweep's phases.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtzfSettings {
    /// Iteration cap `I_2`.
    pub max_iters: usize,
    /// Total phase change `sum_g |phi_g - phi_g_prev|` that ends the loop.
    pub norm_tol: f64,
    pub update: SweepUpdate,
    pub init: PhaseInit,
    /// Candidates are eigenvectors within `eig_tol * max(lambda_max, 1)` of the
    /// smallest eigenvalue of `A_g`.
    pub eig_tol: f64,
}

impl Default for MtzfSettings {
    fn default() -> Self {
        Self {
            max_iters: 10,
            norm_tol: 1e-6,
            update: SweepUpdate::GaussSeidel,
            init: PhaseInit::AllOnes,
            eig_tol: 1e-8,
        }
    }
}

impl MtzfSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.norm_tol > 0.0) || !(self.eig_tol >= 0.0) {
            return Err(Error::Config(format!("invalid MTZF settings: {self:?}")));
        }
        Ok(())
    }
}

/// Per-group mean channels, stored as row entries like [`ChannelSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeChannels {
    /// Entries of `h~_g^H`.
    pub rc: Vec<CVec>,
    /// Entries of `h~_d,g^H`.
    pub rc_direct: Vec<CVec>,
    /// Entries of `h~_r,g^H`.
    pub rc_reflect: Vec<CVec>,
}

impl RepresentativeChannels {
    pub fn num_groups(&self) -> usize {
        self.rc.len()
    }

    /// `h~_g` as a column vector.
    pub fn column(&self, g: usize) -> CVec {
        self.rc[g].map(|z| z.conj())
    }

    /// `N x G` matrix `[h~_1, ..., h~_G]`.
    pub fn matrix(&self) -> CMat {
        let cols: Vec<CVec> = (0..self.num_groups()).map(|g| self.column(g)).collect();
        CMat::from_columns(&cols)
    }

    /// Recomputes `rc[g]` for new phases of group `g`.
    pub fn refresh(&mut self, g: usize, phases: &RisPhaseVector, bs_ris: &CMat) -> Result<()> {
        self.rc[g] = effective_channel(&self.rc_direct[g], &self.rc_reflect[g], phases, bs_ris)?;
        Ok(())
    }
}

fn mean(vectors: &[CVec]) -> CVec {
    let n = vectors[0].len();
    let sum = vectors.iter().fold(CVec::zeros(n), |acc, v| acc + v);
    sum.unscale(vectors.len() as f64)
}

/// Arithmetic means of the direct links, the reflection links and the
/// effective channels of every group.
pub fn representative_channels(channels: &ChannelSet, phases: &[RisPhaseVector]) -> Result<RepresentativeChannels> {
    let groups = channels.num_groups();
    if phases.len() != groups {
        return Err(Error::DimensionMismatch(format!(
            "{} phase vectors for {groups} groups",
            phases.len()
        )));
    }
    let mut out = RepresentativeChannels {
        rc: Vec::with_capacity(groups),
        rc_direct: Vec::with_capacity(groups),
        rc_reflect: Vec::with_capacity(groups),
    };
    for g in 0..groups {
        if channels.users_in(g) == 0 {
            return Err(Error::Config(format!("group {} has no users", g + 1)));
        }
        let direct = mean(&channels.direct[g]);
        let reflect = mean(&channels.reflect[g]);
        out.rc
            .push(effective_channel(&direct, &reflect, &phases[g], &channels.bs_ris[g])?);
        out.rc_direct.push(direct);
        out.rc_reflect.push(reflect);
    }
    Ok(out)
}

/// Columns of `H~ (H~^H H~)^-1`, each normalized and scaled by `sqrt(p_g)`.
pub fn mtzf_beamformer(rcs: &RepresentativeChannels, power: &[f64]) -> Result<BeamformerMatrix> {
    let h = rcs.matrix();
    if h.nrows() < h.ncols() {
        return Err(Error::Config(format!(
            "MTZF needs N >= G, got N = {} < G = {}",
            h.nrows(),
            h.ncols()
        )));
    }
    let gram = h.adjoint() * &h;
    let (vals, _) = eigh(&gram);
    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_GRAM_CONDITION) {
        return Err(Error::RcsDependent { condition });
    }
    let inverse = gram.cholesky().ok_or(Error::RcsDependent { condition })?.inverse();
    BeamformerMatrix::from_directions(h * inverse, power)
}

/// Diagonal Neumann-series view of the scaled Gram matrix `R = H~^H H~ / N`.
#[derive(Debug, Clone)]
pub struct NsContext {
    pub gram: CMat,
    pub precondition: Vec<f64>,
    pub remainder: CMat,
    pub order: usize,
}

impl NsContext {
    pub fn new(rcs: &RepresentativeChannels, order: usize) -> Self {
        let h = rcs.matrix();
        let gram = (h.adjoint() * &h).unscale(h.nrows() as f64);
        let precondition: Vec<f64> = (0..gram.nrows()).map(|i| gram[(i, i)].re).collect();
        let mut remainder = gram.clone();
        remainder.fill_diagonal(C64::new(0.0, 0.0));
        Self {
            gram,
            precondition,
            remainder,
            order,
        }
    }

    /// `sum_{l=0}^{L} (-D^-1 E)^l D^-1`.
    pub fn approx_inverse(&self) -> CMat {
        let g = self.gram.nrows();
        let d_inv = CMat::from_diagonal(&CVec::from_iterator(
            g,
            self.precondition.iter().map(|d| C64::from(1.0 / d)),
        ));
        let step = -(&d_inv * &self.remainder);
        let mut term = CMat::identity(g, g);
        let mut series = CMat::identity(g, g);
        for _ in 0..self.order {
            term = &step * term;
            series += &term;
        }
        series * d_inv
    }
}

/// First-order DNS approximation of the MTZF beamformer:
/// `f_g ~ h_g / |h_g|^2 - sum_{g' != g} h_g' (h_g'^H h_g) / (|h_g'|^2 |h_g|^2)`,
/// with the same normalize-and-scale power contract as [`mtzf_beamformer`].
pub fn ns_beamformer(rcs: &RepresentativeChannels, power: &[f64]) -> Result<BeamformerMatrix> {
    let groups = rcs.num_groups();
    let cols: Vec<CVec> = (0..groups).map(|g| rcs.column(g)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.norm_squared()).collect();
    if norms.contains(&0.0) {
        return Err(Error::RcsDependent {
            condition: f64::INFINITY,
        });
    }
    let directions: Vec<CVec> = (0..groups)
        .map(|g| {
            let mut f = cols[g].unscale(norms[g]);
            for gp in (0..groups).filter(|&gp| gp != g) {
                let coupling = cols[gp].dotc(&cols[g]);
                f -= &cols[gp] * (coupling / (norms[gp] * norms[g]));
            }
            f
        })
        .collect();
    BeamformerMatrix::from_directions(CMat::from_columns(&directions), power)
}

/// `A_g = sum_{g' != g} u_g' u_g'^H` with `u_g' = h~_g' / |h~_g'|`, plus its
/// ascending eigendecomposition.
#[derive(Debug, Clone)]
pub struct LossMatrix {
    pub a: CMat,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl LossMatrix {
    /// Rayleigh quotient `x^H A x / x^H x`.
    pub fn quotient(&self, x: &CVec) -> f64 {
        x.dotc(&(&self.a * x)).re / x.norm_squared()
    }
}

pub fn loss_matrix(rcs: &RepresentativeChannels, g: usize) -> LossMatrix {
    let n = rcs.rc[g].len();
    let mut a = CMat::zeros(n, n);
    for gp in (0..rcs.num_groups()).filter(|&gp| gp != g) {
        let col = rcs.column(gp);
        let norm = col.norm();
        if norm > 0.0 {
            let u = col.unscale(norm);
            a += &u * u.adjoint();
        }
    }
    let (eigenvalues, eigenvectors) = eigh(&a);
    LossMatrix {
        a,
        eigenvalues,
        eigenvectors,
    }
}

/// Intended-signal loss of group `g`, computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    /// `sqrt(p_g) sum_k h_gk^H (nulling part of f_g)`.
    pub per_user: C64,
    /// `sqrt(p_g) K_g h~_g^H A_g h~_g / |h~_g|^2`.
    pub rc_form: f64,
}

impl LossValue {
    pub fn magnitude(&self) -> f64 {
        self.rc_form.abs()
    }
}

pub fn loss_value(effective: &[Vec<CVec>], rcs: &RepresentativeChannels, power: f64, g: usize) -> LossValue {
    let groups = rcs.num_groups();
    let own = rcs.column(g);
    let own_norm2 = own.norm_squared();
    if groups < 2 || own_norm2 == 0.0 {
        return LossValue {
            per_user: C64::new(0.0, 0.0),
            rc_form: 0.0,
        };
    }
    let mut nulling = CVec::zeros(own.len());
    for gp in (0..groups).filter(|&gp| gp != g) {
        let other = rcs.column(gp);
        let other_norm2 = other.norm_squared();
        if other_norm2 > 0.0 {
            nulling += &other * (other.dotc(&own) / (other_norm2 * own_norm2));
        }
    }
    let amp = power.sqrt();
    let per_user: C64 = effective[g].iter().map(|h| row_dot(h, &nulling)).sum::<C64>() * amp;
    let a = loss_matrix(rcs, g);
    let rc_form = amp * effective[g].len() as f64 * a.quotient(&own);
    LossValue { per_user, rc_form }
}

/// `| h~_d^H v | + | diag(h~_r^H) H v |_1`: the value of `|h~_g^H v|` once
/// the phases are set by [`loss_min_phases`].
pub fn pair_criterion(v: &CVec, rc_direct: &CVec, rc_reflect: &CVec, bs_ris: &CMat) -> f64 {
    let alpha = row_dot(rc_direct, v);
    let beta = rc_reflect.component_mul(&(bs_ris * v));
    alpha.norm() + beta.iter().map(|b| b.norm()).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub v: CVec,
    pub criterion: f64,
    /// Column of the eigenvector matrix the candidate came from.
    pub index: usize,
}

/// Among the eigenvectors of `A_g` whose eigenvalue is within
/// `eig_tol * max(lambda_max, 1)` of the minimum, picks the one maximizing
/// [`pair_criterion`]. Ties keep the lowest index.
pub fn select_min_eig_candidate(
    loss: &LossMatrix,
    rc_direct: &CVec,
    rc_reflect: &CVec,
    bs_ris: &CMat,
    eig_tol: f64,
) -> Candidate {
    let lo = loss.eigenvalues[0];
    let hi = loss.eigenvalues[loss.eigenvalues.len() - 1];
    let limit = lo + eig_tol * hi.max(1.0);
    let mut best: Option<Candidate> = None;
    for (i, _) in loss.eigenvalues.iter().enumerate().take_while(|(_, &l)| l <= limit) {
        let v = loss.eigenvectors.column(i).into_owned();
        let criterion = pair_criterion(&v, rc_direct, rc_reflect, bs_ris);
        if best.as_ref().is_none_or(|b| criterion > b.criterion) {
            best = Some(Candidate { v, criterion, index: i });
        }
    }
    best.expect("the smallest eigenvalue is always a candidate")
}

/// Unit-modulus `theta` maximizing `|alpha + theta^H beta|`:
/// `theta(n) = exp(j arg(conj(alpha) beta(n)))`. With `alpha = 0` every
/// element takes the phase of `beta(n)`; zero entries of `beta` get phase 0.
pub fn align_phases(alpha: C64, beta: &CVec) -> CVec {
    let reference = if alpha.norm() > 0.0 { alpha } else { ONE };
    beta.map(|b| unit_phase(reference.conj() * b))
}

/// Phases of group `g` that maximize `|h~_g^H v|`.
///
/// The RC is `alpha + sum_m phi(m) b(m)` with `alpha = h~_d^H v` and
/// `b = diag(h~_r^H) H v`; in the form `|conj(alpha) + phi^H conj(b)|` the
/// maximizer is [`align_phases`].
pub fn loss_min_phases(v: &CVec, rc_direct: &CVec, rc_reflect: &CVec, bs_ris: &CMat) -> RisPhaseVector {
    let alpha = row_dot(rc_direct, v);
    let b = rc_reflect.component_mul(&(bs_ris * v));
    RisPhaseVector::from_unnormalized(&align_phases(alpha.conj(), &b.map(|z| z.conj())))
}

/// Per-group phase sweeps until the total phase change drops below
/// `settings.norm_tol` or `settings.max_iters` sweeps ran, then the exact MTZF
/// beamformer for the final RCs. The beamformer never enters the loop.
pub fn algorithm2(
    channels: &ChannelSet,
    initial: Vec<RisPhaseVector>,
    power: &[f64],
    settings: &MtzfSettings,
) -> Result<DesignOutcome> {
    let groups = channels.num_groups();
    let mut phases = initial;
    let mut rcs = representative_channels(channels, &phases)?;
    let mut trace = IterationTrace::default();
    for _ in 0..settings.max_iters {
        let previous = phases.clone();
        for g in 0..groups {
            let loss = loss_matrix(&rcs, g);
            let cand = select_min_eig_candidate(
                &loss,
                &rcs.rc_direct[g],
                &rcs.rc_reflect[g],
                &channels.bs_ris[g],
                settings.eig_tol,
            );
            phases[g] = loss_min_phases(&cand.v, &rcs.rc_direct[g], &rcs.rc_reflect[g], &channels.bs_ris[g]);
            if settings.update == SweepUpdate::GaussSeidel {
                rcs.refresh(g, &phases[g], &channels.bs_ris[g])?;
            }
        }
        if settings.update == SweepUpdate::Jacobi {
            for g in 0..groups {
                rcs.refresh(g, &phases[g], &channels.bs_ris[g])?;
            }
        }
        let change: f64 = phases
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a.as_vec() - b.as_vec()).norm())
            .sum();
        trace.values.push(change);
        if change < settings.norm_tol {
            trace.converged = true;
            break;
        }
    }
    let rcs = representative_channels(channels, &phases)?;
    let beamformer = mtzf_beamformer(&rcs, power)?;
    Ok(DesignOutcome {
        beamformer,
        phases,
        trace,
    })
}
