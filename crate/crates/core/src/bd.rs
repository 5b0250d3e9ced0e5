//! Block-diagonalization beamforming and the alternating BD / max-min RIS loop.
//!
//! Each group's beam lives in the null space of every other group's effective
//! channels, so inter-group interference is removed completely; inside that
//! subspace the beam is the dominant eigenbeam of the group's own channels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{dominant_right_singular, svd_full_right, CMat, CVec};
use crate::sdr::{max_min_phases, SdrSettings};
use crate::system::{effective_channels, min_rates_from_effective, BeamformerMatrix, PhaseInit, RisPhaseVector};

/// Singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BdSettings {
    /// Iteration cap `I_1`.
    pub max_iters: usize,
    /// Sum-rate change that ends the loop, bits/s/Hz.
    pub rate_tol: f64,
    pub init: PhaseInit,
}

impl Default for BdSettings {
    fn default() -> Self {
        Self {
            max_iters: 10,
            rate_tol: 0.1,
            init: PhaseInit::AllOnes,
        }
    }
}

impl BdSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.rate_tol > 0.0) {
            return Err(Error::Config(format!("invalid BD settings: {self:?}")));
        }
        Ok(())
    }
}

/// Effective channels of group `g` and of every other user.
#[derive(Debug, Clone)]
pub struct GroupChannelStack {
    pub own: CMat,
    pub others: CMat,
}

impl GroupChannelStack {
    pub fn build(effective: &[Vec<CVec>], g: usize) -> Self {
        let n = effective[g][0].len();
        let stack = |rows: Vec<&CVec>| {
            let mut m = CMat::zeros(rows.len(), n);
            for (i, r) in rows.iter().enumerate() {
                m.set_row(i, &r.transpose());
            }
            m
        };
        let own = stack(effective[g].iter().collect());
        let others = stack(
            effective
                .iter()
                .enumerate()
                .filter(|(gp, _)| *gp != g)
                .flat_map(|(_, users)| users.iter())
                .collect(),
        );
        Self { own, others }
    }
}

/// Orthonormal basis of the null space of a channel stack.
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    /// `N x (N - rank)`.
    pub basis: CMat,
    pub rank: usize,
}

/// Null space of `others` from its full SVD. Singular values below
/// `rank_tol * sigma_max` are treated as zero.
pub fn null_space(others: &CMat, rank_tol: f64) -> Result<NullSpaceBasis> {
    let n = others.ncols();
    let (sigma, v) = svd_full_right(others);
    let peak = sigma.first().copied().unwrap_or(0.0);
    let rank = if peak > 0.0 {
        sigma.iter().filter(|&&s| s > rank_tol * peak).count()
    } else {
        0
    };
    if rank >= n {
        return Err(Error::BdInfeasible {
            group: 0,
            n_antennas: n,
            rank,
        });
    }
    Ok(NullSpaceBasis {
        basis: v.columns(rank, n - rank).into_owned(),
        rank,
    })
}

/// BD precoder for the current phases with per-group powers `power`.
pub fn bd_beamformer(channels: &ChannelSet, phases: &[RisPhaseVector], power: &[f64]) -> Result<BeamformerMatrix> {
    let effective = effective_channels(channels, phases)?;
    bd_from_effective(&effective, power)
}

fn bd_from_effective(effective: &[Vec<CVec>], power: &[f64]) -> Result<BeamformerMatrix> {
    let groups = effective.len();
    let n = effective[0][0].len();
    let mut directions = CMat::zeros(n, groups);
    for g in 0..groups {
        let stack = GroupChannelStack::build(effective, g);
        let ns = null_space(&stack.others, RANK_TOL).map_err(|e| match e {
            Error::BdInfeasible { n_antennas, rank, .. } => Error::BdInfeasible {
                group: g + 1,
                n_antennas,
                rank,
            },
            other => other,
        })?;
        let equivalent = &stack.own * &ns.basis;
        let (_, m_eq) = dominant_right_singular(&equivalent);
        directions.set_column(g, &(&ns.basis * m_eq));
    }
    BeamformerMatrix::from_directions(directions, power)
}

/// Per-iteration record of an iterative design.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    /// Convergence metric after each iteration (sum-rate for BD, total phase
    /// change for MTZF).
    pub values: Vec<f64>,
    /// `true` when the loop ended through the tolerance test rather than the
    /// iteration cap.
    pub converged: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub beamformer: BeamformerMatrix,
    pub phases: Vec<RisPhaseVector>,
    pub trace: IterationTrace,
}

/// Alternates BD beamforming with per-group max-min phase updates until the
/// sum-rate changes by less than `settings.rate_tol` or `settings.max_iters`
/// iterations ran, then recomputes the BD beamformer for the final phases.
///
/// Groups are updated in ascending index order. Each group's update depends
/// only on its own beam and links, so the order only affects the rng stream.
pub fn algorithm1<R: Rng + ?Sized>(
    channels: &ChannelSet,
    initial: Vec<RisPhaseVector>,
    power: &[f64],
    noise: &[Vec<f64>],
    settings: &BdSettings,
    sdr: &SdrSettings,
    rng: &mut R,
) -> Result<DesignOutcome> {
    let mut phases = initial;
    let mut trace = IterationTrace::default();
    let mut previous = 0.0;
    for _ in 0..settings.max_iters {
        let f = bd_beamformer(channels, &phases, power)?;
        for g in 0..channels.num_groups() {
            let design = max_min_phases(channels, &f.column(g), g, &noise[g], sdr, rng)?;
            phases[g] = design.phases;
        }
        let effective = effective_channels(channels, &phases)?;
        let rate: f64 = min_rates_from_effective(&effective, &f, noise).iter().sum();
        trace.values.push(rate);
        if (rate - previous).abs() < settings.rate_tol {
            trace.converged = true;
            break;
        }
        previous = rate;
    }
    let beamformer = bd_beamformer(channels, &phases, power)?;
    Ok(DesignOutcome {
        beamformer,
        phases,
        trace,
    })
}
