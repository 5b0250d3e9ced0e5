//! Max-min RIS phase design for one group under a fixed BD beamformer.
//!
//! The per-user SNR `|h^H f|^2 / sigma^2` is a quadratic form in the lifted
//! vector `[phi; t]`. Dropping the rank-one constraint on its outer product
//! leaves the semidefinite program
//!
//! ```text
//!   max  min_k Tr(W_k Theta) + c_k   s.t.  Theta >= 0,  Theta(m, m) = 1,
//! ```
//!
//! which is solved here with a log-barrier interior-point method on its dual
//!
//! ```text
//!   min  sum(y) + sum_k lambda_k c_k
//!   s.t. Diag(y) - sum_k lambda_k W_k >= 0,  lambda >= 0,  sum(lambda) = 1.
//! ```
//!
//! Every dual iterate is feasible, so its objective is a certified upper bound
//! on the relaxation. The primal matrix is recovered from the barrier
//! stationarity condition and rescaled to unit diagonal. Gaussian
//! randomization then turns `Theta` into a unit-modulus vector.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_hpd, cholesky_inverse, crandn, eigh, hermitian_part, quad_form, row_dot, unit_phase, CMat, CVec, C64,
};
use crate::system::RisPhaseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdrSettings {
    /// Gaussian randomization draws.
    pub n_rand: usize,
    /// Target relative duality gap.
    pub gap_tol: f64,
    /// A solve whose final relative gap exceeds this is reported as not converged.
    pub residual_tol: f64,
    /// Barrier parameter growth per outer iteration.
    pub barrier_growth: f64,
    /// Cap on the total number of Newton steps.
    pub max_newton_iters: usize,
}

impl Default for SdrSettings {
    fn default() -> Self {
        Self {
            n_rand: 200,
            gap_tol: 1e-10,
            residual_tol: 1e-4,
            barrier_growth: 20.0,
            max_newton_iters: 400,
        }
    }
}

impl SdrSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_rand == 0
            || !(self.gap_tol > 0.0)
            || !(self.residual_tol > 0.0)
            || !(self.barrier_growth > 1.0)
            || self.max_newton_iters == 0
        {
            return Err(Error::Config(format!("invalid SDR settings: {self:?}")));
        }
        Ok(())
    }
}

/// `max_Theta min_k Tr(W_k Theta) + c_k` over unit-diagonal PSD matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProblem {
    pub w: Vec<CMat>,
    pub c: Vec<f64>,
}

impl LiftedProblem {
    pub fn new(w: Vec<CMat>, c: Vec<f64>) -> Result<Self> {
        let Some(first) = w.first() else {
            return Err(Error::DimensionMismatch(
                "lifted problem needs at least one user".into(),
            ));
        };
        let n = first.nrows();
        if w.len() != c.len() || w.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::DimensionMismatch(
                "lifted matrices must be square and match the constants".into(),
            ));
        }
        Ok(Self { w, c })
    }

    /// `M + 1`.
    pub fn dim(&self) -> usize {
        self.w[0].nrows()
    }

    pub fn num_users(&self) -> usize {
        self.w.len()
    }

    /// Objective of a rank-one point `x x^H`.
    pub fn value(&self, x: &CVec) -> f64 {
        self.w
            .iter()
            .zip(&self.c)
            .map(|(w, c)| quad_form(w, x) + c)
            .fold(f64::INFINITY, f64::min)
    }

    /// Objective of a relaxed point `Theta`.
    pub fn relaxed_value(&self, theta: &CMat) -> f64 {
        self.w
            .iter()
            .zip(&self.c)
            .map(|(w, c)| trace_product(w, theta) + c)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `Re Tr(A B)` for Hermitian `A`, `B`.
fn trace_product(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// Builds the lifted matrices of group `g` for a fixed beam `f_g`.
///
/// With `u_k = h_d^H f_g` and `v_k(m) = [h_r^H](m) (H_g f_g)(m)`, user `k`
/// receives `u_k + sum_m phi(m) v_k(m)`. The lift uses `q = conj(u_k)` and
/// `p = conj(v_k)` so that `[phi'; t]^H W_k [phi'; t] + c_k` equals the SNR
/// under `phi = phi' conj(t)` for unit-modulus `t`.
pub fn lift(channels: &ChannelSet, f_g: &CVec, g: usize, noise: &[f64]) -> Result<LiftedProblem> {
    let h = &channels.bs_ris[g];
    if f_g.len() != h.ncols() || noise.len() != channels.users_in(g) {
        return Err(Error::DimensionMismatch(format!(
            "beam of length {} / {} noise values for group {g}",
            f_g.len(),
            noise.len()
        )));
    }
    let hf = h * f_g;
    let mut w = Vec::with_capacity(noise.len());
    let mut c = Vec::with_capacity(noise.len());
    for (k, &sigma2) in noise.iter().enumerate() {
        let q = row_dot(&channels.direct[g][k], f_g).conj();
        let p = channels.reflect[g][k].component_mul(&hf).map(|z| z.conj());
        let (wk, ck) = lifted_block(&p, q, sigma2);
        w.push(wk);
        c.push(ck);
    }
    LiftedProblem::new(w, c)
}

/// `W = [[p p^H, p q*], [q p^H, 0]] / sigma^2` and `c = |q|^2 / sigma^2`.
pub fn lifted_block(p: &CVec, q: C64, sigma2: f64) -> (CMat, f64) {
    let m = p.len();
    let mut w = CMat::zeros(m + 1, m + 1);
    let inv = 1.0 / sigma2;
    w.view_mut((0, 0), (m, m))
        .copy_from(&(p * p.adjoint() * C64::from(inv)));
    for i in 0..m {
        let v = p[i] * q.conj() * inv;
        w[(i, m)] = v;
        w[(m, i)] = v.conj();
    }
    (w, q.norm_sqr() * inv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub newton_iters: usize,
    pub outer_iters: usize,
    /// `(bound - achieved) / max(1, |bound|)`.
    pub relative_gap: f64,
    /// Largest `|Theta(m, m) - 1|` before the final diagonal rescaling.
    pub diag_residual: f64,
    pub min_eigenvalue: f64,
}

impl std::fmt::Display for SolverDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} Newton steps over {} barrier stages, relative gap {:.3e}, diagonal residual {:.3e}, min eigenvalue {:.3e}",
            self.newton_iters, self.outer_iters, self.relative_gap, self.diag_residual, self.min_eigenvalue
        )
    }
}

#[derive(Debug, Clone)]
pub struct SdrSolution {
    /// Unit-diagonal PSD matrix.
    pub theta: CMat,
    /// Objective attained by `theta`.
    pub objective: f64,
    /// Dual objective: an upper bound on every feasible point, rank-one or not.
    pub objective_bound: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Low-rank factors `W_k = sum_r s_r v_r v_r^H`, stacked.
struct Factored {
    vectors: CMat,
    weights: Vec<f64>,
    owner: Vec<usize>,
}

fn factor(w: &[CMat]) -> Factored {
    let n = w[0].nrows();
    let mut cols = Vec::new();
    let mut weights = Vec::new();
    let mut owner = Vec::new();
    for (k, wk) in w.iter().enumerate() {
        let (vals, vecs) = eigh(wk);
        let peak = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (i, &v) in vals.iter().enumerate() {
            if v.abs() > 1e-14 * peak && peak > 0.0 {
                cols.push(vecs.column(i).into_owned());
                weights.push(v);
                owner.push(k);
            }
        }
    }
    let vectors = if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    };
    Factored {
        vectors,
        weights,
        owner,
    }
}

struct DualPoint {
    y: DVector<f64>,
    lambda: DVector<f64>,
}

struct Evaluation {
    log_barrier: f64,
    gradient: DVector<f64>,
    hessian: DMatrix<f64>,
    inverse: CMat,
}

/// Solves the relaxation. Fails with [`Error::SdrNotConverged`] when the
/// final relative duality gap exceeds `settings.residual_tol`.
pub fn solve_sdr_maxmin(problem: &LiftedProblem, settings: &SdrSettings) -> Result<SdrSolution> {
    let n = problem.dim();
    let users = problem.num_users();
    let scale = problem
        .w
        .iter()
        .map(|w| w.norm())
        .chain(problem.c.iter().map(|c| c.abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        if !scale.is_finite() {
            return Err(Error::DimensionMismatch("lifted problem has non-finite entries".into()));
        }
        let theta = CMat::identity(n, n);
        return Ok(SdrSolution {
            objective: problem.relaxed_value(&theta),
            objective_bound: 0.0,
            theta,
            diagnostics: SolverDiagnostics {
                newton_iters: 0,
                outer_iters: 0,
                relative_gap: 0.0,
                diag_residual: 0.0,
                min_eigenvalue: 1.0,
            },
        });
    }
    let w: Vec<CMat> = problem.w.iter().map(|w| hermitian_part(w).unscale(scale)).collect();
    let c: Vec<f64> = problem.c.iter().map(|c| c / scale).collect();
    let factors = factor(&w);

    let lambda0 = DVector::from_element(users, 1.0 / users as f64);
    let mixed: CMat = w
        .iter()
        .fold(CMat::zeros(n, n), |acc, wk| acc + wk.scale(1.0 / users as f64));
    let shift = mixed.norm() + 1.0;
    let mut x = DualPoint {
        y: DVector::from_element(n, shift),
        lambda: lambda0,
    };

    let degree = (n + users) as f64;
    let c_vec = DVector::from_column_slice(&c);
    let mut t = 1.0;
    let mut newton_iters = 0;
    let mut outer_iters = 0;
    let mut best: Option<Recovered> = None;
    let mut bound = f64::INFINITY;
    loop {
        outer_iters += 1;
        let mut stalled = false;
        let mut inverse = None;
        // Centering.
        loop {
            let Some(eval) = evaluate(&x, &w, &c, &factors, t) else {
                stalled = true;
                break;
            };
            let Some(step) = newton_step(&eval, n, users) else {
                stalled = true;
                break;
            };
            let decrement = -eval.gradient.dot(&step);
            inverse = Some(eval.inverse);
            // Rounding makes the decrement noisy, possibly negative, once centered.
            if decrement < 1e-10 || newton_iters >= settings.max_newton_iters {
                break;
            }
            newton_iters += 1;
            // The linear part changes exactly by `t s (sum dy + c . dlambda)`; differencing
            // only the log terms avoids cancellation once `t` is large.
            let linear_rate = t * (step.rows(0, n).sum() + step.rows(n, users).dot(&c_vec));
            let mut s = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = DualPoint {
                    y: &x.y + step.rows(0, n) * s,
                    lambda: &x.lambda + step.rows(n, users) * s,
                };
                if cand.lambda.iter().all(|&l| l > 0.0) {
                    if let Some(log_b) = log_barrier(&cand, &w) {
                        if s * linear_rate + (log_b - eval.log_barrier) <= -0.25 * s * decrement {
                            // Dividing by sum(lambda) keeps Z PSD and restores sum(lambda) = 1.
                            let total = cand.lambda.sum();
                            x = DualPoint {
                                y: cand.y / total,
                                lambda: cand.lambda / total,
                            };
                            accepted = true;
                            break;
                        }
                    }
                }
                s *= 0.5;
            }
            if !accepted {
                stalled = true;
                break;
            }
        }
        // Every strictly feasible dual point certifies an upper bound.
        if cholesky_hpd(&slack(&x, &w)).is_some() {
            bound = bound.min(scale * (x.y.sum() + x.lambda.dot(&c_vec)));
        }
        if let Some(inverse) = inverse {
            let candidate = recover(problem, &inverse, t);
            if best.as_ref().is_none_or(|b| candidate.objective > b.objective) {
                best = Some(candidate);
            }
        }
        let gap = best
            .as_ref()
            .map_or(f64::INFINITY, |b| (bound - b.objective) / bound.abs().max(1.0));
        if stalled
            || gap <= settings.gap_tol
            || degree / t <= settings.gap_tol
            || newton_iters >= settings.max_newton_iters
        {
            break;
        }
        t *= settings.barrier_growth;
    }

    let Some(best) = best else {
        return Err(not_converged(newton_iters, outer_iters, f64::INFINITY));
    };
    let relative_gap = (bound - best.objective) / bound.abs().max(1.0);
    let (eigs, _) = eigh(&best.theta);
    let diagnostics = SolverDiagnostics {
        newton_iters,
        outer_iters,
        relative_gap,
        diag_residual: best.diag_residual,
        min_eigenvalue: eigs[0],
    };
    if !(relative_gap <= settings.residual_tol) || !best.objective.is_finite() {
        return Err(Error::SdrNotConverged(diagnostics));
    }
    Ok(SdrSolution {
        theta: best.theta,
        objective: best.objective,
        objective_bound: bound,
        diagnostics,
    })
}

struct Recovered {
    theta: CMat,
    objective: f64,
    diag_residual: f64,
}

/// Primal point `Z^-1 / t` of the current centering stage, rescaled to unit diagonal.
fn recover(problem: &LiftedProblem, inverse: &CMat, t: f64) -> Recovered {
    let n = inverse.nrows();
    let raw = hermitian_part(inverse).unscale(t);
    let diag: Vec<f64> = (0..n).map(|i| raw[(i, i)].re).collect();
    let diag_residual = diag.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
    let theta = CMat::from_fn(n, n, |i, j| raw[(i, j)] / (diag[i] * diag[j]).sqrt());
    Recovered {
        objective: problem.relaxed_value(&theta),
        theta,
        diag_residual,
    }
}

fn not_converged(newton_iters: usize, outer_iters: usize, gap: f64) -> Error {
    Error::SdrNotConverged(SolverDiagnostics {
        newton_iters,
        outer_iters,
        relative_gap: gap,
        diag_residual: f64::NAN,
        min_eigenvalue: f64::NAN,
    })
}

fn slack(x: &DualPoint, w: &[CMat]) -> CMat {
    let n = x.y.len();
    let mut z = CMat::from_diagonal(&x.y.map(C64::from));
    for (wk, &l) in w.iter().zip(x.lambda.iter()) {
        z -= wk.scale(l);
    }
    debug_assert_eq!(z.nrows(), n);
    z
}

/// `-log det Z - sum(log lambda)`.
fn log_barrier(x: &DualPoint, w: &[CMat]) -> Option<f64> {
    let chol = cholesky_hpd(&slack(x, w))?;
    let log_det = chol.diagonal().iter().map(|d| d.re.ln()).sum::<f64>() * 2.0;
    let v = -log_det - x.lambda.iter().map(|l| l.ln()).sum::<f64>();
    v.is_finite().then_some(v)
}

fn evaluate(x: &DualPoint, w: &[CMat], c: &[f64], f: &Factored, t: f64) -> Option<Evaluation> {
    let n = x.y.len();
    let users = x.lambda.len();
    let chol = cholesky_hpd(&slack(x, w))?;
    let log_det = chol.diagonal().iter().map(|d| d.re.ln()).sum::<f64>() * 2.0;
    let y_inv = cholesky_inverse(&chol)?;
    let log_barrier = -log_det - x.lambda.iter().map(|l| l.ln()).sum::<f64>();

    let dim = n + users;
    let mut gradient = DVector::zeros(dim);
    let mut hessian = DMatrix::zeros(dim, dim);
    for i in 0..n {
        gradient[i] = t - y_inv[(i, i)].re;
        for j in 0..n {
            hessian[(i, j)] = y_inv[(i, j)].norm_sqr();
        }
    }
    // Y V and V^H Y V for the stacked factors.
    let yv = &y_inv * &f.vectors;
    let vyv = f.vectors.adjoint() * &yv;
    let rank = f.weights.len();
    for k in 0..users {
        gradient[n + k] = t * c[k] - 1.0 / x.lambda[k];
    }
    for r in 0..rank {
        let k = f.owner[r];
        let s = f.weights[r];
        gradient[n + k] += s * vyv[(r, r)].re;
        for i in 0..n {
            hessian[(i, n + k)] -= s * yv[(i, r)].norm_sqr();
        }
        for r2 in 0..rank {
            let l = f.owner[r2];
            hessian[(n + k, n + l)] += s * f.weights[r2] * vyv[(r, r2)].norm_sqr();
        }
    }
    for k in 0..users {
        for i in 0..n {
            hessian[(n + k, i)] = hessian[(i, n + k)];
        }
        hessian[(n + k, n + k)] += 1.0 / (x.lambda[k] * x.lambda[k]);
    }
    Some(Evaluation {
        log_barrier,
        gradient,
        hessian,
        inverse: y_inv,
    })
}

/// Newton direction with `sum(d_lambda) = 0`, solved on the diagonally
/// equilibrated KKT system.
fn newton_step(eval: &Evaluation, n: usize, users: usize) -> Option<DVector<f64>> {
    let dim = n + users;
    let scale: Vec<f64> = (0..dim)
        .map(|i| {
            let d = eval.hessian[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut kkt = DMatrix::zeros(dim + 1, dim + 1);
    for i in 0..dim {
        for j in 0..dim {
            kkt[(i, j)] = eval.hessian[(i, j)] * scale[i] * scale[j];
        }
    }
    for k in 0..users {
        kkt[(n + k, dim)] = scale[n + k];
        kkt[(dim, n + k)] = scale[n + k];
    }
    let mut rhs = DVector::zeros(dim + 1);
    for i in 0..dim {
        rhs[i] = -eval.gradient[i] * scale[i];
    }
    let sol = kkt.lu().solve(&rhs)?;
    let step = DVector::from_fn(dim, |i, _| sol[i] * scale[i]);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

#[derive(Debug, Clone)]
pub struct Randomized {
    /// Unit-modulus lifted vector `[phi'; t]`.
    pub vector: CVec,
    pub objective: f64,
}

/// Gaussian randomization: samples `CN(0, Theta)`, projects each draw onto
/// the unit circle element-wise and keeps the best. The phase-projected
/// principal eigenvector is always among the candidates; when `Theta` is
/// numerically rank one it is returned directly.
pub fn gaussian_randomization<R: Rng + ?Sized>(
    solution: &SdrSolution,
    problem: &LiftedProblem,
    n_rand: usize,
    rng: &mut R,
) -> Randomized {
    let n = problem.dim();
    let (vals, vecs) = eigh(&solution.theta);
    let top = vals[n - 1].max(0.0);
    let principal = vecs.column(n - 1).map(unit_phase);
    let mut best = Randomized {
        objective: problem.value(&principal),
        vector: principal,
    };
    let second = if n >= 2 { vals[n - 2].max(0.0) } else { 0.0 };
    if top == 0.0 || second / top < 1e-8 {
        return best;
    }
    let sqrt_vals: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let factor = CMat::from_fn(n, n, |i, j| vecs[(i, j)] * sqrt_vals[j]);
    for _ in 0..n_rand {
        let z = CVec::from_fn(n, |_, _| crandn(rng));
        let candidate = (&factor * z).map(unit_phase);
        let value = problem.value(&candidate);
        if value > best.objective {
            best = Randomized {
                vector: candidate,
                objective: value,
            };
        }
    }
    best
}

/// Reflection coefficients from a lifted vector: divide by the auxiliary last
/// entry, keep the first `M` phases.
pub fn extract_phases(lifted: &CVec) -> Result<RisPhaseVector> {
    let m = lifted.len().checked_sub(1).ok_or(Error::ZeroAuxiliary)?;
    let aux = lifted[m];
    if aux.norm() == 0.0 {
        return Err(Error::ZeroAuxiliary);
    }
    Ok(RisPhaseVector::from_unnormalized(&lifted.rows(0, m).map(|z| z / aux)))
}

/// Outcome of one per-group phase update.
#[derive(Debug, Clone)]
pub struct GroupDesign {
    pub phases: RisPhaseVector,
    pub objective_bound: f64,
    pub randomized_objective: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Lift, relax, randomize and extract: the max-min phase update of group `g`
/// for a fixed beam `f_g`.
pub fn max_min_phases<R: Rng + ?Sized>(
    channels: &ChannelSet,
    f_g: &CVec,
    g: usize,
    noise: &[f64],
    settings: &SdrSettings,
    rng: &mut R,
) -> Result<GroupDesign> {
    let problem = lift(channels, f_g, g, noise)?;
    let solution = solve_sdr_maxmin(&problem, settings)?;
    let best = gaussian_randomization(&solution, &problem, settings.n_rand, rng);
    Ok(GroupDesign {
        phases: extract_phases(&best.vector)?,
        objective_bound: solution.objective_bound,
        randomized_objective: best.objective,
        diagnostics: solution.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = CMat::from_fn(n, n, |_, _| crandn(rng));
        hermitian_part(&a)
    }

    #[test]
    fn block_formula_at_unit_values() {
        let (w, c) = lifted_block(&CVec::from_element(1, ONE), ONE, 1.0);
        assert_eq!(w, CMat::from_row_slice(2, 2, &[ONE, ONE, ONE, C64::new(0.0, 0.0)]));
        assert_eq!(c, 1.0);
    }

    #[test]
    fn zero_reflection_leaves_constant_only() {
        let (w, c) = lifted_block(&CVec::zeros(3), C64::new(0.5, 0.5), 2.0);
        assert_eq!(w, CMat::zeros(4, 4));
        assert_relative_eq!(c, 0.25);
    }

    #[test]
    fn extract_phases_cases() {
        let ones = extract_phases(&CVec::from_element(4, ONE)).unwrap();
        assert_eq!(ones, RisPhaseVector::all_ones(3));

        let v = CVec::from_vec(vec![C64::from_polar(1.0, PI / 3.0), C64::from_polar(1.0, PI / 6.0)]);
        let phi = extract_phases(&v).unwrap();
        assert!((phi.as_vec()[0] - C64::from_polar(1.0, PI / 6.0)).norm() < 1e-15);

        let rotated = &v * C64::from_polar(1.0, 2.1);
        let phi_r = extract_phases(&rotated).unwrap();
        assert!((phi_r.as_vec() - phi.as_vec()).norm() < 1e-14);

        let mut zero_aux = v.clone();
        zero_aux[1] = C64::new(0.0, 0.0);
        assert!(matches!(extract_phases(&zero_aux), Err(Error::ZeroAuxiliary)));
    }

    #[test]
    fn all_zero_matrices_give_min_constant() {
        let problem = LiftedProblem::new(vec![CMat::zeros(3, 3), CMat::zeros(3, 3)], vec![2.0, 0.5]).unwrap();
        let sol = solve_sdr_maxmin(&problem, &SdrSettings::default()).unwrap();
        assert_relative_eq!(sol.objective, 0.5, epsilon = 1e-8);
        assert_relative_eq!(sol.objective_bound, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn single_user_two_by_two_matches_closed_form() {
        // Theta = [[1, z], [z*, 1]] with |z| <= 1: Tr(W Theta) = w11 + w22 + 2 Re(w12 z*),
        // maximized at z = w12 / |w12|.
        let w12 = C64::new(0.3, -0.8);
        let w = CMat::from_row_slice(2, 2, &[C64::new(1.5, 0.0), w12, w12.conj(), C64::new(-0.2, 0.0)]);
        let problem = LiftedProblem::new(vec![w], vec![0.7]).unwrap();
        let sol = solve_sdr_maxmin(&problem, &SdrSettings::default()).unwrap();
        let expected = 1.5 - 0.2 + 2.0 * w12.norm() + 0.7;
        assert_relative_eq!(sol.objective, expected, max_relative = 1e-8);
        assert!(
            sol.objective_bound >= sol.objective,
            "{} {}",
            sol.objective_bound,
            sol.objective
        );
        assert!(sol.diagnostics.relative_gap < 1e-8);
    }

    #[test]
    fn solution_is_feasible_and_bound_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let n = 2 + trial % 6;
            let users = 1 + trial % 4;
            let w: Vec<CMat> = (0..users).map(|_| random_hermitian(n, &mut rng)).collect();
            let c: Vec<f64> = (0..users).map(|_| rng.random_range(0.0..2.0)).collect();
            let problem = LiftedProblem::new(w, c).unwrap();
            let sol = solve_sdr_maxmin(&problem, &SdrSettings::default()).unwrap();
            for i in 0..n {
                assert!((sol.theta[(i, i)].re - 1.0).abs() < 1e-12);
            }
            assert!(sol.diagnostics.min_eigenvalue > -1e-7);
            assert!(
                sol.objective_bound + 1e-9 >= sol.objective,
                "{} {} {}",
                sol.objective_bound,
                sol.objective,
                sol.diagnostics
            );
            let rnd = gaussian_randomization(&sol, &problem, 100, &mut rng);
            assert!(rnd.objective <= sol.objective_bound + 1e-6 * sol.objective_bound.abs().max(1.0));
            assert!(rnd.vector.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn rank_one_solution_recovers_the_vector() {
        // W = x x^H with unit-modulus x: the optimum is Theta = x x^H.
        let x = CVec::from_vec(vec![ONE, C64::from_polar(1.0, 0.4), C64::from_polar(1.0, -2.0)]);
        let problem = LiftedProblem::new(vec![&x * x.adjoint()], vec![0.0]).unwrap();
        let sol = solve_sdr_maxmin(&problem, &SdrSettings::default()).unwrap();
        assert_relative_eq!(sol.objective, 9.0, max_relative = 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rnd = gaussian_randomization(&sol, &problem, 10, &mut rng);
        assert_relative_eq!(rnd.objective, 9.0, max_relative = 1e-8);
        let ratio = rnd.vector[0] / x[0];
        assert!((&rnd.vector - &x * ratio).norm() < 1e-6);
    }

    #[test]
    fn more_draws_never_hurt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<CMat> = (0..3).map(|_| random_hermitian(5, &mut rng)).collect();
        let problem = LiftedProblem::new(w, vec![1.0; 3]).unwrap();
        let sol = solve_sdr_maxmin(&problem, &SdrSettings::default()).unwrap();
        let one = gaussian_randomization(&sol, &problem, 1, &mut ChaCha8Rng::seed_from_u64(9));
        let many = gaussian_randomization(&sol, &problem, 500, &mut ChaCha8Rng::seed_from_u64(9));
        assert!(many.objective >= one.objective);
    }
}
