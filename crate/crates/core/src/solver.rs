//! ADMM solver for `min ‖x‖₁ + ‖f‖₁ s.t. λ A x + f = b` and its noise-aware
//! variant `‖λ A x + f − b‖₂ ≤ η`.
//!
//! The stacked variable `z = (x, f)` is split into a proximal copy and a copy
//! constrained to the feasible set `C`. With `M = [λA, I]` the rows of `A` are
//! orthogonal with `A A* = (n/m) I`, hence `M M* = (1 + λ² n/m) I` and the
//! projection onto `C` is closed form, costing one `apply` and one
//! `apply_adjoint`:
//!
//! ```text
//! z ← prox_{w/ρ}(u − d)        (modulus soft threshold)
//! u ← Π_C(z + d)
//! d ← d + z − u
//! ```
//!
//! The penalty `ρ` is adapted by residual balancing.
//!
//! For the equality-constrained program the solver also attempts an
//! active-set polish whenever the support of the proximal copy is stable: it
//! solves the least-squares system on that support and accepts the result only
//! if it is feasible and the ADMM dual estimate, projected onto the sign
//! constraints of the candidate, satisfies the optimality bounds.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fourier::PartialFourierOperator;
use crate::linalg::{lstsq, to_dvector};
use crate::problem::complex_sign;
use crate::vecops::{all_finite, complement, gather, norm1, norm2};

/// Componentwise `z · max(1 − t/|z|, 0)`.
pub fn prox_l1(z: &[Complex64], t: f64) -> Vec<Complex64> {
    z.iter().map(|&v| shrink(v, t)).collect()
}

#[inline]
fn shrink(v: Complex64, t: f64) -> Complex64 {
    let r = v.norm();
    if r <= t {
        Complex64::ZERO
    } else {
        v * (1.0 - t / r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Program parameter λ > 0.
    pub lambda: f64,
    /// Initial splitting penalty ρ.
    pub penalty: f64,
    /// Residual-balancing adaptation of ρ.
    pub adaptive_penalty: bool,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Noise radius η; zero selects the equality-constrained program.
    pub eta: f64,
    /// RRE threshold below which callers holding ground truth declare
    /// exact recovery. The solver itself never uses it.
    pub success_rre: f64,
    /// Record a checkpoint every this many iterations (0 disables).
    pub checkpoint_every: usize,
    /// Attempt the active-set polish (equality-constrained program only).
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            penalty: 1.0,
            adaptive_penalty: true,
            max_iter: 50_000,
            tol_primal: 1e-10,
            tol_dual: 1e-10,
            eta: 0.0,
            success_rre: 1e-8,
            checkpoint_every: 0,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(invalid("penalty must be positive"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta must be non-negative"));
        }
        Ok(())
    }

    /// Short stable text digest, echoed into run manifests.
    pub fn digest(&self) -> String {
        format!(
            "admm lambda={:?} penalty={:?} adaptive={} polish={} max_iter={} tol_primal={:?} tol_dual={:?} eta={:?}",
            self.lambda,
            self.penalty,
            self.adaptive_penalty,
            self.polish,
            self.max_iter,
            self.tol_primal,
            self.tol_dual,
            self.eta
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterReached,
}

/// Iterate snapshot taken every `checkpoint_every` iterations.
#[derive(Debug, Clone, Copy)]
pub struct Checkpoint {
    pub iteration: usize,
    /// Smallest objective of the feasible copy `u` over all checkpoints so
    /// far (the incumbent).
    pub objective: f64,
    /// Objective of `u` at this iteration; ADMM does not make it monotone.
    pub current_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x_hat: Vec<Complex64>,
    pub f_hat: Vec<Complex64>,
    pub iterations: usize,
    /// `‖λ A x̂ + f̂ − b‖₂` at the returned point.
    pub primal_residual: f64,
    /// Final `ρ ‖u − u_prev‖₂`.
    pub dual_residual: f64,
    pub objective: f64,
    pub status: SolveStatus,
    pub penalty: f64,
    /// Whether the returned point came from the active-set polish.
    pub polished: bool,
    pub checkpoints: Vec<Checkpoint>,
}

impl Solution {
    /// The signal estimate `λ x̂`.
    pub fn scaled_signal(&self, lambda: f64) -> Vec<Complex64> {
        self.x_hat.iter().map(|v| v * lambda).collect()
    }
}

/// Solves the recovery program for measurements `b`.
pub fn solve(op: &PartialFourierOperator, b: &[Complex64], cfg: &SolverConfig) -> Result<Solution> {
    solve_weighted(op, b, cfg, 1.0, 1.0)
}

/// Solves the θ-weighted form `min ‖x‖₁ + θ‖f‖₁ s.t. A x + f = b`
/// (`cfg.lambda` is ignored and taken as 1).
pub fn solve_theta_form(
    op: &PartialFourierOperator,
    b: &[Complex64],
    theta: f64,
    cfg: &SolverConfig,
) -> Result<Solution> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(invalid("theta must be positive"));
    }
    let cfg = SolverConfig { lambda: 1.0, ..*cfg };
    solve_weighted(op, b, &cfg, 1.0, theta)
}

struct Workspace<'a> {
    op: &'a PartialFourierOperator,
    lambda: f64,
    eta: f64,
    gram: f64,
    b: &'a [Complex64],
    ax: Vec<Complex64>,
    adj: Vec<Complex64>,
    r: Vec<Complex64>,
}

impl Workspace<'_> {
    /// `r ← λ A x + f − b`.
    fn residual(&mut self, x: &[Complex64], f: &[Complex64]) -> Result<f64> {
        self.op.apply_into(x, &mut self.ax)?;
        for ((r, a), (fi, bi)) in self.r.iter_mut().zip(&self.ax).zip(f.iter().zip(self.b)) {
            *r = a * self.lambda + fi - bi;
        }
        Ok(norm2(&self.r))
    }

    /// Projects `(x, f)` onto `{‖λ A x + f − b‖ ≤ η}` in place.
    fn project(&mut self, x: &mut [Complex64], f: &mut [Complex64]) -> Result<()> {
        let rn = self.residual(x, f)?;
        let shrink = if rn <= self.eta {
            return Ok(());
        } else if self.eta > 0.0 {
            1.0 - self.eta / rn
        } else {
            1.0
        };
        // (x, f) ← (x, f) − M* r · shrink / (1 + λ² n/m)
        let c = shrink / self.gram;
        self.op.apply_adjoint_into(&self.r, &mut self.adj)?;
        for (xi, a) in x.iter_mut().zip(&self.adj) {
            *xi -= a * (self.lambda * c);
        }
        for (fi, r) in f.iter_mut().zip(&self.r) {
            *fi -= r * c;
        }
        Ok(())
    }
}

/// Solves `min w_x ‖x‖₁ + w_f ‖f‖₁` subject to the constraint selected by `cfg`.
pub fn solve_weighted(
    op: &PartialFourierOperator,
    b: &[Complex64],
    cfg: &SolverConfig,
    weight_x: f64,
    weight_f: f64,
) -> Result<Solution> {
    cfg.validate()?;
    if b.len() != op.m() {
        return Err(Error::DimensionMismatch {
            expected: op.m(),
            got: b.len(),
        });
    }
    if !all_finite(b) {
        return Err(Error::NonFinite("measurements"));
    }
    let n = op.n();
    let m = op.m();
    let lambda = cfg.lambda;
    let mut ws = Workspace {
        op,
        lambda,
        eta: cfg.eta,
        gram: 1.0 + lambda * lambda * op.row_gram(),
        b,
        ax: vec![Complex64::ZERO; m],
        adj: vec![Complex64::ZERO; n],
        r: vec![Complex64::ZERO; m],
    };
    let b_norm = norm2(b);
    let feas_tol = cfg.eta.max(cfg.tol_primal * b_norm);

    let mut rho = cfg.penalty;
    // proximal copy
    let mut zx = vec![Complex64::ZERO; n];
    let mut zf = vec![Complex64::ZERO; m];
    // feasible copy
    let mut ux = vec![Complex64::ZERO; n];
    let mut uf = vec![Complex64::ZERO; m];
    ws.project(&mut ux, &mut uf)?;
    // scaled dual
    let mut dx = vec![Complex64::ZERO; n];
    let mut df = vec![Complex64::ZERO; m];
    let mut prev_x = ux.clone();
    let mut prev_f = uf.clone();

    let mut checkpoints = Vec::new();
    let mut incumbent = f64::INFINITY;
    let mut status = SolveStatus::MaxIterReached;
    let mut iterations = 0;
    let mut dual_res = f64::INFINITY;
    let polish_on = cfg.polish && cfg.eta == 0.0;
    let weights = Weights {
        x: weight_x,
        f: weight_f,
    };
    let mut last_support: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut failed_support: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut polished: Option<(Vec<Complex64>, Vec<Complex64>)> = None;

    for it in 1..=cfg.max_iter {
        iterations = it;
        let tx = weight_x / rho;
        let tf = weight_f / rho;
        for i in 0..n {
            zx[i] = shrink(ux[i] - dx[i], tx);
        }
        for i in 0..m {
            zf[i] = shrink(uf[i] - df[i], tf);
        }

        prev_x.copy_from_slice(&ux);
        prev_f.copy_from_slice(&uf);
        for i in 0..n {
            ux[i] = zx[i] + dx[i];
        }
        for i in 0..m {
            uf[i] = zf[i] + df[i];
        }
        ws.project(&mut ux, &mut uf)?;

        let mut split = 0.0;
        let mut step = 0.0;
        for i in 0..n {
            let gap = zx[i] - ux[i];
            dx[i] += gap;
            split += gap.norm_sqr();
            step += (ux[i] - prev_x[i]).norm_sqr();
        }
        for i in 0..m {
            let gap = zf[i] - uf[i];
            df[i] += gap;
            split += gap.norm_sqr();
            step += (uf[i] - prev_f[i]).norm_sqr();
        }
        let split = split.sqrt();
        dual_res = rho * step.sqrt();

        let z_norm = (norm2(&zx).powi(2) + norm2(&zf).powi(2)).sqrt();
        let u_norm = (norm2(&ux).powi(2) + norm2(&uf).powi(2)).sqrt();
        let d_norm = rho * (norm2(&dx).powi(2) + norm2(&df).powi(2)).sqrt();
        let primal_ok = split <= cfg.tol_primal * z_norm.max(u_norm).max(f64::MIN_POSITIVE);
        let dual_ok = dual_res <= cfg.tol_dual * d_norm.max(f64::MIN_POSITIVE);

        if cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0 {
            let current = weights.objective(&ux, &uf);
            incumbent = incumbent.min(current);
            checkpoints.push(Checkpoint {
                iteration: it,
                objective: incumbent,
                current_objective: current,
                primal_residual: split,
                dual_residual: dual_res,
            });
        }

        if primal_ok && dual_ok {
            let feas = if cfg.eta > 0.0 { 0.0 } else { ws.residual(&zx, &zf)? };
            if feas <= feas_tol {
                status = SolveStatus::Converged;
                break;
            }
        }

        if polish_on && it % POLISH_EVERY == 0 {
            let support = (nonzero(&zx), nonzero(&zf));
            if last_support.as_ref() == Some(&support) && failed_support.as_ref() != Some(&support) {
                // −ρ d_f estimates the dual vector h
                let h: Vec<Complex64> = df.iter().map(|v| -v * rho).collect();
                let attempt = polish(op, b, lambda, weights, &support.0, &support.1, &h, feas_tol)?;
                if let Some(point) = attempt {
                    polished = Some(point);
                    status = SolveStatus::Converged;
                    break;
                }
                failed_support = Some(support.clone());
            }
            last_support = Some(support);
        }

        if cfg.adaptive_penalty && it % 10 == 0 {
            let rel_p = split / z_norm.max(u_norm).max(f64::MIN_POSITIVE);
            let rel_d = dual_res / d_norm.max(f64::MIN_POSITIVE);
            let factor = if rel_p > 10.0 * rel_d {
                2.0
            } else if rel_d > 10.0 * rel_p {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                dx.iter_mut().chain(df.iter_mut()).for_each(|v| *v /= factor);
            }
        }
    }

    if polish_on && polished.is_none() && status == SolveStatus::MaxIterReached {
        // one last try on the final support
        let h: Vec<Complex64> = df.iter().map(|v| -v * rho).collect();
        let (sx, sf) = (nonzero(&zx), nonzero(&zf));
        if let Some(point) = polish(op, b, lambda, weights, &sx, &sf, &h, feas_tol)? {
            polished = Some(point);
            status = SolveStatus::Converged;
        }
    }

    let was_polished = polished.is_some();
    // The proximal copy is sparse; for η > 0 the feasible copy is returned so
    // the noise constraint holds exactly.
    let (x_hat, f_hat) = match polished {
        Some(p) => p,
        None if cfg.eta > 0.0 => (ux, uf),
        None => (zx, zf),
    };
    let primal_residual = ws.residual(&x_hat, &f_hat)?;
    if !primal_residual.is_finite() || !dual_res.is_finite() {
        return Err(Error::NonFinite("solver iterates"));
    }
    let obj = weights.objective(&x_hat, &f_hat);
    Ok(Solution {
        x_hat,
        f_hat,
        iterations,
        primal_residual,
        dual_residual: dual_res,
        objective: obj,
        status,
        penalty: rho,
        polished: was_polished,
        checkpoints,
    })
}

const POLISH_EVERY: usize = 25;
/// Largest combined support for which polishing is attempted.
const POLISH_MAX_SUPPORT: usize = 600;
/// Allowed relative excess of the dual bounds in the optimality check.
const POLISH_KKT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Weights {
    x: f64,
    f: f64,
}

impl Weights {
    fn objective(&self, x: &[Complex64], f: &[Complex64]) -> f64 {
        self.x * norm1(x) + self.f * norm1(f)
    }
}

fn nonzero(v: &[Complex64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, z)| **z != Complex64::ZERO)
        .map(|(i, _)| i)
        .collect()
}

/// Least-squares solve on the support `(s_x, s_f)` followed by a KKT check.
///
/// The candidate is `x(s_x) = argmin ‖λ A(s_f^c, s_x) x − b(s_f^c)‖`,
/// `f(s_f) = b(s_f) − λ A(s_f, s_x) x(s_x)`. It is accepted when it is feasible
/// and some `h` with `h(s_f) = w_f sign(f)`, `λ A*(s_x, :) h = w_x sign(x)`
/// (the least-change correction of `h_est`) satisfies `|h| ≤ w_f` on `s_f^c`
/// and `|λ A* h| ≤ w_x` on `s_x^c`.
#[allow(clippy::too_many_arguments)]
fn polish(
    op: &PartialFourierOperator,
    b: &[Complex64],
    lambda: f64,
    w: Weights,
    s_x: &[usize],
    s_f: &[usize],
    h_est: &[Complex64],
    feas_tol: f64,
) -> Result<Option<(Vec<Complex64>, Vec<Complex64>)>> {
    let n = op.n();
    let m = op.m();
    if s_x.len() + s_f.len() > m.min(POLISH_MAX_SUPPORT) {
        return Ok(None);
    }
    let s_fc = complement(s_f, m);
    if s_fc.len() < s_x.len() {
        return Ok(None);
    }
    // λ A(s_f^c, s_x) x = b(s_f^c)
    let mut a_c = op.dense_submatrix(&s_fc, s_x)?;
    a_c *= Complex64::from(lambda);
    let b_c = to_dvector(&gather(b, &s_fc));
    let xs = match lstsq(&a_c, &b_c, true) {
        Ok(v) => v,
        Err(Error::Singular(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if (&a_c * &xs - &b_c).norm() > feas_tol {
        return Ok(None);
    }
    let mut x = vec![Complex64::ZERO; n];
    for (k, &j) in s_x.iter().enumerate() {
        x[j] = xs[k];
    }
    let mut f = vec![Complex64::ZERO; m];
    if !s_f.is_empty() {
        let mut a_f = op.dense_submatrix(s_f, s_x)?;
        a_f *= Complex64::from(lambda);
        let fx = &a_f * &xs;
        for (k, &i) in s_f.iter().enumerate() {
            f[i] = b[i] - fx[k];
        }
    }
    if s_x.iter().any(|&j| x[j] == Complex64::ZERO) || s_f.iter().any(|&i| f[i] == Complex64::ZERO) {
        return Ok(None);
    }

    // Dual: fix h(s_f), correct h(s_f^c) so that λ A*(s_x, :) h = w_x σ_x.
    let mut h = h_est.to_vec();
    for &i in s_f {
        h[i] = complex_sign(f[i]) * w.f;
    }
    if !s_x.is_empty() {
        let sigma_x = to_dvector(&s_x.iter().map(|&j| complex_sign(x[j]) * w.x).collect::<Vec<_>>());
        let mut rhs = sigma_x;
        if !s_f.is_empty() {
            let mut a_f = op.dense_submatrix(s_f, s_x)?;
            a_f *= Complex64::from(lambda);
            rhs -= a_f.adjoint() * to_dvector(&gather(&h, s_f));
        }
        let g = a_c.adjoint();
        let h_c = to_dvector(&gather(&h, &s_fc));
        let delta = match lstsq(&g, &(rhs - &g * &h_c), false) {
            Ok(v) => v,
            Err(Error::Singular(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        for (k, &i) in s_fc.iter().enumerate() {
            h[i] += delta[k];
        }
    }
    if s_fc.iter().any(|&i| h[i].norm() > w.f * (1.0 + POLISH_KKT_TOL)) {
        return Ok(None);
    }
    let ah = op.apply_adjoint(&h)?;
    let s_xc = complement(s_x, n);
    if s_xc
        .iter()
        .any(|&j| (ah[j] * lambda).norm() > w.x * (1.0 + POLISH_KKT_TOL))
    {
        return Ok(None);
    }
    Ok(Some((x, f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_instance, rre, InstanceShape};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small(seed: u64) -> crate::problem::ProblemInstance {
        let shape = InstanceShape {
            n: 31,
            m: 26,
            sx_len: 2,
            sf_len: 2,
        };
        generate_instance(shape, 100.0, 1.0, seed, false).unwrap()
    }

    #[test]
    fn prox_examples() {
        assert_eq!(prox_l1(&[c(5.0, 0.0)], 2.0), vec![c(3.0, 0.0)]);
        assert_eq!(prox_l1(&[c(0.5, -0.5)], 1.0), vec![Complex64::ZERO]);
        assert_eq!(prox_l1(&[c(3.0, 4.0)], 5.0), vec![Complex64::ZERO]);
        let v = prox_l1(&[c(6.0, 8.0)], 5.0)[0];
        assert!((v - c(3.0, 4.0)).norm() < 1e-15);
        assert_eq!(prox_l1(&[Complex64::ZERO], 0.1), vec![Complex64::ZERO]);
    }

    #[test]
    fn full_fourier_recovers_exactly() {
        let op = PartialFourierOperator::new(16, (0..16).collect(), false).unwrap();
        let mut x0 = vec![Complex64::ZERO; 16];
        x0[3] = c(0.7, 0.0);
        x0[4] = c(0.2, 0.0);
        let b = op.apply(&x0).unwrap();
        let sol = solve(&op, &b, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        let f0 = vec![Complex64::ZERO; 16];
        assert!(rre(&sol.x_hat, &sol.f_hat, &x0, &f0).unwrap() < 1e-10);
    }

    #[test]
    fn iteration_budget_is_reported() {
        let inst = small(1);
        let cfg = SolverConfig {
            max_iter: 1,
            polish: false,
            ..Default::default()
        };
        let sol = solve(&inst.operator, &inst.b, &cfg).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxIterReached);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn converged_solutions_are_feasible() {
        for seed in 0..10 {
            let inst = small(seed);
            let cfg = SolverConfig::default();
            let sol = solve(&inst.operator, &inst.b, &cfg).unwrap();
            if sol.status == SolveStatus::Converged {
                assert!(sol.primal_residual <= cfg.tol_primal * norm2(&inst.b) + 1e-13);
            }
        }
    }

    #[test]
    fn tiny_noise_radius_matches_equality() {
        for seed in 0..5 {
            let inst = small(seed);
            let exact = solve(&inst.operator, &inst.b, &SolverConfig::default()).unwrap();
            let cfg = SolverConfig {
                eta: 1e-14,
                ..Default::default()
            };
            let noisy = solve(&inst.operator, &inst.b, &cfg).unwrap();
            let gap = rre(&noisy.x_hat, &noisy.f_hat, &inst.x0, &inst.f0).unwrap()
                - rre(&exact.x_hat, &exact.f_hat, &inst.x0, &inst.f0).unwrap();
            assert!(gap.abs() < 1e-6, "seed {seed}: {gap}");
        }
    }

    #[test]
    fn noisy_solution_respects_radius() {
        let inst = small(4);
        let eta = 0.05 * norm2(&inst.b);
        let sol = solve(
            &inst.operator,
            &inst.b,
            &SolverConfig {
                eta,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(sol.primal_residual <= eta * (1.0 + 1e-12));
        assert!(sol.objective < objective_of(&inst.x0, &inst.f0));
    }

    fn objective_of(x: &[Complex64], f: &[Complex64]) -> f64 {
        norm1(x) + norm1(f)
    }

    #[test]
    fn theta_form_matches_lambda_form() {
        // substituting y = λx divides the objective by λ, leaving θ = λ on ‖f‖₁
        let lambda = 0.8;
        for seed in 0..4 {
            let inst = small(seed);
            let cfg = SolverConfig {
                lambda,
                ..Default::default()
            };
            let a = solve(&inst.operator, &inst.b, &cfg).unwrap();
            let t = solve_theta_form(&inst.operator, &inst.b, lambda, &SolverConfig::default()).unwrap();
            let scaled = a.scaled_signal(lambda);
            let d = (crate::vecops::dist2(&scaled, &t.x_hat).powi(2)
                + crate::vecops::dist2(&a.f_hat, &t.f_hat).powi(2))
            .sqrt();
            let s = (norm2(&t.x_hat).powi(2) + norm2(&t.f_hat).powi(2)).sqrt();
            assert!(d / s < 1e-6, "seed {seed}: {}", d / s);
        }
    }

    #[test]
    fn checkpoint_objective_is_non_increasing() {
        for seed in 0..4 {
            let inst = small(seed);
            let cfg = SolverConfig {
                checkpoint_every: 10,
                polish: false,
                ..Default::default()
            };
            let sol = solve(&inst.operator, &inst.b, &cfg).unwrap();
            assert!(!sol.checkpoints.is_empty());
            let mut best = f64::INFINITY;
            for c in &sol.checkpoints {
                assert!(c.objective <= best * (1.0 + 1e-9));
                assert!(c.objective <= c.current_objective);
                best = best.min(c.objective);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let inst = small(0);
        let mut b = inst.b.clone();
        b[0] = c(f64::NAN, 0.0);
        assert!(matches!(
            solve(&inst.operator, &b, &SolverConfig::default()),
            Err(Error::NonFinite(_))
        ));
        assert!(solve(&inst.operator, &inst.b[1..], &SolverConfig::default()).is_err());
        let cfg = SolverConfig {
            tol_primal: 0.0,
            ..Default::default()
        };
        assert!(solve(&inst.operator, &inst.b, &cfg).is_err());
        assert!(solve_theta_form(&inst.operator, &inst.b, -1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn digest_mentions_parameters() {
        let d = SolverConfig::default().digest();
        assert!(d.contains("max_iter=50000") && d.contains("lambda=1.0"));
    }
}
