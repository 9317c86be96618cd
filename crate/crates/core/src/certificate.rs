//! Dual-certificate verification of exact recovery and numeric evaluation of
//! the recovery-guarantee conditions.
//!
//! For supports `s_x ⊂ [n]`, `s_f ⊂ [m]` and signs `σ_x`, `σ_f`, a pair with
//! those supports is the unique minimizer of
//! `min ‖x‖₁ + ‖f‖₁ s.t. λ A x + f = b` iff `B = [λ A(:, s_x), I(:, s_f)]` has
//! full column rank and some `h ∈ ℂ^m` satisfies
//!
//! ```text
//! λ A*(s_x, :) h = σ_x,        h(s_f) = σ_f,
//! ‖λ A*(s_x^c, :) h‖∞ < 1,     ‖h(s_f^c)‖∞ < 1.
//! ```
//!
//! Writing `q = (h(s_f^c), −λ A*(s_x^c, :) h)` turns the equalities into the
//! underdetermined system `Φ q = w` with
//!
//! ```text
//! Φ = [ λ A*(s_x^c, s_f^c)   I ]      w = [ −λ A*(s_x^c, s_f) σ_f        ]
//!     [ λ A*(s_x,   s_f^c)   0 ]          [ σ_x − λ A*(s_x, s_f) σ_f     ]
//! ```
//!
//! and the strict bounds into `‖q‖∞ < 1`.

use std::fmt::Write as _;

use itertools::Itertools;
use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fourier::{dft, PartialFourierOperator};
use crate::linalg::{hermitian_eigenvalues, lstsq, singular_values, to_dvector, CMatrix, CVector, RANK_TOL};
use crate::problem::{complex_sign, ProblemInstance, SUPPORT_TOL};
use crate::vecops::{complement, gather, norm2, norm_inf, support};

/// Largest number of `k`-subsets `xi_k_bruteforce` will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Residual tolerance for the constructive identities `Φ q0 = w` and
/// `λ A*(s_x, :) h0 = σ_x`.
pub const CONSTRUCTION_TOL: f64 = 1e-10;

/// Supports and signs of a candidate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Supports {
    pub s_x: Vec<usize>,
    pub s_f: Vec<usize>,
    pub sigma_x: Vec<Complex64>,
    pub sigma_f: Vec<Complex64>,
}

impl Supports {
    /// Supports detected with the library-wide relative threshold.
    pub fn of(x: &[Complex64], f: &[Complex64]) -> Self {
        let s_x = support(x, SUPPORT_TOL);
        let s_f = support(f, SUPPORT_TOL);
        let sigma_x = s_x.iter().map(|&j| complex_sign(x[j])).collect();
        let sigma_f = s_f.iter().map(|&i| complex_sign(f[i])).collect();
        Self {
            s_x,
            s_f,
            sigma_x,
            sigma_f,
        }
    }

    pub fn of_instance(inst: &ProblemInstance) -> Self {
        Self {
            s_x: inst.s_x.clone(),
            s_f: inst.s_f.clone(),
            sigma_x: inst.sigma_x.clone(),
            sigma_f: inst.sigma_f.clone(),
        }
    }
}

/// One named condition with its numeric value and threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRecord {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// Signed distance to the threshold, positive on the passing side.
    pub margin: f64,
    pub pass: bool,
}

impl ConditionRecord {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            threshold,
            margin: threshold - value,
            pass: value <= threshold,
        }
    }

    /// Passes when `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            pass: value < threshold,
            ..Self::at_most(name, value, threshold)
        }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            threshold,
            margin: value - threshold,
            pass: value >= threshold,
        }
    }

    fn flag(name: &str, pass: bool) -> Self {
        let value = if pass { 1.0 } else { 0.0 };
        Self::at_least(name, value, 1.0)
    }
}

/// Numerical settings for `verify_dual_certificate`.
#[derive(Debug, Clone, Copy)]
pub struct CertificateTolerances {
    /// Required slack in the strict bounds: `‖·‖∞ < 1 − margin`.
    pub margin: f64,
    /// Relative residual accepted for the equality constraints.
    pub equality: f64,
    /// Iteration budget of the alternating-projection search.
    pub projection_iters: usize,
    /// Column count of `Φ` above which the search is not attempted.
    pub projection_max_dim: usize,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            margin: 1e-6,
            equality: 1e-9,
            projection_iters: 20_000,
            projection_max_dim: 1200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateMethod {
    /// Minimum-norm completion of `h(s_f^c)`.
    LeastNorm,
    /// Alternating projections between `{Φ q = w}` and the sup-norm ball.
    Projection,
}

/// Outcome of a dual-certificate search.
#[derive(Debug, Clone)]
pub struct CertificateCheck {
    pub pass: bool,
    /// Best certificate candidate found (length `m`).
    pub h: Vec<Complex64>,
    /// Method that produced `h`.
    pub method: CertificateMethod,
    /// `‖λ A*(s_x, :) h − σ_x‖₂ + ‖h(s_f) − σ_f‖₂`.
    pub equality_residual: f64,
    /// `‖λ A*(s_x^c, :) h‖∞`.
    pub signal_bound: f64,
    /// `‖h(s_f^c)‖∞`.
    pub corruption_bound: f64,
    pub b_full_rank: bool,
    pub b_min_singular: f64,
    /// `‖λ A x + f − b‖₂ / max(‖b‖₂, 1)` for a candidate pair; zero when only
    /// supports and signs were given.
    pub feasibility_residual: f64,
}

impl CertificateCheck {
    pub fn records(&self, tol: &CertificateTolerances) -> Vec<ConditionRecord> {
        vec![
            ConditionRecord::at_most("candidate_feasibility", self.feasibility_residual, tol.equality),
            ConditionRecord::at_most("certificate_equalities", self.equality_residual, tol.equality),
            ConditionRecord::below("certificate_signal_bound", self.signal_bound, 1.0 - tol.margin),
            ConditionRecord::below("certificate_corruption_bound", self.corruption_bound, 1.0 - tol.margin),
            ConditionRecord::flag("b_full_rank", self.b_full_rank),
        ]
    }
}

/// `λ A*(cols, rows)` as a dense `|cols| × |rows|` matrix.
fn adjoint_block(op: &PartialFourierOperator, lambda: f64, cols: &[usize], rows: &[usize]) -> Result<CMatrix> {
    let mut a = op.dense_submatrix(rows, cols)?.adjoint();
    a *= Complex64::from(lambda);
    Ok(a)
}

/// Checks whether `(x_cand, f_cand)` is certified as the unique optimum for
/// the instance's operator, λ and measurements.
pub fn verify_dual_certificate(
    inst: &ProblemInstance,
    x_cand: &[Complex64],
    f_cand: &[Complex64],
    tol: &CertificateTolerances,
) -> Result<CertificateCheck> {
    let (n, m) = (inst.n(), inst.m());
    if x_cand.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x_cand.len(),
        });
    }
    if f_cand.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: f_cand.len(),
        });
    }
    let mut check = verify_supports(&inst.operator, inst.lambda, &Supports::of(x_cand, f_cand), tol)?;
    let ax = inst.operator.apply(x_cand)?;
    check.feasibility_residual = ax
        .iter()
        .zip(f_cand.iter().zip(&inst.b))
        .map(|(a, (f, b))| (a * inst.lambda + f - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / norm2(&inst.b).max(1.0);
    check.pass &= check.feasibility_residual <= tol.equality;
    Ok(check)
}

/// Certificate search for given supports and signs.
pub fn verify_supports(
    op: &PartialFourierOperator,
    lambda: f64,
    sup: &Supports,
    tol: &CertificateTolerances,
) -> Result<CertificateCheck> {
    let m = op.m();
    let rank = b_rank(op, lambda, &sup.s_x, &sup.s_f)?;
    let s_fc = complement(&sup.s_f, m);

    // h(s_f) = σ_f; solve λ A*(s_x, s_f^c) h_c = σ'_x with minimum norm.
    let mut h = vec![Complex64::ZERO; m];
    for (&i, &s) in sup.s_f.iter().zip(&sup.sigma_f) {
        h[i] = s;
    }
    let rhs = offset_signs(op, lambda, sup)?;
    if !sup.s_x.is_empty() && !s_fc.is_empty() {
        let g = adjoint_block(op, lambda, &sup.s_x, &s_fc)?;
        let h_c = lstsq(&g, &rhs, false)?;
        for (k, &i) in s_fc.iter().enumerate() {
            h[i] = h_c[k];
        }
    }
    let mut check = evaluate(op, lambda, sup, h, CertificateMethod::LeastNorm, &rank)?;
    let within = |c: &CertificateCheck| c.signal_bound < 1.0 - tol.margin && c.corruption_bound < 1.0 - tol.margin;
    if !within(&check) && check.equality_residual <= tol.equality && !s_fc.is_empty() {
        let (phi, w) = assemble_phi_w_for(op, lambda, sup)?;
        if phi.ncols() <= tol.projection_max_dim {
            let q0 = certificate_to_q(op, lambda, sup, &check.h)?;
            if let Some(q) = project_to_ball(&phi, &w, q0, 1.0 - 2.0 * tol.margin, tol.projection_iters)? {
                let mut h = check.h.clone();
                for (k, &i) in s_fc.iter().enumerate() {
                    h[i] = q[k];
                }
                let alt = evaluate(op, lambda, sup, h, CertificateMethod::Projection, &rank)?;
                if alt.equality_residual <= tol.equality {
                    check = alt;
                }
            }
        }
    }
    check.pass = check.equality_residual <= tol.equality && within(&check) && check.b_full_rank;
    Ok(check)
}

/// `σ'_x = σ_x − λ A*(s_x, s_f) σ_f`.
fn offset_signs(op: &PartialFourierOperator, lambda: f64, sup: &Supports) -> Result<CVector> {
    let mut rhs = to_dvector(&sup.sigma_x);
    if !sup.s_f.is_empty() && !sup.s_x.is_empty() {
        rhs -= adjoint_block(op, lambda, &sup.s_x, &sup.s_f)? * to_dvector(&sup.sigma_f);
    }
    Ok(rhs)
}

fn evaluate(
    op: &PartialFourierOperator,
    lambda: f64,
    sup: &Supports,
    h: Vec<Complex64>,
    method: CertificateMethod,
    rank: &BRank,
) -> Result<CertificateCheck> {
    let n = op.n();
    let m = op.m();
    let ah: Vec<Complex64> = op.apply_adjoint(&h)?.into_iter().map(|v| v * lambda).collect();
    let eq_x: f64 = sup
        .s_x
        .iter()
        .zip(&sup.sigma_x)
        .map(|(&j, s)| (ah[j] - s).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let eq_f: f64 = sup
        .s_f
        .iter()
        .zip(&sup.sigma_f)
        .map(|(&i, s)| (h[i] - s).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let signal_bound = norm_inf(&gather(&ah, &complement(&sup.s_x, n)));
    let corruption_bound = norm_inf(&gather(&h, &complement(&sup.s_f, m)));
    Ok(CertificateCheck {
        pass: false,
        h,
        method,
        equality_residual: eq_x + eq_f,
        signal_bound,
        corruption_bound,
        b_full_rank: rank.full_rank,
        b_min_singular: rank.min_singular,
        feasibility_residual: 0.0,
    })
}

/// `q = (h(s_f^c), −λ A*(s_x^c, :) h)`.
fn certificate_to_q(
    op: &PartialFourierOperator,
    lambda: f64,
    sup: &Supports,
    h: &[Complex64],
) -> Result<Vec<Complex64>> {
    let s_fc = complement(&sup.s_f, op.m());
    let s_xc = complement(&sup.s_x, op.n());
    let ah = op.apply_adjoint(h)?;
    let mut q = gather(h, &s_fc);
    q.extend(s_xc.iter().map(|&j| -ah[j] * lambda));
    Ok(q)
}

/// Alternating projections between the affine set `{Φ q = w}` and the ball
/// `‖q‖∞ ≤ radius`, started from a point of the affine set. Returns a point
/// of the affine set inside the ball if one is reached.
fn project_to_ball(
    phi: &CMatrix,
    w: &CVector,
    q0: Vec<Complex64>,
    radius: f64,
    iters: usize,
) -> Result<Option<Vec<Complex64>>> {
    let svd = phi.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Singular("SVD of the certificate system failed".into())),
    };
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = RANK_TOL * smax * phi.nrows().max(phi.ncols()) as f64;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cut)
        .collect();
    // row-space basis V_r and pseudo-inverse factors of Φ
    let v_r = v_t.select_rows(&keep).adjoint();
    let inv_s = DVector::from_iterator(
        keep.len(),
        keep.iter().map(|&i| Complex64::from(1.0 / svd.singular_values[i])),
    );
    let u_r = u.select_columns(&keep);
    let mut q = to_dvector(&q0);
    for _ in 0..iters {
        // project onto the ball
        let mut p = q.clone();
        for v in p.iter_mut() {
            let r = v.norm();
            if r > radius {
                *v *= radius / r;
            }
        }
        // project back onto Φ q = w
        let resid = phi * &p - w;
        let coef = (u_r.adjoint() * resid).component_mul(&inv_s);
        q = p - &v_r * coef;
        if q.iter().all(|v| v.norm() <= radius) {
            return Ok(Some(q.iter().copied().collect()));
        }
    }
    Ok(None)
}

/// `Φ` and `w` for the instance's supports and signs.
pub fn assemble_phi_w(inst: &ProblemInstance) -> Result<(CMatrix, CVector)> {
    assemble_phi_w_for(&inst.operator, inst.lambda, &Supports::of_instance(inst))
}

fn assemble_phi_w_for(op: &PartialFourierOperator, lambda: f64, sup: &Supports) -> Result<(CMatrix, CVector)> {
    let n = op.n();
    let m = op.m();
    let s_fc = complement(&sup.s_f, m);
    if s_fc.is_empty() {
        return Err(invalid(
            "every measurement is corrupted: the certificate system is degenerate",
        ));
    }
    let s_xc = complement(&sup.s_x, n);
    let (nxc, nx, nfc) = (s_xc.len(), sup.s_x.len(), s_fc.len());
    let mut phi = CMatrix::zeros(nxc + nx, nfc + nxc);
    phi.view_mut((0, 0), (nxc, nfc))
        .copy_from(&adjoint_block(op, lambda, &s_xc, &s_fc)?);
    phi.view_mut((nxc, 0), (nx, nfc))
        .copy_from(&adjoint_block(op, lambda, &sup.s_x, &s_fc)?);
    for i in 0..nxc {
        phi[(i, nfc + i)] = Complex64::new(1.0, 0.0);
    }
    let mut w = CVector::zeros(nxc + nx);
    if !sup.s_f.is_empty() {
        let sf = to_dvector(&sup.sigma_f);
        let top = -(adjoint_block(op, lambda, &s_xc, &sup.s_f)? * &sf);
        w.rows_mut(0, nxc).copy_from(&top);
    }
    w.rows_mut(nxc, nx).copy_from(&offset_signs(op, lambda, sup)?);
    Ok((phi, w))
}

/// Least-norm certificate candidate and its Gram-block diagnostics.
#[derive(Debug, Clone)]
pub struct H0 {
    pub h0: Vec<Complex64>,
    /// Smallest eigenvalue of `A*(s_x, s_f^c) A(s_f^c, s_x)`.
    pub gram_min_eigenvalue: f64,
    /// Condition number of that Gram block.
    pub gram_condition: f64,
}

/// `h0(s_f) = σ_f`, `h0(s_f^c) = λ⁻¹ A(s_f^c, s_x) (A*(s_x, s_f^c) A(s_f^c, s_x))⁻¹ σ'_x`.
///
/// The product with the inverse Gram block is evaluated through the SVD
/// `A(s_f^c, s_x) = U Σ V*` as `U Σ⁻¹ V* σ'_x`.
pub fn build_h0(inst: &ProblemInstance) -> Result<H0> {
    let op = &inst.operator;
    let lambda = inst.lambda;
    let sup = Supports::of_instance(inst);
    let m = op.m();
    let s_fc = complement(&sup.s_f, m);
    let mut h0 = vec![Complex64::ZERO; m];
    for (&i, &s) in sup.s_f.iter().zip(&sup.sigma_f) {
        h0[i] = s;
    }
    if sup.s_x.is_empty() {
        return Ok(H0 {
            h0,
            gram_min_eigenvalue: f64::INFINITY,
            gram_condition: 1.0,
        });
    }
    let singular = || {
        Error::Singular(format!(
            "Gram block A*(s_x, s_f^c) A(s_f^c, s_x) is singular (|s_f^c| = {}, |s_x| = {}); \
             the cardinality condition |s_f^c| >= (32/3)|s_x| ln(2|s_x|/eps) is violated",
            s_fc.len(),
            sup.s_x.len()
        ))
    };
    if s_fc.len() < sup.s_x.len() {
        return Err(singular());
    }
    let a = op.dense_submatrix(&s_fc, &sup.s_x)?;
    let svd = a.svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    if smin <= RANK_TOL * smax.max(f64::MIN_POSITIVE) * s_fc.len() as f64 {
        return Err(singular());
    }
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V*"));
    let rhs = offset_signs(op, lambda, &sup)?;
    let coef = (v_t * rhs).component_div(&s.map(Complex64::from));
    let h_c = u * coef / Complex64::from(lambda);
    for (k, &i) in s_fc.iter().enumerate() {
        h0[i] = h_c[k];
    }
    Ok(H0 {
        h0,
        gram_min_eigenvalue: smin * smin,
        gram_condition: (smax / smin).powi(2),
    })
}

/// `q0 = (h0(s_f^c), −λ A*(s_x^c, :) h0)`.
pub fn build_q0(inst: &ProblemInstance, h0: &[Complex64]) -> Result<Vec<Complex64>> {
    if h0.len() != inst.m() {
        return Err(Error::DimensionMismatch {
            expected: inst.m(),
            got: h0.len(),
        });
    }
    certificate_to_q(&inst.operator, inst.lambda, &Supports::of_instance(inst), h0)
}

/// Keeps entries of modulus at least `1/2` and zeroes the rest.
pub fn soft_threshold_s(q: &[Complex64]) -> Vec<Complex64> {
    q.iter()
        .map(|&v| if v.norm() >= 0.5 { v } else { Complex64::ZERO })
        .collect()
}

/// Both sufficient bounds for the existence of a certificate with
/// `‖q‖∞ < 1/2`.
#[derive(Debug, Clone)]
pub struct SufficientCondition {
    /// `‖q0‖₂ + ξ/(1−ξ) ‖S[q0]‖₂ ≤ √k/2`.
    pub thresholded: ConditionRecord,
    /// `‖q0‖₂ / (1−ξ) ≤ √k/2`, which implies the thresholded form.
    pub plain: ConditionRecord,
    /// Set when the bounds cannot be evaluated.
    pub failure: Option<&'static str>,
}

impl SufficientCondition {
    pub fn pass(&self) -> bool {
        self.failure.is_none() && self.thresholded.pass
    }
}

pub fn check_sufficient_condition(q0: &[Complex64], xi_k: f64, k: usize) -> Result<SufficientCondition> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if xi_k.is_nan() || xi_k < 0.0 {
        return Err(invalid(format!("xi_k = {xi_k} must be non-negative")));
    }
    let target = (k as f64).sqrt() / 2.0;
    if xi_k >= 1.0 {
        let fail = |name: &str| ConditionRecord {
            name: name.to_owned(),
            value: f64::MAX,
            threshold: target,
            margin: -f64::MAX,
            pass: false,
        };
        return Ok(SufficientCondition {
            thresholded: fail("thresholded_norm_bound"),
            plain: fail("plain_norm_bound"),
            failure: Some("projection norm not contractive"),
        });
    }
    let q_norm = norm2(q0);
    let ratio = xi_k / (1.0 - xi_k);
    let thresholded = q_norm + ratio * norm2(&soft_threshold_s(q0));
    let plain = (1.0 + ratio) * q_norm;
    Ok(SufficientCondition {
        thresholded: ConditionRecord::at_most("thresholded_norm_bound", thresholded, target),
        plain: ConditionRecord::at_most("plain_norm_bound", plain, target),
        failure: None,
    })
}

/// `C(d, k)`, saturating once it exceeds `cap`.
fn binomial_capped(d: usize, k: usize, cap: u128) -> u128 {
    let k = k.min(d - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (d - i) as u128 / (i + 1) as u128;
        if c > cap {
            return cap + 1;
        }
    }
    c
}

/// Whether `xi_k_bruteforce` would accept a `d`-column matrix at this `k`.
pub fn enumeration_feasible(d: usize, k: usize) -> bool {
    k <= d && binomial_capped(d, k, ENUMERATION_LIMIT) <= ENUMERATION_LIMIT
}

/// Orthogonal projector onto `range(Φ*)`.
pub fn row_space_projector(phi: &CMatrix) -> CMatrix {
    let d = phi.ncols();
    if phi.nrows() == 0 || d == 0 {
        return CMatrix::zeros(d, d);
    }
    let svd = phi.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V*");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = RANK_TOL * smax * phi.nrows().max(d) as f64;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cut)
        .collect();
    let v_r = v_t.select_rows(&keep);
    v_r.adjoint() * v_r
}

/// `sup { ‖P x‖₂ : ‖x‖₀ ≤ k, ‖x‖₂ ≤ 1 }` for the projector `P` onto
/// `range(Φ*)`, by enumerating every `k`-subset `S` of columns and taking the
/// largest `‖P(:, S)‖₂ = sqrt(λ_max(P(S, S)))`.
pub fn xi_k_bruteforce(phi: &CMatrix, k: usize) -> Result<f64> {
    let d = phi.ncols();
    if k > d {
        return Err(invalid(format!("k = {k} exceeds the column count {d}")));
    }
    let count = binomial_capped(d, k, ENUMERATION_LIMIT);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let p = row_space_projector(phi);
    let mut best: f64 = 0.0;
    for subset in (0..d).combinations(k) {
        let block = p.select_rows(&subset).select_columns(&subset);
        let top = hermitian_eigenvalues(&block).last().copied().unwrap_or(0.0);
        best = best.max(top);
    }
    Ok(best.max(0.0).sqrt().min(1.0))
}

/// Rank diagnostics of `B = [λ A(:, s_x), I(:, s_f)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BRank {
    pub full_rank: bool,
    pub min_singular: f64,
    /// Smallest eigenvalue of `λ² A*(s_x, s_f^c) A(s_f^c, s_x)`.
    pub schur_min_eigenvalue: f64,
}

pub fn check_b_full_rank(inst: &ProblemInstance) -> Result<BRank> {
    b_rank(&inst.operator, inst.lambda, &inst.s_x, &inst.s_f)
}

fn b_rank(op: &PartialFourierOperator, lambda: f64, s_x: &[usize], s_f: &[usize]) -> Result<BRank> {
    let m = op.m();
    if s_x.len() + s_f.len() > m {
        return Ok(BRank {
            full_rank: false,
            min_singular: 0.0,
            schur_min_eigenvalue: 0.0,
        });
    }
    let cols = s_x.len() + s_f.len();
    let mut b = CMatrix::zeros(m, cols);
    if !s_x.is_empty() {
        let mut a = op.dense_submatrix(&(0..m).collect::<Vec<_>>(), s_x)?;
        a *= Complex64::from(lambda);
        b.view_mut((0, 0), (m, s_x.len())).copy_from(&a);
    }
    for (k, &i) in s_f.iter().enumerate() {
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, len: m });
        }
        b[(i, s_x.len() + k)] = Complex64::new(1.0, 0.0);
    }
    let s = singular_values(&b);
    let smax = s.first().copied().unwrap_or(0.0);
    let min_singular = if cols == 0 {
        f64::INFINITY
    } else {
        s.last().copied().unwrap_or(0.0)
    };
    let full_rank = cols == 0 || min_singular > RANK_TOL * smax * m.max(cols) as f64;
    let schur_min_eigenvalue = if s_x.is_empty() {
        f64::INFINITY
    } else {
        let s_fc = complement(s_f, m);
        let mut a = op.dense_submatrix(&s_fc, s_x)?;
        a *= Complex64::from(lambda);
        let gram = a.adjoint() * a;
        hermitian_eigenvalues(&gram).first().copied().unwrap_or(0.0)
    };
    Ok(BRank {
        full_rank,
        min_singular,
        schur_min_eigenvalue,
    })
}

/// Support sizes of `z` and of its DFT, and whether they sum to at least
/// `n + 1`. Each support counts entries above `zero_tol` times that vector's
/// largest modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Uncertainty {
    pub signal_support: usize,
    pub spectrum_support: usize,
    pub holds: bool,
}

pub fn uncertainty_check(z: &[Complex64], zero_tol: f64) -> Result<Uncertainty> {
    if z.iter().all(|v| *v == Complex64::ZERO) {
        return Err(invalid("uncertainty check needs a nonzero vector"));
    }
    let spectrum = dft(z)?;
    let signal_support = support(z, zero_tol).len();
    let spectrum_support = support(&spectrum, zero_tol).len();
    Ok(Uncertainty {
        signal_support,
        spectrum_support,
        holds: signal_support + spectrum_support > z.len(),
    })
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Everything the certificate machinery can say about an instance.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub c: f64,
    pub sx_len: usize,
    pub sf_len: usize,
    /// `|s_f^c| − |s_x|`, negative when the system is overdetermined.
    pub k: i64,
    pub h0: Option<Vec<Complex64>>,
    pub q0: Option<Vec<Complex64>>,
    pub q0_norm2: f64,
    pub q0_norm_inf: f64,
    pub b_min_singular: f64,
    pub schur_min_eigenvalue: f64,
    pub xi_k: Option<f64>,
    pub rho1: f64,
    pub rho2: f64,
    /// Per-coordinate failure probability of the Steinhaus tail at
    /// `u = sqrt(2 ln(2|s_x|/ε))`, `γ = 1/2`.
    pub hoeffding_tail: f64,
    /// `1 − 2|s_x| exp(−3 |s_f^c| δ² / (8 K² |s_x|))` at `K = 1`, `δ = 1/2`.
    pub concentration_probability: f64,
    pub certificate: Option<CertificateCheck>,
    pub conditions: Vec<ConditionRecord>,
}

impl CertificateReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Whether the ground truth was certified optimal.
    pub fn certified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.pass)
    }

    /// Flat `key = value` report, one condition per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "skipped".to_owned(), |x| format!("{x:?}"));
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "lambda = {:?}", self.lambda);
        let _ = writeln!(out, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(out, "c = {:?}", self.c);
        let _ = writeln!(out, "sx_len = {}", self.sx_len);
        let _ = writeln!(out, "sf_len = {}", self.sf_len);
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "rho1 = {:?}", self.rho1);
        let _ = writeln!(out, "rho2 = {:?}", self.rho2);
        let _ = writeln!(out, "q0_norm2 = {:?}", self.q0_norm2);
        let _ = writeln!(out, "q0_norm_inf = {:?}", self.q0_norm_inf);
        let _ = writeln!(out, "b_min_singular = {:?}", self.b_min_singular);
        let _ = writeln!(out, "schur_min_eigenvalue = {:?}", self.schur_min_eigenvalue);
        let _ = writeln!(out, "xi_k = {}", opt(self.xi_k));
        let _ = writeln!(out, "one_minus_xi_k = {}", opt(self.xi_k.map(|x| 1.0 - x)));
        let _ = writeln!(out, "hoeffding_tail = {:?}", self.hoeffding_tail);
        let _ = writeln!(out, "concentration_probability = {:?}", self.concentration_probability);
        let _ = writeln!(out, "certified = {}", self.certified());
        for c in &self.conditions {
            let _ = writeln!(
                out,
                "condition.{} = value={:?} threshold={:?} margin={:?} {}",
                c.name,
                c.value,
                c.threshold,
                c.margin,
                if c.pass { "pass" } else { "fail" }
            );
        }
        out
    }
}

/// Evaluates the recovery-guarantee conditions, the constructive certificate
/// and its norm bounds, and (when small enough) the exact certificate search
/// and `ξ_k`, for the instance's ground truth.
pub fn check_theorem_conditions(inst: &ProblemInstance, epsilon: f64, c: f64) -> Result<CertificateReport> {
    if !(epsilon > 0.0 && epsilon < 1.0 / 3.0) {
        return Err(invalid(format!("epsilon = {epsilon} outside (0, 1/3)")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("c = {c} outside (0, 1)")));
    }
    let n = inst.n();
    let m = inst.m();
    let lambda = inst.lambda;
    let sx = inst.s_x.len();
    let sf = inst.s_f.len();
    let sfc = m - sf;
    let k = sfc as i64 - sx as i64;
    let (nf, mf, sxf, sff, sfcf) = (n as f64, m as f64, sx as f64, sf as f64, sfc as f64);

    // ln(2|s_x|/ε); with an empty signal support every term it scales vanishes
    let log_term = if sx == 0 { 0.0 } else { (2.0 * sxf / epsilon).ln() };
    let u = (2.0 * log_term).sqrt();
    let cardinality = 32.0 / 3.0 * sxf * log_term;
    let rho1 = (nf / mf).sqrt() * lambda;
    let six = 6f64.sqrt();
    let rho2 = (mf / sfcf).sqrt() * six * (1.0 / lambda + u) + six * (1.0 + lambda * u) * (nf / sfcf).sqrt();
    let lhs = rho1 * sff.sqrt() + rho2 * sxf.sqrt();
    let rhs = |cc: f64| 0.5 * cc * (k.max(0) as f64).sqrt();

    let mut conditions = vec![
        ConditionRecord::flag("n_prime", is_prime(n)),
        ConditionRecord::at_least("complement_cardinality", sfcf, cardinality),
        ConditionRecord::at_least("corruption_cardinality", sff, cardinality),
        ConditionRecord::at_most("recovery_inequality", lhs, rhs(c)),
    ];

    let rank = check_b_full_rank(inst)?;
    conditions.push(ConditionRecord::flag("b_full_rank", rank.full_rank));

    let sup = Supports::of_instance(inst);
    let hoeffding_value = if sx > 0 && sf > 0 {
        let a = adjoint_block(&inst.operator, 1.0, &sup.s_x, &sup.s_f)?;
        (a * to_dvector(&sup.sigma_f)).norm()
    } else {
        0.0
    };
    conditions.push(ConditionRecord::at_most(
        "steinhaus_sum_bound",
        hoeffding_value,
        (2.0 * sxf * log_term).sqrt(),
    ));
    let offset = offset_signs(&inst.operator, lambda, &sup)?.norm();
    conditions.push(ConditionRecord::at_most(
        "offset_sign_bound",
        offset,
        (1.0 + lambda * u) * sxf.sqrt(),
    ));

    let h0_comp_bound = (mf / sfcf).sqrt() * six * (1.0 / lambda + u) * sxf.sqrt();
    let mut report_h0 = None;
    let mut report_q0 = None;
    let (mut q0_norm2, mut q0_norm_inf) = (f64::INFINITY, f64::INFINITY);
    let gram_ok = match build_h0(inst) {
        Ok(h) => {
            let s_fc = complement(&inst.s_f, m);
            let h_c = gather(&h.h0, &s_fc);
            conditions.push(ConditionRecord::at_most(
                "h0_complement_bound",
                norm2(&h_c),
                h0_comp_bound,
            ));
            conditions.push(ConditionRecord::at_most(
                "h0_bound",
                norm2(&h.h0),
                sff.sqrt() + h0_comp_bound,
            ));
            let q0 = build_q0(inst, &h.h0)?;
            q0_norm2 = norm2(&q0);
            q0_norm_inf = norm_inf(&q0);
            conditions.push(ConditionRecord::at_most("q0_bound", q0_norm2, lhs));
            conditions.push(ConditionRecord::below("q0_sup_norm", q0_norm_inf, 1.0));
            report_h0 = Some(h.h0);
            report_q0 = Some(q0);
            true
        }
        Err(Error::Singular(_)) => false,
        Err(e) => return Err(e),
    };
    conditions.push(ConditionRecord::flag("gram_invertible", gram_ok));

    let mut xi_k = None;
    if k >= 1 && sfc > 0 {
        let d = sfc + (n - sx);
        if enumeration_feasible(d, k as usize) {
            let (phi, _) = assemble_phi_w(inst)?;
            let xi = xi_k_bruteforce(&phi, k as usize)?;
            conditions.push(ConditionRecord::below("xi_k_contractive", xi, 1.0));
            if xi < 1.0 {
                conditions.push(ConditionRecord::at_most(
                    "recovery_inequality_contractive",
                    lhs,
                    rhs(1.0 - xi),
                ));
            }
            if let Some(q0) = &report_q0 {
                let suff = check_sufficient_condition(q0, xi, k as usize)?;
                conditions.push(suff.thresholded);
                conditions.push(suff.plain);
            }
            xi_k = Some(xi);
        }
    }

    let tol = CertificateTolerances::default();
    let certificate = if sx + sf <= m {
        let check = verify_dual_certificate(inst, &inst.x0, &inst.f0, &tol)?;
        conditions.extend(check.records(&tol).into_iter().filter(|r| r.name != "b_full_rank"));
        Some(check)
    } else {
        None
    };

    let hoeffding_tail = if sx == 0 { 0.0 } else { 2.0 * (-log_term).exp() };
    let concentration_probability = if sx == 0 {
        1.0
    } else {
        (1.0 - 2.0 * sxf * (-3.0 * sfcf * 0.25 / (8.0 * sxf)).exp()).max(0.0)
    };

    Ok(CertificateReport {
        n,
        m,
        lambda,
        epsilon,
        c,
        sx_len: sx,
        sf_len: sf,
        k,
        h0: report_h0,
        q0: report_q0,
        q0_norm2,
        q0_norm_inf,
        b_min_singular: rank.min_singular,
        schur_min_eigenvalue: rank.schur_min_eigenvalue,
        xi_k,
        rho1,
        rho2,
        hoeffding_tail,
        concentration_probability,
        certificate,
        conditions,
    })
}
