//! Ground-truth instances and scalar quality metrics.
//!
//! An instance holds a sparse signal `x0`, a sparse gross corruption `f0` and
//! the measurements `b = λ A x0 + f0`, so `(x0, f0)` is feasible for the
//! recovery program `min ‖x‖₁ + ‖f‖₁ s.t. λ A x + f = b` at the instance's λ.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::fourier::{sample_subset, PartialFourierOperator};
use crate::vecops::{gather, norm1, norm2, support};

/// Relative support-detection threshold used for all `‖·‖₀` computations.
pub const SUPPORT_TOL: f64 = 1e-9;

/// `z / |z|`, with the sign of zero defined as zero.
pub fn complex_sign(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::ZERO
    } else {
        z / r
    }
}

/// A recovery problem together with its ground truth.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub operator: PartialFourierOperator,
    pub lambda: f64,
    pub x0: Vec<Complex64>,
    pub f0: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// Support of `x0`, sorted.
    pub s_x: Vec<usize>,
    /// Support of `f0`, sorted.
    pub s_f: Vec<usize>,
    pub sigma_x: Vec<Complex64>,
    pub sigma_f: Vec<Complex64>,
    pub seed: Option<u64>,
}

impl ProblemInstance {
    /// Assembles `b = λ A x0 + f0` and derives supports and signs.
    pub fn new(
        operator: PartialFourierOperator,
        lambda: f64,
        x0: Vec<Complex64>,
        f0: Vec<Complex64>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        let mut b = operator.apply(&x0)?;
        if f0.len() != operator.m() {
            return Err(Error::DimensionMismatch {
                expected: operator.m(),
                got: f0.len(),
            });
        }
        for (bi, fi) in b.iter_mut().zip(&f0) {
            *bi = *bi * lambda + fi;
        }
        Self::with_measurements(operator, lambda, x0, f0, b, seed)
    }

    /// Uses the given measurements verbatim (e.g. when replaying a file).
    pub fn with_measurements(
        operator: PartialFourierOperator,
        lambda: f64,
        x0: Vec<Complex64>,
        f0: Vec<Complex64>,
        b: Vec<Complex64>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let n = operator.n();
        let m = operator.m();
        for (len, expected) in [(x0.len(), n), (f0.len(), m), (b.len(), m)] {
            if len != expected {
                return Err(Error::DimensionMismatch { expected, got: len });
            }
        }
        let s_x = support(&x0, SUPPORT_TOL);
        let s_f = support(&f0, SUPPORT_TOL);
        let sigma_x = gather(&x0, &s_x).into_iter().map(complex_sign).collect();
        let sigma_f = gather(&f0, &s_f).into_iter().map(complex_sign).collect();
        Ok(Self {
            operator,
            lambda,
            x0,
            f0,
            b,
            s_x,
            s_f,
            sigma_x,
            sigma_f,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.operator.n()
    }

    pub fn m(&self) -> usize {
        self.operator.m()
    }

    /// `‖b − λ A x0 − f0‖₂`.
    pub fn model_residual(&self) -> Result<f64> {
        let ax = self.operator.apply(&self.x0)?;
        Ok(self
            .b
            .iter()
            .zip(ax.iter().zip(&self.f0))
            .map(|(b, (a, f))| (b - a * self.lambda - f).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// Dimensions and support sizes of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceShape {
    pub n: usize,
    pub m: usize,
    pub sx_len: usize,
    pub sf_len: usize,
}

/// Synthetic experiment parameters: measurement rate `ϑ_m = m/n` and
/// corruption rate `ϑ_f = |s_f|/m`.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticConfig {
    pub n: usize,
    pub theta_m: f64,
    pub theta_f: f64,
    pub corruption_energy_ratio: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(n: usize, theta_m: f64, theta_f: f64, seed: u64) -> Self {
        Self {
            n,
            theta_m,
            theta_f,
            corruption_energy_ratio: 100.0,
            lambda: 1.0,
            seed,
        }
    }

    /// Support sizes from the rounding rules (half away from zero).
    pub fn shape(&self) -> Result<InstanceShape> {
        if !(self.theta_m > 0.0 && self.theta_m <= 1.0) {
            return Err(invalid(format!("theta_m {} outside (0, 1]", self.theta_m)));
        }
        if !(0.0..1.0).contains(&self.theta_f) {
            return Err(invalid(format!("theta_f {} outside [0, 1)", self.theta_f)));
        }
        if self.corruption_energy_ratio < 100.0 || !self.corruption_energy_ratio.is_finite() {
            return Err(invalid("corruption_energy_ratio must be at least 100"));
        }
        let m = (self.theta_m * self.n as f64).round() as usize;
        if m == 0 {
            return Err(invalid(format!(
                "theta_m {} gives no measurements for n = {}",
                self.theta_m, self.n
            )));
        }
        let sf_len = (self.theta_f * m as f64).round() as usize;
        Ok(InstanceShape {
            n: self.n,
            m,
            sx_len: signal_sparsity(self.n)?,
            sf_len,
        })
    }
}

/// `round(0.2 n / ln(0.2 n))`, the signal sparsity of the synthetic generator.
pub fn signal_sparsity(n: usize) -> Result<usize> {
    let t = 0.2 * n as f64;
    if t <= std::f64::consts::E {
        return Err(invalid(format!(
            "n = {n} too small: 0.2n must exceed e for the sparsity rule"
        )));
    }
    Ok((t / t.ln()).round() as usize)
}

/// Generates the synthetic instance described by `cfg`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<ProblemInstance> {
    let shape = cfg.shape()?;
    generate_instance(shape, cfg.corruption_energy_ratio, cfg.lambda, cfg.seed, false)
}

/// Generates an instance with prescribed support sizes.
///
/// `x0` is positive on a contiguous block of `sx_len` indices starting at a
/// uniform offset, with values uniform on `(0, 1]`; the measurement side is
/// built by [`instance_from_signal`]. Four independent streams of one seeded
/// ChaCha8 generator are used: row set, corruption support, signal values
/// and corruption values.
pub fn generate_instance(
    shape: InstanceShape,
    energy_ratio: f64,
    lambda: f64,
    seed: u64,
    conjugated: bool,
) -> Result<ProblemInstance> {
    let InstanceShape { n, m, sx_len, sf_len } = shape;
    if sx_len == 0 || sx_len >= n {
        return Err(invalid(format!("|s_x| = {sx_len} must lie in 1..{n}")));
    }
    let mut val_rng = stream(seed, 2);
    let start = val_rng.random_range(0..=n - sx_len);
    let mut x0 = vec![Complex64::ZERO; n];
    for v in &mut x0[start..start + sx_len] {
        *v = Complex64::new(unit_open_closed(&mut val_rng), 0.0);
    }
    instance_from_signal(x0, m, sf_len, energy_ratio, lambda, seed, conjugated)
}

/// Wraps a given signal in a random instance: `m` uniformly drawn rows and a
/// positive corruption on `sf_len` uniformly drawn measurements with
/// `‖f0‖₂ = energy_ratio · ‖x0‖₂`.
pub fn instance_from_signal(
    x0: Vec<Complex64>,
    m: usize,
    sf_len: usize,
    energy_ratio: f64,
    lambda: f64,
    seed: u64,
    conjugated: bool,
) -> Result<ProblemInstance> {
    let n = x0.len();
    if m == 0 || m > n {
        return Err(invalid(format!("m = {m} must lie in 1..={n}")));
    }
    if sf_len > m {
        return Err(invalid(format!("|s_f| = {sf_len} exceeds m = {m}")));
    }
    if !(energy_ratio > 0.0 && energy_ratio.is_finite()) {
        return Err(invalid("corruption energy ratio must be positive"));
    }
    let rows = sample_subset(n, m, &mut stream(seed, 0))?;
    let operator = PartialFourierOperator::new(n, rows, conjugated)?;

    let mut f0 = vec![Complex64::ZERO; m];
    let x_norm = norm2(&x0);
    if sf_len > 0 && x_norm > 0.0 {
        let s_f = sample_subset(m, sf_len, &mut stream(seed, 1))?;
        let mut val_rng = stream(seed, 3);
        for &i in &s_f {
            f0[i] = Complex64::new(unit_open_closed(&mut val_rng), 0.0);
        }
        let scale = energy_ratio * x_norm / norm2(&f0);
        f0.iter_mut().for_each(|v| *v *= scale);
    }
    ProblemInstance::new(operator, lambda, x0, f0, Some(seed))
}

/// Independent stream `id` of the generator seeded with `seed`.
pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform draw from `(0, 1]`.
pub(crate) fn unit_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Relative recovery error of the stacked pair `(x, f)`.
pub fn rre(x_hat: &[Complex64], f_hat: &[Complex64], x0: &[Complex64], f0: &[Complex64]) -> Result<f64> {
    if x_hat.len() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            got: x_hat.len(),
        });
    }
    if f_hat.len() != f0.len() {
        return Err(Error::DimensionMismatch {
            expected: f0.len(),
            got: f_hat.len(),
        });
    }
    let den = (norm2(x0).powi(2) + norm2(f0).powi(2)).sqrt();
    if den == 0.0 {
        return Err(invalid("RRE undefined for zero ground truth"));
    }
    let num: f64 = x_hat
        .iter()
        .zip(x0)
        .chain(f_hat.iter().zip(f0))
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(num.sqrt() / den)
}

/// Signal-only relative recovery error `‖x̂ − x_ref‖₂ / ‖x_ref‖₂`.
pub fn srre(x_hat: &[Complex64], x_ref: &[Complex64]) -> Result<f64> {
    if x_hat.len() != x_ref.len() {
        return Err(Error::DimensionMismatch {
            expected: x_ref.len(),
            got: x_hat.len(),
        });
    }
    let den = norm2(x_ref);
    if den == 0.0 {
        return Err(invalid("SRRE undefined for a zero reference"));
    }
    Ok(crate::vecops::dist2(x_hat, x_ref) / den)
}

/// Best `k`-term ℓ₁ approximation error: the sum of the `len − k` smallest
/// moduli.
pub fn sigma_k(y: &[Complex64], k: usize) -> Result<f64> {
    if k > y.len() {
        return Err(invalid(format!("k = {k} exceeds length {}", y.len())));
    }
    let mut mags: Vec<f64> = y.iter().map(|v| v.norm()).collect();
    mags.sort_unstable_by(f64::total_cmp);
    Ok(mags[..y.len() - k].iter().sum())
}

/// All `σ_k(y)₁` for `k = 0..=len` in one sort.
pub fn sigma_k_profile(y: &[Complex64]) -> Vec<f64> {
    let mut mags: Vec<f64> = y.iter().map(|v| v.norm()).collect();
    mags.sort_unstable_by(f64::total_cmp);
    // prefix[j] = sum of the j smallest moduli; σ_k = prefix[len - k]
    let mut prefix = Vec::with_capacity(mags.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in &mags {
        acc += v;
        prefix.push(acc);
    }
    prefix.reverse();
    prefix
}

/// `σ_k(y)₁ / ‖y‖₂`; zero exactly when `y` has at most `k` nonzeros.
pub fn ksparse_indicator(y: &[Complex64], k: usize) -> Result<f64> {
    let den = norm2(y);
    if den == 0.0 {
        return Err(invalid("k-sparse indicator undefined for the zero vector"));
    }
    Ok(sigma_k(y, k)? / den)
}

/// `‖x‖₁ + ‖f‖₁`.
pub fn objective(x: &[Complex64], f: &[Complex64]) -> f64 {
    norm1(x) + norm1(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sign_examples() {
        assert_eq!(complex_sign(c(3.0, 0.0)), c(1.0, 0.0));
        assert_eq!(complex_sign(c(0.0, -2.0)), c(0.0, -1.0));
        assert_eq!(complex_sign(Complex64::ZERO), Complex64::ZERO);
    }

    #[test]
    fn full_scale_shape() {
        // 0.2·251 = 50.2, 50.2 / ln 50.2 = 12.8226..., rounds to 13.
        let cfg = SyntheticConfig::new(251, 0.9, 0.05, 1);
        let s = cfg.shape().unwrap();
        assert_eq!(s.m, 226);
        assert_eq!(s.sx_len, 13);
        assert_eq!(s.sf_len, 11); // 0.05 · 226 = 11.3
    }

    #[test]
    fn no_corruption_means_zero_f0() {
        let inst = generate_synthetic(&SyntheticConfig::new(64, 0.5, 0.0, 4)).unwrap();
        assert!(inst.f0.iter().all(|v| *v == Complex64::ZERO));
        assert!(inst.s_f.is_empty());
        let ax = inst.operator.apply(&inst.x0).unwrap();
        for (a, b) in ax.iter().zip(&inst.b) {
            assert_eq!(a * inst.lambda, *b);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SyntheticConfig::new(131, 0.7, 0.15, 99);
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.operator.rows(), b.operator.rows());
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.f0, b.f0);
        assert_eq!(a.b, b.b);
    }

    #[test]
    fn generated_structure() {
        let cfg = SyntheticConfig::new(251, 0.9, 0.25, 5);
        let inst = generate_synthetic(&cfg).unwrap();
        let shape = cfg.shape().unwrap();
        assert_eq!(inst.s_x.len(), shape.sx_len);
        assert_eq!(inst.s_f.len(), shape.sf_len);
        // contiguous positive block
        assert!(inst.s_x.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(inst.s_x.iter().all(|&i| inst.x0[i].re > 0.0 && inst.x0[i].im == 0.0));
        assert!(inst.s_f.iter().all(|&i| inst.f0[i].re > 0.0));
        let ratio = norm2(&inst.f0) / norm2(&inst.x0);
        assert!((ratio - 100.0).abs() < 1e-10);
        let rel = inst.model_residual().unwrap() / norm2(&inst.b);
        assert!(rel < 1e-14);
        assert_eq!(inst.sigma_x.len(), inst.s_x.len());
        assert!(inst.sigma_f.iter().all(|s| (s.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn generator_rejects_bad_shapes() {
        let base = InstanceShape {
            n: 16,
            m: 8,
            sx_len: 2,
            sf_len: 1,
        };
        assert!(generate_instance(InstanceShape { sx_len: 16, ..base }, 100.0, 1.0, 0, false).is_err());
        assert!(generate_instance(InstanceShape { sf_len: 9, ..base }, 100.0, 1.0, 0, false).is_err());
        assert!(generate_instance(InstanceShape { m: 17, ..base }, 100.0, 1.0, 0, false).is_err());
        assert!(generate_instance(base, 100.0, 1.0, 0, false).is_ok());
        assert!(SyntheticConfig::new(10, 0.5, 0.1, 0).shape().is_err());
        assert!(SyntheticConfig::new(64, 0.0, 0.1, 0).shape().is_err());
        assert!(SyntheticConfig::new(64, 0.5, 1.0, 0).shape().is_err());
    }

    #[test]
    fn rre_examples() {
        let x0 = vec![c(1.0, 0.0), c(0.0, 2.0)];
        let f0 = vec![c(0.0, 0.0); 3];
        assert_eq!(rre(&x0, &f0, &x0, &f0).unwrap(), 0.0);
        let x2: Vec<_> = x0.iter().map(|v| v * 2.0).collect();
        assert!((rre(&x2, &f0, &x0, &f0).unwrap() - 1.0).abs() < 1e-15);
        // perturbation on x only: ‖δ‖ / ‖(x0, f0)‖
        let f1 = vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 4.0)];
        let delta = [c(0.1, -0.2), c(0.3, 0.0)];
        let xp: Vec<_> = x0.iter().zip(&delta).map(|(a, d)| a + d).collect();
        let expected = (0.01f64 + 0.04 + 0.09).sqrt() / (1.0f64 + 4.0 + 9.0 + 16.0).sqrt();
        assert!((rre(&xp, &f1, &x0, &f1).unwrap() - expected).abs() < 1e-15);
        assert!(rre(&x0, &f0, &[Complex64::ZERO; 2], &f0).is_err());
    }

    #[test]
    fn srre_examples() {
        let xr = vec![c(1.0, -1.0), c(2.0, 0.5)];
        assert_eq!(srre(&xr, &xr).unwrap(), 0.0);
        assert_eq!(srre(&[Complex64::ZERO; 2], &xr).unwrap(), 1.0);
        let scaled: Vec<_> = xr.iter().map(|v| v * 1.2).collect();
        assert!((srre(&scaled, &xr).unwrap() - 0.2).abs() < 1e-12);
        assert!(srre(&xr, &[Complex64::ZERO; 2]).is_err());
    }

    #[test]
    fn sigma_k_examples() {
        let y = [c(3.0, 0.0), c(-1.0, 0.0), c(0.0, 2.0)];
        assert_eq!(sigma_k(&y, 1).unwrap(), 3.0);
        assert_eq!(sigma_k(&y, 0).unwrap(), 6.0);
        assert_eq!(sigma_k(&y, 3).unwrap(), 0.0);
        assert!(sigma_k(&y, 4).is_err());
        let sparse = [c(0.0, 0.0), c(5.0, 0.0), c(0.0, 0.0)];
        assert_eq!(sigma_k(&sparse, 1).unwrap(), 0.0);
        let prof = sigma_k_profile(&y);
        for (k, v) in prof.iter().enumerate() {
            assert_eq!(*v, sigma_k(&y, k).unwrap());
        }
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(ksparse_indicator(&[c(0.0, 0.0), c(0.0, 3.0)], 1).unwrap(), 0.0);
        let v = ksparse_indicator(&[c(1.0, 0.0), c(1.0, 0.0)], 1).unwrap();
        assert!((v - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(ksparse_indicator(&[Complex64::ZERO; 2], 1).is_err());
    }
}
