//! Matrix-free partial Fourier sensing operator.
//!
//! The underlying transform is the unitary DFT with entries
//! `F[j, k] = n^(-1/2) exp(-2πi jk / n)` (zero-based). A partial operator keeps
//! the rows in `Λ` and rescales by `sqrt(n/m)`, so every entry has modulus
//! `1/sqrt(m)` and every column has unit ℓ₂ norm. With `conjugated` set the rows
//! are taken from `F*` instead of `F`.
//!
//! Transforms of arbitrary length (primes included) go through `rustfft`, which
//! switches to Rader/Bluestein algorithms for lengths without small factors.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Name of the PRNG used for every seeded draw in this crate.
pub const PRNG_NAME: &str = "ChaCha8Rng";

/// Unitary forward DFT.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    transform(x, false)
}

/// Unitary inverse DFT (the conjugate transform of [`dft`]).
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    transform(x, true)
}

fn transform(x: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(invalid("transform of an empty vector"));
    }
    let n = x.len();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut buf = x.to_vec();
    fft.process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    Ok(buf)
}

/// Draws `m` distinct indices from `0..n` uniformly with a partial
/// Fisher–Yates shuffle. The result is sorted.
pub fn sample_subset<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return Err(invalid(format!("subset size {m} must lie in 1..={n}")));
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool.sort_unstable();
    Ok(pool)
}

/// Seeded wrapper around [`sample_subset`] using [`PRNG_NAME`].
pub fn sample_random_subset(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_subset(n, m, &mut rng)
}

/// Row-subsampled, column-normalized unitary DFT.
#[derive(Clone)]
pub struct PartialFourierOperator {
    n: usize,
    rows: Vec<usize>,
    conjugated: bool,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PartialFourierOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialFourierOperator")
            .field("n", &self.n)
            .field("m", &self.rows.len())
            .field("conjugated", &self.conjugated)
            .field("rows", &self.rows)
            .finish()
    }
}

impl PartialFourierOperator {
    /// Builds the operator from an explicit row set. Rows are sorted on entry.
    pub fn new(n: usize, mut rows: Vec<usize>, conjugated: bool) -> Result<Self> {
        if n == 0 {
            return Err(invalid("ambient dimension must be positive"));
        }
        if rows.is_empty() || rows.len() > n {
            return Err(invalid(format!("row count {} must lie in 1..={n}", rows.len())));
        }
        rows.sort_unstable();
        for w in rows.windows(2) {
            if w[0] == w[1] {
                return Err(invalid(format!("duplicate row index {}", w[0])));
            }
        }
        if let Some(&last) = rows.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, len: n });
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scale = (n as f64 / rows.len() as f64).sqrt();
        Ok(Self {
            n,
            rows,
            conjugated,
            scale,
            forward,
            inverse,
        })
    }

    /// Operator with `m` rows drawn uniformly at random.
    pub fn random(n: usize, m: usize, seed: u64, conjugated: bool) -> Result<Self> {
        Self::new(n, sample_random_subset(n, m, seed)?, conjugated)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// The sampled row indices `Λ`, sorted.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn conjugated(&self) -> bool {
        self.conjugated
    }

    /// `sqrt(n/m)`, the factor applied to the unitary DFT rows.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Squared spectral norm of the operator: `A A* = (n/m) I`.
    pub fn row_gram(&self) -> f64 {
        self.scale * self.scale
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::ZERO; self.m()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// `x = A* y`.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::ZERO; self.n];
        self.apply_adjoint_into(y, &mut out)?;
        Ok(out)
    }

    /// In-place variant of [`apply`](Self::apply); `out` must have length `m`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        check_len(self.n, x.len())?;
        check_len(self.m(), out.len())?;
        let mut buf = x.to_vec();
        // F rows come from the forward FFT, F* rows from the inverse one.
        if self.conjugated {
            self.inverse.process(&mut buf);
        } else {
            self.forward.process(&mut buf);
        }
        // scale * n^(-1/2) = m^(-1/2)
        let s = 1.0 / (self.m() as f64).sqrt();
        for (o, &r) in out.iter_mut().zip(&self.rows) {
            *o = buf[r] * s;
        }
        Ok(())
    }

    /// In-place variant of [`apply_adjoint`](Self::apply_adjoint); `out`
    /// must have length `n`.
    pub fn apply_adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        check_len(self.m(), y.len())?;
        check_len(self.n, out.len())?;
        out.iter_mut().for_each(|v| *v = Complex64::ZERO);
        for (&r, &v) in self.rows.iter().zip(y) {
            out[r] = v;
        }
        if self.conjugated {
            self.forward.process(out);
        } else {
            self.inverse.process(out);
        }
        let s = 1.0 / (self.m() as f64).sqrt();
        out.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    /// Dense entry `A[i, j]` where `i` indexes the sampled rows.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let r = self.rows[i];
        // reduce r*j mod n before forming the angle to keep it accurate
        let phase = ((r as u128 * j as u128) % self.n as u128) as f64;
        let sign = if self.conjugated { 1.0 } else { -1.0 };
        let angle = sign * 2.0 * PI * phase / self.n as f64;
        Complex64::from_polar(1.0 / (self.m() as f64).sqrt(), angle)
    }

    /// Dense block `A(rows, cols)`; `rows` index into `0..m`, `cols` into `0..n`.
    pub fn dense_submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<DMatrix<Complex64>> {
        for &i in rows {
            if i >= self.m() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.m(),
                });
            }
        }
        for &j in cols {
            if j >= self.n {
                return Err(Error::IndexOutOfRange { index: j, len: self.n });
            }
        }
        Ok(DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
            self.entry(rows[a], cols[b])
        }))
    }

    /// The full `m × n` dense matrix.
    pub fn dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.m(), self.n, |i, j| self.entry(i, j))
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn dft_of_delta_is_flat() {
        let x = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let y = dft(&x).unwrap();
        for v in y {
            assert!(close(v, c(0.5, 0.0), 1e-15));
        }
    }

    #[test]
    fn dft_of_constant_is_scaled_delta() {
        let x = vec![c(1.0, 0.0); 4];
        let y = dft(&x).unwrap();
        assert!(close(y[0], c(2.0, 0.0), 1e-15));
        for v in &y[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn dft_rejects_empty() {
        assert!(dft(&[]).is_err());
        assert!(idft(&[]).is_err());
    }

    #[test]
    fn parseval_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Complex64> = (0..64)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let y = dft(&x).unwrap();
        let nx: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((nx - ny).abs() <= 1e-12 * nx);
        let back = idft(&y).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!(close(*a, *b, 1e-12 * nx));
        }
    }

    #[test]
    fn full_subset_is_identity_set() {
        for seed in 0..5 {
            assert_eq!(sample_random_subset(5, 5, seed).unwrap(), vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn subset_is_deterministic() {
        let a = sample_random_subset(512, 256, 7).unwrap();
        let b = sample_random_subset(512, 256, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 256);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_draw_is_uniform() {
        // 10000 draws of one index out of 4: binomial(10000, 1/4) per index,
        // sd = sqrt(10000 * 0.25 * 0.75) ≈ 43.3, so 4 sd ≈ 173.
        let mut counts = [0usize; 4];
        for seed in 0..10_000u64 {
            counts[sample_random_subset(4, 1, seed).unwrap()[0]] += 1;
        }
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for &k in &counts {
            assert!((k as f64 - 2500.0).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn subset_rejects_bad_sizes() {
        assert!(sample_random_subset(4, 0, 0).is_err());
        assert!(sample_random_subset(4, 5, 0).is_err());
    }

    #[test]
    fn apply_small_hand_computed() {
        // Λ = {0, 2}, n = 4: rows (1,1,1,1)/√2 and (1,-1,1,-1)/√2.
        let op = PartialFourierOperator::new(4, vec![0, 2], false).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let y = op.apply(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(close(y[0], c(s, 0.0), 1e-15) && close(y[1], c(s, 0.0), 1e-15));
        // row 0 sums four entries of 1/√2
        let y = op.apply(&[c(1.0, 0.0); 4]).unwrap();
        assert!(close(y[0], c(2.0 * 2f64.sqrt(), 0.0), 1e-14), "{y:?}");
        assert!(y[1].norm() < 1e-14);
        let z = op.apply(&[Complex64::ZERO; 4]).unwrap();
        assert!(z.iter().all(|v| *v == Complex64::ZERO));
    }

    #[test]
    fn adjoint_small_hand_computed() {
        let op = PartialFourierOperator::new(4, vec![0, 2], false).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let x = op.apply_adjoint(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        for v in x {
            assert!(close(v, c(s, 0.0), 1e-15));
        }
        let x = op.apply_adjoint(&[Complex64::ZERO; 2]).unwrap();
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn dense_block_hand_computed() {
        // row 2 of the n = 4 DFT times √(4/2): exp(-iπ j)/√2 = (1,-1,1,-1)/√2
        let op = PartialFourierOperator::new(4, vec![0, 2], false).unwrap();
        let blk = op.dense_submatrix(&[1], &[1, 3]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!(close(blk[(0, 0)], c(-s, 0.0), 1e-15));
        assert!(close(blk[(0, 1)], c(-s, 0.0), 1e-15));

        let op = PartialFourierOperator::new(7, vec![0], false).unwrap();
        let blk = op.dense_submatrix(&[0], &[0]).unwrap();
        assert!(close(blk[(0, 0)], c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn conjugated_rows_are_conjugates() {
        let a = PartialFourierOperator::new(9, vec![1, 4, 5], false).unwrap();
        let b = PartialFourierOperator::new(9, vec![1, 4, 5], true).unwrap();
        for i in 0..3 {
            for j in 0..9 {
                assert!(close(a.entry(i, j).conj(), b.entry(i, j), 1e-15));
            }
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(PartialFourierOperator::new(0, vec![], false).is_err());
        assert!(PartialFourierOperator::new(4, vec![], false).is_err());
        assert!(PartialFourierOperator::new(4, vec![1, 1], false).is_err());
        assert!(PartialFourierOperator::new(4, vec![4], false).is_err());
        let op = PartialFourierOperator::new(4, vec![0, 2], false).unwrap();
        assert!(op.apply(&[Complex64::ZERO; 3]).is_err());
        assert!(op.apply_adjoint(&[Complex64::ZERO; 3]).is_err());
        assert!(op.dense_submatrix(&[2], &[0]).is_err());
        assert!(op.dense_submatrix(&[0], &[4]).is_err());
    }
}
