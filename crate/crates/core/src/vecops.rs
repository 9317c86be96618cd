//! Small helpers on complex slices.

use num_complex::Complex64;

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm1(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm()).sum()
}

pub fn norm_inf(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `⟨x, y⟩ = Σ x_i conj(y_i)`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn dist2(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

pub fn all_finite(x: &[Complex64]) -> bool {
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Indices whose modulus exceeds `rel_tol · ‖x‖∞`. Empty for the zero vector.
pub fn support(x: &[Complex64], rel_tol: f64) -> Vec<usize> {
    let cut = rel_tol * norm_inf(x);
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > cut && v.norm() > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Sorted complement of `set` in `0..len`. `set` must be sorted.
pub fn complement(set: &[usize], len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len.saturating_sub(set.len()));
    let mut it = set.iter().peekable();
    for i in 0..len {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

pub fn gather(x: &[Complex64], idx: &[usize]) -> Vec<Complex64> {
    idx.iter().map(|&i| x[i]).collect()
}
