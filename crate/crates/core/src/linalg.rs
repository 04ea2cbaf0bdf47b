//! Small dense complex-vector helpers shared by the algorithms.

use num_complex::Complex64;

/// `x^H y`
#[inline]
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
}

#[inline]
pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum()
}

#[inline]
pub fn norm(x: &[Complex64]) -> f64 {
    norm_sqr(x).sqrt()
}

/// `x + s * y`
pub fn axpy(x: &[Complex64], s: Complex64, y: &[Complex64]) -> Vec<Complex64> {
    x.iter().zip(y).map(|(a, b)| a + s * b).collect()
}

pub fn scale(x: &[Complex64], s: Complex64) -> Vec<Complex64> {
    x.iter().map(|a| a * s).collect()
}
