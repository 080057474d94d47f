//! Dense complex linear algebra shared by the gate factories.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V f(Λ) V†` for a Hermitian `h = V Λ V†`.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    spectral_product(&values, &vectors, f)
}

pub(crate) fn spectral_product(
    values: &[f64],
    vectors: &CMatrix,
    f: impl Fn(f64) -> Complex64,
) -> CMatrix {
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let phase = f(lambda);
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(−i t H)` for Hermitian `H`.
pub fn exp_minus_i(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(h, |lambda| (-I * (t * lambda)).exp())
}

/// Reference matrix exponential by Taylor series with scaling and squaring.
///
/// Slow and only used to cross-check the spectral route.
pub fn expm_scaling_squaring(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a * Complex64::new(scale, 0.0);
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |U†U − 1|` entrywise.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

pub fn max_abs_diff_vec(a: &CVector, b: &CVector) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_and_taylor_exponentials_agree() {
        let h = CMatrix::from_fn(4, 4, |r, c| {
            let base = Complex64::new((r + c) as f64 * 0.3, (r as f64 - c as f64) * 0.2);
            if r == c {
                Complex64::new(base.re, 0.0)
            } else {
                base
            }
        });
        let spectral = exp_minus_i(&h, 1.3);
        let taylor = expm_scaling_squaring(&(h * (-I * 1.3)));
        assert!(max_abs_diff(&spectral, &taylor) < 1e-12);
        assert!(unitarity_defect(&spectral) < 1e-12);
    }

    #[test]
    fn eigenvalues_are_sorted() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let (values, _) = hermitian_eigen(&h);
        assert_eq!(values, vec![-1.0, 0.5, 3.0]);
    }
}
