//! Small dense complex linear-algebra helpers.

use nalgebra::{DMatrix, DVector, Schur};

use crate::C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// `exp(-i t H)` for a Hermitian `H`: Taylor series on a scaled argument,
/// then repeated squaring.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    let n = h.nrows();
    let x = h * C64::new(0.0, -t);
    let norm = one_norm(&x);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let x = x / C64::from(2f64.powi(squarings as i32));
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..=24 {
        term = &term * &x / C64::from(k as f64);
        sum += &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn one_norm(m: &CMat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}

/// Eigen-decomposition of a unitary (normal) matrix through its Schur form.
/// Returns eigenvalues and the matching orthonormal eigenvectors.
pub fn unitary_eigen(u: &CMat) -> (Vec<C64>, CMat) {
    let (q, t) = Schur::new(u.clone()).unpack();
    let values = (0..u.nrows()).map(|k| t[(k, k)]).collect();
    (values, q)
}

/// Principal matrix logarithm divided by `-i`: returns Hermitian `K` with
/// `exp(-i K) = U`, eigenphases taken in (-π, π].
pub fn unitary_log(u: &CMat) -> CMat {
    let (values, q) = unitary_eigen(u);
    let phases = CVec::from_iterator(values.len(), values.iter().map(|z| C64::from(-z.arg())));
    let k = &q * CMat::from_diagonal(&phases) * q.adjoint();
    (&k + k.adjoint()) * C64::from(0.5)
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn hermiticity_defect(h: &CMat) -> f64 {
    max_abs(&(h - h.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        CMat::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.3, 0.2),
                C64::new(0.0, -0.7),
                C64::new(0.3, -0.2),
                C64::new(-2.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.7),
                C64::new(0.5, 0.0),
                C64::new(0.4, 0.0),
            ],
        )
    }

    #[test]
    fn exponential_matches_eigendecomposition() {
        let h = sample();
        for &t in &[0.01, 0.7, 13.0] {
            let u = expi_hermitian(&h, t);
            let (vals, vecs) = hermitian_eigen(&h);
            let d = CVec::from_iterator(3, vals.iter().map(|&v| C64::new(0.0, -v * t).exp()));
            let reference = &vecs * CMat::from_diagonal(&d) * vecs.adjoint();
            assert!(max_abs(&(u.clone() - reference)) < 1e-12, "t = {t}");
            assert!(unitarity_defect(&u) < 1e-13);
        }
    }

    #[test]
    fn log_inverts_exponential() {
        let h = sample();
        let u = expi_hermitian(&h, 0.9);
        let k = unitary_log(&u);
        assert!(max_abs(&(k - h * C64::from(0.9))) < 1e-12);
    }
}
