//! Small dense linear-algebra helpers shared by the filters.

use alloc::format;
use core::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::float;
use crate::{Error, Result};

/// First jitter added to a diagonal when a plain Cholesky factorization fails.
pub const JITTER_START: f64 = 1e-12;
/// Largest jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-6;

/// `M ← (M + Mᵀ)/2`, in place.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&mut m);
    m
}

/// Cholesky factorization of a symmetric matrix with diagonal jitter escalation.
///
/// The input is symmetrized first. If it is not numerically positive definite,
/// `εI` is added with `ε` doubling from [`JITTER_START`] up to [`JITTER_MAX`].
pub fn robust_cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "cholesky of non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("matrix has non-finite entries".into()));
    }
    let base = symmetrized(m.clone());
    if let Some(c) = Cholesky::new(base.clone()) {
        return Ok(c);
    }
    let n = m.nrows();
    let mut eps = JITTER_START;
    while eps <= JITTER_MAX {
        let mut jittered = base.clone();
        for i in 0..n {
            jittered[(i, i)] += eps;
        }
        if let Some(c) = Cholesky::new(jittered) {
            return Ok(c);
        }
        eps *= 2.0;
    }
    Err(Error::Decomposition(format!(
        "{n}x{n} matrix not positive definite even with jitter {JITTER_MAX:e}"
    )))
}

/// Lower-triangular square root `S` with `S Sᵀ = M`.
pub fn sqrt_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(robust_cholesky(m)?.l())
}

/// Inverse of a symmetric positive definite matrix, symmetrized.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(symmetrized(robust_cholesky(m)?.inverse()))
}

/// A factor `A` with `A Aᵀ = M` for symmetric positive *semi*definite `M`.
///
/// Used for noise sampling, where a zero covariance is legitimate.
pub fn sampling_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrized(m.clone());
    if let Some(c) = Cholesky::new(sym.clone()) {
        return Ok(c.l());
    }
    let eig = sym.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(float::abs(*v)));
    let tol = 1e-12 * scale.max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -tol) {
        return Err(Error::Decomposition(
            "sampling covariance has a negative eigenvalue".into(),
        ));
    }
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| float::sqrt(l.max(0.0))),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Wrap an angle to `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if !theta.is_finite() {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t <= -PI {
        t += two_pi;
    } else if t > PI {
        t -= two_pi;
    }
    t
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && {
        let n = m.nrows();
        (0..n).all(|i| (0..i).all(|j| float::abs(m[(i, j)] - m[(j, i)]) <= tol))
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrized(m.clone())
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Relative Frobenius distance `‖a - b‖ / max(‖b‖, floor)`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}
