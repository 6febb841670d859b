//! Dense eigenvalue helpers and central finite differences.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

const EIG_EPS: f64 = 1e-14;
const EIG_MAX_ITER: usize = 10_000;

/// Default absolute finite-difference step on per-unit quantities.
pub const FD_STEP: f64 = 1e-5;

/// Step used at `x`: absolute below magnitude one, relative above.
pub fn fd_step(x: f64, h: f64) -> f64 {
    if x.abs() > 1.0 {
        h * x.abs()
    } else {
        h
    }
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of ½(M + Mᵀ) and a unit eigenvector for it.
pub fn min_symmetric_eigen(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    let eig = symmetrized(m)
        .try_symmetric_eigen(EIG_EPS, EIG_MAX_ITER)
        .ok_or(Error::EigensolverFailure { order: n })?;
    let (k, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    Ok((lambda, eig.eigenvectors.column(k).into_owned()))
}

/// All eigenvalues of a general real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or(Error::EigensolverFailure { order: n })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_abscissa(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re))
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &[f64], h: f64) -> DVector<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|k| {
            let step = fd_step(x[k], h);
            xp[k] = x[k] + step;
            let fp = f(&xp);
            xp[k] = x[k] - step;
            let fm = f(&xp);
            xp[k] = x[k];
            (fp - fm) / (2.0 * step)
        }),
    )
}

/// Central-difference Jacobian; column `k` holds the partials w.r.t. `x_k`.
pub fn fd_jacobian<F>(f: F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let step = fd_step(x[k], h);
        xp[k] = x[k] + step;
        let fp = f(&xp);
        xp[k] = x[k] - step;
        let fm = f(&xp);
        xp[k] = x[k];
        for r in 0..m {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    jac
}

/// Central-difference Hessian of a scalar function (four-point stencil).
pub fn fd_hessian<F>(f: F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let eval = |xp: &mut [f64], i: usize, di: f64, j: usize, dj: f64| {
        xp[i] += di;
        xp[j] += dj;
        let v = f(xp);
        xp[i] -= di;
        xp[j] -= dj;
        v
    };
    for i in 0..n {
        let hi = fd_step(x[i], h);
        for j in i..n {
            let hj = fd_step(x[j], h);
            let v = eval(&mut xp, i, hi, j, hj) - eval(&mut xp, i, hi, j, -hj)
                - eval(&mut xp, i, -hi, j, hj)
                + eval(&mut xp, i, -hi, j, -hj);
            let d = v / (4.0 * hi * hj);
            hess[(i, j)] = d;
            hess[(j, i)] = d;
        }
    }
    hess
}
