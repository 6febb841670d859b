//! Network energy functions and the coupling index λ.
//!
//! `W̃_B` is the susceptance potential whose gradient reproduces `(P, Q/V)` on
//! lossless networks; `Φ` collects the conductance-driven remainder so that
//! `(P, Q/V) = ∇W̃_B + Φ` holds on any network.

use alloc::vec::Vec;

use libm::{cos, sin};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Admittance;
use crate::linalg::{min_symmetric_eigen, symmetrized};
use crate::powerflow::{EquilibriumTriplet, OperatingPoint};

pub fn wb_tilde(op: &OperatingPoint, b: &DMatrix<f64>) -> f64 {
    let n = op.len();
    let mut w = 0.0;
    for i in 0..n {
        w -= 0.5 * b[(i, i)] * op.v[i] * op.v[i];
        for j in (i + 1)..n {
            let bij = b[(i, j)];
            if bij != 0.0 {
                w -= bij * op.v[i] * op.v[j] * cos(op.theta[i] - op.theta[j]);
            }
        }
    }
    w
}

/// `∇W̃_B` in `(θ, V)` order.
pub fn wb_gradient(op: &OperatingPoint, b: &DMatrix<f64>) -> DVector<f64> {
    let n = op.len();
    let mut g = DVector::zeros(2 * n);
    for i in 0..n {
        let mut dth = 0.0;
        let mut dv = -b[(i, i)] * op.v[i];
        for j in 0..n {
            let bij = b[(i, j)];
            if j == i || bij == 0.0 {
                continue;
            }
            let tij = op.theta[i] - op.theta[j];
            dth += bij * op.v[i] * op.v[j] * sin(tij);
            dv -= bij * op.v[j] * cos(tij);
        }
        g[i] = dth;
        g[n + i] = dv;
    }
    g
}

/// Analytic `∇²W̃_B`, symmetric by construction.
pub fn wb_hessian(op: &OperatingPoint, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = op.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        h[(n + i, n + i)] = -b[(i, i)];
        for j in 0..n {
            let bij = b[(i, j)];
            if j == i || bij == 0.0 {
                continue;
            }
            let tij = op.theta[i] - op.theta[j];
            let (s, c) = (sin(tij), cos(tij));
            let (vi, vj) = (op.v[i], op.v[j]);
            // θθ
            h[(i, i)] += bij * vi * vj * c;
            h[(i, j)] = -bij * vi * vj * c;
            // θV
            h[(i, n + i)] += bij * vj * s;
            h[(i, n + j)] = bij * vi * s;
            // VV
            h[(n + i, n + j)] = -bij * c;
        }
    }
    for i in 0..n {
        for j in 0..n {
            h[(n + j, i)] = h[(i, n + j)];
        }
    }
    h
}

/// Conductance-driven part `Φ = (φ_p, φ_q)` of the injections.
pub fn phi(op: &OperatingPoint, g: &DMatrix<f64>) -> DVector<f64> {
    let n = op.len();
    let mut out = DVector::zeros(2 * n);
    for i in 0..n {
        let vi = op.v[i];
        let mut pp = g[(i, i)] * vi * vi;
        let mut pq = 0.0;
        for j in 0..n {
            let gij = g[(i, j)];
            if j == i || gij == 0.0 {
                continue;
            }
            let tij = op.theta[i] - op.theta[j];
            pp += gij * vi * op.v[j] * cos(tij);
            pq += gij * op.v[j] * sin(tij);
        }
        out[i] = pp;
        out[n + i] = pq;
    }
    out
}

/// Jacobian `∇Φ`: row = component of `Φ`, column = variable of `y`.
pub fn phi_jacobian(op: &OperatingPoint, g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = op.len();
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let vi = op.v[i];
        jac[(i, n + i)] = 2.0 * g[(i, i)] * vi;
        for j in 0..n {
            let gij = g[(i, j)];
            if j == i || gij == 0.0 {
                continue;
            }
            let vj = op.v[j];
            let tij = op.theta[i] - op.theta[j];
            let (s, c) = (sin(tij), cos(tij));
            // φ_p
            jac[(i, i)] -= gij * vi * vj * s;
            jac[(i, j)] = gij * vi * vj * s;
            jac[(i, n + i)] += gij * vj * c;
            jac[(i, n + j)] = gij * vi * c;
            // φ_q
            jac[(n + i, i)] += gij * vj * c;
            jac[(n + i, j)] = -gij * vj * c;
            jac[(n + i, n + j)] = gij * s;
        }
    }
    jac
}

/// The coupling index λ together with the matrix it was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkIndex {
    pub lambda: f64,
    /// Symmetric matrix whose smallest eigenvalue is `lambda`.
    pub hessian: DMatrix<f64>,
    pub lossless: bool,
    /// Unit eigenvector for `lambda`, kept for diagnostics.
    pub eigenvector: DVector<f64>,
}

/// Index matrix at `y*`: `∇²W̃_B` on lossless networks, plus ½(∇Φ + ∇Φᵀ) otherwise.
pub fn index_matrix(y_star: &OperatingPoint, y: &Admittance) -> (DMatrix<f64>, bool) {
    let lossless = y.is_lossless();
    let mut m = wb_hessian(y_star, &y.b);
    if !lossless {
        m += symmetrized(&phi_jacobian(y_star, &y.g));
    }
    (symmetrized(&m), lossless)
}

pub fn network_lambda(triplet: &EquilibriumTriplet, y: &Admittance) -> Result<NetworkIndex> {
    if triplet.y_star.len() != y.len() {
        return Err(Error::Index {
            index: triplet.y_star.len(),
            len: y.len(),
        });
    }
    let (hessian, lossless) = index_matrix(&triplet.y_star, y);
    let (lambda, eigenvector) = min_symmetric_eigen(&hessian)?;
    Ok(NetworkIndex {
        lambda,
        hessian,
        lossless,
        eigenvector,
    })
}

/// Network storage `S_N` (lossless) or `Ŝ_N = S_N + W_G` (lossy) anchored at `y*`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStorage {
    pub y_star: OperatingPoint,
    pub sigma: Vec<f64>,
    /// `∇Φ(y*)`, present on lossy networks.
    pub lossy_correction: Option<DMatrix<f64>>,
    b: DMatrix<f64>,
    wb_star: f64,
    grad_star: DVector<f64>,
}

impl NetworkStorage {
    pub fn new(y_star: OperatingPoint, sigma: Vec<f64>, y: &Admittance) -> Result<Self> {
        let n = y_star.len();
        if sigma.len() != n || y.len() != n {
            return Err(Error::Index {
                index: sigma.len(),
                len: n,
            });
        }
        let lossy_correction = if y.is_lossless() {
            None
        } else {
            Some(phi_jacobian(&y_star, &y.g))
        };
        Ok(NetworkStorage {
            wb_star: wb_tilde(&y_star, &y.b),
            grad_star: wb_gradient(&y_star, &y.b),
            b: y.b.clone(),
            y_star,
            sigma,
            lossy_correction,
        })
    }

    fn deviation(&self, op: &OperatingPoint) -> DVector<f64> {
        op.to_vector() - self.y_star.to_vector()
    }

    fn sigma_weight(&self, k: usize) -> f64 {
        self.sigma[k % self.sigma.len()]
    }

    /// `W_B(y)`: `W̃_B` minus its value and linearization at `y*`.
    pub fn wb(&self, op: &OperatingPoint) -> f64 {
        let dy = self.deviation(op);
        wb_tilde(op, &self.b) - dy.dot(&self.grad_star) - self.wb_star
    }

    pub fn evaluate(&self, op: &OperatingPoint) -> f64 {
        let dy = self.deviation(op);
        let mut s = wb_tilde(op, &self.b) - dy.dot(&self.grad_star) - self.wb_star;
        for k in 0..dy.len() {
            s += 0.5 * self.sigma_weight(k) * dy[k] * dy[k];
        }
        if let Some(jac) = &self.lossy_correction {
            s += 0.5 * dy.dot(&(jac * &dy));
        }
        s
    }

    pub fn gradient(&self, op: &OperatingPoint) -> DVector<f64> {
        let dy = self.deviation(op);
        let mut g = wb_gradient(op, &self.b) - &self.grad_star;
        for k in 0..dy.len() {
            g[k] += self.sigma_weight(k) * dy[k];
        }
        if let Some(jac) = &self.lossy_correction {
            g += symmetrized(jac) * &dy;
        }
        g
    }

    pub fn hessian(&self, op: &OperatingPoint) -> DMatrix<f64> {
        let mut h = wb_hessian(op, &self.b);
        for k in 0..h.nrows() {
            h[(k, k)] += self.sigma_weight(k);
        }
        if let Some(jac) = &self.lossy_correction {
            h += symmetrized(jac);
        }
        h
    }

    /// Smallest eigenvalue of the storage Hessian at `y*`.
    pub fn min_curvature(&self) -> Result<f64> {
        Ok(min_symmetric_eigen(&self.hessian(&self.y_star))?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn b2() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-10.0, 10.0, 10.0, -10.0])
    }

    #[test]
    fn flat_two_bus_potential_is_zero() {
        assert!(wb_tilde(&OperatingPoint::flat(2), &b2()).abs() < 1e-14);
    }

    #[test]
    fn flat_two_bus_hessian_blocks() {
        let h = wb_hessian(&OperatingPoint::flat(2), &b2());
        let expect = [[10.0, -10.0], [-10.0, 10.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - expect[i][j]).abs() < 1e-14);
                assert!(h[(i, 2 + j)].abs() < 1e-14);
            }
        }
        let e = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        assert!((&h * e).amax() < 1e-14);
    }

    #[test]
    fn lossless_phi_vanishes() {
        let op = OperatingPoint {
            theta: vec![0.1, -0.2],
            v: vec![1.02, 0.97],
        };
        let g = DMatrix::zeros(2, 2);
        assert_eq!(phi(&op, &g).amax(), 0.0);
        assert_eq!(phi_jacobian(&op, &g).amax(), 0.0);
    }
}
