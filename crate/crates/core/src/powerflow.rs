//! AC power flow in polar coordinates.
//!
//! Variables are always ordered `(θ_1..θ_n, V_1..V_n)`. The bus injection
//! convention is generation-positive: `P_i > 0` means bus `i` delivers active
//! power into the network.

use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, sin};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{build_admittance, Admittance, BusRole, NetworkCase};

pub const PF_TOLERANCE: f64 = 1e-10;
pub const PF_MAX_ITERATIONS: usize = 50;

/// Bus voltage angles (rad) and magnitudes (pu).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
}

impl OperatingPoint {
    pub fn flat(n: usize) -> Self {
        OperatingPoint {
            theta: vec![0.0; n],
            v: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Stacked vector `y = (θ, V)`.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            2 * self.len(),
            self.theta.iter().chain(self.v.iter()).copied(),
        )
    }

    pub fn from_slice(y: &[f64]) -> Self {
        let n = y.len() / 2;
        OperatingPoint {
            theta: y[..n].to_vec(),
            v: y[n..2 * n].to_vec(),
        }
    }

    pub fn shifted(&self, angle: f64) -> Self {
        OperatingPoint {
            theta: self.theta.iter().map(|t| t + angle).collect(),
            v: self.v.clone(),
        }
    }
}

/// Active and reactive injections at every bus.
pub fn injections(op: &OperatingPoint, y: &Admittance) -> (Vec<f64>, Vec<f64>) {
    let n = op.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let vi = op.v[i];
        let mut pi = y.g[(i, i)] * vi * vi;
        let mut qi = -y.b[(i, i)] * vi * vi;
        for j in 0..n {
            if j == i {
                continue;
            }
            let (gij, bij) = (y.g[(i, j)], y.b[(i, j)]);
            if gij == 0.0 && bij == 0.0 {
                continue;
            }
            let tij = op.theta[i] - op.theta[j];
            let (s, c) = (sin(tij), cos(tij));
            let vv = vi * op.v[j];
            pi += vv * (bij * s + gij * c);
            qi -= vv * (bij * c - gij * s);
        }
        p[i] = pi;
        q[i] = qi;
    }
    (p, q)
}

/// Steady state anchoring all downstream computations.
///
/// `x_star` stays empty until device models are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumTriplet {
    pub y_star: OperatingPoint,
    /// `(-P_1..-P_n, -Q_1/V_1..-Q_n/V_n)`.
    pub u_star: Vec<f64>,
    pub x_star: Vec<f64>,
    pub p_star: Vec<f64>,
    pub q_star: Vec<f64>,
}

impl EquilibriumTriplet {
    pub fn from_operating_point(op: OperatingPoint, y: &Admittance) -> Self {
        let (p, q) = injections(&op, y);
        let n = op.len();
        let mut u = vec![0.0; 2 * n];
        for i in 0..n {
            u[i] = -p[i];
            u[n + i] = -q[i] / op.v[i];
        }
        EquilibriumTriplet {
            y_star: op,
            u_star: u,
            x_star: Vec::new(),
            p_star: p,
            q_star: q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub triplet: EquilibriumTriplet,
    pub iterations: usize,
    pub residual: f64,
}

struct Layout {
    /// Buses whose angle is unknown (PV and PQ).
    angle: Vec<usize>,
    /// Buses whose magnitude is unknown (PQ).
    mag: Vec<usize>,
}

/// Newton-Raphson from a flat start.
pub fn solve_power_flow(case: &NetworkCase) -> Result<PowerFlowSolution> {
    let y = build_admittance(case);
    let n = case.len();
    let sched = case.scaled_loads();
    let layout = Layout {
        angle: (0..n)
            .filter(|&i| case.buses[i].role != BusRole::Slack)
            .collect(),
        mag: (0..n)
            .filter(|&i| case.buses[i].role == BusRole::PQ)
            .collect(),
    };
    let mut op = OperatingPoint::flat(n);
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.role != BusRole::PQ {
            op.v[i] = bus.v_set;
        }
    }
    let na = layout.angle.len();
    let dim = na + layout.mag.len();

    let mut residual = f64::INFINITY;
    for iteration in 1..=PF_MAX_ITERATIONS {
        let (p, q) = injections(&op, &y);
        let mut mismatch = DVector::zeros(dim);
        for (k, &i) in layout.angle.iter().enumerate() {
            mismatch[k] = sched[i].0 - p[i];
        }
        for (k, &i) in layout.mag.iter().enumerate() {
            mismatch[na + k] = sched[i].1 - q[i];
        }
        residual = mismatch.amax();
        if !residual.is_finite() {
            break;
        }
        if residual < PF_TOLERANCE {
            if let Some(&bad) = op.v.iter().find(|v| !(**v > 0.0)) {
                return Err(Error::Domain {
                    bus: op.v.iter().position(|v| *v == bad),
                    value: bad,
                });
            }
            let theta0 = op.theta[case.slack()];
            let op = op.shifted(-theta0);
            return Ok(PowerFlowSolution {
                triplet: EquilibriumTriplet::from_operating_point(op, &y),
                iterations: iteration,
                residual,
            });
        }
        let jac = jacobian(&op, &y, &p, &q, &layout);
        let lu = jac.lu();
        let step = match lu.solve(&mismatch) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                return Err(Error::SingularJacobian {
                    iteration,
                    condition: condition_estimate(lu.u().diagonal().as_slice()),
                })
            }
        };
        for (k, &i) in layout.angle.iter().enumerate() {
            op.theta[i] += step[k];
        }
        for (k, &i) in layout.mag.iter().enumerate() {
            op.v[i] += step[na + k];
        }
    }
    Err(Error::NonConvergence {
        iterations: PF_MAX_ITERATIONS,
        residual,
    })
}

fn condition_estimate(pivots: &[f64]) -> f64 {
    let max = pivots.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let min = pivots.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn jacobian(
    op: &OperatingPoint,
    y: &Admittance,
    p: &[f64],
    q: &[f64],
    layout: &Layout,
) -> DMatrix<f64> {
    let na = layout.angle.len();
    let dim = na + layout.mag.len();
    let mut jac = DMatrix::zeros(dim, dim);
    // partials of (P_i, Q_i) w.r.t. (θ_j, V_j)
    let partial = |i: usize, j: usize| -> [f64; 4] {
        let (vi, vj) = (op.v[i], op.v[j]);
        if i == j {
            let (gii, bii) = (y.g[(i, i)], y.b[(i, i)]);
            [
                -q[i] - bii * vi * vi,
                p[i] / vi + gii * vi,
                p[i] - gii * vi * vi,
                q[i] / vi - bii * vi,
            ]
        } else {
            let (gij, bij) = (y.g[(i, j)], y.b[(i, j)]);
            let tij = op.theta[i] - op.theta[j];
            let (s, c) = (sin(tij), cos(tij));
            [
                vi * vj * (gij * s - bij * c),
                vi * (gij * c + bij * s),
                -vi * vj * (gij * c + bij * s),
                vi * (gij * s - bij * c),
            ]
        }
    };
    for (r, &i) in layout.angle.iter().enumerate() {
        for (c, &j) in layout.angle.iter().enumerate() {
            jac[(r, c)] = partial(i, j)[0];
        }
        for (c, &j) in layout.mag.iter().enumerate() {
            jac[(r, na + c)] = partial(i, j)[1];
        }
    }
    for (r, &i) in layout.mag.iter().enumerate() {
        for (c, &j) in layout.angle.iter().enumerate() {
            jac[(na + r, c)] = partial(i, j)[2];
        }
        for (c, &j) in layout.mag.iter().enumerate() {
            jac[(na + r, na + c)] = partial(i, j)[3];
        }
    }
    jac
}
