#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pgrid_core::devices::{DeviceKind, DroopParams, SgParams};
use pgrid_core::grid::{Bus, BusRole, Line, NetworkCase};
use pgrid_core::powerflow::injections;
use pgrid_core::{Admittance, DeviceSpec, OperatingPoint};
use proptest::prelude::*;

pub const THREE_BUS_SG: SgParams = SgParams {
    m: 0.16,
    d: 0.076,
    td0: 6.56,
    xd: 0.295,
    xd_prime: 0.17,
};

/// Three-bus triangle: SG slack, QD source, CD load.
pub fn case3(r: f64) -> NetworkCase {
    let mut b0 = Bus::new(0, BusRole::Slack);
    b0.v_set = 1.0;
    let b1 = Bus::new(1, BusRole::PV);
    let b2 = Bus::new(2, BusRole::PQ);
    let lines = vec![Line::new(0, 1, r, 0.1), Line::new(1, 2, r, 0.1), Line::new(0, 2, r, 0.1)];
    NetworkCase::new(vec![b0, b1, b2], lines, vec![(0.0, 0.0), (1.0, 0.0), (-1.5, -0.1)], 1.0, false).unwrap()
}

pub fn case3_devices() -> Vec<DeviceSpec> {
    vec![
        DeviceSpec {
            bus: 0,
            kind: DeviceKind::Sg(THREE_BUS_SG),
            sigma: None,
            name: Some("SG1".into()),
        },
        DeviceSpec {
            bus: 1,
            kind: DeviceKind::Qd(DroopParams { tau1: 0.7, tau2: 8.0 }),
            sigma: None,
            name: Some("QD2".into()),
        },
        DeviceSpec {
            bus: 2,
            kind: DeviceKind::Cd(DroopParams { tau1: 1.0, tau2: 10.0 }),
            sigma: None,
            name: Some("CD3".into()),
        },
    ]
}

/// Direct evaluation of `(P, Q/V)` in the (θ, V) ordering.
pub fn stacked_injections(op: &OperatingPoint, y: &Admittance) -> DVector<f64> {
    let (p, q) = injections(op, y);
    let n = op.len();
    DVector::from_iterator(2 * n, p.iter().copied().chain(q.iter().zip(&op.v).map(|(q, v)| q / v)))
}

/// Central differences of a vector function of the stacked operating point.
pub fn fd_jacobian(op: &OperatingPoint, h: f64, f: impl Fn(&OperatingPoint) -> DVector<f64>) -> DMatrix<f64> {
    let y: Vec<f64> = op.theta.iter().chain(&op.v).copied().collect();
    let m = y.len();
    let rows = f(op).len();
    let mut jac = DMatrix::zeros(rows, m);
    for k in 0..m {
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[k] += h;
        ym[k] -= h;
        let col = (f(&OperatingPoint::from_slice(&yp)) - f(&OperatingPoint::from_slice(&ym))) / (2.0 * h);
        jac.set_column(k, &col);
    }
    jac
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
    e
}

/// Connected random network: a spanning tree plus extra lines.
pub fn network_strategy(lossy: bool) -> impl Strategy<Value = Admittance> {
    (2usize..7).prop_flat_map(move |n| {
        let tree = proptest::collection::vec((0.0f64..1.0, 0.02f64..0.5, 0.0f64..0.05), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n, 0.02f64..0.5, 0.0f64..0.05), 0..n);
        let shunts = proptest::collection::vec((-0.1f64..0.1, 0.0f64..0.05), n);
        (Just(n), tree, extra, shunts).prop_map(move |(n, tree, extra, shunts)| {
            let mut g = DMatrix::zeros(n, n);
            let mut b = DMatrix::zeros(n, n);
            let mut add = |i: usize, j: usize, x: f64, r: f64| {
                let r = if lossy { r } else { 0.0 };
                let d = r * r + x * x;
                let (gl, bl) = (r / d, -x / d);
                g[(i, i)] += gl;
                g[(j, j)] += gl;
                g[(i, j)] -= gl;
                g[(j, i)] -= gl;
                b[(i, i)] += bl;
                b[(j, j)] += bl;
                b[(i, j)] -= bl;
                b[(j, i)] -= bl;
            };
            for (k, (pick, x, r)) in tree.into_iter().enumerate() {
                let i = k + 1;
                let j = ((pick * i as f64) as usize).min(i - 1);
                add(i, j, x, r);
            }
            for (i, j, x, r) in extra {
                if i != j {
                    add(i, j, x, r);
                }
            }
            for (k, (bs, gs)) in shunts.into_iter().enumerate() {
                b[(k, k)] += bs;
                if lossy {
                    g[(k, k)] += gs;
                }
            }
            Admittance { g, b }
        })
    })
}

pub fn op_strategy(n: usize) -> impl Strategy<Value = OperatingPoint> {
    (
        proptest::collection::vec(-0.5f64..0.5, n),
        proptest::collection::vec(0.9f64..1.1, n),
    )
        .prop_map(|(theta, v)| OperatingPoint { theta, v })
}

pub fn network_and_op(lossy: bool) -> impl Strategy<Value = (Admittance, OperatingPoint)> {
    network_strategy(lossy).prop_flat_map(|y| {
        let n = y.len();
        (Just(y), op_strategy(n))
    })
}
