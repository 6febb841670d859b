mod common;

use common::*;
use nalgebra::DMatrix;
use pgrid_core::linalg::symmetrized;
use pgrid_core::network::{index_matrix, phi, phi_jacobian, wb_gradient, wb_hessian, wb_tilde};
use pgrid_core::{build_admittance, network_lambda, solve_power_flow, NetworkStorage, OperatingPoint};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lossless_gradient_equals_injections((y, op) in network_and_op(false)) {
        let diff = wb_gradient(&op, &y.b) - stacked_injections(&op, &y);
        prop_assert!(diff.amax() < 1e-10, "{}", diff.amax());
    }

    #[test]
    fn potential_gradient_matches_differences((y, op) in network_and_op(false)) {
        let n = op.len();
        let fd = fd_jacobian(&op, 1e-6, |p| nalgebra::DVector::from_element(1, wb_tilde(p, &y.b)));
        let g = wb_gradient(&op, &y.b);
        for k in 0..2 * n {
            prop_assert!((fd[(0, k)] - g[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn lossy_injections_split_into_potential_and_remainder((y, op) in network_and_op(true)) {
        let r = stacked_injections(&op, &y) - wb_gradient(&op, &y.b) - phi(&op, &y.g);
        prop_assert!(r.amax() < 1e-10);
    }

    #[test]
    fn hessian_matches_differenced_gradient((y, op) in network_and_op(false)) {
        let fd = fd_jacobian(&op, 1e-5, |p| wb_gradient(p, &y.b));
        let h = wb_hessian(&op, &y.b);
        prop_assert!((&fd - &h).amax() < 1e-6);
        prop_assert!((&h - h.transpose()).amax() < 1e-12);
    }

    #[test]
    fn phi_jacobian_matches_differences((y, op) in network_and_op(true)) {
        let fd = fd_jacobian(&op, 1e-5, |p| phi(p, &y.g));
        prop_assert!((fd - phi_jacobian(&op, &y.g)).amax() < 1e-6);
    }

    #[test]
    fn uniform_angle_shift_leaves_potential_and_index_unchanged(
        (y, op) in network_and_op(true),
        shift in -3.0f64..3.0,
    ) {
        let moved = op.shifted(shift);
        prop_assert!((wb_tilde(&op, &y.b) - wb_tilde(&moved, &y.b)).abs() < 1e-10);
        let (m0, _) = index_matrix(&op, &y);
        let (m1, _) = index_matrix(&moved, &y);
        prop_assert!((m0 - m1).amax() < 1e-10);
    }

    #[test]
    fn lambda_agrees_with_jacobi_oracle((y, op) in network_and_op(true)) {
        let triplet = pgrid_core::EquilibriumTriplet::from_operating_point(op, &y);
        let idx = network_lambda(&triplet, &y).unwrap();
        let oracle = jacobi_eigenvalues(idx.hessian.clone())[0];
        prop_assert!((idx.lambda - oracle).abs() < 1e-8 * oracle.abs().max(1.0));
    }

    #[test]
    fn storage_curvature_is_lambda_plus_smallest_sigma(
        (y, op) in network_and_op(true),
        raw in proptest::collection::vec(0.0f64..3.0, 8),
    ) {
        let n = op.len();
        let triplet = pgrid_core::EquilibriumTriplet::from_operating_point(op.clone(), &y);
        let lambda = network_lambda(&triplet, &y).unwrap().lambda;
        // Uniform σ shifts the spectrum exactly; mixed σ is bracketed by its extremes.
        let sigma: Vec<f64> = raw[..n].iter().map(|s| s - lambda).collect();
        let storage = NetworkStorage::new(op.clone(), sigma.clone(), &y).unwrap();
        let curv = storage.min_curvature().unwrap();
        let lo = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(curv >= lambda + lo - 1e-9);
        prop_assert!(curv <= lambda + hi + 1e-9);

        let uniform = NetworkStorage::new(op, vec![raw[0] - lambda; n], &y).unwrap();
        prop_assert!((uniform.min_curvature().unwrap() - raw[0]).abs() < 1e-8);
    }
}

#[test]
fn two_bus_active_power_is_sine_of_angle_difference() {
    let y = pgrid_core::Admittance {
        g: DMatrix::zeros(2, 2),
        b: DMatrix::from_row_slice(2, 2, &[-10.0, 10.0, 10.0, -10.0]),
    };
    let op = OperatingPoint {
        theta: vec![0.1, 0.0],
        v: vec![1.0, 1.0],
    };
    let inj = stacked_injections(&op, &y);
    let expect = 10.0 * 0.1f64.sin();
    assert!((inj[0] - expect).abs() < 1e-14);
    assert!((inj[1] + expect).abs() < 1e-14);
    assert!((wb_gradient(&op, &y.b)[0] - expect).abs() < 1e-14);
}

#[test]
fn lossy_remainder_jacobian_is_not_symmetric() {
    let y = build_admittance(&case3(0.01));
    let op = OperatingPoint {
        theta: vec![0.0, 0.05, -0.1],
        v: vec![1.0, 1.01, 0.97],
    };
    let j = phi_jacobian(&op, &y.g);
    assert!((&j - j.transpose()).amax() > 1e-3);
    assert!((symmetrized(&j) - symmetrized(&j.transpose())).amax() < 1e-15);
}

#[test]
fn storage_vanishes_with_zero_slope_at_the_equilibrium() {
    let case = case3(0.01);
    let y = build_admittance(&case);
    let pf = solve_power_flow(&case).unwrap();
    let y_star = pf.triplet.y_star.clone();
    let storage = NetworkStorage::new(y_star.clone(), vec![0.5; 3], &y).unwrap();
    assert!(storage.evaluate(&y_star).abs() < 1e-12);
    assert!(storage.gradient(&y_star).amax() < 1e-12);
    let fd = fd_jacobian(&y_star, 1e-6, |p| nalgebra::DVector::from_element(1, storage.evaluate(p)));
    assert!(fd.amax() < 1e-8);
}

#[test]
fn three_bus_lambda_falls_with_load() {
    let base = case3(0.01);
    let mut prev = f64::INFINITY;
    for k in 0..=8 {
        let s = 0.5 + 0.25 * k as f64;
        let case = base.with_scale(s).unwrap();
        let pf = solve_power_flow(&case).unwrap();
        let lambda = network_lambda(&pf.triplet, &build_admittance(&case)).unwrap().lambda;
        assert!(lambda < prev, "λ({}) = {} not below {}", s, lambda, prev);
        prev = lambda;
    }
    assert!(prev < 0.0);
}
