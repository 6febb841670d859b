mod common;

use common::*;
use pgrid_core::cct::is_stable_after;
use pgrid_core::{
    build_admittance, compute_cct, network_lambda, solve_power_flow, CctOptions, Error, FaultScenario, Integrator,
    PowerSystem, StabilityCriteria,
};

fn system(offset: f64) -> PowerSystem {
    let case = case3(0.01);
    let pf = solve_power_flow(&case).unwrap();
    let lambda = network_lambda(&pf.triplet, &build_admittance(&case)).unwrap().lambda;
    PowerSystem::from_solution(&case, &pf, &case3_devices(), &[-lambda + offset; 3], 0.05).unwrap()
}

fn relaxed() -> StabilityCriteria {
    StabilityCriteria {
        horizon: 20.0,
        tail: 4.0,
        threshold: 5e-2,
        sample: 0.02,
    }
}

fn options(g: f64) -> CctOptions {
    CctOptions {
        fault_conductance: g,
        criteria: relaxed(),
        ..CctOptions::default()
    }
}

fn stable(sys: &PowerSystem, bus: usize, t_clear: f64, g: f64) -> bool {
    let fault = FaultScenario {
        bus,
        t_on: 0.0,
        t_clear,
        fault_conductance: g,
    };
    is_stable_after(sys, &fault, &relaxed(), &Integrator::default()).unwrap()
}

#[test]
fn bisection_brackets_the_stability_boundary() {
    let sys = system(2.0);
    let opts = options(100.0);
    let r = compute_cct(&sys, 2, &opts).unwrap();
    assert!(r.unstable_at - r.cct <= opts.tolerance);
    assert!(r.cct >= opts.lo && r.unstable_at <= opts.hi);
    assert!(stable(&sys, 2, r.cct, 100.0));
    assert!(!stable(&sys, 2, r.unstable_at, 100.0));
    let expected = ((opts.hi - opts.lo) / opts.tolerance).log2().ceil() as usize;
    assert_eq!(r.iterations, expected);
}

#[test]
fn harmless_fault_is_always_stable() {
    let sys = system(2.0);
    let err = compute_cct(&sys, 1, &options(0.0)).unwrap_err();
    assert_eq!(err, Error::AlwaysStable { hi: 1.0 });
}

#[test]
fn invalid_requests_are_rejected() {
    let sys = system(2.0);
    assert!(matches!(compute_cct(&sys, 7, &options(100.0)), Err(Error::Index { index: 7, len: 3 })));
    let mut opts = options(100.0);
    opts.hi = opts.lo;
    assert!(matches!(compute_cct(&sys, 0, &opts), Err(Error::Validation(_))));
}

#[test]
fn unfaulted_equilibrium_passes_the_default_test() {
    let sys = system(2.0);
    let fault = FaultScenario {
        bus: 0,
        t_on: 0.0,
        t_clear: 0.1,
        fault_conductance: 0.0,
    };
    assert!(is_stable_after(&sys, &fault, &StabilityCriteria::default(), &Integrator::default()).unwrap());
}
