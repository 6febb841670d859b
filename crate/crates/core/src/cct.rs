//! Critical clearing time by bisection on the fault duration.

use alloc::vec;

use crate::error::{Error, Result};
use crate::ode::Integrator;
use crate::system::{FaultScenario, PowerSystem, FAULT_CONDUCTANCE};

/// Post-clearing convergence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCriteria {
    /// Simulated time after clearing (s).
    pub horizon: f64,
    /// Final window in which the distance to `x*` must not grow (s).
    pub tail: f64,
    /// Bound on `‖x(T) − x*‖`.
    pub threshold: f64,
    /// Sampling interval for the tail test (s).
    pub sample: f64,
}

impl Default for StabilityCriteria {
    fn default() -> Self {
        StabilityCriteria {
            horizon: 10.0,
            tail: 2.0,
            threshold: 1e-3,
            sample: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CctOptions {
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
    pub fault_conductance: f64,
    pub criteria: StabilityCriteria,
    pub integrator: Integrator,
}

impl Default for CctOptions {
    fn default() -> Self {
        CctOptions {
            lo: 0.01,
            hi: 1.0,
            tolerance: 1e-3,
            fault_conductance: FAULT_CONDUCTANCE,
            criteria: StabilityCriteria::default(),
            integrator: Integrator::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CctResult {
    /// Longest clearing time verified stable.
    pub cct: f64,
    /// Shortest clearing time verified unstable.
    pub unstable_at: f64,
    pub iterations: usize,
}

/// Whether the system returns to `x*` after `fault` starting from `x*`.
///
/// Integration failures (voltage collapse, step underflow) count as unstable.
pub fn is_stable_after(sys: &PowerSystem, fault: &FaultScenario, criteria: &StabilityCriteria, integrator: &Integrator) -> Result<bool> {
    fault.validate(sys.n_buses())?;
    let t_end = fault.t_clear + criteria.horizon;
    let traj = match sys.simulate(sys.x_star(), t_end, Some(fault), integrator) {
        Ok(t) => t,
        Err(Error::Domain { .. }) | Err(Error::StepSizeUnderflow { .. }) | Err(Error::StepLimit { .. }) => {
            return Ok(false)
        }
        Err(e) => return Err(e),
    };
    let terminal = sys.distance(traj.last_state());
    if !(terminal < criteria.threshold) {
        return Ok(false);
    }
    // the later half of the tail may not reach above the earlier half
    let half = 0.5 * criteria.tail;
    let mut x = vec![0.0; sys.dim()];
    let mut peak = [0.0f64; 2];
    let samples = libm::ceil(half / criteria.sample).max(1.0) as usize;
    for (w, start) in [t_end - criteria.tail, t_end - half].into_iter().enumerate() {
        for k in 0..=samples {
            let t = start + half * k as f64 / samples as f64;
            traj.interpolate(t, &mut x);
            peak[w] = peak[w].max(sys.distance(&x));
        }
    }
    Ok(peak[1] <= peak[0])
}

pub fn compute_cct(sys: &PowerSystem, bus: usize, opts: &CctOptions) -> Result<CctResult> {
    if bus >= sys.n_buses() {
        return Err(Error::Index {
            index: bus,
            len: sys.n_buses(),
        });
    }
    if !(opts.lo > 0.0 && opts.hi > opts.lo && opts.tolerance > 0.0) {
        return Err(Error::Validation("CCT search needs 0 < lo < hi and tolerance > 0".into()));
    }
    let stable = |t_clear: f64| -> Result<bool> {
        let fault = FaultScenario {
            bus,
            t_on: 0.0,
            t_clear,
            fault_conductance: opts.fault_conductance,
        };
        is_stable_after(sys, &fault, &opts.criteria, &opts.integrator)
    };
    let (mut lo, mut hi) = (opts.lo, opts.hi);
    if !stable(lo)? {
        return Err(Error::NeverStable { lo });
    }
    if stable(hi)? {
        return Err(Error::AlwaysStable { hi });
    }
    let mut iterations = 0;
    while hi - lo > opts.tolerance {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CctResult {
        cct: lo,
        unstable_at: hi,
        iterations,
    })
}
