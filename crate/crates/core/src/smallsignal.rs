//! Linearization of the closed loop and the exact minimal uniform σ.
//!
//! The Jacobian is taken by central differences of the full right-hand side so
//! that it does not share any hand-derived derivative with the certificate.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};

use crate::devices::DEFAULT_MARGIN;
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::linalg::{eigenvalues, spectral_abscissa};
use crate::powerflow::PowerFlowSolution;
use crate::system::{DeviceSpec, PowerSystem};

/// Relative step for the linearization.
pub const LINEARIZATION_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    pub jacobian: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_abscissa: f64,
}

impl LinearizedSystem {
    pub fn is_hurwitz(&self) -> bool {
        self.spectral_abscissa < 0.0
    }
}

/// Central-difference Jacobian of the closed loop at `x`, step `h·max(1, |x_k|)`.
pub fn jacobian_at(sys: &PowerSystem, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let m = sys.dim();
    let mut jac = DMatrix::zeros(m, m);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for k in 0..m {
        let step = h * x[k].abs().max(1.0);
        xp[k] = x[k] + step;
        sys.rhs(&xp, &mut fp)?;
        xp[k] = x[k] - step;
        sys.rhs(&xp, &mut fm)?;
        xp[k] = x[k];
        for r in 0..m {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    Ok(jac)
}

pub fn linearize_at(sys: &PowerSystem, x: &[f64]) -> Result<LinearizedSystem> {
    let jacobian = jacobian_at(sys, x, LINEARIZATION_STEP)?;
    let eigenvalues = eigenvalues(&jacobian)?;
    let spectral_abscissa = spectral_abscissa(&eigenvalues);
    Ok(LinearizedSystem {
        jacobian,
        eigenvalues,
        spectral_abscissa,
    })
}

/// Linearization at the equilibrium `x*`.
pub fn linearize(sys: &PowerSystem) -> Result<LinearizedSystem> {
    linearize_at(sys, sys.x_star())
}

/// Lowest uniform σ for which every device still has positive droop gains.
pub fn sigma_floor(sys_case: &PowerFlowSolution, specs: &[DeviceSpec], margin: f64) -> f64 {
    let tr = &sys_case.triplet;
    let mut floor = f64::NEG_INFINITY;
    for s in specs {
        let sp = crate::devices::Setpoint {
            theta: tr.y_star.theta[s.bus],
            v: tr.y_star.v[s.bus],
            p: tr.p_star[s.bus],
            q: tr.q_star[s.bus],
        };
        if let Some(f) = s.kind.sigma_floor(&sp, margin) {
            floor = floor.max(f);
        }
    }
    floor
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSigmaOptions {
    pub margin: f64,
    pub tolerance: f64,
    /// Bracket offsets below and above −λ.
    pub below: f64,
    pub above: f64,
    pub max_widenings: usize,
}

impl Default for MinSigmaOptions {
    fn default() -> Self {
        MinSigmaOptions {
            margin: DEFAULT_MARGIN,
            tolerance: 1e-4,
            below: 2.0,
            above: 5.0,
            max_widenings: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSigma {
    pub sigma: f64,
    /// Spectral abscissa at `sigma`.
    pub abscissa: f64,
    /// The system is already stable at the lowest σ with positive gains.
    pub at_floor: bool,
    pub evaluations: usize,
}

/// Spectral abscissa with all devices synthesized for the uniform index `sigma`.
pub fn abscissa_for_sigma(
    case: &NetworkCase,
    pf: &PowerFlowSolution,
    specs: &[DeviceSpec],
    sigma: f64,
    margin: f64,
) -> Result<f64> {
    let sigmas = vec![sigma; case.len()];
    let sys = PowerSystem::from_solution(case, pf, specs, &sigmas, margin)?;
    Ok(linearize(&sys)?.spectral_abscissa)
}

/// Bisection on uniform σ for the onset of small-signal stability.
///
/// `neg_lambda` centres the default bracket `[−λ − below, −λ + above]`.
pub fn min_sigma_exact(
    case: &NetworkCase,
    pf: &PowerFlowSolution,
    specs: &[DeviceSpec],
    neg_lambda: f64,
    opts: &MinSigmaOptions,
) -> Result<MinSigma> {
    let floor = sigma_floor(pf, specs, opts.margin) + opts.tolerance;
    let mut evaluations = 0usize;
    let mut eval = |s: f64| -> Result<f64> {
        evaluations += 1;
        abscissa_for_sigma(case, pf, specs, s, opts.margin)
    };
    let mut lo = (neg_lambda - opts.below).max(floor);
    let mut hi = (neg_lambda + opts.above).max(lo + opts.tolerance);

    let mut a_hi = eval(hi)?;
    let mut widen = 0;
    while a_hi >= 0.0 {
        if widen == opts.max_widenings {
            return Err(Error::Bracket { lo, hi });
        }
        widen += 1;
        hi = lo + 2.0 * (hi - lo);
        a_hi = eval(hi)?;
    }
    let mut a_lo = eval(lo)?;
    let mut widen = 0;
    while a_lo < 0.0 {
        if lo <= floor {
            return Ok(MinSigma {
                sigma: lo,
                abscissa: a_lo,
                at_floor: true,
                evaluations,
            });
        }
        if widen == opts.max_widenings {
            return Err(Error::Bracket { lo, hi });
        }
        widen += 1;
        lo = (hi - 2.0 * (hi - lo)).max(floor);
        a_lo = eval(lo)?;
    }
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        let a = eval(mid)?;
        if a < 0.0 {
            hi = mid;
            a_hi = a;
        } else {
            lo = mid;
        }
    }
    Ok(MinSigma {
        sigma: hi,
        abscissa: a_hi,
        at_floor: false,
        evaluations,
    })
}
