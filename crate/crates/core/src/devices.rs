//! Bus dynamics: flux-decay synchronous generator, conventional droop and
//! quadratic droop inverters.
//!
//! Every model maps the bus input `u = (-P, -Q/V)` to the output `y = (θ, V)`.
//! For the generator the output is the internal EMF `(δ, E_q')`, i.e. the
//! network is assumed reduced to the generator internal nodes.

use alloc::format;

use libm::log;

use crate::error::{Error, Result};

/// Default strictness headroom added to every gain bound.
pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgParams {
    /// Inertia M.
    pub m: f64,
    /// Damping D.
    pub d: f64,
    /// q-axis open-circuit transient time constant T_d0'.
    pub td0: f64,
    pub xd: f64,
    pub xd_prime: f64,
}

impl SgParams {
    fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.td0 > 0.0 && self.xd_prime > 0.0 && self.xd > self.xd_prime) {
            return Err(Error::Validation(format!(
                "generator needs M > 0, T_d0' > 0 and xd > xd' > 0: {:?}",
                self
            )));
        }
        Ok(())
    }

    fn dx(&self) -> f64 {
        self.xd - self.xd_prime
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroopParams {
    pub tau1: f64,
    pub tau2: f64,
}

impl DroopParams {
    fn validate(&self) -> Result<()> {
        if !(self.tau1 > 0.0 && self.tau2 > 0.0) {
            return Err(Error::Validation(format!(
                "droop time constants must be positive: {:?}",
                self
            )));
        }
        Ok(())
    }
}

/// Device type and its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceKind {
    Sg(SgParams),
    Cd(DroopParams),
    Qd(DroopParams),
}

impl DeviceKind {
    pub fn tag(&self) -> &'static str {
        match self {
            DeviceKind::Sg(_) => "SG",
            DeviceKind::Cd(_) => "CD",
            DeviceKind::Qd(_) => "QD",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DeviceKind::Sg(_) => 3,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DeviceKind::Sg(p) => p.validate(),
            DeviceKind::Cd(p) | DeviceKind::Qd(p) => p.validate(),
        }
    }

    /// Lowest σ for which [`synthesize_gains`] yields positive gains, if any.
    pub fn sigma_floor(&self, sp: &Setpoint, margin: f64) -> Option<f64> {
        match self {
            DeviceKind::Sg(_) => None,
            DeviceKind::Qd(_) => Some(-margin),
            DeviceKind::Cd(_) => {
                let v = sp.v;
                Some((-margin).max((sp.q - margin * v) / (v * v)))
            }
        }
    }
}

/// Bus equilibrium the device is tuned around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub theta: f64,
    pub v: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gains {
    Sg { k_i: f64, k_p: f64, k_e: f64 },
    Droop { d1: f64, d2: f64 },
}

/// Gains meeting the passivity-index bounds for `sigma` with `margin` headroom.
pub fn synthesize_gains(kind: &DeviceKind, sigma: f64, margin: f64, sp: &Setpoint) -> Result<Gains> {
    if !sigma.is_finite() {
        return Err(Error::InfeasibleGain {
            bus: None,
            bound: format!("sigma must be finite, got {}", sigma),
        });
    }
    if !(margin > 0.0) {
        return Err(Error::InfeasibleGain {
            bus: None,
            bound: format!("margin must be positive, got {}", margin),
        });
    }
    let positive = |inv: f64, what: &str| -> Result<f64> {
        if inv > 0.0 {
            Ok(1.0 / inv)
        } else {
            Err(Error::InfeasibleGain {
                bus: None,
                bound: format!("{}^-1 = {} is not positive", what, inv),
            })
        }
    };
    match kind {
        DeviceKind::Sg(p) => Ok(Gains::Sg {
            k_i: sigma + margin,
            k_p: -p.d + margin,
            k_e: p.dx() * sigma - 1.0 + margin,
        }),
        DeviceKind::Cd(_) => {
            if !(sp.v > 0.0) {
                return Err(Error::Domain { bus: None, value: sp.v });
            }
            let d1 = positive(sigma + margin, "D1")?;
            let d2 = positive((sp.v * sp.v * sigma - sp.q) / sp.v + margin, "D2")?;
            Ok(Gains::Droop { d1, d2 })
        }
        DeviceKind::Qd(_) => {
            let d1 = positive(sigma + margin, "D1")?;
            let d2 = positive(sigma + margin, "D2")?;
            Ok(Gains::Droop { d1, d2 })
        }
    }
}

/// Strict bound check for `gains` at passivity index `sigma`.
pub fn gains_satisfy(kind: &DeviceKind, gains: &Gains, sigma: f64, sp: &Setpoint) -> bool {
    match (kind, gains) {
        (DeviceKind::Sg(p), Gains::Sg { k_i, k_p, k_e }) => {
            *k_i > sigma && *k_p > -p.d && *k_e > p.dx() * sigma - 1.0
        }
        (DeviceKind::Cd(_), Gains::Droop { d1, d2 }) => {
            *d1 > 0.0
                && *d2 > 0.0
                && 1.0 / d1 > sigma
                && 1.0 / d2 > (sp.v * sp.v * sigma - sp.q) / sp.v
        }
        (DeviceKind::Qd(_), Gains::Droop { d1, d2 }) => {
            *d1 > 0.0 && *d2 > 0.0 && 1.0 / d1 > sigma && 1.0 / d2 > sigma
        }
        _ => false,
    }
}

/// Terms of the strict output-differential dissipation inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyResidual {
    pub s_dot: f64,
    pub supply: f64,
    pub phi: f64,
    /// `s_dot - supply + phi`; zero for the three models here.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilityWitness {
    pub holds: bool,
    pub reason: &'static str,
    /// |dξ/dt| at the end of the clamped-output run (0 when structural).
    pub final_rate: f64,
}

/// A device with synthesized (or supplied) gains and back-computed set-points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusModel {
    pub kind: DeviceKind,
    pub gains: Gains,
    pub setpoint: Setpoint,
    pub sigma: f64,
}

impl BusModel {
    pub fn build(kind: DeviceKind, setpoint: Setpoint, sigma: f64, margin: f64) -> Result<Self> {
        kind.validate()?;
        let gains = synthesize_gains(&kind, sigma, margin, &setpoint)?;
        Self::with_gains(kind, gains, setpoint, sigma)
    }

    pub fn with_gains(kind: DeviceKind, gains: Gains, setpoint: Setpoint, sigma: f64) -> Result<Self> {
        kind.validate()?;
        let ok = matches!(
            (&kind, &gains),
            (DeviceKind::Sg(_), Gains::Sg { .. }) | (DeviceKind::Cd(_) | DeviceKind::Qd(_), Gains::Droop { .. })
        );
        if !ok {
            return Err(Error::Validation(format!(
                "gain record {:?} does not fit a {} device",
                gains,
                kind.tag()
            )));
        }
        if !(setpoint.v > 0.0) {
            return Err(Error::Domain {
                bus: None,
                value: setpoint.v,
            });
        }
        Ok(BusModel {
            kind,
            gains,
            setpoint,
            sigma,
        })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// State indices of (θ, V).
    pub fn output_indices(&self) -> (usize, usize) {
        match self.kind {
            DeviceKind::Sg(_) => (0, 2),
            _ => (0, 1),
        }
    }

    pub fn output(&self, x: &[f64]) -> (f64, f64) {
        let (a, b) = self.output_indices();
        (x[a], x[b])
    }

    pub fn equilibrium_state(&self, out: &mut [f64]) {
        let sp = &self.setpoint;
        match self.kind {
            DeviceKind::Sg(_) => {
                out[0] = sp.theta;
                out[1] = 0.0;
                out[2] = sp.v;
            }
            _ => {
                out[0] = sp.theta;
                out[1] = sp.v;
            }
        }
    }

    /// Equilibrium input `(-P*, -Q*/V*)`.
    pub fn u_star(&self) -> (f64, f64) {
        (-self.setpoint.p, -self.setpoint.q / self.setpoint.v)
    }

    pub fn gains_hold(&self) -> bool {
        gains_satisfy(&self.kind, &self.gains, self.sigma, &self.setpoint)
    }

    /// Constant of the quadratic-droop voltage loop that makes the set-point an equilibrium.
    pub fn qd_reference(&self) -> Option<f64> {
        match (self.kind, self.gains) {
            (DeviceKind::Qd(_), Gains::Droop { d2, .. }) => {
                let sp = &self.setpoint;
                Some(sp.v + d2 * sp.q / sp.v)
            }
            _ => None,
        }
    }

    /// Writes `dx/dt` for input `u = (-P, -Q/V)`.
    pub fn rhs(&self, x: &[f64], u: (f64, f64), dx: &mut [f64]) -> Result<()> {
        let sp = &self.setpoint;
        let p = -u.0;
        let q_over_v = -u.1;
        match (self.kind, self.gains) {
            (DeviceKind::Sg(prm), Gains::Sg { k_i, k_p, k_e }) => {
                let (delta, omega, e) = (x[0], x[1], x[2]);
                if !(e > 0.0) {
                    return Err(Error::Domain { bus: None, value: e });
                }
                let pg = -k_i * (delta - sp.theta) - k_p * omega + sp.p;
                let ef_star = sp.v + prm.dx() * sp.q / sp.v;
                let ef = -k_e * (e - sp.v) + ef_star;
                dx[0] = omega;
                dx[1] = (-prm.d * omega - p + pg) / prm.m;
                dx[2] = (-e - prm.dx() * q_over_v + ef) / prm.td0;
            }
            (DeviceKind::Cd(prm), Gains::Droop { d1, d2 }) => {
                let (theta, v) = (x[0], x[1]);
                if !(v > 0.0) {
                    return Err(Error::Domain { bus: None, value: v });
                }
                let q = q_over_v * v;
                dx[0] = (-(theta - sp.theta) - d1 * (p - sp.p)) / prm.tau1;
                dx[1] = (-(v - sp.v) - d2 * (q - sp.q)) / prm.tau2;
            }
            (DeviceKind::Qd(prm), Gains::Droop { d1, d2 }) => {
                let (theta, v) = (x[0], x[1]);
                if !(v > 0.0) {
                    return Err(Error::Domain { bus: None, value: v });
                }
                let q = q_over_v * v;
                let u_ref = sp.v + d2 * sp.q / sp.v;
                dx[0] = (-(theta - sp.theta) - d1 * (p - sp.p)) / prm.tau1;
                dx[1] = (-d2 * q - v * (v - u_ref)) / prm.tau2;
            }
            _ => unreachable!("kind/gain pairing checked at construction"),
        }
        Ok(())
    }

    /// Storage function, shifted so that it vanishes at the set-point.
    pub fn storage(&self, x: &[f64]) -> Result<f64> {
        let sp = &self.setpoint;
        let sigma = self.sigma;
        match (self.kind, self.gains) {
            (DeviceKind::Sg(prm), Gains::Sg { k_i, k_e, .. }) => {
                let dd = x[0] - sp.theta;
                let de = x[2] - sp.v;
                Ok(0.5 * prm.m * x[1] * x[1]
                    + 0.5 * (k_i - sigma) * dd * dd
                    + 0.5 * ((k_e + 1.0) / prm.dx() - sigma) * de * de)
            }
            (DeviceKind::Cd(_), Gains::Droop { d1, d2 }) => {
                let v = x[1];
                if !(v > 0.0) {
                    return Err(Error::Domain { bus: None, value: v });
                }
                let dt = x[0] - sp.theta;
                let dv = v - sp.v;
                let k = sp.v + d2 * sp.q;
                let log_term = (v / sp.v - log(v)) - (1.0 - log(sp.v));
                Ok(0.5 * (1.0 / d1 - sigma) * dt * dt + k / d2 * log_term - 0.5 * sigma * dv * dv)
            }
            (DeviceKind::Qd(_), Gains::Droop { d1, d2 }) => {
                let dt = x[0] - sp.theta;
                let dv = x[1] - sp.v;
                Ok(0.5 * (1.0 / d1 - sigma) * dt * dt + 0.5 * (1.0 / d2 - sigma) * dv * dv)
            }
            _ => unreachable!("kind/gain pairing checked at construction"),
        }
    }

    pub fn storage_gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let sp = &self.setpoint;
        let sigma = self.sigma;
        match (self.kind, self.gains) {
            (DeviceKind::Sg(prm), Gains::Sg { k_i, k_e, .. }) => {
                out[0] = (k_i - sigma) * (x[0] - sp.theta);
                out[1] = prm.m * x[1];
                out[2] = ((k_e + 1.0) / prm.dx() - sigma) * (x[2] - sp.v);
            }
            (DeviceKind::Cd(_), Gains::Droop { d1, d2 }) => {
                let v = x[1];
                if !(v > 0.0) {
                    return Err(Error::Domain { bus: None, value: v });
                }
                let k = sp.v + d2 * sp.q;
                out[0] = (1.0 / d1 - sigma) * (x[0] - sp.theta);
                out[1] = k / d2 * (1.0 / sp.v - 1.0 / v) - sigma * (v - sp.v);
            }
            (DeviceKind::Qd(_), Gains::Droop { d1, d2 }) => {
                out[0] = (1.0 / d1 - sigma) * (x[0] - sp.theta);
                out[1] = (1.0 / d2 - sigma) * (x[1] - sp.v);
            }
            _ => unreachable!("kind/gain pairing checked at construction"),
        }
        Ok(())
    }

    /// Dissipation margin φ(ẏ) for output rate `(θ̇, V̇)` at voltage `v`.
    pub fn dissipation(&self, theta_dot: f64, v_dot: f64, v: f64) -> f64 {
        match (self.kind, self.gains) {
            (DeviceKind::Sg(prm), Gains::Sg { k_p, .. }) => {
                (prm.d + k_p) * theta_dot * theta_dot + prm.td0 / prm.dx() * v_dot * v_dot
            }
            (DeviceKind::Cd(prm) | DeviceKind::Qd(prm), Gains::Droop { d1, d2 }) => {
                prm.tau1 / d1 * theta_dot * theta_dot + prm.tau2 / (d2 * v) * v_dot * v_dot
            }
            _ => unreachable!("kind/gain pairing checked at construction"),
        }
    }

    /// Storage rate, supply rate and dissipation at state `x` under input `u`.
    pub fn supply_residual(&self, x: &[f64], u: (f64, f64)) -> Result<SupplyResidual> {
        let mut dx = [0.0; 3];
        let mut grad = [0.0; 3];
        let n = self.dim();
        self.rhs(x, u, &mut dx[..n])?;
        self.storage_gradient(x, &mut grad[..n])?;
        let s_dot: f64 = grad[..n].iter().zip(&dx[..n]).map(|(g, d)| g * d).sum();
        let (ti, vi) = self.output_indices();
        let (theta_dot, v_dot) = (dx[ti], dx[vi]);
        let (du1, du2) = {
            let us = self.u_star();
            (u.0 - us.0, u.1 - us.1)
        };
        let dy = (x[ti] - self.setpoint.theta, x[vi] - self.setpoint.v);
        let supply = du1 * theta_dot + du2 * v_dot - self.sigma * (dy.0 * theta_dot + dy.1 * v_dot);
        let phi = self.dissipation(theta_dot, v_dot, x[vi]);
        Ok(SupplyResidual {
            s_dot,
            supply,
            phi,
            residual: s_dot - supply + phi,
        })
    }

    /// Evolution of the auxiliary state with the output clamped at `(θ, V)` and
    /// the input held at `u`. Returns `(ξ(T), dξ/dt(T))`; droop models have no
    /// auxiliary state and return zeros.
    pub fn clamped_output_response(&self, y: (f64, f64), u: (f64, f64), xi0: f64, horizon: f64) -> (f64, f64) {
        let (prm, k_i, k_p) = match (self.kind, self.gains) {
            (DeviceKind::Sg(prm), Gains::Sg { k_i, k_p, .. }) => (prm, k_i, k_p),
            _ => return (0.0, 0.0),
        };
        let sp = self.setpoint;
        let forcing = (-k_i * (y.0 - sp.theta) + u.0 + sp.p) / prm.m;
        let rate = |w: f64| forcing - (prm.d + k_p) * w / prm.m;
        // classical RK4 on the scalar frequency loop
        let steps = 20_000usize;
        let h = horizon / steps as f64;
        let mut w = xi0;
        for _ in 0..steps {
            let k1 = rate(w);
            let k2 = rate(w + 0.5 * h * k1);
            let k3 = rate(w + 0.5 * h * k2);
            let k4 = rate(w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !w.is_finite() {
                break;
            }
        }
        (w, rate(w))
    }

    /// Steady output implies steady state.
    pub fn check_steady_state_observability(&self) -> ObservabilityWitness {
        match (self.kind, self.gains) {
            (DeviceKind::Sg(prm), Gains::Sg { k_p, .. }) => {
                let damping = prm.d + k_p;
                if !(damping > 0.0) {
                    return ObservabilityWitness {
                        holds: false,
                        reason: "frequency loop undamped (K_P <= -D)",
                        final_rate: f64::INFINITY,
                    };
                }
                // 40 time constants of the clamped frequency loop
                let horizon = 40.0 * prm.m / damping;
                let xi0 = 0.1;
                let (w, rate) = self.clamped_output_response(
                    (self.setpoint.theta, self.setpoint.v),
                    self.u_star(),
                    xi0,
                    horizon,
                );
                let rate0 = damping * xi0 / prm.m;
                ObservabilityWitness {
                    holds: w.abs() < 1e-12 + 1e-9 * xi0 && rate.abs() < 1e-9 * rate0,
                    reason: "clamped output drives the frequency to rest",
                    final_rate: rate.abs(),
                }
            }
            _ => ObservabilityWitness {
                holds: true,
                reason: "state equals output",
                final_rate: 0.0,
            },
        }
    }
}
