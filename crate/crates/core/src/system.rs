//! The closed loop of bus dynamics and the power-flow network.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::devices::{BusModel, DeviceKind, Setpoint};
use crate::error::{Error, Result};
use crate::grid::{build_admittance, Admittance, NetworkCase};
use crate::ode::{integrate, Integrator, Trajectory};
use crate::powerflow::{injections, solve_power_flow, EquilibriumTriplet, OperatingPoint, PowerFlowSolution};

/// Device attached to one bus, as declared in a case file.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub bus: usize,
    pub kind: DeviceKind,
    /// Per-device passivity index; `None` takes the global value.
    pub sigma: Option<f64>,
    pub name: Option<String>,
}

/// Per-bus σ: declared values where present, `global` elsewhere.
pub fn resolve_sigmas(specs: &[DeviceSpec], n: usize, global: f64) -> Vec<f64> {
    let mut out = vec![global; n];
    for s in specs {
        if let (Some(v), true) = (s.sigma, s.bus < n) {
            out[s.bus] = v;
        }
    }
    out
}

/// Interconnected system: one device per bus, synthesized around the power-flow solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystem {
    pub case: NetworkCase,
    pub admittance: Admittance,
    /// Equilibrium with `x_star` filled in.
    pub triplet: EquilibriumTriplet,
    /// Models indexed by bus.
    pub models: Vec<BusModel>,
    pub names: Vec<Option<String>>,
    offsets: Vec<usize>,
    dim: usize,
}

impl PowerSystem {
    /// Solves the power flow and synthesizes every device for its σ.
    pub fn assemble(case: &NetworkCase, specs: &[DeviceSpec], sigmas: &[f64], margin: f64) -> Result<Self> {
        let pf = solve_power_flow(case)?;
        Self::from_solution(case, &pf, specs, sigmas, margin)
    }

    /// Like [`PowerSystem::assemble`] but reuses a power-flow solution.
    pub fn from_solution(
        case: &NetworkCase,
        pf: &PowerFlowSolution,
        specs: &[DeviceSpec],
        sigmas: &[f64],
        margin: f64,
    ) -> Result<Self> {
        let n = case.len();
        let ordered = order_specs(specs, n)?;
        if sigmas.len() != n {
            return Err(Error::Index {
                index: sigmas.len(),
                len: n,
            });
        }
        let tr = &pf.triplet;
        let mut models = Vec::with_capacity(n);
        for (bus, spec) in ordered.iter().enumerate() {
            let sp = Setpoint {
                theta: tr.y_star.theta[bus],
                v: tr.y_star.v[bus],
                p: tr.p_star[bus],
                q: tr.q_star[bus],
            };
            let model = BusModel::build(spec.kind, sp, sigmas[bus], margin).map_err(|e| with_bus(e, bus))?;
            models.push(model);
        }
        let names = ordered.iter().map(|s| s.name.clone()).collect();
        Self::from_models(case, tr.clone(), models, names)
    }

    /// Wraps already-built models (e.g. with hand-picked gains).
    pub fn from_models(
        case: &NetworkCase,
        mut triplet: EquilibriumTriplet,
        models: Vec<BusModel>,
        names: Vec<Option<String>>,
    ) -> Result<Self> {
        let n = case.len();
        if models.len() != n || triplet.y_star.len() != n {
            return Err(Error::Index {
                index: models.len(),
                len: n,
            });
        }
        let mut offsets = Vec::with_capacity(n);
        let mut dim = 0;
        for m in &models {
            offsets.push(dim);
            dim += m.dim();
        }
        let mut x_star = vec![0.0; dim];
        for (m, &o) in models.iter().zip(&offsets) {
            m.equilibrium_state(&mut x_star[o..o + m.dim()]);
        }
        triplet.x_star = x_star;
        Ok(PowerSystem {
            case: case.clone(),
            admittance: build_admittance(case),
            triplet,
            models,
            names,
            offsets,
            dim,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.models.len()
    }

    /// Total state dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self, bus: usize) -> usize {
        self.offsets[bus]
    }

    pub fn x_star(&self) -> &[f64] {
        &self.triplet.x_star
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.sigma).collect()
    }

    /// Global state index of bus `bus`'s angle and voltage.
    pub fn output_indices(&self, bus: usize) -> (usize, usize) {
        let (a, b) = self.models[bus].output_indices();
        (self.offsets[bus] + a, self.offsets[bus] + b)
    }

    pub fn outputs(&self, x: &[f64]) -> OperatingPoint {
        let n = self.n_buses();
        let mut op = OperatingPoint::flat(n);
        for bus in 0..n {
            let (a, b) = self.output_indices(bus);
            op.theta[bus] = x[a];
            op.v[bus] = x[b];
        }
        op
    }

    /// `dx/dt` with the nominal network.
    pub fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        self.rhs_with(&self.admittance, x, dx)
    }

    /// `dx/dt` with an arbitrary (e.g. faulted) admittance matrix.
    pub fn rhs_with(&self, y: &Admittance, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let op = self.outputs(x);
        if let Some(bus) = op.v.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Domain {
                bus: Some(bus),
                value: op.v[bus],
            });
        }
        let (p, q) = injections(&op, y);
        for (bus, m) in self.models.iter().enumerate() {
            let o = self.offsets[bus];
            let d = m.dim();
            let u = (-p[bus], -q[bus] / op.v[bus]);
            m.rhs(&x[o..o + d], u, &mut dx[o..o + d]).map_err(|e| with_bus(e, bus))?;
        }
        Ok(())
    }

    pub fn rhs_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut dx = vec![0.0; self.dim];
        self.rhs(x, &mut dx)?;
        Ok(dx)
    }

    /// Euclidean distance to `x*`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        sqrt(x.iter().zip(self.x_star()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    /// Integrates from `x0` at t = 0 to `t_end`, switching the network for `fault`.
    pub fn simulate(
        &self,
        x0: &[f64],
        t_end: f64,
        fault: Option<&FaultScenario>,
        method: &Integrator,
    ) -> Result<Trajectory> {
        if x0.len() != self.dim {
            return Err(Error::Index {
                index: x0.len(),
                len: self.dim,
            });
        }
        let nominal = &self.admittance;
        let segments: Vec<(f64, f64, Option<Admittance>)> = match fault {
            None => vec![(0.0, t_end, None)],
            Some(fs) => {
                fs.validate(self.n_buses())?;
                let faulted = fs.admittance(nominal);
                let mut segs = Vec::new();
                if fs.t_on > 0.0 {
                    segs.push((0.0, fs.t_on.min(t_end), None));
                }
                if t_end > fs.t_on {
                    segs.push((fs.t_on, fs.t_clear.min(t_end), Some(faulted)));
                }
                if t_end > fs.t_clear {
                    segs.push((fs.t_clear, t_end, None));
                }
                segs
            }
        };
        let mut traj = Trajectory::new(self.dim);
        let mut x = x0.to_vec();
        for (t0, t1, y) in segments {
            let adm = y.as_ref().unwrap_or(nominal);
            let mut f = |_t: f64, x: &[f64], dx: &mut [f64]| self.rhs_with(adm, x, dx);
            let seg = integrate(&mut f, t0, &x, t1, method)?;
            x.copy_from_slice(seg.last_state());
            traj.append(&seg);
        }
        Ok(traj)
    }

    /// Same system with bus `k` relabeled as bus `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let case = self.case.permuted(perm)?;
        let inv = inverse(perm);
        let y = &self.triplet.y_star;
        let op = OperatingPoint {
            theta: inv.iter().map(|&k| y.theta[k]).collect(),
            v: inv.iter().map(|&k| y.v[k]).collect(),
        };
        let triplet = EquilibriumTriplet::from_operating_point(op, &build_admittance(&case));
        let models = inv.iter().map(|&k| self.models[k]).collect();
        let names = inv.iter().map(|&k| self.names[k].clone()).collect();
        Self::from_models(&case, triplet, models, names)
    }

    /// Maps a state of `self` into the ordering of `self.permuted(perm)`.
    pub fn permute_state(&self, perm: &[usize], x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        for k in inverse(perm) {
            let o = self.offsets[k];
            out.extend_from_slice(&x[o..o + self.models[k].dim()]);
        }
        out
    }
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

fn with_bus(e: Error, bus: usize) -> Error {
    match e {
        Error::InfeasibleGain { bus: None, bound } => Error::InfeasibleGain { bus: Some(bus), bound },
        Error::Domain { bus: None, value } => Error::Domain { bus: Some(bus), value },
        other => other,
    }
}

fn order_specs(specs: &[DeviceSpec], n: usize) -> Result<Vec<&DeviceSpec>> {
    let mut slots: Vec<Option<&DeviceSpec>> = vec![None; n];
    for s in specs {
        if s.bus >= n {
            return Err(Error::Index { index: s.bus, len: n });
        }
        if slots[s.bus].is_some() {
            return Err(Error::Validation(format!("bus {} carries two devices", s.bus)));
        }
        slots[s.bus] = Some(s);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(bus, s)| s.ok_or_else(|| Error::Validation(format!("bus {} carries no device", bus))))
        .collect()
}

/// Default fault shunt conductance (pu).
///
/// Droop buses hold their voltage as a slow state, so a bolted fault at such a
/// bus draws a power of order `g·V²` and drives the angle controller at a rate
/// proportional to it. One per-unit keeps the faulted-bus demand comparable to
/// the nominal loads.
pub const FAULT_CONDUCTANCE: f64 = 1.0;

/// A shunt fault applied at `t_on` and cleared at `t_clear`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultScenario {
    pub bus: usize,
    pub t_on: f64,
    pub t_clear: f64,
    pub fault_conductance: f64,
}

impl FaultScenario {
    pub fn new(bus: usize, t_on: f64, t_clear: f64) -> Self {
        FaultScenario {
            bus,
            t_on,
            t_clear,
            fault_conductance: FAULT_CONDUCTANCE,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.bus >= n {
            return Err(Error::Index { index: self.bus, len: n });
        }
        if !(self.t_on >= 0.0 && self.t_on < self.t_clear) {
            return Err(Error::Validation(format!(
                "fault needs 0 <= t_on < t_clear, got {} and {}",
                self.t_on, self.t_clear
            )));
        }
        if !(self.fault_conductance >= 0.0) {
            return Err(Error::Validation(format!(
                "fault conductance must be nonnegative, got {}",
                self.fault_conductance
            )));
        }
        Ok(())
    }

    pub fn admittance(&self, nominal: &Admittance) -> Admittance {
        nominal.with_shunt_conductance(self.bus, self.fault_conductance)
    }
}
