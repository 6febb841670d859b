//! Distributed stability certificate, composite Lyapunov function and
//! level-set region estimates.
//!
//! A certificate only ever proves stability. A violated verdict means the
//! sufficient condition failed; the system may still be stable.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, sin, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Admittance;
use crate::network::{network_lambda, NetworkStorage};
use crate::ode::Trajectory;
use crate::powerflow::EquilibriumTriplet;
use crate::system::PowerSystem;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Certified,
    /// Buses whose index does not exceed −λ.
    Violated(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub lambda: f64,
    pub sigmas: Vec<f64>,
    pub verdict: Verdict,
    /// σ_i + λ per bus.
    pub per_bus_margin: Vec<f64>,
    pub lossless: bool,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// Compares every σ_i with −λ at the given equilibrium.
pub fn certify(triplet: &EquilibriumTriplet, y: &Admittance, sigmas: &[f64]) -> Result<Certificate> {
    if sigmas.len() != y.len() {
        return Err(Error::Index {
            index: sigmas.len(),
            len: y.len(),
        });
    }
    let idx = network_lambda(triplet, y)?;
    let per_bus_margin: Vec<f64> = sigmas.iter().map(|s| s + idx.lambda).collect();
    let violators: Vec<usize> = per_bus_margin
        .iter()
        .enumerate()
        .filter(|(_, m)| !(**m > 0.0))
        .map(|(k, _)| k)
        .collect();
    Ok(Certificate {
        lambda: idx.lambda,
        sigmas: sigmas.to_vec(),
        verdict: if violators.is_empty() {
            Verdict::Certified
        } else {
            Verdict::Violated(violators)
        },
        per_bus_margin,
        lossless: idx.lossless,
    })
}

/// Certificate for an assembled system, after checking each device's gains.
pub fn certify_system(sys: &PowerSystem) -> Result<Certificate> {
    for (bus, m) in sys.models.iter().enumerate() {
        if !m.gains_hold() {
            return Err(Error::InfeasibleGain {
                bus: Some(bus),
                bound: format!("{} gains do not meet the bounds for sigma = {}", m.kind.tag(), m.sigma),
            });
        }
    }
    certify(&sys.triplet, &sys.admittance, &sys.sigmas())
}

/// `W(x) = S_N(y) + Σ (S_i(x_i) − S_i(x_i*))`, with `Ŝ_N` on lossy networks.
#[derive(Debug, Clone)]
pub struct LyapunovFunction<'a> {
    pub system: &'a PowerSystem,
    pub network: NetworkStorage,
    device_offsets: Vec<f64>,
}

/// Samples of `W` along a trajectory that increased by more than a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreaseReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest single-step increase observed (0 if none).
    pub max_increase: f64,
    pub first_violation: Option<f64>,
    pub initial: f64,
    pub terminal: f64,
}

impl<'a> LyapunovFunction<'a> {
    pub fn new(system: &'a PowerSystem) -> Result<Self> {
        let network = NetworkStorage::new(system.triplet.y_star.clone(), system.sigmas(), &system.admittance)?;
        let xs = system.x_star();
        let mut device_offsets = Vec::with_capacity(system.n_buses());
        for (bus, m) in system.models.iter().enumerate() {
            let o = system.offset(bus);
            device_offsets.push(m.storage(&xs[o..o + m.dim()])?);
        }
        Ok(LyapunovFunction {
            system,
            network,
            device_offsets,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let sys = self.system;
        let op = sys.outputs(x);
        if let Some(bus) = op.v.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Domain {
                bus: Some(bus),
                value: op.v[bus],
            });
        }
        let mut w = self.network.evaluate(&op);
        for (bus, m) in sys.models.iter().enumerate() {
            let o = sys.offset(bus);
            w += m.storage(&x[o..o + m.dim()])? - self.device_offsets[bus];
        }
        Ok(w)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let sys = self.system;
        let n = sys.n_buses();
        let mut g = vec![0.0; sys.dim()];
        for (bus, m) in sys.models.iter().enumerate() {
            let o = sys.offset(bus);
            m.storage_gradient(&x[o..o + m.dim()], &mut g[o..o + m.dim()])?;
        }
        let gn = self.network.gradient(&sys.outputs(x));
        for bus in 0..n {
            let (a, b) = sys.output_indices(bus);
            g[a] += gn[bus];
            g[b] += gn[n + bus];
        }
        Ok(g)
    }

    /// `dW/dt` along the nominal vector field, by the chain rule.
    pub fn rate(&self, x: &[f64]) -> Result<f64> {
        let dx = self.system.rhs_vec(x)?;
        let g = self.gradient(x)?;
        Ok(g.iter().zip(&dx).map(|(a, b)| a * b).sum())
    }

    /// `Σ φ_i(ẏ_i)` along the nominal vector field.
    pub fn dissipation(&self, x: &[f64]) -> Result<f64> {
        let sys = self.system;
        let dx = sys.rhs_vec(x)?;
        let mut total = 0.0;
        for (bus, m) in sys.models.iter().enumerate() {
            let (a, b) = sys.output_indices(bus);
            total += m.dissipation(dx[a], dx[b], x[b]);
        }
        Ok(total)
    }

    /// Flags accepted steps where `W` grew by more than `tol`.
    pub fn decreasing(&self, traj: &Trajectory, tol: f64) -> Result<DecreaseReport> {
        let mut report = DecreaseReport {
            samples: traj.len(),
            violations: 0,
            max_increase: 0.0,
            first_violation: None,
            initial: f64::NAN,
            terminal: f64::NAN,
        };
        let mut prev: Option<f64> = None;
        for k in 0..traj.len() {
            let w = self.eval(traj.state(k))?;
            if k == 0 {
                report.initial = w;
            }
            if let Some(p) = prev {
                let inc = w - p;
                if inc > report.max_increase {
                    report.max_increase = inc;
                }
                if inc > tol {
                    report.violations += 1;
                    if report.first_violation.is_none() {
                        report.first_violation = Some(traj.t[k]);
                    }
                }
            }
            prev = Some(w);
            report.terminal = w;
        }
        Ok(report)
    }

    /// Upper bound on admissible radii: keeps every voltage-like state positive.
    pub fn radius_cap(&self) -> f64 {
        let v_min = self
            .system
            .triplet
            .y_star
            .v
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(*v));
        0.9 * v_min
    }

    fn sample_directions(&self, random: usize, seed: u64) -> Vec<Vec<f64>> {
        let m = self.system.dim();
        let mut dirs = Vec::with_capacity(2 * m + random);
        for k in 0..m {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; m];
                d[k] = s;
                dirs.push(d);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while dirs.len() < 2 * m + random {
            let d: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = sqrt(d.iter().map(|v| v * v).sum());
            if norm > 1e-3 {
                dirs.push(d.into_iter().map(|v| v / norm).collect());
            }
        }
        dirs
    }

    /// Minimum of `W` over the sampled sphere of radius `r`, or `None` if some
    /// sample is nonpositive or leaves the domain.
    fn shell_minimum(&self, dirs: &[Vec<f64>], r: f64) -> Option<f64> {
        let xs = self.system.x_star();
        let mut x = xs.to_vec();
        let mut min = f64::INFINITY;
        for d in dirs {
            for i in 0..x.len() {
                x[i] = xs[i] + r * d[i];
            }
            match self.eval(&x) {
                Ok(w) if w > 0.0 => min = min.min(w),
                _ => return None,
            }
        }
        Some(min)
    }

    /// Positivity radius δ and level value `c` (min of `W` on the δ-sphere).
    pub fn positivity_domain(&self, opts: &RegionOptions) -> Result<(f64, f64)> {
        let dirs = self.sample_directions(opts.random_directions, opts.seed);
        let cap = self.radius_cap().min(opts.max_radius);
        let mut best: Option<(f64, f64)> = None;
        let mut k = 1;
        loop {
            let r = opts.shell_step * k as f64;
            if r > cap + 1e-12 {
                break;
            }
            match self.shell_minimum(&dirs, r) {
                Some(c) => best = Some((r, c)),
                None => break,
            }
            k += 1;
        }
        best.ok_or(Error::Validation(format!(
            "W is not positive on the first sampled shell (radius {})",
            opts.shell_step
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    pub shell_step: f64,
    pub max_radius: f64,
    pub random_directions: usize,
    pub seed: u64,
    /// Rays used to trace the projected boundary.
    pub rays: usize,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            shell_step: 0.01,
            max_radius: 2.0,
            random_directions: 64,
            seed: 7,
            rays: 180,
        }
    }
}

/// Estimate of `Ω_c` projected on a plane of two state coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub axes: (usize, usize),
    pub center: (f64, f64),
    /// Level value: minimum of `W` on the sampled δ-sphere.
    pub level: f64,
    pub radius: f64,
    /// Boundary points in counter-clockwise order.
    pub boundary: Vec<(f64, f64)>,
    /// Area from grid counting over the `grid × grid` box `[−δ, δ]²`.
    pub area: f64,
    pub inside_points: usize,
}

/// Level-set region `{W ≤ c}` inside the positivity ball, in the `axes` plane
/// with every other state held at its equilibrium value.
pub fn estimate_region(lyap: &LyapunovFunction, axes: (usize, usize), grid: usize, opts: &RegionOptions) -> Result<Region> {
    if grid < 3 {
        return Err(Error::GridTooCoarse { grid });
    }
    let dim = lyap.system.dim();
    for a in [axes.0, axes.1] {
        if a >= dim {
            return Err(Error::Index { index: a, len: dim });
        }
    }
    if axes.0 == axes.1 {
        return Err(Error::Validation("projection axes must differ".into()));
    }
    let (delta, level) = lyap.positivity_domain(opts)?;
    let xs = lyap.system.x_star();
    let center = (xs[axes.0], xs[axes.1]);
    let inside = |da: f64, db: f64| -> bool {
        if da * da + db * db > delta * delta {
            return false;
        }
        let mut x = xs.to_vec();
        x[axes.0] += da;
        x[axes.1] += db;
        matches!(lyap.eval(&x), Ok(w) if w <= level)
    };

    let cell = 2.0 * delta / grid as f64;
    let mut count = 0usize;
    for i in 0..grid {
        for j in 0..grid {
            let da = -delta + (i as f64 + 0.5) * cell;
            let db = -delta + (j as f64 + 0.5) * cell;
            if inside(da, db) {
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::GridTooCoarse { grid });
    }

    let mut boundary = Vec::with_capacity(opts.rays);
    let march = delta / grid as f64;
    for k in 0..opts.rays {
        let phi = 2.0 * core::f64::consts::PI * k as f64 / opts.rays as f64;
        let (ca, sb) = (cos(phi), sin(phi));
        let mut r_in = 0.0;
        let mut r_out = None;
        let mut r = march;
        while r <= delta + 1e-12 {
            if inside(r * ca, r * sb) {
                r_in = r;
                r += march;
            } else {
                r_out = Some(r);
                break;
            }
        }
        let radius = match r_out {
            None => r_in,
            Some(mut hi) => {
                let mut lo = r_in;
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if inside(mid * ca, mid * sb) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        };
        boundary.push((center.0 + radius * ca, center.1 + radius * sb));
    }
    Ok(Region {
        axes,
        center,
        level,
        radius: delta,
        boundary,
        area: count as f64 * cell * cell,
        inside_points: count,
    })
}
