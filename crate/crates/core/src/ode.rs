//! Explicit Runge–Kutta integrators.
//!
//! The adaptive method is the Dormand–Prince 5(4) pair with first-same-as-last
//! stage reuse. Intermediate values are reconstructed by cubic Hermite
//! interpolation between accepted steps.

use alloc::vec;
use alloc::vec::Vec;

use libm::{pow, sqrt};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen from the local scale when `None`.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

impl Dopri5 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            ..Dopri5::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    Dopri5(Dopri5),
    /// Classical fixed-step RK4; bitwise reproducible.
    Rk4 { h: f64 },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Dopri5(Dopri5::default())
    }
}

/// Accepted step points with states and their derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub t: Vec<f64>,
    x: Vec<f64>,
    dx: Vec<f64>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Trajectory {
            dim,
            t: Vec::new(),
            x: Vec::new(),
            dx: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    pub fn derivative(&self, k: usize) -> &[f64] {
        &self.dx[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn last_time(&self) -> f64 {
        self.t[self.len() - 1]
    }

    pub fn push(&mut self, t: f64, x: &[f64], dx: &[f64]) {
        self.t.push(t);
        self.x.extend_from_slice(x);
        self.dx.extend_from_slice(dx);
    }

    /// Concatenates `other`, which must start where `self` ends. The junction
    /// point is kept twice when the derivative jumps there (fault switching).
    pub fn append(&mut self, other: &Trajectory) {
        for k in 0..other.len() {
            self.push(other.t[k], other.state(k), other.derivative(k));
        }
    }

    /// Cubic Hermite state at time `t` (clamped to the covered span).
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let n = self.len();
        if t <= self.t[0] {
            out.copy_from_slice(self.state(0));
            return;
        }
        if t >= self.t[n - 1] {
            out.copy_from_slice(self.state(n - 1));
            return;
        }
        // last interval whose left end is <= t
        let k = self.t.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        if h <= 0.0 {
            out.copy_from_slice(self.state(k + 1));
            return;
        }
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let (x0, x1) = (self.state(k), self.state(k + 1));
        let (d0, d1) = (self.derivative(k), self.derivative(k + 1));
        for i in 0..self.dim {
            out[i] = h00 * x0[i] + h10 * h * d0[i] + h01 * x1[i] + h11 * h * d1[i];
        }
    }

    /// States sampled every `dt` from the first to the last time.
    pub fn resample(&self, dt: f64) -> Trajectory {
        let mut out = Trajectory::new(self.dim);
        if self.is_empty() || !(dt > 0.0) {
            return out;
        }
        let (t0, t1) = (self.t[0], self.last_time());
        let count = ((t1 - t0) / dt + 1e-9) as usize;
        let mut x = vec![0.0; self.dim];
        let zero = vec![0.0; self.dim];
        for k in 0..=count {
            let t = t0 + k as f64 * dt;
            self.interpolate(t, &mut x);
            out.push(t, &x, &zero);
        }
        if out.last_time() < t1 - 1e-12 {
            out.push(t1, self.last_state(), &zero);
        }
        out
    }
}

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dx/dt = f(t, x)` from `t0` to `t1`, recording every accepted step.
pub fn integrate<F>(f: &mut F, t0: f64, x0: &[f64], t1: f64, method: &Integrator) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    match method {
        Integrator::Dopri5(opts) => dopri5(f, t0, x0, t1, opts),
        Integrator::Rk4 { h } => rk4(f, t0, x0, t1, *h),
    }
}

fn rk4<F>(f: &mut F, t0: f64, x0: &[f64], t1: f64, h: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(h > 0.0) {
        return Err(Error::StepSizeUnderflow { t: t0, h });
    }
    let n = x0.len();
    let mut traj = Trajectory::new(n);
    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t0, &x, &mut k1)?;
    traj.push(t0, &x, &k1);
    let steps = {
        let s = (t1 - t0) / h;
        let r = libm::round(s);
        if (s - r).abs() < 1e-9 {
            r as usize
        } else {
            libm::ceil(s) as usize
        }
    };
    let mut t = t0;
    for k in 0..steps {
        let step = if k + 1 == steps { t1 - t } else { h };
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * step * k1[i];
        }
        f(t + 0.5 * step, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * step * k2[i];
        }
        f(t + 0.5 * step, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + step * k3[i];
        }
        f(t + step, &tmp, &mut k4)?;
        for i in 0..n {
            x[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        f(t, &x, &mut k1)?;
        traj.push(t, &x, &k1);
    }
    Ok(traj)
}

fn error_norm(err: &[f64], x: &[f64], x_new: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = err.len().max(1);
    let mut acc = 0.0;
    for i in 0..err.len() {
        let scale = atol + rtol * x[i].abs().max(x_new[i].abs());
        let r = err[i] / scale;
        acc += r * r;
    }
    sqrt(acc / n as f64)
}

fn dopri5<F>(f: &mut F, t0: f64, x0: &[f64], t1: f64, opts: &Dopri5) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = x0.len();
    let mut traj = Trajectory::new(n);
    let mut x = x0.to_vec();
    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    f(t0, &x, &mut k[0])?;
    traj.push(t0, &x, &k[0]);
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(traj);
    }

    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            let zeros = vec![0.0; n];
            let d0 = error_norm(&x, &zeros, &zeros, 0.0, 1.0).max(1e-5);
            let d1 = error_norm(&k[0], &zeros, &zeros, 0.0, 1.0);
            let tol = opts.rtol.max(1e-12);
            if d1 <= 1e-10 {
                1e-3 * span
            } else {
                0.01 * d0 / d1 * pow(tol / 1e-8, 0.2)
            }
        }
    };
    h = h.min(span).min(opts.h_max).max(opts.h_min);

    let mut t = t0;
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepLimit { t, steps: opts.max_steps });
        }
        let last = t + h >= t1 - 1e-12 * t1.abs().max(1.0);
        let step = if last { t1 - t } else { h };

        let mut ok = true;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s - 1][j] * kj[i];
                }
                stage[i] = x[i] + step * acc;
            }
            match f(t + C[s - 1] * step, &stage, &mut k[s]) {
                Ok(()) => {}
                Err(Error::Domain { .. }) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
            if s == 6 {
                x_new.copy_from_slice(&stage);
            }
        }

        let norm = if ok {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += E[j] * kj[i];
                }
                err[i] = step * acc;
            }
            error_norm(&err, &x, &x_new, opts.rtol, opts.atol)
        } else {
            f64::INFINITY
        };

        if norm <= 1.0 {
            t = if last { t1 } else { t + step };
            x.copy_from_slice(&x_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            traj.push(t, &x, &k[0]);
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * pow(norm, -0.2)).clamp(0.2, 5.0)
            };
            h = (step * factor).min(opts.h_max);
        } else {
            let factor = if norm.is_finite() {
                (0.9 * pow(norm, -0.2)).clamp(0.2, 1.0)
            } else {
                0.25
            };
            h = step * factor;
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow { t, h });
            }
        }
    }
    Ok(traj)
}
