//! Network graph, case validation and the nodal admittance matrix.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Power-flow classification of a bus. Only the steady-state solve looks at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusRole {
    Slack,
    PV,
    PQ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub name: Option<String>,
    pub shunt_g: f64,
    pub shunt_b: f64,
    pub role: BusRole,
    /// Voltage magnitude held by Slack and PV buses.
    pub v_set: f64,
}

impl Bus {
    pub fn new(id: usize, role: BusRole) -> Self {
        Bus {
            id,
            name: None,
            shunt_g: 0.0,
            shunt_b: 0.0,
            role,
            v_set: 1.0,
        }
    }

    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!("{}", self.id),
        }
    }
}

/// Series impedance between two buses (no line charging).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
}

impl Line {
    pub fn new(from: usize, to: usize, r: f64, x: f64) -> Self {
        Line { from, to, r, x }
    }

    /// Series admittance 1/(r + jx) as (conductance, susceptance).
    pub fn admittance(&self) -> (f64, f64) {
        let d = self.r * self.r + self.x * self.x;
        (self.r / d, -self.x / d)
    }
}

/// A validated network together with its per-bus injection profile.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    /// Base (P_set, Q_set) injection per bus, before scaling.
    pub loads: Vec<(f64, f64)>,
    pub scale: f64,
    /// Kron-reduced equivalents may carry negative series resistance.
    pub reduced: bool,
}

impl NetworkCase {
    /// Validates the raw parts and merges parallel circuits.
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        loads: Vec<(f64, f64)>,
        scale: f64,
        reduced: bool,
    ) -> Result<Self> {
        let n = buses.len();
        if n == 0 {
            return Err(Error::Validation("case has no buses".into()));
        }
        for (k, bus) in buses.iter().enumerate() {
            if bus.id != k {
                return Err(Error::Validation(format!(
                    "bus ids must be contiguous 0..{}; found {} at position {}",
                    n - 1,
                    bus.id,
                    k
                )));
            }
            if !(bus.shunt_g.is_finite() && bus.shunt_b.is_finite()) {
                return Err(Error::Validation(format!("bus {} has a non-finite shunt", k)));
            }
            if !(bus.v_set > 0.0) {
                return Err(Error::Validation(format!("bus {} has v_set <= 0", k)));
            }
        }
        let slacks = buses.iter().filter(|b| b.role == BusRole::Slack).count();
        if slacks != 1 {
            return Err(Error::Validation(format!(
                "exactly one slack bus required, found {}",
                slacks
            )));
        }
        if loads.len() != n {
            return Err(Error::Validation(format!(
                "load profile has {} entries for {} buses",
                loads.len(),
                n
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Validation(format!("scale must be positive, got {}", scale)));
        }

        let mut merged: Vec<Line> = Vec::with_capacity(lines.len());
        for line in lines {
            if line.from >= n || line.to >= n {
                return Err(Error::Validation(format!(
                    "line {}-{} references a missing bus",
                    line.from, line.to
                )));
            }
            if line.from == line.to {
                return Err(Error::Validation(format!("self-loop at bus {}", line.from)));
            }
            if !(line.x > 0.0 && line.x.is_finite()) {
                return Err(Error::Validation(format!(
                    "line {}-{} needs x > 0",
                    line.from, line.to
                )));
            }
            if !line.r.is_finite() || (line.r < 0.0 && !reduced) {
                return Err(Error::Validation(format!(
                    "line {}-{} needs r >= 0",
                    line.from, line.to
                )));
            }
            let key = ordered(line.from, line.to);
            match merged.iter_mut().find(|l| ordered(l.from, l.to) == key) {
                Some(existing) => {
                    if existing.r == line.r && existing.x == line.x {
                        return Err(Error::Validation(format!(
                            "duplicate line {}-{}",
                            line.from, line.to
                        )));
                    }
                    // parallel circuits: admittances add
                    let (g1, b1) = existing.admittance();
                    let (g2, b2) = line.admittance();
                    let (g, b) = (g1 + g2, b1 + b2);
                    let d = g * g + b * b;
                    existing.r = g / d;
                    existing.x = -b / d;
                }
                None => merged.push(Line::new(key.0, key.1, line.r, line.x)),
            }
        }

        let case = NetworkCase {
            buses,
            lines: merged,
            loads,
            scale,
            reduced,
        };
        if !case.is_connected() {
            return Err(Error::Validation("network graph is disconnected".into()));
        }
        Ok(case)
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn slack(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.role == BusRole::Slack)
            .unwrap_or(0)
    }

    /// Scaled injection set-points.
    pub fn scaled_loads(&self) -> Vec<(f64, f64)> {
        self.loads
            .iter()
            .map(|&(p, q)| (p * self.scale, q * self.scale))
            .collect()
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Validation(format!("scale must be positive, got {}", scale)));
        }
        let mut c = self.clone();
        c.scale = scale;
        Ok(c)
    }

    /// True iff every line has r = 0 and every bus has zero shunt conductance.
    pub fn is_lossless(&self) -> bool {
        self.lines.iter().all(|l| l.r == 0.0) && self.buses.iter().all(|b| b.shunt_g == 0.0)
    }

    /// Same network with all series resistances and shunt conductances removed.
    pub fn lossless_variant(&self) -> Self {
        let mut c = self.clone();
        for l in &mut c.lines {
            l.r = 0.0;
        }
        for b in &mut c.buses {
            b.shunt_g = 0.0;
        }
        c
    }

    fn is_connected(&self) -> bool {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Applies a bus relabelling: bus `k` of `self` becomes bus `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        if perm.len() != n {
            return Err(Error::Validation("permutation length mismatch".into()));
        }
        let mut buses = vec![Bus::new(0, BusRole::PQ); n];
        let mut loads = vec![(0.0, 0.0); n];
        for (k, bus) in self.buses.iter().enumerate() {
            let mut b = bus.clone();
            b.id = perm[k];
            buses[perm[k]] = b;
            loads[perm[k]] = self.loads[k];
        }
        let lines = self
            .lines
            .iter()
            .map(|l| Line::new(perm[l.from], perm[l.to], l.r, l.x))
            .collect();
        NetworkCase::new(buses, lines, loads, self.scale, self.reduced)
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Real and imaginary parts of the nodal admittance matrix Y = G + jB.
#[derive(Debug, Clone, PartialEq)]
pub struct Admittance {
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Admittance {
    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.g.nrows() == 0
    }

    pub fn is_lossless(&self) -> bool {
        self.g.iter().all(|&v| v == 0.0)
    }

    /// Copy with an extra shunt conductance at `bus`.
    pub fn with_shunt_conductance(&self, bus: usize, g: f64) -> Self {
        let mut y = self.clone();
        y.g[(bus, bus)] += g;
        y
    }
}

pub fn build_admittance(case: &NetworkCase) -> Admittance {
    let n = case.len();
    let mut g = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for (i, bus) in case.buses.iter().enumerate() {
        g[(i, i)] += bus.shunt_g;
        b[(i, i)] += bus.shunt_b;
    }
    for line in &case.lines {
        let (gs, bs) = line.admittance();
        let (i, j) = (line.from, line.to);
        g[(i, i)] += gs;
        b[(i, i)] += bs;
        g[(j, j)] += gs;
        b[(j, j)] += bs;
        g[(i, j)] -= gs;
        b[(i, j)] -= bs;
        g[(j, i)] -= gs;
        b[(j, i)] -= bs;
    }
    Admittance { g, b }
}
