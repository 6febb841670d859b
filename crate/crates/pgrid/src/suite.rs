//! Shipped experiment definitions and their consistency checks.

use std::fmt;

use pgrid_core::devices::{DeviceKind, DroopParams, SgParams};

use crate::casefile::{parse_case, Case, CaseError};

pub const CASE3_JSON: &str = include_str!("../../../cases/case3.json");
pub const CASE39_22_JSON: &str = include_str!("../../../cases/case39_22.json");
pub const CASE39_24_JSON: &str = include_str!("../../../cases/case39_24.json");
pub const CASE39_26_JSON: &str = include_str!("../../../cases/case39_26.json");

/// Synchronous machine constants of the three-bus study.
pub const THREE_BUS_SG: SgParams = SgParams {
    m: 0.16,
    d: 0.076,
    td0: 6.56,
    xd: 0.295,
    xd_prime: 0.17,
};

/// (τ₁, τ₂) of QD1..QD8 on the 39-bus system.
pub const QD_TIME_CONSTANTS: [(f64, f64); 8] = [
    (0.3, 7.0),
    (0.2, 7.5),
    (0.13, 8.0),
    (0.26, 8.2),
    (0.4, 8.5),
    (0.2, 6.5),
    (0.25, 9.2),
    (0.35, 9.6),
];

/// (τ₁, τ₂) of CD1..CD8 on the 39-bus system.
pub const CD_TIME_CONSTANTS: [(f64, f64); 8] = [
    (0.3, 8.1),
    (0.25, 9.0),
    (0.15, 9.5),
    (0.28, 9.3),
    (0.34, 10.0),
    (0.22, 9.5),
    (0.4, 7.0),
    (0.5, 6.5),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaPolicy {
    /// One σ for every device, swept by the scenario.
    Uniform,
    /// σ read from each device record.
    PerBus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// Load-scale sweep `start, start + step, …, stop`.
    ScaleSweep { start: f64, stop: f64, step: f64 },
    /// Fault studies at the listed buses.
    Faults(Vec<usize>),
}

impl Scenario {
    pub fn scales(&self) -> Vec<f64> {
        match *self {
            Scenario::ScaleSweep { start, stop, step } => sweep_points(start, stop, step),
            Scenario::Faults(_) => Vec::new(),
        }
    }
}

/// Inclusive grid `start..=stop` with spacing `step`, rounded to avoid drift.
pub fn sweep_points(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| start + step * k as f64).collect()
}

/// What the suite is expected to reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    ThreeBus,
    /// Network-reduced 39-bus system with the given number of devices.
    Ieee39 { devices: usize },
}

#[derive(Debug, Clone)]
pub struct ExperimentSuite {
    pub name: String,
    pub case: Case,
    pub layout: Layout,
    pub sigma_policy: SigmaPolicy,
    pub scenarios: Vec<Scenario>,
}

impl ExperimentSuite {
    pub fn sweep(&self) -> Vec<f64> {
        self.scenarios.iter().flat_map(|s| s.scales()).collect()
    }

    pub fn fault_buses(&self) -> Vec<usize> {
        self.scenarios
            .iter()
            .flat_map(|s| match s {
                Scenario::Faults(b) => b.clone(),
                _ => Vec::new(),
            })
            .collect()
    }

    /// Total state dimension of the assembled closed loop.
    pub fn state_dim(&self) -> usize {
        self.case.devices.iter().map(|d| d.kind.dim()).sum()
    }
}

#[derive(Debug)]
pub enum SuiteError {
    Case(CaseError),
    UnknownSuite(String),
    Mismatch(Vec<String>),
}

impl fmt::Display for SuiteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuiteError::Case(e) => write!(f, "{}", e),
            SuiteError::UnknownSuite(n) => write!(f, "no shipped suite named {:?}", n),
            SuiteError::Mismatch(list) => {
                write!(f, "suite check failed:")?;
                for m in list {
                    write!(f, "\n  {}", m)?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for SuiteError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SuiteError::Case(e) => Some(e),
            _ => None,
        }
    }
}

impl From<CaseError> for SuiteError {
    fn from(e: CaseError) -> Self {
        SuiteError::Case(e)
    }
}

pub const SUITE_NAMES: [&str; 4] = ["case3", "case39_22", "case39_24", "case39_26"];

/// Source text of a shipped case by suite name.
pub fn shipped_case_json(name: &str) -> Option<&'static str> {
    match name {
        "case3" => Some(CASE3_JSON),
        "case39_22" => Some(CASE39_22_JSON),
        "case39_24" => Some(CASE39_24_JSON),
        "case39_26" => Some(CASE39_26_JSON),
        _ => None,
    }
}

pub fn shipped_suite(name: &str) -> Result<ExperimentSuite, SuiteError> {
    let json = shipped_case_json(name).ok_or_else(|| SuiteError::UnknownSuite(name.to_string()))?;
    let case = parse_case(json.as_bytes())?;
    let (layout, stop) = match name {
        "case3" => (Layout::ThreeBus, 2.5),
        "case39_22" => (Layout::Ieee39 { devices: 22 }, 2.0),
        "case39_24" => (Layout::Ieee39 { devices: 24 }, 2.0),
        _ => (Layout::Ieee39 { devices: 26 }, 2.0),
    };
    let faults = case.faults.clone();
    Ok(ExperimentSuite {
        name: name.to_string(),
        case,
        layout,
        sigma_policy: SigmaPolicy::Uniform,
        scenarios: vec![
            Scenario::ScaleSweep {
                start: 0.5,
                stop,
                step: 0.25,
            },
            Scenario::Faults(faults),
        ],
    })
}

pub fn shipped_suites() -> Result<Vec<ExperimentSuite>, SuiteError> {
    SUITE_NAMES.iter().map(|n| shipped_suite(n)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub devices: usize,
    pub sg: usize,
    pub cd: usize,
    pub qd: usize,
    pub state_dim: usize,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn check_droop(name: &str, got: &DroopParams, table: &[(f64, f64)], problems: &mut Vec<String>) {
    let Some(k) = name.get(2..).and_then(|s| s.parse::<usize>().ok()) else {
        return;
    };
    if k == 0 || k > table.len() {
        return;
    }
    let (t1, t2) = table[k - 1];
    if !close(got.tau1, t1) || !close(got.tau2, t2) {
        problems.push(format!(
            "{} has time constants ({}, {}), expected ({}, {})",
            name, got.tau1, got.tau2, t1, t2
        ));
    }
}

/// Checks placement, device counts and tabulated constants.
pub fn validate_suite(suite: &ExperimentSuite) -> Result<SuiteReport, SuiteError> {
    let mut problems = Vec::new();
    let n = suite.case.network.len();
    let mut per_bus = vec![0usize; n];
    for d in &suite.case.devices {
        if d.bus >= n {
            problems.push(format!("device on nonexistent bus {} (case has {} buses)", d.bus, n));
        } else {
            per_bus[d.bus] += 1;
        }
    }
    for (b, &c) in per_bus.iter().enumerate() {
        if c != 1 {
            problems.push(format!("bus {} carries {} devices", b, c));
        }
    }
    let count = |f: fn(&DeviceKind) -> bool| suite.case.devices.iter().filter(|d| f(&d.kind)).count();
    let sg = count(|k| matches!(k, DeviceKind::Sg(_)));
    let cd = count(|k| matches!(k, DeviceKind::Cd(_)));
    let qd = count(|k| matches!(k, DeviceKind::Qd(_)));
    let devices = suite.case.devices.len();

    match suite.layout {
        Layout::ThreeBus => {
            let sgs: Vec<_> = suite
                .case
                .devices
                .iter()
                .filter_map(|d| match d.kind {
                    DeviceKind::Sg(p) => Some(p),
                    _ => None,
                })
                .collect();
            if sgs.len() != 1 {
                problems.push(format!("three-bus suite needs one SG, found {}", sgs.len()));
            }
            for p in sgs {
                if p != THREE_BUS_SG {
                    problems.push(format!("SG constants {:?} differ from {:?}", p, THREE_BUS_SG));
                }
            }
            if devices != 3 {
                problems.push(format!("three-bus suite has {} devices", devices));
            }
        }
        Layout::Ieee39 { devices: want } => {
            if devices != want {
                problems.push(format!("{} devices, expected {}", devices, want));
            }
            let extra = want.saturating_sub(22);
            if sg != 6 {
                problems.push(format!("{} SGs, expected 6", sg));
            }
            if cd != 8 + extra / 2 || qd != 8 + extra / 2 {
                problems.push(format!("{} CDs and {} QDs, expected {} of each", cd, qd, 8 + extra / 2));
            }
            for d in &suite.case.devices {
                let name = d.name.as_deref().unwrap_or("");
                match d.kind {
                    DeviceKind::Qd(p) if name.starts_with("QD") => check_droop(name, &p, &QD_TIME_CONSTANTS, &mut problems),
                    DeviceKind::Cd(p) if name.starts_with("CD") => check_droop(name, &p, &CD_TIME_CONSTANTS, &mut problems),
                    _ => {}
                }
            }
            for k in 1..=8 {
                for (prefix, is_kind) in [("QD", true), ("CD", false)] {
                    let label = format!("{}{}", prefix, k);
                    let found = suite.case.devices.iter().any(|d| {
                        d.name.as_deref() == Some(label.as_str())
                            && matches!((is_kind, d.kind), (true, DeviceKind::Qd(_)) | (false, DeviceKind::Cd(_)))
                    });
                    if !found {
                        problems.push(format!("{} missing", label));
                    }
                }
            }
        }
    }
    for &f in &suite.fault_buses() {
        if f >= n {
            problems.push(format!("fault bus {} does not exist", f));
        }
    }
    if !problems.is_empty() {
        return Err(SuiteError::Mismatch(problems));
    }
    Ok(SuiteReport {
        name: suite.name.clone(),
        devices,
        sg,
        cd,
        qd,
        state_dim: suite.state_dim(),
    })
}
