//! JSON case files: network, base injection profile and devices in one document.

use std::fmt;
use std::fs;
use std::path::Path;

use pgrid_core::grid::{Bus, BusRole, Line, NetworkCase};
use pgrid_core::devices::{DeviceKind, DroopParams, SgParams};
use pgrid_core::system::DeviceSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum CaseError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    Invalid(pgrid_core::Error),
}

impl fmt::Display for CaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseError::Io(e) => write!(f, "cannot read case file: {}", e),
            CaseError::Parse(e) => write!(f, "malformed case file: {}", e),
            CaseError::Invalid(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for CaseError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CaseError::Io(e) => Some(e),
            CaseError::Parse(e) => Some(e),
            CaseError::Invalid(e) => Some(e),
        }
    }
}

impl From<pgrid_core::Error> for CaseError {
    fn from(e: pgrid_core::Error) -> Self {
        CaseError::Invalid(e)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub shunt_g: f64,
    #[serde(default)]
    pub shunt_b: f64,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_set: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRecord {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum DeviceParams {
    #[serde(rename = "SG")]
    Sg {
        m: f64,
        d: f64,
        td0: f64,
        xd: f64,
        xd_prime: f64,
    },
    #[serde(rename = "CD")]
    Cd { tau1: f64, tau2: f64 },
    #[serde(rename = "QD")]
    Qd { tau1: f64, tau2: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub bus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub device: DeviceParams,
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub lines: Vec<LineRecord>,
    pub loads: Vec<LoadRecord>,
    pub scale: f64,
    #[serde(default)]
    pub reduced: bool,
    pub devices: Vec<DeviceRecord>,
    /// Buses configured for fault studies.
    #[serde(default)]
    pub faults: Vec<usize>,
}

/// A validated case: network plus device placement.
#[derive(Debug, Clone)]
pub struct Case {
    pub network: NetworkCase,
    pub devices: Vec<DeviceSpec>,
    pub faults: Vec<usize>,
    pub base_mva: f64,
    /// SHA-256 of the source bytes, hex encoded.
    pub hash: String,
}

impl Case {
    pub fn with_scale(&self, scale: f64) -> Result<Case, CaseError> {
        let mut c = self.clone();
        c.network = self.network.with_scale(scale)?;
        Ok(c)
    }
}

fn role(s: &str, bus: usize) -> Result<BusRole, CaseError> {
    match s {
        "Slack" => Ok(BusRole::Slack),
        "PV" => Ok(BusRole::PV),
        "PQ" => Ok(BusRole::PQ),
        other => Err(CaseError::Invalid(pgrid_core::Error::Validation(format!(
            "bus {} has unknown role {:?}",
            bus, other
        )))),
    }
}

impl CaseFile {
    pub fn into_case(self, hash: String) -> Result<Case, CaseError> {
        let n = self.buses.len();
        let mut buses = Vec::with_capacity(n);
        for rec in &self.buses {
            let mut bus = Bus::new(rec.id, role(&rec.role, rec.id)?);
            bus.name = rec.name.clone();
            bus.shunt_g = rec.shunt_g;
            bus.shunt_b = rec.shunt_b;
            if let Some(v) = rec.v_set {
                bus.v_set = v;
            }
            buses.push(bus);
        }
        let lines = self.lines.iter().map(|l| Line::new(l.from, l.to, l.r, l.x)).collect();
        let mut loads = vec![(0.0, 0.0); n];
        for l in &self.loads {
            if l.bus >= n {
                return Err(pgrid_core::Error::Index { index: l.bus, len: n }.into());
            }
            loads[l.bus].0 += l.p;
            loads[l.bus].1 += l.q;
        }
        let network = NetworkCase::new(buses, lines, loads, self.scale, self.reduced)?;
        let devices = self
            .devices
            .iter()
            .map(|d| DeviceSpec {
                bus: d.bus,
                kind: match d.device {
                    DeviceParams::Sg { m, d, td0, xd, xd_prime } => DeviceKind::Sg(SgParams { m, d, td0, xd, xd_prime }),
                    DeviceParams::Cd { tau1, tau2 } => DeviceKind::Cd(DroopParams { tau1, tau2 }),
                    DeviceParams::Qd { tau1, tau2 } => DeviceKind::Qd(DroopParams { tau1, tau2 }),
                },
                sigma: d.sigma,
                name: d.name.clone(),
            })
            .collect::<Vec<_>>();
        for d in &devices {
            if d.bus >= n {
                return Err(pgrid_core::Error::Index { index: d.bus, len: n }.into());
            }
            d.kind.validate()?;
        }
        for &f in &self.faults {
            if f >= n {
                return Err(pgrid_core::Error::Index { index: f, len: n }.into());
            }
        }
        Ok(Case {
            network,
            devices,
            faults: self.faults,
            base_mva: self.base_mva,
            hash,
        })
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{:02x}", b)).collect()
}

pub fn parse_case(bytes: &[u8]) -> Result<Case, CaseError> {
    let file: CaseFile = serde_json::from_slice(bytes).map_err(CaseError::Parse)?;
    file.into_case(hash_bytes(bytes))
}

pub fn load_case(path: impl AsRef<Path>) -> Result<Case, CaseError> {
    let bytes = fs::read(path).map_err(CaseError::Io)?;
    parse_case(&bytes)
}
