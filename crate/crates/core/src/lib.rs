//! Distributed stability certification for power networks whose buses carry
//! heterogeneous nonlinear dynamics (synchronous generators, conventional and
//! quadratic droop inverters).
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]

extern crate alloc;

pub mod cct;
pub mod certify;
pub mod devices;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod network;
pub mod ode;
pub mod powerflow;
pub mod smallsignal;
pub mod system;

pub use devices::{BusModel, DeviceKind, DroopParams, Gains, SgParams, Setpoint};
pub use error::{Error, Result};
pub use grid::{build_admittance, Admittance, Bus, BusRole, Line, NetworkCase};
pub use network::{network_lambda, NetworkIndex, NetworkStorage};
pub use powerflow::{solve_power_flow, EquilibriumTriplet, OperatingPoint, PowerFlowSolution};
pub use ode::{Dopri5, Integrator, Trajectory};
pub use system::{DeviceSpec, FaultScenario, PowerSystem};
pub use certify::{certify, certify_system, estimate_region, Certificate, LyapunovFunction, Region, Verdict};
pub use cct::{compute_cct, CctOptions, CctResult, StabilityCriteria};
