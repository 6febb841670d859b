//! Command-line front end.

use std::fmt;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pgrid_core::certify::RegionOptions;
use pgrid_core::devices::{DeviceKind, DEFAULT_MARGIN};
use pgrid_core::ode::Integrator;
use pgrid_core::smallsignal::{min_sigma_exact, MinSigmaOptions};
use pgrid_core::system::resolve_sigmas;
use pgrid_core::{
    build_admittance, certify_system, compute_cct, estimate_region, network_lambda, solve_power_flow, CctOptions,
    FaultScenario, LyapunovFunction, PowerSystem, StabilityCriteria, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::casefile::{load_case, parse_case, Case, CaseError};
use crate::report::{emit_json, fmt_f64, Csv, Metadata};
use crate::suite::{shipped_case_json, sweep_points};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Case(CaseError),
    Domain(pgrid_core::Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{}", m),
            CliError::Case(e) => write!(f, "{}", e),
            CliError::Domain(e) => write!(f, "{}", e),
            CliError::Io(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Usage(_) => None,
            CliError::Case(e) => Some(e),
            CliError::Domain(e) => Some(e),
            CliError::Io(e) => Some(e),
        }
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        CliError::Case(e)
    }
}

impl From<pgrid_core::Error> for CliError {
    fn from(e: pgrid_core::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pgrid", version, about = "Distributed passivity-based stability certificates for power networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the AC power flow.
    Powerflow(PowerflowArgs),
    /// Network passivity index λ at one load scale or over a sweep.
    Lambda(LambdaArgs),
    /// Compare per-bus indices with −λ.
    Certify(CertifyArgs),
    /// Level-set stability region projected on two state coordinates.
    Region(RegionArgs),
    /// Time-domain simulation with an optional fault.
    Simulate(SimulateArgs),
    /// Critical clearing time of a fault at one bus.
    Cct(CctArgs),
    /// λ and the exact minimal uniform σ over a load-scale sweep.
    Eigscan(EigscanArgs),
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    /// Case file, or the name of a shipped case (case3, case39_22, case39_24, case39_26).
    pub case: String,
    /// Load scale; defaults to the scale stored in the case.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    /// Uniform passivity index for every device without its own value.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "sigmas")]
    pub sigma: Option<f64>,
    /// File with one index per bus (JSON array or whitespace separated).
    #[arg(long)]
    pub sigmas: Option<PathBuf>,
    /// Strictness headroom used in gain synthesis.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct PowerflowArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Sweep `start:stop:step` of load scales.
    #[arg(long, conflicts_with = "scale")]
    pub sweep: Option<String>,
    /// CSV output for sweeps (stdout otherwise).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    /// Two state labels such as `theta2,theta3` (buses numbered from 1).
    #[arg(long, default_value = "theta2,theta3")]
    pub axes: String,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Seed for the random shell directions.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// CSV output (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntegratorArgs {
    /// Use fixed-step RK4 with this step instead of adaptive DOPRI5.
    #[arg(long)]
    pub rk4: Option<f64>,
    /// Fault shunt conductance (pu).
    #[arg(long, default_value_t = pgrid_core::system::FAULT_CONDUCTANCE)]
    pub fault_g: f64,
}

impl IntegratorArgs {
    fn integrator(&self) -> CliResult<Integrator> {
        match self.rk4 {
            Some(h) if h > 0.0 && h.is_finite() => Ok(Integrator::Rk4 { h }),
            Some(h) => Err(CliError::Usage(format!("--rk4 needs a positive step, got {}", h))),
            None => Ok(Integrator::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Fault `bus,t_on,t_clear` (bus id as in the case file).
    #[arg(long)]
    pub fault: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    pub tend: f64,
    /// Output sampling interval (s).
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Start at a random offset of this norm from the equilibrium.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CctArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Faulted bus (id as in the case file).
    #[arg(long)]
    pub fault_bus: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Post-clearing horizon of the stability test (s).
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Tail window in which the distance must not grow (s).
    #[arg(long, default_value_t = 2.0)]
    pub tail: f64,
    /// Terminal distance bound of the stability test.
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EigscanArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Sweep `start:stop:step` of load scales.
    #[arg(long, default_value = "0.5:2.5:0.1")]
    pub sweep: String,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// CSV output (stdout otherwise).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Reads a case from disk, falling back to the shipped cases by name.
pub fn open_case(arg: &str) -> CliResult<Case> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(load_case(path)?);
    }
    let shipped = if arg.contains('/') { None } else { shipped_case_json(arg.trim_end_matches(".json")) };
    match shipped {
        Some(json) => Ok(parse_case(json.as_bytes())?),
        None => Err(CaseError::Io(io::Error::new(io::ErrorKind::NotFound, format!("{}: no such case file", arg))).into()),
    }
}

fn scaled(args: &CaseArgs) -> CliResult<Case> {
    let case = open_case(&args.case)?;
    match args.scale {
        Some(s) => Ok(case.with_scale(s)?),
        None => Ok(case),
    }
}

pub fn parse_sweep(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("sweep must be start:stop:step with step > 0 and stop ≥ start, got {:?}", spec));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if !(v[2] > 0.0) || v[1] < v[0] || !v.iter().all(|x| x.is_finite()) {
        return Err(bad());
    }
    Ok(sweep_points(v[0], v[1], v[2]))
}

/// Per-bus σ and its metadata label.
fn resolve(case: &Case, args: &SigmaArgs) -> CliResult<(Vec<f64>, String)> {
    let n = case.network.len();
    if !(args.margin > 0.0) {
        return Err(CliError::Usage(format!("--margin must be positive, got {}", args.margin)));
    }
    if let Some(path) = &args.sigmas {
        let text = std::fs::read_to_string(path)?;
        let values: Vec<f64> = match serde_json::from_str::<Vec<f64>>(&text) {
            Ok(v) => v,
            Err(_) => text
                .split_whitespace()
                .map(|t| t.trim_matches(',').parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("{}: expected {} numbers", path.display(), n)))?,
        };
        if values.len() != n {
            return Err(CliError::Usage(format!(
                "{}: {} values for {} buses",
                path.display(),
                values.len(),
                n
            )));
        }
        return Ok((values, "per-bus".to_string()));
    }
    match args.sigma {
        Some(s) => {
            let v = resolve_sigmas(&case.devices, n, s);
            let label = if v.iter().all(|x| *x == s) { fmt_f64(s) } else { "per-bus".into() };
            Ok((v, label))
        }
        None if case.devices.iter().all(|d| d.sigma.is_some()) => {
            Ok((resolve_sigmas(&case.devices, n, f64::NAN), "per-bus".into()))
        }
        None => Err(CliError::Usage(
            "a passivity index is required: pass --sigma or --sigmas, or set sigma on every device".into(),
        )),
    }
}

fn assemble(case: &Case, sigma: &SigmaArgs) -> CliResult<(PowerSystem, String)> {
    let (sigmas, label) = resolve(case, sigma)?;
    let sys = PowerSystem::assemble(&case.network, &case.devices, &sigmas, sigma.margin)?;
    Ok((sys, label))
}

#[derive(Serialize)]
struct PowerflowReport {
    scale: f64,
    theta: Vec<f64>,
    v: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    iterations: usize,
    residual: f64,
}

fn cmd_powerflow(a: &PowerflowArgs) -> CliResult<()> {
    let case = scaled(&a.case)?;
    let pf = solve_power_flow(&case.network)?;
    let tr = pf.triplet;
    let report = PowerflowReport {
        scale: case.network.scale,
        theta: tr.y_star.theta,
        v: tr.y_star.v,
        p: tr.p_star,
        q: tr.q_star,
        iterations: pf.iterations,
        residual: pf.residual,
    };
    Ok(emit_json(&report, a.out.as_deref())?)
}

fn lambda_at(case: &Case, s: f64) -> CliResult<f64> {
    let net = case.network.with_scale(s)?;
    let pf = solve_power_flow(&net)?;
    Ok(network_lambda(&pf.triplet, &build_admittance(&net))?.lambda)
}

/// Runs `f` over the sweep in parallel; failed points become NaN with a note on stderr.
fn sweep_rows<F>(scales: &[f64], width: usize, f: F) -> CliResult<Vec<Vec<f64>>>
where
    F: Fn(f64) -> CliResult<Vec<f64>> + Sync,
{
    let results: Vec<CliResult<Vec<f64>>> = scales.par_iter().map(|&s| f(s)).collect();
    let mut rows = Vec::with_capacity(scales.len());
    let mut last_err = None;
    for (s, r) in scales.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!("pgrid: scale {}: {}", s, e);
                let mut row = vec![f64::NAN; width];
                row[0] = *s;
                rows.push(row);
                last_err = Some(e);
            }
        }
    }
    if rows.iter().all(|r| r[1..].iter().all(|v| v.is_nan())) {
        if let Some(e) = last_err {
            return Err(e);
        }
    }
    Ok(rows)
}

fn write_csv(csv: &Csv, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => csv.write(p)?,
        None => io::stdout().lock().write_all(csv.render().as_bytes())?,
    }
    Ok(())
}

fn cmd_lambda(a: &LambdaArgs) -> CliResult<()> {
    let case = open_case(&a.case.case)?;
    match &a.sweep {
        None => {
            let s = a.case.scale.unwrap_or(case.network.scale);
            let lambda = lambda_at(&case, s)?;
            if let Some(p) = &a.csv {
                let mut csv = Csv::new(Metadata::new(&case.hash, fmt_f64(s), "none"), vec!["s".into(), "lambda".into()]);
                csv.push(vec![s, lambda]);
                csv.write(p)?;
            }
            let mut out = io::stdout().lock();
            writeln!(out, "lambda = {}", fmt_f64(lambda))?;
            writeln!(out, "-lambda = {}", fmt_f64(-lambda))?;
            Ok(())
        }
        Some(spec) => {
            let scales = parse_sweep(spec)?;
            let rows = sweep_rows(&scales, 2, |s| Ok(vec![s, lambda_at(&case, s)?]))?;
            let mut csv = Csv::new(Metadata::new(&case.hash, spec.clone(), "none"), vec!["s".into(), "lambda".into()]);
            rows.into_iter().for_each(|r| csv.push(r));
            write_csv(&csv, a.csv.as_deref())
        }
    }
}

#[derive(Serialize)]
struct CertifyReport {
    scale: f64,
    lambda: f64,
    neg_lambda: f64,
    lossless: bool,
    verdict: &'static str,
    violated: Vec<usize>,
    sigmas: Vec<f64>,
    margins: Vec<f64>,
}

fn cmd_certify(a: &CertifyArgs) -> CliResult<()> {
    let case = scaled(&a.case)?;
    let (sys, _) = assemble(&case, &a.sigma)?;
    let cert = certify_system(&sys)?;
    let (verdict, violated) = match &cert.verdict {
        Verdict::Certified => ("Certified", Vec::new()),
        Verdict::Violated(b) => ("Violated", b.clone()),
    };
    let report = CertifyReport {
        scale: case.network.scale,
        lambda: cert.lambda,
        neg_lambda: -cert.lambda,
        lossless: cert.lossless,
        verdict,
        violated,
        sigmas: cert.sigmas,
        margins: cert.per_bus_margin,
    };
    Ok(emit_json(&report, a.out.as_deref())?)
}

/// Resolves a label like `theta2`, `v3` or `omega1` (bus numbered from 1) to a state index.
pub fn state_index(sys: &PowerSystem, label: &str) -> CliResult<usize> {
    let label = label.trim();
    let split = label.find(|c: char| c.is_ascii_digit()).unwrap_or(label.len());
    let (kind, num) = label.split_at(split);
    let bad = || CliError::Usage(format!("unknown state label {:?}; use theta<k>, v<k> or omega<k>", label));
    let k: usize = num.parse().map_err(|_| bad())?;
    if k == 0 || k > sys.n_buses() {
        return Err(CliError::Usage(format!("{}: bus {} out of range 1..={}", label, k, sys.n_buses())));
    }
    let bus = k - 1;
    let (th, v) = sys.output_indices(bus);
    match kind.to_ascii_lowercase().as_str() {
        "theta" | "delta" => Ok(th),
        "v" | "e" => Ok(v),
        "omega" if matches!(sys.models[bus].kind, DeviceKind::Sg(_)) => Ok(sys.offset(bus) + 1),
        "omega" => Err(CliError::Usage(format!("{}: bus {} has no frequency state", label, k))),
        _ => Err(bad()),
    }
}

/// Column labels of the full state, buses numbered from 1.
pub fn state_labels(sys: &PowerSystem) -> Vec<String> {
    let mut out = vec![String::new(); sys.dim()];
    for bus in 0..sys.n_buses() {
        let (th, v) = sys.output_indices(bus);
        out[th] = format!("theta{}", bus + 1);
        out[v] = format!("v{}", bus + 1);
        if matches!(sys.models[bus].kind, DeviceKind::Sg(_)) {
            out[sys.offset(bus) + 1] = format!("omega{}", bus + 1);
        }
    }
    out
}

fn cmd_region(a: &RegionArgs) -> CliResult<()> {
    let case = scaled(&a.case)?;
    let (sys, label) = assemble(&case, &a.sigma)?;
    let names: Vec<&str> = a.axes.split(',').collect();
    if names.len() != 2 {
        return Err(CliError::Usage(format!("--axes needs two labels, got {:?}", a.axes)));
    }
    let axes = (state_index(&sys, names[0])?, state_index(&sys, names[1])?);
    let lyap = LyapunovFunction::new(&sys)?;
    let opts = RegionOptions {
        seed: a.seed,
        ..RegionOptions::default()
    };
    let region = estimate_region(&lyap, axes, a.grid, &opts)?;
    let meta = Metadata::new(&case.hash, fmt_f64(case.network.scale), label)
        .with("level", fmt_f64(region.level))
        .with("radius", fmt_f64(region.radius))
        .with("area", fmt_f64(region.area));
    let mut csv = Csv::new(meta, vec![names[0].trim().to_string(), names[1].trim().to_string()]);
    for (x, y) in &region.boundary {
        csv.push(vec![*x, *y]);
    }
    write_csv(&csv, a.out.as_deref())
}

pub fn parse_fault(spec: &str, g: f64) -> CliResult<FaultScenario> {
    let bad = || CliError::Usage(format!("--fault expects bus,t_on,t_clear, got {:?}", spec));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let bus: usize = parts[0].parse().map_err(|_| bad())?;
    let t_on: f64 = parts[1].parse().map_err(|_| bad())?;
    let t_clear: f64 = parts[2].parse().map_err(|_| bad())?;
    Ok(FaultScenario {
        bus,
        t_on,
        t_clear,
        fault_conductance: g,
    })
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    if !(a.tend > 0.0) || !(a.dt > 0.0) || !(a.perturb >= 0.0) {
        return Err(CliError::Usage("--tend and --dt must be positive, --perturb nonnegative".into()));
    }
    let case = scaled(&a.case)?;
    let (sys, label) = assemble(&case, &a.sigma)?;
    let fault = a.fault.as_deref().map(|f| parse_fault(f, a.integrator.fault_g)).transpose()?;
    let mut x0 = sys.x_star().to_vec();
    if a.perturb > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let d: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (x, di) in x0.iter_mut().zip(&d) {
            *x += a.perturb * di / norm;
        }
    }
    let traj = sys.simulate(&x0, a.tend, fault.as_ref(), &a.integrator.integrator()?)?;
    let lyap = LyapunovFunction::new(&sys)?;
    let mut header = vec!["t".to_string()];
    let labels = state_labels(&sys);
    let mut order: Vec<usize> = Vec::with_capacity(sys.dim());
    for bus in 0..sys.n_buses() {
        order.push(sys.output_indices(bus).0);
    }
    for bus in 0..sys.n_buses() {
        order.push(sys.output_indices(bus).1);
    }
    for (k, l) in labels.iter().enumerate() {
        if l.starts_with("omega") {
            order.push(k);
        }
    }
    header.extend(order.iter().map(|&k| labels[k].clone()));
    header.push("W".into());
    let mut meta = Metadata::new(&case.hash, fmt_f64(case.network.scale), label);
    meta = match a.integrator.rk4 {
        Some(h) => meta.with("integrator", format!("rk4:{}", fmt_f64(h))),
        None => meta.with("integrator", "dopri5"),
    };
    if let Some(f) = &fault {
        meta = meta.with(
            "fault",
            format!("{},{},{},{}", f.bus, fmt_f64(f.t_on), fmt_f64(f.t_clear), fmt_f64(f.fault_conductance)),
        );
    }
    let mut csv = Csv::new(meta, header);
    let samples = traj.resample(a.dt);
    for k in 0..samples.len() {
        let x = samples.state(k);
        let mut row = Vec::with_capacity(order.len() + 2);
        row.push(samples.t[k]);
        row.extend(order.iter().map(|&i| x[i]));
        row.push(lyap.eval(x).unwrap_or(f64::NAN));
        csv.push(row);
    }
    csv.write(&a.out)?;
    Ok(())
}

#[derive(Serialize)]
struct CctReport {
    bus: usize,
    cct: f64,
    unstable_at: f64,
    iterations: usize,
    tolerance: f64,
    fault_conductance: f64,
}

fn cmd_cct(a: &CctArgs) -> CliResult<()> {
    let case = scaled(&a.case)?;
    let (sys, _) = assemble(&case, &a.sigma)?;
    let opts = CctOptions {
        lo: a.lo,
        hi: a.hi,
        tolerance: a.tol,
        fault_conductance: a.integrator.fault_g,
        criteria: StabilityCriteria {
            horizon: a.horizon,
            tail: a.tail,
            threshold: a.threshold,
            ..StabilityCriteria::default()
        },
        integrator: a.integrator.integrator()?,
    };
    let r = compute_cct(&sys, a.fault_bus, &opts)?;
    let report = CctReport {
        bus: a.fault_bus,
        cct: r.cct,
        unstable_at: r.unstable_at,
        iterations: r.iterations,
        tolerance: a.tol,
        fault_conductance: a.integrator.fault_g,
    };
    Ok(emit_json(&report, a.out.as_deref())?)
}

/// One eigscan row: `(s, λ, −λ, exact minimal uniform σ)`.
pub fn eigscan_point(case: &Case, s: f64, margin: f64) -> CliResult<Vec<f64>> {
    let net = case.network.with_scale(s)?;
    let pf = solve_power_flow(&net)?;
    let lambda = network_lambda(&pf.triplet, &build_admittance(&net))?.lambda;
    let opts = MinSigmaOptions {
        margin,
        ..MinSigmaOptions::default()
    };
    let ms = min_sigma_exact(&net, &pf, &case.devices, -lambda, &opts)?;
    Ok(vec![s, lambda, -lambda, ms.sigma])
}

fn cmd_eigscan(a: &EigscanArgs) -> CliResult<()> {
    if !(a.margin > 0.0) {
        return Err(CliError::Usage(format!("--margin must be positive, got {}", a.margin)));
    }
    let case = open_case(&a.case.case)?;
    let scales = parse_sweep(&a.sweep)?;
    let rows = sweep_rows(&scales, 4, |s| eigscan_point(&case, s, a.margin))?;
    let meta = Metadata::new(&case.hash, a.sweep.clone(), "uniform").with("margin", fmt_f64(a.margin));
    let mut csv = Csv::new(
        meta,
        ["s", "lambda", "neg_lambda", "min_sigma_exact"].iter().map(|s| s.to_string()).collect(),
    );
    rows.into_iter().for_each(|r| csv.push(r));
    write_csv(&csv, a.csv.as_deref())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Powerflow(a) => cmd_powerflow(a),
        Command::Lambda(a) => cmd_lambda(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Region(a) => cmd_region(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Cct(a) => cmd_cct(a),
        Command::Eigscan(a) => cmd_eigscan(a),
    }
}

/// Caps the worker pool at `PGRID_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("PGRID_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("PGRID_THREADS must be a positive integer, got {:?}", value)))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {}", e)))
}
