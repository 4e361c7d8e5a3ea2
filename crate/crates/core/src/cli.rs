//! Command-line front end. [`run`] parses arguments, dispatches a subcommand
//! and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{evolve_rotating, verify_frame_equivalence};
use crate::error::Error;
use crate::exceptional::{
    classify, ep3_d_tilde, ep3_point, ep_curve_point, locate_ep3_numeric, phase_diagram, Axis,
    EpCurvePoint, PhasePoint,
};
use crate::model::{DensityMatrix, LabParams, ModelParams};
use crate::spectrum::{cardano_params, eigenvalues_numeric, matched_distance, Spectrum};
use crate::superop::build_lindblad;
use crate::verify::{self, convergence_order, Check, VerifyConfig, ORDER_STEPS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTEGRATOR: i32 = 3;

/// Tolerances applied to every `spectrum` report.
const EIGENVECTOR_TOL: f64 = 1e-9;
const CHAR_RESIDUAL_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-7;
const BIORTHOGONALITY_TOL: f64 = 1e-8;
/// Bound on the trace and Hermiticity deviation of an `evolve` trajectory.
const CONSERVATION_TOL: f64 = 1e-10;
const EP_CURVE_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "lindblad-ep",
    version,
    about = "Spectra, exceptional points and dynamics of a driven, damped two-level system",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Excited,
    Ground,
    Mixed,
    Coherent,
}

impl Preset {
    pub fn state(self) -> DensityMatrix {
        match self {
            Preset::Excited => DensityMatrix::excited(),
            Preset::Ground => DensityMatrix::ground(),
            Preset::Mixed => DensityMatrix::mixed(),
            Preset::Coherent => DensityMatrix::coherent(),
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Detuning δ; with the default δ = 1, --d and --gamma read as d̃ and Γ̃.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub delta: f64,
    /// Drive amplitude d [default: 2, or 1 for verify-frame].
    #[arg(long, global = true)]
    pub d: Option<f64>,
    /// Relaxation rate Γ [default: 1, or 0.3 for verify-frame].
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Lower d̃ bound of a sweep [default: 0, or 2√2 for ep-curve]
    #[arg(long, global = true)]
    pub d_min: Option<f64>,
    /// Upper d̃ bound of a sweep [default: 6, or 10 for ep-curve]
    #[arg(long, global = true)]
    pub d_max: Option<f64>,
    /// Number of d̃ samples [default: 300, or 200 for ep-curve]
    #[arg(long, global = true)]
    pub nd: Option<usize>,
    /// Lower Γ̃ bound of the phase diagram [default: 0]
    #[arg(long, global = true)]
    pub gamma_min: Option<f64>,
    /// Upper Γ̃ bound of the phase diagram [default: 16]
    #[arg(long, global = true)]
    pub gamma_max: Option<f64>,
    /// Number of Γ̃ samples [default: 300]
    #[arg(long, global = true)]
    pub ngamma: Option<usize>,
    /// RK4 step.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub dt: f64,
    /// Final time [default: 40, or 10 for verify-frame].
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// Initial state
    #[arg(long, global = true, value_enum, default_value_t = Preset::Excited)]
    pub rho0: Preset,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format [default: csv for tables, json for spectrum and ep3].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for the randomized verification samples.
    #[arg(long, global = true, default_value_t = verify::DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads for grid sweeps.
    #[arg(
        long,
        global = true,
        env = "LINDBLAD_EP_WORKERS",
        default_value_t = 1,
        value_parser = clap::value_parser!(u16).range(1..)
    )]
    pub workers: u16,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form and numerical eigenvalues, residuals and biorthogonality.
    #[command(allow_negative_numbers = true)]
    Spectrum,
    /// Region label of every (d̃, Γ̃) grid cell.
    #[command(allow_negative_numbers = true)]
    PhaseDiagram,
    /// The two EP2 curves with discriminant residuals.
    #[command(allow_negative_numbers = true)]
    EpCurve,
    /// The third-order exceptional point, exact and located numerically.
    #[command(allow_negative_numbers = true)]
    Ep3,
    /// Rotating-frame RK4 trajectory.
    #[command(allow_negative_numbers = true)]
    Evolve,
    /// Lab-frame against rotating-frame evolution.
    #[command(allow_negative_numbers = true)]
    VerifyFrame {
        /// Level splitting Δ.
        #[arg(long, default_value_t = 2.0)]
        splitting: f64,
        /// Drive frequency ω.
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Largest acceptable frame difference.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Runs the acceptance checklist.
    #[command(allow_negative_numbers = true)]
    Verify {
        /// Subset of checks by name or number, comma separated.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Multiplies every tolerance; must be positive.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
    Integrator(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verification(_) => EXIT_VERIFICATION,
            CliError::Integrator(_) => EXIT_INTEGRATOR,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Verification(m) | CliError::Integrator(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::StepSize { .. } => CliError::Integrator(e.to_string()),
            Error::NonConvergence { .. } => CliError::Verification(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Spectrum => cmd_spectrum(c),
        Command::PhaseDiagram => cmd_phase_diagram(c),
        Command::EpCurve => cmd_ep_curve(c),
        Command::Ep3 => cmd_ep3(c),
        Command::Evolve => cmd_evolve(c),
        Command::VerifyFrame {
            splitting,
            omega,
            tol,
        } => cmd_verify_frame(c, *splitting, *omega, *tol),
        Command::Verify { checks, tol_scale } => cmd_verify(c, checks, *tol_scale),
    }
}

fn model_params(c: &Common) -> CliResult<ModelParams> {
    Ok(ModelParams::new(
        c.delta,
        c.d.unwrap_or(2.0),
        c.gamma.unwrap_or(1.0),
    )?)
}

fn axis(
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    default: (f64, f64, usize),
) -> CliResult<Axis> {
    Ok(Axis::new(
        min.unwrap_or(default.0),
        max.unwrap_or(default.1),
        count.unwrap_or(default.2),
    )?)
}

fn table_format(c: &Common) -> Format {
    c.format.unwrap_or(Format::Csv)
}

fn require_json(c: &Common, command: &str) -> CliResult<()> {
    match c.format {
        Some(Format::Csv) => Err(CliError::Usage(format!("{command} output is JSON only"))),
        _ => Ok(()),
    }
}

fn worker_pool(c: &Common) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(c.workers as usize)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", c.workers)))
}

fn emit(out: Option<&Path>, content: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(content).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Usage(
                    format!("cannot write to standard output: {e}"),
                )),
                _ => Ok(()),
            }
        }
    }
}

fn to_csv<R: Serialize>(rows: &[R]) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Verification(format!("CSV serialization failed: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Verification(format!("CSV serialization failed: {e}")))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Verification(format!("JSON serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_table<R: Serialize>(c: &Common, rows: &[R]) -> CliResult<()> {
    let bytes = match table_format(c) {
        Format::Csv => to_csv(rows)?,
        Format::Json => to_json(rows)?,
    };
    emit(c.out.as_deref(), &bytes)
}

/// Also used for the summary line of commands whose data goes to stdout.
fn report(c: &Common, line: &str) {
    if c.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct JsonComplex {
    re: f64,
    im: f64,
}

impl From<Complex64> for JsonComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Serialize)]
struct SpectrumReport {
    delta: f64,
    d: f64,
    gamma: f64,
    d_tilde: f64,
    gamma_tilde: f64,
    region: &'static str,
    p: f64,
    q: f64,
    disc: f64,
    eigenvalues: Vec<JsonComplex>,
    eigenvalues_numeric: Vec<JsonComplex>,
    oracle_distance: f64,
    characteristic_residuals: Vec<f64>,
    eigenvector_residuals: Vec<Option<f64>>,
    biorthogonality: Option<Vec<Vec<JsonComplex>>>,
    biorthogonality_defect: Option<f64>,
    failures: Vec<String>,
}

fn cmd_spectrum(c: &Common) -> CliResult<()> {
    require_json(c, "spectrum")?;
    let params = model_params(c)?;
    let point = classify(&params)?;
    let l = build_lindblad(&params);
    let norm = l.max_norm().max(1.0);
    let spectrum = Spectrum::compute(&params);
    let numeric = eigenvalues_numeric(&l)?;
    let oracle_distance = matched_distance(&spectrum.eigenvalues, &numeric);
    let cp = cardano_params(&params);

    let bio = spectrum.biorthogonality();
    let bio_defect = bio.map(|m| {
        let mut worst: f64 = 0.0;
        for (i, row) in m.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - target).norm());
            }
        }
        worst
    });

    let mut failures = Vec::new();
    for (nu, r) in spectrum.residuals.iter().enumerate() {
        if let Some(r) = r {
            if !(*r <= EIGENVECTOR_TOL * norm) {
                failures.push(format!("eigenvector residual of z{nu} is {r:e}"));
            }
        }
    }
    for (nu, r) in spectrum.char_residuals.iter().enumerate() {
        if !(*r <= CHAR_RESIDUAL_TOL * norm.powi(4)) {
            failures.push(format!("|det(L - z{nu})| is {r:e}"));
        }
    }
    // At an exceptional point the dense solver is only accurate to a root of
    // machine precision, so the comparison is skipped there.
    if !point.region.is_exceptional() && !(oracle_distance <= ORACLE_TOL * norm) {
        failures.push(format!(
            "closed form and dense solver differ by {oracle_distance:e}"
        ));
    }
    if let Some(defect) = bio_defect {
        if !(defect <= BIORTHOGONALITY_TOL) {
            failures.push(format!("biorthogonality defect {defect:e}"));
        }
    }

    let report = SpectrumReport {
        delta: params.delta,
        d: params.d,
        gamma: params.gamma,
        d_tilde: point.d_tilde,
        gamma_tilde: point.gamma_tilde,
        region: point.region.as_str(),
        p: cp.p,
        q: cp.q,
        disc: cp.disc,
        eigenvalues: spectrum.eigenvalues.iter().map(|&z| z.into()).collect(),
        eigenvalues_numeric: numeric.iter().map(|&z| z.into()).collect(),
        oracle_distance,
        characteristic_residuals: spectrum.char_residuals.to_vec(),
        eigenvector_residuals: spectrum.residuals.to_vec(),
        biorthogonality: bio.map(|m| {
            m.iter()
                .map(|row| row.iter().map(|&z| z.into()).collect())
                .collect()
        }),
        biorthogonality_defect: bio_defect,
        failures: failures.clone(),
    };
    emit(c.out.as_deref(), &to_json(&report)?)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

fn cmd_phase_diagram(c: &Common) -> CliResult<()> {
    let d_axis = axis(c.d_min, c.d_max, c.nd, (0.0, 6.0, 300))?;
    let g_axis = axis(c.gamma_min, c.gamma_max, c.ngamma, (0.0, 16.0, 300))?;
    let grid: Vec<PhasePoint> = worker_pool(c)?.install(|| phase_diagram(&d_axis, &g_axis))?;
    write_table(c, &grid)
}

fn cmd_ep_curve(c: &Common) -> CliResult<()> {
    let d_axis = axis(c.d_min, c.d_max, c.nd, (ep3_d_tilde(), 10.0, 200))?;
    let rows: Vec<EpCurvePoint> = d_axis
        .values()
        .map(ep_curve_point)
        .collect::<crate::Result<_>>()?;
    write_table(c, &rows)?;
    let worst = rows
        .iter()
        .map(|r| r.disc_minus.max(r.disc_plus))
        .fold(0.0, f64::max);
    if !(worst <= EP_CURVE_TOL) {
        return Err(CliError::Verification(format!(
            "EP2 curve discriminant residual {worst:e} exceeds {EP_CURVE_TOL:e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Ep3Report {
    delta: f64,
    d: f64,
    gamma: f64,
    eigenvalue: JsonComplex,
    d_numeric: f64,
    gamma_numeric: f64,
    d_error: f64,
    gamma_error: f64,
}

fn cmd_ep3(c: &Common) -> CliResult<()> {
    require_json(c, "ep3")?;
    let delta = c.delta;
    if delta == 0.0 || !delta.is_finite() {
        return Err(CliError::Usage(format!(
            "the EP3 point scales with δ and needs δ != 0, got {delta}"
        )));
    }
    let (d, g, z) = ep3_point();
    let (d_num, g_num) = locate_ep3_numeric();
    let scale = delta.abs();
    let report = Ep3Report {
        delta,
        d: d * scale,
        gamma: g * scale,
        eigenvalue: (z * scale).into(),
        d_numeric: d_num * scale,
        gamma_numeric: g_num * scale,
        d_error: (d_num - d).abs() * scale,
        gamma_error: (g_num - g).abs() * scale,
    };
    emit(c.out.as_deref(), &to_json(&report)?)
}

#[derive(Debug, Serialize)]
struct EvolveRow {
    t: f64,
    re_ee: f64,
    re_gg: f64,
    re_eg: f64,
    im_eg: f64,
    trace_dev: f64,
    dist_eq: f64,
}

fn cmd_evolve(c: &Common) -> CliResult<()> {
    let params = model_params(c)?;
    let traj = evolve_rotating(&params, &c.rho0.state(), c.t_max.unwrap_or(40.0), c.dt)?;
    let rows: Vec<EvolveRow> = (0..traj.len())
        .map(|k| {
            let rho = &traj.states[k];
            EvolveRow {
                t: traj.times[k],
                re_ee: rho.ee.re,
                re_gg: rho.gg.re,
                re_eg: rho.eg.re,
                im_eg: rho.eg.im,
                trace_dev: traj.trace_dev[k],
                dist_eq: traj.dist_eq[k],
            }
        })
        .collect();
    write_table(c, &rows)?;

    let final_dist = traj.final_dist_eq().unwrap_or(f64::NAN);
    report(c, &format!("final dist_eq = {final_dist:e}"));
    let (trace, herm) = (traj.max_trace_dev(), traj.max_herm_dev());
    if !(trace <= CONSERVATION_TOL && herm <= CONSERVATION_TOL) {
        return Err(CliError::Verification(format!(
            "conservation violated: trace deviation {trace:e}, Hermiticity deviation {herm:e}"
        )));
    }
    Ok(())
}

fn cmd_verify_frame(c: &Common, splitting: f64, omega: f64, tol: f64) -> CliResult<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {tol}"
        )));
    }
    let lab = LabParams::new(splitting, omega, c.d.unwrap_or(1.0), c.gamma.unwrap_or(0.3))?;
    let t_max = c.t_max.unwrap_or(10.0);
    let rho0 = c.rho0.state();
    let diff = verify_frame_equivalence(&lab, &rho0, t_max, c.dt)?;
    let errors = ORDER_STEPS
        .iter()
        .map(|&dt| verify_frame_equivalence(&lab, &rho0, t_max, dt))
        .collect::<crate::Result<Vec<_>>>()?;
    let order = convergence_order(&ORDER_STEPS, &errors);

    println!("frame difference {diff:e} at dt = {} (tol {tol:e})", c.dt);
    println!("measured order {order:.3} from dt = {ORDER_STEPS:?}");
    let mut failures = Vec::new();
    if !(diff <= tol) {
        failures.push(format!("frame difference {diff:e} exceeds {tol:e}"));
    }
    if !((order - 4.0).abs() <= 0.3) {
        failures.push(format!("measured order {order:.3} is outside 4 ± 0.3"));
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

fn cmd_verify(c: &Common, names: &[String], tol_scale: f64) -> CliResult<()> {
    let config = VerifyConfig::new(c.seed, tol_scale)?;
    let checks: Vec<Check> = if names.is_empty() {
        Check::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|n| n.trim().parse())
            .collect::<crate::Result<_>>()?
    };
    let pool = worker_pool(c)?;
    let results = pool.install(|| verify::run(&checks, &config));
    let mut failed = 0;
    for result in &results {
        println!("{result}");
        if !result.passed() {
            failed += 1;
        }
    }
    println!(
        "{} of {} checks passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{failed} check(s) failed")))
    }
}
