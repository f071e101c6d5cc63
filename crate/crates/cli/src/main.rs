//! `trimer`: sweeps, spectra, exceptional-point search, verification and
//! coupling fits for the driven three-oscillator chain.
//!
//! Exit codes: 0 ok, 1 verification breach, 2 invalid input, 3 solver
//! failure, 4 no steady state, 5 spectrum is not a doublet.

mod output;
mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use trimer_core::dynamics::{detect_ep, sweep_eigenvalues, EpRecord};
use trimer_core::model::{ep_drive_strengths, EpDriveStrengths};
use trimer_core::params::Knob;
use trimer_core::spectrum::{
    estimate_coupling_in, find_peaks_in, linear_grid, spectrum_closed_form, spectrum_ep, spectrum_fourier_for,
    spectrum_lorentzian, CouplingEstimate, Peak, SpectrumMethod,
};
use trimer_core::{ChainParams, Error};

use output::{csv_spectrum, fmt_f64, parse_spectrum_csv, sidecar_path, to_json, write_atomic, GridSpec, Range};

#[derive(Parser)]
#[command(name = "trimer", version, about = "Driven dissipative three-oscillator chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the dynamical matrix over a drive-strength grid.
    Eig(EigArgs),
    /// Optical spectrum of oscillator B.
    Spectrum(SpectrumArgs),
    /// Locate exceptional points as one parameter varies.
    Ep(EpArgs),
    /// Cross-check closed forms against the numerics.
    Verify(verify::VerifyArgs),
    /// Estimate the coupling J from a doublet spectrum.
    Fit(FitArgs),
}

/// Model parameters, in units of γ when `--gamma 1`.
#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    gamma: f64,
    /// Detuning of the driven oscillator B.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta_a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta_c: f64,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    j: f64,
    /// Two-photon drive amplitude Ω.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    omega_drive: f64,
}

impl ParamArgs {
    pub fn to_params(&self) -> Result<ChainParams, Error> {
        let p = ChainParams {
            delta_a: self.delta_a,
            delta: self.delta,
            delta_c: self.delta_c,
            j: self.j,
            gamma: self.gamma,
            omega_drive: self.omega_drive,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct EigArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Drive grid `min:max:points`; overrides --omega-drive.
    #[arg(long, allow_hyphen_values = true)]
    omega: GridSpec,
    /// CSV destination; stdout if absent. A `.json` sidecar is written next to it.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Closed,
    Lorentzian,
    Fourier,
    Ep,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Frequency grid `min:max:points`.
    #[arg(long, default_value = "-3:3:2001", allow_hyphen_values = true)]
    w: GridSpec,
    #[arg(long, value_enum, default_value_t = MethodArg::Closed)]
    method: MethodArg,
    /// CSV destination; stdout if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// JSON sidecar; defaults to the output path with a `.json` extension.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct EpArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Parameter to vary: omega_drive, delta, j, gamma, delta_a or delta_c.
    #[arg(long, default_value = "omega_drive")]
    knob: String,
    /// Knob range `min:max`.
    #[arg(long, allow_hyphen_values = true)]
    range: Range,
    /// Knob resolution of the refinement.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Spectrum CSV with header `omega,s_value`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Failure carrying its exit code.
pub struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) | Error::NotResonant { .. } | Error::InvalidGrid(_) | Error::NoEmission => 2,
            Error::NoSteadyState { .. } => 4,
            Error::NotDoublet(_) => 5,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: format!("i/o: {e}"),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// Writes to `path`, or stdout when there is none.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes())?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn grid_values(g: GridSpec) -> Result<Vec<f64>, Failure> {
    Ok(linear_grid(g.min, g.max, g.points)?)
}

#[derive(Serialize)]
struct GridReport {
    min: f64,
    max: f64,
    points: usize,
}

impl From<GridSpec> for GridReport {
    fn from(g: GridSpec) -> Self {
        Self {
            min: g.min,
            max: g.max,
            points: g.points,
        }
    }
}

#[derive(Serialize)]
struct EigSidecar {
    params: ChainParams,
    omega: GridReport,
    critical_drive: f64,
    /// Analytic exceptional-point drives; absent for detuned A or C.
    ep_drives: Option<EpDriveStrengths>,
}

fn cmd_eig(args: &EigArgs) -> Result<(), Failure> {
    let params = args.params.to_params()?;
    let grid = grid_values(args.omega)?;
    let trace = sweep_eigenvalues(&params, Knob::OmegaDrive, &grid)?;
    let mut csv = String::with_capacity(64 * 6 * grid.len());
    csv.push_str("omega,branch,re_lambda,im_lambda,stable\n");
    for (k, w) in grid.iter().enumerate() {
        for (b, branch) in trace.branches.iter().enumerate() {
            let l = branch[k];
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_f64(*w),
                b,
                fmt_f64(l.re),
                fmt_f64(l.im),
                trace.stable[k]
            );
        }
    }
    emit(args.output.as_deref(), &csv)?;
    if let Some(out) = &args.output {
        let sidecar = EigSidecar {
            params,
            omega: args.omega.into(),
            critical_drive: params.critical_drive(),
            ep_drives: ep_drive_strengths(&params).ok(),
        };
        write_atomic(&sidecar_path(out), to_json(&sidecar).as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumSidecar {
    params: ChainParams,
    method: SpectrumMethod,
    w: GridReport,
    peaks: Vec<Peak>,
    /// Expected doublet positions ±√2·J; empty when J = 0.
    markers: Vec<f64>,
    max_value: f64,
    grid_integral: f64,
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), Failure> {
    let params = args.params.to_params()?;
    let grid = grid_values(args.w)?;
    let trace = match args.method {
        MethodArg::Closed => spectrum_closed_form(&params, &grid)?,
        MethodArg::Lorentzian => spectrum_lorentzian(&params, &grid)?,
        MethodArg::Fourier => spectrum_fourier_for(&params, &grid)?,
        MethodArg::Ep => spectrum_ep(&params, &grid)?,
    };
    emit(args.output.as_deref(), &csv_spectrum(&trace.omega_grid, &trace.values))?;
    let sidecar = args
        .sidecar
        .clone()
        .or_else(|| args.output.as_deref().map(sidecar_path));
    if let Some(path) = sidecar {
        let marker = std::f64::consts::SQRT_2 * params.j;
        let report = SpectrumSidecar {
            params,
            method: trace.method,
            w: args.w.into(),
            peaks: trace.peaks.clone(),
            markers: if params.j > 0.0 {
                vec![-marker, marker]
            } else {
                Vec::new()
            },
            max_value: trace.max_value(),
            grid_integral: trace.grid_integral(),
        };
        write_atomic(&path, to_json(&report).as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EpReport {
    params: ChainParams,
    knob: Knob,
    range: [f64; 2],
    tol: f64,
    eps: Vec<EpRecord>,
    /// Ω at which the analytic eigenvalues coalesce; absent for detuned A or C.
    analytic: Option<EpDriveStrengths>,
    critical_drive: f64,
}

fn cmd_ep(args: &EpArgs) -> Result<(), Failure> {
    let params = args.params.to_params()?;
    let knob: Knob = args.knob.parse()?;
    let eps = detect_ep(&params, knob, (args.range.min, args.range.max), args.tol)?;
    let report = EpReport {
        params,
        knob,
        range: [args.range.min, args.range.max],
        tol: args.tol,
        eps,
        analytic: ep_drive_strengths(&params).ok(),
        critical_drive: params.critical_drive(),
    };
    emit(args.output.as_deref(), &to_json(&report))
}

#[derive(Serialize)]
struct FitReport {
    input: String,
    #[serde(flatten)]
    estimate: CouplingEstimate,
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| invalid(format!("cannot read {}: {e}", args.input.display())))?;
    let (grid, values) = parse_spectrum_csv(&text).map_err(|e| invalid(format!("{}: {e}", args.input.display())))?;
    if grid.len() < 3 {
        return Err(invalid("spectrum needs at least 3 rows"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan()) || values.iter().any(|v| !v.is_finite()) {
        return Err(invalid(
            "spectrum must have strictly increasing omega and finite values",
        ));
    }
    let estimate = estimate_coupling_in(&grid, &values).map_err(|e| {
        let positions: Vec<String> = find_peaks_in(&grid, &values)
            .iter()
            .map(|p| format!("{:.5}", p.position))
            .collect();
        let mut f = Failure::from(e);
        f.message = format!("{} (peaks at [{}])", f.message, positions.join(", "));
        f
    })?;
    let report = FitReport {
        input: args.input.display().to_string(),
        estimate,
    };
    emit(args.output.as_deref(), &to_json(&report))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Eig(a) => cmd_eig(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Ep(a) => cmd_ep(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Fit(a) => cmd_fit(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("trimer: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
