mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wghz::analysis::{decay_params, fidelity_surface, pd_sweep, AxisConvention, SweepParameter, SweepSpec};
use wghz::detection::OutcomeClass;
use wghz::protocol::run_protocol;
use wghz::validate::run_checks;

use config::RunConfig;

const UNITS: &str = "\
Units: every rate in a config (delta, lambda_c, omega, kappa, gamma_a) is a
multiple of a reference rate γ and times are in units of 1/γ. eta_d is the
detector efficiency in [0, 1].

Exit status: 0 on success, 1 when a validation check or computation fails,
2 when the configuration cannot be read or is invalid.";

#[derive(Parser)]
#[command(name = "wghz", version, about = "W-to-GHZ conversion with cavity-emitted photons", after_help = UNITS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    /// Independent κ/γ and γ_a/γ axes.
    A,
    /// λ_c/γ_a axis with κ tied to γ_a.
    B,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ideal pipeline and print a JSON summary.
    #[command(after_help = UNITS)]
    IdealRun {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form vs coefficient-based success probability over κt, as CSV.
    #[command(after_help = UNITS)]
    SweepDecay {
        #[command(flatten)]
        common: Common,
        /// Number of κt points.
        #[arg(long)]
        grid_steps: Option<usize>,
        /// Comma-separated η/κ values.
        #[arg(long, value_delimiter = ',')]
        eta_over_kappa: Option<Vec<f64>>,
    },
    /// Master-equation fidelity estimators over a grid, as CSV.
    #[command(after_help = UNITS)]
    FidelitySurface {
        #[command(flatten)]
        common: Common,
        /// Points per axis.
        #[arg(long)]
        grid_steps: Option<usize>,
        #[arg(long, value_enum)]
        axis_convention: Option<Axis>,
    },
    /// Run the invariant checks and report each one.
    #[command(after_help = UNITS)]
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Check(String),
}

impl From<wghz::Error> for Failure {
    fn from(e: wghz::Error) -> Self {
        Failure::Check(e.to_string())
    }
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn emit(common: &Common, cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match common.out.as_ref().or(cfg.out.as_ref()) {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Check(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    RunConfig::load(common.config.as_deref()).map_err(Failure::Config)
}

fn load_valid(common: &Common) -> Result<RunConfig, Failure> {
    let cfg = load(common)?;
    cfg.params.validate().map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(layout) = &cfg.layout {
        layout.validate().map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct PatternSummary {
    pattern: String,
    class: OutcomeClass,
    probability: f64,
    fidelity: f64,
}

#[derive(Serialize)]
struct IdealRunReport {
    eta_d: f64,
    interaction_time: f64,
    success_probability: f64,
    predicted_probability: f64,
    fidelity: f64,
    min_fidelity: f64,
    reject_probability: f64,
    patterns: Vec<PatternSummary>,
}

fn ideal_run(common: &Common) -> Result<(), Failure> {
    let cfg = load_valid(common)?;
    let run = run_protocol(&cfg.params, &cfg.layout())?;
    let report = IdealRunReport {
        eta_d: cfg.params.eta_d,
        interaction_time: run.interaction_time,
        success_probability: run.success_probability,
        predicted_probability: run.predicted_probability,
        fidelity: run.fidelity,
        min_fidelity: run.min_fidelity,
        reject_probability: run.detection.reject_probability(),
        patterns: run
            .results
            .iter()
            .map(|r| PatternSummary {
                pattern: r.pattern.to_string(),
                class: r.class,
                probability: r.probability,
                fidelity: r.fidelity,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(common, &cfg, &text)
}

fn sweep_decay(common: &Common, grid_steps: Option<usize>, ratios: Option<Vec<f64>>) -> Result<(), Failure> {
    let cfg = load(common)?;
    let mut grid = cfg.decay_sweep.kappa_t;
    if let Some(n) = grid_steps {
        grid.steps = n;
    }
    grid.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let ratios = ratios.unwrap_or_else(|| cfg.decay_sweep.eta_over_kappa.clone());
    if ratios.is_empty() {
        return Err(Failure::Config("no eta/kappa values given".into()));
    }
    let mut out = String::from("eta_over_kappa,kappa_t,p_d_closed,p_d_numeric,abs_diff\n");
    for ratio in ratios {
        let fixed = decay_params(ratio).map_err(|e| Failure::Config(e.to_string()))?;
        let spec = SweepSpec { parameter: SweepParameter::KappaT, grid, fixed };
        for p in pd_sweep(&spec)? {
            let _ = writeln!(out, "{},{},{},{},{}", num(ratio), num(p.abscissa), num(p.closed_form), num(p.numeric), num(p.abs_diff));
        }
    }
    emit(common, &cfg, &out)
}

fn surface(common: &Common, grid_steps: Option<usize>, axis: Option<Axis>) -> Result<(), Failure> {
    let cfg = load(common)?;
    let mut spec = cfg.surface.clone();
    if let Some(n) = grid_steps {
        spec = spec.with_steps(n);
    }
    if let Some(a) = axis {
        spec.axis = match a {
            Axis::A => AxisConvention::A,
            Axis::B => AxisConvention::B,
        };
    }
    spec.points().map_err(|e| Failure::Config(e.to_string()))?;
    let rows = fidelity_surface(&spec)?;
    let mut out = String::new();
    if spec.axis == AxisConvention::B {
        out.push_str("lambda_c_over_gamma_a,");
    }
    out.push_str("kappa_over_gamma,gamma_a_over_gamma,fidelity_estimator_a,fidelity_estimator_b\n");
    for r in rows {
        if let Some(ratio) = r.point.lambda_over_gamma_a {
            let _ = write!(out, "{},", num(ratio));
        }
        let f = r.fidelity;
        let _ = writeln!(out, "{},{},{},{}", num(r.point.kappa), num(r.point.gamma_a), num(f.estimator_a), num(f.estimator_b));
    }
    emit(common, &cfg, &out)
}

fn validate(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let report = run_checks(&cfg.params, &cfg.layout());
    let mut out = String::new();
    for c in &report.checks {
        let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    emit(common, &cfg, &out)?;
    match report.first_failure() {
        Some(c) => Err(Failure::Check(format!("check `{}` failed: {}", c.name, c.detail))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::IdealRun { common } => ideal_run(common),
        Command::SweepDecay { common, grid_steps, eta_over_kappa } => sweep_decay(common, *grid_steps, eta_over_kappa.clone()),
        Command::FidelitySurface { common, grid_steps, axis_convention } => surface(common, *grid_steps, *axis_convention),
        Command::Validate { common } => validate(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
