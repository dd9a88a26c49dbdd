//! `lockdown-opt`: run uncontrolled and optimally controlled epidemic scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lockdown_core::calibration::{builtin, Calibration};
use lockdown_core::chart::write_chart_svg;
use lockdown_core::config::{load_calibration, save_calibration, to_config_string};
use lockdown_core::control::{AdjointForm, SolverConfig};
use lockdown_core::costs::CostShape;
use lockdown_core::dynamics::TimeGrid;
use lockdown_core::export::{
    format_money, read_summary_json, write_comparison_json, write_summary_json,
    write_timeseries_csv,
};
use lockdown_core::scenarios::{compare, run_controlled, run_uncontrolled, ReportSummary, ScenarioReport};
use lockdown_core::Error;

const OUT_ENV: &str = "LOCKDOWN_OPT_OUT";

#[derive(Parser)]
#[command(name = "lockdown-opt", version, about = "Optimal lockdown schedules for an age-structured SQAIRD epidemic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run without any lockdown.
    Simulate(RunArgs),
    /// Find the optimal lockdown schedule by forward-backward sweep.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare two saved summaries, or run a calibration with and without control.
    Compare {
        /// Baseline summary JSON.
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        /// Summary JSON compared against the baseline.
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print a calibration as a config file, or export it.
    Calibrate {
        /// Built-in name (exp1, exp2) or config file path.
        #[arg(long, default_value = "exp1")]
        calib: String,
        /// Write the config here instead of printing it.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Built-in name (exp1, exp2) or config file path.
    #[arg(long, default_value = "exp1")]
    calib: String,
    /// Horizon in days.
    #[arg(long, default_value_t = TimeGrid::DEFAULT_HORIZON)]
    horizon: f64,
    /// Integration step in days; must divide the horizon.
    #[arg(long, default_value_t = TimeGrid::DEFAULT_STEP)]
    step: f64,
    /// Lockdown-rate bound applied to every group.
    #[arg(long, conflicts_with = "total_lockdown")]
    u_max: Option<f64>,
    /// Allow total lockdown: u_max = 1 - gamma for every group.
    #[arg(long)]
    total_lockdown: bool,
    /// Isolation cost shape: convex or concave.
    #[arg(long)]
    shape: Option<CostShape>,
    /// Output directory (default: $LOCKDOWN_OPT_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base name of the output files (default: the scenario id).
    #[arg(long)]
    name: Option<String>,
    /// Skip the SVG chart.
    #[arg(long)]
    no_chart: bool,
}

#[derive(Args)]
struct SolverArgs {
    /// Relaxation weight of each sweep update, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    /// Stop once the control residual falls below this.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Drop the cross-group terms from the costate equations.
    #[arg(long)]
    decoupled_adjoint: bool,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    kind: &'static str,
    detail: String,
}

impl Failure {
    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure {
            code: 3,
            kind: "io",
            detail: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let (code, kind) = match &err {
            Error::NotConverged { .. } => (2, "not_converged"),
            Error::Blowup { .. } => (2, "blowup"),
            Error::Io(_) => (3, "io"),
            Error::InvalidInput(_) | Error::GridMismatch(_) => (1, "invalid_input"),
            Error::Calibration { .. } => (1, "calibration"),
            Error::Config(_) => (1, "config"),
        };
        Failure {
            code,
            kind,
            detail: err.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn with_path<T>(path: &Path, result: lockdown_core::Result<T>) -> Result<T, Failure> {
    result.map_err(|e| match e {
        Error::Io(io) => Failure::io(path, io),
        other => other.into(),
    })
}

fn load(source: &str) -> Result<Calibration, Failure> {
    match builtin(source) {
        Some(cal) => Ok(cal?),
        None => with_path(Path::new(source), load_calibration(Path::new(source))),
    }
}

impl RunArgs {
    fn calibration(&self) -> Result<Calibration, Failure> {
        let mut cal = load(&self.calib)?;
        if self.total_lockdown {
            cal = cal.with_total_lockdown();
        }
        if let Some(u) = self.u_max {
            cal = cal.with_lockdown_bound(u);
        }
        if let Some(shape) = self.shape {
            cal = cal.with_shape(shape);
        }
        cal.validate()?;
        Ok(cal)
    }

    fn grid(&self) -> Result<TimeGrid, Failure> {
        Ok(TimeGrid::new(self.horizon, self.step)?)
    }

    fn out_dir(&self) -> Result<PathBuf, Failure> {
        let dir = self
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        Ok(dir)
    }
}

impl SolverArgs {
    fn config(&self, grid: TimeGrid) -> Result<SolverConfig, Failure> {
        let config = SolverConfig {
            max_iterations: self.max_iter,
            relaxation: self.omega,
            tolerance: self.tol,
            grid,
            adjoint_form: if self.decoupled_adjoint {
                AdjointForm::Decoupled
            } else {
                AdjointForm::Coupled
            },
        };
        config.validate()?;
        Ok(config)
    }
}

/// Grid times without accumulated floating-point noise (161.2, not 161.20000000000002).
fn day(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

fn print_summary(s: &ReportSummary) {
    println!("scenario={}", s.id);
    println!("J={}", format_money(s.objective));
    println!(
        "peak_infectious={:.0} peak_day={}",
        s.peak_infectious.value,
        day(s.peak_infectious.day)
    );
    println!("final_quarantined={:.0}", s.final_quarantined);
    if s.controlled {
        println!("iterations={} lockdown_end={}", s.iterations, day(s.lockdown_end));
        for g in &s.groups {
            println!("group={} t0={} t1={}", g.id.label(), day(g.t0), day(g.t1));
        }
    }
}

/// Writes CSV, JSON and (optionally) SVG for one report.
fn emit(report: &ScenarioReport, dir: &Path, name: &str, chart: bool) -> Outcome {
    let csv = dir.join(format!("{name}.csv"));
    with_path(&csv, write_timeseries_csv(report, &csv))?;
    let json = dir.join(format!("{name}.json"));
    with_path(&json, write_summary_json(&report.summary(), &json))?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    if chart {
        let svg = dir.join(format!("{name}.svg"));
        with_path(&svg, write_chart_svg(report, &svg))?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn run_and_emit(run: &RunArgs, solver: Option<&SolverArgs>) -> Result<ScenarioReport, Failure> {
    let cal = run.calibration()?;
    let grid = run.grid()?;
    let dir = run.out_dir()?;
    let report = match solver {
        Some(s) => run_controlled(&cal, &s.config(grid)?)?,
        None => run_uncontrolled(&cal, &grid)?,
    };
    let name = run.name.clone().unwrap_or_else(|| report.id.clone());
    print_summary(&report.summary());
    emit(&report, &dir, &name, !run.no_chart)?;
    Ok(report)
}

fn print_comparison(summaries: &[ReportSummary]) -> Result<lockdown_core::scenarios::ComparisonReport, Failure> {
    let report = compare(summaries)?;
    for pair in &report.pairs {
        println!("a={} b={}", pair.a, pair.b);
        println!("J_ratio={:.6}", pair.j_ratio);
        println!("J_difference={}", format_money(pair.j_difference));
        println!("peak_ratio={:.6}", pair.peak_ratio);
        println!("peak_day_shift={}", day(pair.peak_day_shift));
        println!("lockdown_shift={}", day(pair.lockdown_shift));
        println!(
            "quarantined_share_a={:.6} quarantined_share_b={:.6}",
            pair.quarantined_share_a, pair.quarantined_share_b
        );
    }
    Ok(report)
}

fn execute(cli: Cli) -> Outcome {
    match cli.command {
        Command::Simulate(run) => run_and_emit(&run, None).map(drop),
        Command::Optimize { run, solver } => run_and_emit(&run, Some(&solver)).map(drop),
        Command::Compare { a, b, run, solver } => {
            if let (Some(a), Some(b)) = (a, b) {
                let summaries = [
                    with_path(&a, read_summary_json(&a))?,
                    with_path(&b, read_summary_json(&b))?,
                ];
                print_comparison(&summaries)?;
                return Ok(());
            }
            // with --name, the two runs become <name>-uncontrolled and <name>-controlled
            let named = |suffix: &str| RunArgs {
                name: run.name.as_ref().map(|n| format!("{n}-{suffix}")),
                ..run.clone()
            };
            let free = run_and_emit(&named("uncontrolled"), None)?;
            let controlled = run_and_emit(&named("controlled"), Some(&solver))?;
            let report = print_comparison(&[free.summary(), controlled.summary()])?;
            let stem = run.name.clone().unwrap_or_else(|| free.calibration.clone());
            let path = run.out_dir()?.join(format!("{stem}-comparison.json"));
            with_path(&path, write_comparison_json(&report, &path))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Calibrate { calib, export } => {
            let cal = load(&calib)?;
            match export {
                Some(path) => {
                    with_path(&path, save_calibration(&cal, &path))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{}", to_config_string(&cal)?),
            }
            Ok(())
        }
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            let first = err.to_string();
            let reason = first.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error=usage detail=\"{}\"", one_line(reason).replace('"', "'"));
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error={} detail=\"{}\"", f.kind, one_line(&f.detail).replace('"', "'"));
            ExitCode::from(f.code)
        }
    }
}
