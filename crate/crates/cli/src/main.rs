//! `revolve`: minimum-energy configurations and equilibrium measures on
//! surfaces of revolution.

mod commands;
mod instance;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use revolve_core::KernelSpec;

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The solver stopped before reaching its tolerance.
    NotConverged,
    /// A check covered by a theorem failed.
    ChecksFailed,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Self::Success => 0,
            Self::NotConverged => 2,
            Self::ChecksFailed => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "revolve", version, about = "Energy minimization and equilibrium measures on surfaces of revolution")]
#[command(after_help = "Set REVOLVE_THREADS to cap the worker threads.\nExit codes: 0 success, 1 usage or I/O error, 2 not converged, 3 a guaranteed check failed.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a kernel at point pairs.
    KernelEval(KernelEvalArgs),
    /// Minimize the discrete energy of N points.
    Optimize(OptimizeArgs),
    /// Solve the discretized equilibrium problem.
    Equilibrium(EquilibriumArgs),
    /// Run the structural checks on an instance.
    Verify(VerifyArgs),
    /// Render a configuration or measure as SVG.
    Plot(PlotArgs),
}

fn parse_kernel(s: &str) -> std::result::Result<KernelSpec, String> {
    let k: KernelSpec = s.parse().map_err(|e: revolve_core::Error| e.to_string())?;
    k.validate().map_err(|e| e.to_string())?;
    Ok(k)
}

/// Generator curve, from a file or an instance string.
#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Curve JSON file, e.g. {"kind":"circle","center":[3,0],"radius":1}.
    #[arg(long, value_name = "FILE")]
    curve: Option<PathBuf>,
    /// Instance string: circle:CX,CY,R | arc:CX,CY,R,LO,HI | segment:X,Y0,Y1 | ellipse:CX,CY,A,B.
    #[arg(long, value_name = "SPEC")]
    instance: Option<String>,
}

#[derive(Debug, Args)]
pub struct KernelEvalArgs {
    /// Kernel: K, KR:<R>, Kinf, Kinf-sym, log3d or riesz:<s>.
    #[arg(long, value_parser = parse_kernel)]
    kernel: KernelSpec,
    /// First argument, `x,y` (or `x,y,zeta` for 3D kernels); repeatable.
    #[arg(long, required = true)]
    z: Vec<String>,
    /// Second argument, paired with each --z in order.
    #[arg(long, required = true)]
    w: Vec<String>,
    /// Also print the trapezoid-quadrature value (kernel K only).
    #[arg(long)]
    oracle: bool,
    /// Quadrature nodes for --oracle.
    #[arg(long, default_value_t = 16384)]
    n: usize,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_parser = parse_kernel)]
    kernel: KernelSpec,
    #[command(flatten)]
    curve: CurveArgs,
    /// Number of points.
    #[arg(long = "N", short = 'N')]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    grad_tol: f64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[arg(long, value_parser = parse_kernel)]
    kernel: KernelSpec,
    #[command(flatten)]
    curve: CurveArgs,
    /// Number of nodes.
    #[arg(long, default_value_t = 401)]
    nodes: usize,
    /// Target Wolfe gap.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
    /// Support threshold; defaults to 1e-6 / nodes.
    #[arg(long)]
    threshold: Option<f64>,
    /// Also solve with this many times the nodes and report the drift in J.
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// monotone, convexity, kappa, aplus, pi3, kr-limit, sandwich or all.
    #[arg(long, default_value = "all")]
    check: String,
    #[arg(long, default_value = "circle:3,0,1")]
    instance: String,
    /// Point counts for the sandwich check.
    #[arg(long = "N", short = 'N', value_delimiter = ',', default_values_t = [10, 50, 100])]
    n: Vec<usize>,
    /// Grid points per axis for the convexity and kappa checks.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write one `<check>.json` per report here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Configuration JSON/CSV or measure CSV.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    curve: CurveArgs,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Only draw the generator half-plane.
    #[arg(long)]
    no_surface: bool,
    /// Omit nodes with weight at or below this.
    #[arg(long, default_value_t = 0.0)]
    min_weight: f64,
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("REVOLVE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().with_context(|| format!("REVOLVE_THREADS=`{v}` is not a thread count"))?;
    if n == 0 {
        bail!("REVOLVE_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> Result<Outcome> {
    configure_threads()?;
    match cli.command {
        Command::KernelEval(a) => commands::kernel_eval(&a),
        Command::Optimize(a) => commands::optimize(&a, argv),
        Command::Equilibrium(a) => commands::equilibrium(&a, argv),
        Command::Verify(a) => commands::verify(&a),
        Command::Plot(a) => commands::plot(&a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli, argv) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
