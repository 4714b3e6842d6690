mod commands;
mod plot;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Thin-gap field concentration laboratory.
#[derive(Parser, Debug)]
#[command(name = "narrowgap", version)]
struct Cli {
    /// Worker threads for sweeps and component solves.
    #[arg(long, global = true, env = "NARROWGAP_WORKERS")]
    workers: Option<usize>,

    /// Relative residual target of the iterative solver.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one scene and write result.json, the mesh and the field CSVs.
    Solve(SolveArgs),
    /// Solve a scene template over an epsilon grid and fit the rates.
    Sweep(SweepArgs),
    /// Run the invariant suite on small meshes.
    Verify(VerifyArgs),
    /// Evaluate the radial quadrature oracle.
    Oracle(OracleArgs),
    /// Render a stored field as an SVG heatmap.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Scene JSON file or preset name (strict, flat, quartic, flat_boundary,
    /// strict_boundary).
    #[arg(long)]
    scene: String,

    /// Gap width; overrides the value in the scene.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    scene: SceneArgs,

    #[arg(long)]
    out: PathBuf,

    /// Bins of the lateral gap profile.
    #[arg(long, default_value_t = 40)]
    bins: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scene: SceneArgs,

    #[arg(long)]
    out: PathBuf,

    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Directory for verify.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 0.0)]
    r0: f64,
    #[arg(long, default_value_t = 1.0)]
    r1: f64,
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scale {
    Log,
    Linear,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Output directory of a previous solve.
    #[arg(long)]
    out: PathBuf,

    /// Nodal field (u, v1, v2, v3, v0) or a gradient magnitude (grad_u, grad_v1, ...).
    #[arg(long, default_value = "grad_u")]
    field: String,

    /// all, sigma, gap, gap:<r>, slab:<z>:<t> or exterior.
    #[arg(long, default_value = "all")]
    region: String,

    #[arg(long, value_enum, default_value_t = Scale::Log)]
    scale: Scale,

    /// Defaults to `<out>/<field>.svg`.
    #[arg(long)]
    svg: Option<PathBuf>,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<narrowgap::Error> for Failure {
    fn from(e: narrowgap::Error) -> Self {
        Self {
            code: if e.is_validation() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

fn run(cli: Cli) -> Outcome {
    let workers = cli.workers;
    if workers == Some(0) {
        return Err(Failure::input("--workers must be at least 1"));
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Failure::input(format!("--tol must lie in (0, 1), got {t}")));
        }
    }
    let go = move || match cli.command {
        Command::Solve(a) => commands::solve(&a, cli.tol),
        Command::Sweep(a) => commands::sweep(&a, cli.tol, workers),
        Command::Verify(a) => verify::run(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Plot(a) => plot::run(&a),
    };
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure {
                code: 4,
                message: format!("worker pool: {e}"),
            })?
            .install(go),
        None => go(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(4)
        }
    }
}
