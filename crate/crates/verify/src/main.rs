use std::path::PathBuf;
use std::process::ExitCode;

use admlab::bracket::{GradientMethod, GradientStrategy};
use admlab::fixtures::{seeded_path, static_flat_path};
use admlab::TorusGrid;
use admlab_verify::config::DEFAULT_ODE_STEP;
use admlab_verify::{run_suite, SeedList, SuiteConfig, SuiteKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "verify", version, about = "Seeded numerical verification of constraint brackets and gaussian evolutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bracket relations of smeared constraints and coisotropy at the flat vacuum
    Dewitt(RunArgs),
    /// Jacobiator of the frozen-metric bracket against its anomaly
    Anomaly(RunArgs),
    /// Gaussian extensions, their action on the metric and the non-gaussianity identity
    Gaussian(RunArgs),
    /// Algebroid bracket against constraint brackets and the 4D bracket
    Algebroid(RunArgs),
    /// Bracket relation residuals under grid refinement
    Convergence(RunArgs),
    /// Every suite; convergence is included when three or more grid sizes are given
    All(RunArgs),
    /// Write a metric path file usable with --path
    Fixture(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Central,
    HigherOrder,
    ComplexStep,
}

impl From<Method> for GradientMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Central => GradientMethod::CentralFd,
            Method::HigherOrder => GradientMethod::HigherOrderFd,
            Method::ComplexStep => GradientMethod::ComplexStep,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Spatial dimension
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Grid points per axis; comma-separated for several resolutions
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Largest Fourier mode of seeded fields
    #[arg(long, default_value_t = 2)]
    kmax: usize,
    /// Perturbation amplitude of seeded metrics and momenta
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Seeds: `3`, `1,4,9` or `1..5`
    #[arg(long, default_value = "1..5")]
    seeds: SeedList,
    /// Gradient method for Poisson brackets
    #[arg(long, value_enum, default_value = "complex-step")]
    grad_method: Method,
    /// Relative finite-difference step
    #[arg(long, default_value_t = 1e-6)]
    grad_eta: f64,
    /// Richardson-extrapolate finite-difference gradients
    #[arg(long)]
    richardson: bool,
    /// RK4 step of gaussian extensions
    #[arg(long, default_value_t = DEFAULT_ODE_STEP)]
    ode_step: f64,
    /// Metric path file replacing the seeded paths
    #[arg(long)]
    path: Option<String>,
    /// Write the JSON report here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the table
    #[arg(long, conflicts_with = "table")]
    json: bool,
    /// Print the table (default)
    #[arg(long)]
    table: bool,
    /// Include wall-clock timings in the JSON report
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Args)]
struct TolArgs {
    #[arg(long)]
    tol_dewitt_shift_shift: Option<f64>,
    #[arg(long)]
    tol_dewitt_shift_lapse: Option<f64>,
    #[arg(long)]
    tol_dewitt_lapse_lapse: Option<f64>,
    #[arg(long)]
    tol_coisotropy: Option<f64>,
    #[arg(long)]
    tol_frozen_anomaly: Option<f64>,
    #[arg(long)]
    tol_killing_jacobiator: Option<f64>,
    #[arg(long)]
    tol_lapse_constancy: Option<f64>,
    #[arg(long)]
    tol_gaussianity: Option<f64>,
    #[arg(long)]
    tol_ode_halving: Option<f64>,
    #[arg(long)]
    tol_first_order_slope: Option<f64>,
    #[arg(long)]
    tol_gaussian_action: Option<f64>,
    #[arg(long)]
    tol_nongaussian_identity: Option<f64>,
    #[arg(long)]
    tol_witness_magnitude: Option<f64>,
    #[arg(long)]
    tol_witness_missing: Option<f64>,
    #[arg(long)]
    tol_compat: Option<f64>,
    #[arg(long)]
    tol_bracket_agreement: Option<f64>,
    #[arg(long)]
    tol_anchor_kernel: Option<f64>,
    #[arg(long)]
    tol_section_antisymmetry: Option<f64>,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    kmax: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the static flat path instead of a seeded one
    #[arg(long)]
    flat: bool,
    #[arg(long)]
    out: PathBuf,
}

fn config(suite: SuiteKind, a: &RunArgs) -> SuiteConfig {
    let mut c = SuiteConfig::new(suite);
    c.dim = a.dim;
    if !a.n.is_empty() {
        c.n = a.n.clone();
    }
    c.kmax = a.kmax;
    c.epsilon = a.eps;
    c.seeds = a.seeds.0.clone();
    c.gradient = GradientStrategy {
        method: a.grad_method.into(),
        eta: a.grad_eta,
        richardson: a.richardson,
    };
    c.ode_step = a.ode_step;
    c.path = a.path.clone();
    c.output = a.out.as_ref().map(|p| p.display().to_string());
    let t = &mut c.tolerances;
    let o = &a.tol;
    for (slot, value) in [
        (&mut t.dewitt_shift_shift, o.tol_dewitt_shift_shift),
        (&mut t.dewitt_shift_lapse, o.tol_dewitt_shift_lapse),
        (&mut t.dewitt_lapse_lapse, o.tol_dewitt_lapse_lapse),
        (&mut t.coisotropy, o.tol_coisotropy),
        (&mut t.frozen_anomaly, o.tol_frozen_anomaly),
        (&mut t.killing_jacobiator, o.tol_killing_jacobiator),
        (&mut t.lapse_constancy, o.tol_lapse_constancy),
        (&mut t.gaussianity, o.tol_gaussianity),
        (&mut t.ode_halving, o.tol_ode_halving),
        (&mut t.first_order_slope, o.tol_first_order_slope),
        (&mut t.gaussian_action, o.tol_gaussian_action),
        (&mut t.nongaussian_identity, o.tol_nongaussian_identity),
        (&mut t.witness_magnitude, o.tol_witness_magnitude),
        (&mut t.witness_missing, o.tol_witness_missing),
        (&mut t.compat, o.tol_compat),
        (&mut t.bracket_agreement, o.tol_bracket_agreement),
        (&mut t.anchor_kernel, o.tol_anchor_kernel),
        (&mut t.section_antisymmetry, o.tol_section_antisymmetry),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    c
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("VERIFY_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("VERIFY_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(suite: SuiteKind, args: &RunArgs) -> ExitCode {
    let config = config(suite, args);
    let report = match run_suite(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let json = if args.timings { report.to_json_with_timings() } else { report.to_json() };
    if let Some(out) = &args.out {
        if let Err(e) = std::fs::write(out, format!("{json}\n")) {
            eprintln!("error: cannot write {}: {e}", out.display());
            return ExitCode::from(2);
        }
    }
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report.to_table());
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn fixture(a: &FixtureArgs) -> ExitCode {
    let built = TorusGrid::new(a.dim, a.n).and_then(|g| {
        if a.flat {
            static_flat_path(&g)
        } else {
            seeded_path(&g, a.seed, a.kmax, a.eps)
        }
    });
    match built {
        Ok(path) => match std::fs::write(&a.out, path.to_json()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", a.out.display());
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match &cli.command {
        Command::Dewitt(a) => run(SuiteKind::Dewitt, a),
        Command::Anomaly(a) => run(SuiteKind::Anomaly, a),
        Command::Gaussian(a) => run(SuiteKind::Gaussian, a),
        Command::Algebroid(a) => run(SuiteKind::Algebroid, a),
        Command::Convergence(a) => run(SuiteKind::Convergence, a),
        Command::All(a) => run(SuiteKind::All, a),
        Command::Fixture(a) => fixture(a),
    }
}
