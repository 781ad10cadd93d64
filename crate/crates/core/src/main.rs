use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use boxsdp::bench::{
    self, open_output, parse_list, run_single_with, run_sweep, write_aggregate_csv,
    write_json_lines, SingleOptions, SweepPlan,
};
use boxsdp::problems::{ProblemSpec, DEFAULT_EPSILON_BAR};
use boxsdp::{Error, SolveStatus, SolverConfig, SymMat};

const EXIT_LIMIT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "boxsdp", version, about = "Box-constrained nonlinear SDP solver and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one benchmark instance from X = I/2.
    Solve(SolveArgs),
    /// Solve a grid of instances and write the summary table.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, default_value_t = 1e-7)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    delta0: f64,
    #[arg(long, default_value_t = 0.25)]
    mu1: f64,
    #[arg(long, default_value_t = 0.75)]
    mu2: f64,
    #[arg(long, default_value_t = 0.5)]
    eta1: f64,
    #[arg(long, default_value_t = 2.0)]
    eta2: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Wall-clock budget per solve, in seconds.
    #[arg(long, default_value_t = 600.0)]
    max_time: f64,
    /// Stop after an accepted step whose relative change in f is below this; 0 disables.
    #[arg(long, default_value_t = 1e-6)]
    rel_f_tol: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON_BAR)]
    epsilon_bar: f64,
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            delta0: self.delta0,
            eps: self.eps,
            mu1: self.mu1,
            mu2: self.mu2,
            eta1: self.eta1,
            eta2: self.eta2,
            max_iter: self.max_iter,
            max_time: self.max_time,
            rel_f_tol: self.rel_f_tol,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Benchmark function id, 1 to 7.
    #[arg(long, required_unless_present = "spec")]
    function: Option<u8>,
    #[arg(long, required_unless_present = "spec")]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// JSON problem spec {"function", "n", "seed", "epsilon_bar"}; overrides the flags above.
    #[arg(long, conflicts_with_all = ["function", "n"])]
    spec: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Summary row CSV ("-" for stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the summary as a JSON line instead of CSV.
    #[arg(long)]
    json: bool,
    /// Include the wall-seconds column in the summary.
    #[arg(long)]
    with_timing: bool,
    /// Write the final iterate as a matrix text file.
    #[arg(long)]
    x_out: Option<PathBuf>,
    /// Lower bound matrix file for a general box.
    #[arg(long, requires = "upper")]
    lower: Option<PathBuf>,
    /// Upper bound matrix file for a general box.
    #[arg(long, requires = "lower")]
    upper: Option<PathBuf>,
    /// Matrix file replacing the seeded C1.
    #[arg(long)]
    c1: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Function ids, e.g. 1-7 or 1,2,5.
    #[arg(long, default_value = "1-7")]
    functions: String,
    #[arg(long, default_value = "50,100")]
    sizes: String,
    #[arg(long, default_value = "1")]
    seeds: String,
    #[command(flatten)]
    solver: SolverFlags,
    /// Aggregate CSV ("-" for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Directory for per-instance trace CSVs.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Emit JSON lines instead of CSV.
    #[arg(long)]
    json: bool,
    /// Include the wall-seconds column.
    #[arg(long)]
    with_timing: bool,
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::ConvergedN | SolveStatus::ConvergedRelF => 0,
        SolveStatus::IterLimit | SolveStatus::TimeLimit => EXIT_LIMIT,
        SolveStatus::NumericError => EXIT_NUMERIC,
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Parse(_) | Error::Json(_) | Error::DimensionMismatch { .. } => {
            EXIT_USAGE
        }
        _ => EXIT_NUMERIC,
    }
}

fn run_solve(args: SolveArgs) -> Result<u8, Error> {
    let spec = match &args.spec {
        Some(path) => ProblemSpec::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let spec = ProblemSpec {
                function: args.function.expect("required by clap"),
                n: args.n.expect("required by clap"),
                seed: args.seed,
                epsilon_bar: args.solver.epsilon_bar,
            };
            spec.validate()?;
            spec
        }
    };
    let cfg = args.solver.config();
    let bounds = match (&args.lower, &args.upper) {
        (Some(l), Some(u)) => Some((SymMat::read_from(l)?, SymMat::read_from(u)?)),
        _ => None,
    };
    let opts = SingleOptions {
        c1: args.c1.as_deref().map(SymMat::read_from).transpose()?,
        bounds,
        trace_path: args.trace.clone(),
    };
    let run = run_single_with(&spec, &cfg, &opts)?;
    let mut row = run.row.clone();
    if !args.with_timing {
        row.cpu = None;
    }

    if let Some(path) = &args.x_out {
        run.result.x.write_to(path)?;
    }
    let out_path = args.out.clone().unwrap_or_else(|| PathBuf::from("-"));
    let out = open_output(&out_path)?;
    if args.json {
        write_json_lines(std::slice::from_ref(&row), out)?;
    } else {
        write_aggregate_csv(std::slice::from_ref(&row), out, args.with_timing)?;
    }
    if let Some(msg) = &run.result.message {
        eprintln!("boxsdp: {msg}");
    }
    eprintln!(
        "boxsdp: status {} after {} iterations, f = {}, N = {:e}, f_lower = {:e}",
        run.result.status,
        run.result.iterations,
        bench::fmt_f64(run.result.f),
        run.result.n_merit,
        run.result.f_lower
    );
    Ok(status_code(run.result.status))
}

fn run_sweep_cmd(args: SweepArgs) -> Result<u8, Error> {
    let plan = SweepPlan {
        functions: parse_list(&args.functions)?,
        sizes: parse_list::<u64>(&args.sizes)?
            .into_iter()
            .map(|v| v as usize)
            .collect(),
        seeds: parse_list(&args.seeds)?,
        epsilon_bar: args.solver.epsilon_bar,
        trace_dir: args.trace_dir.clone(),
    };
    let cfg = args.solver.config();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut rows = pool.install(|| run_sweep(&plan, &cfg))?;
    if !args.with_timing {
        for r in &mut rows {
            r.cpu = None;
        }
    }

    let out = open_output(&args.out)?;
    if args.json {
        write_json_lines(&rows, out)?;
    } else {
        write_aggregate_csv(&rows, out, args.with_timing)?;
    }
    Ok(rows.iter().map(|r| status_code(r.status)).max().unwrap_or(0))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep_cmd(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("boxsdp: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
