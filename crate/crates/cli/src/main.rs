//! `folp`: solve LPs from MPS/JSON files, generate benchmark instances,
//! and evaluate the normalized regret of predicted cost vectors.
//!
//! Exit codes: 0 optimal, 2 infeasible (either side), 3 iteration limit,
//! 1 usage/parse/IO errors.

mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use folp_core::diffopt::regret_report;
use folp_core::problem::generators::{gen_grid_shortest_path, gen_knapsack_seeded_with_capacity};
use folp_core::{solve, Algorithm, LpProblem, Precision, SolveStatus, SolverOptions, WarmStart};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use io::FileFormat;

#[derive(Parser)]
#[command(
    name = "folp",
    version,
    about = "Matrix-free first-order linear programming (restarted average PDHG / reflected restarted Halpern PDHG)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an LP and write a JSON result document.
    Solve(SolveArgs),
    /// Generate a benchmark instance (knapsack or grid shortest path).
    Generate(GenerateArgs),
    /// Evaluate normalized regret of predicted vs true cost vectors.
    Regret(RegretArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Mps,
    Json,
}

impl From<FormatArg> for FileFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Mps => FileFormat::Mps,
            FormatArg::Json => FileFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Rapdhg,
    R2hpdhg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

/// Solver options as flags; defaults come straight from
/// [`SolverOptions::default`] so the two never drift apart.
#[derive(Args)]
struct SolverFlags {
    /// Absolute tolerance for convergence.
    #[arg(long, default_value_t = SolverOptions::default().eps_abs)]
    eps_abs: f64,
    /// Relative tolerance for convergence.
    #[arg(long, default_value_t = SolverOptions::default().eps_rel)]
    eps_rel: f64,
    /// Primal infeasibility tolerance.
    #[arg(long, default_value_t = SolverOptions::default().eps_primal_infeasible)]
    eps_primal_infeasible: f64,
    /// Dual infeasibility tolerance.
    #[arg(long, default_value_t = SolverOptions::default().eps_dual_infeasible)]
    eps_dual_infeasible: f64,
    /// Tolerance for feasibility polishing.
    #[arg(long, default_value_t = SolverOptions::default().eps_feas_polish)]
    eps_feas_polish: f64,
    /// Maximum number of iterations to run.
    #[arg(long, default_value_t = SolverOptions::default().iteration_limit)]
    iteration_limit: u64,
    /// Evaluate termination/restart/infeasibility every this many steps.
    #[arg(long, default_value_t = SolverOptions::default().check_frequency)]
    check_frequency: u64,
    /// Print solver progress to stderr.
    #[arg(long)]
    verbose: bool,
    /// Print every this many termination checks (with --verbose).
    #[arg(long, default_value_t = SolverOptions::default().display_frequency)]
    display_frequency: u64,
    /// Run feasibility polishing after the solve.
    #[arg(long)]
    feasibility_polishing: bool,
    /// Algorithm to run.
    #[arg(long, value_enum, default_value_t = AlgorithmArg::R2hpdhg)]
    algorithm: AlgorithmArg,
    /// Working precision of the iteration kernels.
    #[arg(long, value_enum, default_value_t = PrecisionArg::F64)]
    precision: PrecisionArg,
}

impl SolverFlags {
    fn to_options(&self, warm_start: bool) -> SolverOptions {
        SolverOptions {
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            eps_primal_infeasible: self.eps_primal_infeasible,
            eps_dual_infeasible: self.eps_dual_infeasible,
            eps_feas_polish: self.eps_feas_polish,
            iteration_limit: self.iteration_limit,
            check_frequency: self.check_frequency,
            verbose: self.verbose,
            display_frequency: self.display_frequency,
            warm_start,
            feasibility_polishing: self.feasibility_polishing,
            algorithm: match self.algorithm {
                AlgorithmArg::Rapdhg => Algorithm::RaPdhg,
                AlgorithmArg::R2hpdhg => Algorithm::R2Hpdhg,
            },
            precision: match self.precision {
                PrecisionArg::F32 => Precision::F32,
                PrecisionArg::F64 => Precision::F64,
            },
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file (MPS or JSON).
    #[arg(long)]
    input: PathBuf,
    /// Result file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Warm-start primal vector (whitespace-separated numbers).
    #[arg(long)]
    warm_start_primal: Option<PathBuf>,
    /// Warm-start dual vector (whitespace-separated numbers).
    #[arg(long)]
    warm_start_dual: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(subcommand)]
    family: Family,
}

#[derive(Subcommand)]
enum Family {
    /// LP relaxation of a multi-dimensional knapsack (dense storage).
    Knapsack {
        /// Number of items.
        #[arg(long)]
        items: usize,
        /// Number of knapsack dimensions.
        #[arg(long)]
        dims: usize,
        /// Capacity shared by all dimensions.
        #[arg(long, default_value_t = 500.0)]
        capacity: f64,
        /// Seed for weights and values.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Shortest-path flow LP on an 8-connected k×k grid (sparse storage).
    Grid {
        /// Grid side length (k ≥ 2).
        #[arg(long)]
        k: usize,
        /// CSV of k×k vertex costs; seeded uniform costs when omitted.
        #[arg(long)]
        costs: Option<PathBuf>,
        /// Seed for generated vertex costs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
}

#[derive(Args)]
struct RegretArgs {
    /// Problem file defining the feasible set (its objective is ignored).
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// CSV of predicted cost vectors (min-form), one per row.
    #[arg(long)]
    pred: PathBuf,
    /// CSV of true cost vectors (min-form), one per row.
    #[arg(long = "true")]
    true_costs: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(1)
}

fn run_solve(args: &SolveArgs) -> ExitCode {
    let format = match io::resolve_format(args.format.map(Into::into), &args.input) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let problem = match io::read_problem(&args.input, format) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };

    let mut warm = WarmStart::default();
    if let Some(path) = &args.warm_start_primal {
        match io::read_vector_file(path) {
            Ok(v) => warm.primal = Some(v),
            Err(e) => return fail(e),
        }
    }
    if let Some(path) = &args.warm_start_dual {
        match io::read_vector_file(path) {
            Ok(v) => warm.dual = Some(v),
            Err(e) => return fail(e),
        }
    }
    let warm_requested = warm.primal.is_some() || warm.dual.is_some();
    let opts = args.solver.to_options(warm_requested);

    let result = match solve(&problem, &opts, warm_requested.then_some(&warm)) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let doc = io::result_document(&result);
    let rendered = serde_json::to_string_pretty(&doc).expect("result document serializes");
    if let Err(e) = io::write_output(args.output.as_ref(), &rendered) {
        return fail(e);
    }
    match result.status {
        SolveStatus::Optimal => ExitCode::SUCCESS,
        SolveStatus::PrimalInfeasible | SolveStatus::DualInfeasible => ExitCode::from(2),
        SolveStatus::IterationLimit => ExitCode::from(3),
    }
}

fn run_generate(args: &GenerateArgs) -> ExitCode {
    let (problem, output, format): (Result<LpProblem, _>, &Option<PathBuf>, FormatArg) =
        match &args.family {
            Family::Knapsack {
                items,
                dims,
                capacity,
                seed,
                output,
                format,
            } => (
                gen_knapsack_seeded_with_capacity(*items, *dims, *capacity, *seed),
                output,
                *format,
            ),
            Family::Grid {
                k,
                costs,
                seed,
                output,
                format,
            } => {
                let vertex_costs = match costs {
                    Some(path) => match io::read_cost_csv(path) {
                        Ok(rows) => rows.into_iter().flatten().collect::<Vec<f64>>(),
                        Err(e) => return fail(e),
                    },
                    None => {
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        (0..k.saturating_mul(*k))
                            .map(|_| rng.random::<f64>())
                            .collect()
                    }
                };
                (gen_grid_shortest_path(*k, &vertex_costs), output, *format)
            }
        };
    let problem = match problem {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let rendered = match io::render_problem(&problem, format.into()) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    match io::write_output(output.as_ref(), &rendered) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn run_regret(args: &RegretArgs) -> ExitCode {
    let format = match io::resolve_format(args.format.map(Into::into), &args.input) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let problem = match io::read_problem(&args.input, format) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let pred = match io::read_cost_csv(&args.pred) {
        Ok(rows) => rows,
        Err(e) => return fail(e),
    };
    let truth = match io::read_cost_csv(&args.true_costs) {
        Ok(rows) => rows,
        Err(e) => return fail(e),
    };
    if pred.len() != truth.len() {
        return fail(format!(
            "predicted CSV has {} rows, true CSV has {}",
            pred.len(),
            truth.len()
        ));
    }
    if pred[0].len() != problem.num_vars() || truth[0].len() != problem.num_vars() {
        return fail(format!(
            "cost vectors have {} entries, problem has {} variables",
            pred[0].len(),
            problem.num_vars()
        ));
    }
    let opts = args.solver.to_options(false);
    let report = match regret_report(&pred, &truth, &problem, &opts) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut out = String::from("index,regret\n");
    for (i, r) in report.per_instance.iter().enumerate() {
        out.push_str(&format!("{i},{r}\n"));
    }
    out.push_str(&format!("total,{}\n", report.normalized));
    match io::write_output(args.output.as_ref(), out.trim_end()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors; usage problems exit with 1.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Generate(args) => run_generate(args),
        Command::Regret(args) => run_regret(args),
    }
}
