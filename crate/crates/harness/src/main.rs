use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sep_core::solver::DEFAULT_SOLVER_CMD;
use sep_core::symcore::Budget;
use sep_harness::{
    evaluate, generate_corpus, pair_accuracy, write_corpus, BackendChoice, EvalError, GenConfig, GenError,
    RunConfig, SelectorKind,
};

const EXIT_CORPUS: u8 = 2;
const EXIT_BACKEND: u8 = 3;

#[derive(Parser)]
#[command(name = "sep", version, about = "Select one program from a pool by symbolic equivalence partitioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run selectors over a corpus and write a JSONL report.
    Run(RunArgs),
    /// Write a seeded synthetic corpus.
    GenCorpus(GenArgs),
    /// Pairwise equivalence accuracy of the checker against hidden-test labels.
    PairAcc(CommonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    External,
    Enumerative,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Candidates per problem, taken in generation order.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = Budget::default().max_paths)]
    budget_paths: usize,
    #[arg(long, default_value_t = Budget::default().loop_unroll_limit)]
    unroll: usize,
    #[arg(long, default_value_t = Budget::default().solver_timeout_ms)]
    solver_timeout_ms: u64,
    #[arg(long, default_value_t = Budget::default().total_deadline_ms)]
    deadline_ms: u64,
    #[arg(long, default_value = DEFAULT_SOLVER_CMD)]
    solver_cmd: String,
    #[arg(long, value_enum, default_value_t = BackendArg::External)]
    backend: BackendArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep solver scripts and responses in this directory.
    #[arg(long)]
    log_smt: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated selector names.
    #[arg(long, value_delimiter = ',', default_value = "sep,similarity,external_similarity,dual_agreement,random_pass1,oracle_passN")]
    selectors: Vec<SelectorKind>,
    /// Distance cut for the similarity clustering.
    #[arg(long, default_value_t = sep_core::baselines::DEFAULT_TAU)]
    tau: f64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    problems: usize,
    #[arg(long, default_value_t = 10)]
    pool_size: usize,
    #[arg(long, default_value_t = 0.6)]
    correct_fraction: f64,
    /// Chance that a generated dual-agreement test has a wrong expectation.
    #[arg(long, default_value_t = 0.15)]
    test_noise: f64,
}

fn config(c: &CommonArgs) -> RunConfig {
    let backend = match c.backend {
        BackendArg::External => BackendChoice::External {
            command: c.solver_cmd.clone(),
        },
        BackendArg::Enumerative => BackendChoice::Enumerative,
    };
    let mut cfg = RunConfig::new(&c.corpus, backend);
    cfg.n_candidates = c.n;
    cfg.budget = Budget {
        max_paths: c.budget_paths,
        loop_unroll_limit: c.unroll,
        solver_timeout_ms: c.solver_timeout_ms,
        total_deadline_ms: c.deadline_ms,
    };
    cfg.seed = c.seed;
    cfg.output = c.out.clone();
    cfg.log_smt = c.log_smt.clone();
    cfg
}

fn eval_exit(e: EvalError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        EvalError::Corpus(_) => ExitCode::from(EXIT_CORPUS),
        EvalError::Backend(_) => ExitCode::from(EXIT_BACKEND),
        EvalError::Config(_) | EvalError::Io { .. } => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let mut cfg = config(&args.common);
            cfg.selectors = args.selectors;
            cfg.tau = args.tau;
            match evaluate(&cfg) {
                Ok(report) => {
                    if cfg.output.is_none() {
                        print!("{}", report.to_jsonl());
                    }
                    for (name, a) in &report.aggregate.selectors {
                        eprintln!("{name:>20}: {:.3} ({}/{})", a.accuracy, a.correct, report.aggregate.problems);
                    }
                    eprintln!("{:>20}: {:.3}", "pass@1", report.aggregate.mean_pass_at_1);
                    ExitCode::SUCCESS
                }
                Err(e) => eval_exit(e),
            }
        }
        Command::PairAcc(common) => {
            let cfg = config(&common);
            match pair_accuracy(&cfg) {
                Ok(report) => {
                    if cfg.output.is_none() {
                        print!("{}", report.to_jsonl());
                    }
                    match report.summary {
                        Some(s) => eprintln!(
                            "pair accuracy: micro {:.4} ({}/{}), macro {:.4}, {} excluded",
                            s.micro, s.tally.matched, s.tally.scored, s.macro_, s.tally.excluded
                        ),
                        None => eprintln!("pair accuracy: undefined (no pair with a correct member)"),
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => eval_exit(e),
            }
        }
        Command::GenCorpus(args) => {
            let mut cfg = GenConfig::new(args.seed, args.problems, args.pool_size, args.correct_fraction);
            cfg.test_noise = args.test_noise;
            let result = generate_corpus(&cfg).and_then(|g| {
                write_corpus(&args.out, &g)?;
                Ok(g.len())
            });
            match result {
                Ok(n) => {
                    eprintln!("wrote {n} problems to {}", args.out.display());
                    ExitCode::SUCCESS
                }
                Err(e @ GenError::Corpus(_)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CORPUS)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}

