//! The `pencil` command line.
//!
//! Every command writes machine-readable JSON lines to its output and
//! diagnostics to standard error. Exit codes are 0 on success, 1 when a
//! check fails or a file cannot be written, and 2 for bad flags or inputs.
//! Commands that draw random instances require `--seed`, and work spread
//! over `--jobs` threads is reported in instance order.

mod commands;
mod machines;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pencil_datasets::TaskSpec;

/// Command-line arguments.
#[derive(Debug, Parser)]
#[command(name = "pencil", version, about = "Generate, replay, verify and export PENCIL reasoning traces")]
pub struct Cli {
    /// Worker threads for per-instance work; 0 uses one per core.
    #[arg(long, global = true, env = "PENCIL_JOBS", default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a corpus and print one line per instance.
    Gen(CorpusArgs),
    /// Print the scaffolded trace of one instance with its checked answer.
    Trace(RunArgs),
    /// Replay one instance with a reduction rule and report the run.
    Pencil(PencilArgs),
    /// Run a Turing machine directly and with PENCIL, checking the bounds.
    TmSim(TmSimArgs),
    /// Compare the compiled machine program with the reference driver.
    FaspCheck(FaspCheckArgs),
    /// Print corpus statistics and optionally write the statistics CSV.
    Stats(StatsArgs),
    /// Write training files for a corpus.
    Export(ExportArgs),
    /// Check generated instances against their oracles.
    Verify(VerifyArgs),
}

/// Task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    Sat,
    Qbf,
    Puzzle,
    Tm,
}

/// Reduction rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Full,
    Simplified,
}

/// Export formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Pencil,
    Cot,
    Both,
}

/// Task family and size.
#[derive(Debug, Clone, Args)]
pub struct TaskArgs {
    /// Task family.
    #[arg(long, value_enum)]
    pub task: TaskKind,
    /// Variables for SAT and QBF, houses for puzzles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Puzzle categories; defaults to the number of houses.
    #[arg(long)]
    pub categories: Option<usize>,
}

/// A machine read from a file or drawn from a seed.
#[derive(Debug, Clone, Args)]
pub struct MachineArgs {
    /// Machine file.
    #[arg(long, conflicts_with = "random_tm")]
    pub tm: Option<PathBuf>,
    /// Draw a random machine from this seed instead.
    #[arg(long)]
    pub random_tm: Option<u64>,
}

/// A corpus request.
#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    /// Number of instances.
    #[arg(long)]
    pub count: usize,
    /// Corpus seed.
    #[arg(long)]
    pub seed: u64,
    /// Balance answer labels by rejection sampling.
    #[arg(long)]
    pub balance: bool,
}

/// One instance: a task drawn from a seed, or a machine with an input.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    /// Instance seed for SAT, QBF and puzzles.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Machine input, symbols separated by spaces.
    #[arg(long, default_value = "")]
    pub input: String,
    /// Machine step cap.
    #[arg(long, default_value_t = 300)]
    pub cap: usize,
}

/// `pencil` flags.
#[derive(Debug, Clone, Args)]
pub struct PencilArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Reduction rule; tasks default to full, machines to simplified.
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Include the live context after every reduction.
    #[arg(long)]
    pub snapshots: bool,
}

/// `tm-sim` flags.
#[derive(Debug, Clone, Args)]
pub struct TmSimArgs {
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Input symbols separated by spaces.
    #[arg(long, default_value = "")]
    pub input: String,
    /// Step cap.
    #[arg(long, default_value_t = 300)]
    pub cap: usize,
}

/// `fasp-check` flags.
#[derive(Debug, Clone, Args)]
pub struct FaspCheckArgs {
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Number of inputs. Without a seed these are the shortest inputs in
    /// length-then-lexicographic order.
    #[arg(long, default_value_t = 20)]
    pub inputs: usize,
    /// Draw random inputs from this seed instead.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Longest random input.
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    /// Step cap per input.
    #[arg(long, default_value_t = 300)]
    pub cap: usize,
    /// Print the compiled program to standard error.
    #[arg(long)]
    pub dump: bool,
}

/// `stats` flags.
#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Write the per-instance statistics CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// `export` flags.
#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Which training sequences to write.
    #[arg(long, value_enum, default_value = "both")]
    pub format: FormatArg,
}

/// `verify` flags.
#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    /// Instances, or machines for `--task tm`.
    #[arg(long)]
    pub count: usize,
    /// Seed of the instance stream.
    #[arg(long)]
    pub seed: u64,
    /// Inputs per machine.
    #[arg(long, default_value_t = 20)]
    pub inputs: usize,
    /// Step cap per machine run.
    #[arg(long, default_value_t = 300)]
    pub cap: usize,
}

/// A failed command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Flags or inputs are invalid.
    Usage(String),
    /// A check disagreed with its oracle.
    Failed(String),
    /// The work itself failed, for example on a write.
    Runtime(String),
}

impl CliError {
    /// Process exit code.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Failed(m) => write!(f, "check failed: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Largest sizes accepted per task.
const SAT_VARS: (usize, usize) = (3, 24);
const QBF_VARS: (usize, usize) = (2, 20);
const PUZZLE_SIZE: (usize, usize) = (3, 5);
const MAX_CAP: usize = 1_000_000;

fn in_range(what: &str, v: usize, (lo, hi): (usize, usize)) -> Result<usize, CliError> {
    if v < lo || v > hi {
        return Err(CliError::Usage(format!("{what} must be in {lo}..={hi}, got {v}")));
    }
    Ok(v)
}

impl TaskArgs {
    /// The task family and size, checked against the generator caps.
    pub fn spec(&self) -> Result<TaskSpec, CliError> {
        let n = || self.n.ok_or_else(|| CliError::Usage("--n is required for this task".into()));
        match self.task {
            TaskKind::Sat => Ok(TaskSpec::Sat { n: in_range("--n", n()?, SAT_VARS)? }),
            TaskKind::Qbf => Ok(TaskSpec::Qbf { n: in_range("--n", n()?, QBF_VARS)? }),
            TaskKind::Puzzle => {
                let houses = in_range("--n", n()?, PUZZLE_SIZE)?;
                let categories = in_range("--categories", self.categories.unwrap_or(houses), PUZZLE_SIZE)?;
                Ok(TaskSpec::Puzzle { houses, categories })
            }
            TaskKind::Tm => Err(CliError::Usage("this command does not take --task tm".into())),
        }
    }
}

fn check_cap(cap: usize) -> Result<(), CliError> {
    in_range("--cap", cap, (1, MAX_CAP)).map(|_| ())
}

/// Runs `cli`, writing results to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    match &cli.command {
        Command::Gen(a) => commands::gen(a, cli.jobs, out),
        Command::Trace(a) => commands::trace(a, out),
        Command::Pencil(a) => commands::pencil(a, out),
        Command::TmSim(a) => commands::tm_sim(a, out),
        Command::FaspCheck(a) => commands::fasp_check(a, &pool, out),
        Command::Stats(a) => commands::stats(a, cli.jobs, out),
        Command::Export(a) => commands::export(a, cli.jobs, out),
        Command::Verify(a) => commands::verify(a, &pool, out),
    }
}
