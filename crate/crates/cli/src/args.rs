use std::path::PathBuf;

use batchsched_core::{Toggles, Variant};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "batchsched", version, about = "Batch scheduling with iterated greedy search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a benchmark instance set and its manifest.
    Generate(GenerateArgs),
    /// Solve one instance and write the best solution.
    Solve(SolveArgs),
    /// Report cost, capacity violation and job completions of a solution.
    Evaluate(EvaluateArgs),
    /// Run an experiment matrix and append the results to a CSV log.
    Bench(BenchArgs),
    /// Aggregate a result log into RPD tables.
    Report(ReportArgs),
    /// Export machine timelines as CSV and optionally SVG.
    Gantt(GanttArgs),
    /// Check evaluator and solver against exhaustive search on tiny instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// 72-instance grid.
    Large,
    /// Instances with the statistics of the small benchmark.
    #[value(alias = "small")]
    SmallLike,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub profile: Profile,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replicates per cell of the small-like grid.
    #[arg(long, default_value_t = 3)]
    pub replicates: usize,
    #[arg(long, env = "BATCHSCHED_OUT_DIR", default_value = "instances")]
    pub out_dir: PathBuf,
}

/// Feature switches; each flag turns one component off.
#[derive(Debug, Clone, Copy, Default, Args)]
pub struct ToggleFlags {
    #[arg(long)]
    pub no_ls: bool,
    #[arg(long)]
    pub no_sa: bool,
    #[arg(long)]
    pub no_dr: bool,
    #[arg(long)]
    pub no_inf: bool,
    #[arg(long)]
    pub no_restore: bool,
}

impl ToggleFlags {
    pub fn apply(&self, t: Toggles) -> Toggles {
        Toggles {
            local_search: t.local_search && !self.no_ls,
            sim_annealing: t.sim_annealing && !self.no_sa,
            destroy_repair: t.destroy_repair && !self.no_dr,
            infeasibility: t.infeasibility && !self.no_inf,
            restore: t.restore && !self.no_restore,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with solver parameters; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub toggles: ToggleFlags,
    /// Solution file. Defaults to `<out-dir>/<instance stem>.sol`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration trace file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, env = "BATCHSCHED_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Instance files or directories (every `.txt` file inside).
    #[arg(long, num_args = 1.., required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "RG,RP,PG,PP")]
    pub variants: Vec<Variant>,
    #[arg(long, value_delimiter = ',', default_value = "2500,4500,7000")]
    pub etas: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Run the complete configuration and every single-feature-off one.
    #[arg(long)]
    pub ablation: bool,
    #[command(flatten)]
    pub toggles: ToggleFlags,
    #[arg(long, env = "BATCHSCHED_OUT_DIR", default_value = "results")]
    pub out_dir: PathBuf,
    /// Log file name inside the output directory.
    #[arg(long, default_value = "results.csv")]
    pub log: String,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "BATCHSCHED_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grouping {
    #[value(name = "o-m")]
    OM,
    #[value(name = "f-o")]
    FO,
    #[value(name = "q-o")]
    QO,
    Overall,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, value_enum, default_value = "overall")]
    pub group: Grouping,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GanttArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    /// CSV file. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub eta: usize,
}
