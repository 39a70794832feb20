//! `feelab` command-line front end.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "feelab", version, about = "Fee-market simulation and Merge analysis")]
struct Cli {
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, env = "FEELAB_OUT_DIR", default_value = "feelab-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one interval regime and export ingest-compatible CSVs.
    Simulate(SimulateArgs),
    /// Join blocks, transactions, delays and sanctions into a block panel.
    Ingest(IngestArgs),
    /// Summaries, daily ratios and the congestion-by-cut curve of a panel.
    Metrics(MetricsArgs),
    /// Regression discontinuity tables at the cutoff block.
    Rdd(RddArgs),
    /// Fit the trend/weekly/holiday model to a daily series.
    Forecast(ForecastArgs),
    /// Graph of transactions touching sanctioned addresses.
    Graph(GraphArgs),
    /// Paired multi-seed comparison of two interval regimes.
    Sweep(SweepArgs),
    /// Deterministic equilibrium base fee of a scenario's demand.
    Equilibrium(EquilibriumArgs),
    /// Recompute artifact checksums recorded in a manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON (arrival process and surges).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Run config JSON; any flag below overrides its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// pre, post, exp:MEAN or fixed:SLOT[:EMPTY_PROB]
    #[arg(long)]
    pub regime: Option<String>,
    /// Seconds of simulated time.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Stop after this many blocks.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Starting base fee in wei; defaults to the demand equilibrium.
    #[arg(long)]
    pub initial_base_fee: Option<u64>,
    #[arg(long)]
    pub max_tip: Option<f64>,
    #[arg(long)]
    pub gas_target: Option<u64>,
    #[arg(long)]
    pub start_block: Option<u64>,
    /// Cutoff block for panel.csv; default is the Merge block.
    #[arg(long)]
    pub cutoff: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub blocks: PathBuf,
    #[arg(long)]
    pub txs: PathBuf,
    #[arg(long)]
    pub delays: PathBuf,
    #[arg(long)]
    pub sanctions: PathBuf,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[arg(long, default_value_t = feelab::metrics::MERGE_BLOCK)]
    pub cutoff: u64,
    /// Interval assigned to the first block, which has no parent in range.
    #[arg(long, default_value_t = 12.0)]
    pub first_interval: f64,
    #[arg(long, default_value_t = feelab::metrics::DEFAULT_CUT)]
    pub cut: f64,
    #[arg(long, default_value_t = feelab::metrics::DEFAULT_RUN)]
    pub run_length: usize,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Comma-separated cuts; default 0.50, 0.51, ..., 0.99.
    #[arg(long, value_delimiter = ',')]
    pub cuts: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RddArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Outcome column; repeat for several. Default: all.
    #[arg(long)]
    pub outcome: Vec<String>,
    /// Column spec 1, 2 or 3; default: all three nested specs.
    #[arg(long)]
    pub spec: Option<String>,
    /// auto picks logit for binary outcomes and OLS otherwise.
    #[arg(long, default_value = "auto")]
    pub family: String,
    /// classical or hc1
    #[arg(long, default_value = "classical")]
    pub covariance: String,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Daily CSV with a `date` column.
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, default_value = "congestion_ratio")]
    pub column: String,
    /// JSON list of {name, date, window}.
    #[arg(long)]
    pub holidays: Option<PathBuf>,
    /// Model config JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fourier_order: Option<usize>,
    #[arg(long)]
    pub changepoints: Option<usize>,
    #[arg(long)]
    pub changepoint_range: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub txs: PathBuf,
    #[arg(long)]
    pub sanctions: PathBuf,
    #[arg(long, default_value_t = feelab::metrics::MERGE_BLOCK)]
    pub cutoff: u64,
    /// pre, post or all
    #[arg(long, default_value = "all")]
    pub era: String,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep JSON; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Scenario JSON, replacing the one in the spec.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Seeds as a list (1,2,3) or an inclusive range (1..20).
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub treatment: Option<String>,
    #[arg(long)]
    pub control: Option<String>,
    #[arg(long)]
    pub initial_base_fee: Option<u64>,
    /// Worker threads; default: all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Block intervals in seconds; repeat to compare.
    #[arg(long, default_values_t = [14.0, 12.0])]
    pub interval: Vec<f64>,
    #[arg(long, default_value_t = 15_000_000)]
    pub gas_target: u64,
    /// Scenario time at which demand is evaluated.
    #[arg(long, default_value_t = 0.0)]
    pub at: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a, &cli.out_dir, args),
        Command::Ingest(a) => commands::ingest(&a, &cli.out_dir, args),
        Command::Metrics(a) => commands::metrics(&a, &cli.out_dir, args),
        Command::Rdd(a) => commands::rdd(&a, &cli.out_dir, args),
        Command::Forecast(a) => commands::forecast(&a, &cli.out_dir, args),
        Command::Graph(a) => commands::graph(&a, &cli.out_dir, args),
        Command::Sweep(a) => commands::sweep(&a, &cli.out_dir, args),
        Command::Equilibrium(a) => commands::equilibrium(&a, &cli.out_dir, args),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", render(f.error()));
            ExitCode::from(f.code())
        }
    }
}

/// The error chain joined by ": ", skipping causes already quoted by the
/// message above them.
fn render(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !out.contains(&c) {
            out.push_str(": ");
            out.push_str(&c);
        }
    }
    out
}
