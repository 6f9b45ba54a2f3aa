mod config;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{Config, ConfigError};
use scenario::Plan;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "dressedsim", version, about = "Dressed-qubit coherence, gate and sensing scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write `<scenario>.csv` and `<scenario>.meta.json`.
    Run(RunArgs),
    /// Check a scenario config and print a cost estimate without running it.
    Validate(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario config file (flat `key = value`).
    #[arg(long)]
    config: PathBuf,
    /// Noise seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "DRESSEDSIM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Config(ConfigError),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn load(args: &RunArgs) -> Result<Plan, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg: Config = text.parse()?;
    Ok(Plan::from_config(&cfg, args.seed)?)
}

fn output_dir(args: &RunArgs, plan: &Plan) -> PathBuf {
    args.out
        .clone()
        .or_else(|| plan.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_outputs(dir: &Path, plan: &Plan, outcome: &scenario::Outcome) -> Result<(), Failure> {
    let io = |e: dressedsim::Error| Failure::Numerical(format!("writing output: {e}"));
    fs::create_dir_all(dir).map_err(|e| Failure::Numerical(format!("creating {}: {e}", dir.display())))?;
    let name = plan.name();
    outcome.table.write_csv(dir.join(format!("{name}.csv"))).map_err(io)?;
    let meta = serde_json::json!({
        "scenario": name,
        "seed": plan.seed,
        "columns": outcome.table.header(),
        "rows": outcome.table.len(),
        "result": outcome.meta,
    });
    dressedsim::export::write_meta(dir.join(format!("{name}.meta.json")), &meta).map_err(io)
}

fn configure_threads(threads: usize) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(ConfigError::new(format!("--threads: {e}"))))
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let plan = load(args)?;
    configure_threads(args.threads)?;
    let start = Instant::now();
    let outcome = plan.run().map_err(|e| Failure::Numerical(e.to_string()))?;
    write_outputs(&output_dir(args, &plan), &plan, &outcome)?;
    if !args.quiet {
        println!("{}: {} ({:.2} s)", plan.name(), outcome.summary, start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn validate(args: &RunArgs) -> Result<(), Failure> {
    let plan = load(args)?;
    let cost = plan.cost();
    let rows = plan.rows().map_or_else(|| "time-adaptive".to_string(), |n| n.to_string());
    println!(
        "ok: scenario {}, rows {rows}, cost estimate {cost:.3e} steps (budget {:.3e})",
        plan.name(),
        plan.budget
    );
    if cost > plan.budget {
        eprintln!("warning: cost estimate exceeds the budget; raise `budget` or shrink the grid");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
