use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use slicesim::agent::AgentKind;
use slicesim::load::Rupture;
use slicesim::runner::{report, run_experiment, scenario_summary, ExperimentSpec, ReportSpec};
use slicesim::scenario::{load_scenario, Scenario};

#[derive(Parser)]
#[command(name = "slicesim", version, about = "Online network slice placement: simulation, training and robustness reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the deterministic heuristic baseline
    Simulate(RunArgs),
    /// Train a learning agent (drl, or hadrl with --beta)
    Train(TrainArgs),
    /// Compute rupture-robustness reports over emitted CSVs
    Report(ReportArgs),
    /// Validate a scenario file and print its derived quantities
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON; omitted means the built-in reference scenario
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; run k uses seed + k
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of independent runs
    #[arg(long, default_value_t = 7)]
    runs: u64,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Episodes (request arrivals) per run
    #[arg(long, default_value_t = 10_000)]
    budget: u64,
    /// Phase at which the stair-step load change lands
    #[arg(long)]
    rupture_phase: Option<u64>,
    /// Extra global load added at the rupture phase
    #[arg(long)]
    delta_load: Option<f64>,
    /// Worker pool size (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Skip the per-episode JSONL log
    #[arg(long)]
    no_episode_log: bool,
    /// Skip per-phase checkpoints
    #[arg(long)]
    no_checkpoints: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Agent kind: drl or hadrl
    #[arg(long, default_value = "drl")]
    agent: String,
    /// Shaping exponent (hadrl only)
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory scanned for phases.csv files, or a single CSV
    #[arg(long, default_value = "out")]
    input: PathBuf,
    /// Rupture phase; defaults to the one in the runs' scenario copies
    #[arg(long)]
    rupture_phase: Option<usize>,
    /// Phases before the rupture used for the average and deviation
    #[arg(long, default_value_t = 30)]
    window: usize,
    /// Report CSV path (default: <input>/report.csv)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-agent two-column TAR series
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario JSON; omitted means the built-in reference scenario
    #[arg(long)]
    config: Option<PathBuf>,
}

fn effective_scenario(args: &RunArgs) -> Result<Scenario> {
    let mut scenario = match &args.config {
        Some(path) => load_scenario(path)?,
        None => Scenario::default(),
    };
    if args.rupture_phase.is_some() || args.delta_load.is_some() {
        let existing = scenario.schedule.rupture;
        let phase = args
            .rupture_phase
            .or(existing.map(|r| r.phase))
            .unwrap_or(72);
        let delta_load = args
            .delta_load
            .or(existing.map(|r| r.delta_load))
            .ok_or_else(|| anyhow!("--rupture-phase without --delta-load and the scenario has no rupture"))?;
        scenario.schedule.rupture = Some(Rupture { phase, delta_load });
    }
    Ok(scenario)
}

fn execute(args: &RunArgs, kind: AgentKind, scenario: Scenario) -> Result<()> {
    let spec = ExperimentSpec {
        scenario,
        kind,
        runs: args.runs,
        base_seed: args.seed,
        budget: args.budget,
        out_dir: args.out.clone(),
        workers: args.workers,
        log_episodes: !args.no_episode_log,
        checkpoints: !args.no_checkpoints,
    };
    let dirs = run_experiment(&spec).context("experiment failed")?;
    for dir in dirs {
        println!("run complete: {}", dir.display());
    }
    Ok(())
}

fn print_report(rows: &[slicesim::metrics::ReportRow]) {
    println!(
        "{:<12} {:>6} {:>5} {:>6} | {:>12} {:>13} {:>10}",
        "agent", "beta", "run", "seed", "rupt-avg (%)", "rupt-last (%)", "std (%)"
    );
    for row in rows {
        println!(
            "{:<12} {:>6} {:>5} {:>6} | {:>12.2} {:>13.2} {:>10.2}",
            row.agent,
            row.beta.map_or_else(|| "-".into(), |b| format!("{b}")),
            row.run_id.map_or_else(|| "mean".into(), |r| r.to_string()),
            row.seed.map_or_else(|| "-".into(), |s| s.to_string()),
            row.gap_avg_pct,
            row.gap_last_pct,
            row.tar_std_pct,
        );
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => {
            let scenario = effective_scenario(&args)?;
            execute(&args, AgentKind::Heu, scenario)
        }
        Command::Train(args) => {
            let kind: AgentKind = args
                .agent
                .parse()
                .map_err(|e: String| anyhow!(e))?;
            if kind == AgentKind::Heu {
                bail!("`train` takes drl or hadrl; use `simulate` for the heuristic baseline");
            }
            let mut scenario = effective_scenario(&args.run)?;
            if let Some(beta) = args.beta {
                if kind != AgentKind::Hadrl {
                    eprintln!("warning: --beta is ignored for the drl agent");
                } else {
                    scenario.hyper.beta = beta;
                    if let Ok(warnings) = scenario.validate() {
                        for w in warnings {
                            eprintln!("warning: {w}");
                        }
                    }
                }
            }
            execute(&args.run, kind, scenario)
        }
        Command::Report(args) => {
            let out = args
                .out
                .clone()
                .or_else(|| args.input.is_dir().then(|| args.input.join("report.csv")));
            let rows = report(&ReportSpec {
                input: args.input,
                rupture_phase: args.rupture_phase,
                window: args.window,
                out,
                plot_data: args.plot_data,
            })?;
            print_report(&rows);
            Ok(())
        }
        Command::Validate(args) => {
            let scenario = match &args.config {
                Some(path) => load_scenario(path)?,
                None => Scenario::default(),
            };
            print!("{}", scenario_summary(&scenario)?);
            println!("scenario OK");
            Ok(())
        }
    }
}
