use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use sunedge::sbeo::random_tiny_instance;
use sunedge::simkit::{build_scenario, compare_with_oracle, export, RunResult};
use sunedge::{ScenarioConfig, StrategyKind};

#[derive(Parser)]
#[command(name = "sunedge", version, about = "Sunlight-aware task placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV/JSON outputs.
    Run(RunArgs),
    /// Run a scenario over seasons, power levels and strategies.
    Sweep(SweepArgs),
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the heuristic against exhaustive search on tiny instances.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Strategy name, or `all` to run every strategy into its own subdirectory.
    #[arg(long)]
    strategy: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict the sweep to one strategy.
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Epoch days of year to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [80u16, 172, 266, 355])]
    days: Vec<u16>,
    /// Processing power levels in watts.
    #[arg(long, value_delimiter = ',', default_values_t = [30.0, 50.0, 60.0])]
    power: Vec<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn print_summary(result: &RunResult) {
    let r = &result.report;
    println!(
        "{:<22} tasks {:>6}  max DoD {:.4}  mean max DoD {:.4}  miss {:.2}%  sunlit {:.1}%  lifetime(min) {:.2} y",
        r.strategy.name(),
        r.num_tasks,
        r.global_max_dod,
        r.mean_max_dod,
        100.0 * r.miss_rate,
        100.0 * r.sunlit_processed_fraction,
        r.lifetime_min_years,
    );
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load(&args.config, args.seed)?;
    let strategies = match args.strategy.as_deref() {
        Some("all") => StrategyKind::ALL.to_vec(),
        Some(name) => vec![name.parse::<StrategyKind>()?],
        None => vec![cfg.strategy],
    };
    cfg.strategy = strategies[0];
    let scenario = build_scenario(&cfg)?;
    println!(
        "{} satellites, {} stations, {} slots, {} tasks",
        scenario.instance.world.num_sats(),
        scenario.instance.world.num_stations(),
        scenario.instance.world.horizon(),
        scenario.instance.tasks.len()
    );
    let results: Vec<(StrategyKind, RunResult)> = strategies.par_iter().map(|&k| (k, scenario.run(k))).collect();
    for (kind, result) in &results {
        let dir = if strategies.len() > 1 { args.out.join(kind.name()) } else { args.out.clone() };
        export::write_outputs(&dir, result).with_context(|| format!("writing {}", dir.display()))?;
        print_summary(result);
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    epoch_day: u16,
    power_w: f64,
    strategy: StrategyKind,
    tasks: usize,
    global_max_dod: f64,
    mean_max_dod: f64,
    mean_dod: f64,
    miss_rate: f64,
    sunlit_processed_fraction: f64,
    lifetime_min_years: f64,
    lifetime_mean_years: f64,
}

fn sweep(args: SweepArgs) -> Result<()> {
    let base = load(&args.config, args.seed)?;
    let strategies = match args.strategy {
        Some(k) => vec![k],
        None => StrategyKind::ALL.to_vec(),
    };
    let mut grid = Vec::new();
    for &day in &args.days {
        for &w in &args.power {
            let mut cfg = base.clone();
            cfg.constellation.epoch_day_of_year = day;
            cfg.workload.power_level_w = w;
            cfg.validate().with_context(|| format!("day {day}, {w} W"))?;
            grid.push(cfg);
        }
    }
    let rows: Vec<Vec<SweepRow>> = grid
        .par_iter()
        .map(|cfg| -> Result<Vec<SweepRow>> {
            let scenario = build_scenario(cfg)?;
            Ok(strategies
                .par_iter()
                .map(|&k| {
                    let r = scenario.run(k).report;
                    SweepRow {
                        epoch_day: cfg.constellation.epoch_day_of_year,
                        power_w: cfg.workload.power_level_w,
                        strategy: k,
                        tasks: r.num_tasks,
                        global_max_dod: r.global_max_dod,
                        mean_max_dod: r.mean_max_dod,
                        mean_dod: r.mean_dod,
                        miss_rate: r.miss_rate,
                        sunlit_processed_fraction: r.sunlit_processed_fraction,
                        lifetime_min_years: r.lifetime_min_years,
                        lifetime_mean_years: r.lifetime_mean_years,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in rows.iter().flatten() {
        w.serialize(row)?;
        println!(
            "day {:>3}  {:>4} W  {:<22} max DoD {:.4}  miss {:.2}%",
            row.epoch_day,
            row.power_w,
            row.strategy.name(),
            row.global_max_dod,
            100.0 * row.miss_rate
        );
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let instances: Vec<_> = (0..args.count).map(|_| random_tiny_instance(&mut rng)).collect();
    let results: Vec<_> = instances.par_iter().map(compare_with_oracle).collect();
    let gaps: Vec<f64> = results.iter().filter_map(|c| c.gap()).collect();
    let dominated = gaps.iter().filter(|&&g| g < -1e-9).count();
    let matched = gaps.iter().filter(|&&g| g.abs() <= 1e-9).count();
    let mean = if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 };
    let mut out = std::io::stdout().lock();
    writeln!(out, "instances {}  comparable {}", args.count, gaps.len())?;
    writeln!(out, "matched optimum {matched}  mean gap {mean:.6}  heuristic below optimum {dominated}")?;
    if dominated > 0 {
        bail!("heuristic beat the exhaustive optimum on {dominated} instances");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate { config } => load(&config, None).map(|cfg| {
            println!(
                "{}: ok ({} shells, {} regions)",
                config.display(),
                cfg.constellation.shells.len(),
                cfg.workload.regions.len()
            );
        }),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
