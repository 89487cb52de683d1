//! Command-line front end: run experiments, sweep knobs, audit exported
//! chains, and spot-check association stability.
//!
//! Exit codes: 0 success, 1 runtime or audit failure, 2 invalid
//! configuration or arguments, 3 infeasible experiment economy.

use clap::{Parser, Subcommand, ValueEnum};
use fedchain_cli::config::ExperimentConfig;
use fedchain_cli::experiment::{run_experiment, run_sweep, ExperimentError, SweepAxis};
use fedchain_cli::metrics::{write_csv, write_jsonl, write_sweep_csv};
use fedchain_cli::population::{miner_ids, sample_market};
use fedchain_core::ledger::Chain;
use fedchain_core::matching::{
    build_preferences, find_blocking_pairs, run_mma, MatchingError, PairTable,
};
use fedchain_core::utility::SystemParams;
use rand::{Rng, SeedableRng};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fedchain",
    version,
    about = "Deterministic simulator of utility-matched, chain-backed private federated training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write per-round metrics.
    Run {
        /// TOML configuration; omit for the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Experiment seed; all randomness derives from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Metrics file to write.
        #[arg(long, default_value = "metrics.csv")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Also export the block chain to this file.
        #[arg(long)]
        chain_out: Option<PathBuf>,
    },
    /// Rerun the experiment across one knob and several seeds.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Knob to vary: sigma, clip, or association.
        #[arg(long)]
        axis: String,
        /// Comma-separated knob values (ignored for association).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Number of seeds per value.
        #[arg(long, default_value_t = 5)]
        seeds: u32,
        /// First seed; runs use seed, seed+1, ...
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Re-verify an exported chain file.
    AuditChain {
        #[arg(long)]
        chain: PathBuf,
    },
    /// Match randomized economies and scan each result for blocking
    /// pairs.
    StabilityCheck {
        /// Number of random economies to check.
        #[arg(long, default_value_t = 100)]
        seeds: u32,
        /// Largest client count sampled (at least 2).
        #[arg(long, default_value_t = 8)]
        max_mcs: u32,
        /// Largest miner count sampled.
        #[arg(long, default_value_t = 3)]
        max_miners: u32,
        /// First seed of the scan.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, ExperimentError> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn fail(err: &ExperimentError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn cmd_run(
    config: &Option<PathBuf>,
    seed: u64,
    out: &Path,
    format: OutputFormat,
    chain_out: &Option<PathBuf>,
) -> Result<(), ExperimentError> {
    let cfg = load_config(config)?;
    let output = run_experiment(&cfg, seed)?;

    let mut writer = BufWriter::new(File::create(out)?);
    match format {
        OutputFormat::Csv => write_csv(&output.rows, &mut writer)?,
        OutputFormat::Jsonl => write_jsonl(&output.rows, &mut writer)?,
    }
    writer.flush()?;

    if let Some(chain_path) = chain_out {
        let mut writer = BufWriter::new(File::create(chain_path)?);
        output.chain.export(&mut writer)?;
        writer.flush()?;
        println!("exported chain ({} blocks) to {}", output.chain.len(), chain_path.display());
    }

    let last = output.rows.last().expect("runs have at least one round");
    println!("wrote {} rounds to {}", output.rows.len(), out.display());
    println!(
        "participants {}/{}, association utility {:.3}",
        last.participants, cfg.experiment.mcs, output.total_utility
    );
    if let Some(c) = output.counters {
        println!(
            "matching: {} rounds, {} proposals, {} comparisons",
            c.rounds, c.proposals, c.comparisons
        );
    }
    println!(
        "final round: loss {:.6}, test accuracy {:.4}, objective {:.3}",
        last.global_loss, last.test_accuracy, last.objective
    );
    Ok(())
}

fn cmd_sweep(
    config: &Option<PathBuf>,
    axis: &str,
    values: &[f64],
    seeds: u32,
    base_seed: u64,
    out: &Path,
) -> Result<(), ExperimentError> {
    let cfg = load_config(config)?;
    let axis: SweepAxis = axis
        .parse()
        .map_err(|e: String| {
            ExperimentError::Config(fedchain_cli::config::ConfigError::Invalid(vec![e]))
        })?;
    if seeds == 0 {
        return Err(ExperimentError::Config(fedchain_cli::config::ConfigError::Invalid(vec![
            "--seeds must be at least 1".into(),
        ])));
    }
    let seed_list: Vec<u64> = (0..u64::from(seeds)).map(|i| base_seed + i).collect();
    let rows = run_sweep(&cfg, axis, values, &seed_list)?;
    let mut writer = BufWriter::new(File::create(out)?);
    write_sweep_csv(&rows, &mut writer)?;
    writer.flush()?;
    println!("wrote {} sweep rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_audit(chain_path: &Path) -> ExitCode {
    let file = match File::open(chain_path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot open {}: {e}", chain_path.display());
            return ExitCode::from(2);
        }
    };
    let chain = match Chain::import(BufReader::new(file)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: cannot read chain: {e}");
            return ExitCode::from(2);
        }
    };
    match chain.verify() {
        Ok(()) => {
            let mined = chain.len() - 1;
            println!(
                "chain OK: {} blocks ({mined} mined), difficulty {} bits",
                chain.len(),
                chain.config().difficulty_bits
            );
            for (miner, reward) in chain.rewards() {
                println!("  {miner}: reward {reward}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("chain INVALID: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_stability(seeds: u32, max_mcs: u32, max_miners: u32, base_seed: u64) -> ExitCode {
    if seeds == 0 || max_mcs < 2 || max_miners == 0 {
        eprintln!("error: need --seeds >= 1, --max-mcs >= 2, --max-miners >= 1");
        return ExitCode::from(2);
    }
    let mut unstable = 0u32;
    let mut skipped = 0u32;
    for i in 0..u64::from(seeds) {
        let seed = base_seed + i;
        let mut size_rng = fedchain_core::SimRng::seed_from_u64(seed);
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.mcs = size_rng.random_range(2..=max_mcs);
        cfg.experiment.miners = size_rng.random_range(1..=max_miners);

        let (mcs, channels) = sample_market(&cfg, seed);
        let miners = miner_ids(cfg.experiment.miners);
        let sys = SystemParams {
            switched_capacitance: cfg.system.switched_capacitance,
            bandwidth_hz: cfg.system.bandwidth_hz,
            upload_bits: cfg.system.upload_bits,
            reward_rate: cfg.system.reward_rate,
            energy_price: cfg.system.energy_price,
            deadline_s: cfg.system.deadline_s,
            rounds: cfg.experiment.rounds,
        };
        let table = match PairTable::build(&mcs, &miners, &channels, &sys, 1) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("seed {seed}: cannot price pairs: {e}");
                return ExitCode::from(1);
            }
        };
        let prefs = match build_preferences(&table, cfg.experiment.orientation) {
            Ok(p) => p,
            Err(MatchingError::NoFeasiblePairs) => {
                skipped += 1;
                continue;
            }
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                return ExitCode::from(1);
            }
        };
        let (result, _) = run_mma(&table, &prefs);
        let blocking = find_blocking_pairs(&table, &result);
        if !blocking.is_empty() {
            unstable += 1;
            println!(
                "seed {seed}: {} clients, {} miners, blocking pairs {blocking:?}",
                cfg.experiment.mcs, cfg.experiment.miners
            );
        }
    }
    let checked = seeds - skipped;
    if unstable == 0 {
        println!("checked {checked} economies ({skipped} infeasible skipped): all stable");
        ExitCode::SUCCESS
    } else {
        println!("checked {checked} economies: {unstable} UNSTABLE");
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config, seed, out, format, chain_out } => {
            match cmd_run(config, *seed, out, *format, chain_out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Command::Sweep { config, axis, values, seeds, seed, out } => {
            match cmd_sweep(config, axis, values, *seeds, *seed, out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Command::AuditChain { chain } => cmd_audit(chain),
        Command::StabilityCheck { seeds, max_mcs, max_miners, seed } => {
            cmd_stability(*seeds, *max_mcs, *max_miners, *seed)
        }
    }
}
