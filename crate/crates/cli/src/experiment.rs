//! End-to-end experiment pipeline: sample a population, price every
//! client-miner pair, pick an association, train over the ledger, and
//! emit one metrics row per global round.

use crate::config::{AssociationMode, ConfigError, ExperimentConfig};
use crate::metrics::{MetricsRow, SweepRow, METRICS_SCHEMA};
use crate::population::{miner_ids, sample_population, Population};
use fedchain_core::federation::{
    run_federation, FederationError, FederationPlan, Participant,
};
use fedchain_core::ledger::{encode_weights, Chain, ChainConfig, LedgerError};
use fedchain_core::matching::{
    association_utility, build_preferences, random_association, run_mma, AssociationResult,
    ComplexityCounters, MatchingError, PairTable,
};
use fedchain_core::model::LocalModel;
use fedchain_core::rng::{stream_rng, StreamDomain};
use fedchain_core::utility::SystemParams;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The sampled economy admits no association that could train.
    #[error("infeasible experiment: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Federation(#[from] FederationError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Process exit code the binary reports for this failure:
    /// 2 for configuration problems, 3 for infeasible economies,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Infeasible(_) => 3,
            _ => 1,
        }
    }
}

/// Everything a finished run leaves behind.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub chain: Chain,
    pub association: AssociationResult,
    /// Matching work counters; `None` under random association.
    pub counters: Option<ComplexityCounters>,
    pub total_utility: f64,
}

fn system_params(cfg: &ExperimentConfig) -> SystemParams {
    SystemParams {
        switched_capacitance: cfg.system.switched_capacitance,
        bandwidth_hz: cfg.system.bandwidth_hz,
        upload_bits: cfg.system.upload_bits,
        reward_rate: cfg.system.reward_rate,
        energy_price: cfg.system.energy_price,
        deadline_s: cfg.system.deadline_s,
        rounds: cfg.experiment.rounds,
    }
}

fn choose_association(
    cfg: &ExperimentConfig,
    table: &PairTable,
    seed: u64,
) -> Result<(AssociationResult, Option<ComplexityCounters>), ExperimentError> {
    match cfg.experiment.association {
        AssociationMode::Mma => {
            let prefs = match build_preferences(table, cfg.experiment.orientation) {
                Ok(p) => p,
                Err(MatchingError::NoFeasiblePairs) => {
                    return Err(ExperimentError::Infeasible(
                        "no client-miner pair is both within the deadline and profitable".into(),
                    ))
                }
                Err(other) => return Err(other.into()),
            };
            let (result, counters) = run_mma(table, &prefs);
            Ok((result, Some(counters)))
        }
        AssociationMode::Random => {
            let mut rng = stream_rng(seed, StreamDomain::Association, 0, 0);
            let result = random_association(table, &mut rng);
            if result.matched_len() == 0 {
                return Err(ExperimentError::Infeasible(
                    "no client-miner pair is both within the deadline and profitable".into(),
                ));
            }
            Ok((result, None))
        }
    }
}

fn miner_loads_string(association: &AssociationResult) -> String {
    association
        .per_miner_load()
        .iter()
        .map(|(miner, load)| format!("{miner}:{load}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn weights_digest(weights: &[f64]) -> String {
    hex::encode(Sha256::digest(encode_weights(weights)))[..16].to_string()
}

/// Runs one full experiment for `(cfg, seed)`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let pop: Population = sample_population(cfg, seed);
    let miners = miner_ids(cfg.experiment.miners);
    let sys = system_params(cfg);
    let table = PairTable::build(&pop.mcs, &miners, &pop.channels, &sys, 1)?;

    let (association, counters) = choose_association(cfg, &table, seed)?;
    let total_utility = association_utility(&table, &association);

    // A round lasts until its slowest participant has computed and sent
    // its share of the total airtime.
    let rounds_f = f64::from(cfg.experiment.rounds);
    let round_seconds = association
        .assignment_indices()
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| table.econ(i, j)))
        .map(|e| e.comp_time_s + e.trans_time_s / rounds_f)
        .fold(0.0f64, f64::max);

    let participants: Vec<Participant> = association
        .assignment_indices()
        .iter()
        .enumerate()
        .filter_map(|(i, j)| {
            j.map(|j| Participant {
                spec: pop.mcs[i],
                miner: *table.miner_ids().get(j).expect("miner index in range"),
                data: pop.datasets[i].clone(),
            })
        })
        .collect();

    let arch = cfg.arch();
    let plan = FederationPlan {
        participants,
        arch,
        privacy: cfg.privacy_params(),
        rounds: cfg.experiment.rounds,
        rho: cfg.objective.rho,
        eta: cfg.objective.eta,
        total_utility,
        round_seconds,
        lr_schedule: cfg.lr_schedule(),
    };

    let mut init_rng = stream_rng(seed, StreamDomain::ModelInit, 0, 0);
    let mut chain = Chain::init(
        arch.init_weights(&mut init_rng),
        ChainConfig {
            difficulty_bits: cfg.system.mining_difficulty_bits,
            mining_reward: cfg.system.mining_reward,
            miner_count: cfg.experiment.miners,
        },
    );
    let run = run_federation(&plan, &mut chain, seed)?;

    let digest = cfg.digest(seed);
    let loads = miner_loads_string(&association);
    let participants_n = association.matched_len() as u32;
    let rows = run
        .records
        .iter()
        .map(|rec| {
            let model = LocalModel::new(arch, rec.global_weights.clone())
                .expect("aggregated weights match the architecture");
            MetricsRow {
                schema: METRICS_SCHEMA.to_string(),
                config_digest: digest.clone(),
                round: rec.round,
                participants: participants_n,
                miner_loads: loads.clone(),
                global_loss: rec.global_loss,
                total_utility: rec.total_utility,
                objective: rec.objective,
                comm_uploaded: rec.comm.uploaded,
                comm_downloaded: rec.comm.downloaded,
                comm_broadcast: rec.comm.broadcast,
                wall_time_s: rec.wall_time_s,
                weights_digest: weights_digest(&rec.global_weights),
                weights_l2: rec.global_weights.iter().map(|w| w * w).sum::<f64>().sqrt(),
                test_loss: model.dataset_loss(&pop.test_set),
                test_accuracy: model.accuracy(&pop.test_set),
            }
        })
        .collect();

    Ok(ExperimentOutput { rows, chain, association, counters, total_utility })
}

/// Which knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Noise multiplier.
    Sigma,
    /// Gradient clip bound.
    Clip,
    /// Association mode (utility matching vs. random).
    Association,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigma" => Ok(SweepAxis::Sigma),
            "clip" => Ok(SweepAxis::Clip),
            "association" => Ok(SweepAxis::Association),
            other => Err(format!("unknown sweep axis {other:?} (try sigma, clip, association)")),
        }
    }
}

fn final_row(axis: &str, value: String, seed: u64, rows: &[MetricsRow]) -> SweepRow {
    let last = rows.last().expect("runs have at least one round");
    SweepRow {
        axis: axis.to_string(),
        value,
        seed,
        rounds: last.round,
        global_loss: last.global_loss,
        objective: last.objective,
        test_loss: last.test_loss,
        test_accuracy: last.test_accuracy,
    }
}

/// Reruns the experiment once per `(value, seed)` pair, varying `axis`,
/// and reports each run's final round.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut out = Vec::new();
    match axis {
        SweepAxis::Sigma => {
            if values.is_empty() {
                return Err(bad_sweep("a sigma sweep needs at least one value"));
            }
            for &sigma in values {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(bad_sweep("sigma values must be non-negative"));
                }
                let mut cfg = cfg.clone();
                cfg.privacy.noise_multiplier = Some(sigma);
                cfg.privacy.epsilon = None;
                cfg.privacy.delta = None;
                for &seed in seeds {
                    let result = run_experiment(&cfg, seed)?;
                    out.push(final_row("sigma", format!("{sigma}"), seed, &result.rows));
                }
            }
        }
        SweepAxis::Clip => {
            if values.is_empty() {
                return Err(bad_sweep("a clip sweep needs at least one value"));
            }
            for &bound in values {
                if !(bound.is_finite() && bound > 0.0) {
                    return Err(bad_sweep("clip values must be positive"));
                }
                let mut cfg = cfg.clone();
                cfg.privacy.clip_bound = bound;
                for &seed in seeds {
                    let result = run_experiment(&cfg, seed)?;
                    out.push(final_row("clip", format!("{bound}"), seed, &result.rows));
                }
            }
        }
        SweepAxis::Association => {
            for mode in [AssociationMode::Mma, AssociationMode::Random] {
                let mut cfg = cfg.clone();
                cfg.experiment.association = mode;
                let name = match mode {
                    AssociationMode::Mma => "mma",
                    AssociationMode::Random => "random",
                };
                for &seed in seeds {
                    let result = run_experiment(&cfg, seed)?;
                    out.push(final_row("association", name.to_string(), seed, &result.rows));
                }
            }
        }
    }
    Ok(out)
}

fn bad_sweep(reason: &str) -> ExperimentError {
    ExperimentError::Config(ConfigError::Invalid(vec![reason.to_string()]))
}
