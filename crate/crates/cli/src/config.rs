//! TOML experiment configuration with defaults for every knob.
//!
//! An empty file is a complete configuration: it describes a 50-client,
//! 5-miner run with utility-driven association, 15 global rounds, and
//! moderate gradient noise. Every section can be overridden piecemeal.

use fedchain_core::dp::{sigma_from_budget, PlateauSchedule, PrivacyParams};
use fedchain_core::matching::Orientation;
use fedchain_core::model::Architecture;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

/// Noise multiplier used when neither `noise_multiplier` nor an
/// `(epsilon, delta)` budget is configured.
pub const DEFAULT_NOISE_MULTIPLIER: f64 = 0.25;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// How clients are assigned to miners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMode {
    /// Deferred-acceptance matching on the utility economy.
    Mma,
    /// Uniform choice among admissible miners (baseline).
    Random,
}

/// Local model family trained by each client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// Number of medical centers (clients).
    pub mcs: u32,
    /// Number of miners.
    pub miners: u32,
    /// Global training rounds.
    pub rounds: u32,
    pub association: AssociationMode,
    pub orientation: Orientation,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            mcs: 50,
            miners: 5,
            rounds: 15,
            association: AssociationMode::Mma,
            orientation: Orientation::SelfUtility,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    /// Effective switched capacitance of client CPUs.
    pub switched_capacitance: f64,
    /// Bandwidth of one subchannel, Hz.
    pub bandwidth_hz: f64,
    /// Size of one model upload, bits.
    pub upload_bits: f64,
    /// Training reward per data contribution per round.
    pub reward_rate: f64,
    /// Price a client pays per joule.
    pub energy_price: f64,
    /// Deadline for compute plus airtime, seconds.
    pub deadline_s: f64,
    /// Leading zero bits required of a block hash.
    pub mining_difficulty_bits: u32,
    /// Currency credited to a miner per sealed block.
    pub mining_reward: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            switched_capacitance: 1e-28,
            bandwidth_hz: 20e6,
            upload_bits: 3776.0,
            reward_rate: 10.0,
            energy_price: 1.0,
            deadline_s: 1440.0,
            mining_difficulty_bits: 8,
            mining_reward: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSection {
    /// Client CPU rate range, Hz.
    pub cpu_hz: [f64; 2],
    /// CPU cycles to process one sample.
    pub cycles_per_sample: [f64; 2],
    /// Client transmit power range, dBW.
    pub tx_power_dbw: [f64; 2],
    /// Subchannels granted per client-miner link.
    pub subchannels: [u32; 2],
    /// Link quality range, dB.
    pub sinr_db: [f64; 2],
    /// Samples held by each client; unset divides `total_samples`
    /// evenly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_mc: Option<u32>,
    /// Corpus size shared out when `samples_per_mc` is unset.
    pub total_samples: u32,
}

impl Default for PopulationSection {
    fn default() -> Self {
        Self {
            cpu_hz: [1e9, 2.6e9],
            cycles_per_sample: [1e4, 3e4],
            tx_power_dbw: [1.0, 10.0],
            subchannels: [1, 10],
            sinr_db: [13.0, 20.0],
            samples_per_mc: None,
            total_samples: 5270,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub features: u32,
    /// Hidden units; used by `mlp` only.
    pub hidden: u32,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { kind: ModelKind::Logistic, features: 20, hidden: 16 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Distance between class means in units of within-class spread.
    pub separation: f64,
    /// Multiplies both class means and within-class spread; larger
    /// values inflate per-sample gradient norms.
    pub feature_scale: f64,
    /// Size of the held-out evaluation set.
    pub test_samples: u32,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { separation: 2.0, feature_scale: 1.0, test_samples: 1000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacySection {
    /// Gaussian noise multiplier; mutually exclusive with the
    /// `(epsilon, delta)` budget below.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_multiplier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// L2 bound applied to each per-sample gradient.
    pub clip_bound: f64,
    pub batch_size: u32,
    pub learning_rate: f64,
    /// Local passes over the client dataset per global round.
    pub local_iters: u32,
}

impl Default for PrivacySection {
    fn default() -> Self {
        Self {
            noise_multiplier: None,
            epsilon: None,
            delta: None,
            clip_bound: 8.0,
            batch_size: 32,
            learning_rate: 0.01,
            local_iters: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSection {
    /// Weight on association utility in the round objective.
    pub rho: f64,
    /// Weight on global loss in the round objective.
    pub eta: f64,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        Self { rho: 0.5, eta: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    /// Non-improving rounds tolerated before a learning-rate cut.
    pub patience: u32,
    /// Multiplier applied to the learning rate on a cut.
    pub factor: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { patience: 2, factor: 0.3 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub system: SystemSection,
    pub population: PopulationSection,
    pub model: ModelSection,
    pub data: DataSection,
    pub privacy: PrivacySection,
    pub objective: ObjectiveSection,
    /// Optional loss-plateau learning-rate decay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
}

fn positive(problems: &mut Vec<String>, value: f64, what: &str) {
    if !(value.is_finite() && value > 0.0) {
        problems.push(format!("{what} must be positive, got {value}"));
    }
}

fn non_negative(problems: &mut Vec<String>, value: f64, what: &str) {
    if !(value.is_finite() && value >= 0.0) {
        problems.push(format!("{what} must be non-negative, got {value}"));
    }
}

fn ordered_range(problems: &mut Vec<String>, range: [f64; 2], what: &str) {
    if !(range[0].is_finite() && range[1].is_finite() && range[0] <= range[1]) {
        problems.push(format!("{what} range [{}, {}] is not ordered", range[0], range[1]));
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section; collects all problems rather than stopping
    /// at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let e = &self.experiment;
        if e.mcs == 0 {
            problems.push("experiment.mcs must be at least 1".into());
        }
        if e.miners == 0 {
            problems.push("experiment.miners must be at least 1".into());
        }
        if e.rounds == 0 {
            problems.push("experiment.rounds must be at least 1".into());
        }

        let s = &self.system;
        positive(&mut problems, s.switched_capacitance, "system.switched_capacitance");
        positive(&mut problems, s.bandwidth_hz, "system.bandwidth_hz");
        positive(&mut problems, s.upload_bits, "system.upload_bits");
        non_negative(&mut problems, s.reward_rate, "system.reward_rate");
        non_negative(&mut problems, s.energy_price, "system.energy_price");
        positive(&mut problems, s.deadline_s, "system.deadline_s");
        non_negative(&mut problems, s.mining_reward, "system.mining_reward");
        if s.mining_difficulty_bits > 24 {
            problems.push(format!(
                "system.mining_difficulty_bits = {} would make simulated mining impractically slow (max 24)",
                s.mining_difficulty_bits
            ));
        }

        let p = &self.population;
        ordered_range(&mut problems, p.cpu_hz, "population.cpu_hz");
        positive(&mut problems, p.cpu_hz[0], "population.cpu_hz lower bound");
        ordered_range(&mut problems, p.cycles_per_sample, "population.cycles_per_sample");
        positive(&mut problems, p.cycles_per_sample[0], "population.cycles_per_sample lower bound");
        ordered_range(&mut problems, p.tx_power_dbw, "population.tx_power_dbw");
        ordered_range(
            &mut problems,
            [f64::from(p.subchannels[0]), f64::from(p.subchannels[1])],
            "population.subchannels",
        );
        if p.subchannels[0] == 0 {
            problems.push("population.subchannels lower bound must be at least 1".into());
        }
        ordered_range(&mut problems, p.sinr_db, "population.sinr_db");
        match p.samples_per_mc {
            Some(0) => problems.push("population.samples_per_mc must be at least 1".into()),
            Some(_) => {}
            None => {
                if e.mcs > 0 && p.total_samples / e.mcs == 0 {
                    problems.push(format!(
                        "population.total_samples = {} cannot cover {} clients",
                        p.total_samples, e.mcs
                    ));
                }
            }
        }

        let m = &self.model;
        if m.features == 0 {
            problems.push("model.features must be at least 1".into());
        }
        if m.kind == ModelKind::Mlp && m.hidden == 0 {
            problems.push("model.hidden must be at least 1 for the mlp model".into());
        }

        let d = &self.data;
        non_negative(&mut problems, d.separation, "data.separation");
        positive(&mut problems, d.feature_scale, "data.feature_scale");
        if d.test_samples == 0 {
            problems.push("data.test_samples must be at least 1".into());
        }

        let pr = &self.privacy;
        positive(&mut problems, pr.clip_bound, "privacy.clip_bound");
        if pr.batch_size == 0 {
            problems.push("privacy.batch_size must be at least 1".into());
        }
        positive(&mut problems, pr.learning_rate, "privacy.learning_rate");
        if pr.local_iters == 0 {
            problems.push("privacy.local_iters must be at least 1".into());
        }
        if let Some(sigma) = pr.noise_multiplier {
            non_negative(&mut problems, sigma, "privacy.noise_multiplier");
            if pr.epsilon.is_some() || pr.delta.is_some() {
                problems.push(
                    "privacy.noise_multiplier and the (epsilon, delta) budget are mutually exclusive"
                        .into(),
                );
            }
        }
        match (pr.epsilon, pr.delta) {
            (Some(eps), Some(delta)) => {
                if sigma_from_budget(eps, delta).is_err() {
                    problems.push(format!(
                        "privacy budget epsilon = {eps}, delta = {delta} is not a valid \
                         (positive epsilon, delta in (0, 1)) pair"
                    ));
                }
            }
            (Some(_), None) => problems.push("privacy.epsilon requires privacy.delta".into()),
            (None, Some(_)) => problems.push("privacy.delta requires privacy.epsilon".into()),
            (None, None) => {}
        }

        let o = &self.objective;
        non_negative(&mut problems, o.rho, "objective.rho");
        non_negative(&mut problems, o.eta, "objective.eta");
        if (o.rho + o.eta - 1.0).abs() > 1e-9 {
            problems.push(format!(
                "objective.rho + objective.eta must equal 1, got {} + {}",
                o.rho, o.eta
            ));
        }

        if let Some(sched) = &self.schedule {
            if sched.patience == 0 {
                problems.push("schedule.patience must be at least 1".into());
            }
            if !(sched.factor > 0.0 && sched.factor < 1.0) {
                problems.push(format!(
                    "schedule.factor must lie in (0, 1), got {}",
                    sched.factor
                ));
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    /// The noise multiplier actually used: explicit value, value derived
    /// from the `(epsilon, delta)` budget, or the default.
    pub fn resolved_noise_multiplier(&self) -> f64 {
        if let Some(sigma) = self.privacy.noise_multiplier {
            return sigma;
        }
        if let (Some(eps), Some(delta)) = (self.privacy.epsilon, self.privacy.delta) {
            return sigma_from_budget(eps, delta)
                .expect("validation admits only well-formed budgets");
        }
        DEFAULT_NOISE_MULTIPLIER
    }

    pub fn arch(&self) -> Architecture {
        match self.model.kind {
            ModelKind::Logistic => {
                Architecture::LogisticRegression { features: self.model.features as usize }
            }
            ModelKind::Mlp => Architecture::TwoLayerMlp {
                features: self.model.features as usize,
                hidden: self.model.hidden as usize,
            },
        }
    }

    pub fn privacy_params(&self) -> PrivacyParams {
        PrivacyParams {
            noise_multiplier: self.resolved_noise_multiplier(),
            clip_bound: self.privacy.clip_bound,
            batch_size: self.privacy.batch_size as usize,
            learning_rate: self.privacy.learning_rate,
        }
    }

    pub fn lr_schedule(&self) -> Option<PlateauSchedule> {
        self.schedule
            .map(|s| PlateauSchedule { patience: s.patience, factor: s.factor })
    }

    /// Samples held by each client.
    pub fn samples_per_client(&self) -> u32 {
        self.population
            .samples_per_mc
            .unwrap_or(self.population.total_samples / self.experiment.mcs)
    }

    /// Sixteen hex characters identifying this configuration and seed;
    /// stamped on every metrics row.
    pub fn digest(&self, seed: u64) -> String {
        let mut hasher = Sha256::new();
        hasher
            .update(serde_json::to_vec(self).expect("config serialization cannot fail"));
        hasher.update(seed.to_le_bytes());
        hex::encode(hasher.finalize())[..16].to_string()
    }
}
