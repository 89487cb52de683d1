//! Round orchestration: local training, ledger transport, aggregation.
//!
//! Each global round, every participating client trains privately from
//! the current global weights, its associated miner seals the update
//! into a block, and all clients fetch the round's blocks to rebuild the
//! same data-size-weighted average. The run is a pure function of the
//! plan, the chain's genesis state, and one seed: randomness is drawn
//! from per-purpose streams keyed by client and round, so changing one
//! knob (say, the noise multiplier) perturbs nothing else.

use crate::dp::{local_training, DpError, PlateauSchedule, PrivacyParams};
use crate::ledger::{Chain, LedgerError};
use crate::model::{Architecture, Dataset, LocalModel, WeightVector};
use crate::rng::{stream_rng, StreamDomain};
use crate::utility::{McId, MedicalCenterSpec, MinerId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FederationError {
    #[error("federation has no participants")]
    EmptyFederation,
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("aggregation coefficients sum to {sum:.17}, want 1")]
    WeightSumViolation { sum: f64 },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Privacy(#[from] DpError),
}

/// One client in the federation, tied to the miner it uploads through.
#[derive(Debug, Clone)]
pub struct Participant {
    pub spec: MedicalCenterSpec,
    pub miner: MinerId,
    pub data: Dataset,
}

/// Everything a run needs besides the chain and the seed.
///
/// `total_utility` and `round_seconds` are determined upstream by the
/// association stage (they depend on who trains, not on how training
/// goes) and are carried through to the per-round records.
#[derive(Debug, Clone)]
pub struct FederationPlan {
    /// Participating clients, strictly ascending by client id.
    pub participants: Vec<Participant>,
    pub arch: Architecture,
    pub privacy: PrivacyParams,
    pub rounds: u32,
    /// Weight on aggregate utility in the round objective.
    pub rho: f64,
    /// Weight on global loss in the round objective.
    pub eta: f64,
    /// System-wide utility of the chosen association.
    pub total_utility: f64,
    /// Simulated duration of one global round, in seconds.
    pub round_seconds: f64,
    /// Optional loss-plateau learning-rate decay.
    pub lr_schedule: Option<PlateauSchedule>,
}

impl FederationPlan {
    /// Checks the plan's internal consistency; [`run_federation`] calls
    /// this before touching the chain.
    pub fn validate(&self) -> Result<(), FederationError> {
        if self.participants.is_empty() {
            return Err(FederationError::EmptyFederation);
        }
        for pair in self.participants.windows(2) {
            if pair[1].spec.id <= pair[0].spec.id {
                return Err(FederationError::InvalidPlan(
                    "participants must be strictly ascending by client id".into(),
                ));
            }
        }
        for p in &self.participants {
            if p.data.is_empty() {
                return Err(FederationError::InvalidPlan(format!("{} has no samples", p.spec.id)));
            }
            if p.data.len() != p.spec.data_size as usize {
                return Err(FederationError::InvalidPlan(format!(
                    "{} declares {} samples but holds {}",
                    p.spec.id,
                    p.spec.data_size,
                    p.data.len()
                )));
            }
            if p.data.dim() != self.arch.features() {
                return Err(FederationError::InvalidPlan(format!(
                    "{} has {}-dimensional rows, model expects {}",
                    p.spec.id,
                    p.data.dim(),
                    self.arch.features()
                )));
            }
        }
        let pp = &self.privacy;
        if pp.batch_size == 0 {
            return Err(FederationError::InvalidPlan("batch size must be positive".into()));
        }
        if !(pp.clip_bound.is_finite() && pp.clip_bound > 0.0) {
            return Err(FederationError::InvalidPlan("clip bound must be positive".into()));
        }
        if !(pp.noise_multiplier.is_finite() && pp.noise_multiplier >= 0.0) {
            return Err(FederationError::InvalidPlan(
                "noise multiplier must be non-negative".into(),
            ));
        }
        if !(pp.learning_rate.is_finite() && pp.learning_rate > 0.0) {
            return Err(FederationError::InvalidPlan("learning rate must be positive".into()));
        }
        let weights_ok = self.rho.is_finite()
            && self.eta.is_finite()
            && (self.rho + self.eta - 1.0).abs() <= 1e-9;
        if !weights_ok {
            return Err(FederationError::InvalidPlan(format!(
                "objective weights must sum to 1, got {} + {}",
                self.rho, self.eta
            )));
        }
        if !(self.round_seconds.is_finite() && self.round_seconds >= 0.0) {
            return Err(FederationError::InvalidPlan("round duration must be non-negative".into()));
        }
        let coeffs = self.aggregation_weights();
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(FederationError::WeightSumViolation { sum });
        }
        Ok(())
    }

    /// Per-client aggregation coefficients, proportional to data size.
    pub fn aggregation_weights(&self) -> Vec<f64> {
        let total: f64 = self.participants.iter().map(|p| f64::from(p.spec.data_size)).sum();
        self.participants.iter().map(|p| f64::from(p.spec.data_size) / total).collect()
    }
}

/// Cumulative traffic, in transferred weight values.
///
/// Counters accumulate as the simulated events happen: `uploaded` when a
/// client's update reaches its miner, `broadcast` when the sealed block
/// is relayed to the other miners, `downloaded` when a client pulls a
/// round's blocks to aggregate locally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommCounters {
    pub uploaded: u64,
    pub downloaded: u64,
    pub broadcast: u64,
}

impl CommCounters {
    pub fn total(&self) -> u64 {
        self.uploaded + self.downloaded + self.broadcast
    }
}

/// State of the system after one global round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Global round number, starting at 1.
    pub round: u32,
    pub global_weights: WeightVector,
    /// Mean of the participants' local mean losses at the new weights.
    pub global_loss: f64,
    pub total_utility: f64,
    /// `rho * total_utility - eta * global_loss`.
    pub objective: f64,
    /// Cumulative traffic up to and including this round.
    pub comm: CommCounters,
    /// Simulated seconds elapsed since the start of the run.
    pub wall_time_s: f64,
}

/// Output of [`run_federation`]: one record per completed round.
#[derive(Debug, Clone, PartialEq)]
pub struct FederationRun {
    pub records: Vec<RoundRecord>,
}

impl FederationRun {
    /// Weights after the last round, or `None` for a zero-round run.
    pub fn final_weights(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.global_weights.as_slice())
    }
}

/// Weighted average of equally-shaped weight vectors. Coefficients must
/// sum to 1 (tolerance 1e-9).
pub fn aggregate(
    weight_sets: &[WeightVector],
    coefficients: &[f64],
) -> Result<WeightVector, FederationError> {
    if weight_sets.is_empty() {
        return Err(FederationError::EmptyFederation);
    }
    if coefficients.len() != weight_sets.len() {
        return Err(FederationError::LengthMismatch {
            expected: weight_sets.len(),
            got: coefficients.len(),
        });
    }
    let dim = weight_sets[0].len();
    for ws in weight_sets {
        if ws.len() != dim {
            return Err(FederationError::LengthMismatch { expected: dim, got: ws.len() });
        }
    }
    let sum: f64 = coefficients.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(FederationError::WeightSumViolation { sum });
    }
    let mut out = vec![0.0; dim];
    for (c, ws) in coefficients.iter().zip(weight_sets) {
        for (o, w) in out.iter_mut().zip(ws) {
            *o += c * w;
        }
    }
    Ok(out)
}

/// Mean over clients of each client's mean local loss. Every client
/// counts once, regardless of data size.
pub fn global_loss<'a>(
    model: &LocalModel,
    datasets: impl IntoIterator<Item = &'a Dataset>,
) -> Result<f64, FederationError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for data in datasets {
        total += model.dataset_loss(data);
        count += 1;
    }
    if count == 0 {
        return Err(FederationError::EmptyFederation);
    }
    Ok(total / count as f64)
}

/// The round objective: utility reward minus loss penalty.
pub fn objective_f(rho: f64, eta: f64, total_utility: f64, global_loss: f64) -> f64 {
    rho * total_utility - eta * global_loss
}

/// Runs `plan.rounds` global rounds against `chain`, which must start at
/// its genesis state with weights shaped for `plan.arch`.
///
/// Per round: each client trains locally from the current global
/// weights, updates are mined in (miner id, client id) order, every
/// client fetches the round's blocks, and the data-size-weighted average
/// becomes the next global model. All randomness derives from `seed`.
pub fn run_federation(
    plan: &FederationPlan,
    chain: &mut Chain,
    seed: u64,
) -> Result<FederationRun, FederationError> {
    plan.validate()?;
    let w_len = plan.arch.weight_len();
    if chain.genesis_weights().len() != w_len {
        return Err(FederationError::LengthMismatch {
            expected: w_len,
            got: chain.genesis_weights().len(),
        });
    }

    let coeffs = plan.aggregation_weights();
    let peer_count = u64::from(chain.config().miner_count.saturating_sub(1));
    let mut global = chain.genesis_weights().to_vec();
    let mut lr = plan.privacy.learning_rate;
    let mut best_loss = f64::INFINITY;
    let mut stalled = 0u32;
    let mut comm = CommCounters::default();
    let mut records = Vec::with_capacity(plan.rounds as usize);

    for round in 1..=plan.rounds {
        // Local training: every participant starts from the same global
        // weights and perturbs them with its own private streams.
        let mut updates: Vec<(MinerId, McId, WeightVector)> =
            Vec::with_capacity(plan.participants.len());
        for p in &plan.participants {
            let mut model = LocalModel::new(plan.arch, global.clone())
                .expect("global weights match the architecture");
            let params = PrivacyParams { learning_rate: lr, ..plan.privacy };
            let mc_key = u64::from(p.spec.id.0);
            let round_key = u64::from(round);
            let mut shuffle_rng = stream_rng(seed, StreamDomain::Shuffle, mc_key, round_key);
            let mut noise_rng = stream_rng(seed, StreamDomain::Noise, mc_key, round_key);
            local_training(
                &mut model,
                &p.data,
                &params,
                p.spec.local_iters,
                &mut shuffle_rng,
                &mut noise_rng,
            )?;
            updates.push((p.miner, p.spec.id, model.weights));
        }

        // Ledger transport: miners seal updates in (miner, client) order.
        updates.sort_by_key(|(miner, mc, _)| (*miner, *mc));
        for (miner, mc, weights) in updates {
            let mut mining_rng = stream_rng(
                seed,
                StreamDomain::Mining,
                u64::from(miner.0),
                u64::from(round) << 32 | u64::from(mc.0),
            );
            chain.mine_block(round, miner, mc, weights, &mut mining_rng)?;
            comm.uploaded += w_len as u64;
            comm.broadcast += peer_count * w_len as u64;
        }

        // Aggregation: each client pulls the full round from the chain
        // and computes the same weighted average.
        let uploads = chain.fetch_round_weights(round, plan.participants.len())?;
        let fetched = (uploads.len() * w_len) as u64;
        for _ in &plan.participants {
            comm.downloaded += fetched;
        }
        let weight_sets: Vec<WeightVector> = uploads.into_iter().map(|(_, w)| w).collect();
        global = aggregate(&weight_sets, &coeffs)?;

        let model = LocalModel::new(plan.arch, global.clone())
            .expect("aggregate preserves weight length");
        let loss = global_loss(&model, plan.participants.iter().map(|p| &p.data))?;
        let objective = objective_f(plan.rho, plan.eta, plan.total_utility, loss);

        if let Some(schedule) = plan.lr_schedule {
            if loss < best_loss {
                best_loss = loss;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= schedule.patience {
                    lr *= schedule.factor;
                    stalled = 0;
                }
            }
        }

        records.push(RoundRecord {
            round,
            global_weights: global.clone(),
            global_loss: loss,
            total_utility: plan.total_utility,
            objective,
            comm,
            wall_time_s: f64::from(round) * plan.round_seconds,
        });
    }

    Ok(FederationRun { records })
}
