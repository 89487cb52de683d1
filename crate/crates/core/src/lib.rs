//! Deterministic simulator for utility-driven client/miner association and
//! blockchain-backed, differentially private federated learning.
//!
//! The pipeline has two stages. First, medical centers (FL clients) and
//! miners (blockchain nodes) are matched by a round-based deferred-acceptance
//! procedure driven by an explicit energy/reward economy ([`utility`],
//! [`matching`]). Second, the matched clients train local models under
//! per-sample gradient clipping and Gaussian noise, upload weights through a
//! proof-of-work ledger, and receive the data-size-weighted aggregate back
//! each round ([`dp`], [`ledger`], [`federation`]).
//!
//! Every random draw flows from one experiment seed through named
//! sub-streams ([`rng`]), so identical inputs reproduce identical outputs
//! bit for bit.

pub mod dp;
pub mod federation;
pub mod ledger;
pub mod matching;
pub mod model;
pub mod rng;
pub mod utility;

pub use dp::{
    clip_gradient, local_training, noisy_batch_step, sigma_from_budget, DpError, PlateauSchedule,
    PrivacyParams,
};
pub use federation::{
    aggregate, global_loss, objective_f, run_federation, CommCounters, FederationError,
    FederationPlan, FederationRun, Participant, RoundRecord,
};
pub use ledger::{encode_weights, meets_difficulty, Block, Chain, ChainConfig, Hash32, LedgerError};
pub use matching::{
    association_utility, build_preferences, find_blocking_pairs, random_association, run_mma,
    AssociationResult, ComplexityCounters, MatchingError, Orientation, PairTable,
    PreferenceTables,
};
pub use model::{Architecture, Dataset, LocalModel, ModelError, WeightVector};
pub use rng::{stream_rng, SimRng, StreamDomain};
pub use utility::{
    comp_energy, comp_time, data_rate, db_to_linear, mc_reward, miner_revenue, pair_economics,
    trans_energy, trans_time, ChannelSpec, McId, MedicalCenterSpec, MinerId, PairEconomics,
    SystemParams, UtilityError,
};
