//! Shared instance builders for the benchmarks.
//!
//! Everything here derives from explicit seeds through the same streams the
//! simulator uses, so benchmark inputs are realistic (priced economies,
//! synthetic shards) and identical from run to run.

use fedchain_cli::population::{miner_ids, sample_market, sample_population};
use fedchain_cli::ExperimentConfig;
use fedchain_core::rng::{stream_rng, StreamDomain};
use fedchain_core::{
    Chain, ChainConfig, ChannelSpec, Dataset, LocalModel, MedicalCenterSpec, MinerId, PairTable,
    PrivacyParams, SystemParams, WeightVector,
};

/// Mirrors the CLI's default economics so priced pairs look like a real run.
pub fn default_system(cfg: &ExperimentConfig) -> SystemParams {
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

/// Hardware and radio draws for an `mcs` x `miners` market.
pub fn market(
    mcs: u32,
    miners: u32,
    seed: u64,
) -> (Vec<MedicalCenterSpec>, Vec<MinerId>, Vec<Vec<ChannelSpec>>, SystemParams) {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.mcs = mcs;
    cfg.experiment.miners = miners;
    let (specs, channels) = sample_market(&cfg, seed);
    (specs, miner_ids(miners), channels, default_system(&cfg))
}

/// A fully priced pair table for the same market.
pub fn market_table(mcs: u32, miners: u32, seed: u64) -> PairTable {
    let (specs, miners, channels, sys) = market(mcs, miners, seed);
    PairTable::build(&specs, &miners, &channels, &sys, 1).expect("default ranges price cleanly")
}

/// One client's shard plus a freshly initialized model and the default
/// privacy parameters.
pub fn training_instance(rows: u32, seed: u64) -> (LocalModel, Dataset, PrivacyParams) {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.mcs = 1;
    cfg.experiment.miners = 1;
    cfg.population.samples_per_mc = Some(rows);
    cfg.data.test_samples = 1;
    let pop = sample_population(&cfg, seed);
    let arch = cfg.arch();
    let init = arch.init_weights(&mut stream_rng(seed, StreamDomain::ModelInit, 0, 0));
    let model = LocalModel::new(arch, init).expect("init matches arch");
    let data = pop.datasets.into_iter().next().expect("one client requested");
    (model, data, cfg.privacy_params())
}

/// A genesis-only chain ready to mine weight vectors of length `weight_len`
/// at the given difficulty.
pub fn fresh_chain(difficulty_bits: u32, weight_len: usize) -> Chain {
    Chain::init(
        vec![0.0; weight_len],
        ChainConfig { difficulty_bits, mining_reward: 10.0, miner_count: 5 },
    )
}

/// `count` weight vectors of length `len` with equal mixing coefficients.
pub fn weight_sets(count: usize, len: usize, seed: u64) -> (Vec<WeightVector>, Vec<f64>) {
    use rand::Rng;
    let mut rng = stream_rng(seed, StreamDomain::ModelInit, 1, 0);
    // Plain uniform payloads; aggregation cost depends only on the shapes.
    let sets = (0..count)
        .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (sets, vec![1.0 / count as f64; count])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn market_table_is_deterministic_and_sized() {
        let a = market_table(12, 3, 7);
        let b = market_table(12, 3, 7);
        assert_eq!(a.mc_count(), 12);
        assert_eq!(a.miner_count(), 3);
        for i in 0..a.mc_count() {
            for j in 0..a.miner_count() {
                assert_eq!(a.econ(i, j), b.econ(i, j));
            }
        }
    }

    #[test]
    fn training_instance_shapes_agree() {
        let (model, data, params) = training_instance(64, 3);
        assert_eq!(data.len(), 64);
        assert_eq!(model.arch.features(), data.dim());
        assert!(params.batch_size > 0);
    }
}
