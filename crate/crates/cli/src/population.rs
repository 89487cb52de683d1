//! Synthetic populations: client hardware, radio links, and data.
//!
//! Every entity draws from its own named random stream, keyed by client
//! (and miner) index. Adding a client or a miner therefore never
//! disturbs the hardware or the data of the others, and the held-out
//! test set is identical across population sizes.

use crate::config::ExperimentConfig;
use fedchain_core::model::Dataset;
use fedchain_core::rng::{stream_rng, StreamDomain};
use fedchain_core::utility::{ChannelSpec, McId, MedicalCenterSpec, MinerId};
use rand::Rng;
use rand_distr::StandardNormal;

/// Everything sampled for one experiment.
#[derive(Debug, Clone)]
pub struct Population {
    pub mcs: Vec<MedicalCenterSpec>,
    /// Link spec per client, per miner: `channels[i][j]`.
    pub channels: Vec<Vec<ChannelSpec>>,
    /// Local data per client, aligned with `mcs`.
    pub datasets: Vec<Dataset>,
    /// Shared held-out evaluation set.
    pub test_set: Dataset,
}

/// Miner identifiers `miner0..minerS`.
pub fn miner_ids(count: u32) -> Vec<MinerId> {
    (0..count).map(MinerId).collect()
}

/// Samples hardware and radio links only — enough to price every
/// client-miner pair without generating any data.
pub fn sample_market(
    cfg: &ExperimentConfig,
    seed: u64,
) -> (Vec<MedicalCenterSpec>, Vec<Vec<ChannelSpec>>) {
    let p = &cfg.population;
    let samples = cfg.samples_per_client();
    let mut mcs = Vec::with_capacity(cfg.experiment.mcs as usize);
    let mut channels = Vec::with_capacity(cfg.experiment.mcs as usize);
    for i in 0..cfg.experiment.mcs {
        let mut rng = stream_rng(seed, StreamDomain::Population, u64::from(i), 0);
        let dbw = rng.random_range(p.tx_power_dbw[0]..=p.tx_power_dbw[1]);
        mcs.push(MedicalCenterSpec {
            id: McId(i),
            data_size: samples,
            cpu_rate_hz: rng.random_range(p.cpu_hz[0]..=p.cpu_hz[1]),
            cycles_per_sample: rng.random_range(p.cycles_per_sample[0]..=p.cycles_per_sample[1]),
            local_iters: cfg.privacy.local_iters,
            tx_power_w: 10f64.powf(dbw / 10.0),
        });
        let mut links = Vec::with_capacity(cfg.experiment.miners as usize);
        for j in 0..cfg.experiment.miners {
            let mut rng =
                stream_rng(seed, StreamDomain::Population, u64::from(i), 1 + u64::from(j));
            links.push(ChannelSpec {
                subchannels: rng.random_range(p.subchannels[0]..=p.subchannels[1]),
                sinr_db: rng.random_range(p.sinr_db[0]..=p.sinr_db[1]),
            });
        }
        channels.push(links);
    }
    (mcs, channels)
}

/// Two spherical Gaussian classes with alternating labels. The class
/// means sit at `±separation/(2·sqrt(dim))` per coordinate and the
/// within-class spread is 1, both scaled by `feature_scale`.
fn sample_dataset(
    rows: u32,
    dim: usize,
    separation: f64,
    feature_scale: f64,
    rng: &mut fedchain_core::SimRng,
) -> Dataset {
    let mean = feature_scale * separation / (2.0 * (dim as f64).sqrt());
    let mut data = Dataset::new(dim);
    let mut x = vec![0.0; dim];
    for row in 0..rows {
        let label = f64::from(row % 2);
        let center = if label > 0.5 { mean } else { -mean };
        for v in x.iter_mut() {
            let noise: f64 = rng.sample(StandardNormal);
            *v = center + feature_scale * noise;
        }
        data.push_row(&x, label);
    }
    data
}

/// Samples the full experiment input for `seed`.
pub fn sample_population(cfg: &ExperimentConfig, seed: u64) -> Population {
    let (mcs, channels) = sample_market(cfg, seed);
    let dim = cfg.model.features as usize;
    let datasets = mcs
        .iter()
        .map(|mc| {
            let mut rng = stream_rng(seed, StreamDomain::Dataset, u64::from(mc.id.0), 0);
            sample_dataset(mc.data_size, dim, cfg.data.separation, cfg.data.feature_scale, &mut rng)
        })
        .collect();
    let mut test_rng = stream_rng(seed, StreamDomain::TestSet, 0, 0);
    let test_set = sample_dataset(
        cfg.data.test_samples,
        dim,
        cfg.data.separation,
        cfg.data.feature_scale,
        &mut test_rng,
    );
    Population { mcs, channels, datasets, test_set }
}
