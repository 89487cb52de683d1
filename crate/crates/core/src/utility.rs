//! Energy, timing, and reward economics of a client/miner pair.
//!
//! Units are SI throughout: joules, seconds, hertz, bits, watts. Reward
//! quantities are in the abstract currency fixed by the per-block reward
//! rate. Decibel inputs are converted with `10^(dB/10)`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Identifier of a medical center (an FL client).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct McId(pub u32);

/// Identifier of a miner (a blockchain node).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MinerId(pub u32);

impl fmt::Display for McId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mc{}", self.0)
    }
}

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "miner{}", self.0)
    }
}

/// System-wide constants of the simulated deployment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    /// Effective switched capacitance of client CPUs (scales cycles·f² to joules).
    pub switched_capacitance: f64,
    /// Bandwidth of one subchannel, Hz.
    pub bandwidth_hz: f64,
    /// Size of one weight upload on the wire, bits.
    pub upload_bits: f64,
    /// Currency credited to a miner per mined block.
    pub reward_rate: f64,
    /// Weight of energy cost in client utility, currency per joule.
    pub energy_price: f64,
    /// Deadline for a full training engagement, seconds.
    pub deadline_s: f64,
    /// Number of global training rounds.
    pub rounds: u32,
}

/// Per-client hardware and workload description.
///
/// `tx_power_w` is in watts; decibel config values are converted before
/// this struct is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedicalCenterSpec {
    pub id: McId,
    /// Number of local training samples.
    pub data_size: u32,
    /// CPU frequency, Hz.
    pub cpu_rate_hz: f64,
    /// CPU cycles needed per trained sample.
    pub cycles_per_sample: f64,
    /// Local iterations per global round.
    pub local_iters: u32,
    /// Transmit power, watts.
    pub tx_power_w: f64,
}

/// Radio link between one client and one miner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Subchannels allocated to the link.
    pub subchannels: u32,
    /// Signal-to-interference-plus-noise ratio, dB.
    pub sinr_db: f64,
}

/// Everything the matching stage needs to know about one candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEconomics {
    /// Energy the client spends computing over all rounds, J.
    pub comp_energy_j: f64,
    /// Time of one global round of local computation, s.
    pub comp_time_s: f64,
    /// Time to push all per-round uploads over this link, s.
    pub trans_time_s: f64,
    /// Energy of those uploads, J.
    pub trans_energy_j: f64,
    /// Total mining revenue the miner would earn, currency.
    pub revenue: f64,
    /// The data-size-proportional share paid back to the client.
    pub reward_share: f64,
    /// Miner utility: revenue kept after paying the client.
    pub miner_utility: f64,
    /// Client utility: reward share minus priced energy cost.
    pub mc_utility: f64,
    /// Whether computation plus transmission meets the deadline.
    pub feasible: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("transmission rate must be positive, got {0}")]
    ZeroRate(f64),
    #[error("total data size must be positive, got {0}")]
    ZeroTotalData(f64),
}

/// Converts a decibel quantity to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Energy in joules to run `iters` local iterations over `samples`
/// samples at `cpu_hz`, with `cycles_per_sample` cycles each:
/// `capacitance · iters · cycles · samples · f²`.
pub fn comp_energy(
    capacitance: f64,
    iters: f64,
    cycles_per_sample: f64,
    samples: f64,
    cpu_hz: f64,
) -> f64 {
    capacitance * iters * cycles_per_sample * samples * cpu_hz * cpu_hz
}

/// Seconds of CPU time for the same workload: `iters · cycles · samples / f`.
pub fn comp_time(iters: f64, cycles_per_sample: f64, samples: f64, cpu_hz: f64) -> f64 {
    iters * cycles_per_sample * samples / cpu_hz
}

/// Achievable uplink rate in bits/s over `subchannels` subchannels of
/// `bandwidth_hz` each: `Q · V · log2(1 + 10^(sinr_db/10))`.
pub fn data_rate(bandwidth_hz: f64, subchannels: f64, sinr_db: f64) -> f64 {
    bandwidth_hz * subchannels * (1.0 + db_to_linear(sinr_db)).log2()
}

/// Seconds to transmit `rounds` uploads of `upload_bits` each at `rate_bps`.
pub fn trans_time(rounds: f64, upload_bits: f64, rate_bps: f64) -> Result<f64, UtilityError> {
    if rate_bps <= 0.0 {
        return Err(UtilityError::ZeroRate(rate_bps));
    }
    Ok(rounds * upload_bits / rate_bps)
}

/// Transmission energy in joules: airtime times transmit power.
pub fn trans_energy(trans_time_s: f64, tx_power_w: f64) -> f64 {
    trans_time_s * tx_power_w
}

/// Total block revenue for a miner serving `assoc_count` clients over
/// `rounds` rounds at `reward_rate` currency per block.
pub fn miner_revenue(rounds: f64, reward_rate: f64, assoc_count: u32) -> f64 {
    rounds * reward_rate * f64::from(assoc_count)
}

/// The client's data-size-proportional cut of `revenue`.
pub fn mc_reward(revenue: f64, data_size: f64, total_data: f64) -> Result<f64, UtilityError> {
    if total_data <= 0.0 {
        return Err(UtilityError::ZeroTotalData(total_data));
    }
    Ok(revenue * data_size / total_data)
}

/// Full economics of one candidate pair.
///
/// `assoc_count` is the number of clients assumed on the miner when
/// revenue is evaluated (1 while preferences are being built, before any
/// association exists). `total_data` is the data-size sum over the whole
/// client population, which fixes the reward split.
///
/// Identity: `miner_utility + mc_utility + energy_price·(comp_energy +
/// trans_energy) = revenue` by construction.
pub fn pair_economics(
    mc: &MedicalCenterSpec,
    chan: &ChannelSpec,
    sys: &SystemParams,
    assoc_count: u32,
    total_data: f64,
) -> Result<PairEconomics, UtilityError> {
    let iters = f64::from(mc.local_iters);
    let samples = f64::from(mc.data_size);
    let rounds = f64::from(sys.rounds);

    let comp_energy_j = comp_energy(
        sys.switched_capacitance,
        iters,
        mc.cycles_per_sample,
        samples,
        mc.cpu_rate_hz,
    );
    let comp_time_s = comp_time(iters, mc.cycles_per_sample, samples, mc.cpu_rate_hz);

    let rate = data_rate(sys.bandwidth_hz, f64::from(chan.subchannels), chan.sinr_db);
    let trans_time_s = trans_time(rounds, sys.upload_bits, rate)?;
    let trans_energy_j = trans_energy(trans_time_s, mc.tx_power_w);

    let revenue = miner_revenue(rounds, sys.reward_rate, assoc_count);
    let reward_share = mc_reward(revenue, samples, total_data)?;
    let miner_utility = revenue - reward_share;
    let mc_utility = reward_share - sys.energy_price * (comp_energy_j + trans_energy_j);
    let feasible = comp_time_s + trans_time_s <= sys.deadline_s;

    Ok(PairEconomics {
        comp_energy_j,
        comp_time_s,
        trans_time_s,
        trans_energy_j,
        revenue,
        reward_share,
        miner_utility,
        mc_utility,
        feasible,
    })
}
