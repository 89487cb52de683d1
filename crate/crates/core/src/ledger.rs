//! Append-only proof-of-work ledger carrying model updates.
//!
//! Every accepted upload becomes one block: header fields, the full
//! weight vector, a digest of its canonical encoding, and a nonce for
//! which the SHA-256 header hash has the required number of leading zero
//! bits. Weights are encoded as little-endian IEEE-754 bit patterns, so
//! a round trip through the chain is exact. Mining is simulated
//! sequentially; there are no forks, and a logical clock stands in for
//! wall time.

use crate::model::WeightVector;
use crate::rng::SimRng;
use crate::utility::{McId, MinerId};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use thiserror::Error;

/// SHA-256 output.
pub type Hash32 = [u8; 32];

/// Serializes digests as lowercase hex in export files.
mod hex_digest {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &super::Hash32, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<super::Hash32, D::Error> {
        let text = String::deserialize(de)?;
        let raw = hex::decode(&text).map_err(serde::de::Error::custom)?;
        raw.try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
    }
}

/// One ledger entry. `miner` and `mc` are `None` only on the genesis
/// record, which is also exempt from the difficulty predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    #[serde(with = "hex_digest")]
    pub prev_hash: Hash32,
    pub nonce: u64,
    /// Global training round the payload belongs to (0 for genesis).
    pub round: u32,
    pub miner: Option<MinerId>,
    pub mc: Option<McId>,
    pub payload: WeightVector,
    #[serde(with = "hex_digest")]
    pub payload_digest: Hash32,
    /// Logical append time; strictly increasing along the chain.
    pub timestamp: u64,
    #[serde(with = "hex_digest")]
    pub hash: Hash32,
}

/// Chain-wide constants fixed at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Leading zero bits a block hash must carry.
    pub difficulty_bits: u32,
    /// Currency credited per mined block.
    pub mining_reward: f64,
    /// Miners in the network; each block is rebroadcast to the others.
    pub miner_count: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("upload rejected: {0}")]
    MalformedUpload(String),
    #[error("round {round} already holds an upload from {mc}")]
    DuplicateUpload { round: u32, mc: McId },
    #[error("round {round} has {have} of {want} uploads")]
    IncompleteRound { round: u32, have: usize, want: usize },
    #[error("block {height}: stored hash does not match header")]
    HashMismatch { height: u64 },
    #[error("block {height}: broken link to predecessor")]
    BrokenLink { height: u64 },
    #[error("block {height}: hash misses difficulty target")]
    MissedTarget { height: u64 },
    #[error("block {height}: payload does not match its digest")]
    PayloadMismatch { height: u64 },
    #[error("block {1}: {0}")]
    BadStructure(String, u64),
    #[error("chain file line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
}

const NO_ID: u32 = u32::MAX;

fn digest_weights(weights: &[f64]) -> Hash32 {
    let mut hasher = Sha256::new();
    for w in weights {
        hasher.update(w.to_le_bytes());
    }
    hasher.finalize().into()
}

/// Canonical little-endian encoding of the weight vector.
pub fn encode_weights(weights: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(weights.len() * 8);
    for w in weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

/// Fixed-width header image that the block hash commits to. The nonce
/// lives at a fixed offset so the search can patch it in place.
const NONCE_OFFSET: usize = 8 + 32;

#[allow(clippy::too_many_arguments)] // mirrors the on-chain header layout
fn header_bytes(
    height: u64,
    prev_hash: &Hash32,
    nonce: u64,
    round: u32,
    miner: Option<MinerId>,
    mc: Option<McId>,
    payload_digest: &Hash32,
    timestamp: u64,
) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 + 32 + 8 + 4 + 4 + 4 + 32 + 8);
    buf.extend_from_slice(&height.to_le_bytes());
    buf.extend_from_slice(prev_hash);
    buf.extend_from_slice(&nonce.to_le_bytes());
    buf.extend_from_slice(&round.to_le_bytes());
    buf.extend_from_slice(&miner.map_or(NO_ID, |m| m.0).to_le_bytes());
    buf.extend_from_slice(&mc.map_or(NO_ID, |m| m.0).to_le_bytes());
    buf.extend_from_slice(payload_digest);
    buf.extend_from_slice(&timestamp.to_le_bytes());
    buf
}

fn sha256(bytes: &[u8]) -> Hash32 {
    Sha256::digest(bytes).into()
}

/// True when `hash` starts with `bits` zero bits.
pub fn meets_difficulty(hash: &Hash32, bits: u32) -> bool {
    let full = (bits / 8) as usize;
    if hash[..full] != [0u8; 32][..full] {
        return false;
    }
    let rest = bits % 8;
    rest == 0 || hash[full] >> (8 - rest) == 0
}

impl Block {
    fn recompute_hash(&self) -> Hash32 {
        sha256(&header_bytes(
            self.height,
            &self.prev_hash,
            self.nonce,
            self.round,
            self.miner,
            self.mc,
            &self.payload_digest,
            self.timestamp,
        ))
    }
}

/// The ledger: blocks plus reward and broadcast bookkeeping.
#[derive(Debug, Clone)]
pub struct Chain {
    blocks: Vec<Block>,
    config: ChainConfig,
    rewards: BTreeMap<MinerId, f64>,
    broadcast_log: u64,
    attempts_log: Vec<u64>,
    clock: u64,
}

impl Chain {
    /// Starts a chain whose genesis block carries the initial global
    /// weights. Genesis is deterministic: nonce 0, timestamp 0, no proof
    /// required.
    pub fn init(genesis_weights: WeightVector, config: ChainConfig) -> Self {
        let payload_digest = digest_weights(&genesis_weights);
        let mut genesis = Block {
            height: 0,
            prev_hash: [0u8; 32],
            nonce: 0,
            round: 0,
            miner: None,
            mc: None,
            payload: genesis_weights,
            payload_digest,
            timestamp: 0,
            hash: [0u8; 32],
        };
        genesis.hash = genesis.recompute_hash();
        Self {
            blocks: vec![genesis],
            config,
            rewards: BTreeMap::new(),
            broadcast_log: 0,
            attempts_log: Vec::new(),
            clock: 0,
        }
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a chain always has its genesis block
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("genesis always present")
    }

    pub fn genesis_weights(&self) -> &[f64] {
        &self.blocks[0].payload
    }

    /// Currency each miner has earned, `mining_reward` per block.
    pub fn rewards(&self) -> &BTreeMap<MinerId, f64> {
        &self.rewards
    }

    /// Block transmissions to peer miners so far:
    /// `(miner_count − 1) · mined blocks`.
    pub fn broadcast_log(&self) -> u64 {
        self.broadcast_log
    }

    /// Nonce attempts of each mined block, in mining order.
    pub fn mining_attempts(&self) -> &[u64] {
        &self.attempts_log
    }

    /// Sanity-checks an upload before mining: the weight count must
    /// match the genesis model and every value must be finite.
    pub fn verify_upload(&self, weights: &[f64]) -> Result<(), LedgerError> {
        let expected = self.genesis_weights().len();
        if weights.len() != expected {
            return Err(LedgerError::MalformedUpload(format!(
                "expected {expected} weights, got {}",
                weights.len()
            )));
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
            return Err(LedgerError::MalformedUpload(format!(
                "non-finite weight at index {pos}"
            )));
        }
        Ok(())
    }

    /// Verifies `weights`, searches a nonce meeting the difficulty
    /// (sequentially from a seeded start), appends the block, credits the
    /// miner, and logs the rebroadcast to the other miners.
    pub fn mine_block(
        &mut self,
        round: u32,
        miner: MinerId,
        mc: McId,
        weights: WeightVector,
        rng: &mut SimRng,
    ) -> Result<&Block, LedgerError> {
        self.verify_upload(&weights)?;
        if self
            .blocks
            .iter()
            .any(|b| b.round == round && b.mc == Some(mc))
        {
            return Err(LedgerError::DuplicateUpload { round, mc });
        }

        let height = self.blocks.len() as u64;
        let prev_hash = self.tip().hash;
        let payload_digest = digest_weights(&weights);
        self.clock += 1;
        let timestamp = self.clock;

        let mut header = header_bytes(
            height,
            &prev_hash,
            0,
            round,
            Some(miner),
            Some(mc),
            &payload_digest,
            timestamp,
        );
        let mut nonce = rng.next_u64();
        let mut attempts = 0u64;
        let hash = loop {
            attempts += 1;
            header[NONCE_OFFSET..NONCE_OFFSET + 8].copy_from_slice(&nonce.to_le_bytes());
            let candidate = sha256(&header);
            if meets_difficulty(&candidate, self.config.difficulty_bits) {
                break candidate;
            }
            nonce = nonce.wrapping_add(1);
        };

        self.blocks.push(Block {
            height,
            prev_hash,
            nonce,
            round,
            miner: Some(miner),
            mc: Some(mc),
            payload: weights,
            payload_digest,
            timestamp,
            hash,
        });
        *self.rewards.entry(miner).or_insert(0.0) += self.config.mining_reward;
        self.broadcast_log += u64::from(self.config.miner_count.saturating_sub(1));
        self.attempts_log.push(attempts);
        Ok(self.tip())
    }

    /// Full integrity check: heights, linkage, stored hashes, payload
    /// digests, difficulty, timestamps, and genesis shape.
    pub fn verify(&self) -> Result<(), LedgerError> {
        for (i, block) in self.blocks.iter().enumerate() {
            let height = i as u64;
            if block.height != height {
                return Err(LedgerError::BadStructure("height out of sequence".into(), height));
            }
            if block.payload_digest != digest_weights(&block.payload) {
                return Err(LedgerError::PayloadMismatch { height });
            }
            if block.hash != block.recompute_hash() {
                return Err(LedgerError::HashMismatch { height });
            }
            if i == 0 {
                if block.prev_hash != [0u8; 32] || block.miner.is_some() || block.mc.is_some() {
                    return Err(LedgerError::BadStructure("malformed genesis".into(), height));
                }
                continue;
            }
            let prev = &self.blocks[i - 1];
            if block.prev_hash != prev.hash {
                return Err(LedgerError::BrokenLink { height });
            }
            if block.timestamp <= prev.timestamp {
                return Err(LedgerError::BadStructure("non-increasing timestamp".into(), height));
            }
            if block.miner.is_none() || block.mc.is_none() {
                return Err(LedgerError::BadStructure("missing miner or client".into(), height));
            }
            if !meets_difficulty(&block.hash, self.config.difficulty_bits) {
                return Err(LedgerError::MissedTarget { height });
            }
            if block.payload.len() != self.genesis_weights().len() {
                return Err(LedgerError::BadStructure("payload length drift".into(), height));
            }
        }
        Ok(())
    }

    /// All uploads of `round`, ascending by client id. `expected` is the
    /// number of participating clients.
    pub fn fetch_round_weights(
        &self,
        round: u32,
        expected: usize,
    ) -> Result<Vec<(McId, WeightVector)>, LedgerError> {
        let mut uploads: Vec<(McId, WeightVector)> = self
            .blocks
            .iter()
            .filter(|b| b.round == round && b.mc.is_some())
            .map(|b| (b.mc.unwrap(), b.payload.clone()))
            .collect();
        if uploads.len() != expected {
            return Err(LedgerError::IncompleteRound {
                round,
                have: uploads.len(),
                want: expected,
            });
        }
        uploads.sort_by_key(|(mc, _)| *mc);
        Ok(uploads)
    }

    /// Writes the chain as one JSON header line plus one JSON line per
    /// block. Mining attempt counts are ephemeral and not exported.
    pub fn export(&self, mut out: impl Write) -> std::io::Result<()> {
        let header = serde_json::to_string(&ExportHeader {
            schema: CHAIN_SCHEMA.to_string(),
            config: self.config,
        })
        .expect("header serialization cannot fail");
        writeln!(out, "{header}")?;
        for block in &self.blocks {
            let line = serde_json::to_string(block).expect("block serialization cannot fail");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads a chain file back. Purely syntactic: call [`Chain::verify`]
    /// to audit what was read. Bookkeeping is rebuilt from the blocks.
    pub fn import(input: impl BufRead) -> Result<Self, LedgerError> {
        let mut lines = input.lines().enumerate();
        let (_, first) = lines.next().ok_or(LedgerError::BadRecord {
            line: 1,
            reason: "empty chain file".into(),
        })?;
        let first = first.map_err(|e| LedgerError::BadRecord { line: 1, reason: e.to_string() })?;
        let header: ExportHeader =
            serde_json::from_str(&first).map_err(|e| LedgerError::BadRecord {
                line: 1,
                reason: e.to_string(),
            })?;
        if header.schema != CHAIN_SCHEMA {
            return Err(LedgerError::BadRecord {
                line: 1,
                reason: format!("unknown schema {:?}", header.schema),
            });
        }

        let mut blocks = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| LedgerError::BadRecord {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let block: Block = serde_json::from_str(&line).map_err(|e| LedgerError::BadRecord {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            blocks.push(block);
        }
        if blocks.is_empty() {
            return Err(LedgerError::BadRecord { line: 2, reason: "chain has no blocks".into() });
        }

        let mut rewards = BTreeMap::new();
        let mut mined = 0u64;
        for block in blocks.iter().skip(1) {
            if let Some(miner) = block.miner {
                *rewards.entry(miner).or_insert(0.0) += header.config.mining_reward;
                mined += 1;
            }
        }
        let clock = blocks.iter().map(|b| b.timestamp).max().unwrap_or(0);
        Ok(Self {
            blocks,
            config: header.config,
            rewards,
            broadcast_log: u64::from(header.config.miner_count.saturating_sub(1)) * mined,
            attempts_log: Vec::new(),
            clock,
        })
    }
}

const CHAIN_SCHEMA: &str = "chain-v1";

#[derive(Serialize, Deserialize)]
struct ExportHeader {
    schema: String,
    config: ChainConfig,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, StreamDomain};
    use rand::Rng;

    fn test_config(difficulty_bits: u32) -> ChainConfig {
        ChainConfig { difficulty_bits, mining_reward: 10.0, miner_count: 5 }
    }

    fn mining_rng(tag: u64) -> SimRng {
        stream_rng(42, StreamDomain::Mining, tag, 0)
    }

    fn built_chain(blocks: usize, difficulty_bits: u32) -> Chain {
        let mut chain = Chain::init(vec![0.0; 4], test_config(difficulty_bits));
        for i in 0..blocks {
            let weights = vec![i as f64, 1.5, -2.0, 0.25];
            chain
                .mine_block(
                    (i / 3) as u32 + 1,
                    MinerId((i % 5) as u32),
                    McId((i % 3) as u32 + 10 * (i / 3) as u32),
                    weights,
                    &mut mining_rng(i as u64),
                )
                .unwrap();
        }
        chain
    }

    #[test]
    fn genesis_only_chain_verifies() {
        let chain = Chain::init(vec![1.0, -1.0], test_config(8));
        assert_eq!(chain.len(), 1);
        chain.verify().unwrap();
    }

    #[test]
    fn identical_genesis_identical_digest() {
        let a = Chain::init(vec![0.5, 0.25], test_config(8));
        let b = Chain::init(vec![0.5, 0.25], test_config(8));
        assert_eq!(a.tip().hash, b.tip().hash);
    }

    #[test]
    fn upload_validation() {
        let chain = Chain::init(vec![0.0; 3], test_config(0));
        chain.verify_upload(&[1.0, 2.0, 3.0]).unwrap();
        assert!(chain.verify_upload(&[1.0, 2.0]).is_err());
        assert!(chain.verify_upload(&[1.0, f64::NAN, 3.0]).is_err());
        assert!(chain.verify_upload(&[1.0, f64::INFINITY, 3.0]).is_err());
    }

    #[test]
    fn zero_difficulty_accepts_first_nonce() {
        let mut chain = Chain::init(vec![0.0; 2], test_config(0));
        chain
            .mine_block(1, MinerId(0), McId(0), vec![1.0, 2.0], &mut mining_rng(0))
            .unwrap();
        assert_eq!(chain.mining_attempts(), &[1]);
        chain.verify().unwrap();
    }

    #[test]
    fn difficulty_predicate_counts_bits() {
        let mut h = [0u8; 32];
        h[0] = 0;
        h[1] = 0b0000_1111;
        assert!(meets_difficulty(&h, 12));
        assert!(!meets_difficulty(&h, 13));
        assert!(meets_difficulty(&h, 0));
        let all_zero = [0u8; 32];
        assert!(meets_difficulty(&all_zero, 256));
    }

    #[test]
    fn rewards_accrue_per_block() {
        let chain = built_chain(9, 0);
        let expected: f64 = chain.rewards().values().sum();
        assert_eq!(expected, 90.0);
        // Miners 0..4 mined 2, 2, 2, 2, 1 of the nine blocks.
        assert_eq!(chain.rewards()[&MinerId(0)], 20.0);
        assert_eq!(chain.rewards()[&MinerId(4)], 10.0);
    }

    #[test]
    fn broadcasts_count_peer_transmissions() {
        let chain = built_chain(7, 0);
        // 5 miners: each of the 7 mined blocks reaches 4 peers.
        assert_eq!(chain.broadcast_log(), 28);
    }

    #[test]
    fn duplicate_upload_rejected() {
        let mut chain = Chain::init(vec![0.0; 2], test_config(0));
        chain
            .mine_block(1, MinerId(0), McId(7), vec![1.0, 2.0], &mut mining_rng(0))
            .unwrap();
        let err = chain
            .mine_block(1, MinerId(2), McId(7), vec![3.0, 4.0], &mut mining_rng(1))
            .unwrap_err();
        assert_eq!(err, LedgerError::DuplicateUpload { round: 1, mc: McId(7) });
    }

    #[test]
    fn fetch_round_sorts_by_client() {
        let mut chain = Chain::init(vec![0.0; 2], test_config(0));
        for (mc, w) in [(McId(9), 9.0), (McId(1), 1.0), (McId(4), 4.0)] {
            chain
                .mine_block(1, MinerId(0), mc, vec![w, w], &mut mining_rng(w as u64))
                .unwrap();
        }
        let uploads = chain.fetch_round_weights(1, 3).unwrap();
        let ids: Vec<McId> = uploads.iter().map(|(mc, _)| *mc).collect();
        assert_eq!(ids, vec![McId(1), McId(4), McId(9)]);
        assert_eq!(uploads[0].1, vec![1.0, 1.0]);
    }

    #[test]
    fn incomplete_round_reported() {
        let mut chain = Chain::init(vec![0.0; 2], test_config(0));
        chain
            .mine_block(1, MinerId(0), McId(0), vec![1.0, 2.0], &mut mining_rng(0))
            .unwrap();
        assert_eq!(
            chain.fetch_round_weights(1, 2).unwrap_err(),
            LedgerError::IncompleteRound { round: 1, have: 1, want: 2 }
        );
        assert_eq!(
            chain.fetch_round_weights(3, 1).unwrap_err(),
            LedgerError::IncompleteRound { round: 3, have: 0, want: 1 }
        );
    }

    #[test]
    fn weights_survive_the_chain_bit_for_bit() {
        let mut chain = Chain::init(vec![0.0; 3], test_config(4));
        let awkward = vec![0.1 + 0.2, f64::MIN_POSITIVE, -0.0];
        chain
            .mine_block(1, MinerId(0), McId(0), awkward.clone(), &mut mining_rng(3))
            .unwrap();
        let uploads = chain.fetch_round_weights(1, 1).unwrap();
        assert_eq!(uploads[0].1.len(), awkward.len());
        for (a, b) in uploads[0].1.iter().zip(&awkward) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn single_bit_corruption_always_detected() {
        let mut chain = built_chain(12, 4);
        chain.verify().unwrap();
        let mut rng = stream_rng(7, StreamDomain::Mining, 99, 0);
        for _ in 0..200 {
            let height = rng.random_range(0..chain.blocks.len());
            let backup = chain.blocks[height].clone();
            corrupt_one_bit(&mut chain.blocks[height], &mut rng);
            assert!(chain.verify().is_err(), "corruption at height {height} went unnoticed");
            chain.blocks[height] = backup;
            chain.verify().unwrap();
        }
    }

    /// Flips one random bit in one randomly chosen field of `block`.
    pub(super) fn corrupt_one_bit(block: &mut Block, rng: &mut SimRng) {
        match rng.random_range(0..9) {
            0 => block.height ^= 1 << rng.random_range(0..64),
            1 => {
                let byte = rng.random_range(0..32);
                block.prev_hash[byte] ^= 1 << rng.random_range(0..8);
            }
            2 => block.nonce ^= 1 << rng.random_range(0..64),
            3 => block.round ^= 1 << rng.random_range(0..32),
            4 => {
                let id = block.miner.map_or(3, |m| m.0);
                block.miner = Some(MinerId(id ^ (1 << rng.random_range(0..31))));
            }
            5 => {
                let idx = rng.random_range(0..block.payload.len());
                let bit = 1u64 << rng.random_range(0..64);
                block.payload[idx] = f64::from_bits(block.payload[idx].to_bits() ^ bit);
            }
            6 => {
                let byte = rng.random_range(0..32);
                block.payload_digest[byte] ^= 1 << rng.random_range(0..8);
            }
            7 => block.timestamp ^= 1 << rng.random_range(0..64),
            _ => {
                let byte = rng.random_range(0..32);
                block.hash[byte] ^= 1 << rng.random_range(0..8);
            }
        }
    }

    #[test]
    fn reordered_blocks_detected() {
        let mut chain = built_chain(6, 0);
        chain.blocks.swap(2, 4);
        assert!(chain.verify().is_err());
    }

    #[test]
    fn export_import_round_trip() {
        let chain = built_chain(8, 4);
        let mut buffer = Vec::new();
        chain.export(&mut buffer).unwrap();
        let restored = Chain::import(buffer.as_slice()).unwrap();
        restored.verify().unwrap();
        assert_eq!(restored.blocks(), chain.blocks());
        assert_eq!(restored.rewards(), chain.rewards());
        assert_eq!(restored.broadcast_log(), chain.broadcast_log());
        assert_eq!(restored.config(), chain.config());
    }

    #[test]
    fn import_rejects_garbage() {
        assert!(Chain::import(&b"not json\n"[..]).is_err());
        let mut buffer = Vec::new();
        built_chain(2, 0).export(&mut buffer).unwrap();
        let mut text = String::from_utf8(buffer).unwrap();
        text.push_str("{\"broken\": true}\n");
        assert!(Chain::import(text.as_bytes()).is_err());
    }

    #[test]
    fn mining_attempt_counts_are_plausible_at_eight_bits() {
        // Geometric with p = 2^-8: the mean over 40 mines should sit in
        // a loose band around 256. The tight statistical bound lives in
        // the acceptance suite with a larger sample.
        let mut chain = Chain::init(vec![0.0; 2], test_config(8));
        for i in 0..40u32 {
            chain
                .mine_block(i + 1, MinerId(0), McId(0), vec![f64::from(i), 0.0], &mut mining_rng(u64::from(i)))
                .unwrap();
        }
        let mean = chain.mining_attempts().iter().sum::<u64>() as f64 / 40.0;
        assert!(mean > 64.0 && mean < 1024.0, "mean attempts {mean}");
        chain.verify().unwrap();
    }
}
