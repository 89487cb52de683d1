//! Client/miner association by round-based deferred acceptance.
//!
//! Preferences on both sides are induced by [`PairEconomics`]: a pair is
//! admissible when it meets the deadline and leaves the miner positive
//! utility. Each round, every still-open client approaches the best miner
//! on its (per-round rebuilt) list; every miner admits exactly one of the
//! clients waiting on it and turns the rest away until a later round.
//! Admissions accumulate — a miner may end up serving many clients — and
//! the process stops on the first round without a rejection.
//!
//! Under the [`Orientation::SelfUtility`] ranking the outcome is stable:
//! no matched client admissibly prefers another miner over its own
//! ([`find_blocking_pairs`] returns nothing). The
//! [`Orientation::AsWritten`] ranking swaps whose utility each side sorts
//! by and is kept for fidelity experiments; it carries no stability claim.

use crate::rng::SimRng;
use crate::utility::{McId, MedicalCenterSpec, MinerId, PairEconomics, SystemParams, UtilityError};
use crate::utility::{pair_economics, ChannelSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Which utility each side ranks candidates by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Clients rank by their own utility, miners by theirs. Stable.
    #[default]
    SelfUtility,
    /// Clients rank by miner utility, miners by client utility; the
    /// literal reading of the source procedure. No stability claim.
    AsWritten,
}

#[derive(Debug, Error, PartialEq)]
pub enum MatchingError {
    #[error("no admissible client/miner pair in the instance")]
    NoFeasiblePairs,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Economics(#[from] UtilityError),
}

/// Economics of every candidate pair, indexed `[client][miner]`.
#[derive(Debug, Clone)]
pub struct PairTable {
    mc_ids: Vec<McId>,
    miner_ids: Vec<MinerId>,
    econ: Vec<Vec<PairEconomics>>,
}

impl PairTable {
    /// Evaluates the economics of all pairs. `channels[i][j]` is the link
    /// between client `i` and miner `j`; `assoc_count` is the assumed
    /// per-miner client count while no association exists yet
    /// (conventionally 1). The reward split is taken against the total
    /// data held by `mcs`.
    pub fn build(
        mcs: &[MedicalCenterSpec],
        miner_ids: &[MinerId],
        channels: &[Vec<ChannelSpec>],
        sys: &SystemParams,
        assoc_count: u32,
    ) -> Result<Self, MatchingError> {
        if channels.len() != mcs.len() {
            return Err(MatchingError::ShapeMismatch {
                expected: mcs.len(),
                got: channels.len(),
            });
        }
        let total_data: f64 = mcs.iter().map(|m| f64::from(m.data_size)).sum();
        let mut econ = Vec::with_capacity(mcs.len());
        for (mc, row) in mcs.iter().zip(channels) {
            if row.len() != miner_ids.len() {
                return Err(MatchingError::ShapeMismatch {
                    expected: miner_ids.len(),
                    got: row.len(),
                });
            }
            let mut econ_row = Vec::with_capacity(row.len());
            for chan in row {
                econ_row.push(pair_economics(mc, chan, sys, assoc_count, total_data)?);
            }
            econ.push(econ_row);
        }
        Ok(Self {
            mc_ids: mcs.iter().map(|m| m.id).collect(),
            miner_ids: miner_ids.to_vec(),
            econ,
        })
    }

    /// Builds a table from precomputed economics (tests, rescaling).
    pub fn from_parts(
        mc_ids: Vec<McId>,
        miner_ids: Vec<MinerId>,
        econ: Vec<Vec<PairEconomics>>,
    ) -> Result<Self, MatchingError> {
        if econ.len() != mc_ids.len() {
            return Err(MatchingError::ShapeMismatch {
                expected: mc_ids.len(),
                got: econ.len(),
            });
        }
        for row in &econ {
            if row.len() != miner_ids.len() {
                return Err(MatchingError::ShapeMismatch {
                    expected: miner_ids.len(),
                    got: row.len(),
                });
            }
        }
        Ok(Self { mc_ids, miner_ids, econ })
    }

    pub fn mc_count(&self) -> usize {
        self.mc_ids.len()
    }

    pub fn miner_count(&self) -> usize {
        self.miner_ids.len()
    }

    pub fn mc_ids(&self) -> &[McId] {
        &self.mc_ids
    }

    pub fn miner_ids(&self) -> &[MinerId] {
        &self.miner_ids
    }

    pub fn econ(&self, mc_idx: usize, miner_idx: usize) -> &PairEconomics {
        &self.econ[mc_idx][miner_idx]
    }

    /// Deadline met and positive miner utility — the pair may associate.
    pub fn pair_admissible(&self, mc_idx: usize, miner_idx: usize) -> bool {
        let e = &self.econ[mc_idx][miner_idx];
        e.feasible && e.miner_utility > 0.0
    }
}

/// Both sides' candidate lists, most preferred first, admissible pairs
/// only. Entries are indices into the originating table.
#[derive(Debug, Clone)]
pub struct PreferenceTables {
    /// Miners each client would serve, in descending preference.
    pub mc_prefs: Vec<Vec<usize>>,
    /// Clients each miner would admit, in descending preference.
    pub miner_prefs: Vec<Vec<usize>>,
    /// `miner_rank[j][i]`: position of client `i` in miner `j`'s list
    /// (`u32::MAX` when inadmissible).
    miner_rank: Vec<Vec<u32>>,
}

impl PreferenceTables {
    fn miner_rank_of(&self, miner_idx: usize, mc_idx: usize) -> u32 {
        self.miner_rank[miner_idx][mc_idx]
    }
}

/// Sorts both sides' admissible candidates by the orientation's utility,
/// ties broken by ascending id. Errors when not a single pair is
/// admissible.
pub fn build_preferences(
    table: &PairTable,
    orientation: Orientation,
) -> Result<PreferenceTables, MatchingError> {
    let n = table.mc_count();
    let s = table.miner_count();

    // Which utility a client (resp. miner) sorts candidates by.
    let mc_key = |e: &PairEconomics| match orientation {
        Orientation::SelfUtility => e.mc_utility,
        Orientation::AsWritten => e.miner_utility,
    };
    let miner_key = |e: &PairEconomics| match orientation {
        Orientation::SelfUtility => e.miner_utility,
        Orientation::AsWritten => e.mc_utility,
    };

    let mut mc_prefs = Vec::with_capacity(n);
    for i in 0..n {
        let mut cands: Vec<usize> = (0..s).filter(|&j| table.pair_admissible(i, j)).collect();
        cands.sort_by(|&a, &b| {
            mc_key(table.econ(i, b))
                .partial_cmp(&mc_key(table.econ(i, a)))
                .expect("pair utilities must be finite")
                .then(table.miner_ids[a].cmp(&table.miner_ids[b]))
        });
        mc_prefs.push(cands);
    }

    let mut miner_prefs = Vec::with_capacity(s);
    let mut miner_rank = Vec::with_capacity(s);
    for j in 0..s {
        let mut cands: Vec<usize> = (0..n).filter(|&i| table.pair_admissible(i, j)).collect();
        cands.sort_by(|&a, &b| {
            miner_key(table.econ(b, j))
                .partial_cmp(&miner_key(table.econ(a, j)))
                .expect("pair utilities must be finite")
                .then(table.mc_ids[a].cmp(&table.mc_ids[b]))
        });
        let mut rank = vec![u32::MAX; n];
        for (pos, &i) in cands.iter().enumerate() {
            rank[i] = pos as u32;
        }
        miner_prefs.push(cands);
        miner_rank.push(rank);
    }

    if mc_prefs.iter().all(|p| p.is_empty()) {
        return Err(MatchingError::NoFeasiblePairs);
    }
    Ok(PreferenceTables { mc_prefs, miner_prefs, miner_rank })
}

/// Work done by one deferred-acceptance run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityCounters {
    /// Propose/admit rounds until quiescence.
    pub rounds: u64,
    /// Individual client-to-miner approaches.
    pub proposals: u64,
    /// Preference-rank comparisons while miners picked admits.
    pub comparisons: u64,
}

/// The association produced by a run: at most one miner per client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    mc_ids: Vec<McId>,
    miner_ids: Vec<MinerId>,
    assignment: Vec<Option<usize>>,
}

impl AssociationResult {
    /// Wraps a raw assignment (tests, baselines). `assignment[i]` is an
    /// index into `miner_ids` or `None` for an unmatched client.
    pub fn from_assignment(
        mc_ids: Vec<McId>,
        miner_ids: Vec<MinerId>,
        assignment: Vec<Option<usize>>,
    ) -> Result<Self, MatchingError> {
        if assignment.len() != mc_ids.len() {
            return Err(MatchingError::ShapeMismatch {
                expected: mc_ids.len(),
                got: assignment.len(),
            });
        }
        if let Some(bad) = assignment.iter().flatten().find(|&&j| j >= miner_ids.len()) {
            return Err(MatchingError::ShapeMismatch {
                expected: miner_ids.len(),
                got: *bad,
            });
        }
        Ok(Self { mc_ids, miner_ids, assignment })
    }

    pub fn miner_for(&self, mc: McId) -> Option<MinerId> {
        let idx = self.mc_ids.iter().position(|&m| m == mc)?;
        self.assignment[idx].map(|j| self.miner_ids[j])
    }

    /// Matched pairs in ascending client-id order.
    pub fn matched_pairs(&self) -> Vec<(McId, MinerId)> {
        let mut pairs: Vec<(McId, MinerId)> = self
            .assignment
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (self.mc_ids[i], self.miner_ids[j])))
            .collect();
        pairs.sort();
        pairs
    }

    /// Clients that found a miner, ascending.
    pub fn participants(&self) -> Vec<McId> {
        let mut ids: Vec<McId> = self
            .assignment
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|_| self.mc_ids[i]))
            .collect();
        ids.sort();
        ids
    }

    pub fn matched_len(&self) -> usize {
        self.assignment.iter().flatten().count()
    }

    /// Clients admitted per miner; miners serving nobody report 0.
    pub fn per_miner_load(&self) -> BTreeMap<MinerId, u32> {
        let mut loads: BTreeMap<MinerId, u32> = self.miner_ids.iter().map(|&m| (m, 0)).collect();
        for j in self.assignment.iter().flatten() {
            *loads.get_mut(&self.miner_ids[*j]).unwrap() += 1;
        }
        loads
    }

    /// Raw table-index view of the assignment.
    pub fn assignment_indices(&self) -> &[Option<usize>] {
        &self.assignment
    }
}

/// Runs deferred acceptance to quiescence.
///
/// Candidate lists are rebuilt from the (static) economics each round, so
/// a client turned away keeps approaching its top remaining choice until
/// some round admits it. Termination: every round with any proposal
/// admits at least one client, so at most `mc_count` rounds run.
pub fn run_mma(table: &PairTable, prefs: &PreferenceTables) -> (AssociationResult, ComplexityCounters) {
    let n = table.mc_count();
    let s = table.miner_count();
    let mut counters = ComplexityCounters::default();
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    // Clients still seeking a miner, ascending id order.
    let mut open: Vec<usize> = (0..n).filter(|&i| !prefs.mc_prefs[i].is_empty()).collect();

    while !open.is_empty() {
        counters.rounds += 1;
        let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); s];
        for &i in &open {
            waiting[prefs.mc_prefs[i][0]].push(i);
            counters.proposals += 1;
        }

        let mut any_rejection = false;
        for (j, queue) in waiting.iter().enumerate() {
            let Some((&first, rest)) = queue.split_first() else { continue };
            let mut admitted = first;
            for &cand in rest {
                counters.comparisons += 1;
                if prefs.miner_rank_of(j, cand) < prefs.miner_rank_of(j, admitted) {
                    admitted = cand;
                }
            }
            assignment[admitted] = Some(j);
            if queue.len() > 1 {
                any_rejection = true;
            }
        }

        open.retain(|&i| assignment[i].is_none());
        if !any_rejection {
            break;
        }
    }

    let result = AssociationResult {
        mc_ids: table.mc_ids.clone(),
        miner_ids: table.miner_ids.clone(),
        assignment,
    };
    (result, counters)
}

/// Pairs that would break the association: a matched client and an
/// admissible other miner it strictly prefers (by its own utility).
/// Sorted ascending. Empty output means the association is stable.
pub fn find_blocking_pairs(table: &PairTable, result: &AssociationResult) -> Vec<(McId, MinerId)> {
    let mut blocking = Vec::new();
    for (i, assigned) in result.assignment.iter().enumerate() {
        let Some(j_star) = *assigned else { continue };
        let current = table.econ(i, j_star).mc_utility;
        for j in 0..table.miner_count() {
            if j != j_star
                && table.pair_admissible(i, j)
                && table.econ(i, j).mc_utility > current
            {
                blocking.push((table.mc_ids[i], table.miner_ids[j]));
            }
        }
    }
    blocking.sort();
    blocking
}

/// Sum of both sides' utilities over the matched pairs, as tabled.
pub fn association_utility(table: &PairTable, result: &AssociationResult) -> f64 {
    result
        .assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| table.econ(i, j)))
        .map(|e| e.miner_utility + e.mc_utility)
        .sum()
}

/// Baseline that sends each client to a uniformly random admissible
/// miner (or leaves it unmatched when none exists).
pub fn random_association(table: &PairTable, rng: &mut SimRng) -> AssociationResult {
    let n = table.mc_count();
    let s = table.miner_count();
    let mut assignment = vec![None; n];
    for (i, slot) in assignment.iter_mut().enumerate() {
        let admissible: Vec<usize> = (0..s).filter(|&j| table.pair_admissible(i, j)).collect();
        if !admissible.is_empty() {
            *slot = Some(admissible[rng.random_range(0..admissible.len())]);
        }
    }
    AssociationResult {
        mc_ids: table.mc_ids.clone(),
        miner_ids: table.miner_ids.clone(),
        assignment,
    }
}
