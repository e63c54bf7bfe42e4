//! Semantics-preserving transformations of a design.
//!
//! Each strategy returns a variant whose top-level outputs agree with the
//! original on every input sequence, together with a record that replays it.

mod dead;
mod extract;
mod guard;
mod payload;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hdl::{validate, Design, HdlError};

pub use dead::{dead_region_insert, dead_region_insert_with, DeadRegionOptions};
pub use extract::{model_transfer, regions, subsystem_promote, Region, MAX_CUT};
pub use guard::{guarded_branch_insert, guarded_branch_insert_with, GuardOptions, Tautology};
pub use payload::DEEP_TERNARY;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    DeadRegionInsert = 0,
    GuardedBranchInsert = 1,
    SubsystemPromote = 2,
    ModelTransfer = 3,
}

impl StrategyId {
    pub const ALL: [StrategyId; 4] = [
        StrategyId::DeadRegionInsert,
        StrategyId::GuardedBranchInsert,
        StrategyId::SubsystemPromote,
        StrategyId::ModelTransfer,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::DeadRegionInsert => "dead_region_insert",
            StrategyId::GuardedBranchInsert => "guarded_branch_insert",
            StrategyId::SubsystemPromote => "subsystem_promote",
            StrategyId::ModelTransfer => "model_transfer",
        }
    }
}

impl std::fmt::Display for StrategyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Replayable description of one strategy application.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub strategy: StrategyId,
    /// Path of the mutated location, e.g. `top.items[3].body[0]`.
    pub site: String,
    pub rng_seed: u64,
    pub payload_summary: String,
}

/// A module emitted into its own source file by [`model_transfer`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarFile {
    pub path: String,
    pub module: String,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum MetamorphError {
    #[error("no insertion site in module `{0}`")]
    NoInsertionSite(String),
    #[error("no wrappable statement region in module `{0}`")]
    NoWrappableRegion(String),
    #[error("no extractable region in module `{0}`")]
    NoExtractableRegion(String),
    #[error("strategy {0} is not applicable")]
    StrategyInapplicable(StrategyId),
    #[error("variant failed validation (framework bug): {0}")]
    InvalidVariant(HdlError),
}

impl MetamorphError {
    /// The strategy cannot act on this design; the caller should pick another.
    pub fn is_inapplicable(&self) -> bool {
        !matches!(self, MetamorphError::InvalidVariant(_))
    }
}

pub(crate) fn strategy_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Applies one strategy and revalidates the result.
pub fn apply(
    d: &Design,
    s: StrategyId,
    rng_seed: u64,
) -> Result<(Design, MutationRecord), MetamorphError> {
    let (variant, record) = match s {
        StrategyId::DeadRegionInsert => dead_region_insert(d, rng_seed)?,
        StrategyId::GuardedBranchInsert => guarded_branch_insert(d, rng_seed)?,
        StrategyId::SubsystemPromote => subsystem_promote(d, rng_seed)?,
        StrategyId::ModelTransfer => {
            let (v, r, _) = model_transfer(d, rng_seed)?;
            (v, r)
        }
    };
    validate(&variant).map_err(MetamorphError::InvalidVariant)?;
    Ok((variant, record))
}

/// Applies a sequence of strategies, one seed per link.
pub fn apply_chain(
    d: &Design,
    links: &[(StrategyId, u64)],
) -> Result<(Design, Vec<MutationRecord>), MetamorphError> {
    let mut current = d.clone();
    let mut records = Vec::with_capacity(links.len());
    for &(s, seed) in links {
        let (next, record) = apply(&current, s, seed)?;
        current = next;
        records.push(record);
    }
    Ok((current, records))
}

/// Re-applies recorded mutations to the seed design.
pub fn replay(seed: &Design, records: &[MutationRecord]) -> Result<Design, MetamorphError> {
    let links: Vec<(StrategyId, u64)> = records.iter().map(|r| (r.strategy, r.rng_seed)).collect();
    apply_chain(seed, &links).map(|(d, _)| d)
}

/// Signals of `d.top` that are top-level clocks.
pub(crate) fn clocks(d: &Design) -> Vec<String> {
    d.top_module().clock_ports(d)
}
