use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metamorph::{MutationRecord, StrategyId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugKind {
    Crash,
    Inconsistency,
}

/// One line of the bug registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BugRecord {
    pub id: u64,
    pub kind: BugKind,
    /// Deduplication fingerprint; records sharing it are the same bug.
    pub cluster: String,
    /// Repetition count of the cluster after this observation.
    pub c_i: u64,
    pub arm: StrategyId,
    pub round: u64,
    pub seed: u64,
    pub lineage: Vec<MutationRecord>,
    pub log_digest: Option<String>,
    pub reproducer_path: Option<String>,
}

pub fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(value).map_err(io::Error::other)?;
    writeln!(f, "{line}")
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> io::Result<Vec<T>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(io::Error::other)?);
    }
    Ok(out)
}
