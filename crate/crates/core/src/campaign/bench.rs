//! Same corpus, mock profile and round budget under several policies.

use serde::{Deserialize, Serialize};

use super::{run, CampaignConfig, CampaignError};
use crate::bandit::{PolicyConfig, PolicyKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub policy: String,
    pub seed: u64,
    /// Round at which `target` distinct bugs were known, or `rounds + 1`
    /// when the budget ran out first.
    pub discovery_round: u64,
    pub unique_bugs: usize,
    pub found_all: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rounds: u64,
    pub target: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn times(&self, policy: &str) -> Vec<u64> {
        self.rows
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r| r.discovery_round)
            .collect()
    }

    pub fn mean(&self, policy: &str) -> f64 {
        let t = self.times(policy);
        t.iter().sum::<u64>() as f64 / t.len().max(1) as f64
    }
}

/// Runs `base` once per (policy, seed) without reduction, stopping at
/// `target` distinct bugs. Outputs go to `base.output/<policy>-<seed>/`.
pub fn bench_policies(
    base: &CampaignConfig,
    policies: &[PolicyKind],
    seeds: &[u64],
    target: usize,
) -> Result<BenchReport, CampaignError> {
    let mut rows = Vec::new();
    for &policy in policies {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.policy = PolicyConfig {
                policy,
                ..base.policy
            };
            cfg.seed = seed;
            cfg.minimize = false;
            cfg.stop_when_unique_bugs = Some(target);
            cfg.output = base.output.join(format!("{}-{seed}", policy.name()));
            let r = run(cfg)?;
            let found = r.discovery_round(target);
            rows.push(BenchRow {
                policy: policy.name().to_string(),
                seed,
                discovery_round: found.unwrap_or(base.rounds + 1),
                unique_bugs: r.unique_bugs,
                found_all: found.is_some(),
            });
        }
    }
    Ok(BenchReport {
        rounds: base.rounds,
        target,
        rows,
    })
}
