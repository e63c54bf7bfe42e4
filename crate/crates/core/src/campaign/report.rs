use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CampaignState, CurvePoint, ReductionSummary};
use crate::bandit::PolicyConfig;
use crate::metamorph::StrategyId;
use crate::triage::BugKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BugSummary {
    pub id: usize,
    pub fingerprint: String,
    pub kind: BugKind,
    pub count: u64,
    pub first_round: u64,
    pub arm: StrategyId,
    pub seed: u64,
    pub tokens: Vec<String>,
    pub reproducer: Option<String>,
    pub reduction: Option<ReductionSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: StrategyId,
    pub pulls: u64,
    pub reward_sum: f64,
    pub mean_reward: f64,
    pub bugs: u64,
    pub duplicates: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub policy: String,
    pub rounds: u64,
    pub decisions: u64,
    pub unique_bugs: usize,
    pub duplicates: u64,
    pub observations: u64,
    pub inapplicable_attempts: u64,
    pub tool_skips: u64,
    pub bugs: Vec<BugSummary>,
    pub arms: Vec<ArmReport>,
    /// Unique-bug count after each round that found a new bug.
    pub curve: Vec<CurvePoint>,
}

impl CampaignReport {
    /// Round at which the `n`-th distinct bug appeared.
    pub fn discovery_round(&self, n: usize) -> Option<u64> {
        self.curve.iter().find(|p| p.unique >= n).map(|p| p.round)
    }
}

pub fn report(state: &CampaignState, policy: &PolicyConfig) -> CampaignReport {
    let bugs: Vec<BugSummary> = state
        .bugs
        .iter()
        .map(|b| BugSummary {
            id: b.id,
            fingerprint: b.fingerprint.to_string(),
            kind: b.kind,
            count: b.count,
            first_round: b.first_round,
            arm: b.arm,
            seed: b.seed,
            tokens: b.token_summary.clone(),
            reproducer: b.reproducer.clone(),
            reduction: b.reduction.clone(),
        })
        .collect();
    let arms = StrategyId::ALL
        .iter()
        .map(|&a| {
            let s = &state.arms[a.index()];
            ArmReport {
                arm: a,
                pulls: s.pulls,
                reward_sum: s.reward_sum,
                mean_reward: s.mean_reward(),
                bugs: state.arm_bugs[a.index()],
                duplicates: state.arm_duplicates[a.index()],
            }
        })
        .collect();
    CampaignReport {
        policy: policy.policy.name().to_string(),
        rounds: state.round,
        decisions: state.decisions,
        unique_bugs: bugs.len(),
        duplicates: state.bugs.iter().map(|b| b.count - 1).sum(),
        observations: state.observations,
        inapplicable_attempts: state.inapplicable,
        tool_skips: state.tool_skips,
        bugs,
        arms,
        curve: state.curve.clone(),
    }
}

pub fn summary_text(r: &CampaignReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "policy        {}", r.policy);
    let _ = writeln!(s, "rounds        {}", r.rounds);
    let _ = writeln!(s, "decisions     {}", r.decisions);
    let _ = writeln!(s, "unique bugs   {}", r.unique_bugs);
    let _ = writeln!(s, "duplicates    {}", r.duplicates);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<24} {:>7} {:>10} {:>6} {:>6}",
        "arm", "pulls", "reward", "bugs", "dups"
    );
    for a in &r.arms {
        let _ = writeln!(
            s,
            "{:<24} {:>7} {:>10.3} {:>6} {:>6}",
            a.arm.name(),
            a.pulls,
            a.reward_sum,
            a.bugs,
            a.duplicates
        );
    }
    if !r.bugs.is_empty() {
        let _ = writeln!(s);
        for b in &r.bugs {
            let _ = writeln!(
                s,
                "bug {:>3}  {:<13} round {:>5}  x{:<4} {}  {}",
                b.id,
                format!("{:?}", b.kind).to_lowercase(),
                b.first_round,
                b.count,
                b.fingerprint,
                b.reproducer.as_deref().unwrap_or("-")
            );
        }
    }
    s
}
