use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DiffError;
use crate::refsim::{SimTrace, Simulator, Stimulus, StimulusSet};

/// First disagreement between a tool trace and the reference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub tool: String,
    pub stimulus_index: usize,
    pub stimulus: Stimulus,
    pub cycle: usize,
    pub port: String,
    pub expected: u64,
    pub got: u64,
    /// Every output port that diverges on some stimulus.
    pub ports: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Comparison {
    Consistent,
    Inconsistent(Divergence),
}

impl Comparison {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Comparison::Consistent)
    }
}

pub fn run_set(sim: &Simulator, set: &StimulusSet) -> Result<Vec<SimTrace>, DiffError> {
    set.stimuli
        .iter()
        .map(|s| sim.run(s).map_err(DiffError::Sim))
        .collect()
}

/// Compares tool traces against reference traces over a shared stimulus
/// set. The reported divergence is the first in stimulus, cycle, port,
/// then tool order.
pub fn compare(
    set: &StimulusSet,
    reference: &[SimTrace],
    tools: &[(String, Vec<SimTrace>)],
) -> Result<Comparison, DiffError> {
    for (tool, traces) in tools {
        if traces.len() != reference.len() {
            return Err(DiffError::InterfaceMismatch(format!(
                "{tool}: trace count differs"
            )));
        }
        if let (Some(t), Some(r)) = (traces.first(), reference.first()) {
            if t.ports != r.ports {
                return Err(DiffError::InterfaceMismatch(format!(
                    "{tool}: output ports differ"
                )));
            }
        }
    }
    for (index, want) in reference.iter().enumerate() {
        let mut first: Option<(usize, usize, usize)> = None;
        for (k, (_, traces)) in tools.iter().enumerate() {
            if let Some((cycle, port)) = want.first_divergence(&traces[index]) {
                if first.is_none_or(|(c, p, _)| (cycle, port) < (c, p)) {
                    first = Some((cycle, port, k));
                }
            }
        }
        if let Some((cycle, port, k)) = first {
            let (tool, traces) = &tools[k];
            return Ok(Comparison::Inconsistent(Divergence {
                tool: tool.clone(),
                stimulus_index: index,
                stimulus: set.stimuli[index].clone(),
                cycle,
                port: want.ports[port].0.clone(),
                expected: want.cycles[cycle][port],
                got: traces[index].cycles[cycle][port],
                ports: diverging_ports(reference, traces),
            }));
        }
    }
    Ok(Comparison::Consistent)
}

pub fn diverging_ports(reference: &[SimTrace], traces: &[SimTrace]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (r, t) in reference.iter().zip(traces) {
        for (rc, tc) in r.cycles.iter().zip(&t.cycles) {
            for (i, (a, b)) in rc.iter().zip(tc).enumerate() {
                if a != b {
                    out.insert(r.ports[i].0.clone());
                }
            }
        }
    }
    out
}
