//! Differential testing of variants through synthesis adapters.

mod adapter;
mod compare;
pub mod localize;
mod mock;

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapter::{
    load_adapters, run_tool, sha256_hex, write_case, AdapterKind, RunOutcome, ToolAdapter,
};
pub use compare::{compare, diverging_ports, run_set, Comparison, Divergence};
pub use mock::{
    mock_synthesize, MockBug, MockBugProfile, MockRun, CRASH_PASS, CRASH_TERNARY_DEPTH,
    SIGN_EXT_MIN_FILES,
};

use crate::hdl::{self, Design};
use crate::metamorph::MutationRecord;
use crate::refsim::{check_interfaces, SimError, SimTrace, Simulator, StimulusSet};

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("invalid adapter: {0}")]
    InvalidAdapter(String),
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
    #[error("interfaces differ: {0}")]
    InterfaceMismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A seed or variant with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    /// Generator seed or corpus index of the originating seed design.
    pub seed: u64,
    pub design: Design,
    pub lineage: Vec<MutationRecord>,
}

/// Deduplication key of a bug.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fingerprint {
    /// Crash-log cluster.
    Crash { cluster: usize },
    /// Class of a netlist rewrite that reproduces the divergence alone.
    Rewrite { signature: String },
    /// Diverging ports and input class when no single rewrite explains it.
    Ports { ports: Vec<String>, class: String },
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fingerprint::Crash { cluster } => write!(f, "crash:{cluster}"),
            Fingerprint::Rewrite { signature } => write!(f, "rewrite:{signature}"),
            Fingerprint::Ports { ports, class } => write!(f, "ports:{}/{class}", ports.join(",")),
        }
    }
}

impl std::str::FromStr for Fingerprint {
    type Err = String;

    /// Inverse of `Display`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("crash:") {
            let cluster = rest
                .parse()
                .map_err(|_| format!("bad cluster id in `{s}`"))?;
            return Ok(Fingerprint::Crash { cluster });
        }
        if let Some(signature) = s.strip_prefix("rewrite:") {
            return Ok(Fingerprint::Rewrite {
                signature: signature.to_string(),
            });
        }
        if let Some(rest) = s.strip_prefix("ports:") {
            let (ports, class) = rest
                .rsplit_once('/')
                .ok_or_else(|| format!("missing class in `{s}`"))?;
            return Ok(Fingerprint::Ports {
                ports: ports
                    .split(',')
                    .filter(|p| !p.is_empty())
                    .map(String::from)
                    .collect(),
                class: class.to_string(),
            });
        }
        Err(format!("unknown fingerprint `{s}`"))
    }
}

/// Coarse class of the input vector at the diverging cycle: one character
/// per port, `0` for all zeros, `1` for all ones, `x` otherwise.
pub fn stimulus_class(d: &Divergence) -> String {
    d.stimulus.vectors[d.cycle]
        .iter()
        .zip(&d.stimulus.ports)
        .map(|(&v, (_, w))| {
            let ones = if *w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
            match v {
                0 => '0',
                v if v == ones => '1',
                _ => 'x',
            }
        })
        .collect()
}

/// Fingerprints of an inconsistency: one per distinct rewrite class that
/// reproduces the divergence alone, else the port-set fallback.
pub fn inconsistency_fingerprints(
    variant: &Design,
    netlist: &Design,
    divergence: &Divergence,
    expected: &SimTrace,
) -> Vec<Fingerprint> {
    let mut out: BTreeSet<Fingerprint> = BTreeSet::new();
    if let Some(sites) = localize::diff_sites(variant, netlist) {
        for s in localize::reproducing_sites(variant, &sites, &divergence.stimulus, expected) {
            out.insert(Fingerprint::Rewrite {
                signature: s.signature(),
            });
        }
    }
    if out.is_empty() {
        out.insert(Fingerprint::Ports {
            ports: divergence.ports.iter().cloned().collect(),
            class: stimulus_class(divergence),
        });
    }
    out.into_iter().collect()
}

/// One adapter's result on a case.
#[derive(Clone, Debug)]
pub struct ToolReport {
    pub tool: String,
    pub outcome: RunOutcome,
    pub netlist: Option<Design>,
}

#[derive(Clone, Debug)]
pub struct Inconsistency {
    pub divergence: Divergence,
    pub fingerprints: Vec<Fingerprint>,
}

#[derive(Clone, Debug, Default)]
pub struct CaseResult {
    pub reports: Vec<ToolReport>,
    pub inconsistency: Option<Inconsistency>,
    /// Adapters that produced nothing comparable, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl CaseResult {
    pub fn crashes(&self) -> impl Iterator<Item = &ToolReport> {
        self.reports.iter().filter(|r| r.outcome.is_crash())
    }
}

/// Runs every adapter on `case` under `scratch/<tool>/`, co-simulates the
/// returned netlists over `set` and compares them with `reference`.
pub fn check_case(
    case: &TestCase,
    set: &StimulusSet,
    reference: &[SimTrace],
    adapters: &[ToolAdapter],
    scratch: &Path,
) -> Result<CaseResult, DiffError> {
    let mut result = CaseResult::default();
    let mut traces: Vec<(String, Vec<SimTrace>)> = Vec::new();
    for a in adapters {
        let outcome = run_tool(a, case, &scratch.join(&a.name))?;
        let netlist = match &outcome {
            RunOutcome::Success {
                netlist: Some(text),
                ..
            } => match hdl::parse(text) {
                Ok(n) => Some(n),
                Err(e) => {
                    log::warn!("{}: netlist outside the supported subset: {e}", a.name);
                    result
                        .skipped
                        .push((a.name.clone(), "netlist not parseable".into()));
                    None
                }
            },
            RunOutcome::ToolMissing => {
                log::warn!("{}: tool `{}` not found", a.name, a.cmd);
                result.skipped.push((a.name.clone(), "tool missing".into()));
                None
            }
            RunOutcome::Timeout => {
                result.skipped.push((a.name.clone(), "timeout".into()));
                None
            }
            _ => None,
        };
        if let Some(n) = &netlist {
            let traces_for = check_interfaces(&case.design, n)
                .map_err(|e| DiffError::InterfaceMismatch(e.to_string()))
                .and_then(|_| Ok(Simulator::new(n)?))
                .and_then(|sim| run_set(&sim, set));
            match traces_for {
                Ok(t) => traces.push((a.name.clone(), t)),
                Err(e) => {
                    log::warn!("{}: netlist not comparable: {e}", a.name);
                    result.skipped.push((a.name.clone(), e.to_string()));
                }
            }
        }
        result.reports.push(ToolReport {
            tool: a.name.clone(),
            outcome,
            netlist,
        });
    }
    if let Comparison::Inconsistent(divergence) = compare(set, reference, &traces)? {
        let netlist = result
            .reports
            .iter()
            .find(|r| r.tool == divergence.tool)
            .and_then(|r| r.netlist.as_ref())
            .expect("compared tools have netlists");
        let fingerprints = inconsistency_fingerprints(
            &case.design,
            netlist,
            &divergence,
            &reference[divergence.stimulus_index],
        );
        result.inconsistency = Some(Inconsistency {
            divergence,
            fingerprints,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::parse;
    use crate::refsim::DEFAULT_CYCLES;

    fn case(src: &str) -> TestCase {
        TestCase {
            id: "t".into(),
            seed: 0,
            design: parse(src).unwrap(),
            lineage: Vec::new(),
        }
    }

    fn reference(d: &Design) -> (StimulusSet, Vec<SimTrace>) {
        let set = StimulusSet::for_design(d, 10, DEFAULT_CYCLES).unwrap();
        let sim = Simulator::new(d).unwrap();
        let traces = run_set(&sim, &set).unwrap();
        (set, traces)
    }

    #[test]
    fn shift_fold_end_to_end() {
        let c = case(
            "module m(input [2:0] a, output [2:0] y, output b); sub u(.a(a), .y(y)); assign b = a[0]; endmodule\n\
             module sub(input [2:0] a, output [2:0] y); assign y = (a >> 5) ^ a; endmodule",
        );
        let (set, r) = reference(&c.design);
        let dir = tempfile::tempdir().unwrap();
        let adapters = [ToolAdapter::mock(
            "mock",
            MockBugProfile::only(&[MockBug::ShiftConstFold]),
        )];
        let res = check_case(&c, &set, &r, &adapters, dir.path()).unwrap();
        let inc = res.inconsistency.unwrap();
        assert_eq!(inc.divergence.port, "y");
        assert_eq!(
            inc.fingerprints,
            vec![Fingerprint::Rewrite {
                signature: "shr.rhs:const->const".into()
            }]
        );
    }

    #[test]
    fn honest_mock_is_consistent() {
        let c = case("module m(input [2:0] a, output [2:0] y); assign y = (a >> 5) ^ a; endmodule");
        let (set, r) = reference(&c.design);
        let dir = tempfile::tempdir().unwrap();
        let res = check_case(
            &c,
            &set,
            &r,
            &[ToolAdapter::mock("mock", MockBugProfile::all())],
            dir.path(),
        )
        .unwrap();
        assert!(res.inconsistency.is_none());
        assert_eq!(res.crashes().count(), 0);
    }

    #[test]
    fn missing_tool_is_skipped() {
        let c = case("module m(input a, output y); assign y = a; endmodule");
        let (set, r) = reference(&c.design);
        let dir = tempfile::tempdir().unwrap();
        let t = ToolAdapter {
            name: "ghost".into(),
            cmd: "definitely-not-a-real-binary-xyz".into(),
            args: vec!["{input}".into()],
            timeout_s: 5,
            kind: AdapterKind::Synthesizer,
            netlist: None,
            profile: MockBugProfile::empty(),
        };
        let res = check_case(&c, &set, &r, &[t], dir.path()).unwrap();
        assert_eq!(res.reports[0].outcome, RunOutcome::ToolMissing);
        assert_eq!(res.skipped.len(), 1);
    }
}
