//! In-process stand-in for a synthesis tool with switchable miscompiles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::adapter::{sha256_hex, RunOutcome};
use crate::hdl::{expr_width, print, AstModule, BinaryOp, CastKind, Design, Expr};

/// Ternary nesting that crashes the mock.
pub const CRASH_TERNARY_DEPTH: usize = 5;
/// Source files a design needs before sign extension of narrowed shifts
/// is miscompiled.
pub const SIGN_EXT_MIN_FILES: usize = 4;
pub const CRASH_PASS: &str = "opt_ternary_balance";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockBug {
    /// `$signed(x >> k)` inside a sidecar module of a design with at least
    /// [`SIGN_EXT_MIN_FILES`] files folds to zero.
    ZeroWidthSignExt,
    /// Any ternary nested [`CRASH_TERNARY_DEPTH`] deep aborts synthesis.
    DeepTernaryCrash,
    /// In submodules, `x >> k` with `k >= width(x)` folds to `x >> (k % width(x))`.
    ShiftConstFold,
}

impl MockBug {
    pub const ALL: [MockBug; 3] = [
        MockBug::ZeroWidthSignExt,
        MockBug::DeepTernaryCrash,
        MockBug::ShiftConstFold,
    ];
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MockBugProfile(pub BTreeSet<MockBug>);

impl MockBugProfile {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        Self(MockBug::ALL.into_iter().collect())
    }

    pub fn only(bugs: &[MockBug]) -> Self {
        Self(bugs.iter().copied().collect())
    }

    pub fn has(&self, b: MockBug) -> bool {
        self.0.contains(&b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MockRun {
    pub outcome: RunOutcome,
    pub netlist: Option<Design>,
}

pub fn mock_synthesize(d: &Design, profile: &MockBugProfile) -> MockRun {
    let source = print(d);
    let digest = sha256_hex(source.as_bytes());
    if profile.has(MockBug::DeepTernaryCrash) && d.max_ternary_depth() >= CRASH_TERNARY_DEPTH {
        return MockRun {
            outcome: RunOutcome::Crash {
                status: Some(134),
                log: crash_log(d, &digest),
            },
            netlist: None,
        };
    }
    let mut netlist = d.clone();
    let many_files = d.file_count() >= SIGN_EXT_MIN_FILES;
    for m in &mut netlist.modules {
        let is_top = m.name == d.top;
        let sign_ext = profile.has(MockBug::ZeroWidthSignExt) && many_files && m.unit.is_some();
        let shift = profile.has(MockBug::ShiftConstFold) && !is_top;
        if sign_ext || shift {
            rewrite_module(m, sign_ext, shift);
        }
    }
    let text = print(&netlist);
    let log = format!(
        "mock synthesis of `{}`: {} module(s), {} statement(s)\nnetlist digest {}\n",
        d.top,
        netlist.modules.len(),
        netlist.statement_count(),
        &digest[..16]
    );
    MockRun {
        outcome: RunOutcome::Success {
            digest: sha256_hex(text.as_bytes()),
            log,
            netlist: Some(text),
        },
        netlist: Some(netlist),
    }
}

fn rewrite_module(m: &mut AstModule, sign_ext: bool, shift: bool) {
    let widths: Vec<(String, u32)> = m
        .ports
        .iter()
        .map(|p| (p.name.clone(), p.width))
        .chain(m.nets.iter().map(|n| (n.name.clone(), n.width)))
        .collect();
    let lookup = |n: &str| widths.iter().find(|(s, _)| s == n).map(|(_, w)| *w);
    for item in &mut m.items {
        item.for_each_expr_mut(&mut |e| rewrite(e, &lookup, sign_ext, shift));
    }
}

fn rewrite(e: &mut Expr, lookup: &dyn Fn(&str) -> Option<u32>, sign_ext: bool, shift: bool) {
    if sign_ext {
        if let Expr::Cast(CastKind::Signed, inner) = e {
            if let Expr::Binary(BinaryOp::Shr, x, k) = &**inner {
                if matches!(**k, Expr::Const { .. }) {
                    *e = Expr::constant(expr_width(x, lookup), 0);
                    return;
                }
            }
        }
    }
    if shift {
        if let Expr::Binary(BinaryOp::Shr, x, k) = e {
            if let Expr::Const { width, value } = **k {
                let w = u64::from(expr_width(x, lookup));
                if value >= w {
                    **k = Expr::constant(width, value % w);
                }
            }
        }
    }
    for c in e.children_mut() {
        rewrite(c, lookup, sign_ext, shift);
    }
}

/// Abort log: stable text with per-design addresses, counters and paths.
fn crash_log(d: &Design, digest: &str) -> String {
    let word = |i: usize| u64::from_str_radix(&digest[i * 8..i * 8 + 8], 16).expect("hex digest");
    let (a, b, c, n) = (word(0), word(1), word(2), word(3));
    format!(
        "-- Running pass `{CRASH_PASS}` on module {top} --\n\
         reading /tmp/synth_{n}/src/{top}.v\n\
         balancing {nodes} expression nodes, max nesting {depth}\n\
         ERROR: assertion `depth < {CRASH_TERNARY_DEPTH}` failed in {CRASH_PASS}::rebalance_chain() \
         at passes/opt/{CRASH_PASS}.cc:{line}\n\
         Segmentation fault (signal 11) at address 0x{a:08x}\n\
         backtrace:\n\
         #0 0x{a:08x} in {CRASH_PASS}::rebalance_chain\n\
         #1 0x{b:08x} in {CRASH_PASS}::execute\n\
         #2 0x{c:08x} in pass_manager::run_pass\n",
        top = d.top,
        nodes = d.node_count(),
        depth = d.max_ternary_depth(),
        line = 200 + n % 400,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::parse;
    use crate::refsim::exhaustive_equiv;

    #[test]
    fn empty_profile_is_identity() {
        let d = parse(
            "module m(input [2:0] a, output [2:0] y); sub u(.a(a), .y(y)); endmodule\n\
             module sub(input [2:0] a, output [2:0] y); assign y = (a >> 32'd7) ^ a; endmodule",
        )
        .unwrap();
        let run = mock_synthesize(&d, &MockBugProfile::empty());
        assert_eq!(run.netlist.as_ref(), Some(&d));
        assert!(exhaustive_equiv(&d, &run.netlist.unwrap(), 10, 2)
            .unwrap()
            .is_equivalent());
    }

    #[test]
    fn shift_fold_only_below_top() {
        let src = "module m(input [2:0] a, output [2:0] y, output [2:0] z); \
                   sub u(.a(a), .y(y)); assign z = a >> 32'd3; endmodule\n\
                   module sub(input [2:0] a, output [2:0] y); assign y = a >> 32'd4; endmodule";
        let d = parse(src).unwrap();
        let run = mock_synthesize(&d, &MockBugProfile::only(&[MockBug::ShiftConstFold]));
        let n = run.netlist.unwrap();
        assert_eq!(n.modules[0], d.modules[0]);
        assert!(print(&n).contains("y = a >> 1;"));
        assert!(!exhaustive_equiv(&d, &n, 10, 1).unwrap().is_equivalent());
    }

    #[test]
    fn crash_log_is_stable() {
        let d = parse(
            "module m(input a, input b, output y); \
             assign y = a ? (b ? (a ? (b ? (a ? b : a) : a) : b) : a) : b; endmodule",
        )
        .unwrap();
        let p = MockBugProfile::only(&[MockBug::DeepTernaryCrash]);
        let first = mock_synthesize(&d, &p);
        assert!(first.outcome.is_crash());
        assert!(first.outcome.log().contains(CRASH_PASS));
        assert_eq!(first, mock_synthesize(&d, &p));
        assert!(!mock_synthesize(&d, &MockBugProfile::empty())
            .outcome
            .is_crash());
    }
}
