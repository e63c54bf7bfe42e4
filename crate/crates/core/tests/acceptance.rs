//! One PASS/FAIL/SKIP line per acceptance criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{
    brute_force_minima, determinism_mismatch, fails, family_a, family_b, linucb_oracle_mismatch,
    mock_config, planted, surviving_items,
};
use metahunt::bandit::{adjust, ArmState, ContextVec, PolicyConfig, PolicyKind};
use metahunt::campaign::{bench_policies, run, CampaignConfig};
use metahunt::difftest::MockBugProfile;
use metahunt::hdl::{gen_seed, Design, SizeProfile};
use metahunt::metamorph::{apply, StrategyId};
use metahunt::reducer::reduce;
use metahunt::refsim::exhaustive_equiv;
use metahunt::triage::{cosine, featurize, frequency, ClusterRegistry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, detail: String) -> Verdict {
    if cond {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

/// 100 designs per strategy where the strategy applies; every variant must
/// match its seed under exhaustive co-simulation.
fn soundness() -> Verdict {
    let start = Instant::now();
    let (mut passed, mut total, mut skipped) = (0, 0, 0);
    let mut first_bad = None;
    for s in StrategyId::ALL {
        let mut done = 0;
        let mut seed = 0u64;
        while done < 100 {
            let d = gen_seed(seed, SizeProfile::Small);
            seed += 1;
            let v = match apply(&d, s, seed * 31 + 7) {
                Ok((v, _)) => v,
                Err(e) if e.is_inapplicable() => {
                    skipped += 1;
                    continue;
                }
                Err(e) => {
                    first_bad.get_or_insert(format!("{s} seed {}: {e}", seed - 1));
                    done += 1;
                    total += 1;
                    continue;
                }
            };
            done += 1;
            total += 1;
            match exhaustive_equiv(&d, &v, 10, 8) {
                Ok(r) if r.is_equivalent() => passed += 1,
                other => {
                    first_bad.get_or_insert(format!("{s} seed {}: {other:?}", seed - 1));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail =
        format!("{passed}/{total} equivalent in {secs:.1}s ({skipped} inapplicable seeds skipped)");
    if let Some(b) = first_bad {
        detail.push_str(&format!("; first failure {b}"));
    }
    check(passed == 400 && total == 400 && secs < 120.0, detail)
}

fn linucb_oracle() -> Verdict {
    let mismatch = linucb_oracle_mismatch(1000);
    let x = ContextVec([1.0, 0.0, 0.0, 0.0, 0.7, 0.2]);
    let u = ArmState::default()
        .ucb(&x, &PolicyConfig::default(), 0.2)
        .unwrap_or(f64::NAN);
    let adj = adjust(1.0, 0.2, 0.5);
    let worked = (u - 1.53f64.sqrt()).abs() <= 1e-9 && (adj - (-0.1f64).exp()).abs() <= 1e-9;
    check(
        mismatch.is_none() && worked,
        format!(
            "1000 sequences {}; fresh UCB {u:.12} (want {:.12}); adjust {adj:.12}",
            mismatch.as_deref().unwrap_or("match"),
            1.53f64.sqrt()
        ),
    )
}

fn ablation() -> Verdict {
    let root = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let base = CampaignConfig {
        rounds: 2000,
        mock: Some(MockBugProfile::all()),
        output: root.path().to_path_buf(),
        ..Default::default()
    };
    let policies = [
        PolicyKind::Linucb,
        PolicyKind::Random,
        PolicyKind::EpsilonGreedy { epsilon: 0.1 },
    ];
    let seeds: Vec<u64> = (0..10).collect();
    let b = match bench_policies(&base, &policies, &seeds, 3) {
        Ok(b) => b,
        Err(e) => return Fail(e.to_string()),
    };
    let (lin, rnd) = (b.times("linucb"), b.times("random"));
    let wins = lin.iter().zip(&rnd).filter(|(l, r)| l < r).count();
    let (ml, mr, me) = (b.mean("linucb"), b.mean("random"), b.mean("epsilon"));
    check(
        wins >= 9 && ml <= me,
        format!("LinUCB faster than random in {wins}/10 seeds; mean rounds to 3 bugs: linucb {ml:.1}, random {mr:.1}, epsilon {me:.1}"),
    )
}

fn triage() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // Masking invariance.
    let mut invariant = true;
    for _ in 0..200 {
        let l1 = format!(
            "fold failed at 0x{:x} line {} in /tmp/r{}/top.v",
            rng.random::<u64>(),
            rng.random::<u32>(),
            rng.random::<u16>()
        );
        let l2 = format!(
            "fold failed at 0x{:x} line {} in /tmp/r{}/top.v",
            rng.random::<u64>(),
            rng.random::<u32>(),
            rng.random::<u16>()
        );
        let (Ok(f1), Ok(f2)) = (featurize(&l1), featurize(&l2)) else {
            invariant = false;
            break;
        };
        invariant &= f1.vector == f2.vector;
    }
    // Two families, two pure clusters.
    let mut reg = ClusterRegistry::default();
    let mut labels = [
        std::collections::BTreeSet::new(),
        std::collections::BTreeSet::new(),
    ];
    for i in 0..200u64 {
        let fam = rng.random_range(0..2usize);
        let log = if fam == 0 {
            family_a(&mut rng)
        } else {
            family_b(&mut rng)
        };
        match featurize(&log) {
            Ok(f) => {
                labels[fam].insert(reg.assign_cluster(&f, i).id());
            }
            Err(_) => return Fail("featurize rejected a family log".into()),
        }
    }
    let pure =
        reg.len() == 2 && labels[0].len() == 1 && labels[1].len() == 1 && labels[0] != labels[1];
    let disjoint = match (
        featurize("alpha beta gamma delta"),
        featurize("zulu yankee xray whiskey"),
    ) {
        (Ok(a), Ok(b)) => cosine(&a.vector, &b.vector).is_ok_and(|c| c <= 0.1),
        _ => false,
    };
    let f = frequency(&[2], 10);
    check(
        invariant && pure && disjoint && f == 0.2,
        format!("masking invariant {invariant}; clusters {} pure {pure}; disjoint logs far {disjoint}; f(2,10) = {f}", reg.len()),
    )
}

fn reducer() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let mut agree = 0;
    let mut minimal = 0;
    for _ in 0..50 {
        let (d, marked) = planted(&mut rng, 1);
        let Ok(r) = reduce(&d, &mut |x: &Design| fails(x, 1)) else {
            continue;
        };
        let minima = brute_force_minima(&d, 1);
        if minima == vec![marked.clone()] && surviving_items(&d, &r.design) == marked {
            agree += 1;
        }
        let items = &r.design.modules[0].items;
        let one_minimal = fails(&r.design, 1)
            && !r.non_minimal
            && (0..items.len()).all(|i| {
                let mut sub = r.design.clone();
                sub.modules[0].items.remove(i);
                !fails(&sub, 1)
            });
        minimal += usize::from(one_minimal);
    }
    check(
        agree == 50 && minimal == 50,
        format!("planted item recovered {agree}/50; 1-minimal and failing {minimal}/50"),
    )
}

fn determinism() -> Verdict {
    match determinism_mismatch(2000, 500, 0) {
        Ok(None) => Pass("two T=2000 runs and a resume from round 500 are byte-identical".into()),
        Ok(Some(d)) => Fail(d),
        Err(e) => Fail(e),
    }
}

fn zero_false_positives() -> Verdict {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    match run(mock_config(dir.path(), 1000, 0, MockBugProfile::empty())) {
        Ok(r) => check(
            r.unique_bugs == 0 && r.observations == 0,
            format!(
                "T=1000 honest mock: {} bugs, {} observations",
                r.unique_bugs, r.observations
            ),
        ),
        Err(e) => Fail(e.to_string()),
    }
}

fn installed(tool: &str) -> bool {
    Command::new(tool).arg("-V").output().is_ok()
}

/// Not gating: runs only with yosys and iverilog on PATH.
fn real_tools() -> Verdict {
    if !installed("yosys") || !installed("iverilog") {
        return Skip("yosys and iverilog not installed".into());
    }
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let adapters = serde_json::json!([
        {
            "name": "yosys",
            "cmd": "yosys",
            "args": ["-q", "-p", "read_verilog {inputs}; synth -top {top}; write_verilog -noattr {outdir}/netlist.v"],
            "kind": "synthesizer",
            "netlist": "netlist.v"
        },
        {
            "name": "iverilog",
            "cmd": "iverilog",
            "args": ["-o", "{outdir}/a.out", "{inputs}"],
            "kind": "simulator"
        }
    ]);
    let path = dir.path().join("tools.json");
    if let Err(e) = std::fs::write(&path, adapters.to_string()) {
        return Fail(e.to_string());
    }
    let cfg = CampaignConfig {
        rounds: 500,
        adapters: Some(path),
        output: dir.path().join("out"),
        ..Default::default()
    };
    match run(cfg) {
        Ok(r) => Pass(format!(
            "500 rounds, {} findings recorded, {} tool skips",
            r.unique_bugs, r.tool_skips
        )),
        Err(e) => Fail(e.to_string()),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("metamorphic soundness", soundness),
        ("linucb numeric oracle", linucb_oracle),
        ("policy ablation", ablation),
        ("triage suite", triage),
        ("reducer suite", reducer),
        ("end-to-end determinism", determinism),
        ("honest tool zero false positives", zero_false_positives),
        ("real tools (optional)", real_tools),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match v {
            Pass(d) => println!("PASS  {name}: {d} [{:.1}s]", secs),
            Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d} [{:.1}s]", secs);
            }
            Skip(d) => println!("SKIP  {name}: {d}"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
