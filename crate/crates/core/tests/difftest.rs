use std::collections::BTreeSet;

use metahunt::difftest::{
    check_case, mock_synthesize, run_set, run_tool, AdapterKind, Fingerprint, MockBug,
    MockBugProfile, RunOutcome, TestCase, ToolAdapter,
};
use metahunt::hdl::{gen_seed, parse, parse_files, Design, SizeProfile, SourceFile};
use metahunt::metamorph::{apply_chain, StrategyId};
use metahunt::refsim::{exhaustive_equiv, SimTrace, Simulator, StimulusSet, DEFAULT_CYCLES};

fn case(design: Design) -> TestCase {
    TestCase {
        id: "case".into(),
        seed: 0,
        design,
        lineage: Vec::new(),
    }
}

fn shell(name: &str, script: &str, timeout_s: u64, netlist: Option<&str>) -> ToolAdapter {
    ToolAdapter {
        name: name.into(),
        cmd: "sh".into(),
        args: vec![
            "-c".into(),
            script.into(),
            "sh".into(),
            "{input}".into(),
            "{outdir}".into(),
        ],
        timeout_s,
        kind: AdapterKind::Synthesizer,
        netlist: netlist.map(String::from),
        profile: MockBugProfile::empty(),
    }
}

fn reference(d: &Design) -> (StimulusSet, Vec<SimTrace>) {
    let set = StimulusSet::for_design(d, 10, DEFAULT_CYCLES).unwrap();
    let traces = run_set(&Simulator::new(d).unwrap(), &set).unwrap();
    (set, traces)
}

fn simple() -> TestCase {
    case(parse("module m(input [1:0] a, output [1:0] y); assign y = ~a; endmodule").unwrap())
}

#[test]
fn hung_tool_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let t = shell("slow", "sleep 5", 1, None);
    let start = std::time::Instant::now();
    let out = run_tool(&t, &simple(), dir.path()).unwrap();
    assert_eq!(out, RunOutcome::Timeout);
    assert!(start.elapsed().as_secs_f64() < 4.0);
}

#[test]
fn crash_log_is_captured_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let t = shell(
        "boom",
        "printf 'fatal: bad node\\n\\tat 0x1f\\n'; exit 3",
        10,
        None,
    );
    match run_tool(&t, &simple(), dir.path()).unwrap() {
        RunOutcome::Crash { status, log } => {
            assert_eq!(status, Some(3));
            assert_eq!(log, "fatal: bad node\n\tat 0x1f\n");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn external_netlist_is_compared() {
    let c = simple();
    let (set, r) = reference(&c.design);
    let dir = tempfile::tempdir().unwrap();
    let honest = shell("copy", "cp \"$1\" \"$2/net.v\"", 10, Some("net.v"));
    let res = check_case(&c, &set, &r, &[honest], dir.path()).unwrap();
    assert!(res.inconsistency.is_none());
    assert!(res.skipped.is_empty());

    let liar = shell(
        "liar",
        "sed 's/~a/a/' \"$1\" > \"$2/net.v\"",
        10,
        Some("net.v"),
    );
    let res = check_case(&c, &set, &r, &[liar], dir.path()).unwrap();
    let inc = res.inconsistency.unwrap();
    assert_eq!(inc.divergence.tool, "liar");
    assert_eq!(inc.divergence.port, "y");
}

#[test]
fn honest_mock_preserves_function_of_variants() {
    for seed in 0..60u64 {
        let d = gen_seed(seed, SizeProfile::Small);
        let links: Vec<(StrategyId, u64)> = (0..3)
            .map(|i| (StrategyId::ALL[((seed + i) % 4) as usize], seed * 3 + i))
            .collect();
        let (v, _) = apply_chain(&d, &links).unwrap();
        let run = mock_synthesize(&v, &MockBugProfile::empty());
        assert!(
            exhaustive_equiv(&v, &run.netlist.unwrap(), 10, DEFAULT_CYCLES)
                .unwrap()
                .is_equivalent()
        );
    }
}

#[test]
fn mock_runs_are_reproducible() {
    let d = gen_seed(3, SizeProfile::Small);
    let p = MockBugProfile::all();
    assert_eq!(mock_synthesize(&d, &p), mock_synthesize(&d, &p));
}

fn sign_ext_design() -> Design {
    let file = |path: &str, text: &str| SourceFile {
        path: path.into(),
        text: text.into(),
    };
    parse_files(&[
        file(
            "main.v",
            "module top(input [3:0] a, input [3:0] b, output [3:0] y, output [3:0] z); \
             ext u0(.a(a), .y(y)); pass u1(.a(b), .y(z)); endmodule",
        ),
        file(
            "ext.v",
            "module ext(input [3:0] a, output [3:0] y); assign y = $signed(a >> 4'd1); endmodule",
        ),
        file(
            "pass.v",
            "module pass(input [3:0] a, output [3:0] y); assign y = a; endmodule",
        ),
        file(
            "pad.v",
            "module pad(input [3:0] a, output [3:0] y); assign y = ~a; endmodule",
        ),
    ])
    .unwrap()
}

#[test]
fn sign_ext_bug_needs_many_files() {
    let d = sign_ext_design();
    assert_eq!(d.file_count(), 4);
    let only = MockBugProfile::only(&[MockBug::ZeroWidthSignExt]);
    let c = case(d.clone());
    let (set, r) = reference(&d);
    let dir = tempfile::tempdir().unwrap();
    let res = check_case(
        &c,
        &set,
        &r,
        &[ToolAdapter::mock("mock", only.clone())],
        dir.path(),
    )
    .unwrap();
    let inc = res.inconsistency.expect("bug fires");
    assert_eq!(inc.divergence.port, "y");
    assert_eq!(inc.divergence.ports, BTreeSet::from(["y".to_string()]));
    assert_eq!(
        inc.fingerprints,
        vec![Fingerprint::Rewrite {
            signature: "signed(shr)->const".into()
        }]
    );

    let mut fewer = d.clone();
    fewer.modules.retain(|m| m.name != "pad");
    let run = mock_synthesize(&fewer, &only);
    assert_eq!(run.netlist.as_ref(), Some(&fewer));
}

#[test]
fn distinct_bug_classes_have_distinct_fingerprints() {
    let shift = parse(
        "module m(input [2:0] a, output [2:0] y); sub u(.a(a), .y(y)); endmodule\n\
         module sub(input [2:0] a, output [2:0] y); assign y = (a >> 5) ^ a; endmodule",
    )
    .unwrap();
    let sign = sign_ext_design();
    let crash = parse(
        "module m(input a, input b, output y); \
         assign y = a ? (b ? (a ? (b ? (a ? b : a) : a) : b) : a) : b; endmodule",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mock = [ToolAdapter::mock("mock", MockBugProfile::all())];
    let mut prints = Vec::new();
    for d in [shift, sign] {
        let (set, r) = reference(&d);
        let res = check_case(&case(d), &set, &r, &mock, dir.path()).unwrap();
        prints.push(res.inconsistency.unwrap().fingerprints);
    }
    assert_ne!(prints[0], prints[1]);
    let (set, r) = reference(&crash);
    let res = check_case(&case(crash), &set, &r, &mock, dir.path()).unwrap();
    assert_eq!(res.crashes().count(), 1);
    assert!(res.inconsistency.is_none());
}
