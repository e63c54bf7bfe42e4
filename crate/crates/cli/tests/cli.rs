use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn metahunt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metahunt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_is_deterministic_and_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let a = metahunt(&["gen", "--seed", "7"], dir.path());
    let b = metahunt(&["gen", "--seed", "7"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("module "));

    let out = metahunt(&["gen", "--seed", "7", "--out", "case"], dir.path());
    assert!(out.status.success());
    let main = fs::read_to_string(dir.path().join("case/main.v")).unwrap();
    assert_eq!(main, stdout(&a));
}

#[test]
fn sim_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("inv.v"),
        "module inv(input [1:0] a, output [1:0] y); assign y = ~a; endmodule\n",
    )
    .unwrap();
    let o = metahunt(
        &["sim", "--case", "inv.v", "--cycles", "3", "--trace", "t.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
}

#[test]
fn mock_synth_reports_crash_with_status_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("deep.v"),
        "module m(input a, input b, output y); \
         assign y = a ? (b ? (a ? (b ? (a ? b : a) : a) : b) : a) : b; endmodule\n",
    )
    .unwrap();
    let o = metahunt(&["mock-synth", "--case", "deep.v"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("\"crash\""));
    let o = metahunt(
        &["mock-synth", "--case", "deep.v", "--profile", "none"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn campaign_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("buggy.json"),
        r#"{"rounds": 30, "mock": ["deep_ternary_crash", "shift_const_fold", "zero_width_sign_ext"], "output": "buggy"}"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("honest.json"),
        r#"{"rounds": 30, "output": "honest"}"#,
    )
    .unwrap();
    let o = metahunt(&["campaign", "--config", "buggy.json"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("unique bugs"));
    assert!(dir.path().join("buggy/bugs/bug-000/min/main.v").exists());

    let o = metahunt(&["campaign", "--config", "honest.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));

    let o = metahunt(
        &[
            "campaign",
            "--config",
            "buggy.json",
            "--resume",
            "buggy/state.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"rounds": 0}"#).unwrap();
    let o = metahunt(&["campaign", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn reduce_shrinks_a_shift_fold_case() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("big.v"),
        "module top(input [2:0] a, input [2:0] b, output [2:0] y, output [2:0] z, output w); \
         sub u(.a(a), .y(y)); assign z = a & b; assign w = !b; endmodule\n\
         module sub(input [2:0] a, output [2:0] y); wire [2:0] t; \
         assign t = a + 3'd1; assign y = (a >> 5) ^ a; endmodule\n",
    )
    .unwrap();
    let o = metahunt(
        &[
            "reduce",
            "--case",
            "big.v",
            "--signature",
            "rewrite:shr.rhs:const->const",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let min = fs::read_to_string(dir.path().join("r/min/main.v")).unwrap();
    assert!(min.contains(">> 5"));
    assert!(!min.contains("a & b"));
    assert!(!min.contains("3'd1"));
    assert!(fs::read_to_string(dir.path().join("r/reduction.log"))
        .unwrap()
        .contains("non_minimal false"));
}

#[test]
fn triage_groups_logs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("a.log"),
        "assertion failed in opt_expr at 0x1234 line 17\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("b.log"),
        "assertion failed in opt_expr at 0xbeef line 99\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("c.log"),
        "vector index out of range in techmap lut mapper\n",
    )
    .unwrap();
    let o = metahunt(
        &["triage", "--log", "a.log", "--log", "b.log", "--log", "c.log"],
        dir.path(),
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ids: Vec<u64> = v["logs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["cluster"].as_u64().unwrap())
        .collect();
    assert_eq!(ids[0], ids[1]);
    assert_ne!(ids[0], ids[2]);
    assert_eq!(v["clusters"].as_array().unwrap().len(), 2);
}
