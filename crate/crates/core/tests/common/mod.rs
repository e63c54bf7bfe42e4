#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use metahunt::bandit::{ArmState, ContextVec, PolicyConfig, DIM};
use metahunt::campaign::{Campaign, CampaignConfig, STATE_FILE};
use metahunt::difftest::MockBugProfile;
use metahunt::hdl::{parse, validate, Design, Expr};
use metahunt::metamorph::StrategyId;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mock_config(out: &Path, rounds: u64, seed: u64, profile: MockBugProfile) -> CampaignConfig {
    CampaignConfig {
        rounds,
        seed,
        mock: Some(profile),
        output: out.to_path_buf(),
        ..Default::default()
    }
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Runs a campaign twice straight through and once with an interruption
/// after `stop_at` rounds followed by a resume from the last checkpoint.
/// Returns the first output file that differs between any of them.
pub fn determinism_mismatch(
    rounds: u64,
    stop_at: u64,
    seed: u64,
) -> Result<Option<String>, String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dirs: Vec<_> = ["a", "b", "resumed"]
        .iter()
        .map(|n| root.path().join(n))
        .collect();
    let cfg = |d: &Path| mock_config(d, rounds, seed, MockBugProfile::all());
    for d in &dirs[..2] {
        metahunt::campaign::run(cfg(d)).map_err(|e| e.to_string())?;
    }
    let mut c = Campaign::new(cfg(&dirs[2])).map_err(|e| e.to_string())?;
    while c.state.round < stop_at {
        c.step().map_err(|e| e.to_string())?;
    }
    drop(c);
    let mut c =
        Campaign::resume(cfg(&dirs[2]), &dirs[2].join(STATE_FILE)).map_err(|e| e.to_string())?;
    c.run().map_err(|e| e.to_string())?;

    let base = snapshot(&dirs[0]);
    for d in &dirs[1..] {
        let other = snapshot(d);
        if base.keys().ne(other.keys()) {
            return Ok(Some(format!("file sets differ in {}", d.display())));
        }
        if let Some((k, _)) = base.iter().find(|(k, v)| other[*k] != **v) {
            return Ok(Some(format!("{k} differs in {}", d.display())));
        }
    }
    Ok(None)
}

pub const MARKS: [u64; 2] = [13, 14];

/// A single module whose items are independent assigns; `planted` of them
/// carry a marker constant.
pub fn planted(rng: &mut ChaCha8Rng, k: usize) -> (Design, Vec<usize>) {
    let n = rng.random_range(3..=12);
    let mut slots: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        slots.swap(i, rng.random_range(0..=i));
    }
    let marked = &slots[..k];
    let mut ports = vec!["input [3:0] a".to_string(), "input [3:0] b".to_string()];
    let mut items = Vec::new();
    for i in 0..n {
        ports.push(format!("output [3:0] o{i}"));
        let c = match marked.iter().position(|&m| m == i) {
            Some(j) => MARKS[j],
            None => rng.random_range(0..12),
        };
        let op = ["+", "^", "&", "|"][rng.random_range(0..4)];
        items.push(format!("assign o{i} = (a {op} b) ^ 4'd{c};"));
    }
    let src = format!(
        "module t({}); {} endmodule",
        ports.join(", "),
        items.join(" ")
    );
    let mut marked = marked.to_vec();
    marked.sort();
    (parse(&src).unwrap(), marked)
}

pub fn constants(d: &Design) -> Vec<u64> {
    let mut out = Vec::new();
    for m in &d.modules {
        for it in &m.items {
            it.for_each_expr(&mut |e| collect(e, &mut out));
        }
    }
    out
}

fn collect(e: &Expr, out: &mut Vec<u64>) {
    if let Expr::Const { value, .. } = e {
        out.push(*value);
    }
    for c in e.children() {
        collect(c, out);
    }
}

pub fn fails(d: &Design, k: usize) -> bool {
    validate(d).is_ok() && MARKS[..k].iter().all(|m| constants(d).contains(m))
}

/// Every smallest item subset of `d` for which the predicate holds, by
/// enumerating all subsets.
pub fn brute_force_minima(d: &Design, k: usize) -> Vec<Vec<usize>> {
    let n = d.modules[0].items.len();
    let mut best = usize::MAX;
    let mut found = Vec::new();
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > best {
            continue;
        }
        let keep: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut sub = d.clone();
        sub.modules[0].items = keep
            .iter()
            .map(|&i| d.modules[0].items[i].clone())
            .collect();
        if fails(&sub, k) {
            if size < best {
                best = size;
                found.clear();
            }
            found.push(keep);
        }
    }
    found
}

/// Indices in `d` of the items kept in `reduced`.
pub fn surviving_items(d: &Design, reduced: &Design) -> Vec<usize> {
    let printed: Vec<String> = d.modules[0]
        .items
        .iter()
        .map(|it| format!("{it:?}"))
        .collect();
    reduced.modules[0]
        .items
        .iter()
        .filter_map(|it| printed.iter().position(|p| *p == format!("{it:?}")))
        .collect()
}

/// Dense recomputation from the raw pull history.
struct Oracle {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Oracle {
    fn new() -> Self {
        Self {
            a: DMatrix::identity(DIM, DIM),
            b: DVector::zeros(DIM),
        }
    }

    fn update(&mut self, x: &[f64; DIM], r: f64) {
        let v = DVector::from_column_slice(x);
        self.a += &v * v.transpose();
        self.b += &v * r;
    }

    fn inverse(&self) -> DMatrix<f64> {
        self.a
            .clone()
            .try_inverse()
            .expect("A is positive definite")
    }

    fn theta(&self) -> DVector<f64> {
        self.inverse() * &self.b
    }

    fn ucb(&self, x: &[f64; DIM], alpha: f64, beta: f64, f_a: f64) -> f64 {
        let v = DVector::from_column_slice(x);
        let r_hat = self.theta().dot(&v);
        let width = (v.transpose() * self.inverse() * &v)[(0, 0)].sqrt();
        r_hat * (-beta * f_a).exp() + alpha * width
    }
}

pub fn random_context(rng: &mut ChaCha8Rng) -> ContextVec {
    let arm = StrategyId::ALL[rng.random_range(0..4)];
    ContextVec::new(arm, rng.random(), rng.random())
}

/// Compares `ArmState` against a dense recomputation over `sequences`
/// random pull histories. Returns the first mismatch.
pub fn linucb_oracle_mismatch(sequences: u64) -> Option<String> {
    let cfg = PolicyConfig::default();
    for seq in 0..sequences {
        let mut rng = ChaCha8Rng::seed_from_u64(seq);
        let mut arm = ArmState::default();
        let mut oracle = Oracle::new();
        let pulls = rng.random_range(1..=40);
        for _ in 0..pulls {
            let x = random_context(&mut rng);
            let r: f64 = rng.random_range(-0.5..1.5);
            arm.update(&x, r);
            oracle.update(&x.0, r);
        }
        for i in 0..DIM {
            for j in 0..DIM {
                if (arm.a[i][j] - oracle.a[(i, j)]).abs() > 1e-12 {
                    return Some(format!("A[{i}][{j}] in sequence {seq}"));
                }
            }
        }
        let theta = arm.theta().ok()?;
        let want = oracle.theta();
        if (0..DIM).any(|i| (theta[i] - want[i]).abs() > 1e-9) {
            return Some(format!("theta in sequence {seq}"));
        }
        let probe = random_context(&mut rng);
        let f_a = probe.frequency();
        let est = arm.estimate(&probe).ok()?;
        if (est - want.dot(&DVector::from_column_slice(&probe.0))).abs() > 1e-9 {
            return Some(format!("estimate in sequence {seq}"));
        }
        let u = arm.ucb(&probe, &cfg, f_a).ok()?;
        if (u - oracle.ucb(&probe.0, cfg.alpha, cfg.beta, f_a)).abs() > 1e-9 {
            return Some(format!("ucb in sequence {seq}"));
        }
    }
    None
}

pub fn family_a(rng: &mut ChaCha8Rng) -> String {
    format!(
        "ERROR: assertion `width > 0` failed in opt_expr::fold_constants at passes/opt/opt_expr.cc:{}\n\
         while processing /tmp/run_{}/work/top.v\n\
         #0 0x{:012x} in opt_expr::fold_constants\n#1 0x{:012x} in Pass::call\n",
        rng.random_range(1..2000),
        rng.random::<u32>(),
        rng.random::<u64>() >> 16,
        rng.random::<u64>() >> 16,
    )
}

pub fn family_b(rng: &mut ChaCha8Rng) -> String {
    format!(
        "terminate called after throwing std::out_of_range\n  what():  vector index {} exceeds size {}\n\
         Aborted (core dumped) in techmap_lut::map_cells reading /home/u{}/designs/c{}.v\n",
        rng.random::<u16>(),
        rng.random::<u16>(),
        rng.random::<u8>(),
        rng.random::<u32>(),
    )
}
