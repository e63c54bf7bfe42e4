//! The fuzzing loop: seed scheduling, bandit-chosen strategy chains,
//! differential runs, triage, rewards, checkpoints and reports.

mod bench;
mod config;
mod report;

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{bench_policies, BenchReport, BenchRow};
pub use config::{CampaignConfig, SeedSource};
pub use report::{report, summary_text, ArmReport, BugSummary, CampaignReport};

use crate::bandit::{select, ArmState, BanditError, Candidate, ContextVec};
use crate::difftest::{check_case, run_set, DiffError, Fingerprint, TestCase, ToolAdapter};
use crate::hdl::{gen_seed, parse_files, print_files, Design, SourceFile, MAIN_FILE};
use crate::metamorph::{apply, MutationRecord, StrategyId};
use crate::reducer::{reduce, Reduction};
use crate::refsim::{equiv_against, EquivResult, SimError, SimTrace, Simulator, StimulusSet};
use crate::triage::{append_jsonl, featurize, BugKind, BugRecord, ClusterRegistry};

pub const STATE_FILE: &str = "state.json";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const BUGS_FILE: &str = "bugs.jsonl";
pub const DECISIONS_FILE: &str = "decisions.jsonl";

pub const REWARD_CRASH: f64 = 1.0;
pub const REWARD_INCONSISTENCY: f64 = 0.5;
pub const REWARD_DUPLICATE: f64 = 0.1;
/// Reward decay per link of distance from the end of a chain.
pub const CHAIN_DISCOUNT: f64 = 0.5;

const STREAM_SEED: u64 = 1;
const STREAM_POLICY: u64 = 2;
const STREAM_STRATEGY: u64 = 3;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("seed {name}: {message}")]
    Seed { name: String, message: String },
    #[error("round {round}: variant is not equivalent to its seed ({detail}); lineage {lineage}")]
    SelfCheck {
        round: u64,
        detail: String,
        lineage: String,
    },
    #[error("framework fault: {0}")]
    Framework(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("state file: {0}")]
    Json(#[from] serde_json::Error),
}

impl CampaignError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CampaignError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Stateless stream split: one independent 64-bit seed per
/// (campaign seed, round, link, stream).
pub fn mix(seed: u64, round: u64, link: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ link.wrapping_mul(0xc2b2_ae3d_27d4_eb4f)
        ^ stream.wrapping_mul(0x1656_67b1_9e37_79f9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct Seed {
    pub id: u64,
    pub name: String,
    pub design: Design,
}

pub fn load_corpus(cfg: &CampaignConfig) -> Result<Vec<Seed>, CampaignError> {
    match &cfg.seeds {
        SeedSource::Generator { profile, count } => Ok((0..*count as u64)
            .map(|i| Seed {
                id: i,
                name: format!("gen-{i}"),
                design: gen_seed(mix(cfg.seed, i, 0, STREAM_SEED), *profile),
            })
            .collect()),
        SeedSource::Dir(dir) => load_dir(dir),
    }
}

fn read_sources(dir: &Path) -> Result<Vec<SourceFile>, CampaignError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CampaignError::io(dir, e))? {
        let p = entry.map_err(|e| CampaignError::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "v") {
            let text = fs::read_to_string(&p).map_err(|e| CampaignError::io(&p, e))?;
            let name = p.file_name().expect("file").to_string_lossy().into_owned();
            files.push(SourceFile { path: name, text });
        }
    }
    files.sort_by(|a, b| (a.path != MAIN_FILE, &a.path).cmp(&(b.path != MAIN_FILE, &b.path)));
    Ok(files)
}

/// Reads a multi-file case directory, `main.v` first.
pub fn load_case_dir(dir: &Path) -> Result<Design, CampaignError> {
    let files = read_sources(dir)?;
    if files.is_empty() {
        return Err(CampaignError::Seed {
            name: dir.display().to_string(),
            message: "no .v files".into(),
        });
    }
    parse_files(&files).map_err(|(file, e)| CampaignError::Seed {
        name: format!("{}/{file}", dir.display()),
        message: e.to_string(),
    })
}

fn load_dir(dir: &Path) -> Result<Vec<Seed>, CampaignError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CampaignError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() || p.extension().is_some_and(|x| x == "v"))
        .collect();
    entries.sort();
    let mut seeds = Vec::new();
    for (i, p) in entries.into_iter().enumerate() {
        let design = if p.is_dir() {
            load_case_dir(&p)?
        } else {
            let text = fs::read_to_string(&p).map_err(|e| CampaignError::io(&p, e))?;
            crate::hdl::parse(&text).map_err(|e| CampaignError::Seed {
                name: p.display().to_string(),
                message: e.render(&p.display().to_string(), &text),
            })?
        };
        seeds.push(Seed {
            id: i as u64,
            name: p.file_name().expect("entry").to_string_lossy().into_owned(),
            design,
        });
    }
    if seeds.is_empty() {
        return Err(CampaignError::Config(format!(
            "{}: no seeds",
            dir.display()
        )));
    }
    Ok(seeds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionSummary {
    pub original_items: usize,
    pub reduced_items: usize,
    pub evaluations: usize,
    pub non_minimal: bool,
}

/// A distinct bug, in discovery order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownBug {
    pub id: usize,
    pub fingerprint: Fingerprint,
    pub kind: BugKind,
    /// Observations including the first.
    pub count: u64,
    /// 1-based round of discovery.
    pub first_round: u64,
    pub arm: StrategyId,
    pub seed: u64,
    pub lineage: Vec<MutationRecord>,
    pub token_summary: Vec<String>,
    pub reproducer: Option<String>,
    pub reduction: Option<ReductionSummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub round: u64,
    pub unique: usize,
}

/// Everything needed to continue a campaign exactly where it stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignState {
    /// Rounds completed.
    pub round: u64,
    pub arms: Vec<ArmState>,
    pub arm_bugs: Vec<u64>,
    pub arm_duplicates: Vec<u64>,
    pub registry: ClusterRegistry,
    pub bugs: Vec<KnownBug>,
    pub observations: u64,
    pub decisions: u64,
    pub curve: Vec<CurvePoint>,
    pub inapplicable: u64,
    pub tool_skips: u64,
    /// Lines written to the append-only logs so far.
    pub decision_lines: u64,
    pub bug_lines: u64,
}

impl CampaignState {
    pub fn new(threshold: f64) -> Self {
        let n = StrategyId::ALL.len();
        Self {
            round: 0,
            arms: vec![ArmState::default(); n],
            arm_bugs: vec![0; n],
            arm_duplicates: vec![0; n],
            registry: ClusterRegistry::new(threshold),
            bugs: Vec::new(),
            observations: 0,
            decisions: 0,
            curve: Vec::new(),
            inapplicable: 0,
            tool_skips: 0,
            decision_lines: 0,
            bug_lines: 0,
        }
    }

    /// Share of this arm's bugs relative to the best arm.
    pub fn history(&self, a: StrategyId) -> f64 {
        let best = self.arm_bugs.iter().copied().max().unwrap_or(0).max(1);
        self.arm_bugs[a.index()] as f64 / best as f64
    }

    /// Duplicate hits of the arm per elapsed round.
    pub fn frequency(&self, a: StrategyId) -> f64 {
        crate::triage::frequency(&[self.arm_duplicates[a.index()]], self.round.max(1))
    }

    pub fn context(&self, a: StrategyId) -> ContextVec {
        ContextVec::new(a, self.history(a), self.frequency(a))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub round: u64,
    pub link: usize,
    pub seed: u64,
    pub arm: StrategyId,
    pub excluded: Vec<StrategyId>,
    pub context: ContextVec,
    pub reward: f64,
}

/// Result of one round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub links: usize,
    pub reward: f64,
    pub new_bugs: Vec<usize>,
    pub duplicates: usize,
}

/// Stimulus set and seed traces for the current seed.
struct Reference {
    seed: usize,
    set: StimulusSet,
    traces: Vec<SimTrace>,
}

pub struct Campaign {
    pub cfg: CampaignConfig,
    pub adapters: Vec<ToolAdapter>,
    pub corpus: Vec<Seed>,
    pub state: CampaignState,
    reference: Option<Reference>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CampaignError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| CampaignError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CampaignError::io(path, e))
}

/// Keeps the first `n` lines of `path`.
fn truncate_lines(path: &Path, n: u64) -> Result<(), CampaignError> {
    if !path.exists() {
        return Ok(());
    }
    let f = fs::File::open(path).map_err(|e| CampaignError::io(path, e))?;
    let mut kept = String::new();
    for line in BufReader::new(f).lines().take(n as usize) {
        kept.push_str(&line.map_err(|e| CampaignError::io(path, e))?);
        kept.push('\n');
    }
    fs::write(path, kept).map_err(|e| CampaignError::io(path, e))
}

fn write_files(dir: &Path, design: &Design) -> Result<(), CampaignError> {
    fs::create_dir_all(dir).map_err(|e| CampaignError::io(dir, e))?;
    for f in print_files(design) {
        let p = dir.join(&f.path);
        fs::write(&p, f.text).map_err(|e| CampaignError::io(&p, e))?;
    }
    Ok(())
}

fn item_count(d: &Design) -> usize {
    d.modules.iter().map(|m| m.items.len()).sum()
}

/// Failure signatures of `d` under `adapters`, judged against the
/// reference simulation of `d` itself. Crash logs map to their nearest
/// known cluster.
pub fn failure_signatures(
    d: &Design,
    adapters: &[ToolAdapter],
    registry: &ClusterRegistry,
    max_input_bits: u32,
    cycles: usize,
    scratch: &Path,
) -> Result<Vec<Fingerprint>, CampaignError> {
    let set = StimulusSet::for_design(d, max_input_bits, cycles)?;
    let reference = run_set(&Simulator::new(d)?, &set)?;
    let case = TestCase {
        id: "probe".into(),
        seed: 0,
        design: d.clone(),
        lineage: Vec::new(),
    };
    let res = check_case(&case, &set, &reference, adapters, scratch)?;
    let mut out = Vec::new();
    for c in res.crashes() {
        if let Ok(f) = featurize(c.outcome.log()) {
            match registry.nearest(&f.vector) {
                Some((id, s)) if s >= registry.threshold => {
                    out.push(Fingerprint::Crash { cluster: id })
                }
                _ => out.push(Fingerprint::Crash {
                    cluster: registry.len(),
                }),
            }
        }
    }
    if let Some(inc) = res.inconsistency {
        out.extend(inc.fingerprints);
    }
    let _ = fs::remove_dir_all(scratch);
    Ok(out)
}

/// Reduces `d` while it keeps failing with `target`.
pub fn minimize(
    d: &Design,
    target: &Fingerprint,
    adapters: &[ToolAdapter],
    registry: &ClusterRegistry,
    max_input_bits: u32,
    cycles: usize,
    scratch: &Path,
) -> Result<Reduction, CampaignError> {
    let mut p = |c: &Design| {
        failure_signatures(c, adapters, registry, max_input_bits, cycles, scratch)
            .map(|s| s.contains(target))
            .unwrap_or(false)
    };
    reduce(d, &mut p).map_err(|e| CampaignError::Framework(format!("reduction of {target}: {e}")))
}

impl Campaign {
    pub fn new(cfg: CampaignConfig) -> Result<Self, CampaignError> {
        cfg.check()?;
        let adapters = cfg.resolve_adapters()?;
        let corpus = load_corpus(&cfg)?;
        fs::create_dir_all(&cfg.output).map_err(|e| CampaignError::io(&cfg.output, e))?;
        for f in [BUGS_FILE, DECISIONS_FILE] {
            let p = cfg.output.join(f);
            fs::write(&p, "").map_err(|e| CampaignError::io(&p, e))?;
        }
        let bugs = cfg.output.join("bugs");
        if bugs.exists() {
            fs::remove_dir_all(&bugs).map_err(|e| CampaignError::io(&bugs, e))?;
        }
        let state = CampaignState::new(cfg.cluster_threshold);
        Ok(Self {
            cfg,
            adapters,
            corpus,
            state,
            reference: None,
        })
    }

    /// Continues from a checkpoint, discarding log lines and bug
    /// directories written after it.
    pub fn resume(cfg: CampaignConfig, state_path: &Path) -> Result<Self, CampaignError> {
        cfg.check()?;
        let text = fs::read_to_string(state_path).map_err(|e| CampaignError::io(state_path, e))?;
        let state: CampaignState = serde_json::from_str(&text)?;
        let adapters = cfg.resolve_adapters()?;
        let corpus = load_corpus(&cfg)?;
        fs::create_dir_all(&cfg.output).map_err(|e| CampaignError::io(&cfg.output, e))?;
        truncate_lines(&cfg.output.join(DECISIONS_FILE), state.decision_lines)?;
        truncate_lines(&cfg.output.join(BUGS_FILE), state.bug_lines)?;
        let bugs = cfg.output.join("bugs");
        if bugs.exists() {
            for entry in fs::read_dir(&bugs).map_err(|e| CampaignError::io(&bugs, e))? {
                let p = entry.map_err(|e| CampaignError::io(&bugs, e))?.path();
                let keep = state.bugs.iter().any(|b| {
                    p.file_name()
                        .is_some_and(|n| n.to_string_lossy() == bug_dir_name(b.id))
                });
                if !keep {
                    fs::remove_dir_all(&p).map_err(|e| CampaignError::io(&p, e))?;
                }
            }
        }
        Ok(Self {
            cfg,
            adapters,
            corpus,
            state,
            reference: None,
        })
    }

    pub fn done(&self) -> bool {
        self.state.round >= self.cfg.rounds
            || self
                .cfg
                .stop_when_unique_bugs
                .is_some_and(|n| self.state.bugs.len() >= n)
    }

    fn seed_index(&self, round: u64) -> usize {
        ((round / self.cfg.variants_per_seed as u64) % self.corpus.len() as u64) as usize
    }

    fn ensure_reference(&mut self, seed: usize) -> Result<(), CampaignError> {
        if self.reference.as_ref().is_some_and(|r| r.seed == seed) {
            return Ok(());
        }
        let d = &self.corpus[seed].design;
        let set = StimulusSet::for_design(d, self.cfg.max_input_bits, self.cfg.cycles)?;
        let traces = run_set(&Simulator::new(d)?, &set)?;
        self.reference = Some(Reference { seed, set, traces });
        Ok(())
    }

    /// Runs one round.
    pub fn step(&mut self) -> Result<StepOutcome, CampaignError> {
        let t = self.state.round;
        let seed_idx = self.seed_index(t);
        self.ensure_reference(seed_idx)?;
        let seed = self.corpus[seed_idx].clone();
        let contexts: Vec<ContextVec> = StrategyId::ALL
            .iter()
            .map(|&a| self.state.context(a))
            .collect();

        let mut current = seed.design.clone();
        let mut lineage: Vec<MutationRecord> = Vec::new();
        let mut decisions: Vec<DecisionRecord> = Vec::new();
        for link in 0..self.cfg.chain_depth {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix(self.cfg.seed, t, link as u64, STREAM_POLICY));
            let strategy_seed = mix(self.cfg.seed, t, link as u64, STREAM_STRATEGY);
            let mut excluded: Vec<StrategyId> = Vec::new();
            let applied = loop {
                let arms: Vec<Candidate> = StrategyId::ALL
                    .iter()
                    .filter(|a| !excluded.contains(a))
                    .map(|&a| Candidate {
                        id: a,
                        state: &self.state.arms[a.index()],
                        context: contexts[a.index()],
                        f_a: contexts[a.index()].frequency(),
                    })
                    .collect();
                if arms.is_empty() {
                    break None;
                }
                let chosen = select(&arms, &self.cfg.policy, &mut rng)?;
                match apply(&current, chosen, strategy_seed) {
                    Ok((v, rec)) => break Some((chosen, v, rec)),
                    Err(e) if e.is_inapplicable() => {
                        self.state.inapplicable += 1;
                        excluded.push(chosen);
                    }
                    Err(e) => {
                        return Err(CampaignError::Framework(format!(
                            "round {t} link {link}: {} produced an invalid variant: {e}",
                            chosen
                        )))
                    }
                }
            };
            let Some((arm, variant, record)) = applied else {
                break;
            };
            current = variant;
            lineage.push(record);
            decisions.push(DecisionRecord {
                round: t,
                link,
                seed: seed.id,
                arm,
                excluded,
                context: contexts[arm.index()],
                reward: 0.0,
            });
        }

        let mut outcome = StepOutcome {
            links: decisions.len(),
            ..Default::default()
        };
        if !decisions.is_empty() {
            let case = TestCase {
                id: format!("r{t}"),
                seed: seed.id,
                design: current,
                lineage,
            };
            let reward = self.evaluate(t, &case, &mut outcome)?;
            outcome.reward = reward;
            let last = decisions.len() - 1;
            for (k, d) in decisions.iter_mut().enumerate() {
                let r = reward * CHAIN_DISCOUNT.powi((last - k) as i32);
                self.state.arms[d.arm.index()].update(&d.context, r);
                d.reward = r;
            }
        }
        let log = self.cfg.output.join(DECISIONS_FILE);
        for d in &decisions {
            append_jsonl(&log, d).map_err(|e| CampaignError::io(&log, e))?;
            self.state.decision_lines += 1;
        }
        self.state.decisions += decisions.len() as u64;
        self.state.round += 1;
        if !outcome.new_bugs.is_empty() {
            self.state.curve.push(CurvePoint {
                round: self.state.round,
                unique: self.state.bugs.len(),
            });
        }
        if self.state.round.is_multiple_of(self.cfg.checkpoint_every) {
            self.checkpoint()?;
        }
        Ok(outcome)
    }

    /// Self-check, differential run and triage of one variant. Returns the
    /// round's reward.
    fn evaluate(
        &mut self,
        t: u64,
        case: &TestCase,
        outcome: &mut StepOutcome,
    ) -> Result<f64, CampaignError> {
        let reference = self.reference.as_ref().expect("reference prepared");
        let sim = Simulator::new(&case.design)?;
        let check = equiv_against(&sim, &reference.set, &reference.traces).map_err(|e| {
            CampaignError::Framework(format!("round {t}: self-check failed to run: {e}"))
        })?;
        if let EquivResult::Counterexample {
            cycle,
            port,
            expected,
            got,
            ..
        } = &check
        {
            return Err(CampaignError::SelfCheck {
                round: t,
                detail: format!("cycle {cycle} port {port}: expected {expected:#x}, got {got:#x}"),
                lineage: serde_json::to_string(&case.lineage)?,
            });
        }
        let scratch = self.cfg.output.join("work").join(t.to_string());
        let result = check_case(
            case,
            &reference.set,
            &reference.traces,
            &self.adapters,
            &scratch,
        )?;
        let _ = fs::remove_dir_all(&scratch);
        self.state.tool_skips += result.skipped.len() as u64;

        let arm = case.lineage.last().expect("non-empty chain").strategy;
        let mut findings: Vec<(Fingerprint, BugKind, Vec<String>, Option<String>)> = Vec::new();
        for c in result.crashes() {
            let log = c.outcome.log();
            let feature = match featurize(log) {
                Ok(f) => f,
                Err(_) => {
                    featurize(&format!("{} crashed without output", c.tool)).expect("non-empty")
                }
            };
            let assignment = self
                .state
                .registry
                .assign_cluster(&feature, self.state.observations);
            let fp = Fingerprint::Crash {
                cluster: assignment.id(),
            };
            if !findings.iter().any(|f| f.0 == fp) {
                let digest = crate::difftest::sha256_hex(log.as_bytes());
                findings.push((fp, BugKind::Crash, feature.token_summary, Some(digest)));
            }
        }
        if let Some(inc) = &result.inconsistency {
            for fp in &inc.fingerprints {
                if !findings.iter().any(|f| f.0 == *fp) {
                    findings.push((
                        fp.clone(),
                        BugKind::Inconsistency,
                        vec![inc.divergence.port.clone()],
                        None,
                    ));
                }
            }
        }

        let mut reward: f64 = 0.0;
        for (fp, kind, tokens, digest) in findings {
            self.state.observations += 1;
            let (id, count, r) = match self.state.bugs.iter_mut().find(|b| b.fingerprint == fp) {
                Some(b) => {
                    b.count += 1;
                    self.state.arm_duplicates[arm.index()] += 1;
                    outcome.duplicates += 1;
                    (b.id, b.count, REWARD_DUPLICATE)
                }
                None => {
                    let id = self.state.bugs.len();
                    self.state.arm_bugs[arm.index()] += 1;
                    outcome.new_bugs.push(id);
                    self.state.bugs.push(KnownBug {
                        id,
                        fingerprint: fp.clone(),
                        kind,
                        count: 1,
                        first_round: t + 1,
                        arm,
                        seed: case.seed,
                        lineage: case.lineage.clone(),
                        token_summary: tokens,
                        reproducer: None,
                        reduction: None,
                    });
                    self.record_bug(id, case)?;
                    let r = match kind {
                        BugKind::Crash => REWARD_CRASH,
                        BugKind::Inconsistency => REWARD_INCONSISTENCY,
                    };
                    (id, 1, r)
                }
            };
            reward = reward.max(r);
            let bug = &self.state.bugs[id];
            let rec = BugRecord {
                id: self.state.observations - 1,
                kind,
                cluster: fp.to_string(),
                c_i: count,
                arm,
                round: t + 1,
                seed: case.seed,
                lineage: case.lineage.clone(),
                log_digest: digest,
                reproducer_path: bug.reproducer.clone(),
            };
            let path = self.cfg.output.join(BUGS_FILE);
            append_jsonl(&path, &rec).map_err(|e| CampaignError::io(&path, e))?;
            self.state.bug_lines += 1;
        }
        Ok(reward)
    }

    /// Writes the variant and, when enabled, its reduction for a new bug.
    fn record_bug(&mut self, id: usize, case: &TestCase) -> Result<(), CampaignError> {
        let rel = format!("bugs/{}", bug_dir_name(id));
        let dir = self.cfg.output.join(&rel);
        write_files(&dir.join("original"), &case.design)?;
        let bug = self.state.bugs[id].clone();
        let mut reproducer = format!("{rel}/original");
        if self.cfg.minimize {
            let scratch = self.cfg.output.join("work").join("reduce");
            let r = minimize(
                &case.design,
                &bug.fingerprint,
                &self.adapters,
                &self.state.registry,
                self.cfg.max_input_bits,
                self.cfg.cycles,
                &scratch,
            )?;
            let _ = fs::remove_dir_all(&scratch);
            write_files(&dir.join("min"), &r.design)?;
            let mut log = String::new();
            for line in &r.log {
                log.push_str(line);
                log.push('\n');
            }
            log.push_str(&format!(
                "evaluations {}\nitems {} -> {}\nnon_minimal {}\n",
                r.evaluations,
                item_count(&case.design),
                item_count(&r.design),
                r.non_minimal
            ));
            let p = dir.join("reduction.log");
            fs::write(&p, log).map_err(|e| CampaignError::io(&p, e))?;
            self.state.bugs[id].reduction = Some(ReductionSummary {
                original_items: item_count(&case.design),
                reduced_items: item_count(&r.design),
                evaluations: r.evaluations,
                non_minimal: r.non_minimal,
            });
            reproducer = format!("{rel}/min");
        }
        self.state.bugs[id].reproducer = Some(reproducer);
        let p = dir.join("bug.json");
        let text = serde_json::to_string_pretty(&self.state.bugs[id])?;
        fs::write(&p, text).map_err(|e| CampaignError::io(&p, e))?;
        Ok(())
    }

    pub fn state_path(&self) -> PathBuf {
        self.cfg.output.join(STATE_FILE)
    }

    pub fn checkpoint(&self) -> Result<(), CampaignError> {
        let bytes = serde_json::to_vec(&self.state)?;
        write_atomic(&self.state_path(), &bytes)
    }

    /// Steps until the configured round count or bug target.
    pub fn run(&mut self) -> Result<CampaignReport, CampaignError> {
        while !self.done() {
            self.step()?;
        }
        self.finish()
    }

    /// Checkpoints and writes `report.json` and `summary.txt`.
    pub fn finish(&self) -> Result<CampaignReport, CampaignError> {
        self.checkpoint()?;
        let r = report(&self.state, &self.cfg.policy);
        let json = serde_json::to_string_pretty(&r)?;
        let p = self.cfg.output.join(REPORT_FILE);
        let mut f = fs::File::create(&p).map_err(|e| CampaignError::io(&p, e))?;
        f.write_all(json.as_bytes())
            .map_err(|e| CampaignError::io(&p, e))?;
        f.write_all(b"\n").map_err(|e| CampaignError::io(&p, e))?;
        let p = self.cfg.output.join(SUMMARY_FILE);
        fs::write(&p, summary_text(&r)).map_err(|e| CampaignError::io(&p, e))?;
        let work = self.cfg.output.join("work");
        let _ = fs::remove_dir_all(work);
        Ok(r)
    }
}

pub fn bug_dir_name(id: usize) -> String {
    format!("bug-{id:03}")
}

/// Runs a campaign to completion.
pub fn run(cfg: CampaignConfig) -> Result<CampaignReport, CampaignError> {
    Campaign::new(cfg)?.run()
}
