use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use metahunt::bandit::PolicyKind;
use metahunt::campaign::{self, bench_policies, Campaign, CampaignConfig, CampaignError};
use metahunt::difftest::{mock_synthesize, Fingerprint, MockBug, MockBugProfile, ToolAdapter};
use metahunt::hdl::{self, gen_seed, print_files, Design, SizeProfile};
use metahunt::refsim::{Simulator, Stimulus, DEFAULT_CYCLES, DEFAULT_MAX_INPUT_BITS};
use metahunt::triage::{featurize, ClusterRegistry, DEFAULT_THRESHOLD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "metahunt",
    version,
    about = "Bandit-guided metamorphic fuzzing of logic synthesis tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fuzzing campaign.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Print a generated seed design.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "small")]
        profile: SizeProfile,
        /// Write one file per source unit here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize a failing case while its failure signature persists.
    Reduce {
        /// Case directory (`main.v` plus sidecar files) or a single file.
        #[arg(long)]
        case: PathBuf,
        /// Fingerprint to preserve, e.g. `crash:0` or `rewrite:shr.rhs:const->const`.
        #[arg(long)]
        signature: String,
        /// Adapter file; defaults to a mock with every injected bug.
        #[arg(long)]
        tools: Option<PathBuf>,
        /// Reference crash log defining cluster 0.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value = "reduced")]
        out: PathBuf,
    },
    /// Featurize crash logs and cluster them.
    Triage {
        #[arg(long = "log", required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Compare arm-selection policies on the same corpus and mock bugs.
    BenchPolicies {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "linucb,random,epsilon,thompson"
        )]
        policies: Vec<PolicyKind>,
        #[arg(long, default_value_t = 2000)]
        rounds: u64,
        /// Number of campaign seeds, 0..N.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Base configuration; its policy, seed and reduction settings are overridden.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Run the built-in mock synthesizer on a case.
    MockSynth {
        #[arg(long)]
        case: PathBuf,
        /// Comma-separated injected bugs, or `all`, or `none`.
        #[arg(long, default_value = "all")]
        profile: String,
    },
    /// Simulate a case on random inputs.
    Sim {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CYCLES)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the output trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn load_case(path: &Path) -> Result<Design> {
    if path.is_dir() {
        return Ok(campaign::load_case_dir(path)?);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    hdl::parse(&text).map_err(|e| anyhow::anyhow!(e.render(&path.display().to_string(), &text)))
}

fn parse_profile(s: &str) -> Result<MockBugProfile> {
    match s {
        "all" => return Ok(MockBugProfile::all()),
        "none" | "" => return Ok(MockBugProfile::empty()),
        _ => {}
    }
    let bugs = s
        .split(',')
        .map(|b| serde_json::from_value::<MockBug>(serde_json::Value::String(b.trim().to_string())))
        .collect::<Result<Vec<_>, _>>()
        .context("profile entries are zero_width_sign_ext, deep_ternary_crash, shift_const_fold")?;
    Ok(MockBugProfile::only(&bugs))
}

fn write_design(dir: &Path, d: &Design) -> Result<()> {
    fs::create_dir_all(dir)?;
    for f in print_files(d) {
        fs::write(dir.join(&f.path), f.text)?;
    }
    Ok(())
}

/// Exit status: 0 clean, 2 bugs found.
fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Campaign { config, resume } => {
            let cfg = CampaignConfig::load(&config)?;
            let mut c = match resume {
                Some(state) => Campaign::resume(cfg, &state)?,
                None => Campaign::new(cfg)?,
            };
            let report = match c.run() {
                Ok(r) => r,
                Err(e @ CampaignError::SelfCheck { .. }) => {
                    bail!("framework bug, a strategy broke equivalence: {e}")
                }
                Err(e) => return Err(e.into()),
            };
            print!("{}", campaign::summary_text(&report));
            Ok(if report.unique_bugs > 0 { 2 } else { 0 })
        }
        Command::Gen { seed, profile, out } => {
            let d = gen_seed(seed, profile);
            match out {
                Some(dir) => write_design(&dir, &d)?,
                None => print!("{}", hdl::print(&d)),
            }
            Ok(0)
        }
        Command::Reduce {
            case,
            signature,
            tools,
            log,
            out,
        } => {
            let d = load_case(&case)?;
            let target: Fingerprint = signature.parse().map_err(anyhow::Error::msg)?;
            let adapters = match tools {
                Some(p) => metahunt::difftest::load_adapters(&p)?,
                None => vec![ToolAdapter::mock("mock", MockBugProfile::all())],
            };
            let mut registry = ClusterRegistry::default();
            if let Some(p) = log {
                let text =
                    fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                registry.assign_cluster(&featurize(&text)?, 0);
            }
            let scratch = out.join("work");
            let r = campaign::minimize(
                &d,
                &target,
                &adapters,
                &registry,
                DEFAULT_MAX_INPUT_BITS,
                DEFAULT_CYCLES,
                &scratch,
            )?;
            let _ = fs::remove_dir_all(&scratch);
            write_design(&out.join("min"), &r.design)?;
            let mut text = r.log.join("\n");
            text.push_str(&format!(
                "\nevaluations {}\nnon_minimal {}\n",
                r.evaluations, r.non_minimal
            ));
            fs::write(out.join("reduction.log"), text)?;
            println!("{}", hdl::print(&r.design));
            Ok(2)
        }
        Command::Triage { logs, threshold } => {
            let mut registry = ClusterRegistry::new(threshold);
            let mut rows = Vec::new();
            for (i, p) in logs.iter().enumerate() {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let f = featurize(&text)?;
                let a = registry.assign_cluster(&f, i as u64);
                rows.push(serde_json::json!({
                    "log": p.display().to_string(),
                    "cluster": a.id(),
                    "new": a.is_new(),
                    "tokens": f.token_summary,
                }));
            }
            let counts: Vec<_> = registry
                .clusters
                .iter()
                .map(|c| serde_json::json!({"cluster": c.id, "count": c.count, "tokens": c.token_summary}))
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(
                    &serde_json::json!({"logs": rows, "clusters": counts})
                )?
            );
            Ok(0)
        }
        Command::BenchPolicies {
            policies,
            rounds,
            seeds,
            config,
            out,
        } => {
            let mut base = match config {
                Some(p) => CampaignConfig::load(&p)?,
                None => CampaignConfig {
                    mock: Some(MockBugProfile::all()),
                    ..Default::default()
                },
            };
            base.rounds = rounds;
            base.output = out;
            let target = base
                .mock
                .as_ref()
                .map(|m| m.0.len())
                .filter(|n| *n > 0)
                .unwrap_or(1);
            let seeds: Vec<u64> = (0..seeds).collect();
            let b = bench_policies(&base, &policies, &seeds, target)?;
            println!("{}", serde_json::to_string_pretty(&b)?);
            for p in &policies {
                eprintln!(
                    "{:>9}: mean discovery round {:.1}",
                    p.name(),
                    b.mean(p.name())
                );
            }
            Ok(0)
        }
        Command::MockSynth { case, profile } => {
            let d = load_case(&case)?;
            let run = mock_synthesize(&d, &parse_profile(&profile)?);
            println!("{}", serde_json::to_string_pretty(&run.outcome)?);
            Ok(if run.outcome.is_crash() { 2 } else { 0 })
        }
        Command::Sim {
            case,
            cycles,
            seed,
            trace,
        } => {
            let d = load_case(&case)?;
            let sim = Simulator::new(&d)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ports = sim.inputs().to_vec();
            let vectors = (0..cycles.max(1))
                .map(|_| {
                    ports
                        .iter()
                        .map(|(_, w)| {
                            let mask = if *w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
                            rng.random::<u64>() & mask
                        })
                        .collect()
                })
                .collect();
            let t = sim.run(&Stimulus { ports, vectors })?;
            let csv = t.to_csv();
            match trace {
                Some(p) => {
                    fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?
                }
                None => print!("{csv}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
