use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CampaignError;
use crate::bandit::PolicyConfig;
use crate::difftest::{load_adapters, MockBugProfile, ToolAdapter};
use crate::hdl::SizeProfile;
use crate::refsim::{DEFAULT_CYCLES, DEFAULT_MAX_INPUT_BITS};
use crate::triage::DEFAULT_THRESHOLD;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    /// Random seed designs from the built-in generator.
    Generator { profile: SizeProfile, count: usize },
    /// One seed per `.v` file, or per subdirectory of `.v` files with
    /// `main.v` holding the top module.
    Dir(PathBuf),
}

impl Default for SeedSource {
    fn default() -> Self {
        SeedSource::Generator {
            profile: SizeProfile::Small,
            count: 16,
        }
    }
}

fn default_rounds() -> u64 {
    2000
}
fn default_chain_depth() -> usize {
    3
}
fn default_variants_per_seed() -> usize {
    8
}
fn default_jobs() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_checkpoint() -> u64 {
    50
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_bits() -> u32 {
    DEFAULT_MAX_INPUT_BITS
}
fn default_cycles() -> usize {
    DEFAULT_CYCLES
}
fn default_output() -> PathBuf {
    PathBuf::from("campaign-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub seeds: SeedSource,
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default = "default_chain_depth")]
    pub chain_depth: usize,
    #[serde(default = "default_variants_per_seed")]
    pub variants_per_seed: usize,
    #[serde(default)]
    pub policy: PolicyConfig,
    /// Adapter file; relative paths resolve against the working directory.
    #[serde(default)]
    pub adapters: Option<PathBuf>,
    /// Built-in mock synthesizer, used alone when `adapters` is unset.
    #[serde(default)]
    pub mock: Option<MockBugProfile>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Reduce each new bug to a minimal reproducer.
    #[serde(default = "default_true")]
    pub minimize: bool,
    /// Stop once this many distinct bugs are known.
    #[serde(default)]
    pub stop_when_unique_bugs: Option<usize>,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: u64,
    #[serde(default = "default_threshold")]
    pub cluster_threshold: f64,
    #[serde(default = "default_bits")]
    pub max_input_bits: u32,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = fs::read_to_string(path).map_err(|e| CampaignError::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CampaignError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), CampaignError> {
        let bad = |m: &str| Err(CampaignError::Config(m.to_string()));
        if self.rounds < 1 {
            return bad("rounds must be at least 1");
        }
        if self.jobs < 1 {
            return bad("jobs must be at least 1");
        }
        if self.chain_depth < 1 {
            return bad("chain_depth must be at least 1");
        }
        if self.variants_per_seed < 1 {
            return bad("variants_per_seed must be at least 1");
        }
        if self.checkpoint_every < 1 {
            return bad("checkpoint_every must be at least 1");
        }
        if !(self.cluster_threshold > 0.0 && self.cluster_threshold < 1.0) {
            return bad("cluster_threshold must lie in (0, 1)");
        }
        if let SeedSource::Generator { count, .. } = self.seeds {
            if count < 1 {
                return bad("generator count must be at least 1");
            }
        }
        Ok(())
    }

    /// Adapters from `adapters`, plus the mock when configured. With
    /// neither, an honest mock.
    pub fn resolve_adapters(&self) -> Result<Vec<ToolAdapter>, CampaignError> {
        let mut out = match &self.adapters {
            Some(p) => load_adapters(p)?,
            None => Vec::new(),
        };
        if let Some(profile) = &self.mock {
            out.push(ToolAdapter::mock("mock", profile.clone()));
        }
        if out.is_empty() {
            out.push(ToolAdapter::mock("mock", MockBugProfile::empty()));
        }
        Ok(out)
    }
}
