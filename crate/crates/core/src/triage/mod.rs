//! Crash-log featurization, cosine clustering, and repetition counters.

mod record;

use std::collections::HashMap;
use std::hash::Hasher;
use std::sync::LazyLock;

use fnv::FnvHasher;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use record::{append_jsonl, read_jsonl, BugKind, BugRecord};

/// Feature dimension.
pub const DIM: usize = 256;
pub const DEFAULT_THRESHOLD: f64 = 0.85;
/// New observations between K-means re-fits.
pub const REFIT_EVERY: usize = 50;
pub const KMEANS_ITERATIONS: usize = 20;
const SUMMARY_TOKENS: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TriageError {
    #[error("log is empty")]
    EmptyLog,
    #[error("zero vector has no direction")]
    ZeroVector,
}

static PATH: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:[A-Za-z]:\\|\.{1,2}/|/)?(?:[\w.\-]+[/\\])+[\w.\-]*|/[\w.\-]+")
        .expect("valid regex")
});
static HEX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"0[xX][0-9a-fA-F]+").expect("valid regex"));
static NUM: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[0-9]+").expect("valid regex"));
static TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").expect("valid regex"));

/// Replaces paths, hex addresses and integers with placeholder tokens.
pub fn mask(log: &str) -> String {
    let s = PATH.replace_all(log, " PATH ");
    let s = HEX.replace_all(&s, " ADDR ");
    NUM.replace_all(&s, " NUM ").into_owned()
}

pub fn tokenize(masked: &str) -> Vec<&str> {
    TOKEN.find_iter(masked).map(|m| m.as_str()).collect()
}

fn bucket(token: &str) -> (usize, f64) {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    let v = h.finish();
    let sign = if v >> 63 == 0 { 1.0 } else { -1.0 };
    ((v % DIM as u64) as usize, sign)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFeature {
    pub vector: Vec<f64>,
    /// Most frequent informative tokens, for reports.
    pub token_summary: Vec<String>,
}

const PLACEHOLDERS: [&str; 3] = ["PATH", "ADDR", "NUM"];

pub fn featurize(log: &str) -> Result<LogFeature, TriageError> {
    if log.trim().is_empty() {
        return Err(TriageError::EmptyLog);
    }
    let masked = mask(log);
    let tokens = tokenize(&masked);
    let mut vector = vec![0.0; DIM];
    for t in &tokens {
        let (i, s) = bucket(t);
        vector[i] += s;
    }
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Only punctuation, or perfectly cancelling hashes.
        let (i, _) = bucket(log.trim());
        vector[i] = 1.0;
    } else {
        vector.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(LogFeature {
        vector,
        token_summary: summary(&tokens),
    })
}

fn summary(tokens: &[&str]) -> Vec<String> {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for (pos, t) in tokens.iter().enumerate() {
        if t.len() < 4 || PLACEHOLDERS.contains(t) {
            continue;
        }
        counts.entry(t).or_insert((0, pos)).0 += 1;
    }
    let mut ranked: Vec<(&str, (usize, usize))> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    ranked
        .into_iter()
        .take(SUMMARY_TOKENS)
        .map(|(t, _)| t.to_string())
        .collect()
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, TriageError> {
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(TriageError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BugCluster {
    pub id: usize,
    pub centroid: Vec<f64>,
    pub members: Vec<u64>,
    /// Repetition counter; always `members.len()`.
    pub count: u64,
    pub token_summary: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Existing(usize),
    New(usize),
}

impl Assignment {
    pub fn id(self) -> usize {
        match self {
            Assignment::Existing(i) | Assignment::New(i) => i,
        }
    }

    pub fn is_new(self) -> bool {
        matches!(self, Assignment::New(_))
    }
}

/// Incremental threshold clustering with periodic spherical K-means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRegistry {
    pub threshold: f64,
    pub clusters: Vec<BugCluster>,
    /// Member id and feature vector of every observation.
    observations: Vec<(u64, Vec<f64>)>,
    since_refit: usize,
}

impl Default for ClusterRegistry {
    fn default() -> Self {
        Self::new(DEFAULT_THRESHOLD)
    }
}

impl ClusterRegistry {
    pub fn new(threshold: f64) -> Self {
        assert!(
            threshold > 0.0 && threshold < 1.0,
            "threshold must lie in (0, 1)"
        );
        Self {
            threshold,
            clusters: Vec::new(),
            observations: Vec::new(),
            since_refit: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Nearest cluster and its similarity.
    pub fn nearest(&self, v: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for c in &self.clusters {
            let Ok(s) = cosine(v, &c.centroid) else {
                continue;
            };
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c.id, s));
            }
        }
        best
    }

    pub fn assign_cluster(&mut self, f: &LogFeature, member: u64) -> Assignment {
        self.observations.push((member, f.vector.clone()));
        let result = match self.nearest(&f.vector) {
            Some((id, s)) if s >= self.threshold => {
                self.clusters[id].members.push(member);
                self.clusters[id].count += 1;
                self.recenter(id);
                Assignment::Existing(id)
            }
            _ => {
                let id = self.clusters.len();
                self.clusters.push(BugCluster {
                    id,
                    centroid: f.vector.clone(),
                    members: vec![member],
                    count: 1,
                    token_summary: f.token_summary.clone(),
                });
                Assignment::New(id)
            }
        };
        self.since_refit += 1;
        if self.since_refit >= REFIT_EVERY {
            self.since_refit = 0;
            self.refit();
        }
        result
    }

    fn vector_of(&self, member: u64) -> Option<&[f64]> {
        self.observations
            .iter()
            .find(|(m, _)| *m == member)
            .map(|(_, v)| v.as_slice())
    }

    fn recenter(&mut self, id: usize) {
        let members = self.clusters[id].members.clone();
        if members.is_empty() {
            return;
        }
        let mut sum = vec![0.0; DIM];
        for m in members {
            if let Some(v) = self.vector_of(m) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            }
        }
        let c = normalized(sum);
        if c.iter().any(|x| *x != 0.0) {
            self.clusters[id].centroid = c;
        }
    }

    /// Spherical K-means over all observations, k = current cluster count,
    /// seeded from the current centroids.
    pub fn refit(&mut self) {
        if self.clusters.is_empty() {
            return;
        }
        for _ in 0..KMEANS_ITERATIONS {
            let mut members: Vec<Vec<u64>> = vec![Vec::new(); self.clusters.len()];
            for (m, v) in &self.observations {
                let (id, _) = self.nearest(v).expect("non-empty registry");
                members[id].push(*m);
            }
            let changed = members
                .iter()
                .zip(&self.clusters)
                .any(|(new, c)| *new != c.members);
            for (c, m) in self.clusters.iter_mut().zip(members) {
                c.count = m.len() as u64;
                c.members = m;
            }
            for id in 0..self.clusters.len() {
                self.recenter(id);
            }
            if !changed {
                break;
            }
        }
    }

    pub fn total_observations(&self) -> u64 {
        self.clusters.iter().map(|c| c.count).sum()
    }
}

/// `Σ counts / T`, clamped to `[0, 1]`.
pub fn frequency(counts: &[u64], t: u64) -> f64 {
    assert!(t >= 1, "T must be at least 1");
    (counts.iter().sum::<u64>() as f64 / t as f64).clamp(0.0, 1.0)
}
