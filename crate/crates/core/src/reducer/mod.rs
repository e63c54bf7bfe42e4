//! Delta-debugging reduction of failing designs: modules, then items, then
//! statements of always blocks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::difftest::{inconsistency_fingerprints, Divergence, Fingerprint};
use crate::hdl::{print, validate, Design, Item};
use crate::refsim::SimTrace;
use crate::triage::{featurize, ClusterRegistry};

pub const MAX_EVALUATIONS: usize = 500;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReduceError {
    #[error("the input design does not fail the predicate")]
    NotFailing,
    #[error("predicate answered differently on identical input:\n{0}")]
    FlakyPredicate(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub design: Design,
    pub evaluations: usize,
    /// Set when the evaluation cap stopped the search before 1-minimality
    /// was confirmed.
    pub non_minimal: bool,
    pub log: Vec<String>,
}

/// Removable unit at each granularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Unit {
    Module(usize),
    Item(usize, usize),
    Stmt(usize, usize, usize),
}

fn modules(d: &Design) -> Vec<Unit> {
    d.modules
        .iter()
        .enumerate()
        .filter(|(_, m)| m.name != d.top)
        .map(|(i, _)| Unit::Module(i))
        .collect()
}

fn items(d: &Design) -> Vec<Unit> {
    let mut out = Vec::new();
    for (m, module) in d.modules.iter().enumerate() {
        out.extend((0..module.items.len()).map(|i| Unit::Item(m, i)));
    }
    out
}

fn stmts(d: &Design) -> Vec<Unit> {
    let mut out = Vec::new();
    for (m, module) in d.modules.iter().enumerate() {
        for (i, item) in module.items.iter().enumerate() {
            if let Some(body) = item.body() {
                out.extend((0..body.len()).map(|s| Unit::Stmt(m, i, s)));
            }
        }
    }
    out
}

/// `d` without the units in `removed`.
fn without(d: &Design, removed: &[Unit]) -> Design {
    let mut out = d.clone();
    let mut drop_modules: Vec<usize> = Vec::new();
    let mut drop_items: Vec<(usize, usize)> = Vec::new();
    let mut drop_stmts: Vec<(usize, usize, usize)> = Vec::new();
    for u in removed {
        match *u {
            Unit::Module(m) => drop_modules.push(m),
            Unit::Item(m, i) => drop_items.push((m, i)),
            Unit::Stmt(m, i, s) => drop_stmts.push((m, i, s)),
        }
    }
    drop_stmts.sort_unstable_by(|a, b| b.cmp(a));
    for (m, i, s) in drop_stmts {
        if let Some(body) = out.modules[m].items[i].body_mut() {
            body.remove(s);
        }
    }
    drop_items.sort_unstable_by(|a, b| b.cmp(a));
    for (m, i) in drop_items {
        out.modules[m].items.remove(i);
    }
    let names: Vec<String> = drop_modules
        .iter()
        .map(|&m| d.modules[m].name.clone())
        .collect();
    let mut k = 0;
    out.modules.retain(|_| {
        k += 1;
        !drop_modules.contains(&(k - 1))
    });
    // A module goes together with every instance of it.
    for m in &mut out.modules {
        m.items
            .retain(|it| !matches!(it, Item::Instance(inst) if names.contains(&inst.module)));
    }
    out
}

struct Search<'a> {
    predicate: &'a mut dyn FnMut(&Design) -> bool,
    cache: HashMap<String, bool>,
    evaluations: usize,
    cap: usize,
    log: Vec<String>,
}

impl Search<'_> {
    fn exhausted(&self) -> bool {
        self.evaluations >= self.cap
    }

    /// Invalid designs count as passing and cost no evaluation.
    fn fails(&mut self, d: &Design) -> bool {
        if validate(d).is_err() {
            return false;
        }
        let key = print(d);
        if let Some(&r) = self.cache.get(&key) {
            return r;
        }
        if self.exhausted() {
            return false;
        }
        self.evaluations += 1;
        let r = (self.predicate)(d);
        self.cache.insert(key, r);
        r
    }

    /// ddmin over `units` of `d`; returns the reduced design.
    fn ddmin(&mut self, d: Design, units: Vec<Unit>, level: &str) -> Design {
        let mut keep: Vec<Unit> = units.clone();
        let mut n = 2usize;
        let removed_of = |keep: &[Unit]| -> Vec<Unit> {
            units
                .iter()
                .filter(|u| !keep.contains(u))
                .copied()
                .collect()
        };
        while !keep.is_empty() && !self.exhausted() {
            if keep.len() == 1 {
                if self.fails(&without(&d, &units)) {
                    self.log.push(format!("{level}: removed last unit"));
                    keep.clear();
                }
                break;
            }
            let n_eff = n.min(keep.len());
            let chunks: Vec<Vec<Unit>> = split(&keep, n_eff);
            let mut progressed = false;
            for c in &chunks {
                let candidate = without(&d, &removed_of(c));
                if self.fails(&candidate) {
                    self.log.push(format!(
                        "{level}: kept chunk of {} / {}",
                        c.len(),
                        keep.len()
                    ));
                    keep = c.clone();
                    n = 2;
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                for (i, _) in chunks.iter().enumerate() {
                    let complement: Vec<Unit> = chunks
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .flat_map(|(_, c)| c.iter().copied())
                        .collect();
                    let candidate = without(&d, &removed_of(&complement));
                    if self.fails(&candidate) {
                        self.log.push(format!(
                            "{level}: removed {} of {}",
                            keep.len() - complement.len(),
                            keep.len()
                        ));
                        keep = complement;
                        n = (n_eff - 1).max(2);
                        progressed = true;
                        break;
                    }
                }
            }
            if !progressed {
                if n_eff >= keep.len() {
                    break;
                }
                n = (n_eff * 2).min(keep.len());
            }
        }
        without(&d, &removed_of(&keep))
    }
}

fn split(units: &[Unit], n: usize) -> Vec<Vec<Unit>> {
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let end = start + (units.len() - start) / (n - i);
        out.push(units[start..end].to_vec());
        start = end;
    }
    out
}

/// Whether removing any single module or item of `d` makes it pass or
/// invalid.
fn one_minimal(s: &mut Search<'_>, d: &Design) -> Option<bool> {
    for u in modules(d).into_iter().chain(items(d)) {
        if s.exhausted() {
            return None;
        }
        if s.fails(&without(d, &[u])) {
            return Some(false);
        }
    }
    Some(true)
}

pub fn reduce(
    d: &Design,
    predicate: &mut dyn FnMut(&Design) -> bool,
) -> Result<Reduction, ReduceError> {
    reduce_with_cap(d, predicate, MAX_EVALUATIONS)
}

pub fn reduce_with_cap(
    d: &Design,
    predicate: &mut dyn FnMut(&Design) -> bool,
    cap: usize,
) -> Result<Reduction, ReduceError> {
    let first = predicate(d);
    let second = predicate(d);
    if first != second {
        return Err(ReduceError::FlakyPredicate(print(d)));
    }
    if !first {
        return Err(ReduceError::NotFailing);
    }
    let mut s = Search {
        predicate,
        cache: HashMap::from([(print(d), true)]),
        evaluations: 2,
        cap: cap.max(2),
        log: Vec::new(),
    };
    let mut current = d.clone();
    let minimal = loop {
        let before = current.clone();
        let units = modules(&current);
        current = s.ddmin(current, units, "modules");
        let units = items(&current);
        current = s.ddmin(current, units, "items");
        let units = stmts(&current);
        current = s.ddmin(current, units, "statements");
        if current != before {
            continue;
        }
        match one_minimal(&mut s, &current) {
            Some(true) => break true,
            Some(false) => continue,
            None => break false,
        }
    };
    current = prune_nets(&mut s, current);
    // Confirm the result with the real predicate when it came from cache.
    let check = (s.predicate)(&current);
    if !check {
        return Err(ReduceError::FlakyPredicate(print(&current)));
    }
    Ok(Reduction {
        design: current,
        evaluations: s.evaluations + 1,
        non_minimal: !minimal,
        log: s.log,
    })
}

/// Drops declarations nothing reads or drives when the failure persists.
fn prune_nets(s: &mut Search<'_>, d: Design) -> Design {
    let mut pruned = d.clone();
    for m in &mut pruned.modules {
        let mut used: Vec<String> = Vec::new();
        for item in &m.items {
            used.extend(item.reads(None));
            used.extend(item.drives(None));
            if let Item::Instance(inst) = item {
                for c in &inst.connections {
                    c.expr.reads(&mut used);
                }
            }
        }
        m.nets.retain(|n| used.contains(&n.name));
    }
    if pruned != d && s.fails(&pruned) {
        pruned
    } else {
        d
    }
}

/// What a failing run looked like.
pub enum Observed<'a> {
    Crash {
        log: &'a str,
    },
    Inconsistency {
        netlist: &'a Design,
        divergence: &'a Divergence,
        expected: &'a SimTrace,
    },
}

/// Bug identity of a reduced case. A crash maps to its nearest log
/// cluster, or to the id a new cluster would get.
pub fn dedupe_signature(
    d_min: &Design,
    observed: &Observed<'_>,
    registry: &ClusterRegistry,
) -> Vec<Fingerprint> {
    match observed {
        Observed::Crash { log } => {
            let cluster = featurize(log)
                .ok()
                .and_then(|f| registry.nearest(&f.vector))
                .filter(|(_, s)| *s >= registry.threshold)
                .map(|(id, _)| id)
                .unwrap_or(registry.len());
            vec![Fingerprint::Crash { cluster }]
        }
        Observed::Inconsistency {
            netlist,
            divergence,
            expected,
        } => inconsistency_fingerprints(d_min, netlist, divergence, expected),
    }
}
