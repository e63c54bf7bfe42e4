//! Region extraction into a new module (same file or a sidecar file).

use rand::seq::IndexedRandom;

use super::{clocks, strategy_rng, MetamorphError, MutationRecord, SidecarFile, StrategyId};
use crate::hdl::{
    printer, AstModule, Connection, Design, Direction, Expr, Item, NetDecl, NetKind, PortDecl,
};

/// Largest live-in plus live-out signal count of an extractable region.
pub const MAX_CUT: usize = 8;

/// A contiguous run of top-level items with its interface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub start: usize,
    pub end: usize,
    /// Clocks the region needs, threaded through unchanged.
    pub clocks: Vec<String>,
    pub live_in: Vec<String>,
    pub live_out: Vec<String>,
    /// Signals driven and consumed only inside the region.
    pub internal: Vec<String>,
}

impl Region {
    pub fn cut(&self) -> usize {
        self.live_in.len() + self.live_out.len()
    }
}

fn push_unique(out: &mut Vec<String>, items: impl IntoIterator<Item = String>) {
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
}

/// Every contiguous item run of `d.top` with at most [`MAX_CUT`] boundary
/// signals and at least one live-out.
pub fn regions(d: &Design) -> Vec<Region> {
    let top = d.top_module();
    let clocks = clocks(d);
    let reads: Vec<Vec<String>> = top.items.iter().map(|i| i.reads(Some(d))).collect();
    let drives: Vec<Vec<String>> = top.items.iter().map(|i| i.drives(Some(d))).collect();
    let outputs: Vec<&str> = top.outputs().map(|p| p.name.as_str()).collect();
    let n = top.items.len();
    let mut found = Vec::new();
    for start in 0..n {
        let mut driven: Vec<String> = Vec::new();
        let mut read: Vec<String> = Vec::new();
        for end in start + 1..=n {
            push_unique(&mut driven, drives[end - 1].iter().cloned());
            push_unique(&mut read, reads[end - 1].iter().cloned());
            let region_clocks: Vec<String> = read
                .iter()
                .filter(|s| clocks.contains(s))
                .cloned()
                .collect();
            let live_in: Vec<String> = read
                .iter()
                .filter(|s| !driven.contains(s) && !clocks.contains(s))
                .cloned()
                .collect();
            if live_in.len() > MAX_CUT {
                continue;
            }
            let mut live_out = Vec::new();
            let mut internal = Vec::new();
            for s in &driven {
                let outside = (0..n)
                    .filter(|&k| k < start || k >= end)
                    .any(|k| reads[k].contains(s));
                if outside || outputs.contains(&s.as_str()) {
                    live_out.push(s.clone());
                } else {
                    internal.push(s.clone());
                }
            }
            if live_out.is_empty() || live_in.len() + live_out.len() > MAX_CUT {
                continue;
            }
            found.push(Region {
                start,
                end,
                clocks: region_clocks,
                live_in,
                live_out,
                internal,
            });
        }
    }
    found
}

/// Moves `region` of `d.top` into a new module named `module` and
/// instantiates it in place.
fn extract(d: &Design, region: &Region, module: &str, instance: &str) -> Design {
    let mut variant = d.clone();
    let top = d.top_module();
    let items: Vec<Item> = top.items[region.start..region.end].to_vec();
    let comb_or_ff_driven: Vec<String> = items
        .iter()
        .filter(|i| matches!(i, Item::AlwaysComb(_) | Item::AlwaysFf(_)))
        .flat_map(|i| i.drives(Some(d)))
        .collect();
    let width = |s: &str| top.width_of(s).expect("declared signal");

    let mut child = AstModule::new(module);
    for c in &region.clocks {
        child.ports.push(PortDecl {
            name: c.clone(),
            direction: Direction::Input,
            kind: NetKind::Wire,
            width: 1,
        });
    }
    for s in &region.live_in {
        child.ports.push(PortDecl {
            name: s.clone(),
            direction: Direction::Input,
            kind: NetKind::Wire,
            width: width(s),
        });
    }
    for s in &region.live_out {
        let kind = if comb_or_ff_driven.contains(s) {
            NetKind::Reg
        } else {
            NetKind::Wire
        };
        child.ports.push(PortDecl {
            name: s.clone(),
            direction: Direction::Output,
            kind,
            width: width(s),
        });
    }
    for s in &region.internal {
        let (w, kind) = top.signal(s).expect("declared signal");
        child.nets.push(NetDecl {
            name: s.clone(),
            kind,
            width: w,
        });
    }
    child.items = items;

    let connections: Vec<Connection> = child
        .ports
        .iter()
        .map(|p| Connection {
            port: p.name.clone(),
            expr: Expr::reference(p.name.clone()),
        })
        .collect();
    let m = variant.top_module_mut();
    m.items.splice(
        region.start..region.end,
        [Item::instance(module, instance, connections)],
    );
    m.nets.retain(|n| !region.internal.contains(&n.name));
    for s in &region.live_out {
        if let Some(n) = m.nets.iter_mut().find(|n| n.name == *s) {
            n.kind = NetKind::Wire;
        }
        if let Some(p) = m.ports.iter_mut().find(|p| p.name == *s) {
            p.kind = NetKind::Wire;
        }
    }
    variant.modules.push(child);
    variant
}

fn pick_region(
    d: &Design,
    rng_seed: u64,
) -> Result<(Region, rand_chacha::ChaCha8Rng), MetamorphError> {
    let mut rng = strategy_rng(rng_seed);
    let all = regions(d);
    let region = all
        .choose(&mut rng)
        .cloned()
        .ok_or_else(|| MetamorphError::NoExtractableRegion(d.top.clone()))?;
    Ok((region, rng))
}

fn summary(module: &str, r: &Region) -> String {
    format!(
        "{module}: {} item(s), {} in, {} out, {} internal",
        r.end - r.start,
        r.live_in.len(),
        r.live_out.len(),
        r.internal.len()
    )
}

pub fn subsystem_promote(
    d: &Design,
    rng_seed: u64,
) -> Result<(Design, MutationRecord), MetamorphError> {
    let (region, _) = pick_region(d, rng_seed)?;
    let module = d.fresh_name("sp_mod");
    let instance = d.fresh_name("sp_u");
    let variant = extract(d, &region, &module, &instance);
    Ok((
        variant,
        MutationRecord {
            strategy: StrategyId::SubsystemPromote,
            site: format!("{}.items[{}..{}]", d.top, region.start, region.end),
            rng_seed,
            payload_summary: summary(&module, &region),
        },
    ))
}

pub fn model_transfer(
    d: &Design,
    rng_seed: u64,
) -> Result<(Design, MutationRecord, SidecarFile), MetamorphError> {
    let (region, _) = pick_region(d, rng_seed)?;
    let module = d.fresh_name("mt_mod");
    let instance = d.fresh_name("mt_u");
    let mut variant = extract(d, &region, &module, &instance);
    let path = format!("{module}.v");
    let child = variant.modules.last_mut().expect("extracted module");
    child.unit = Some(path.clone());
    let mut text = String::new();
    printer::print_module(child, &mut text);
    Ok((
        variant,
        MutationRecord {
            strategy: StrategyId::ModelTransfer,
            site: format!("{}.items[{}..{}]", d.top, region.start, region.end),
            rng_seed,
            payload_summary: format!("{} -> {path}", summary(&module, &region)),
        },
        SidecarFile { path, module, text },
    ))
}
