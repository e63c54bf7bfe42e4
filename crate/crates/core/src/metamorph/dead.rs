//! Dead-region insertion: new logic that can never affect an output.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::payload::{Payload, DEEP_TERNARY};
use super::{clocks, strategy_rng, MetamorphError, MutationRecord, StrategyId};
use crate::hdl::{AstModule, Design, Expr, Item, NetDecl, NetKind, Stmt};

#[derive(Clone, Copy, Debug)]
pub struct DeadRegionOptions {
    /// Insert nothing; the variant equals the original.
    pub empty_payload: bool,
    /// Chance that one payload statement is a deep ternary chain.
    pub deep_ternary_probability: f64,
}

impl Default for DeadRegionOptions {
    fn default() -> Self {
        Self {
            empty_payload: false,
            deep_ternary_probability: 0.3,
        }
    }
}

pub fn dead_region_insert(
    d: &Design,
    rng_seed: u64,
) -> Result<(Design, MutationRecord), MetamorphError> {
    dead_region_insert_with(d, rng_seed, &DeadRegionOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Form {
    /// `if (1'b0)` inside a combinational block.
    Comb(usize),
    /// `if (1'b0)` inside a clocked block.
    Clocked(usize),
    /// A fresh wire nothing reads.
    Dangling,
}

/// Every declared non-clock signal of `m`.
pub(crate) fn data_signals(m: &AstModule, clocks: &[String]) -> Vec<(String, u32)> {
    m.ports
        .iter()
        .map(|p| (p.name.clone(), p.width))
        .chain(m.nets.iter().map(|n| (n.name.clone(), n.width)))
        .filter(|(n, _)| !clocks.contains(n))
        .collect()
}

/// Signals a combinational block may read without creating a new
/// combinational dependency: primary inputs, registers of clocked blocks,
/// and whatever the block already reads or writes.
pub(crate) fn comb_safe_reads(d: &Design, item: &Item, clocks: &[String]) -> Vec<(String, u32)> {
    let m = d.top_module();
    let mut names: Vec<String> = m
        .inputs()
        .map(|p| p.name.clone())
        .filter(|n| !clocks.contains(n))
        .collect();
    for other in &m.items {
        if let Item::AlwaysFf(_) = other {
            names.extend(other.drives(Some(d)));
        }
    }
    names.extend(item.reads(Some(d)));
    names.extend(item.drives(Some(d)));
    let mut out: Vec<(String, u32)> = Vec::new();
    for n in names {
        if out.iter().any(|(o, _)| *o == n) {
            continue;
        }
        if let Some(w) = m.width_of(&n) {
            out.push((n, w));
        }
    }
    out
}

pub fn dead_region_insert_with(
    d: &Design,
    rng_seed: u64,
    opts: &DeadRegionOptions,
) -> Result<(Design, MutationRecord), MetamorphError> {
    let top = d.top_module();
    if top.items.is_empty() {
        return Err(MetamorphError::NoInsertionSite(top.name.clone()));
    }
    let mut rng = strategy_rng(rng_seed);
    let clocks = clocks(d);
    let mut forms = vec![Form::Dangling];
    for (i, item) in top.items.iter().enumerate() {
        match item {
            Item::AlwaysComb(_) => forms.push(Form::Comb(i)),
            Item::AlwaysFf(_) => forms.push(Form::Clocked(i)),
            _ => {}
        }
    }
    let form = *forms
        .choose(&mut rng)
        .expect("dangling form always present");
    if opts.empty_payload {
        return Ok((
            d.clone(),
            MutationRecord {
                strategy: StrategyId::DeadRegionInsert,
                site: format!("{}.items", top.name),
                rng_seed,
                payload_summary: "empty".into(),
            },
        ));
    }

    let reads = match form {
        Form::Comb(i) => comb_safe_reads(d, &top.items[i], &clocks),
        _ => data_signals(top, &clocks),
    };
    let mut variant = d.clone();
    let mut payload = Payload {
        rng: &mut rng,
        reads,
    };
    let n_stmts = match form {
        Form::Dangling => 1,
        _ => payload.rng.random_range(1..=3usize),
    };
    let deep_at = if payload.rng.random_bool(opts.deep_ternary_probability) {
        Some(payload.rng.random_range(0..n_stmts))
    } else {
        None
    };
    let mut assigns: Vec<(String, Expr)> = Vec::new();
    let mut max_ternary = 0;
    for k in 0..n_stmts {
        let e = if deep_at == Some(k) {
            payload.ternary_chain(DEEP_TERNARY)
        } else {
            let depth = payload.rng.random_range(2..=6usize);
            let e = payload.tree(depth, 3);
            payload.bounded(e)
        };
        max_ternary = max_ternary.max(e.ternary_depth());
        let width = payload.width(&e).clamp(1, 64);
        let name = fresh(&variant, "dr_", &assigns);
        // Later statements of the same payload may read earlier results.
        payload.reads.push((name.clone(), width));
        assigns.push((name, e));
    }
    let widths: Vec<u32> = assigns
        .iter()
        .map(|(n, _)| {
            payload
                .reads
                .iter()
                .find(|(r, _)| r == n)
                .map(|(_, w)| *w)
                .unwrap_or(1)
        })
        .collect();

    let top_name = variant.top.clone();
    let m = variant.top_module_mut();
    let kind = if form == Form::Dangling {
        NetKind::Wire
    } else {
        NetKind::Reg
    };
    for ((name, _), width) in assigns.iter().zip(&widths) {
        m.nets.push(NetDecl {
            name: name.clone(),
            kind,
            width: *width,
        });
    }
    let site = match form {
        Form::Dangling => {
            let (name, e) = assigns.into_iter().next().expect("one statement");
            let at = rng.random_range(0..=m.items.len());
            m.items.insert(at, Item::assign(name, e));
            format!("{top_name}.items[{at}]")
        }
        Form::Comb(i) | Form::Clocked(i) => {
            let clocked = matches!(form, Form::Clocked(_));
            let stmts: Vec<Stmt> = assigns
                .into_iter()
                .map(|(lhs, rhs)| {
                    if clocked {
                        Stmt::NonBlocking { lhs, rhs }
                    } else {
                        Stmt::Blocking { lhs, rhs }
                    }
                })
                .collect();
            let body = m.items[i].body_mut().expect("always block");
            let at = rng.random_range(0..=body.len());
            body.insert(
                at,
                Stmt::If {
                    cond: Expr::constant(1, 0),
                    then_body: stmts,
                    else_body: Vec::new(),
                },
            );
            format!("{top_name}.items[{i}].body[{at}]")
        }
    };
    let where_ = match form {
        Form::Comb(_) => "if(1'b0) in combinational block",
        Form::Clocked(_) => "if(1'b0) in clocked block",
        Form::Dangling => "dangling wire",
    };
    Ok((
        variant,
        MutationRecord {
            strategy: StrategyId::DeadRegionInsert,
            site,
            rng_seed,
            payload_summary: format!("{where_}: {n_stmts} stmt(s), ternary depth {max_ternary}"),
        },
    ))
}

/// Fresh identifier that is unused in `d` and not yet claimed by `pending`.
pub(crate) fn fresh(d: &Design, prefix: &str, pending: &[(String, Expr)]) -> String {
    (0..)
        .map(|i| format!("{prefix}{i}"))
        .find(|n| !d.uses_name(n) && !pending.iter().any(|(p, _)| p == n))
        .expect("unbounded search")
}
