//! Guarded-branch insertion: wrap existing statements in `if (TAUT) .. else ..`.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dead::{comb_safe_reads, data_signals, fresh};
use super::payload::Payload;
use super::{clocks, strategy_rng, MetamorphError, MutationRecord, StrategyId};
use crate::hdl::{AlwaysComb, BinaryOp, Design, Expr, Item, NetDecl, NetKind, Span, Stmt, UnaryOp};

/// Always-true conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tautology {
    /// `1'b1`
    One,
    /// `(x == x)`
    SelfEqual,
    /// `(x | ~x) != 0`
    OrComplement,
    /// `((x ^ x) == 0)`
    XorSelf,
}

impl Tautology {
    pub const ALL: [Tautology; 4] = [
        Tautology::One,
        Tautology::SelfEqual,
        Tautology::OrComplement,
        Tautology::XorSelf,
    ];

    pub fn build(self, x: &str) -> Expr {
        let r = || Expr::reference(x);
        match self {
            Tautology::One => Expr::constant(1, 1),
            Tautology::SelfEqual => Expr::binary(BinaryOp::Eq, r(), r()),
            Tautology::OrComplement => Expr::binary(
                BinaryOp::Ne,
                Expr::binary(BinaryOp::Or, r(), Expr::unary(UnaryOp::BitNot, r())),
                Expr::constant(32, 0),
            ),
            Tautology::XorSelf => Expr::binary(
                BinaryOp::Eq,
                Expr::binary(BinaryOp::Xor, r(), r()),
                Expr::constant(32, 0),
            ),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GuardOptions {
    /// Fixed condition form instead of a random one.
    pub tautology: Option<Tautology>,
    /// Fixed signal for the condition instead of a random one.
    pub signal: Option<String>,
    /// Leave the else branch empty.
    pub empty_else: bool,
}

pub fn guarded_branch_insert(
    d: &Design,
    rng_seed: u64,
) -> Result<(Design, MutationRecord), MetamorphError> {
    guarded_branch_insert_with(d, rng_seed, &GuardOptions::default())
}

pub fn guarded_branch_insert_with(
    d: &Design,
    rng_seed: u64,
    opts: &GuardOptions,
) -> Result<(Design, MutationRecord), MetamorphError> {
    let top = d.top_module();
    let candidates: Vec<usize> = top
        .items
        .iter()
        .enumerate()
        .filter(|(_, item)| match item {
            Item::Assign(_) => true,
            Item::AlwaysComb(a) => !a.body.is_empty(),
            Item::AlwaysFf(a) => !a.body.is_empty(),
            Item::Instance(_) => false,
        })
        .map(|(i, _)| i)
        .collect();
    let mut rng = strategy_rng(rng_seed);
    let Some(&idx) = candidates.choose(&mut rng) else {
        return Err(MetamorphError::NoWrappableRegion(top.name.clone()));
    };
    let clocks = clocks(d);
    let mut variant = d.clone();
    let top_name = variant.top.clone();
    let converted = matches!(top.items[idx], Item::Assign(_));
    if let Item::Assign(a) = &top.items[idx] {
        // `assign w = e;` becomes `always @(*) w = e;` and `w` becomes a reg.
        let m = variant.top_module_mut();
        m.items[idx] = Item::AlwaysComb(AlwaysComb {
            body: vec![Stmt::Blocking {
                lhs: a.lhs.clone(),
                rhs: a.rhs.clone(),
            }],
            span: Span::default(),
        });
        if let Some(p) = m.ports.iter_mut().find(|p| p.name == a.lhs) {
            p.kind = NetKind::Reg;
        }
        if let Some(n) = m.nets.iter_mut().find(|n| n.name == a.lhs) {
            n.kind = NetKind::Reg;
        }
    }
    let item = variant.top_module().items[idx].clone();
    let clocked = matches!(item, Item::AlwaysFf(_));
    let reads = if clocked {
        data_signals(variant.top_module(), &clocks)
    } else {
        comb_safe_reads(&variant, &item, &clocks)
    };

    let len = item.body().expect("always block").len();
    let start = rng.random_range(0..len);
    let end = rng.random_range(start + 1..=len);

    let form = opts
        .tautology
        .unwrap_or_else(|| *Tautology::ALL.choose(&mut rng).expect("non-empty"));
    let signal = opts
        .signal
        .clone()
        .or_else(|| reads.choose(&mut rng).map(|(n, _)| n.clone()));
    let (form, cond) = match (form, signal) {
        (Tautology::One, _) | (_, None) => (Tautology::One, Tautology::One.build("")),
        (form, Some(x)) => (form, form.build(&x)),
    };

    let mut payload = Payload {
        rng: &mut rng,
        reads,
    };
    let n_else = if opts.empty_else {
        0
    } else {
        payload.rng.random_range(0..=2usize)
    };
    let mut else_assigns: Vec<(String, Expr)> = Vec::new();
    let mut widths = Vec::new();
    for _ in 0..n_else {
        let depth = payload.rng.random_range(1..=3usize);
        let e = payload.tree(depth, 1);
        let e = payload.bounded(e);
        let width = payload.width(&e).clamp(1, 64);
        let name = fresh(&variant, "gb_", &else_assigns);
        payload.reads.push((name.clone(), width));
        widths.push(width);
        else_assigns.push((name, e));
    }

    let m = variant.top_module_mut();
    for ((name, _), width) in else_assigns.iter().zip(&widths) {
        m.nets.push(NetDecl {
            name: name.clone(),
            kind: NetKind::Reg,
            width: *width,
        });
    }
    let else_body: Vec<Stmt> = else_assigns
        .into_iter()
        .map(|(lhs, rhs)| {
            if clocked {
                Stmt::NonBlocking { lhs, rhs }
            } else {
                Stmt::Blocking { lhs, rhs }
            }
        })
        .collect();
    let body = m.items[idx].body_mut().expect("always block");
    let wrapped: Vec<Stmt> = body.drain(start..end).collect();
    body.insert(
        start,
        Stmt::If {
            cond,
            then_body: wrapped,
            else_body,
        },
    );
    Ok((
        variant,
        MutationRecord {
            strategy: StrategyId::GuardedBranchInsert,
            site: format!("{top_name}.items[{idx}].body[{start}..{end}]"),
            rng_seed,
            payload_summary: format!(
                "{form:?} guard{}; else branch {n_else} stmt(s)",
                if converted {
                    " on converted assign"
                } else {
                    ""
                }
            ),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::parse;
    use crate::refsim::exhaustive_equiv;

    #[test]
    fn trivial_guard_adds_one_if() {
        let d = parse("module m(input [3:0] a, output [3:0] y); assign y = a + 4'd1; endmodule")
            .unwrap();
        let opts = GuardOptions {
            tautology: Some(Tautology::One),
            empty_else: true,
            ..Default::default()
        };
        let (v, _) = guarded_branch_insert_with(&d, 0, &opts).unwrap();
        let Item::AlwaysComb(a) = &v.modules[0].items[0] else {
            panic!()
        };
        assert!(matches!(&a.body[0], Stmt::If { else_body, .. } if else_body.is_empty()));
        assert!(exhaustive_equiv(&d, &v, 10, 2).unwrap().is_equivalent());
    }

    #[test]
    fn self_equal_over_four_bit_net() {
        let d = parse(
            "module m(input clk, input [3:0] a, output reg [3:0] q); \
             wire [3:0] n; assign n = a ^ 4'd9; \
             always @(posedge clk) q <= n + q; endmodule",
        )
        .unwrap();
        let opts = GuardOptions {
            tautology: Some(Tautology::SelfEqual),
            signal: Some("n".into()),
            ..Default::default()
        };
        for seed in 0..10 {
            let (v, _) = guarded_branch_insert_with(&d, seed, &opts).unwrap();
            crate::hdl::validate(&v).unwrap();
            assert!(exhaustive_equiv(&d, &v, 10, 6).unwrap().is_equivalent());
        }
    }

    #[test]
    fn no_wrappable_region() {
        let d = parse("module m(input a, output b); endmodule").unwrap();
        assert!(matches!(
            guarded_branch_insert(&d, 0),
            Err(MetamorphError::NoWrappableRegion(_))
        ));
    }
}
