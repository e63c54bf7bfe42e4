//! Structural diff between a design and a tool netlist, narrowed to the
//! rewrites that reproduce a divergence on their own.

use crate::hdl::{BinaryOp, CastKind, Design, Expr, UnaryOp};
use crate::refsim::{SimTrace, Simulator, Stimulus};

/// One innermost differing expression node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Site {
    pub module: String,
    pub item: usize,
    /// Position among the item's top-level expressions.
    pub expr: usize,
    /// Child indices from that expression down to the node.
    pub path: Vec<usize>,
    /// Shape of the parent node and the slot the node fills.
    pub context: Option<String>,
    pub before: Expr,
    pub after: Expr,
}

fn name(e: &Expr) -> &'static str {
    match e {
        Expr::Const { .. } => "const",
        Expr::Ref(_) => "ref",
        Expr::BitSelect { .. } => "select",
        Expr::Concat(_) => "concat",
        Expr::Unary(op, _) => match op {
            UnaryOp::BitNot => "not",
            UnaryOp::Neg => "neg",
            UnaryOp::LogicNot => "lnot",
        },
        Expr::Binary(op, ..) => match op {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
            BinaryOp::Xor => "xor",
            BinaryOp::Shl => "shl",
            BinaryOp::Shr => "shr",
            BinaryOp::Eq => "eq",
            BinaryOp::Ne => "ne",
            BinaryOp::Lt => "lt",
        },
        Expr::Ternary(..) => "ternary",
        Expr::Cast(CastKind::Signed, _) => "signed",
        Expr::Cast(CastKind::Unsigned, _) => "unsigned",
    }
}

fn is_leaf(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Const { .. } | Expr::Ref(_) | Expr::BitSelect { .. }
    )
}

/// Node name with its children's names, e.g. `signed(shr)`.
fn shape(e: &Expr) -> String {
    let kids = e.children();
    if kids.is_empty() {
        return name(e).to_string();
    }
    let inner: Vec<&str> = kids.iter().map(|c| name(c)).collect();
    format!("{}({})", name(e), inner.join(","))
}

fn slot(parent: &Expr, i: usize) -> &'static str {
    match parent {
        Expr::Binary(..) => ["lhs", "rhs"][i.min(1)],
        Expr::Ternary(..) => ["cond", "then", "else"][i.min(2)],
        Expr::Concat(_) => "part",
        _ => "arg",
    }
}

impl Site {
    /// Class of the rewrite, independent of names and values. Leaf-for-leaf
    /// swaps are qualified by their parent, e.g. `shr.rhs:const->const`.
    pub fn signature(&self) -> String {
        let body = format!("{}->{}", shape(&self.before), shape(&self.after));
        match &self.context {
            Some(c)
                if is_leaf(&self.before)
                    && is_leaf(&self.after)
                    && name(&self.before) == name(&self.after) =>
            {
                format!("{c}:{body}")
            }
            _ => body,
        }
    }
}

fn same_node(a: &Expr, b: &Expr) -> bool {
    match (a, b) {
        (Expr::Unary(x, _), Expr::Unary(y, _)) => x == y,
        (Expr::Binary(x, ..), Expr::Binary(y, ..)) => x == y,
        (Expr::Cast(x, _), Expr::Cast(y, _)) => x == y,
        (Expr::Ternary(..), Expr::Ternary(..)) => true,
        (Expr::Concat(x), Expr::Concat(y)) => x.len() == y.len(),
        _ => false,
    }
}

fn diff_expr(
    a: &Expr,
    b: &Expr,
    path: &mut Vec<usize>,
    context: Option<String>,
    out: &mut Vec<(Vec<usize>, Option<String>, Expr, Expr)>,
) {
    if a == b {
        return;
    }
    if same_node(a, b) {
        let before = out.len();
        for (i, (x, y)) in a.children().into_iter().zip(b.children()).enumerate() {
            path.push(i);
            diff_expr(x, y, path, Some(format!("{}.{}", name(a), slot(a, i))), out);
            path.pop();
        }
        if out.len() > before {
            return;
        }
    }
    out.push((path.clone(), context, a.clone(), b.clone()));
}

/// Innermost differing nodes, or `None` when the two designs differ in
/// anything but expressions.
pub fn diff_sites(original: &Design, netlist: &Design) -> Option<Vec<Site>> {
    if original.modules.len() != netlist.modules.len() {
        return None;
    }
    let mut sites = Vec::new();
    for (ma, mb) in original.modules.iter().zip(&netlist.modules) {
        if ma.name != mb.name || ma.ports != mb.ports || ma.items.len() != mb.items.len() {
            return None;
        }
        for (k, (ia, ib)) in ma.items.iter().zip(&mb.items).enumerate() {
            let mut ea = Vec::new();
            let mut eb = Vec::new();
            ia.for_each_expr(&mut |e| ea.push(e));
            ib.for_each_expr(&mut |e| eb.push(e));
            if ea.len() != eb.len() || ia.kind_name() != ib.kind_name() {
                return None;
            }
            for (j, (x, y)) in ea.into_iter().zip(eb).enumerate() {
                let mut found = Vec::new();
                diff_expr(x, y, &mut Vec::new(), None, &mut found);
                for (path, context, before, after) in found {
                    sites.push(Site {
                        module: ma.name.clone(),
                        item: k,
                        expr: j,
                        path,
                        context,
                        before,
                        after,
                    });
                }
            }
        }
    }
    Some(sites)
}

/// `d` with only `site` rewritten.
pub fn apply_site(d: &Design, site: &Site) -> Design {
    let mut out = d.clone();
    let m = out.module_mut(&site.module).expect("site module exists");
    let mut ordinal = 0;
    m.items[site.item].for_each_expr_mut(&mut |e| {
        if ordinal == site.expr {
            let mut node = e;
            for &i in &site.path {
                node = node
                    .children_mut()
                    .into_iter()
                    .nth(i)
                    .expect("site path exists");
            }
            *node = site.after.clone();
        }
        ordinal += 1;
    });
    out
}

/// Sites that alone make `original` diverge from `expected` on `stimulus`.
pub fn reproducing_sites(
    original: &Design,
    sites: &[Site],
    stimulus: &Stimulus,
    expected: &SimTrace,
) -> Vec<Site> {
    sites
        .iter()
        .filter(|s| {
            let patched = apply_site(original, s);
            Simulator::new(&patched)
                .and_then(|sim| sim.run(stimulus))
                .map(|t| expected.first_divergence(&t).is_some())
                .unwrap_or(false)
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::parse;

    #[test]
    fn shift_constant_change() {
        let a =
            parse("module m(input [2:0] a, output [2:0] y); assign y = (a >> 4) ^ a; endmodule")
                .unwrap();
        let b =
            parse("module m(input [2:0] a, output [2:0] y); assign y = (a >> 1) ^ a; endmodule")
                .unwrap();
        let sites = diff_sites(&a, &b).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].signature(), "shr.rhs:const->const");
        assert_eq!(apply_site(&a, &sites[0]), b);
    }

    #[test]
    fn cast_replaced_by_constant() {
        let a = parse(
            "module m(input [2:0] a, output [2:0] y); assign y = $signed(a >> 1) ^ a; endmodule",
        )
        .unwrap();
        let b = parse("module m(input [2:0] a, output [2:0] y); assign y = 3'd0 ^ a; endmodule")
            .unwrap();
        let sites = diff_sites(&a, &b).unwrap();
        assert_eq!(sites[0].signature(), "signed(shr)->const");
    }

    #[test]
    fn structural_change_is_opaque() {
        let a = parse("module m(input a, output y); assign y = a; endmodule").unwrap();
        let b = parse("module m(input a, output y); wire t; assign t = a; assign y = t; endmodule")
            .unwrap();
        assert!(diff_sites(&a, &b).is_none());
    }
}
