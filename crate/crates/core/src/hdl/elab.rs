//! Hierarchy flattening and combinational scheduling.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::ast::*;
use super::error::{HdlError, ValidationRule};

/// A process of the flattened design. Signal names are hierarchical
/// (`u0.u1.x`), top-level signals keep their plain names.
#[derive(Clone, Debug)]
pub enum Process {
    Assign { lhs: String, rhs: Expr },
    Block { body: Vec<Stmt> },
}

#[derive(Clone, Debug)]
pub struct FlatProcess {
    pub process: Process,
    pub module: String,
    pub span: Span,
}

impl FlatProcess {
    fn writes(&self) -> Vec<String> {
        match &self.process {
            Process::Assign { lhs, .. } => vec![lhs.clone()],
            Process::Block { body } => {
                let mut out = Vec::new();
                body.iter().for_each(|s| s.writes(&mut out));
                out
            }
        }
    }

    fn reads(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.process {
            Process::Assign { rhs, .. } => rhs.reads(&mut out),
            Process::Block { body } => body
                .iter()
                .for_each(|s| s.for_each_expr(&mut |e| e.reads(&mut out))),
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct Flat {
    /// Every signal with its width, in declaration order.
    pub signals: Vec<(String, u32)>,
    pub index: BTreeMap<String, usize>,
    /// Top-level data inputs (clocks excluded), port order.
    pub inputs: Vec<(String, u32)>,
    pub outputs: Vec<(String, u32)>,
    /// Combinational processes in evaluation order.
    pub comb: Vec<FlatProcess>,
    pub ff: Vec<FlatProcess>,
}

impl Flat {
    pub fn width(&self, name: &str) -> Option<u32> {
        self.index.get(name).map(|&i| self.signals[i].1)
    }
}

/// Flattens a design whose modules individually validate and whose
/// hierarchy is acyclic.
pub fn elaborate(d: &Design) -> Result<Flat, HdlError> {
    let top = d.module(&d.top).ok_or_else(|| {
        HdlError::validation(
            ValidationRule::MissingTop,
            Span::default(),
            "missing top module",
        )
    })?;
    let mut flat = Flat::default();
    let mut comb = Vec::new();
    flatten(d, top, "", &mut flat, &mut comb, 0)?;
    let clocks = top.clock_ports(d);
    flat.inputs = top
        .inputs()
        .filter(|p| !clocks.contains(&p.name))
        .map(|p| (p.name.clone(), p.width))
        .collect();
    flat.outputs = top.outputs().map(|p| (p.name.clone(), p.width)).collect();
    flat.comb = schedule(comb)?;
    Ok(flat)
}

fn flatten(
    d: &Design,
    m: &AstModule,
    prefix: &str,
    flat: &mut Flat,
    comb: &mut Vec<FlatProcess>,
    depth: usize,
) -> Result<(), HdlError> {
    if depth > d.modules.len() {
        return Err(HdlError::validation(
            ValidationRule::InstantiationCycle,
            m.span,
            "instantiation nesting exceeds module count",
        ));
    }
    let qualify = |n: &str| format!("{prefix}{n}");
    for (name, width) in m
        .ports
        .iter()
        .map(|p| (&p.name, p.width))
        .chain(m.nets.iter().map(|n| (&n.name, n.width)))
    {
        let q = qualify(name);
        flat.index.insert(q.clone(), flat.signals.len());
        flat.signals.push((q, width));
    }
    let rename = |n: &str| Some(format!("{prefix}{n}"));
    for item in &m.items {
        let mut item = item.clone();
        if !prefix.is_empty() && !matches!(item, Item::Instance(_)) {
            item.rename(&rename);
        }
        match item {
            Item::Assign(a) => comb.push(FlatProcess {
                process: Process::Assign {
                    lhs: a.lhs,
                    rhs: a.rhs,
                },
                module: m.name.clone(),
                span: a.span,
            }),
            Item::AlwaysComb(a) => comb.push(FlatProcess {
                process: Process::Block { body: a.body },
                module: m.name.clone(),
                span: a.span,
            }),
            Item::AlwaysFf(a) => flat.ff.push(FlatProcess {
                process: Process::Block { body: a.body },
                module: m.name.clone(),
                span: a.span,
            }),
            Item::Instance(inst) => {
                let child = d.module(&inst.module).ok_or_else(|| {
                    HdlError::validation(
                        ValidationRule::UnknownModule,
                        inst.span,
                        format!("unknown module `{}`", inst.module),
                    )
                })?;
                let child_prefix = format!("{prefix}{}.", inst.name);
                flatten(d, child, &child_prefix, flat, comb, depth + 1)?;
                let clocks = child.clock_ports(d);
                for c in &inst.connections {
                    let Some(port) = child.port(&c.port) else {
                        continue;
                    };
                    if clocks.contains(&c.port) {
                        continue;
                    }
                    let inner = format!("{child_prefix}{}", c.port);
                    let mut outer = c.expr.clone();
                    outer.rename(&rename);
                    let process = match port.direction {
                        Direction::Input => Process::Assign {
                            lhs: inner,
                            rhs: outer,
                        },
                        Direction::Output => {
                            let Expr::Ref(target) = outer else { continue };
                            Process::Assign {
                                lhs: target,
                                rhs: Expr::Ref(inner),
                            }
                        }
                    };
                    comb.push(FlatProcess {
                        process,
                        module: m.name.clone(),
                        span: inst.span,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Orders combinational processes so every process runs after the drivers of
/// the signals it reads. Ties keep source order.
fn schedule(procs: Vec<FlatProcess>) -> Result<Vec<FlatProcess>, HdlError> {
    let mut driver: BTreeMap<String, usize> = BTreeMap::new();
    let writes: Vec<Vec<String>> = procs.iter().map(FlatProcess::writes).collect();
    for (i, ws) in writes.iter().enumerate() {
        for w in ws {
            driver.insert(w.clone(), i);
        }
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); procs.len()];
    let mut indeg = vec![0usize; procs.len()];
    for (i, p) in procs.iter().enumerate() {
        let mut preds: Vec<usize> = p
            .reads()
            .iter()
            .filter_map(|r| driver.get(r).copied())
            .filter(|&j| j != i)
            .collect();
        preds.sort_unstable();
        preds.dedup();
        for j in preds {
            succ[j].push(i);
            indeg[i] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..procs.len())
        .filter(|&i| indeg[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(procs.len());
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &s in &succ[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    if order.len() < procs.len() {
        let stuck = (0..procs.len())
            .find(|&i| indeg[i] > 0)
            .expect("cycle member");
        return Err(HdlError::validation(
            ValidationRule::CombinationalLoop,
            procs[stuck].span,
            format!(
                "combinational loop through `{}` in module `{}`",
                writes[stuck].first().map(String::as_str).unwrap_or("?"),
                procs[stuck].module
            ),
        ));
    }
    let mut slots: Vec<Option<FlatProcess>> = procs.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|i| slots[i].take().expect("each index once"))
        .collect())
}
