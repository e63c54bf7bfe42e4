//! Lowers a flattened design to a linear stack program over `u64` slots.

use crate::hdl::elab::{Flat, FlatProcess, Process};
use crate::hdl::{expr_width, BinaryOp, CastKind, Expr, Stmt, UnaryOp};

use super::SimError;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Op {
    Load(u32),
    Const(u64),
    /// `top = (top >> lsb) & mask`
    Select {
        lsb: u32,
        mask: u64,
    },
    Mask(u64),
    /// Sign-extends from `from` bits, then masks.
    SExt {
        from: u32,
        mask: u64,
    },
    Not(u64),
    Neg(u64),
    LNot,
    Add(u64),
    Sub(u64),
    And,
    Or,
    Xor,
    Shl(u64),
    Shr,
    Eq,
    Ne,
    Lt,
    Cat(u32),
    Jz(u32),
    Jmp(u32),
    Store(u32),
    Copy {
        from: u32,
        to: u32,
    },
}

pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Program {
    pub comb: Vec<Op>,
    pub ff: Vec<Op>,
    pub slots: usize,
    pub input_slots: Vec<u32>,
    pub output_slots: Vec<u32>,
}

struct Compiler<'a> {
    flat: &'a Flat,
    /// Shadow slot for each register written by a clocked process.
    next: Vec<Option<u32>>,
    slots: usize,
}

pub(crate) fn compile(flat: &Flat) -> Result<Program, SimError> {
    let mut c = Compiler {
        flat,
        next: vec![None; flat.signals.len()],
        slots: flat.signals.len(),
    };
    let mut comb = Vec::new();
    for p in &flat.comb {
        c.process(p, false, &mut comb)?;
    }
    let mut ff_writes = Vec::new();
    for p in &flat.ff {
        if let Process::Block { body } = &p.process {
            for s in body {
                s.writes(&mut ff_writes);
            }
        }
    }
    let mut prologue = Vec::new();
    let mut epilogue = Vec::new();
    for name in &ff_writes {
        let cur = c.slot(name)?;
        let shadow = c.slots as u32;
        c.slots += 1;
        c.next[cur as usize] = Some(shadow);
        prologue.push(Op::Copy {
            from: cur,
            to: shadow,
        });
        epilogue.push(Op::Copy {
            from: shadow,
            to: cur,
        });
    }
    let mut ff = prologue;
    for p in &flat.ff {
        c.process(p, true, &mut ff)?;
    }
    ff.extend(epilogue);
    let input_slots = flat
        .inputs
        .iter()
        .map(|(n, _)| c.slot(n))
        .collect::<Result<_, _>>()?;
    let output_slots = flat
        .outputs
        .iter()
        .map(|(n, _)| c.slot(n))
        .collect::<Result<_, _>>()?;
    Ok(Program {
        comb,
        ff,
        slots: c.slots,
        input_slots,
        output_slots,
    })
}

impl Compiler<'_> {
    fn slot(&self, name: &str) -> Result<u32, SimError> {
        self.flat
            .index
            .get(name)
            .map(|&i| i as u32)
            .ok_or_else(|| SimError::Width(format!("unresolved signal `{name}`")))
    }

    fn width_of(&self, name: &str) -> Result<u32, SimError> {
        self.flat
            .width(name)
            .ok_or_else(|| SimError::Width(format!("unresolved signal `{name}`")))
    }

    fn process(&self, p: &FlatProcess, clocked: bool, out: &mut Vec<Op>) -> Result<(), SimError> {
        match &p.process {
            Process::Assign { lhs, rhs } => self.assign(lhs, rhs, false, out),
            Process::Block { body } => self.stmts(body, clocked, out),
        }
    }

    fn assign(
        &self,
        lhs: &str,
        rhs: &Expr,
        nonblocking: bool,
        out: &mut Vec<Op>,
    ) -> Result<(), SimError> {
        let target = self.slot(lhs)?;
        let width = self.width_of(lhs)?;
        let (w, signed) = self.expr(rhs, out)?;
        resize(w, signed, width, out);
        let dest = if nonblocking {
            self.next[target as usize]
                .ok_or_else(|| SimError::Width(format!("`{lhs}` has no register shadow")))?
        } else {
            target
        };
        out.push(Op::Store(dest));
        Ok(())
    }

    fn stmts(&self, body: &[Stmt], clocked: bool, out: &mut Vec<Op>) -> Result<(), SimError> {
        for s in body {
            match s {
                Stmt::Blocking { lhs, rhs } => self.assign(lhs, rhs, false, out)?,
                Stmt::NonBlocking { lhs, rhs } => self.assign(lhs, rhs, clocked, out)?,
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    self.expr(cond, out)?;
                    let jz = out.len();
                    out.push(Op::Jz(0));
                    self.stmts(then_body, clocked, out)?;
                    if else_body.is_empty() {
                        out[jz] = Op::Jz(out.len() as u32);
                    } else {
                        let jmp = out.len();
                        out.push(Op::Jmp(0));
                        out[jz] = Op::Jz(out.len() as u32);
                        self.stmts(else_body, clocked, out)?;
                        out[jmp] = Op::Jmp(out.len() as u32);
                    }
                }
            }
        }
        Ok(())
    }

    /// Emits code leaving the value on the stack; returns (width, signed).
    fn expr(&self, e: &Expr, out: &mut Vec<Op>) -> Result<(u32, bool), SimError> {
        let width_of = |n: &str| self.flat.width(n);
        let w = expr_width(e, &width_of);
        if w == 0 || w > 64 {
            return Err(SimError::Width(format!("expression width {w}")));
        }
        let signed = match e {
            Expr::Const { value, .. } => {
                out.push(Op::Const(*value & mask(w)));
                false
            }
            Expr::Ref(name) => {
                out.push(Op::Load(self.slot(name)?));
                false
            }
            Expr::BitSelect { name, lsb, .. } => {
                out.push(Op::Load(self.slot(name)?));
                out.push(Op::Select {
                    lsb: *lsb,
                    mask: mask(w),
                });
                false
            }
            Expr::Concat(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    let (pw, _) = self.expr(p, out)?;
                    if i > 0 {
                        out.push(Op::Cat(pw));
                    }
                }
                false
            }
            Expr::Unary(op, inner) => {
                self.expr(inner, out)?;
                out.push(match op {
                    UnaryOp::BitNot => Op::Not(mask(w)),
                    UnaryOp::Neg => Op::Neg(mask(w)),
                    UnaryOp::LogicNot => Op::LNot,
                });
                false
            }
            Expr::Cast(kind, inner) => {
                self.expr(inner, out)?;
                *kind == CastKind::Signed
            }
            Expr::Binary(op, a, b) if op.is_shift() => {
                self.expr(a, out)?;
                self.expr(b, out)?;
                out.push(match op {
                    BinaryOp::Shl => Op::Shl(mask(w)),
                    _ => Op::Shr,
                });
                false
            }
            Expr::Binary(op, a, b) => {
                let wa = expr_width(a, &width_of);
                let wb = expr_width(b, &width_of);
                let operand = wa.max(wb);
                let (_, sa) = self.expr(a, out)?;
                resize(wa, sa, operand, out);
                let (_, sb) = self.expr(b, out)?;
                resize(wb, sb, operand, out);
                out.push(match op {
                    BinaryOp::Add => Op::Add(mask(w)),
                    BinaryOp::Sub => Op::Sub(mask(w)),
                    BinaryOp::And => Op::And,
                    BinaryOp::Or => Op::Or,
                    BinaryOp::Xor => Op::Xor,
                    BinaryOp::Eq => Op::Eq,
                    BinaryOp::Ne => Op::Ne,
                    BinaryOp::Lt => Op::Lt,
                    BinaryOp::Shl | BinaryOp::Shr => unreachable!("handled above"),
                });
                false
            }
            Expr::Ternary(c, t, f) => {
                self.expr(c, out)?;
                let jz = out.len();
                out.push(Op::Jz(0));
                let (wt, st) = self.expr(t, out)?;
                resize(wt, st, w, out);
                let jmp = out.len();
                out.push(Op::Jmp(0));
                out[jz] = Op::Jz(out.len() as u32);
                let (wf, sf) = self.expr(f, out)?;
                resize(wf, sf, w, out);
                out[jmp] = Op::Jmp(out.len() as u32);
                false
            }
        };
        Ok((w, signed))
    }
}

/// Converts a `from`-bit value to `to` bits: sign- or zero-extension when
/// widening, truncation when narrowing.
fn resize(from: u32, signed: bool, to: u32, out: &mut Vec<Op>) {
    if to > from {
        if signed {
            out.push(Op::SExt {
                from,
                mask: mask(to),
            });
        }
    } else if to < from {
        out.push(Op::Mask(mask(to)));
    }
}

/// Executes one phase program against the slot file.
pub(crate) fn exec(ops: &[Op], slots: &mut [u64], stack: &mut Vec<u64>) {
    stack.clear();
    let mut pc = 0usize;
    while pc < ops.len() {
        match ops[pc] {
            Op::Load(s) => stack.push(slots[s as usize]),
            Op::Const(v) => stack.push(v),
            Op::Select { lsb, mask } => {
                let v = stack.last_mut().expect("operand");
                *v = (*v >> lsb) & mask;
            }
            Op::Mask(m) => *stack.last_mut().expect("operand") &= m,
            Op::SExt { from, mask } => {
                let v = stack.last_mut().expect("operand");
                let sign = (*v >> (from - 1)) & 1;
                if sign == 1 {
                    *v |= !super::compile::mask(from);
                }
                *v &= mask;
            }
            Op::Not(m) => {
                let v = stack.last_mut().expect("operand");
                *v = !*v & m;
            }
            Op::Neg(m) => {
                let v = stack.last_mut().expect("operand");
                *v = v.wrapping_neg() & m;
            }
            Op::LNot => {
                let v = stack.last_mut().expect("operand");
                *v = (*v == 0) as u64;
            }
            Op::Jz(target) => {
                let v = stack.pop().expect("condition");
                if v == 0 {
                    pc = target as usize;
                    continue;
                }
            }
            Op::Jmp(target) => {
                pc = target as usize;
                continue;
            }
            Op::Store(s) => slots[s as usize] = stack.pop().expect("value"),
            Op::Copy { from, to } => slots[to as usize] = slots[from as usize],
            binary => {
                let b = stack.pop().expect("rhs");
                let a = stack.last_mut().expect("lhs");
                *a = match binary {
                    Op::Add(m) => a.wrapping_add(b) & m,
                    Op::Sub(m) => a.wrapping_sub(b) & m,
                    Op::And => *a & b,
                    Op::Or => *a | b,
                    Op::Xor => *a ^ b,
                    Op::Shl(m) => {
                        if b >= 64 {
                            0
                        } else {
                            (*a << b) & m
                        }
                    }
                    Op::Shr => {
                        if b >= 64 {
                            0
                        } else {
                            *a >> b
                        }
                    }
                    Op::Eq => (*a == b) as u64,
                    Op::Ne => (*a != b) as u64,
                    Op::Lt => (*a < b) as u64,
                    Op::Cat(shift) => {
                        if shift >= 64 {
                            b
                        } else {
                            (*a << shift) | b
                        }
                    }
                    _ => unreachable!("unary and control ops handled above"),
                };
            }
        }
        pc += 1;
    }
}
