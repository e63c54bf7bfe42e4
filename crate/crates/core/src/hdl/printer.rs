//! Canonical printer: two-space indent, one statement per line.

use std::fmt::Write;

use super::ast::*;

pub fn print(d: &Design) -> String {
    let mut out = String::new();
    for (i, m) in d.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_module(m, &mut out);
    }
    out
}

pub fn print_module(m: &AstModule, out: &mut String) {
    let ports: Vec<String> = m.ports.iter().map(port_decl).collect();
    let _ = writeln!(out, "module {}({});", m.name, ports.join(", "));
    for n in &m.nets {
        let kind = match n.kind {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
        };
        let _ = writeln!(out, "  {}{}{};", kind, range(n.width), n.name);
    }
    for item in &m.items {
        print_item(item, out);
    }
    out.push_str("endmodule\n");
}

fn port_decl(p: &PortDecl) -> String {
    let dir = match p.direction {
        Direction::Input => "input",
        Direction::Output => "output",
    };
    let kind = match p.kind {
        NetKind::Wire => "",
        NetKind::Reg => " reg",
    };
    format!("{dir}{kind}{}{}", range(p.width), p.name)
}

fn range(width: u32) -> String {
    if width == 1 {
        " ".to_string()
    } else {
        format!(" [{}:0] ", width - 1)
    }
}

fn print_item(item: &Item, out: &mut String) {
    match item {
        Item::Assign(a) => {
            let _ = writeln!(out, "  assign {} = {};", a.lhs, expr(&a.rhs));
        }
        Item::AlwaysComb(a) => {
            out.push_str("  always @(*) begin\n");
            print_body(&a.body, 2, out);
            out.push_str("  end\n");
        }
        Item::AlwaysFf(a) => {
            let _ = writeln!(out, "  always @(posedge {}) begin", a.clock);
            print_body(&a.body, 2, out);
            out.push_str("  end\n");
        }
        Item::Instance(inst) => {
            let conns: Vec<String> = inst
                .connections
                .iter()
                .map(|c| format!(".{}({})", c.port, expr(&c.expr)))
                .collect();
            let _ = writeln!(
                out,
                "  {} {}({});",
                inst.module,
                inst.name,
                conns.join(", ")
            );
        }
    }
}

fn print_body(body: &[Stmt], level: usize, out: &mut String) {
    for s in body {
        print_stmt(s, level, out);
    }
}

fn print_stmt(s: &Stmt, level: usize, out: &mut String) {
    let pad = "  ".repeat(level);
    match s {
        Stmt::Blocking { lhs, rhs } => {
            let _ = writeln!(out, "{pad}{lhs} = {};", expr(rhs));
        }
        Stmt::NonBlocking { lhs, rhs } => {
            let _ = writeln!(out, "{pad}{lhs} <= {};", expr(rhs));
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = writeln!(out, "{pad}if ({}) begin", expr(cond));
            print_body(then_body, level + 1, out);
            if else_body.is_empty() {
                let _ = writeln!(out, "{pad}end");
            } else {
                let _ = writeln!(out, "{pad}end else begin");
                print_body(else_body, level + 1, out);
                let _ = writeln!(out, "{pad}end");
            }
        }
    }
}

/// Prints an expression. Every compound operand is parenthesized, so the
/// output never depends on operator precedence.
pub fn expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn is_atomic(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Const { .. }
            | Expr::Ref(_)
            | Expr::BitSelect { .. }
            | Expr::Concat(_)
            | Expr::Cast(..)
    )
}

fn write_operand(e: &Expr, out: &mut String) {
    if is_atomic(e) || matches!(e, Expr::Unary(..)) {
        write_expr(e, out);
    } else {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Const { width, value } => {
            let _ = match width {
                1 => write!(out, "1'b{value}"),
                32 => write!(out, "{value}"),
                _ => write!(out, "{width}'d{value}"),
            };
        }
        Expr::Ref(name) => out.push_str(name),
        Expr::BitSelect { name, msb, lsb } => {
            let _ = if msb == lsb {
                write!(out, "{name}[{msb}]")
            } else {
                write!(out, "{name}[{msb}:{lsb}]")
            };
        }
        Expr::Concat(parts) => {
            out.push('{');
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(p, out);
            }
            out.push('}');
        }
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnaryOp::BitNot => "~",
                UnaryOp::Neg => "-",
                UnaryOp::LogicNot => "!",
            });
            if is_atomic(inner) {
                write_expr(inner, out);
            } else {
                out.push('(');
                write_expr(inner, out);
                out.push(')');
            }
        }
        Expr::Binary(op, a, b) => {
            write_operand(a, out);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(b, out);
        }
        Expr::Ternary(c, t, f) => {
            write_operand(c, out);
            out.push_str(" ? ");
            write_operand(t, out);
            out.push_str(" : ");
            write_operand(f, out);
        }
        Expr::Cast(kind, inner) => {
            out.push_str(match kind {
                CastKind::Signed => "$signed(",
                CastKind::Unsigned => "$unsigned(",
            });
            write_expr(inner, out);
            out.push(')');
        }
    }
}
