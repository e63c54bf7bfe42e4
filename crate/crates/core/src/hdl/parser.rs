//! Recursive-descent parser for the subset grammar.

use super::ast::*;
use super::error::HdlError;
use super::lexer::{lex, Tok, Token};

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

/// Parses modules without validating them or choosing a top.
pub fn parse_modules(src: &str) -> Result<Vec<AstModule>, HdlError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
    };
    let mut modules = Vec::new();
    while !p.at_eof() {
        modules.push(p.module()?);
    }
    Ok(modules)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn start(&self) -> usize {
        self.toks[self.pos].start
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: &str) -> Result<T, HdlError> {
        Err(HdlError::syntax(self.start(), expected))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), HdlError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), HdlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String, HdlError> {
        match self.peek() {
            Tok::Ident(name) if !is_keyword(name) => {
                let name = name.clone();
                self.bump();
                Ok(name)
            }
            _ => self.err("identifier"),
        }
    }

    fn number(&mut self) -> Result<u64, HdlError> {
        match self.peek() {
            Tok::Number { value, .. } => {
                let v = *value;
                self.bump();
                Ok(v)
            }
            _ => self.err("number"),
        }
    }

    fn small_number(&mut self) -> Result<u32, HdlError> {
        let at = self.start();
        let v = self.number()?;
        u32::try_from(v).map_err(|_| HdlError::syntax(at, "index below 2^32"))
    }

    fn module(&mut self) -> Result<AstModule, HdlError> {
        let start = self.start();
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut module = AstModule::new(name);
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                self.port_list(&mut module)?;
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        while !self.is_kw("endmodule") {
            if self.at_eof() {
                return self.err("`endmodule`");
            }
            self.module_item(&mut module)?;
        }
        self.bump();
        module.span = Span::new(start, self.prev_end());
        Ok(module)
    }

    fn range(&mut self) -> Result<u32, HdlError> {
        if !self.eat_sym("[") {
            return Ok(1);
        }
        let at = self.start();
        let msb = self.small_number()?;
        self.expect_sym(":")?;
        let lsb = self.small_number()?;
        self.expect_sym("]")?;
        if lsb != 0 || msb < lsb {
            return Err(HdlError::syntax(at, "range of the form [N:0]"));
        }
        Ok(msb + 1)
    }

    fn port_list(&mut self, module: &mut AstModule) -> Result<(), HdlError> {
        let mut current: Option<(Direction, NetKind, u32)> = None;
        loop {
            let direction = if self.eat_kw("input") {
                Some(Direction::Input)
            } else if self.eat_kw("output") {
                Some(Direction::Output)
            } else {
                None
            };
            if let Some(direction) = direction {
                let kind = if self.eat_kw("reg") {
                    NetKind::Reg
                } else {
                    self.eat_kw("wire");
                    NetKind::Wire
                };
                let width = self.range()?;
                current = Some((direction, kind, width));
            }
            let Some((direction, kind, width)) = current else {
                return self.err("port direction");
            };
            let name = self.ident()?;
            module.ports.push(PortDecl {
                name,
                direction,
                kind,
                width,
            });
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn module_item(&mut self, module: &mut AstModule) -> Result<(), HdlError> {
        let start = self.start();
        if self.is_kw("wire") || self.is_kw("reg") {
            let kind = if self.eat_kw("reg") {
                NetKind::Reg
            } else {
                self.bump();
                NetKind::Wire
            };
            let width = self.range()?;
            loop {
                let name = self.ident()?;
                module.nets.push(NetDecl { name, kind, width });
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.eat_kw("assign") {
            let lhs = self.ident()?;
            self.expect_sym("=")?;
            let rhs = self.expr()?;
            self.expect_sym(";")?;
            module.items.push(Item::Assign(ContinuousAssign {
                lhs,
                rhs,
                span: Span::new(start, self.prev_end()),
            }));
            return Ok(());
        }
        if self.eat_kw("always") {
            self.expect_sym("@")?;
            let clock = if self.eat_sym("*") {
                None
            } else {
                self.expect_sym("(")?;
                let clock = if self.eat_sym("*") {
                    None
                } else if self.eat_kw("posedge") {
                    Some(self.ident()?)
                } else {
                    return self.err("`*` or `posedge`");
                };
                self.expect_sym(")")?;
                clock
            };
            let body = self.stmt_block()?;
            let span = Span::new(start, self.prev_end());
            module.items.push(match clock {
                None => Item::AlwaysComb(AlwaysComb { body, span }),
                Some(clock) => Item::AlwaysFf(AlwaysFf { clock, body, span }),
            });
            return Ok(());
        }
        if matches!(self.peek(), Tok::Ident(n) if !is_keyword(n)) {
            let module_name = self.ident()?;
            let name = self.ident()?;
            self.expect_sym("(")?;
            let mut connections = Vec::new();
            if !self.is_sym(")") {
                loop {
                    self.expect_sym(".")?;
                    let port = self.ident()?;
                    self.expect_sym("(")?;
                    let expr = self.expr()?;
                    self.expect_sym(")")?;
                    connections.push(Connection { port, expr });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            module.items.push(Item::Instance(Instantiation {
                module: module_name,
                name,
                connections,
                span: Span::new(start, self.prev_end()),
            }));
            return Ok(());
        }
        self.err("module item")
    }

    /// One statement, with `begin ... end` flattened into a list.
    fn stmt_block(&mut self) -> Result<Vec<Stmt>, HdlError> {
        let mut out = Vec::new();
        self.stmt_into(&mut out)?;
        Ok(out)
    }

    fn stmt_into(&mut self, out: &mut Vec<Stmt>) -> Result<(), HdlError> {
        if self.eat_kw("begin") {
            while !self.eat_kw("end") {
                if self.at_eof() {
                    return self.err("`end`");
                }
                self.stmt_into(out)?;
            }
            return Ok(());
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then_body = self.stmt_block()?;
            let else_body = if self.eat_kw("else") {
                self.stmt_block()?
            } else {
                Vec::new()
            };
            out.push(Stmt::If {
                cond,
                then_body,
                else_body,
            });
            return Ok(());
        }
        if self.eat_sym(";") {
            return Ok(());
        }
        let lhs = self.ident()?;
        let stmt = if self.eat_sym("=") {
            Stmt::Blocking {
                lhs,
                rhs: self.expr()?,
            }
        } else if self.eat_sym("<=") {
            Stmt::NonBlocking {
                lhs,
                rhs: self.expr()?,
            }
        } else {
            return self.err("`=` or `<=`");
        };
        self.expect_sym(";")?;
        out.push(stmt);
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, HdlError> {
        let cond = self.binary(0)?;
        if self.eat_sym("?") {
            let then = self.expr()?;
            self.expect_sym(":")?;
            let otherwise = self.expr()?;
            return Ok(Expr::ternary(cond, then, otherwise));
        }
        Ok(cond)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, HdlError> {
        const LEVELS: [&[(&str, BinaryOp)]; 7] = [
            &[("|", BinaryOp::Or)],
            &[("^", BinaryOp::Xor)],
            &[("&", BinaryOp::And)],
            &[("==", BinaryOp::Eq), ("!=", BinaryOp::Ne)],
            &[("<", BinaryOp::Lt)],
            &[("<<", BinaryOp::Shl), (">>", BinaryOp::Shr)],
            &[("+", BinaryOp::Add), ("-", BinaryOp::Sub)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.eat_sym(sym) {
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr::binary(*op, lhs, rhs);
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, HdlError> {
        for (sym, op) in [
            ("~", UnaryOp::BitNot),
            ("-", UnaryOp::Neg),
            ("!", UnaryOp::LogicNot),
        ] {
            if self.eat_sym(sym) {
                return Ok(Expr::unary(op, self.unary()?));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, HdlError> {
        match self.peek().clone() {
            Tok::Number { width, value } => {
                self.bump();
                let width = width.unwrap_or(32);
                let value = if width >= 64 {
                    value
                } else {
                    value & ((1u64 << width) - 1)
                };
                Ok(Expr::Const { width, value })
            }
            Tok::System(name) => {
                let kind = match name.as_str() {
                    "signed" => CastKind::Signed,
                    "unsigned" => CastKind::Unsigned,
                    _ => return self.err("`$signed` or `$unsigned`"),
                };
                self.bump();
                self.expect_sym("(")?;
                let inner = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::cast(kind, inner))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                let mut parts = vec![self.expr()?];
                while self.eat_sym(",") {
                    parts.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::Concat(parts))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat_sym("[") {
                    let msb = self.small_number()?;
                    let lsb = if self.eat_sym(":") {
                        self.small_number()?
                    } else {
                        msb
                    };
                    self.expect_sym("]")?;
                    return Ok(Expr::BitSelect { name, msb, lsb });
                }
                Ok(Expr::Ref(name))
            }
            _ => self.err("expression"),
        }
    }
}

const KEYWORDS: [&str; 13] = [
    "module",
    "endmodule",
    "input",
    "output",
    "wire",
    "reg",
    "assign",
    "always",
    "posedge",
    "begin",
    "end",
    "if",
    "else",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Used by tests that need an expression without a surrounding module.
#[cfg(test)]
pub fn parse_expr(src: &str) -> Result<Expr, HdlError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
    };
    let e = p.expr()?;
    if !p.at_eof() {
        return p.err("end of expression");
    }
    Ok(e)
}
