//! Subset validator: declarations, drivers, widths, clocks, hierarchy.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::elab;
use super::error::{HdlError, ValidationRule};

/// Width of an expression under the self-determined sizing rules.
/// Unknown identifiers count as width 0.
pub fn expr_width(e: &Expr, lookup: &dyn Fn(&str) -> Option<u32>) -> u32 {
    match e {
        Expr::Const { width, .. } => *width,
        Expr::Ref(name) => lookup(name).unwrap_or(0),
        Expr::BitSelect { msb, lsb, .. } => msb.saturating_sub(*lsb) + 1,
        Expr::Concat(parts) => parts.iter().map(|p| expr_width(p, lookup)).sum(),
        Expr::Unary(UnaryOp::LogicNot, _) => 1,
        Expr::Unary(_, inner) | Expr::Cast(_, inner) => expr_width(inner, lookup),
        Expr::Binary(op, a, b) => {
            if op.is_comparison() {
                1
            } else if op.is_shift() {
                expr_width(a, lookup)
            } else {
                expr_width(a, lookup).max(expr_width(b, lookup))
            }
        }
        Expr::Ternary(_, t, f) => expr_width(t, lookup).max(expr_width(f, lookup)),
    }
}

pub fn module_width(m: &AstModule, e: &Expr) -> u32 {
    expr_width(e, &|n| m.width_of(n))
}

/// First module in source order that no other module instantiates.
pub fn infer_top(modules: &[AstModule]) -> Option<String> {
    let instantiated: BTreeSet<&str> = modules
        .iter()
        .flat_map(|m| m.items.iter())
        .filter_map(|i| match i {
            Item::Instance(inst) => Some(inst.module.as_str()),
            _ => None,
        })
        .collect();
    modules
        .iter()
        .find(|m| !instantiated.contains(m.name.as_str()))
        .map(|m| m.name.clone())
}

pub fn validate(d: &Design) -> Result<(), HdlError> {
    let mut seen = BTreeSet::new();
    for m in &d.modules {
        if !seen.insert(m.name.as_str()) {
            return Err(HdlError::validation(
                ValidationRule::DuplicateModule,
                m.span,
                format!("module `{}` defined more than once", m.name),
            ));
        }
    }
    if d.module(&d.top).is_none() {
        return Err(HdlError::validation(
            ValidationRule::MissingTop,
            Span::default(),
            format!("top module `{}` not found", d.top),
        ));
    }
    check_hierarchy(d)?;
    for m in &d.modules {
        validate_module(d, m)?;
    }
    elab::elaborate(d).map(|_| ())
}

fn check_hierarchy(d: &Design) -> Result<(), HdlError> {
    for m in &d.modules {
        for item in &m.items {
            if let Item::Instance(inst) = item {
                if d.module(&inst.module).is_none() {
                    return Err(HdlError::validation(
                        ValidationRule::UnknownModule,
                        inst.span,
                        format!("unknown module `{}`", inst.module),
                    ));
                }
            }
        }
    }
    // Depth-first search for a back edge.
    fn visit<'a>(
        d: &'a Design,
        m: &'a AstModule,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), HdlError> {
        match state.get(m.name.as_str()) {
            Some(2) => return Ok(()),
            Some(1) => {
                return Err(HdlError::validation(
                    ValidationRule::InstantiationCycle,
                    m.span,
                    format!("module `{}` instantiates itself", m.name),
                ))
            }
            _ => {}
        }
        state.insert(&m.name, 1);
        for item in &m.items {
            if let Item::Instance(inst) = item {
                let child = d.module(&inst.module).expect("checked above");
                visit(d, child, state)?;
            }
        }
        state.insert(&m.name, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for m in &d.modules {
        visit(d, m, &mut state)?;
    }
    Ok(())
}

struct Ctx<'a> {
    d: &'a Design,
    m: &'a AstModule,
    clocks: Vec<String>,
    span: Span,
}

impl Ctx<'_> {
    fn err<T>(&self, rule: ValidationRule, message: impl Into<String>) -> Result<T, HdlError> {
        Err(HdlError::validation(rule, self.span, message))
    }

    fn check_expr(&self, e: &Expr) -> Result<u32, HdlError> {
        match e {
            Expr::Const { width, .. } => {
                if *width == 0 {
                    return self.err(ValidationRule::ZeroWidthConstant, "zero-width constant");
                }
                if *width > 64 {
                    return self.err(
                        ValidationRule::WidthOutOfRange,
                        format!("constant width {width} exceeds 64"),
                    );
                }
            }
            Expr::Ref(name) | Expr::BitSelect { name, .. } => {
                let Some(width) = self.m.width_of(name) else {
                    return self.err(
                        ValidationRule::UndeclaredIdentifier,
                        format!("`{name}` is not declared"),
                    );
                };
                if self.clocks.contains(name) {
                    return self.err(
                        ValidationRule::Clock,
                        format!("clock `{name}` used as data"),
                    );
                }
                if let Expr::BitSelect { msb, lsb, .. } = e {
                    if msb < lsb || *msb >= width {
                        return self.err(
                            ValidationRule::BadBitSelect,
                            format!("`{name}[{msb}:{lsb}]` outside [{}:0]", width - 1),
                        );
                    }
                }
            }
            _ => {
                for child in e.children() {
                    self.check_expr(child)?;
                }
            }
        }
        let w = module_width(self.m, e);
        if !(1..=64).contains(&w) {
            return self.err(
                ValidationRule::WidthOutOfRange,
                format!("expression width {w} outside [1, 64]"),
            );
        }
        Ok(w)
    }

    fn check_target(&self, lhs: &str, want: NetKind) -> Result<(), HdlError> {
        let Some((_, kind)) = self.m.signal(lhs) else {
            return self.err(
                ValidationRule::UndeclaredIdentifier,
                format!("`{lhs}` is not declared"),
            );
        };
        if let Some(p) = self.m.port(lhs) {
            if p.direction == Direction::Input {
                return self.err(
                    ValidationRule::DrivenInput,
                    format!("input `{lhs}` is driven"),
                );
            }
        }
        if kind != want {
            let what = match want {
                NetKind::Wire => "a wire",
                NetKind::Reg => "a reg",
            };
            return self.err(
                ValidationRule::AssignKind,
                format!("`{lhs}` must be {what}"),
            );
        }
        Ok(())
    }

    fn check_stmts(&self, body: &[Stmt], ff: bool) -> Result<(), HdlError> {
        for s in body {
            match s {
                Stmt::Blocking { lhs, rhs } | Stmt::NonBlocking { lhs, rhs } => {
                    if matches!(s, Stmt::NonBlocking { .. }) != ff {
                        let msg = if ff {
                            "blocking assignment in clocked block"
                        } else {
                            "nonblocking assignment in combinational block"
                        };
                        return self.err(ValidationRule::AssignmentStyle, msg);
                    }
                    self.check_target(lhs, NetKind::Reg)?;
                    self.check_expr(rhs)?;
                }
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    self.check_expr(cond)?;
                    self.check_stmts(then_body, ff)?;
                    self.check_stmts(else_body, ff)?;
                }
            }
        }
        Ok(())
    }
}

fn validate_module(d: &Design, m: &AstModule) -> Result<(), HdlError> {
    let mut ctx = Ctx {
        d,
        m,
        clocks: m.clock_ports(d),
        span: m.span,
    };
    let mut names = BTreeSet::new();
    for (name, width) in m
        .ports
        .iter()
        .map(|p| (&p.name, p.width))
        .chain(m.nets.iter().map(|n| (&n.name, n.width)))
    {
        if !names.insert(name.as_str()) {
            return ctx.err(
                ValidationRule::DuplicateDeclaration,
                format!("`{name}` declared twice"),
            );
        }
        if !(1..=64).contains(&width) {
            return ctx.err(
                ValidationRule::WidthOutOfRange,
                format!("`{name}` has width {width}"),
            );
        }
    }
    for p in m.ports.iter().filter(|p| p.direction == Direction::Input) {
        if p.kind == NetKind::Reg {
            ctx.span = m.span;
            return ctx.err(
                ValidationRule::AssignKind,
                format!("input `{}` declared reg", p.name),
            );
        }
    }
    for item in &m.items {
        if let Item::Instance(inst) = item {
            if !names.insert(inst.name.as_str()) {
                ctx.span = inst.span;
                return ctx.err(
                    ValidationRule::DuplicateDeclaration,
                    format!("`{}` declared twice", inst.name),
                );
            }
        }
    }

    let mut driver: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, item) in m.items.iter().enumerate() {
        ctx.span = item.span();
        match item {
            Item::Assign(a) => {
                ctx.check_target(&a.lhs, NetKind::Wire)?;
                ctx.check_expr(&a.rhs)?;
            }
            Item::AlwaysComb(a) => ctx.check_stmts(&a.body, false)?,
            Item::AlwaysFf(a) => {
                match m.port(&a.clock) {
                    Some(p) if p.direction == Direction::Input && p.width == 1 => {}
                    _ => {
                        return ctx.err(
                            ValidationRule::Clock,
                            format!("clock `{}` must be a 1-bit input port", a.clock),
                        )
                    }
                }
                ctx.check_stmts(&a.body, true)?;
            }
            Item::Instance(inst) => check_instance(&ctx, inst)?,
        }
        for name in item.drives(Some(d)) {
            if driver.insert(name.clone(), idx).is_some() {
                return ctx.err(
                    ValidationRule::MultipleDrivers,
                    format!("`{name}` has more than one driver"),
                );
            }
        }
    }
    Ok(())
}

fn check_instance(ctx: &Ctx<'_>, inst: &Instantiation) -> Result<(), HdlError> {
    let child = ctx.d.module(&inst.module).expect("hierarchy checked");
    let child_clocks = child.clock_ports(ctx.d);
    let mut connected = BTreeSet::new();
    for c in &inst.connections {
        let Some(port) = child.port(&c.port) else {
            return ctx.err(
                ValidationRule::PortConnection,
                format!("`{}` has no port `{}`", child.name, c.port),
            );
        };
        if !connected.insert(c.port.as_str()) {
            return ctx.err(
                ValidationRule::PortConnection,
                format!("port `{}` connected twice", c.port),
            );
        }
        if child_clocks.contains(&c.port) {
            match &c.expr {
                Expr::Ref(name) if ctx.clocks.contains(name) => continue,
                _ => {
                    return ctx.err(
                        ValidationRule::Clock,
                        format!("clock port `{}` must connect to a clock input", c.port),
                    )
                }
            }
        }
        match port.direction {
            Direction::Input => {
                ctx.check_expr(&c.expr)?;
            }
            Direction::Output => {
                let Expr::Ref(name) = &c.expr else {
                    return ctx.err(
                        ValidationRule::PortConnection,
                        format!("output `{}` must connect to a plain identifier", c.port),
                    );
                };
                ctx.check_target(name, NetKind::Wire)?;
                if ctx.m.width_of(name) != Some(port.width) {
                    return ctx.err(
                        ValidationRule::PortConnection,
                        format!("width mismatch on output `{}`", c.port),
                    );
                }
            }
        }
    }
    if let Some(p) = child
        .ports
        .iter()
        .find(|p| !connected.contains(p.name.as_str()))
    {
        return ctx.err(
            ValidationRule::PortConnection,
            format!("port `{}` of `{}` is unconnected", p.name, child.name),
        );
    }
    Ok(())
}
