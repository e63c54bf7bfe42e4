//! Syntax tree for the synthesizable Verilog subset.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Byte range into the source a node was parsed from.
///
/// Spans never participate in equality: two trees that differ only in where
/// they came from compare equal.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetKind {
    Wire,
    Reg,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: String,
    pub direction: Direction,
    pub kind: NetKind,
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDecl {
    pub name: String,
    pub kind: NetKind,
    pub width: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    /// `~`
    BitNot,
    /// `-`
    Neg,
    /// `!`
    LogicNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 10] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Xor,
        BinaryOp::Shl,
        BinaryOp::Shr,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
        }
    }

    /// Result is a single bit regardless of operand widths.
    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, BinaryOp::Shl | BinaryOp::Shr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CastKind {
    Signed,
    Unsigned,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Const {
        width: u32,
        value: u64,
    },
    Ref(String),
    /// `name[msb:lsb]`, or `name[i]` when `msb == lsb`.
    BitSelect {
        name: String,
        msb: u32,
        lsb: u32,
    },
    Concat(Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Cast(CastKind, Box<Expr>),
}

impl Expr {
    pub fn constant(width: u32, value: u64) -> Self {
        Expr::Const { width, value }
    }

    pub fn reference(name: impl Into<String>) -> Self {
        Expr::Ref(name.into())
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Self {
        Expr::Unary(op, Box::new(operand))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn ternary(cond: Expr, then: Expr, otherwise: Expr) -> Self {
        Expr::Ternary(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    pub fn cast(kind: CastKind, operand: Expr) -> Self {
        Expr::Cast(kind, Box::new(operand))
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const { .. } | Expr::Ref(_) | Expr::BitSelect { .. } => Vec::new(),
            Expr::Concat(parts) => parts.iter().collect(),
            Expr::Unary(_, e) | Expr::Cast(_, e) => vec![e],
            Expr::Binary(_, a, b) => vec![a, b],
            Expr::Ternary(c, t, e) => vec![c, t, e],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Const { .. } | Expr::Ref(_) | Expr::BitSelect { .. } => Vec::new(),
            Expr::Concat(parts) => parts.iter_mut().collect(),
            Expr::Unary(_, e) | Expr::Cast(_, e) => vec![e],
            Expr::Binary(_, a, b) => vec![a, b],
            Expr::Ternary(c, t, e) => vec![c, t, e],
        }
    }

    /// Signal names read by this expression, in first-occurrence order.
    pub fn reads(&self, out: &mut Vec<String>) {
        match self {
            Expr::Ref(name) | Expr::BitSelect { name, .. } => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            _ => {
                for child in self.children() {
                    child.reads(out);
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .children()
            .iter()
            .map(|c| c.node_count())
            .sum::<usize>()
    }

    /// Maximum number of ternary nodes on any root-to-leaf path.
    pub fn ternary_depth(&self) -> usize {
        let below = self
            .children()
            .iter()
            .map(|c| c.ternary_depth())
            .max()
            .unwrap_or(0);
        match self {
            Expr::Ternary(..) => below + 1,
            _ => below,
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn rename(&mut self, map: &dyn Fn(&str) -> Option<String>) {
        match self {
            Expr::Ref(name) | Expr::BitSelect { name, .. } => {
                if let Some(new) = map(name) {
                    *name = new;
                }
            }
            _ => {
                for child in self.children_mut() {
                    child.rename(map);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stmt {
    Blocking {
        lhs: String,
        rhs: Expr,
    },
    NonBlocking {
        lhs: String,
        rhs: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
}

impl Stmt {
    pub fn node_count(&self) -> usize {
        match self {
            Stmt::Blocking { rhs, .. } | Stmt::NonBlocking { rhs, .. } => 1 + rhs.node_count(),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                1 + cond.node_count()
                    + then_body.iter().map(Stmt::node_count).sum::<usize>()
                    + else_body.iter().map(Stmt::node_count).sum::<usize>()
            }
        }
    }

    /// Statements counted the way size budgets count them: every assignment
    /// and every `if` is one statement.
    pub fn statement_count(&self) -> usize {
        match self {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                1 + then_body.iter().map(Stmt::statement_count).sum::<usize>()
                    + else_body.iter().map(Stmt::statement_count).sum::<usize>()
            }
            _ => 1,
        }
    }

    pub fn for_each_expr<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Stmt::Blocking { rhs, .. } | Stmt::NonBlocking { rhs, .. } => f(rhs),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                f(cond);
                for s in then_body.iter().chain(else_body) {
                    s.for_each_expr(f);
                }
            }
        }
    }

    pub fn for_each_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Stmt::Blocking { rhs, .. } | Stmt::NonBlocking { rhs, .. } => f(rhs),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                f(cond);
                for s in then_body.iter_mut().chain(else_body.iter_mut()) {
                    s.for_each_expr_mut(f);
                }
            }
        }
    }

    /// Signals assigned anywhere in this statement, first-occurrence order.
    pub fn writes(&self, out: &mut Vec<String>) {
        match self {
            Stmt::Blocking { lhs, .. } | Stmt::NonBlocking { lhs, .. } => {
                if !out.iter().any(|n| n == lhs) {
                    out.push(lhs.clone());
                }
            }
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                for s in then_body.iter().chain(else_body) {
                    s.writes(out);
                }
            }
        }
    }

    pub fn rename(&mut self, map: &dyn Fn(&str) -> Option<String>) {
        match self {
            Stmt::Blocking { lhs, rhs } | Stmt::NonBlocking { lhs, rhs } => {
                if let Some(new) = map(lhs) {
                    *lhs = new;
                }
                rhs.rename(map);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                cond.rename(map);
                for s in then_body.iter_mut().chain(else_body.iter_mut()) {
                    s.rename(map);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub port: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuousAssign {
    pub lhs: String,
    pub rhs: Expr,
    pub span: Span,
}

/// `always @(*)` with blocking assignments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlwaysComb {
    pub body: Vec<Stmt>,
    pub span: Span,
}

/// `always @(posedge clock)` with nonblocking assignments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlwaysFf {
    pub clock: String,
    pub body: Vec<Stmt>,
    pub span: Span,
}

/// Module instantiation with named port connections.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instantiation {
    pub module: String,
    pub name: String,
    pub connections: Vec<Connection>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Item {
    Assign(ContinuousAssign),
    AlwaysComb(AlwaysComb),
    AlwaysFf(AlwaysFf),
    Instance(Instantiation),
}

impl Item {
    pub fn assign(lhs: impl Into<String>, rhs: Expr) -> Self {
        Item::Assign(ContinuousAssign {
            lhs: lhs.into(),
            rhs,
            span: Span::default(),
        })
    }

    pub fn always_comb(body: Vec<Stmt>) -> Self {
        Item::AlwaysComb(AlwaysComb {
            body,
            span: Span::default(),
        })
    }

    pub fn always_ff(clock: impl Into<String>, body: Vec<Stmt>) -> Self {
        Item::AlwaysFf(AlwaysFf {
            clock: clock.into(),
            body,
            span: Span::default(),
        })
    }

    pub fn instance(
        module: impl Into<String>,
        name: impl Into<String>,
        connections: Vec<Connection>,
    ) -> Self {
        Item::Instance(Instantiation {
            module: module.into(),
            name: name.into(),
            connections,
            span: Span::default(),
        })
    }

    pub fn span(&self) -> Span {
        match self {
            Item::Assign(a) => a.span,
            Item::AlwaysComb(a) => a.span,
            Item::AlwaysFf(a) => a.span,
            Item::Instance(i) => i.span,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Item::Assign(_) => "assign",
            Item::AlwaysComb(_) => "always_comb",
            Item::AlwaysFf(_) => "always_ff",
            Item::Instance(_) => "instance",
        }
    }

    pub fn node_count(&self) -> usize {
        1 + match self {
            Item::Assign(a) => a.rhs.node_count(),
            Item::AlwaysComb(a) => a.body.iter().map(Stmt::node_count).sum(),
            Item::AlwaysFf(a) => a.body.iter().map(Stmt::node_count).sum(),
            Item::Instance(i) => i.connections.iter().map(|c| c.expr.node_count()).sum(),
        }
    }

    pub fn statement_count(&self) -> usize {
        match self {
            Item::AlwaysComb(a) => 1 + a.body.iter().map(Stmt::statement_count).sum::<usize>(),
            Item::AlwaysFf(a) => 1 + a.body.iter().map(Stmt::statement_count).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn for_each_expr<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Item::Assign(a) => f(&a.rhs),
            Item::AlwaysComb(a) => a.body.iter().for_each(|s| s.for_each_expr(f)),
            Item::AlwaysFf(a) => a.body.iter().for_each(|s| s.for_each_expr(f)),
            Item::Instance(i) => i.connections.iter().for_each(|c| f(&c.expr)),
        }
    }

    pub fn for_each_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Item::Assign(a) => f(&mut a.rhs),
            Item::AlwaysComb(a) => a.body.iter_mut().for_each(|s| s.for_each_expr_mut(f)),
            Item::AlwaysFf(a) => a.body.iter_mut().for_each(|s| s.for_each_expr_mut(f)),
            Item::Instance(i) => i.connections.iter_mut().for_each(|c| f(&mut c.expr)),
        }
    }

    pub fn body(&self) -> Option<&Vec<Stmt>> {
        match self {
            Item::AlwaysComb(a) => Some(&a.body),
            Item::AlwaysFf(a) => Some(&a.body),
            _ => None,
        }
    }

    pub fn body_mut(&mut self) -> Option<&mut Vec<Stmt>> {
        match self {
            Item::AlwaysComb(a) => Some(&mut a.body),
            Item::AlwaysFf(a) => Some(&mut a.body),
            _ => None,
        }
    }

    /// Every signal this item reads, including clocks, first-occurrence order.
    /// Instance output connections are not reads.
    pub fn reads(&self, design: Option<&Design>) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Item::AlwaysFf(a) => {
                out.push(a.clock.clone());
                a.body
                    .iter()
                    .for_each(|s| s.for_each_expr(&mut |e| e.reads(&mut out)));
            }
            Item::Instance(inst) => {
                let child = design.and_then(|d| d.module(&inst.module));
                for c in &inst.connections {
                    let is_output = child
                        .and_then(|m| m.port(&c.port))
                        .map(|p| p.direction == Direction::Output)
                        .unwrap_or(false);
                    if !is_output {
                        c.expr.reads(&mut out);
                    }
                }
            }
            _ => self.for_each_expr(&mut |e| e.reads(&mut out)),
        }
        out
    }

    /// Signals driven by this item. Instances drive the nets bound to the
    /// child's output ports, which requires the design to resolve directions.
    pub fn drives(&self, design: Option<&Design>) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Item::Assign(a) => out.push(a.lhs.clone()),
            Item::AlwaysComb(a) => a.body.iter().for_each(|s| s.writes(&mut out)),
            Item::AlwaysFf(a) => a.body.iter().for_each(|s| s.writes(&mut out)),
            Item::Instance(inst) => {
                if let Some(child) = design.and_then(|d| d.module(&inst.module)) {
                    for c in &inst.connections {
                        let is_output = child
                            .port(&c.port)
                            .map(|p| p.direction == Direction::Output)
                            .unwrap_or(false);
                        if is_output {
                            if let Expr::Ref(name) = &c.expr {
                                if !out.contains(name) {
                                    out.push(name.clone());
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn rename(&mut self, map: &dyn Fn(&str) -> Option<String>) {
        match self {
            Item::Assign(a) => {
                if let Some(new) = map(&a.lhs) {
                    a.lhs = new;
                }
                a.rhs.rename(map);
            }
            Item::AlwaysComb(a) => a.body.iter_mut().for_each(|s| s.rename(map)),
            Item::AlwaysFf(a) => {
                if let Some(new) = map(&a.clock) {
                    a.clock = new;
                }
                a.body.iter_mut().for_each(|s| s.rename(map));
            }
            Item::Instance(i) => i.connections.iter_mut().for_each(|c| c.expr.rename(map)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstModule {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub nets: Vec<NetDecl>,
    pub items: Vec<Item>,
    /// Source file the module lives in when the design spans several files;
    /// `None` is the main file.
    pub unit: Option<String>,
    pub span: Span,
}

impl AstModule {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ports: Vec::new(),
            nets: Vec::new(),
            items: Vec::new(),
            unit: None,
            span: Span::default(),
        }
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn net(&self, name: &str) -> Option<&NetDecl> {
        self.nets.iter().find(|n| n.name == name)
    }

    /// Declared width and kind of a port or net.
    pub fn signal(&self, name: &str) -> Option<(u32, NetKind)> {
        self.port(name)
            .map(|p| (p.width, p.kind))
            .or_else(|| self.net(name).map(|n| (n.width, n.kind)))
    }

    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.signal(name).map(|(w, _)| w)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports
            .iter()
            .filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports
            .iter()
            .filter(|p| p.direction == Direction::Output)
    }

    /// Input ports used as the clock of some `always @(posedge ..)` block,
    /// directly or through an instance.
    pub fn clock_ports(&self, design: &Design) -> Vec<String> {
        let mut clocks = Vec::new();
        self.collect_clocks(design, &mut clocks, 0);
        self.ports
            .iter()
            .filter(|p| p.direction == Direction::Input && clocks.contains(&p.name))
            .map(|p| p.name.clone())
            .collect()
    }

    fn collect_clocks(&self, design: &Design, out: &mut Vec<String>, depth: usize) {
        if depth > design.modules.len() {
            return;
        }
        for item in &self.items {
            match item {
                Item::AlwaysFf(ff) => {
                    if !out.contains(&ff.clock) {
                        out.push(ff.clock.clone());
                    }
                }
                Item::Instance(inst) => {
                    if let Some(child) = design.module(&inst.module) {
                        let mut inner = Vec::new();
                        child.collect_clocks(design, &mut inner, depth + 1);
                        for c in &inst.connections {
                            if inner.contains(&c.port) {
                                if let Expr::Ref(name) = &c.expr {
                                    if !out.contains(name) {
                                        out.push(name.clone());
                                    }
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.ports.len()
            + self.nets.len()
            + self.items.iter().map(Item::node_count).sum::<usize>()
    }

    pub fn statement_count(&self) -> usize {
        self.items.iter().map(Item::statement_count).sum()
    }

    pub fn declared_names(&self) -> impl Iterator<Item = &str> {
        self.ports
            .iter()
            .map(|p| p.name.as_str())
            .chain(self.nets.iter().map(|n| n.name.as_str()))
    }
}

/// A set of modules with a designated top.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub modules: Vec<AstModule>,
    pub top: String,
}

impl Design {
    pub fn module(&self, name: &str) -> Option<&AstModule> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn module_mut(&mut self, name: &str) -> Option<&mut AstModule> {
        self.modules.iter_mut().find(|m| m.name == name)
    }

    /// # Panics
    /// When the top module is missing, which validation rules out.
    pub fn top_module(&self) -> &AstModule {
        self.module(&self.top).expect("design top module exists")
    }

    pub fn top_module_mut(&mut self) -> &mut AstModule {
        let top = self.top.clone();
        self.module_mut(&top).expect("design top module exists")
    }

    pub fn node_count(&self) -> usize {
        self.modules.iter().map(AstModule::node_count).sum()
    }

    pub fn statement_count(&self) -> usize {
        self.modules.iter().map(AstModule::statement_count).sum()
    }

    /// Number of source files: the main file plus one per distinct unit.
    pub fn file_count(&self) -> usize {
        let mut units: Vec<&str> = self
            .modules
            .iter()
            .filter_map(|m| m.unit.as_deref())
            .collect();
        units.sort_unstable();
        units.dedup();
        1 + units.len()
    }

    pub fn max_ternary_depth(&self) -> usize {
        let mut depth = 0;
        for m in &self.modules {
            for item in &m.items {
                item.for_each_expr(&mut |e| depth = depth.max(e.ternary_depth()));
            }
        }
        depth
    }

    /// Whether any module declares or instantiates `name`, or uses it as a
    /// signal. Used to mint fresh identifiers.
    pub fn uses_name(&self, name: &str) -> bool {
        self.modules.iter().any(|m| {
            m.name == name
                || m.declared_names().any(|n| n == name)
                || m.items
                    .iter()
                    .any(|i| matches!(i, Item::Instance(inst) if inst.name == name))
        })
    }

    /// First `prefix{N}` not used anywhere in the design.
    pub fn fresh_name(&self, prefix: &str) -> String {
        (0..)
            .map(|i| format!("{prefix}{i}"))
            .find(|n| !self.uses_name(n))
            .expect("unbounded search")
    }

    pub fn input_bits(&self) -> u32 {
        let top = self.top_module();
        let clocks = top.clock_ports(self);
        top.inputs()
            .filter(|p| !clocks.contains(&p.name))
            .map(|p| p.width)
            .sum()
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print(self))
    }
}
