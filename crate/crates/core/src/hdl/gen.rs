//! Random seed-design generator.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeProfile {
    Small,
    Medium,
    Large,
}

impl SizeProfile {
    pub fn max_statements(self) -> usize {
        match self {
            SizeProfile::Small => 30,
            SizeProfile::Medium => 120,
            SizeProfile::Large => 400,
        }
    }

    pub fn max_input_bits(self) -> u32 {
        match self {
            SizeProfile::Small => 10,
            SizeProfile::Medium => 24,
            SizeProfile::Large => 40,
        }
    }

    fn input_ports(self) -> (usize, usize) {
        match self {
            SizeProfile::Small => (2, 4),
            SizeProfile::Medium => (3, 6),
            SizeProfile::Large => (4, 8),
        }
    }

    fn salt(self) -> u64 {
        match self {
            SizeProfile::Small => 0x5eed_0001,
            SizeProfile::Medium => 0x5eed_0002,
            SizeProfile::Large => 0x5eed_0003,
        }
    }
}

impl std::str::FromStr for SizeProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(SizeProfile::Small),
            "medium" => Ok(SizeProfile::Medium),
            "large" => Ok(SizeProfile::Large),
            other => Err(format!("unknown size profile `{other}`")),
        }
    }
}

/// Generates a valid single-module design. Identical arguments give
/// identical designs.
pub fn gen_seed(rng_seed: u64, profile: SizeProfile) -> Design {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ profile.salt());
    Gen::new(&mut rng, profile).run()
}

#[derive(Clone)]
struct Sig {
    name: String,
    width: u32,
    reads: usize,
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    profile: SizeProfile,
    module: AstModule,
    /// Signals readable by logic created from now on.
    avail: Vec<Sig>,
    counter: usize,
}

const MAX_TERNARY_DEPTH: usize = 2;

impl<'r> Gen<'r> {
    fn new(rng: &'r mut ChaCha8Rng, profile: SizeProfile) -> Self {
        Self {
            rng,
            profile,
            module: AstModule::new("top"),
            avail: Vec::new(),
            counter: 0,
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        let n = format!("{prefix}{}", self.counter);
        self.counter += 1;
        n
    }

    fn run(mut self) -> Design {
        let has_clock = self.rng.random_bool(0.6);
        if has_clock {
            self.module.ports.push(PortDecl {
                name: "clk".into(),
                direction: Direction::Input,
                kind: NetKind::Wire,
                width: 1,
            });
        }
        let (lo, hi) = self.profile.input_ports();
        let n_inputs = self.rng.random_range(lo..=hi);
        let mut bits_left = self.profile.max_input_bits();
        for i in 0..n_inputs {
            let remaining_ports = (n_inputs - i) as u32;
            let cap = (bits_left - (remaining_ports - 1)).min(8);
            if cap == 0 {
                break;
            }
            let width = self.rng.random_range(1..=cap.min(4));
            bits_left -= width;
            let name = format!("in{i}");
            self.module.ports.push(PortDecl {
                name: name.clone(),
                direction: Direction::Input,
                kind: NetKind::Wire,
                width,
            });
            self.avail.push(Sig {
                name,
                width,
                reads: 0,
            });
        }

        let n_outputs = self.rng.random_range(1..=3usize);
        // Leave room for the output assigns.
        let budget = self.profile.max_statements() - n_outputs;
        let target = self.rng.random_range(budget * 2 / 3..=budget);
        let mut planted_shift = false;
        let mut planted_idiom = false;
        while self.module.statement_count() + 1 < target {
            let room = target - self.module.statement_count();
            let roll: f64 = self.rng.random();
            if !planted_shift {
                let item = self.planted_assign(true);
                self.module.items.push(item);
                planted_shift = true;
            } else if !planted_idiom {
                let item = self.planted_assign(false);
                self.module.items.push(item);
                planted_idiom = true;
            } else if has_clock && roll < 0.25 && room >= 3 {
                self.ff_block(room);
            } else if roll < 0.55 && room >= 4 {
                self.comb_block(room);
            } else {
                self.assign();
            }
        }
        self.outputs(n_outputs);
        if !self
            .module
            .items
            .iter()
            .any(|i| matches!(i, Item::AlwaysFf(_)))
        {
            self.module.ports.retain(|p| p.name != "clk");
        }
        Design {
            modules: vec![self.module],
            top: "top".into(),
        }
    }

    fn pick(&mut self) -> Sig {
        // Prefer signals nobody reads yet so most logic stays live.
        let unread: Vec<usize> = (0..self.avail.len())
            .filter(|&i| self.avail[i].reads == 0)
            .collect();
        let idx = if !unread.is_empty() && self.rng.random_bool(0.6) {
            *unread.choose(self.rng).expect("non-empty")
        } else {
            self.rng.random_range(0..self.avail.len())
        };
        self.avail[idx].reads += 1;
        self.avail[idx].clone()
    }

    fn leaf(&mut self) -> Expr {
        let roll: f64 = self.rng.random();
        if roll < 0.15 {
            let width = self.rng.random_range(1..=6u32);
            let value = self.rng.random_range(0..(1u64 << width));
            Expr::constant(width, value)
        } else {
            let s = self.pick();
            if s.width > 1 && roll < 0.3 {
                let msb = self.rng.random_range(0..s.width);
                let lsb = self.rng.random_range(0..=msb);
                Expr::BitSelect {
                    name: s.name,
                    msb,
                    lsb,
                }
            } else {
                Expr::Ref(s.name)
            }
        }
    }

    /// `x >> k` with a constant `k` at least as wide as `x`.
    fn oversize_shift(&mut self) -> Expr {
        let s = self.pick();
        let k = s.width as u64 + self.rng.random_range(0..4u64);
        Expr::binary(BinaryOp::Shr, Expr::Ref(s.name), Expr::constant(32, k))
    }

    /// `$signed(x >> k)` with `0 < k < width(x)`.
    fn signed_shift(&mut self) -> Expr {
        let wide: Vec<usize> = (0..self.avail.len())
            .filter(|&i| self.avail[i].width >= 2)
            .collect();
        let Some(&idx) = wide.choose(self.rng) else {
            return self.oversize_shift();
        };
        self.avail[idx].reads += 1;
        let s = self.avail[idx].clone();
        let k = self.rng.random_range(1..s.width) as u64;
        Expr::cast(
            CastKind::Signed,
            Expr::binary(BinaryOp::Shr, Expr::Ref(s.name), Expr::constant(32, k)),
        )
    }

    fn expr(&mut self, depth: usize, ternaries: usize) -> Expr {
        if depth == 0 || self.rng.random_bool(0.25) {
            return self.leaf();
        }
        let roll: f64 = self.rng.random();
        match roll {
            r if r < 0.45 => {
                let op = *[
                    BinaryOp::Add,
                    BinaryOp::Sub,
                    BinaryOp::And,
                    BinaryOp::Or,
                    BinaryOp::Xor,
                    BinaryOp::Xor,
                    BinaryOp::Eq,
                    BinaryOp::Ne,
                    BinaryOp::Lt,
                ]
                .choose(self.rng)
                .expect("non-empty");
                let a = self.expr(depth - 1, ternaries);
                let b = self.expr(depth - 1, ternaries);
                Expr::binary(op, a, b)
            }
            r if r < 0.55 => {
                let op = if self.rng.random_bool(0.5) {
                    BinaryOp::Shl
                } else {
                    BinaryOp::Shr
                };
                let a = self.expr(depth - 1, ternaries);
                let amount = if self.rng.random_bool(0.7) {
                    Expr::constant(32, self.rng.random_range(0..4))
                } else {
                    self.leaf()
                };
                Expr::binary(op, a, amount)
            }
            r if r < 0.65 => {
                let op = *[UnaryOp::BitNot, UnaryOp::Neg, UnaryOp::LogicNot]
                    .choose(self.rng)
                    .expect("non-empty");
                Expr::unary(op, self.expr(depth - 1, ternaries))
            }
            r if r < 0.77 && ternaries < MAX_TERNARY_DEPTH => {
                let c = self.expr(depth - 1, ternaries + 1);
                let t = self.expr(depth - 1, ternaries + 1);
                let f = self.expr(depth - 1, ternaries + 1);
                Expr::ternary(c, t, f)
            }
            r if r < 0.84 => Expr::Concat(vec![self.leaf(), self.leaf()]),
            r if r < 0.90 => {
                let kind = if self.rng.random_bool(0.5) {
                    CastKind::Signed
                } else {
                    CastKind::Unsigned
                };
                let inner = self.expr(depth - 1, ternaries);
                // Keep the signed-shift idiom exclusive to planted sites.
                if matches!(&inner, Expr::Binary(BinaryOp::Shr, _, b) if matches!(**b, Expr::Const { .. }))
                {
                    return Expr::cast(CastKind::Unsigned, inner);
                }
                Expr::cast(kind, inner)
            }
            r if r < 0.96 => self.oversize_shift(),
            _ => {
                let a = self.expr(depth - 1, ternaries);
                let b = self.signed_shift();
                Expr::binary(BinaryOp::Add, a, b)
            }
        }
    }

    fn rhs(&mut self) -> Expr {
        let depth = self.rng.random_range(1..=3);
        self.expr(depth, 0)
    }

    fn width(&mut self) -> u32 {
        *[1u32, 2, 3, 4, 4, 5, 6, 8]
            .choose(self.rng)
            .expect("non-empty")
    }

    fn declare(&mut self, prefix: &str, kind: NetKind) -> Sig {
        let name = self.fresh(prefix);
        let width = self.width();
        self.module.nets.push(NetDecl {
            name: name.clone(),
            kind,
            width,
        });
        Sig {
            name,
            width,
            reads: 0,
        }
    }

    /// Planted sites read primary inputs only, so they never reduce to a
    /// constant in the original design.
    fn planted_assign(&mut self, shift: bool) -> Item {
        let sig = self.declare("w", NetKind::Wire);
        let core = if shift {
            self.oversize_shift()
        } else {
            self.signed_shift()
        };
        let other = Expr::Ref(
            self.avail
                .choose(self.rng)
                .expect("inputs exist")
                .name
                .clone(),
        );
        let rhs = Expr::binary(BinaryOp::Xor, core, other);
        self.avail.push(sig.clone());
        Item::assign(sig.name, rhs)
    }

    fn assign(&mut self) {
        let sig = self.declare("w", NetKind::Wire);
        let rhs = self.rhs();
        self.module.items.push(Item::assign(sig.name.clone(), rhs));
        self.avail.push(sig);
    }

    fn comb_block(&mut self, room: usize) {
        let n_regs = self
            .rng
            .random_range(1..=3usize)
            .min(room.saturating_sub(2))
            .max(1);
        let regs: Vec<Sig> = (0..n_regs)
            .map(|_| self.declare("c", NetKind::Reg))
            .collect();
        let mut body = Vec::new();
        for r in &regs {
            body.push(Stmt::Blocking {
                lhs: r.name.clone(),
                rhs: self.rhs(),
            });
            // Later statements in the block may read earlier results.
            self.avail.push(r.clone());
        }
        if room >= n_regs + 5 && self.rng.random_bool(0.7) {
            let cond = self.expr(1, 0);
            let target = regs.choose(self.rng).expect("non-empty").name.clone();
            let then_body = vec![Stmt::Blocking {
                lhs: target.clone(),
                rhs: self.rhs(),
            }];
            let else_body = if self.rng.random_bool(0.5) {
                vec![Stmt::Blocking {
                    lhs: target,
                    rhs: self.rhs(),
                }]
            } else {
                Vec::new()
            };
            body.push(Stmt::If {
                cond,
                then_body,
                else_body,
            });
        }
        self.module.items.push(Item::always_comb(body));
    }

    fn ff_block(&mut self, room: usize) {
        let n_regs = self.rng.random_range(1..=2usize).min(room - 1);
        let regs: Vec<Sig> = (0..n_regs)
            .map(|_| self.declare("q", NetKind::Reg))
            .collect();
        // Registers may feed back into their own next state.
        self.avail.extend(regs.iter().cloned());
        let mut body = Vec::new();
        for r in &regs {
            body.push(Stmt::NonBlocking {
                lhs: r.name.clone(),
                rhs: self.rhs(),
            });
        }
        if room > n_regs + 2 && self.rng.random_bool(0.4) {
            let cond = self.expr(1, 0);
            let target = regs[0].name.clone();
            body.push(Stmt::If {
                cond,
                then_body: vec![Stmt::NonBlocking {
                    lhs: target,
                    rhs: self.rhs(),
                }],
                else_body: Vec::new(),
            });
        }
        self.module.items.push(Item::always_ff("clk", body));
    }

    fn outputs(&mut self, n: usize) {
        // Signals no other item reads become output terms so the logic stays live.
        let mut unread: Vec<Sig> = Vec::new();
        for s in self.avail.iter().skip_while(|s| s.name.starts_with("in")) {
            let read_elsewhere = self.module.items.iter().any(|item| {
                !item.drives(None).contains(&s.name) && item.reads(None).contains(&s.name)
            });
            if !read_elsewhere {
                unread.push(s.clone());
            }
        }
        for i in 0..n {
            let name = format!("out{i}");
            let width = self.rng.random_range(2..=8u32);
            let take = if i + 1 == n {
                unread.len()
            } else {
                unread.len() / (n - i)
            };
            let group: Vec<Sig> = unread.drain(..take).collect();
            let mut rhs: Option<Expr> = None;
            for s in group {
                let e = Expr::Ref(s.name);
                rhs = Some(match rhs {
                    None => e,
                    Some(acc) => Expr::binary(BinaryOp::Xor, acc, e),
                });
            }
            let rhs = match rhs {
                Some(e) => e,
                None => self.rhs(),
            };
            self.module.ports.push(PortDecl {
                name: name.clone(),
                direction: Direction::Output,
                kind: NetKind::Wire,
                width,
            });
            self.module.items.push(Item::assign(name, rhs));
        }
    }
}
