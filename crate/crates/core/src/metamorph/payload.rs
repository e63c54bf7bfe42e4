//! Random expression payloads for inserted logic.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::hdl::{expr_width, BinaryOp, CastKind, Expr, UnaryOp};

/// Ternary nesting of the deep chains built by [`Payload::ternary_chain`].
pub const DEEP_TERNARY: usize = 5;

pub(crate) struct Payload<'a> {
    pub rng: &'a mut ChaCha8Rng,
    /// Signals the payload may read, with widths.
    pub reads: Vec<(String, u32)>,
}

impl Payload<'_> {
    pub fn width(&self, e: &Expr) -> u32 {
        let lookup = |n: &str| self.reads.iter().find(|(s, _)| s == n).map(|(_, w)| *w);
        expr_width(e, &lookup)
    }

    pub fn leaf(&mut self) -> Expr {
        if self.reads.is_empty() || self.rng.random_bool(0.2) {
            let width = self.rng.random_range(1..=8u32);
            let value = self.rng.random_range(0..(1u64 << width));
            return Expr::constant(width, value);
        }
        let (name, width) = self.reads.choose(self.rng).expect("non-empty").clone();
        if width > 1 && self.rng.random_bool(0.35) {
            let msb = self.rng.random_range(0..width);
            let lsb = self.rng.random_range(0..=msb);
            Expr::BitSelect { name, msb, lsb }
        } else {
            Expr::Ref(name)
        }
    }

    /// Random tree of at most `depth` levels with at most `ternaries`
    /// nested ternaries on any path.
    pub fn tree(&mut self, depth: usize, ternaries: usize) -> Expr {
        if depth <= 1 || self.rng.random_bool(0.15) {
            return self.leaf();
        }
        let roll: f64 = self.rng.random();
        match roll {
            r if r < 0.35 => {
                let op = *BinaryOp::ALL.choose(self.rng).expect("non-empty");
                let a = self.tree(depth - 1, ternaries);
                let b = if op.is_shift() {
                    if self.rng.random_bool(0.6) {
                        Expr::constant(32, self.rng.random_range(0..10))
                    } else {
                        self.leaf()
                    }
                } else {
                    self.tree(depth - 1, ternaries)
                };
                Expr::binary(op, a, b)
            }
            r if r < 0.55 && ternaries > 0 => {
                let c = self.tree(depth - 1, ternaries - 1);
                let t = self.tree(depth - 1, ternaries - 1);
                let f = self.tree(depth - 1, ternaries - 1);
                Expr::ternary(c, t, f)
            }
            r if r < 0.7 => {
                let kind = if self.rng.random_bool(0.5) {
                    CastKind::Signed
                } else {
                    CastKind::Unsigned
                };
                Expr::cast(kind, self.tree(depth - 1, ternaries))
            }
            r if r < 0.85 => {
                let op = *[UnaryOp::BitNot, UnaryOp::Neg, UnaryOp::LogicNot]
                    .choose(self.rng)
                    .expect("non-empty");
                Expr::unary(op, self.tree(depth - 1, ternaries))
            }
            _ => Expr::Concat(vec![self.leaf(), self.leaf()]),
        }
    }

    /// `c0 ? (c1 ? ( ... ) : e1) : e0` with `n` nested ternaries.
    pub fn ternary_chain(&mut self, n: usize) -> Expr {
        if n == 0 {
            return self.leaf();
        }
        let cond = self.leaf();
        let inner = self.ternary_chain(n - 1);
        let other = if self.rng.random_bool(0.5) {
            let kind = if self.rng.random_bool(0.5) {
                CastKind::Signed
            } else {
                CastKind::Unsigned
            };
            Expr::cast(kind, self.leaf())
        } else {
            self.leaf()
        };
        if self.rng.random_bool(0.5) {
            Expr::ternary(cond, inner, other)
        } else {
            Expr::ternary(cond, other, inner)
        }
    }

    fn fits(&self, e: &Expr) -> bool {
        self.width(e) <= 64 && e.children().iter().all(|c| self.fits(c))
    }

    /// Replaces a payload with a leaf if any subexpression exceeds 64 bits.
    pub fn bounded(&mut self, e: Expr) -> Expr {
        if self.fits(&e) {
            e
        } else {
            self.leaf()
        }
    }
}
