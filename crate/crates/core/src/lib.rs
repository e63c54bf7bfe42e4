//! Bandit-guided metamorphic fuzzing of logic-synthesis toolchains.

pub mod bandit;
pub mod campaign;
pub mod difftest;
pub mod hdl;
pub mod metamorph;
pub mod reducer;
pub mod refsim;
pub mod triage;
