//! Cycle-based two-state reference simulator and equivalence checker.
//!
//! Each cycle applies the inputs, settles combinational logic in dependency
//! order, samples the outputs, then commits every clocked process at once.
//! All registers start at zero. Clock ports are implicit: every clocked block
//! fires once per cycle, so clocks carry no stimulus.

mod compile;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hdl::{elab, Design, Direction, HdlError};

pub const DEFAULT_MAX_INPUT_BITS: u32 = 10;
pub const SAMPLED_STIMULI: usize = 1024;
pub const DEFAULT_CYCLES: usize = 8;
const SAMPLE_SEED: u64 = 0x51a7_0b5e;
/// Odd step between successive cycle vectors of one exhaustive stimulus.
const STRIDE: u64 = 0x9e37_79b9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("elaboration failed: {0}")]
    Elaboration(#[from] HdlError),
    #[error("internal width error: {0}")]
    Width(String),
    #[error("stimulus does not match the design interface: {0}")]
    Stimulus(String),
}

#[derive(Debug, Error)]
pub enum EquivError {
    #[error("port interfaces differ: {0}")]
    InterfaceMismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Input values per cycle, one entry per data input port in port order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stimulus {
    pub ports: Vec<(String, u32)>,
    pub vectors: Vec<Vec<u64>>,
}

impl Stimulus {
    pub fn cycles(&self) -> usize {
        self.vectors.len()
    }
}

/// Output values per cycle, one entry per output port in port order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTrace {
    pub ports: Vec<(String, u32)>,
    pub cycles: Vec<Vec<u64>>,
}

impl SimTrace {
    /// `cycle,port,hex` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,port,hex\n");
        for (c, values) in self.cycles.iter().enumerate() {
            for ((name, _), v) in self.ports.iter().zip(values) {
                let _ = writeln!(out, "{c},{name},{v:x}");
            }
        }
        out
    }

    /// First (cycle, port index) where the traces differ.
    pub fn first_divergence(&self, other: &SimTrace) -> Option<(usize, usize)> {
        for (c, (a, b)) in self.cycles.iter().zip(&other.cycles).enumerate() {
            if let Some(p) = a.iter().zip(b).position(|(x, y)| x != y) {
                return Some((c, p));
            }
        }
        None
    }
}

/// A design compiled for repeated simulation.
#[derive(Clone, Debug)]
pub struct Simulator {
    program: compile::Program,
    inputs: Vec<(String, u32)>,
    outputs: Vec<(String, u32)>,
}

impl Simulator {
    pub fn new(d: &Design) -> Result<Self, SimError> {
        let flat = elab::elaborate(d)?;
        let program = compile::compile(&flat)?;
        Ok(Self {
            program,
            inputs: flat.inputs,
            outputs: flat.outputs,
        })
    }

    pub fn inputs(&self) -> &[(String, u32)] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[(String, u32)] {
        &self.outputs
    }

    pub fn run(&self, s: &Stimulus) -> Result<SimTrace, SimError> {
        if s.ports != self.inputs {
            return Err(SimError::Stimulus(format!(
                "expected ports {:?}, got {:?}",
                self.inputs, s.ports
            )));
        }
        let p = &self.program;
        let mut slots = vec![0u64; p.slots];
        let mut stack = Vec::with_capacity(32);
        let mut cycles = Vec::with_capacity(s.vectors.len());
        for vector in &s.vectors {
            if vector.len() != p.input_slots.len() {
                return Err(SimError::Stimulus("vector length".into()));
            }
            for ((&slot, &v), (_, w)) in p.input_slots.iter().zip(vector).zip(&self.inputs) {
                slots[slot as usize] = v & compile::mask(*w);
            }
            compile::exec(&p.comb, &mut slots, &mut stack);
            cycles.push(p.output_slots.iter().map(|&o| slots[o as usize]).collect());
            compile::exec(&p.ff, &mut slots, &mut stack);
        }
        Ok(SimTrace {
            ports: self.outputs.clone(),
            cycles,
        })
    }
}

pub fn simulate(d: &Design, s: &Stimulus) -> Result<SimTrace, SimError> {
    Simulator::new(d)?.run(s)
}

/// How a stimulus set covers the input space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Exhaustive,
    Sampled,
}

/// Deterministic stimulus set for an interface: every input vector at every
/// cycle position when the inputs are narrow enough, otherwise
/// [`SAMPLED_STIMULI`] seeded random stimuli.
#[derive(Clone, Debug)]
pub struct StimulusSet {
    pub coverage: Coverage,
    pub stimuli: Vec<Stimulus>,
}

impl StimulusSet {
    pub fn new(ports: &[(String, u32)], max_input_bits: u32, cycles: usize) -> Self {
        let bits: u32 = ports.iter().map(|(_, w)| w).sum();
        let cycles = cycles.max(1);
        if bits <= max_input_bits && bits < 64 {
            let count = 1u64 << bits;
            let stride = STRIDE & (count - 1) | 1;
            let stimuli = (0..count)
                .map(|i| Stimulus {
                    ports: ports.to_vec(),
                    vectors: (0..cycles as u64)
                        .map(|c| {
                            unpack(ports, i.wrapping_add(c.wrapping_mul(stride)) & (count - 1))
                        })
                        .collect(),
                })
                .collect();
            StimulusSet {
                coverage: Coverage::Exhaustive,
                stimuli,
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ u64::from(bits));
            let stimuli = (0..SAMPLED_STIMULI)
                .map(|_| Stimulus {
                    ports: ports.to_vec(),
                    vectors: (0..cycles)
                        .map(|_| {
                            ports
                                .iter()
                                .map(|(_, w)| rng.random::<u64>() & compile::mask(*w))
                                .collect()
                        })
                        .collect(),
                })
                .collect();
            StimulusSet {
                coverage: Coverage::Sampled,
                stimuli,
            }
        }
    }

    pub fn for_design(d: &Design, max_input_bits: u32, cycles: usize) -> Result<Self, SimError> {
        let flat = elab::elaborate(d)?;
        Ok(Self::new(&flat.inputs, max_input_bits, cycles))
    }
}

/// Splits a packed vector across ports, first port in the low bits.
fn unpack(ports: &[(String, u32)], mut packed: u64) -> Vec<u64> {
    ports
        .iter()
        .map(|(_, w)| {
            let v = packed & compile::mask(*w);
            packed = if *w >= 64 { 0 } else { packed >> w };
            v
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum EquivResult {
    Equivalent {
        stimuli: usize,
    },
    EquivalentSampled {
        stimuli: usize,
    },
    Counterexample {
        /// Position of the stimulus in enumeration order.
        index: usize,
        stimulus: Stimulus,
        cycle: usize,
        port: String,
        expected: u64,
        got: u64,
    },
}

impl EquivResult {
    pub fn is_equivalent(&self) -> bool {
        !matches!(self, EquivResult::Counterexample { .. })
    }
}

/// Port list as compared by the equivalence checker: register/wire kind is
/// not part of the interface.
fn interface(d: &Design) -> Vec<(String, Direction, u32)> {
    d.top_module()
        .ports
        .iter()
        .map(|p| (p.name.clone(), p.direction, p.width))
        .collect()
}

pub fn check_interfaces(d1: &Design, d2: &Design) -> Result<(), EquivError> {
    let (a, b) = (interface(d1), interface(d2));
    if a != b {
        return Err(EquivError::InterfaceMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// Co-simulates two designs over every input sequence (or a seeded sample
/// when the inputs exceed `max_input_bits`) and reports the first
/// disagreement in enumeration order.
pub fn exhaustive_equiv(
    d1: &Design,
    d2: &Design,
    max_input_bits: u32,
    cycles: usize,
) -> Result<EquivResult, EquivError> {
    check_interfaces(d1, d2)?;
    let s1 = Simulator::new(d1)?;
    let s2 = Simulator::new(d2)?;
    if s1.inputs() != s2.inputs() {
        return Err(EquivError::InterfaceMismatch("clock ports differ".into()));
    }
    let set = StimulusSet::new(s1.inputs(), max_input_bits, cycles);
    let reference: Vec<SimTrace> = set
        .stimuli
        .iter()
        .map(|s| s1.run(s))
        .collect::<Result<_, _>>()?;
    equiv_against(&s2, &set, &reference)
}

/// Compares a simulator against precomputed reference traces for `set`.
pub fn equiv_against(
    sim: &Simulator,
    set: &StimulusSet,
    reference: &[SimTrace],
) -> Result<EquivResult, EquivError> {
    for (index, (stimulus, want)) in set.stimuli.iter().zip(reference).enumerate() {
        let got = sim.run(stimulus)?;
        if got.ports != want.ports {
            return Err(EquivError::InterfaceMismatch("output ports differ".into()));
        }
        if let Some((cycle, port)) = want.first_divergence(&got) {
            return Ok(EquivResult::Counterexample {
                index,
                stimulus: stimulus.clone(),
                cycle,
                port: want.ports[port].0.clone(),
                expected: want.cycles[cycle][port],
                got: got.cycles[cycle][port],
            });
        }
    }
    let stimuli = set.stimuli.len();
    Ok(match set.coverage {
        Coverage::Exhaustive => EquivResult::Equivalent { stimuli },
        Coverage::Sampled => EquivResult::EquivalentSampled { stimuli },
    })
}
