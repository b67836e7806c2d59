//! Per-partition opcodes, transistor selects, and section decomposition for
//! horizontal logic.

use std::fmt;

use crate::geometry::ArchConfig;
use crate::microop::{HGate, HLogic};

use super::SimError;

/// A 3-bit per-partition opcode: InA enable, InB enable, Out enable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PartitionOpcode(pub u8);

impl PartitionOpcode {
    pub const NONE: PartitionOpcode = PartitionOpcode(0);
    pub const IN_A: u8 = 0b100;
    pub const IN_B: u8 = 0b010;
    pub const OUT: u8 = 0b001;

    pub fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }
}

impl fmt::Display for PartitionOpcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03b}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The first input lies at or left of the output.
    OutRight,
    OutLeft,
}

impl Direction {
    pub fn of(op: &HLogic) -> Direction {
        if op.gate.inputs() == 0 || op.in_a.partition <= op.out.partition {
            Direction::OutRight
        } else {
            Direction::OutLeft
        }
    }
}

/// A gate recovered from one section: operand partitions of the concrete cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionGate {
    pub first: usize,
    pub last: usize,
    pub a: usize,
    pub b: usize,
    pub out: usize,
}

pub fn derive_opcodes(op: &HLogic, n: usize) -> Result<Vec<PartitionOpcode>, SimError> {
    let mut codes = vec![PartitionOpcode::NONE; n];
    let count = op.gate_count();
    for g in 0..count {
        let off = g * op.p_step;
        let mut set = |p: usize, bit: u8, what: &str| {
            if p >= n {
                return Err(SimError::InvalidOperation(format!(
                    "gate {g}: {what} partition {p} outside 0..{n}"
                )));
            }
            codes[p].0 |= bit;
            Ok(())
        };
        if op.gate.inputs() >= 1 {
            set(op.in_a.partition + off, PartitionOpcode::IN_A, "InA")?;
        }
        if op.gate.inputs() == 2 {
            set(op.in_b.partition + off, PartitionOpcode::IN_B, "InB")?;
        }
        set(op.out.partition + off, PartitionOpcode::OUT, "Out")?;
    }
    Ok(codes)
}

/// `true` means conducting. Entry `i` sits between partitions `i` and `i + 1`.
///
/// Out-right: a transistor opens when its left partition drives an output or
/// its right partition drives the first input. Out-left mirrors this with the
/// rightmost input of the gate (InB for NOR, InA for NOT) and the output.
pub fn derive_transistors(codes: &[PartitionOpcode], dir: Direction, gate: HGate) -> Vec<bool> {
    let right_input = if gate == HGate::Nor { PartitionOpcode::IN_B } else { PartitionOpcode::IN_A };
    codes
        .windows(2)
        .map(|pair| {
            let (l, r) = (pair[0], pair[1]);
            let cut = match dir {
                Direction::OutRight => l.has(PartitionOpcode::OUT) || r.has(PartitionOpcode::IN_A),
                Direction::OutLeft => l.has(right_input) || r.has(PartitionOpcode::OUT),
            };
            !cut
        })
        .collect()
}

/// Maximal runs of partitions joined by conducting transistors.
pub fn sections(selects: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, &conducting) in selects.iter().enumerate() {
        if !conducting {
            out.push((start, i));
            start = i + 1;
        }
    }
    out.push((start, selects.len()));
    out
}

/// Checks that every active section holds exactly one complete gate and
/// returns those gates in partition order.
pub fn validate_sections(
    codes: &[PartitionOpcode],
    selects: &[bool],
    gate: HGate,
) -> Result<Vec<SectionGate>, SimError> {
    let need_a = gate.inputs() >= 1;
    let need_b = gate.inputs() == 2;
    let mut gates = Vec::new();
    for (first, last) in sections(selects) {
        let span = &codes[first..=last];
        if span.iter().all(|c| c.0 == 0) {
            continue;
        }
        let find = |bit: u8| {
            let hits: Vec<usize> = (first..=last).filter(|&p| codes[p].has(bit)).collect();
            hits
        };
        let outs = find(PartitionOpcode::OUT);
        let ins_a = find(PartitionOpcode::IN_A);
        let ins_b = find(PartitionOpcode::IN_B);
        let ok = outs.len() == 1
            && ins_a.len() == usize::from(need_a)
            && ins_b.len() == usize::from(need_b);
        if !ok {
            return Err(SimError::InvalidOperation(format!(
                "section p{first}..p{last} does not hold exactly one {gate:?} gate \
                 ({} Out, {} InA, {} InB)",
                outs.len(),
                ins_a.len(),
                ins_b.len()
            )));
        }
        let out = outs[0];
        let a = ins_a.first().copied().unwrap_or(out);
        let b = ins_b.first().copied().unwrap_or(a);
        gates.push(SectionGate { first, last, a, b, out });
    }
    Ok(gates)
}

/// Full decode of a horizontal op into the gates the periphery would fire.
pub fn resolve(op: &HLogic, cfg: &ArchConfig) -> Result<Vec<SectionGate>, SimError> {
    let codes = derive_opcodes(op, cfg.word_n)?;
    let selects = derive_transistors(&codes, Direction::of(op), op.gate);
    validate_sections(&codes, &selects, op.gate)
}
