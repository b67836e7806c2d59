//! Differential check of a lowered R-type instruction on the simulator.

use std::fmt;

use crate::microop::MicroOp;
use crate::sim::{MemoryState, ProfileCounters};

use super::isa::MacroInstruction;
use super::{oracle, Driver, DriverError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub warp: usize,
    pub thread: usize,
    pub operands: Vec<u64>,
    pub expected: u64,
    pub got: u64,
    pub note: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "warp {} thread {}: operands [", self.warp, self.thread)?;
        for (i, v) in self.operands.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v:#010x}")?;
        }
        write!(f, "] expected {:#010x}, got {:#010x}", self.expected, self.got)?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

/// Loads `operands` (cycled over the masked threads, warp-major), runs the
/// instruction, and compares every masked thread against the host oracle.
/// Also checks that no user register other than `dst`, and no row outside
/// the thread mask, changed.
pub fn replay_check(
    driver: &Driver,
    instr: &MacroInstruction,
    state: &mut MemoryState,
    operands: &[Vec<u64>],
) -> Result<(), Counterexample> {
    let ops = match driver.lower(instr) {
        Ok(ops) => ops,
        Err(e) => return Err(failure(format!("lowering failed: {e}"))),
    };
    replay_stream(instr, &ops, state, operands)
}

fn failure(note: String) -> Counterexample {
    Counterexample { warp: 0, thread: 0, operands: Vec::new(), expected: 0, got: 0, note }
}

/// [`replay_check`] for an already lowered (possibly altered) stream.
pub fn replay_stream(
    instr: &MacroInstruction,
    ops: &[MicroOp],
    state: &mut MemoryState,
    operands: &[Vec<u64>],
) -> Result<(), Counterexample> {
    let MacroInstruction::RType { opcode, dtype, dst, srcs, warp_mask, thread_mask } = instr else {
        return Err(failure("replay_check takes R-type instructions".into()));
    };
    assert!(!operands.is_empty());
    let cfg = state.config().clone();
    let mask = cfg.word_mask();
    let mut k = 0;
    let mut loaded = Vec::new();
    for w in warp_mask.iter() {
        for t in thread_mask.iter() {
            let tuple = &operands[k % operands.len()];
            k += 1;
            for (s, &r) in srcs.iter().enumerate() {
                state.poke(w, t, r, tuple[s] & mask);
            }
            loaded.push((w, t));
        }
    }
    let before = state.clone();
    let mut counters = ProfileCounters::default();
    for (i, op) in ops.iter().enumerate() {
        if let Err(e) = state.execute(op, &mut counters) {
            return Err(failure(format!("micro-op {i} ({op}) failed: {e}")));
        }
    }
    for (w, t) in &loaded {
        let got = state.peek(*w, *t, *dst);
        let vals: Vec<u64> = srcs.iter().map(|&r| before.peek(*w, *t, r)).collect();
        let Some(expected) = oracle::eval(*opcode, *dtype, &vals) else {
            return Err(failure(format!("{opcode} has no {dtype} oracle")));
        };
        if got != expected {
            return Err(Counterexample {
                warp: *w,
                thread: *t,
                operands: vals,
                expected,
                got,
                note: String::new(),
            });
        }
    }
    for w in 0..cfg.num_crossbars {
        for t in 0..cfg.user_rows() {
            let in_mask = warp_mask.contains(w) && thread_mask.contains(t);
            for r in 0..cfg.user_regs {
                if r == *dst && in_mask {
                    continue;
                }
                let (a, b) = (before.peek(w, t, r), state.peek(w, t, r));
                if a != b {
                    return Err(Counterexample {
                        warp: w,
                        thread: t,
                        operands: Vec::new(),
                        expected: a,
                        got: b,
                        note: format!("register {r} was clobbered"),
                    });
                }
            }
        }
    }
    Ok(())
}

impl From<DriverError> for Counterexample {
    fn from(e: DriverError) -> Self {
        failure(e.to_string())
    }
}
