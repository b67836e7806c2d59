//! Host driver: lowers macro-instructions to micro-op streams.

pub mod asm;
pub mod budget;
pub mod float;
pub mod int;
pub mod isa;
pub mod netlist;
pub mod oracle;
pub mod replay;
pub mod schedule;
pub mod words;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::geometry::{is_power_of_four, ArchConfig};
use crate::microop::{CodecError, HGate, HLogic, MicroOp, RangeMask, VGate};
use crate::sim::SimError;

pub use budget::{budget, budget_table, RoutineBudget};
pub use isa::{DType, MacroInstruction, Opcode};
pub use netlist::{Netlist, Sig, Word};
pub use replay::{replay_check, Counterexample};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DriverError {
    #[error("unsupported instruction: {opcode} on {dtype}")]
    UnsupportedInstruction { opcode: Opcode, dtype: DType },
    #[error("invalid instruction: {0}")]
    InvalidInstruction(String),
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("routine needs more scratch cells than the row provides")]
    ScratchExhausted,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// A routine as a netlist over its source operands.
#[derive(Debug, Clone)]
pub struct Routine {
    pub net: Netlist,
    pub outputs: Word,
}

/// Builds the netlist for a non-bitwise-parallel routine.
pub fn build_routine(opcode: Opcode, dtype: DType, n: usize) -> Result<Routine, DriverError> {
    if !opcode.supports(dtype) {
        return Err(DriverError::UnsupportedInstruction { opcode, dtype });
    }
    let mut net = Netlist::new(n);
    use Opcode::*;
    let outputs = match (dtype, opcode) {
        (_, Not | And | Or | Xor) => int::bitwise_op(&mut net, opcode),
        (_, Mux) => int::mux_op(&mut net),
        (DType::Int32, Add) => int::add_op(&mut net),
        (DType::Int32, Sub) => int::sub_op(&mut net),
        (DType::Int32, Mul) => int::mul_op(&mut net),
        (DType::Int32, Div) => int::div_op(&mut net),
        (DType::Int32, Mod) => int::mod_op(&mut net),
        (DType::Int32, Neg) => int::neg_op(&mut net),
        (DType::Int32, Lt | Le | Gt | Ge | Eq) => int::compare_op(&mut net, opcode),
        (DType::Int32, Sign) => int::sign_op(&mut net),
        (DType::Int32, Zero) => int::zero_op(&mut net),
        (DType::Int32, Abs) => int::abs_op(&mut net),
        (DType::Float32, _) => {
            if n != 32 {
                return Err(DriverError::UnsupportedInstruction { opcode, dtype });
            }
            float::build(&mut net, opcode).ok_or(DriverError::UnsupportedInstruction { opcode, dtype })?
        }
    };
    Ok(Routine { net, outputs })
}

type ScheduleKey = (Opcode, DType, usize, Vec<usize>);

/// Lowering with per-routine caches of netlists and schedules.
pub struct Driver {
    cfg: ArchConfig,
    routines: Mutex<HashMap<(Opcode, DType), Arc<Routine>>>,
    schedules: Mutex<HashMap<ScheduleKey, Arc<Vec<MicroOp>>>>,
}

impl Driver {
    pub fn new(cfg: &ArchConfig) -> Self {
        Driver { cfg: cfg.clone(), routines: Mutex::default(), schedules: Mutex::default() }
    }

    pub fn config(&self) -> &ArchConfig {
        &self.cfg
    }

    pub fn routine(&self, opcode: Opcode, dtype: DType) -> Result<Arc<Routine>, DriverError> {
        if let Some(r) = self.routines.lock().unwrap().get(&(opcode, dtype)) {
            return Ok(r.clone());
        }
        let r = Arc::new(build_routine(opcode, dtype, self.cfg.word_n)?);
        self.routines.lock().unwrap().insert((opcode, dtype), r.clone());
        Ok(r)
    }

    /// Gate ops (no masks) of an R-type instruction.
    pub fn gate_stream(
        &self,
        opcode: Opcode,
        dtype: DType,
        dst: usize,
        srcs: &[usize],
    ) -> Result<Arc<Vec<MicroOp>>, DriverError> {
        let key = (opcode, dtype, dst, srcs.to_vec());
        if let Some(s) = self.schedules.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let ops = if opcode.is_bitwise() {
            bitwise_parallel(opcode, dst, srcs, &self.cfg)
        } else {
            let r = self.routine(opcode, dtype)?;
            schedule::schedule(&r.net, &r.outputs, srcs, dst, &self.cfg)?
        };
        let ops = Arc::new(ops);
        self.schedules.lock().unwrap().insert(key, ops.clone());
        Ok(ops)
    }

    pub fn lower(&self, instr: &MacroInstruction) -> Result<Vec<MicroOp>, DriverError> {
        let cfg = &self.cfg;
        validate(instr, cfg)?;
        match instr {
            MacroInstruction::RType { opcode, dtype, dst, srcs, warp_mask, thread_mask } => {
                let gates = self.gate_stream(*opcode, *dtype, *dst, srcs)?;
                let mut ops = Vec::with_capacity(gates.len() + 2);
                ops.push(MicroOp::CrossbarMask(*warp_mask));
                ops.push(MicroOp::RowMask(*thread_mask));
                ops.extend_from_slice(&gates);
                Ok(ops)
            }
            MacroInstruction::MoveIntraWarp { pairs, src_reg, dst_reg, warp_mask } => {
                Ok(lower_intra_move(pairs, *src_reg, *dst_reg, *warp_mask, cfg))
            }
            MacroInstruction::MoveInterWarp { warp_mask, warp_dest, src_thread, dst_thread, src_reg, dst_reg } => {
                Ok(vec![
                    MicroOp::CrossbarMask(*warp_mask),
                    MicroOp::Move {
                        xb_dest: *warp_dest,
                        src_row: *src_thread,
                        dst_row: *dst_thread,
                        src_index: *src_reg,
                        dst_index: *dst_reg,
                    },
                ])
            }
            MacroInstruction::Read { warp, thread, reg } => Ok(vec![
                MicroOp::CrossbarMask(RangeMask::single(*warp)),
                MicroOp::RowMask(RangeMask::single(*thread)),
                MicroOp::Read { intra_index: *reg },
            ]),
            MacroInstruction::Write { warp_mask, thread_mask, reg, value } => Ok(vec![
                MicroOp::CrossbarMask(*warp_mask),
                MicroOp::RowMask(*thread_mask),
                MicroOp::Write { intra_index: *reg, data: *value },
            ]),
        }
    }
}

/// One-shot lowering without caching.
pub fn lower(instr: &MacroInstruction, cfg: &ArchConfig) -> Result<Vec<MicroOp>, DriverError> {
    Driver::new(cfg).lower(instr)
}

fn bad(msg: impl Into<String>) -> DriverError {
    DriverError::InvalidInstruction(msg.into())
}

pub fn validate(instr: &MacroInstruction, cfg: &ArchConfig) -> Result<(), DriverError> {
    let reg = |r: usize| {
        if r < cfg.user_regs {
            Ok(())
        } else {
            Err(bad(format!("register {r} >= {} user registers", cfg.user_regs)))
        }
    };
    let thread = |t: usize| {
        if t < cfg.user_rows() {
            Ok(())
        } else {
            Err(bad(format!("thread {t} >= {} user rows", cfg.user_rows())))
        }
    };
    let warps = |m: &RangeMask| m.check(cfg.num_crossbars, "warp_mask").map_err(|e| bad(e.to_string()));
    let threads = |m: &RangeMask| m.check(cfg.user_rows(), "thread_mask").map_err(|e| bad(e.to_string()));
    match instr {
        MacroInstruction::RType { opcode, dtype, dst, srcs, warp_mask, thread_mask } => {
            if !opcode.supports(*dtype) {
                return Err(DriverError::UnsupportedInstruction { opcode: *opcode, dtype: *dtype });
            }
            if srcs.len() != opcode.arity() {
                return Err(bad(format!("{opcode} takes {} sources, got {}", opcode.arity(), srcs.len())));
            }
            reg(*dst)?;
            srcs.iter().try_for_each(|&r| reg(r))?;
            warps(warp_mask)?;
            threads(thread_mask)
        }
        MacroInstruction::MoveIntraWarp { pairs, src_reg, dst_reg, warp_mask } => {
            reg(*src_reg)?;
            reg(*dst_reg)?;
            warps(warp_mask)?;
            let mut seen = std::collections::HashSet::new();
            for &(s, d) in pairs {
                thread(s)?;
                thread(d)?;
                if !seen.insert(d) {
                    return Err(DriverError::InvalidMove(format!("two pairs write thread {d}")));
                }
            }
            Ok(())
        }
        MacroInstruction::MoveInterWarp { warp_mask, warp_dest, src_thread, dst_thread, src_reg, dst_reg } => {
            warps(warp_mask)?;
            if warp_mask.len() > 1 && !is_power_of_four(warp_mask.step) {
                return Err(DriverError::InvalidMove(format!("warp step {} is not a power of 4", warp_mask.step)));
            }
            if *warp_dest < warp_mask.start {
                return Err(DriverError::InvalidMove("destination precedes the first source warp".into()));
            }
            let d = warp_dest - warp_mask.start;
            if d == 0 || warp_mask.stop + d >= cfg.num_crossbars {
                return Err(DriverError::InvalidMove(format!("warp distance {d} out of range")));
            }
            if warp_mask.iter().any(|w| warp_mask.contains(w + d)) {
                return Err(DriverError::InvalidMove("source and destination warps overlap".into()));
            }
            thread(*src_thread)?;
            thread(*dst_thread)?;
            reg(*src_reg)?;
            reg(*dst_reg)
        }
        MacroInstruction::Read { warp, thread: t, reg: r } => {
            if *warp >= cfg.num_crossbars {
                return Err(bad(format!("warp {warp} out of range")));
            }
            thread(*t)?;
            reg(*r)
        }
        MacroInstruction::Write { warp_mask, thread_mask, reg: r, value } => {
            warps(warp_mask)?;
            threads(thread_mask)?;
            if value & !cfg.word_mask() != 0 {
                return Err(bad("value wider than a word"));
            }
            reg(*r)
        }
    }
}

fn par(gate: HGate, a: usize, b: usize, out: usize, n: usize) -> MicroOp {
    MicroOp::HLogic(HLogic::parallel(gate, a, b, out, n))
}

/// Register-wide NOR-logic with one gate per partition.
pub fn bitwise_parallel(opcode: Opcode, dst: usize, srcs: &[usize], cfg: &ArchConfig) -> Vec<MicroOp> {
    let n = cfg.word_n;
    let mut s = cfg.scratch_regs();
    let (t1, t2, t3, t4) = (s.next().unwrap(), s.next().unwrap(), s.next().unwrap(), s.next().unwrap());
    let a = srcs[0];
    let init = |r| par(HGate::Init1, r, r, r, n);
    match opcode {
        Opcode::Not if dst == a => vec![
            init(t1),
            par(HGate::Not, a, a, t1, n),
            init(t2),
            par(HGate::Not, t1, t1, t2, n),
            init(dst),
            par(HGate::Not, t2, t2, dst, n),
        ],
        Opcode::Not => vec![init(dst), par(HGate::Not, a, a, dst, n)],
        Opcode::Or => {
            let b = srcs[1];
            vec![init(t1), par(HGate::Nor, a, b, t1, n), init(dst), par(HGate::Not, t1, t1, dst, n)]
        }
        Opcode::And => {
            let b = srcs[1];
            vec![
                init(t1),
                par(HGate::Not, a, a, t1, n),
                init(t2),
                par(HGate::Not, b, b, t2, n),
                init(dst),
                par(HGate::Nor, t1, t2, dst, n),
            ]
        }
        Opcode::Xor => {
            let b = srcs[1];
            vec![
                init(t1),
                par(HGate::Nor, a, b, t1, n),
                init(t2),
                par(HGate::Not, a, a, t2, n),
                init(t3),
                par(HGate::Not, b, b, t3, n),
                init(t4),
                par(HGate::Nor, t2, t3, t4, n),
                init(dst),
                par(HGate::Nor, t1, t4, dst, n),
            ]
        }
        _ => unreachable!("not a bitwise opcode"),
    }
}

fn lower_intra_move(
    pairs: &[(usize, usize)],
    src_reg: usize,
    dst_reg: usize,
    warp_mask: RangeMask,
    cfg: &ArchConfig,
) -> Vec<MicroOp> {
    let n = cfg.word_n;
    let scr = cfg.scratch_row(0);
    let stage = cfg.scratch_regs().next().unwrap();
    let v = |gate, row_in, row_out, intra_index| MicroOp::VLogic { gate, row_in, row_out, intra_index };
    let mut ops = vec![MicroOp::CrossbarMask(warp_mask)];
    if src_reg != dst_reg && !pairs.is_empty() {
        ops.push(MicroOp::RowMask(RangeMask::single(scr)));
    }
    for &(s, d) in pairs {
        if src_reg == dst_reg {
            if s == d {
                continue;
            }
            ops.push(v(VGate::Init1, scr, scr, src_reg));
            ops.push(v(VGate::Not, s, scr, src_reg));
            ops.push(v(VGate::Init1, d, d, src_reg));
            ops.push(v(VGate::Not, scr, d, src_reg));
        } else {
            ops.push(v(VGate::Init1, scr, scr, src_reg));
            ops.push(v(VGate::Not, s, scr, src_reg));
            ops.push(par(HGate::Init1, stage, stage, stage, n));
            ops.push(par(HGate::Not, src_reg, src_reg, stage, n));
            ops.push(par(HGate::Init1, dst_reg, dst_reg, dst_reg, n));
            ops.push(par(HGate::Not, stage, stage, dst_reg, n));
            ops.push(v(VGate::Init1, d, d, dst_reg));
            ops.push(v(VGate::Not, scr, d, dst_reg));
        }
    }
    ops
}
