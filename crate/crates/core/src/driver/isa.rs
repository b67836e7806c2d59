//! Warp/thread-level macro-instructions.

use std::fmt;
use std::str::FromStr;

use crate::microop::RangeMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DType {
    Int32,
    Float32,
}

impl DType {
    pub fn name(self) -> &'static str {
        match self {
            DType::Int32 => "int32",
            DType::Float32 => "float32",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "int32" | "i32" | "int" => Ok(DType::Int32),
            "float32" | "f32" | "float" => Ok(DType::Float32),
            _ => Err(format!("unknown dtype `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Neg,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Not,
    And,
    Or,
    Xor,
    Sign,
    Zero,
    Abs,
    Mux,
}

impl Opcode {
    pub const ALL: [Opcode; 19] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Mod,
        Opcode::Neg,
        Opcode::Lt,
        Opcode::Le,
        Opcode::Gt,
        Opcode::Ge,
        Opcode::Eq,
        Opcode::Not,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Sign,
        Opcode::Zero,
        Opcode::Abs,
        Opcode::Mux,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Div => "div",
            Opcode::Mod => "mod",
            Opcode::Neg => "neg",
            Opcode::Lt => "lt",
            Opcode::Le => "le",
            Opcode::Gt => "gt",
            Opcode::Ge => "ge",
            Opcode::Eq => "eq",
            Opcode::Not => "not",
            Opcode::And => "and",
            Opcode::Or => "or",
            Opcode::Xor => "xor",
            Opcode::Sign => "sign",
            Opcode::Zero => "zero",
            Opcode::Abs => "abs",
            Opcode::Mux => "mux",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Opcode::Neg | Opcode::Not | Opcode::Sign | Opcode::Zero | Opcode::Abs => 1,
            Opcode::Mux => 3,
            _ => 2,
        }
    }

    pub fn is_bitwise(self) -> bool {
        matches!(self, Opcode::Not | Opcode::And | Opcode::Or | Opcode::Xor)
    }

    pub fn supports(self, dtype: DType) -> bool {
        !(self == Opcode::Mod && dtype == DType::Float32)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Opcode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let alias = match s {
            "subtract" => "sub",
            "multiply" => "mul",
            "divide" => "div",
            "modulo" => "mod",
            "negate" => "neg",
            other => other,
        };
        Opcode::ALL
            .iter()
            .copied()
            .find(|o| o.name() == alias)
            .ok_or_else(|| format!("unknown opcode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MacroInstruction {
    RType {
        opcode: Opcode,
        dtype: DType,
        dst: usize,
        /// Operands in order; `mux` takes (selector, then, else).
        srcs: Vec<usize>,
        warp_mask: RangeMask,
        thread_mask: RangeMask,
    },
    /// Thread-to-thread copies inside every masked warp, one pair at a time.
    MoveIntraWarp { pairs: Vec<(usize, usize)>, src_reg: usize, dst_reg: usize, warp_mask: RangeMask },
    /// Warp `w` in the mask sends to `w + (warp_dest - mask.start)`.
    MoveInterWarp {
        warp_mask: RangeMask,
        warp_dest: usize,
        src_thread: usize,
        dst_thread: usize,
        src_reg: usize,
        dst_reg: usize,
    },
    Read { warp: usize, thread: usize, reg: usize },
    Write { warp_mask: RangeMask, thread_mask: RangeMask, reg: usize, value: u64 },
}
