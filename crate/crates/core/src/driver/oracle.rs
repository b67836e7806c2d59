//! Host reference semantics for every R-type routine.

use super::float::CANONICAL_NAN;
use super::isa::{DType, Opcode};

fn canon(x: f32) -> u32 {
    if x.is_nan() {
        CANONICAL_NAN
    } else {
        x.to_bits()
    }
}

pub fn int32(op: Opcode, a: i32, b: i32, c: i32) -> i32 {
    use Opcode::*;
    match op {
        Add => a.wrapping_add(b),
        Sub => a.wrapping_sub(b),
        Mul => a.wrapping_mul(b),
        Div => {
            if b == 0 {
                -1
            } else {
                a.wrapping_div(b)
            }
        }
        Mod => {
            if b == 0 {
                -1
            } else {
                a.wrapping_rem(b)
            }
        }
        Neg => a.wrapping_neg(),
        Lt => (a < b) as i32,
        Le => (a <= b) as i32,
        Gt => (a > b) as i32,
        Ge => (a >= b) as i32,
        Eq => (a == b) as i32,
        Not => !a,
        And => a & b,
        Or => a | b,
        Xor => a ^ b,
        Sign => a.signum(),
        Zero => (a == 0) as i32,
        Abs => a.wrapping_abs(),
        Mux => {
            if a != 0 {
                b
            } else {
                c
            }
        }
    }
}

/// Operates on bit patterns; `None` for opcodes without a float form.
pub fn float32(op: Opcode, a: u32, b: u32, c: u32) -> Option<u32> {
    use Opcode::*;
    let (x, y) = (f32::from_bits(a), f32::from_bits(b));
    Some(match op {
        Add => canon(x + y),
        Sub => canon(x - y),
        Mul => canon(x * y),
        Div => canon(x / y),
        Mod => return None,
        Neg => canon(-x),
        Abs => a & 0x7FFF_FFFF,
        Lt => (x < y) as u32,
        Le => (x <= y) as u32,
        Gt => (x > y) as u32,
        Ge => (x >= y) as u32,
        Eq => (x == y) as u32,
        Zero => (a & 0x7FFF_FFFF == 0) as u32,
        Sign => {
            if x.is_nan() {
                CANONICAL_NAN
            } else if x == 0.0 {
                0
            } else if x < 0.0 {
                (-1.0f32).to_bits()
            } else {
                1.0f32.to_bits()
            }
        }
        Not | And | Or | Xor | Mux => int32(op, a as i32, b as i32, c as i32) as u32,
    })
}

/// Evaluates on raw words of the given dtype.
pub fn eval(op: Opcode, dtype: DType, operands: &[u64]) -> Option<u64> {
    let get = |i: usize| operands.get(i).copied().unwrap_or(0) as u32;
    match dtype {
        DType::Int32 => Some(int32(op, get(0) as i32, get(1) as i32, get(2) as i32) as u32 as u64),
        DType::Float32 => float32(op, get(0), get(1), get(2)).map(u64::from),
    }
}
