//! Integer routines: two's-complement, wrapping, width = word size.

use super::netlist::{Netlist, Sig, Word, FALSE};
use super::words::*;

fn flag(n: &mut Netlist, bit: Sig) -> Word {
    let mut w = vec![FALSE; n.partitions()];
    w[0] = bit;
    w
}

pub fn add_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let (a, b) = (n.input_word(0, w), n.input_word(1, w));
    add(n, &a, &b, FALSE).0
}

pub fn sub_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let (a, b) = (n.input_word(0, w), n.input_word(1, w));
    sub(n, &a, &b).0
}

pub fn neg_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let a = n.input_word(0, w);
    neg(n, &a)
}

/// Low word of the product; identical for signed and unsigned operands.
pub fn mul_low(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Word {
    let w = a.len();
    let na = not_word(n, a);
    let nb = not_word(n, b);
    let mut acc: Word = (0..w).map(|j| n.at_bit(j).nor(na[j], nb[0])).collect();
    for i in 1..w {
        let row: Word = (i..w).map(|j| n.at_bit(j).nor(na[j - i], nb[i])).collect();
        let (s, _) = add_from(n, &acc[i..], &row, FALSE, i);
        acc.splice(i.., s);
    }
    acc
}

pub fn mul_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let (a, b) = (n.input_word(0, w), n.input_word(1, w));
    mul_low(n, &a, &b)
}

/// Unsigned restoring division; returns (quotient, remainder). A zero
/// divisor yields an all-ones quotient.
pub fn udivmod(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> (Word, Word) {
    let w = a.len();
    // upper[k] = 1 iff b has a set bit at position >= k
    let mut upper = vec![FALSE; w + 1];
    for k in (1..w).rev() {
        upper[k] = n.at_bit(k).or(b[k], upper[k + 1]);
    }
    let mut q = vec![FALSE; w];
    let mut r: Word = Vec::new();
    for i in (0..w).rev() {
        let width = w - i;
        let mut shifted = vec![a[i]];
        shifted.extend_from_slice(&r[..width - 1]);
        let (d, c) = sub(n, &shifted, &b[..width]);
        let ge = if width < w {
            let fits = n.at_bit(width).not(upper[width]);
            n.and(c, fits)
        } else {
            c
        };
        q[i] = ge;
        r = mux_word(n, ge, &d, &shifted);
    }
    (q, r)
}

fn signed_divmod(n: &mut Netlist, want_rem: bool) -> Word {
    let w = n.partitions();
    let (a, b) = (n.input_word(0, w), n.input_word(1, w));
    let (sa, sb) = (a[w - 1], b[w - 1]);
    let ua = cond_neg(n, &a, sa);
    let ub = cond_neg(n, &b, sb);
    let (uq, ur) = udivmod(n, &ua, &ub);
    let res = if want_rem {
        cond_neg(n, &ur, sa)
    } else {
        let s = n.at(w - 1).xor(sa, sb);
        cond_neg(n, &uq, s)
    };
    let bz = is_zero(n, &b);
    res.iter().enumerate().map(|(j, &x)| n.at_bit(j).or(x, bz)).collect()
}

pub fn div_op(n: &mut Netlist) -> Word {
    signed_divmod(n, false)
}

pub fn mod_op(n: &mut Netlist) -> Word {
    signed_divmod(n, true)
}

fn flip_msb(n: &mut Netlist, a: &[Sig]) -> Word {
    let mut v = a.to_vec();
    let top = v.len() - 1;
    v[top] = n.at(top).not(v[top]);
    v
}

/// Signed `a < b`.
pub fn slt(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Sig {
    let fa = flip_msb(n, a);
    let fb = flip_msb(n, b);
    ult(n, &fa, &fb)
}

pub fn compare_op(n: &mut Netlist, op: super::isa::Opcode) -> Word {
    use super::isa::Opcode::*;
    let w = n.partitions();
    let (a, b) = (n.input_word(0, w), n.input_word(1, w));
    let bit = match op {
        Lt => slt(n, &a, &b),
        Gt => slt(n, &b, &a),
        Le => {
            let x = slt(n, &b, &a);
            n.not(x)
        }
        Ge => {
            let x = slt(n, &a, &b);
            n.not(x)
        }
        Eq => eq_word(n, &a, &b),
        _ => unreachable!("not a comparison"),
    };
    flag(n, bit)
}

pub fn sign_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let a = n.input_word(0, w);
    let nz = reduce_or(n, &a);
    let mut out = vec![a[w - 1]; w];
    out[0] = nz;
    out
}

pub fn zero_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let a = n.input_word(0, w);
    let z = is_zero(n, &a);
    flag(n, z)
}

pub fn abs_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let a = n.input_word(0, w);
    cond_neg(n, &a, a[w - 1])
}

/// `c != 0 ? a : b`, bitwise on the selector pattern.
pub fn mux_op(n: &mut Netlist) -> Word {
    let w = n.partitions();
    let (c, a, b) = (n.input_word(0, w), n.input_word(1, w), n.input_word(2, w));
    let nz = reduce_or(n, &c);
    mux_word(n, nz, &a, &b)
}

pub fn bitwise_op(n: &mut Netlist, op: super::isa::Opcode) -> Word {
    use super::isa::Opcode::*;
    let w = n.partitions();
    let a = n.input_word(0, w);
    match op {
        Not => not_word(n, &a),
        And | Or | Xor => {
            let b = n.input_word(1, w);
            match op {
                And => and_word(n, &a, &b),
                Or => or_word(n, &a, &b),
                _ => xor_word(n, &a, &b),
            }
        }
        _ => unreachable!("not bitwise"),
    }
}
