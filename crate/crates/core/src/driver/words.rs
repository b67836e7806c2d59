//! Word-level building blocks over [`Netlist`]. Words are little-endian bit
//! vectors of any width.

use super::netlist::{Netlist, Sig, Word, FALSE, TRUE};

pub fn not_word(n: &mut Netlist, a: &[Sig]) -> Word {
    a.iter().enumerate().map(|(i, &x)| n.at_bit(i).not(x)).collect()
}

pub fn and_word(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Word {
    a.iter().zip(b).enumerate().map(|(i, (&x, &y))| n.at_bit(i).and(x, y)).collect()
}

pub fn or_word(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Word {
    a.iter().zip(b).enumerate().map(|(i, (&x, &y))| n.at_bit(i).or(x, y)).collect()
}

pub fn xor_word(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Word {
    a.iter().zip(b).enumerate().map(|(i, (&x, &y))| n.at_bit(i).xor(x, y)).collect()
}

/// Every bit XORed with the same signal.
pub fn xor_bit(n: &mut Netlist, a: &[Sig], s: Sig) -> Word {
    a.iter().enumerate().map(|(i, &x)| n.at_bit(i).xor(x, s)).collect()
}

pub fn and_bit(n: &mut Netlist, a: &[Sig], s: Sig) -> Word {
    a.iter().enumerate().map(|(i, &x)| n.at_bit(i).and(x, s)).collect()
}

/// `c ? a : b` per bit.
pub fn mux_word(n: &mut Netlist, c: Sig, a: &[Sig], b: &[Sig]) -> Word {
    a.iter().zip(b).enumerate().map(|(i, (&x, &y))| n.at_bit(i).mux(c, x, y)).collect()
}

/// Ripple-carry `a + b + cin`; returns the sum and the carry out.
pub fn add(n: &mut Netlist, a: &[Sig], b: &[Sig], cin: Sig) -> (Word, Sig) {
    add_from(n, a, b, cin, 0)
}

/// [`add`] for a slice whose bit 0 is bit `base` of a wider word.
pub fn add_from(n: &mut Netlist, a: &[Sig], b: &[Sig], cin: Sig, base: usize) -> (Word, Sig) {
    debug_assert_eq!(a.len(), b.len());
    let mut c = cin;
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        n.at_bit(base + i);
        let (s, co) = n.full_add(a[i], b[i], c);
        out.push(s);
        c = co;
    }
    (out, c)
}

/// `a - b`; the second value is the carry out, 1 iff `a >= b` unsigned.
pub fn sub(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> (Word, Sig) {
    let nb = not_word(n, b);
    add(n, a, &nb, TRUE)
}

/// `a + c` for a single-bit `c`.
pub fn inc(n: &mut Netlist, a: &[Sig], c: Sig) -> (Word, Sig) {
    let zero = vec![FALSE; a.len()];
    add(n, a, &zero, c)
}

pub fn neg(n: &mut Netlist, a: &[Sig]) -> Word {
    let na = not_word(n, a);
    inc(n, &na, TRUE).0
}

/// `s ? -a : a`.
pub fn cond_neg(n: &mut Netlist, a: &[Sig], s: Sig) -> Word {
    let x = xor_bit(n, a, s);
    inc(n, &x, s).0
}

/// 1 iff `a >= b` unsigned (carry chain of `a - b` only).
pub fn uge(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Sig {
    let mut c = TRUE;
    for i in 0..a.len() {
        n.at_bit(i);
        let nb = n.not(b[i]);
        c = n.carry_only(a[i], nb, c);
    }
    c
}

pub fn ult(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Sig {
    let ge = uge(n, a, b);
    n.not(ge)
}

pub fn reduce_or(n: &mut Netlist, a: &[Sig]) -> Sig {
    match a.len() {
        0 => FALSE,
        1 => a[0],
        len => {
            let (l, r) = a.split_at(len / 2);
            let x = reduce_or(n, l);
            let y = reduce_or(n, r);
            let home = n.home_of(y).max(n.home_of(x));
            n.at(home).or(x, y)
        }
    }
}

/// 1 iff every bit is zero.
pub fn is_zero(n: &mut Netlist, a: &[Sig]) -> Sig {
    match a.len() {
        0 => TRUE,
        1 => n.not(a[0]),
        len => {
            let (l, r) = a.split_at(len / 2);
            let x = reduce_or(n, l);
            let y = reduce_or(n, r);
            let home = n.home_of(y).max(n.home_of(x));
            n.at(home).nor(x, y)
        }
    }
}

pub fn reduce_and(n: &mut Netlist, a: &[Sig]) -> Sig {
    let na = not_word(n, a);
    is_zero(n, &na)
}

pub fn eq_word(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Sig {
    let x = xor_word(n, a, b);
    is_zero(n, &x)
}

/// Logical right shift by the unsigned amount `amt`; also returns the OR of
/// every bit shifted out.
pub fn shr_sticky(n: &mut Netlist, a: &[Sig], amt: &[Sig]) -> (Word, Sig) {
    let w = a.len();
    let mut cur: Word = a.to_vec();
    let mut sticky = FALSE;
    for (k, &bit) in amt.iter().enumerate() {
        let dist = 1usize << k.min(usize::BITS as usize - 2);
        if dist >= w {
            // everything goes
            let lost = reduce_or(n, &cur);
            let got = n.and(bit, lost);
            sticky = n.or(sticky, got);
            let nbit = n.not(bit);
            cur = and_bit(n, &cur, nbit);
            continue;
        }
        let lost = reduce_or(n, &cur[..dist]);
        let got = n.and(bit, lost);
        sticky = n.or(sticky, got);
        let shifted: Word = (0..w).map(|i| if i + dist < w { cur[i + dist] } else { FALSE }).collect();
        cur = mux_word(n, bit, &shifted, &cur);
    }
    (cur, sticky)
}

/// Left shift by the unsigned amount `amt`; bits beyond the width are lost.
pub fn shl(n: &mut Netlist, a: &[Sig], amt: &[Sig]) -> Word {
    let w = a.len();
    let mut cur: Word = a.to_vec();
    for (k, &bit) in amt.iter().enumerate() {
        let dist = 1usize << k.min(usize::BITS as usize - 2);
        if dist >= w {
            let nbit = n.not(bit);
            cur = and_bit(n, &cur, nbit);
            continue;
        }
        let shifted: Word = (0..w).map(|i| if i >= dist { cur[i - dist] } else { FALSE }).collect();
        cur = mux_word(n, bit, &shifted, &cur);
    }
    cur
}

/// Leading-zero count of `a` (from the top bit), as a word wide enough to
/// hold `a.len()`.
pub fn lzc(n: &mut Netlist, a: &[Sig]) -> Word {
    let w = a.len();
    let bits = usize::BITS as usize - w.leading_zeros() as usize;
    // normalize by powers of two, MSB first; a fully zero input ends with
    // count 2^bits - 1 and is corrected to w below
    let mut cur: Word = a.to_vec();
    let mut count = vec![FALSE; bits];
    for k in (0..bits).rev() {
        let dist = 1usize << k;
        if dist >= w {
            count[k] = FALSE;
            continue;
        }
        let top = &cur[w - dist..];
        let z = is_zero(n, top);
        count[k] = z;
        let shifted: Word = (0..w).map(|i| if i >= dist { cur[i - dist] } else { FALSE }).collect();
        cur = mux_word(n, z, &shifted, &cur);
    }
    // after the shifts the top bit is set unless the input was zero
    let zero = n.not(cur[w - 1]);
    let wconst = n.const_word(w as u64, bits);
    mux_word(n, zero, &wconst, &count)
}

/// Sign-extends or truncates to `width`.
pub fn resize_signed(a: &[Sig], width: usize) -> Word {
    let s = *a.last().unwrap();
    (0..width).map(|i| if i < a.len() { a[i] } else { s }).collect()
}

pub fn resize(a: &[Sig], width: usize) -> Word {
    (0..width).map(|i| if i < a.len() { a[i] } else { FALSE }).collect()
}
