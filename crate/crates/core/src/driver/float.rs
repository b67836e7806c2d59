//! IEEE-754 binary32 routines: round to nearest even, subnormals, signed
//! zeros and infinities. Every NaN result is the quiet NaN `0x7FC00000`.

use super::int::slt;
use super::isa::Opcode;
use super::netlist::{Netlist, Sig, Word, FALSE};
use super::words::*;

pub const CANONICAL_NAN: u32 = 0x7FC0_0000;
const EXP_BITS: usize = 12;

struct Unpacked {
    sign: Sig,
    /// biased exponent with 0 read as 1
    exp: Word,
    /// 24-bit significand including the hidden bit
    sig: Word,
    is_nan: Sig,
    is_inf: Sig,
    is_zero: Sig,
}

fn unpack(n: &mut Netlist, x: &[Sig]) -> Unpacked {
    let frac = &x[..23];
    let e = &x[23..31];
    let exp_zero = is_zero(n, e);
    let exp_ones = reduce_and(n, e);
    let frac_zero = is_zero(n, frac);
    let nfz = n.not(frac_zero);
    let is_nan = n.and(exp_ones, nfz);
    let is_inf = n.and(exp_ones, frac_zero);
    let is_zero = n.and(exp_zero, frac_zero);
    let mut exp = e.to_vec();
    exp[0] = n.at(23).or(e[0], exp_zero);
    let mut sig = frac.to_vec();
    sig.push(n.at(23).not(exp_zero));
    Unpacked { sign: x[31], exp, sig, is_nan, is_inf, is_zero }
}

fn const_bits(n: &mut Netlist, v: u64, width: usize) -> Word {
    n.const_word(v, width)
}

/// Rounds `S / 2^(W-1) * 2^(E-127)` to binary32 and returns the 31 magnitude
/// bits. `E` is a two's-complement word; a zero `S` gives zero.
fn round_pack(n: &mut Netlist, e: &[Sig], s: &[Sig]) -> Word {
    let w = s.len();
    let lz = resize(&lzc(n, s), EXP_BITS);
    let one = const_bits(n, 1, EXP_BITS);
    let (em1, _) = sub(n, e, &one);
    // shift = min(lz, E - 1); negative means a right shift into the subnormal range
    let clamp = slt(n, &em1, &lz);
    let shift = mux_word(n, clamp, &em1, &lz);
    let neg_shift = shift[EXP_BITS - 1];
    let pos = n.not(neg_shift);
    let left_amt = and_bit(n, &shift[..6], pos);
    let minus = neg(n, &shift);
    let mut right_amt = and_bit(n, &minus[..6], neg_shift);
    let far = reduce_or(n, &minus[6..]);
    let far = n.and(far, neg_shift);
    right_amt.push(far);
    let shifted = shl(n, s, &left_amt);
    let (shifted, lost) = shr_sticky(n, &shifted, &right_amt);

    // biased field before the hidden bit: max(E - lz - 1, 0)
    let (e_lz, _) = sub(n, e, &lz);
    let (base, _) = sub(n, &e_lz, &one);
    let keep = n.not(clamp);
    let base = and_bit(n, &base, keep);
    let c254 = const_bits(n, 254, EXP_BITS);
    let overflow = uge(n, &base, &c254);

    let mant = &shifted[w - 24..];
    let guard = shifted[w - 25];
    let low = reduce_or(n, &shifted[..w - 25]);
    let sticky = n.or(low, lost);
    n.at(0);
    let odd_or_sticky = n.or(sticky, mant[0]);
    let round_up = n.and(guard, odd_or_sticky);
    let (high, _) = inc(n, &base[..8], mant[23]);
    let mut packed: Word = mant[..23].to_vec();
    packed.extend_from_slice(&high);
    let (packed, _) = inc(n, &packed, round_up);

    let inf = const_bits(n, 0x7F80_0000, 31);
    let out = mux_word(n, overflow, &inf, &packed);
    let nonzero = reduce_or(n, s);
    and_bit(n, &out, nonzero)
}

/// Selects among the special results, in priority order NaN, infinity, zero.
fn finish(n: &mut Netlist, sign: Sig, nan: Sig, inf: Sig, zero: Sig, body: &[Sig], body_sign: Sig) -> Word {
    let nan_w = const_bits(n, CANONICAL_NAN as u64, 31);
    let inf_w = const_bits(n, 0x7F80_0000, 31);
    let zero_w = vec![FALSE; 31];
    let mag = mux_word(n, zero, &zero_w, body);
    let mag = mux_word(n, inf, &inf_w, &mag);
    let mag = mux_word(n, nan, &nan_w, &mag);
    let special = n.or(inf, zero);
    let s = n.at(31).mux(special, sign, body_sign);
    let nnan = n.not(nan);
    let s = n.and(s, nnan);
    let mut out = mag;
    out.push(s);
    out
}

fn add_core(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Word {
    let ua = unpack(n, a);
    let ub = unpack(n, b);
    let swap = ult(n, &a[..31], &b[..31]);
    let (xa, xb) = (mux_word(n, swap, &ub.exp, &ua.exp), mux_word(n, swap, &ua.exp, &ub.exp));
    let (ma, mb) = (mux_word(n, swap, &ub.sig, &ua.sig), mux_word(n, swap, &ua.sig, &ub.sig));
    let sa = n.at(31).mux(swap, ub.sign, ua.sign);
    let eff_sub = n.at(31).xor(ua.sign, ub.sign);

    let (d, _) = sub(n, &xa, &xb);
    let mut ma27 = vec![FALSE; 3];
    ma27.extend_from_slice(&ma);
    let mut mb27 = vec![FALSE; 3];
    mb27.extend_from_slice(&mb);
    let (mut mbs, lost) = shr_sticky(n, &mb27, &d);
    mbs[0] = n.at(0).or(mbs[0], lost);
    let ma28 = resize(&ma27, 28);
    let mbs28 = resize(&mbs, 28);
    let addend = xor_bit(n, &mbs28, eff_sub);
    let (s, _) = add(n, &ma28, &addend, eff_sub);

    let xa12 = resize(&xa, EXP_BITS);
    let one = const_bits(n, 1, EXP_BITS);
    let (e, _) = add(n, &xa12, &one, FALSE);
    let body = round_pack(n, &e, &s);

    let s_zero = is_zero(n, &s);
    let neff = n.not(eff_sub);
    let zero_sign = n.and(neff, sa);
    let body_sign = n.mux(s_zero, zero_sign, sa);

    let any_nan = n.or(ua.is_nan, ub.is_nan);
    let both_inf = n.and(ua.is_inf, ub.is_inf);
    let cancel = n.and(both_inf, eff_sub);
    let nan = n.or(any_nan, cancel);
    let inf = n.or(ua.is_inf, ub.is_inf);
    finish(n, sa, nan, inf, FALSE, &body, body_sign)
}

fn mul_core(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Word {
    let ua = unpack(n, a);
    let ub = unpack(n, b);
    let sign = n.at(31).xor(ua.sign, ub.sign);
    n.set_spread(48);
    let ma = resize(&ua.sig, 48);
    let p = {
        let na = not_word(n, &ma[..24]);
        let nb = not_word(n, &ub.sig);
        let mut acc: Word = (0..24).map(|j| n.at_bit(j).nor(na[j], nb[0])).collect();
        acc.resize(48, FALSE);
        for i in 1..24 {
            let row: Word = (0..24).map(|j| n.at_bit(i + j).nor(na[j], nb[i])).collect();
            let (s, c) = add_from(n, &acc[i..i + 24], &row, FALSE, i);
            acc.splice(i..i + 24, s);
            acc[i + 24] = c;
        }
        acc
    };
    n.set_spread(32);
    let ea = resize(&ua.exp, EXP_BITS);
    let eb = resize(&ub.exp, EXP_BITS);
    let (sum, _) = add(n, &ea, &eb, FALSE);
    let c126 = const_bits(n, 126, EXP_BITS);
    let (e, _) = sub(n, &sum, &c126);
    let body = round_pack(n, &e, &p);

    let any_nan = n.or(ua.is_nan, ub.is_nan);
    let i0 = n.and(ua.is_inf, ub.is_zero);
    let i1 = n.and(ub.is_inf, ua.is_zero);
    let inf_zero = n.or(i0, i1);
    let nan = n.or(any_nan, inf_zero);
    let inf = n.or(ua.is_inf, ub.is_inf);
    finish(n, sign, nan, inf, FALSE, &body, sign)
}

/// Shifts a subnormal significand up to the hidden-bit position; returns the
/// normalized significand and the adjusted exponent.
fn normalize(n: &mut Netlist, sig: &[Sig], exp: &[Sig]) -> (Word, Word) {
    let lz = lzc(n, sig);
    let shifted = shl(n, sig, &lz);
    let e12 = resize(exp, EXP_BITS);
    let lz12 = resize(&lz, EXP_BITS);
    let (e, _) = sub(n, &e12, &lz12);
    (shifted, e)
}

fn div_core(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> Word {
    let ua = unpack(n, a);
    let ub = unpack(n, b);
    let sign = n.at(31).xor(ua.sign, ub.sign);
    let (ma, ea) = normalize(n, &ua.sig, &ua.exp);
    let (mb, eb) = normalize(n, &ub.sig, &ub.exp);

    let divisor = resize(&mb, 25);
    let mut r = resize(&ma, 25);
    let mut q = vec![FALSE; 27];
    for k in (0..27).rev() {
        let (d, ge) = sub(n, &r, &divisor);
        q[k] = ge;
        let next = mux_word(n, ge, &d, &r);
        r = if k > 0 {
            let mut s = vec![FALSE];
            s.extend_from_slice(&next[..24]);
            s
        } else {
            next
        };
    }
    let rem = reduce_or(n, &r);
    let mut s = vec![rem];
    s.extend_from_slice(&q);

    let (diff, _) = sub(n, &ea, &eb);
    let c127 = const_bits(n, 127, EXP_BITS);
    let (e, _) = add(n, &diff, &c127, FALSE);
    let body = round_pack(n, &e, &s);

    let any_nan = n.or(ua.is_nan, ub.is_nan);
    let zz = n.and(ua.is_zero, ub.is_zero);
    let ii = n.and(ua.is_inf, ub.is_inf);
    let t = n.or(zz, ii);
    let nan = n.or(any_nan, t);
    let inf = n.or(ua.is_inf, ub.is_zero);
    let zero = n.or(ua.is_zero, ub.is_inf);
    finish(n, sign, nan, inf, zero, &body, sign)
}

/// IEEE ordering on two unpacked operands: (a < b, a == b), both false on NaN.
fn order(n: &mut Netlist, a: &[Sig], b: &[Sig]) -> (Sig, Sig) {
    let ua = unpack(n, a);
    let ub = unpack(n, b);
    let nan = n.or(ua.is_nan, ub.is_nan);
    let both_zero = n.and(ua.is_zero, ub.is_zero);
    let mag_lt = ult(n, &a[..31], &b[..31]);
    let mag_gt = ult(n, &b[..31], &a[..31]);
    let same_bits = eq_word(n, a, b);
    n.at(31);
    let diff_sign = n.xor(ua.sign, ub.sign);
    let same_sign_lt = n.mux(ua.sign, mag_gt, mag_lt);
    let lt = n.mux(diff_sign, ua.sign, same_sign_lt);
    let nbz = n.not(both_zero);
    let lt = n.and(lt, nbz);
    let eq = n.or(same_bits, both_zero);
    let ok = n.not(nan);
    (n.and(lt, ok), n.and(eq, ok))
}

fn flag(bit: Sig) -> Word {
    let mut w = vec![FALSE; 32];
    w[0] = bit;
    w
}

/// The float routine for `opcode`, or `None` when it has no float form.
pub fn build(n: &mut Netlist, opcode: Opcode) -> Option<Word> {
    let arity = opcode.arity();
    let a = n.input_word(0, 32);
    let b = if arity >= 2 { n.input_word(1, 32) } else { Vec::new() };
    Some(match opcode {
        Opcode::Add => add_core(n, &a, &b),
        Opcode::Sub => {
            let mut nb = b.clone();
            nb[31] = n.at(31).not(b[31]);
            add_core(n, &a, &nb)
        }
        Opcode::Mul => mul_core(n, &a, &b),
        Opcode::Div => div_core(n, &a, &b),
        Opcode::Neg => {
            let u = unpack(n, &a);
            let nan_w = const_bits(n, CANONICAL_NAN as u64, 32);
            let mut flipped = a.clone();
            flipped[31] = n.at(31).not(a[31]);
            mux_word(n, u.is_nan, &nan_w, &flipped)
        }
        Opcode::Abs => {
            let mut out = a.clone();
            out[31] = FALSE;
            out
        }
        Opcode::Zero => {
            let z = is_zero(n, &a[..31]);
            flag(z)
        }
        Opcode::Sign => {
            // NaN -> NaN, +-0 -> +0.0, otherwise +-1.0
            let u = unpack(n, &a);
            let nz = n.not(u.is_zero);
            let nn = n.not(u.is_nan);
            let finite_nz = n.and(nz, nn);
            let mut out = vec![FALSE; 32];
            out[22] = u.is_nan;
            for bit in out.iter_mut().take(30).skip(23) {
                *bit = nz;
            }
            out[30] = u.is_nan;
            out[31] = n.at(31).and(u.sign, finite_nz);
            out
        }
        Opcode::Lt | Opcode::Le | Opcode::Gt | Opcode::Ge | Opcode::Eq => {
            let (x, y) = if matches!(opcode, Opcode::Gt | Opcode::Ge) { (&b, &a) } else { (&a, &b) };
            let (lt, eq) = order(n, x, y);
            let bit = match opcode {
                Opcode::Lt | Opcode::Gt => lt,
                Opcode::Le | Opcode::Ge => n.or(lt, eq),
                _ => eq,
            };
            flag(bit)
        }
        _ => return None,
    })
}
