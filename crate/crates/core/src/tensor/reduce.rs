//! Logarithmic reduction.
//!
//! The combination tree is `r(v) = r(v[::2]) ⊕ r(v[1::2])`, with a
//! single element as the leaf. Bottom-up, a level of length `L` pairs
//! element `i` with `i + M` for `M` the largest power of two below `L`;
//! elements with no partner pass through. Each pair is combined at the
//! later of its two slots so operands only ever move forward.

use crate::driver::{DType, Opcode};

use super::{Result, Session, TensorError, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Product,
}

impl ReduceOp {
    pub fn opcode(self) -> Opcode {
        match self {
            ReduceOp::Sum => Opcode::Add,
            ReduceOp::Product => Opcode::Mul,
        }
    }
}

/// Host evaluation of the same tree, for `f` applied to raw bits.
pub fn tree_reduce<T: Copy>(values: &[T], f: &mut impl FnMut(T, T) -> T) -> Option<T> {
    match values.len() {
        0 => None,
        1 => Some(values[0]),
        _ => {
            let even: Vec<T> = values.iter().copied().step_by(2).collect();
            let odd: Vec<T> = values.iter().copied().skip(1).step_by(2).collect();
            let a = tree_reduce(&even, f)?;
            let b = tree_reduce(&odd, f)?;
            Some(f(a, b))
        }
    }
}

impl Session {
    /// Reduces a view to one raw value with the tree described above.
    pub fn reduce(&mut self, v: impl Into<View>, op: ReduceOp) -> Result<u32> {
        let v = v.into();
        self.check_live(&v)?;
        if v.len == 0 {
            return Err(TensorError::EmptyReduction);
        }
        let dtype = v.dtype();
        // work on a private copy that keeps the view's placement
        let work = self.place(v.base.len, dtype, Some(&v.base))?;
        let w = View { base: work, ..v };
        let r = self.reduce_in(&v, &w, op, dtype);
        let tmp_free = self.free(&work);
        let out = r?;
        tmp_free?;
        Ok(out)
    }

    pub fn sum(&mut self, v: impl Into<View>) -> Result<u32> {
        self.reduce(v, ReduceOp::Sum)
    }

    pub fn sum_f32(&mut self, v: impl Into<View>) -> Result<f32> {
        self.sum(v).map(f32::from_bits)
    }

    fn reduce_in(&mut self, v: &View, w: &View, op: ReduceOp, dtype: DType) -> Result<u32> {
        self.gather(v, w)?;
        let scratch = self.place(w.base.len, dtype, Some(&w.base))?;
        let r = self.reduce_levels(w, scratch, op, dtype);
        self.free(&scratch)?;
        r
    }

    fn reduce_levels(&mut self, w: &View, scratch: super::Tensor, op: ReduceOp, dtype: DType) -> Result<u32> {
        use crate::driver::MacroInstruction;
        // idx[r]: view position currently holding partial result r
        let mut idx: Vec<usize> = (0..w.len).collect();
        while idx.len() > 1 {
            let l = idx.len();
            let m = l.next_power_of_two() / 2;
            // (compute-at position, moved-from position, left operand is moved)
            let mut fwd = Vec::new();
            let mut bwd = Vec::new();
            for r in 0..l - m {
                let (a, b) = (idx[r], idx[r + m]);
                if a < b {
                    fwd.push((b, a));
                } else {
                    bwd.push((a, b));
                }
                idx[r] = a.max(b);
            }
            idx.truncate(m);
            for (pairs, left_moved) in [(fwd, true), (bwd, false)] {
                if pairs.is_empty() {
                    continue;
                }
                let hu = self.hu();
                let wslot = |p: usize| {
                    let i = w.index(p);
                    (w.base.first_warp + i / hu, i % hu)
                };
                // move the early operand of each pair to its partner's slot
                let src: Vec<usize> = pairs.iter().map(|&(_, from)| w.index(from)).collect();
                let dst: Vec<usize> = pairs.iter().map(|&(at, _)| w.index(at)).collect();
                self.gather_indices(&w.base, &src, &scratch, &dst)?;
                let slots: Vec<(usize, usize)> = pairs.iter().map(|&(at, _)| wslot(at)).collect();
                let srcs = if left_moved { vec![scratch.reg, w.base.reg] } else { vec![w.base.reg, scratch.reg] };
                for (warp_mask, thread_mask) in self.mask_groups(slots) {
                    self.exec(&MacroInstruction::RType {
                        opcode: op.opcode(),
                        dtype,
                        dst: w.base.reg,
                        srcs: srcs.clone(),
                        warp_mask,
                        thread_mask,
                    })?;
                }
            }
        }
        let at = View { len: 1, start: w.index(idx[0]), step: 1, base: w.base };
        self.get(at, 0)
    }
}
