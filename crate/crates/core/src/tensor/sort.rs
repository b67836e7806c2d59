//! Bitonic sort as compare-and-swap stages over a padded working tensor.

use crate::driver::{DType, MacroInstruction, Opcode};
use crate::microop::RangeMask;

use super::{Result, Session, Tensor, TensorError, View};

impl Session {
    /// Sorts the view's elements ascending, in place. Lengths that are not
    /// a power of two are padded with the dtype's maximum, which is dropped
    /// again afterwards.
    pub fn sort(&mut self, v: impl Into<View>) -> Result<()> {
        let v = v.into();
        self.check_live(&v)?;
        if v.len <= 1 {
            return Ok(());
        }
        let dtype = v.dtype();
        if dtype == DType::Float32 {
            for (k, bits) in self.to_host(v)?.into_iter().enumerate() {
                if f32::from_bits(bits).is_nan() {
                    return Err(TensorError::NanInSort(k));
                }
            }
        }
        let p = v.len.next_power_of_two();
        let mut temps = Vec::new();
        let r = self.sort_padded(&v, p, dtype, &mut temps);
        for t in temps {
            self.free(&t)?;
        }
        r
    }

    fn sort_padded(&mut self, v: &View, p: usize, dtype: DType, temps: &mut Vec<Tensor>) -> Result<()> {
        let work = self.place(p, dtype, Some(&v.base))?;
        temps.push(work);
        for _ in 0..5 {
            let t = self.place(p, DType::Int32, Some(&work))?;
            temps.push(t);
            if t.first_warp != work.first_warp {
                return Err(TensorError::OutOfMemory { requested: p, largest: self.largest_free() });
            }
        }
        let (partner, lt, lo, hi, keep_lo) = (temps[1], temps[2], temps[3], temps[4], temps[5]);
        let partner = Tensor { dtype, ..partner };
        let (lo, hi) = (Tensor { dtype, ..lo }, Tensor { dtype, ..hi });

        self.gather(v, &work.slice(0, v.len, 1))?;
        if p > v.len {
            let pad = match dtype {
                DType::Float32 => f32::INFINITY.to_bits(),
                DType::Int32 => i32::MAX as u32,
            };
            self.write_broadcast(&work.slice(v.len, p, 1), pad, false)?;
        }

        let full = work.view();
        let groups = self.view_groups(&full, true);
        let rtype = |opcode, dtype, dst: &Tensor, srcs: Vec<usize>, (warp_mask, thread_mask): (RangeMask, RangeMask)| {
            MacroInstruction::RType { opcode, dtype, dst: dst.reg, srcs, warp_mask, thread_mask }
        };
        let mut k = 2;
        while k <= p {
            let mut j = k / 2;
            while j > 0 {
                let src: Vec<usize> = (0..p).map(|i| i ^ j).collect();
                let dst: Vec<usize> = (0..p).collect();
                self.gather_indices(&work, &src, &partner, &dst)?;
                // lanes keeping the minimum: lower index of an ascending pair
                // or higher index of a descending one
                let keep: Vec<(usize, usize)> =
                    (0..p).filter(|&i| (i & j == 0) == (i & k == 0)).map(|i| self.slot(&work, i)).collect();
                let kept: Vec<(usize, usize)> =
                    (0..p).filter(|&i| (i & j == 0) != (i & k == 0)).map(|i| self.slot(&work, i)).collect();
                for (warp_mask, thread_mask) in self.mask_groups(keep) {
                    self.exec(&MacroInstruction::Write { warp_mask, thread_mask, reg: keep_lo.reg, value: 1 })?;
                }
                for (warp_mask, thread_mask) in self.mask_groups(kept) {
                    self.exec(&MacroInstruction::Write { warp_mask, thread_mask, reg: keep_lo.reg, value: 0 })?;
                }
                for &g in &groups {
                    self.exec(&rtype(Opcode::Lt, dtype, &lt, vec![work.reg, partner.reg], g))?;
                    self.exec(&rtype(Opcode::Mux, dtype, &lo, vec![lt.reg, work.reg, partner.reg], g))?;
                    self.exec(&rtype(Opcode::Mux, dtype, &hi, vec![lt.reg, partner.reg, work.reg], g))?;
                    self.exec(&rtype(Opcode::Mux, dtype, &work, vec![keep_lo.reg, lo.reg, hi.reg], g))?;
                }
                j /= 2;
            }
            k *= 2;
        }
        self.gather(&work.slice(0, v.len, 1), v)
    }
}
