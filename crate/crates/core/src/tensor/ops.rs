//! Element-wise operations and the operand-alignment copies they need.

use std::collections::{BTreeMap, HashMap};

use crate::driver::{DType, MacroInstruction, Opcode};
use crate::microop::RangeMask;

use super::{progressions, Result, Session, Tensor, TensorError, View};

/// Right-hand side of an element-wise op.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operand {
    View(View),
    /// Raw bits broadcast to every element; the dtype is checked when known.
    Scalar { bits: u32, dtype: Option<DType> },
}

impl From<View> for Operand {
    fn from(v: View) -> Self {
        Operand::View(v)
    }
}

impl From<Tensor> for Operand {
    fn from(t: Tensor) -> Self {
        Operand::View(t.view())
    }
}

impl From<&Tensor> for Operand {
    fn from(t: &Tensor) -> Self {
        Operand::View(t.view())
    }
}

impl From<&View> for Operand {
    fn from(v: &View) -> Self {
        Operand::View(*v)
    }
}

impl From<f32> for Operand {
    fn from(x: f32) -> Self {
        Operand::Scalar { bits: x.to_bits(), dtype: Some(DType::Float32) }
    }
}

impl From<i32> for Operand {
    fn from(x: i32) -> Self {
        Operand::Scalar { bits: x as u32, dtype: Some(DType::Int32) }
    }
}

fn out_dtype(op: Opcode, data: DType) -> DType {
    use Opcode::*;
    match op {
        Lt | Le | Gt | Ge | Eq | Zero => DType::Int32,
        _ => data,
    }
}

/// Smallest power of four above `d`.
fn tree_step(d: usize) -> usize {
    let mut s = 1;
    while s <= d {
        s *= 4;
    }
    s
}

impl Session {
    /// Copies `src[k]` into `dst[k]` for every `k`, inserting moves as needed.
    pub fn copy(&mut self, src: impl Into<View>, dst: impl Into<View>) -> Result<()> {
        let (src, dst) = (src.into(), dst.into());
        self.check_live(&src)?;
        self.check_live(&dst)?;
        if src.len != dst.len {
            return Err(TensorError::LengthMismatch(src.len, dst.len));
        }
        if src.base.id == dst.base.id && src != dst {
            // reads and writes would share cells; stage through a temporary
            let tmp = self.place(src.base.len, src.dtype(), Some(&src.base))?;
            let staged = View { base: tmp, ..src };
            let r = self.gather(&src, &staged).and_then(|_| self.gather(&staged, &dst));
            self.free(&tmp)?;
            return r;
        }
        if src == dst {
            return Ok(());
        }
        self.gather(&src, &dst)
    }

    /// [`Session::copy`] between distinct tensors. Distinct tensors never
    /// share a cell, so transfers cannot clobber pending sources.
    pub(super) fn gather(&mut self, src: &View, dst: &View) -> Result<()> {
        let si: Vec<usize> = (0..src.len).map(|k| src.index(k)).collect();
        let di: Vec<usize> = (0..dst.len).map(|k| dst.index(k)).collect();
        self.gather_indices(&src.base, &si, &dst.base, &di)
    }

    /// Copies base element `src_idx[k]` of `src` to `dst_idx[k]` of `dst`.
    pub(super) fn gather_indices(&mut self, src: &Tensor, src_idx: &[usize], dst: &Tensor, dst_idx: &[usize]) -> Result<()> {
        debug_assert_ne!(src.id, dst.id);
        let (sr, dr) = (src.reg, dst.reg);
        let mut same = Vec::new();
        let mut intra: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        let mut inter: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
        let mut host = Vec::new();
        for (&i, &j) in src_idx.iter().zip(dst_idx) {
            let (ws, rs) = self.slot(src, i);
            let (wd, rd) = self.slot(dst, j);
            if ws == wd && rs == rd {
                same.push((ws, rs));
            } else if ws == wd {
                intra.entry(ws).or_default().push((rs, rd));
            } else if wd > ws {
                inter.entry((wd - ws, rs, rd)).or_default().push(ws);
            } else {
                host.push(((ws, rs), (wd, rd)));
            }
        }

        for (warp_mask, thread_mask) in self.mask_groups(same.iter().copied()) {
            self.exec(&MacroInstruction::RType {
                opcode: Opcode::And,
                dtype: DType::Int32,
                dst: dr,
                srcs: vec![sr, sr],
                warp_mask,
                thread_mask,
            })?;
        }

        // warps sharing a pair list move in parallel
        let mut by_pairs: HashMap<Vec<(usize, usize)>, Vec<usize>> = HashMap::new();
        for (w, pairs) in intra {
            by_pairs.entry(pairs).or_default().push(w);
        }
        let mut by_pairs: Vec<_> = by_pairs.into_iter().collect();
        by_pairs.sort_by_key(|(_, ws)| ws[0]);
        for (pairs, warps) in by_pairs {
            self.transfers.intra_warp += (pairs.len() * warps.len()) as u64;
            for warp_mask in progressions(&warps) {
                self.exec(&MacroInstruction::MoveIntraWarp { pairs: pairs.clone(), src_reg: sr, dst_reg: dr, warp_mask })?;
            }
        }

        for ((d, rs, rd), warps) in inter {
            self.transfers.inter_warp += warps.len() as u64;
            // a step above the distance keeps sources and destinations apart
            let s = tree_step(d);
            let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for w in warps {
                classes.entry(w % s).or_default().push(w);
            }
            for ws in classes.values() {
                let mut i = 0;
                while i < ws.len() {
                    let mut j = i;
                    while j + 1 < ws.len() && ws[j + 1] == ws[j] + s {
                        j += 1;
                    }
                    let warp_mask = if i == j { RangeMask::single(ws[i]) } else { RangeMask::new(ws[i], ws[j], s) };
                    self.exec(&MacroInstruction::MoveInterWarp {
                        warp_mask,
                        warp_dest: ws[i] + d,
                        src_thread: rs,
                        dst_thread: rd,
                        src_reg: sr,
                        dst_reg: dr,
                    })?;
                    i = j + 1;
                }
            }
        }

        // the interconnect only moves toward higher crossbars
        for ((ws, rs), (wd, rd)) in host {
            self.transfers.via_host += 1;
            let v = self.exec(&MacroInstruction::Read { warp: ws, thread: rs, reg: sr })?[0];
            self.exec(&MacroInstruction::Write {
                warp_mask: RangeMask::single(wd),
                thread_mask: RangeMask::single(rd),
                reg: dr,
                value: v,
            })?;
        }
        Ok(())
    }

    /// Applies `op` element-wise. Operands that are not placed like the first
    /// tensor operand are first copied into alignment with it; the result is
    /// allocated next to that operand, or written into `out`.
    pub fn elementwise(&mut self, op: Opcode, operands: &[Operand], out: Option<View>) -> Result<View> {
        if operands.len() != op.arity() {
            return Err(TensorError::Invalid(format!("{op} takes {} operands, got {}", op.arity(), operands.len())));
        }
        let views: Vec<View> = operands
            .iter()
            .filter_map(|o| match o {
                Operand::View(v) => Some(*v),
                Operand::Scalar { .. } => None,
            })
            .collect();
        let lead = *views.first().ok_or_else(|| TensorError::Invalid(format!("{op} needs a tensor operand")))?;
        for v in &views {
            self.check_live(v)?;
            if v.len != lead.len {
                return Err(TensorError::LengthMismatch(lead.len, v.len));
            }
        }
        if lead.len == 0 {
            return Err(TensorError::ZeroLength);
        }
        // a mux selector is read as a bit pattern, whatever its dtype
        let data_ops = if op == Opcode::Mux { &operands[1..] } else { operands };
        let mut data = None;
        for o in data_ops {
            let d = match o {
                Operand::View(v) => Some(v.dtype()),
                Operand::Scalar { dtype, .. } => *dtype,
            };
            match (data, d) {
                (None, d) => data = d,
                (Some(a), Some(b)) if a != b => return Err(TensorError::DTypeMismatch(a, b)),
                _ => {}
            }
        }
        let dtype = data.unwrap_or(lead.dtype());
        let res_dtype = out_dtype(op, dtype);
        if let Some(o) = &out {
            self.check_live(o)?;
            if o.len != lead.len {
                return Err(TensorError::LengthMismatch(lead.len, o.len));
            }
            if o.dtype() != res_dtype {
                return Err(TensorError::DTypeMismatch(res_dtype, o.dtype()));
            }
        }

        let mut temps = Vec::new();
        let r = self.elementwise_inner(op, dtype, res_dtype, operands, lead, out, &mut temps);
        for t in temps {
            self.free(&t)?;
        }
        r
    }

    #[allow(clippy::too_many_arguments)]
    fn elementwise_inner(
        &mut self,
        op: Opcode,
        dtype: DType,
        res_dtype: DType,
        operands: &[Operand],
        lead: View,
        out: Option<View>,
        temps: &mut Vec<Tensor>,
    ) -> Result<View> {
        let like = |t: Tensor| View { base: t, ..lead };
        let (dst, widen, spill) = match out {
            Some(o) if o.aligned_with(&lead) => (o, o.is_full(), None),
            _ => {
                let res = self.place(lead.base.len, res_dtype, Some(&lead.base))?;
                if res.first_warp != lead.base.first_warp {
                    self.free(&res)?;
                    return Err(TensorError::OutOfMemory { requested: lead.base.len, largest: self.largest_free() });
                }
                match out {
                    Some(o) => {
                        temps.push(res);
                        (like(res), true, Some(o))
                    }
                    None => (like(res), true, None),
                }
            }
        };
        let mut srcs = Vec::with_capacity(operands.len());
        for o in operands {
            let reg = match *o {
                Operand::View(v) if v.aligned_with(&lead) => v.base.reg,
                Operand::View(v) => {
                    let t = self.place(lead.base.len, v.dtype(), Some(&lead.base))?;
                    temps.push(t);
                    if t.first_warp != lead.base.first_warp {
                        return Err(TensorError::OutOfMemory { requested: lead.base.len, largest: self.largest_free() });
                    }
                    self.gather(&v, &like(t))?;
                    t.reg
                }
                Operand::Scalar { bits, .. } => {
                    let t = self.place(lead.base.len, dtype, Some(&lead.base))?;
                    temps.push(t);
                    if t.first_warp != lead.base.first_warp {
                        return Err(TensorError::OutOfMemory { requested: lead.base.len, largest: self.largest_free() });
                    }
                    self.write_broadcast(&like(t), bits, true)?;
                    t.reg
                }
            };
            srcs.push(reg);
        }
        for (warp_mask, thread_mask) in self.view_groups(&dst, widen) {
            self.exec(&MacroInstruction::RType {
                opcode: op,
                dtype,
                dst: dst.base.reg,
                srcs: srcs.clone(),
                warp_mask,
                thread_mask,
            })?;
        }
        match spill {
            Some(o) => {
                self.copy(dst, o)?;
                Ok(o)
            }
            None => Ok(dst),
        }
    }

    pub fn binary(&mut self, op: Opcode, a: impl Into<Operand>, b: impl Into<Operand>) -> Result<View> {
        self.elementwise(op, &[a.into(), b.into()], None)
    }

    pub fn unary(&mut self, op: Opcode, a: impl Into<Operand>) -> Result<View> {
        self.elementwise(op, &[a.into()], None)
    }

    /// `c != 0 ? a : b` per element.
    pub fn mux(&mut self, c: impl Into<Operand>, a: impl Into<Operand>, b: impl Into<Operand>) -> Result<View> {
        self.elementwise(Opcode::Mux, &[c.into(), a.into(), b.into()], None)
    }

    pub fn add(&mut self, a: impl Into<Operand>, b: impl Into<Operand>) -> Result<View> {
        self.binary(Opcode::Add, a, b)
    }

    pub fn sub(&mut self, a: impl Into<Operand>, b: impl Into<Operand>) -> Result<View> {
        self.binary(Opcode::Sub, a, b)
    }

    pub fn mul(&mut self, a: impl Into<Operand>, b: impl Into<Operand>) -> Result<View> {
        self.binary(Opcode::Mul, a, b)
    }

    pub fn div(&mut self, a: impl Into<Operand>, b: impl Into<Operand>) -> Result<View> {
        self.binary(Opcode::Div, a, b)
    }

    /// Frees the tensor behind a view returned by an element-wise op.
    pub fn release(&mut self, v: View) -> Result<()> {
        self.free(&v.base)
    }
}
