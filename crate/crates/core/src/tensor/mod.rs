//! Typed 1-D tensors over the simulated memory.
//!
//! A tensor occupies one register index across a contiguous run of warps;
//! element `i` lives in warp `first_warp + i / h_user`, row `i % h_user`.
//! Whole warps are reserved, so rows past the last element of the final warp
//! belong to the tensor and may hold garbage.

mod ops;
pub mod reduce;
mod sort;

use std::collections::HashMap;

use thiserror::Error;

use crate::driver::{DType, Driver, DriverError, MacroInstruction};
use crate::geometry::ArchConfig;
use crate::microop::{MicroOp, RangeMask};
use crate::sim::{MemoryState, ProfileCounters, SimError};

pub use ops::Operand;
pub use reduce::ReduceOp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensors must have at least one element")]
    ZeroLength,
    #[error("out of memory: {requested} elements requested, largest free block holds {largest}")]
    OutOfMemory { requested: usize, largest: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dtype mismatch: {0} vs {1}")]
    DTypeMismatch(DType, DType),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reduction over an empty tensor")]
    EmptyReduction,
    #[error("cannot sort: element {0} is NaN")]
    NanInSort(usize),
    #[error("tensor {0} is not live")]
    NotLive(u64),
    #[error("{0}")]
    Invalid(String),
    #[error("profiler section ended without a matching begin")]
    UnbalancedProfile,
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// An allocated tensor. Copies refer to the same memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tensor {
    pub id: u64,
    pub dtype: DType,
    pub len: usize,
    pub first_warp: usize,
    pub warp_count: usize,
    pub reg: usize,
}

impl Tensor {
    pub fn view(&self) -> View {
        View { base: *self, start: 0, step: 1, len: self.len }
    }

    /// Python-style `[start:stop:step]`; bounds are clamped.
    pub fn slice(&self, start: usize, stop: usize, step: usize) -> View {
        self.view().slice(start, stop, step)
    }
}

/// A strided window onto a tensor: element `k` is base element `start + k * step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct View {
    pub base: Tensor,
    pub start: usize,
    pub step: usize,
    pub len: usize,
}

impl View {
    pub fn dtype(&self) -> DType {
        self.base.dtype
    }

    pub fn slice(&self, start: usize, stop: usize, step: usize) -> View {
        assert!(step > 0, "slice step must be positive");
        let stop = stop.min(self.len);
        let len = if start >= stop { 0 } else { (stop - start).div_ceil(step) };
        View { base: self.base, start: self.start + start * self.step, step: self.step * step, len }
    }

    /// Base element index of view element `k`.
    pub fn index(&self, k: usize) -> usize {
        self.start + k * self.step
    }

    /// Base element range as a mask, `None` when empty.
    pub fn mask(&self) -> Option<RangeMask> {
        match self.len {
            0 => None,
            1 => Some(RangeMask::single(self.start)),
            n => Some(RangeMask::new(self.start, self.index(n - 1), self.step)),
        }
    }

    pub fn is_full(&self) -> bool {
        self.start == 0 && self.step == 1 && self.len == self.base.len
    }

    /// Same (warp, row) for every element.
    pub fn aligned_with(&self, other: &View) -> bool {
        self.len == other.len
            && self.base.first_warp == other.base.first_warp
            && (self.len == 0 || (self.start == other.start && (self.len == 1 || self.step == other.step)))
    }
}

impl From<Tensor> for View {
    fn from(t: Tensor) -> View {
        t.view()
    }
}

impl From<&Tensor> for View {
    fn from(t: &Tensor) -> View {
        t.view()
    }
}

/// One context: memory, driver, allocation table, and profiler.
pub struct Session {
    mem: MemoryState,
    driver: Driver,
    /// `used[warp][reg]`
    used: Vec<Vec<bool>>,
    live: HashMap<u64, Tensor>,
    next_id: u64,
    counters: ProfileCounters,
    sections: Vec<ProfileCounters>,
    trace: Option<Vec<MicroOp>>,
    transfers: TransferStats,
}

/// Element transfers inserted to align operands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransferStats {
    pub intra_warp: u64,
    pub inter_warp: u64,
    pub via_host: u64,
}

impl Session {
    pub fn new(cfg: &ArchConfig) -> Self {
        Session {
            mem: MemoryState::new(cfg),
            driver: Driver::new(cfg),
            used: vec![vec![false; cfg.user_regs]; cfg.num_crossbars],
            live: HashMap::new(),
            next_id: 1,
            counters: ProfileCounters::default(),
            sections: Vec::new(),
            trace: None,
            transfers: TransferStats::default(),
        }
    }

    pub fn config(&self) -> &ArchConfig {
        self.mem.config()
    }

    pub fn memory(&self) -> &MemoryState {
        &self.mem
    }

    pub fn driver(&self) -> &Driver {
        &self.driver
    }

    fn hu(&self) -> usize {
        self.config().user_rows()
    }

    /// Cycles of everything executed so far.
    pub fn counters(&self) -> ProfileCounters {
        self.counters
    }

    pub fn transfers(&self) -> TransferStats {
        self.transfers
    }

    /// Starts recording every executed micro-op.
    pub fn start_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<MicroOp> {
        self.trace.take().unwrap_or_default()
    }

    pub fn profile_begin(&mut self) {
        self.sections.push(self.counters);
    }

    pub fn profile_end(&mut self) -> Result<ProfileCounters> {
        let start = self.sections.pop().ok_or(TensorError::UnbalancedProfile)?;
        Ok(self.counters - start)
    }

    /// Runs `f` and returns the cycles it issued.
    pub fn profile<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<(T, ProfileCounters)> {
        self.profile_begin();
        let out = f(self);
        let delta = self.profile_end()?;
        Ok((out?, delta))
    }

    /// Lowers and executes one instruction, returning any read values.
    pub fn exec(&mut self, instr: &MacroInstruction) -> Result<Vec<u64>> {
        let ops = self.driver.lower(instr)?;
        let mut reads = Vec::new();
        for op in &ops {
            if let Some(v) = self.mem.execute(op, &mut self.counters)? {
                reads.push(v);
            }
        }
        if let Some(t) = &mut self.trace {
            t.extend_from_slice(&ops);
        }
        Ok(reads)
    }

    fn warps_needed(&self, len: usize) -> usize {
        len.div_ceil(self.hu())
    }

    fn free_over(&self, reg: usize, first: usize, count: usize) -> bool {
        first + count <= self.used.len() && (first..first + count).all(|w| !self.used[w][reg])
    }

    /// Largest tensor that would fit right now.
    pub fn largest_free(&self) -> usize {
        let mut best = 0;
        for reg in 0..self.config().user_regs {
            let mut run = 0;
            for w in &self.used {
                run = if w[reg] { 0 } else { run + 1 };
                best = best.max(run);
            }
        }
        best * self.hu()
    }

    /// Zero-initialized tensor. With a reference, the same warps are tried
    /// first so binary ops between the two need no moves.
    pub fn alloc(&mut self, len: usize, dtype: DType, reference: Option<&Tensor>) -> Result<Tensor> {
        let t = self.place(len, dtype, reference)?;
        self.write_broadcast(&t.view(), 0, true)?;
        Ok(t)
    }

    pub fn zeros(&mut self, len: usize, dtype: DType) -> Result<Tensor> {
        self.alloc(len, dtype, None)
    }

    /// Reserves memory without initializing it.
    fn place(&mut self, len: usize, dtype: DType, reference: Option<&Tensor>) -> Result<Tensor> {
        if len == 0 {
            return Err(TensorError::ZeroLength);
        }
        let count = self.warps_needed(len);
        let regs = self.config().user_regs;
        let mut found = None;
        if let Some(r) = reference {
            found = (0..regs).find(|&reg| self.free_over(reg, r.first_warp, count)).map(|reg| (r.first_warp, reg));
        }
        if found.is_none() {
            'outer: for first in 0..self.used.len() {
                for reg in 0..regs {
                    if self.free_over(reg, first, count) {
                        found = Some((first, reg));
                        break 'outer;
                    }
                }
            }
        }
        let Some((first_warp, reg)) = found else {
            return Err(TensorError::OutOfMemory { requested: len, largest: self.largest_free() });
        };
        for w in first_warp..first_warp + count {
            self.used[w][reg] = true;
        }
        let t = Tensor { id: self.next_id, dtype, len, first_warp, warp_count: count, reg };
        self.next_id += 1;
        self.live.insert(t.id, t);
        Ok(t)
    }

    pub fn free(&mut self, t: &Tensor) -> Result<()> {
        let t = self.live.remove(&t.id).ok_or(TensorError::NotLive(t.id))?;
        for w in t.first_warp..t.first_warp + t.warp_count {
            self.used[w][t.reg] = false;
        }
        Ok(())
    }

    pub fn is_live(&self, t: &Tensor) -> bool {
        self.live.contains_key(&t.id)
    }

    /// Live tensors, in allocation order.
    pub fn live_tensors(&self) -> Vec<Tensor> {
        let mut v: Vec<Tensor> = self.live.values().copied().collect();
        v.sort_by_key(|t| t.id);
        v
    }

    fn check_live(&self, v: &View) -> Result<()> {
        if self.live.contains_key(&v.base.id) {
            Ok(())
        } else {
            Err(TensorError::NotLive(v.base.id))
        }
    }

    /// (warp, row) of base element `i`.
    pub fn slot(&self, t: &Tensor, i: usize) -> (usize, usize) {
        let hu = self.hu();
        (t.first_warp + i / hu, i % hu)
    }

    pub fn get(&mut self, v: impl Into<View>, k: usize) -> Result<u32> {
        let v = v.into();
        self.check_live(&v)?;
        if k >= v.len {
            return Err(TensorError::IndexOutOfRange { index: k, len: v.len });
        }
        let (warp, thread) = self.slot(&v.base, v.index(k));
        let r = self.exec(&MacroInstruction::Read { warp, thread, reg: v.base.reg })?;
        Ok(r[0] as u32)
    }

    pub fn set(&mut self, v: impl Into<View>, k: usize, bits: u32) -> Result<()> {
        let v = v.into();
        self.check_live(&v)?;
        if k >= v.len {
            return Err(TensorError::IndexOutOfRange { index: k, len: v.len });
        }
        let (warp, thread) = self.slot(&v.base, v.index(k));
        self.exec(&MacroInstruction::Write {
            warp_mask: RangeMask::single(warp),
            thread_mask: RangeMask::single(thread),
            reg: v.base.reg,
            value: bits as u64,
        })?;
        Ok(())
    }

    pub fn get_f32(&mut self, v: impl Into<View>, k: usize) -> Result<f32> {
        self.get(v, k).map(f32::from_bits)
    }

    pub fn set_f32(&mut self, v: impl Into<View>, k: usize, x: f32) -> Result<()> {
        self.set(v, k, x.to_bits())
    }

    pub fn get_i32(&mut self, v: impl Into<View>, k: usize) -> Result<i32> {
        self.get(v, k).map(|b| b as i32)
    }

    pub fn set_i32(&mut self, v: impl Into<View>, k: usize, x: i32) -> Result<()> {
        self.set(v, k, x as u32)
    }

    /// Loads raw bit patterns into a new tensor.
    pub fn from_host(&mut self, values: &[u32], dtype: DType) -> Result<Tensor> {
        let t = self.place(values.len(), dtype, None)?;
        for (i, &x) in values.iter().enumerate() {
            self.set(t, i, x)?;
        }
        Ok(t)
    }

    pub fn from_f32(&mut self, values: &[f32]) -> Result<Tensor> {
        let bits: Vec<u32> = values.iter().map(|x| x.to_bits()).collect();
        self.from_host(&bits, DType::Float32)
    }

    pub fn from_i32(&mut self, values: &[i32]) -> Result<Tensor> {
        let bits: Vec<u32> = values.iter().map(|&x| x as u32).collect();
        self.from_host(&bits, DType::Int32)
    }

    pub fn to_host(&mut self, v: impl Into<View>) -> Result<Vec<u32>> {
        let v = v.into();
        (0..v.len).map(|k| self.get(v, k)).collect()
    }

    pub fn to_f32(&mut self, v: impl Into<View>) -> Result<Vec<f32>> {
        Ok(self.to_host(v)?.into_iter().map(f32::from_bits).collect())
    }

    pub fn to_i32(&mut self, v: impl Into<View>) -> Result<Vec<i32>> {
        Ok(self.to_host(v)?.into_iter().map(|b| b as i32).collect())
    }

    /// `(warp_mask, thread_mask)` groups covering the given slots.
    /// Consecutive warps with identical row patterns share a group.
    fn mask_groups(&self, slots: impl IntoIterator<Item = (usize, usize)>) -> Vec<(RangeMask, RangeMask)> {
        let mut per_warp: Vec<(usize, Vec<RangeMask>)> = Vec::new();
        let mut rows: Vec<usize> = Vec::new();
        let mut cur = None;
        let flush = |warp: Option<usize>, rows: &mut Vec<usize>, out: &mut Vec<(usize, Vec<RangeMask>)>| {
            if let Some(w) = warp {
                rows.sort_unstable();
                rows.dedup();
                out.push((w, progressions(rows)));
                rows.clear();
            }
        };
        let mut sorted: Vec<(usize, usize)> = slots.into_iter().collect();
        sorted.sort_unstable();
        for (w, r) in sorted {
            if cur != Some(w) {
                flush(cur, &mut rows, &mut per_warp);
                cur = Some(w);
            }
            rows.push(r);
        }
        flush(cur, &mut rows, &mut per_warp);

        let mut groups = Vec::new();
        let mut i = 0;
        while i < per_warp.len() {
            let mut j = i;
            while j + 1 < per_warp.len() && per_warp[j + 1].0 == per_warp[j].0 + 1 && per_warp[j + 1].1 == per_warp[i].1 {
                j += 1;
            }
            let warps = if i == j { RangeMask::single(per_warp[i].0) } else { RangeMask::new(per_warp[i].0, per_warp[j].0, 1) };
            for &rows in &per_warp[i].1 {
                groups.push((warps, rows));
            }
            i = j + 1;
        }
        groups
    }

    /// Mask groups for every slot of a view. With `widen`, each warp's row
    /// progression is extended to the whole warp, which is only safe when the
    /// other rows of the destination register are don't-care.
    fn view_groups(&self, v: &View, widen: bool) -> Vec<(RangeMask, RangeMask)> {
        if v.len == 0 {
            return Vec::new();
        }
        let hu = self.hu();
        if widen && v.step == 1 || widen && v.step < hu && hu.is_multiple_of(v.step) {
            // the row pattern repeats in every warp
            let (w0, _) = self.slot(&v.base, v.index(0));
            let (w1, _) = self.slot(&v.base, v.index(v.len - 1));
            let phase = v.start % v.step;
            let stop = phase + (hu - 1 - phase) / v.step * v.step;
            let rows = if phase == stop { RangeMask::single(phase) } else { RangeMask::new(phase, stop, v.step) };
            let warps = if w0 == w1 { RangeMask::single(w0) } else { RangeMask::new(w0, w1, 1) };
            return vec![(warps, rows)];
        }
        let slots: Vec<(usize, usize)> = (0..v.len).map(|k| self.slot(&v.base, v.index(k))).collect();
        self.mask_groups(slots)
    }

    /// Writes `bits` to every element of the view.
    fn write_broadcast(&mut self, v: &View, bits: u32, widen: bool) -> Result<()> {
        for (warp_mask, thread_mask) in self.view_groups(v, widen) {
            self.exec(&MacroInstruction::Write { warp_mask, thread_mask, reg: v.base.reg, value: bits as u64 })?;
        }
        Ok(())
    }

    /// Sets every element of a view to `bits`.
    pub fn fill(&mut self, v: impl Into<View>, bits: u32) -> Result<()> {
        let v = v.into();
        self.check_live(&v)?;
        self.write_broadcast(&v, bits, false)
    }
}

/// Splits sorted distinct rows into maximal arithmetic progressions.
fn progressions(rows: &[usize]) -> Vec<RangeMask> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        if i + 1 == rows.len() {
            out.push(RangeMask::single(rows[i]));
            break;
        }
        let step = rows[i + 1] - rows[i];
        let mut j = i + 1;
        while j + 1 < rows.len() && rows[j + 1] - rows[j] == step {
            j += 1;
        }
        out.push(RangeMask::new(rows[i], rows[j], step));
        i = j + 1;
    }
    out
}
