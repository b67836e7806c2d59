//! Bit-accurate execution of micro-operations.
//!
//! Each crossbar is stored as bit-planes: one packed run of `u64`s per
//! column, bit `b` of word `k` holding row `64k + b`. A gate over all masked
//! rows then touches `h / 64` words per column.

pub mod halfgate;

use std::fmt;
use std::ops::{AddAssign, Sub};

use thiserror::Error;

use crate::geometry::{is_power_of_four, ArchConfig};
use crate::microop::{decode, CodecError, HGate, HLogic, MicroOp, OpKind, RangeMask, VGate};

pub use halfgate::{
    derive_opcodes, derive_transistors, resolve, sections, validate_sections, Direction,
    PartitionOpcode, SectionGate,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid operation: {0}")]
    InvalidOperation(String),
    #[error("uninitialized output in crossbar {crossbar}, row {row}")]
    UninitializedOutput { crossbar: usize, row: usize },
    #[error("read requires a single crossbar and a single row")]
    AmbiguousRead,
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("trace line {line}: {source}")]
    Trace { line: usize, source: Box<SimError> },
}

/// Cycles per micro-op kind; every executed op costs one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ProfileCounters {
    pub by_kind: [u64; 7],
}

impl ProfileCounters {
    pub fn record(&mut self, kind: OpKind) {
        self.by_kind[kind as usize] += 1;
    }

    pub fn get(&self, kind: OpKind) -> u64 {
        self.by_kind[kind as usize]
    }

    pub fn total(&self) -> u64 {
        self.by_kind.iter().sum()
    }

    /// `kind: cycles` lines followed by the total.
    pub fn report(&self) -> String {
        let mut s = String::new();
        for k in OpKind::ALL {
            s.push_str(&format!("{:<14}{}\n", k.name(), self.get(k)));
        }
        s.push_str(&format!("{:<14}{}\n", "total", self.total()));
        s
    }
}

impl AddAssign for ProfileCounters {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.by_kind.iter_mut().zip(rhs.by_kind) {
            *a += b;
        }
    }
}

impl Sub for ProfileCounters {
    type Output = ProfileCounters;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for (a, b) in out.by_kind.iter_mut().zip(rhs.by_kind) {
            *a -= b;
        }
        out
    }
}

impl fmt::Display for ProfileCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.report())
    }
}

#[derive(Debug, Clone)]
pub struct MemoryState {
    cfg: ArchConfig,
    strict: bool,
    /// `u64` words per column
    wpc: usize,
    /// per crossbar, `planes[column * wpc + k]` bit `b` holds row `64k + b`
    planes: Vec<Vec<u64>>,
    xb_mask: RangeMask,
    active: Vec<usize>,
    row_mask: RangeMask,
    row_bits: Vec<u64>,
    /// words of `row_bits` that may be nonzero
    row_words: std::ops::Range<usize>,
}

impl MemoryState {
    /// All cells zero, crossbar 0 and row 0 selected.
    pub fn new(cfg: &ArchConfig) -> Self {
        let wpc = cfg.rows_h.div_ceil(64);
        let mut st = MemoryState {
            cfg: cfg.clone(),
            strict: cfg.strict_init,
            wpc,
            planes: vec![vec![0; cfg.cols_w * wpc]; cfg.num_crossbars],
            xb_mask: RangeMask::single(0),
            active: vec![0],
            row_mask: RangeMask::single(0),
            row_bits: vec![0; wpc],
            row_words: 0..0,
        };
        st.set_row_mask(RangeMask::single(0));
        st
    }

    pub fn config(&self) -> &ArchConfig {
        &self.cfg
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    /// Checked mode rejects NOR/NOT on outputs that are not initialized to 1.
    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn row_mask(&self) -> RangeMask {
        self.row_mask
    }

    pub fn crossbar_mask(&self) -> RangeMask {
        self.xb_mask
    }

    pub fn is_active(&self, xb: usize) -> bool {
        self.xb_mask.contains(xb)
    }

    fn set_row_mask(&mut self, m: RangeMask) {
        self.row_mask = m;
        self.row_bits.iter_mut().for_each(|w| *w = 0);
        for r in m.iter() {
            self.row_bits[r / 64] |= 1 << (r % 64);
        }
        self.row_words = m.start / 64..m.stop / 64 + 1;
    }

    #[inline]
    fn col(&self, partition: usize, intra: usize) -> usize {
        partition * (self.cfg.cols_w / self.cfg.word_n) + intra
    }

    #[inline]
    fn bit(&self, xb: usize, row: usize, column: usize) -> bool {
        self.planes[xb][column * self.wpc + row / 64] >> (row % 64) & 1 == 1
    }

    #[inline]
    fn set_bit(&mut self, xb: usize, row: usize, column: usize, v: bool) {
        let w = &mut self.planes[xb][column * self.wpc + row / 64];
        if v {
            *w |= 1 << (row % 64);
        } else {
            *w &= !(1 << (row % 64));
        }
    }

    /// Direct access for loading and inspection; not a micro-op.
    pub fn peek(&self, xb: usize, row: usize, intra: usize) -> u64 {
        (0..self.cfg.word_n).fold(0, |acc, j| acc | (self.bit(xb, row, self.col(j, intra)) as u64) << j)
    }

    pub fn poke(&mut self, xb: usize, row: usize, intra: usize, word: u64) {
        for j in 0..self.cfg.word_n {
            let c = self.col(j, intra);
            self.set_bit(xb, row, c, word >> j & 1 == 1);
        }
    }

    pub fn cell(&self, xb: usize, row: usize, column: usize) -> bool {
        assert!(column < self.cfg.cols_w, "column in range");
        self.bit(xb, row, column)
    }

    /// Raw grid per crossbar, row-major, one bit per cell packed LSB-first
    /// into bytes (`w / 8` bytes per row, padded when `w` is not a multiple of 8).
    pub fn snapshot(&self) -> Vec<u8> {
        let w = self.cfg.cols_w;
        let row_bytes = w.div_ceil(8);
        let mut out = Vec::with_capacity(self.cfg.num_crossbars * self.cfg.rows_h * row_bytes);
        for xb in 0..self.cfg.num_crossbars {
            for row in 0..self.cfg.rows_h {
                let mut bytes = vec![0u8; row_bytes];
                for c in 0..w {
                    if self.bit(xb, row, c) {
                        bytes[c / 8] |= 1 << (c % 8);
                    }
                }
                out.extend_from_slice(&bytes);
            }
        }
        out
    }

    /// Preloads every cell from `f(xb, row, intra)` (masked to N bits).
    pub fn fill_with(&mut self, mut f: impl FnMut(usize, usize, usize) -> u64) {
        let (h, regs) = (self.cfg.rows_h, self.cfg.regs_per_row());
        for xb in 0..self.cfg.num_crossbars {
            for intra in 0..regs {
                for row in 0..h {
                    let v = f(xb, row, intra);
                    self.poke(xb, row, intra, v);
                }
            }
        }
    }

    pub fn execute(&mut self, op: &MicroOp, counters: &mut ProfileCounters) -> Result<Option<u64>, SimError> {
        op.validate(&self.cfg)?;
        let result = match *op {
            MicroOp::CrossbarMask(m) => {
                self.xb_mask = m;
                self.active = m.iter().collect();
                None
            }
            MicroOp::RowMask(m) => {
                self.set_row_mask(m);
                None
            }
            MicroOp::Read { intra_index } => {
                if self.active.len() != 1 || self.row_mask.len() != 1 {
                    return Err(SimError::AmbiguousRead);
                }
                Some(self.peek(self.active[0], self.row_mask.start, intra_index))
            }
            MicroOp::Write { intra_index, data } => {
                let wpc = self.wpc;
                for j in 0..self.cfg.word_n {
                    let base = self.col(j, intra_index) * wpc;
                    let one = data >> j & 1 == 1;
                    for &xb in &self.active {
                        let plane = &mut self.planes[xb][base..base + wpc];
                        for k in self.row_words.clone() {
                            let m = self.row_bits[k];
                            plane[k] = if one { plane[k] | m } else { plane[k] & !m };
                        }
                    }
                }
                None
            }
            MicroOp::HLogic(h) => {
                self.hlogic(&h)?;
                None
            }
            MicroOp::VLogic { gate, row_in, row_out, intra_index } => {
                self.vlogic(gate, row_in, row_out, intra_index)?;
                None
            }
            MicroOp::Move { xb_dest, src_row, dst_row, src_index, dst_index } => {
                self.move_words(xb_dest, src_row, dst_row, src_index, dst_index)?;
                None
            }
        };
        counters.record(op.kind());
        Ok(result)
    }

    fn hlogic(&mut self, op: &HLogic) -> Result<(), SimError> {
        let gates = resolve(op, &self.cfg)?;
        if gates.is_empty() {
            return Ok(());
        }
        let wpc = self.wpc;
        let cols: Vec<(usize, usize, usize)> = gates
            .iter()
            .map(|g| {
                (
                    self.col(g.a, op.in_a.intra_index) * wpc,
                    self.col(g.b, op.in_b.intra_index) * wpc,
                    self.col(g.out, op.out.intra_index) * wpc,
                )
            })
            .collect();
        let words = self.row_words.clone();
        let rb = &self.row_bits;

        match op.gate {
            HGate::Init0 | HGate::Init1 => {
                let set = op.gate == HGate::Init1;
                for &xb in &self.active {
                    let plane = &mut self.planes[xb];
                    for &(_, _, o) in &cols {
                        for k in words.clone() {
                            let w = &mut plane[o + k];
                            *w = if set { *w | rb[k] } else { *w & !rb[k] };
                        }
                    }
                }
                return Ok(());
            }
            HGate::Not | HGate::Nor => {}
        }

        if self.strict {
            for &xb in &self.active {
                let plane = &self.planes[xb];
                for &(_, _, o) in &cols {
                    for k in words.clone() {
                        let stale = !plane[o + k] & rb[k];
                        if stale != 0 {
                            let row = k * 64 + stale.trailing_zeros() as usize;
                            return Err(SimError::UninitializedOutput { crossbar: xb, row });
                        }
                    }
                }
            }
        }
        // Sections are disjoint, so no gate's output column is another's input.
        let nor = op.gate == HGate::Nor;
        for &xb in &self.active {
            let plane = &mut self.planes[xb];
            for &(a, b, o) in &cols {
                for k in words.clone() {
                    let inputs = if nor { plane[a + k] | plane[b + k] } else { plane[a + k] };
                    plane[o + k] &= !(inputs & rb[k]);
                }
            }
        }
        Ok(())
    }

    fn vlogic(&mut self, gate: VGate, row_in: usize, row_out: usize, intra: usize) -> Result<(), SimError> {
        let n = self.cfg.word_n;
        if gate == VGate::Not && self.strict {
            for &xb in &self.active {
                if (0..n).any(|j| !self.bit(xb, row_out, self.col(j, intra))) {
                    return Err(SimError::UninitializedOutput { crossbar: xb, row: row_out });
                }
            }
        }
        for xi in 0..self.active.len() {
            let xb = self.active[xi];
            for j in 0..n {
                let c = self.col(j, intra);
                let v = match gate {
                    VGate::Init0 => false,
                    VGate::Init1 => true,
                    VGate::Not => self.bit(xb, row_out, c) && !self.bit(xb, row_in, c),
                };
                self.set_bit(xb, row_out, c, v);
            }
        }
        Ok(())
    }

    fn move_words(
        &mut self,
        xb_dest: usize,
        src_row: usize,
        dst_row: usize,
        src_index: usize,
        dst_index: usize,
    ) -> Result<(), SimError> {
        let m = self.xb_mask;
        if xb_dest < m.start {
            return Err(SimError::InvalidMove(format!(
                "destination {xb_dest} precedes mask start {}",
                m.start
            )));
        }
        if m.len() > 1 && !is_power_of_four(m.step) {
            return Err(SimError::InvalidMove(format!("crossbar step {} is not a power of 4", m.step)));
        }
        let d = xb_dest - m.start;
        let mut words = Vec::with_capacity(self.active.len());
        for &xb in &self.active {
            let dst = xb + d;
            if dst >= self.cfg.num_crossbars {
                return Err(SimError::InvalidMove(format!("destination crossbar {dst} out of range")));
            }
            if m.contains(dst) {
                return Err(SimError::InvalidMove(format!("crossbar {dst} is both source and destination")));
            }
            words.push((dst, self.peek(xb, src_row, src_index)));
        }
        for (dst, w) in words {
            self.poke(dst, dst_row, dst_index, w);
        }
        Ok(())
    }

    /// Decodes and executes a trace; reads are returned in issue order.
    pub fn run_trace(&mut self, words: &[u64]) -> Result<(Vec<u64>, ProfileCounters), SimError> {
        let mut counters = ProfileCounters::default();
        let mut reads = Vec::new();
        for (i, &w) in words.iter().enumerate() {
            let wrap = |e: SimError| SimError::Trace { line: i + 1, source: Box::new(e) };
            let op = decode(w, &self.cfg).map_err(|e| wrap(e.into()))?;
            if let Some(v) = self.execute(&op, &mut counters).map_err(wrap)? {
                reads.push(v);
            }
        }
        Ok((reads, counters))
    }
}
