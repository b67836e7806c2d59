//! Micro-operations and their 64-bit encoding.
//!
//! Every word carries a 3-bit kind tag in bits `[63:61]`. The payload follows
//! immediately below the tag, fields packed most-significant first in the
//! order of the table below; each field is exactly as wide as its range
//! requires for the configured geometry, and the remaining low bits are zero.
//!
//! | tag | kind         | fields (width)                                                        |
//! |-----|--------------|-----------------------------------------------------------------------|
//! | 0   | CrossbarMask | start, stop, step (log2 X each)                                       |
//! | 1   | RowMask      | start, stop, step (log2 h each)                                       |
//! | 2   | Read         | index (log2 w/N)                                                      |
//! | 3   | Write        | index (log2 w/N), data (N)                                            |
//! | 4   | HLogic       | gate (2), InA, InB, Out (log2 N + log2 w/N each), pEND, pSTEP (log2 N) |
//! | 5   | VLogic       | gate (2), row_in, row_out (log2 h), index (log2 w/N)                  |
//! | 6   | Move         | xb_dest (log2 X), src_row, dst_row (log2 h), src_index, dst_index     |
//!
//! Column addresses are packed as partition then intra-partition index.
//! Mask steps are stored verbatim; a step of zero is only legal for a
//! singleton mask. For `w = 1024, N = 32` the horizontal logic payload is 42
//! bits, leaving 19 unused.

use std::fmt;

use thiserror::Error;

use crate::geometry::{ArchConfig, ColumnAddress};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unknown micro-op kind {0}")]
    UnknownKind(u8),
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("trace line {line}: {msg}")]
    Trace { line: usize, msg: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> CodecError {
    CodecError::InvalidField { field, reason: reason.into() }
}

/// `{start, start + step, ..., stop}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RangeMask {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl RangeMask {
    pub const fn new(start: usize, stop: usize, step: usize) -> Self {
        RangeMask { start, stop, step }
    }

    pub const fn single(index: usize) -> Self {
        RangeMask { start: index, stop: index, step: 0 }
    }

    /// `0..count`; `count` must be positive.
    pub fn first(count: usize) -> Self {
        RangeMask { start: 0, stop: count - 1, step: usize::from(count > 1) }
    }

    pub fn check(&self, limit: usize, field: &'static str) -> Result<(), CodecError> {
        if self.start > self.stop {
            return Err(invalid(field, format!("start {} > stop {}", self.start, self.stop)));
        }
        if self.stop >= limit {
            return Err(invalid(field, format!("stop {} >= limit {limit}", self.stop)));
        }
        if self.step >= limit.max(1) && self.step > 0 {
            return Err(invalid(field, format!("step {} >= limit {limit}", self.step)));
        }
        if self.step == 0 {
            if self.start != self.stop {
                return Err(invalid(field, "zero step on a non-singleton mask"));
            }
        } else if !(self.stop - self.start).is_multiple_of(self.step) {
            return Err(invalid(field, format!("step {} does not divide stop - start", self.step)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        if self.step == 0 {
            1
        } else {
            (self.stop - self.start) / self.step + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        if i < self.start || i > self.stop {
            return false;
        }
        self.step == 0 || (i - self.start).is_multiple_of(self.step)
    }

    /// Unchecked iteration; validate with [`RangeMask::check`] first.
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        let step = self.step.max(1);
        (self.start..=self.stop).step_by(step)
    }
}

impl fmt::Display for RangeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Expands a mask to its ascending index list.
pub fn expand_mask(mask: RangeMask, limit: usize) -> Result<Vec<usize>, CodecError> {
    mask.check(limit, "mask")?;
    Ok(mask.iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HGate {
    Init0 = 0,
    Init1 = 1,
    Not = 2,
    Nor = 3,
}

impl HGate {
    fn from_bits(v: u64) -> HGate {
        match v & 3 {
            0 => HGate::Init0,
            1 => HGate::Init1,
            2 => HGate::Not,
            _ => HGate::Nor,
        }
    }

    pub fn inputs(self) -> usize {
        match self {
            HGate::Init0 | HGate::Init1 => 0,
            HGate::Not => 1,
            HGate::Nor => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VGate {
    Init0 = 0,
    Init1 = 1,
    Not = 2,
}

/// Horizontal (row-parallel, partition-patterned) logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HLogic {
    pub gate: HGate,
    pub in_a: ColumnAddress,
    pub in_b: ColumnAddress,
    pub out: ColumnAddress,
    /// Partition of the last gate's output.
    pub p_end: usize,
    /// Distance between repeated gates; 0 for a single gate.
    pub p_step: usize,
}

impl HLogic {
    /// One gate, all operands at arbitrary partitions.
    pub fn single(gate: HGate, in_a: ColumnAddress, in_b: ColumnAddress, out: ColumnAddress) -> Self {
        HLogic { gate, in_a, in_b, out, p_end: out.partition, p_step: 0 }
    }

    /// One gate per partition over the whole row (register-wide bitwise op).
    pub fn parallel(gate: HGate, a: usize, b: usize, out: usize, word_n: usize) -> Self {
        HLogic {
            gate,
            in_a: ColumnAddress::new(0, a),
            in_b: ColumnAddress::new(0, b),
            out: ColumnAddress::new(0, out),
            p_end: word_n - 1,
            p_step: 1,
        }
    }

    pub fn gate_count(&self) -> usize {
        if self.p_step == 0 {
            1
        } else {
            (self.p_end - self.out.partition) / self.p_step + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MicroOp {
    CrossbarMask(RangeMask),
    RowMask(RangeMask),
    Read { intra_index: usize },
    Write { intra_index: usize, data: u64 },
    HLogic(HLogic),
    VLogic { gate: VGate, row_in: usize, row_out: usize, intra_index: usize },
    Move { xb_dest: usize, src_row: usize, dst_row: usize, src_index: usize, dst_index: usize },
}

/// Micro-op kinds, in tag order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    CrossbarMask = 0,
    RowMask = 1,
    Read = 2,
    Write = 3,
    HLogic = 4,
    VLogic = 5,
    Move = 6,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::CrossbarMask,
        OpKind::RowMask,
        OpKind::Read,
        OpKind::Write,
        OpKind::HLogic,
        OpKind::VLogic,
        OpKind::Move,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::CrossbarMask => "crossbar_mask",
            OpKind::RowMask => "row_mask",
            OpKind::Read => "read",
            OpKind::Write => "write",
            OpKind::HLogic => "hlogic",
            OpKind::VLogic => "vlogic",
            OpKind::Move => "move",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl MicroOp {
    pub fn kind(&self) -> OpKind {
        match self {
            MicroOp::CrossbarMask(_) => OpKind::CrossbarMask,
            MicroOp::RowMask(_) => OpKind::RowMask,
            MicroOp::Read { .. } => OpKind::Read,
            MicroOp::Write { .. } => OpKind::Write,
            MicroOp::HLogic(_) => OpKind::HLogic,
            MicroOp::VLogic { .. } => OpKind::VLogic,
            MicroOp::Move { .. } => OpKind::Move,
        }
    }

    /// Static field checks against the geometry. Pattern partitions that run
    /// off the row are caught later, when the opcodes are derived.
    pub fn validate(&self, cfg: &ArchConfig) -> Result<(), CodecError> {
        let regs = cfg.regs_per_row();
        let idx = |v: usize, field: &'static str| {
            if v < regs {
                Ok(())
            } else {
                Err(invalid(field, format!("{v} >= w/N = {regs}")))
            }
        };
        let row = |v: usize, field: &'static str| {
            if v < cfg.rows_h {
                Ok(())
            } else {
                Err(invalid(field, format!("{v} >= h = {}", cfg.rows_h)))
            }
        };
        match *self {
            MicroOp::CrossbarMask(m) => m.check(cfg.num_crossbars, "crossbar_mask"),
            MicroOp::RowMask(m) => m.check(cfg.rows_h, "row_mask"),
            MicroOp::Read { intra_index } => idx(intra_index, "index"),
            MicroOp::Write { intra_index, data } => {
                idx(intra_index, "index")?;
                if data & !cfg.word_mask() != 0 {
                    return Err(invalid("data", "wider than N bits"));
                }
                Ok(())
            }
            MicroOp::HLogic(h) => {
                for (addr, field) in [(h.in_a, "in_a"), (h.in_b, "in_b"), (h.out, "out")] {
                    if addr.partition >= cfg.word_n {
                        return Err(invalid(field, format!("partition {} >= N", addr.partition)));
                    }
                    idx(addr.intra_index, field)?;
                }
                if h.p_end >= cfg.word_n {
                    return Err(invalid("p_end", format!("{} >= N", h.p_end)));
                }
                if h.p_step >= cfg.word_n.max(2) {
                    return Err(invalid("p_step", format!("{} >= N", h.p_step)));
                }
                if h.in_a.partition > h.in_b.partition {
                    return Err(invalid("in_b", "requires p_A <= p_B"));
                }
                if h.p_end < h.out.partition {
                    return Err(invalid("p_end", "precedes the first output partition"));
                }
                if h.p_step == 0 {
                    if h.p_end != h.out.partition {
                        return Err(invalid("p_step", "zero step requires p_end == p_out"));
                    }
                } else if (h.p_end - h.out.partition) % h.p_step != 0 {
                    return Err(invalid("p_step", "does not divide p_end - p_out"));
                }
                Ok(())
            }
            MicroOp::VLogic { row_in, row_out, intra_index, .. } => {
                row(row_in, "row_in")?;
                row(row_out, "row_out")?;
                idx(intra_index, "index")
            }
            MicroOp::Move { xb_dest, src_row, dst_row, src_index, dst_index } => {
                if xb_dest >= cfg.num_crossbars {
                    return Err(invalid("xb_dest", format!("{xb_dest} >= crossbar count")));
                }
                row(src_row, "src_row")?;
                row(dst_row, "dst_row")?;
                idx(src_index, "src_index")?;
                idx(dst_index, "dst_index")
            }
        }
    }
}

impl fmt::Display for MicroOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MicroOp::CrossbarMask(m) => write!(f, "xbmask {m}"),
            MicroOp::RowMask(m) => write!(f, "rowmask {m}"),
            MicroOp::Read { intra_index } => write!(f, "read r{intra_index}"),
            MicroOp::Write { intra_index, data } => write!(f, "write r{intra_index} {data:#x}"),
            MicroOp::HLogic(h) => write!(
                f,
                "hlogic {:?} {} {} -> {} end={} step={}",
                h.gate, h.in_a, h.in_b, h.out, h.p_end, h.p_step
            ),
            MicroOp::VLogic { gate, row_in, row_out, intra_index } => {
                write!(f, "vlogic {gate:?} row{row_in} -> row{row_out} r{intra_index}")
            }
            MicroOp::Move { xb_dest, src_row, dst_row, src_index, dst_index } => write!(
                f,
                "move xb{xb_dest} row{src_row}:r{src_index} -> row{dst_row}:r{dst_index}"
            ),
        }
    }
}

/// Payload widths (excluding the tag) of every kind for a geometry.
pub fn payload_widths(cfg: &ArchConfig) -> Vec<(OpKind, u32)> {
    let x = cfg.crossbar_bits();
    let r = cfg.row_bits();
    let p = cfg.partition_bits();
    let i = cfg.intra_bits();
    vec![
        (OpKind::CrossbarMask, 3 * x),
        (OpKind::RowMask, 3 * r),
        (OpKind::Read, i),
        (OpKind::Write, i + cfg.word_n as u32),
        (OpKind::HLogic, 2 + 3 * (p + i) + 2 * p),
        (OpKind::VLogic, 2 + 2 * r + i),
        (OpKind::Move, x + 2 * r + 2 * i),
    ]
}

struct Packer {
    word: u64,
    pos: u32,
}

impl Packer {
    fn new(tag: u64) -> Self {
        Packer { word: tag << 61, pos: 61 }
    }

    fn put(&mut self, value: u64, width: u32) {
        if width == 0 {
            return;
        }
        debug_assert!(width == 64 || value >> width == 0);
        self.pos -= width;
        self.word |= value << self.pos;
    }
}

struct Unpacker {
    word: u64,
    pos: u32,
}

impl Unpacker {
    fn take(&mut self, width: u32) -> u64 {
        if width == 0 {
            return 0;
        }
        self.pos -= width;
        (self.word >> self.pos) & ((1u64 << width) - 1)
    }

    fn take_usize(&mut self, width: u32) -> usize {
        self.take(width) as usize
    }
}

pub fn encode(op: &MicroOp, cfg: &ArchConfig) -> Result<u64, CodecError> {
    op.validate(cfg)?;
    let x = cfg.crossbar_bits();
    let r = cfg.row_bits();
    let p = cfg.partition_bits();
    let i = cfg.intra_bits();
    let mut pk = Packer::new(op.kind() as u64);
    let addr = |pk: &mut Packer, a: ColumnAddress| {
        pk.put(a.partition as u64, p);
        pk.put(a.intra_index as u64, i);
    };
    match *op {
        MicroOp::CrossbarMask(m) | MicroOp::RowMask(m) => {
            let w = if matches!(op, MicroOp::CrossbarMask(_)) { x } else { r };
            if w < usize::BITS && m.step >> w != 0 {
                return Err(invalid("step", format!("{} does not fit {w} bits", m.step)));
            }
            pk.put(m.start as u64, w);
            pk.put(m.stop as u64, w);
            pk.put(m.step as u64, w);
        }
        MicroOp::Read { intra_index } => pk.put(intra_index as u64, i),
        MicroOp::Write { intra_index, data } => {
            pk.put(intra_index as u64, i);
            pk.put(data, cfg.word_n as u32);
        }
        MicroOp::HLogic(h) => {
            pk.put(h.gate as u64, 2);
            addr(&mut pk, h.in_a);
            addr(&mut pk, h.in_b);
            addr(&mut pk, h.out);
            pk.put(h.p_end as u64, p);
            pk.put(h.p_step as u64, p);
        }
        MicroOp::VLogic { gate, row_in, row_out, intra_index } => {
            pk.put(gate as u64, 2);
            pk.put(row_in as u64, r);
            pk.put(row_out as u64, r);
            pk.put(intra_index as u64, i);
        }
        MicroOp::Move { xb_dest, src_row, dst_row, src_index, dst_index } => {
            pk.put(xb_dest as u64, x);
            pk.put(src_row as u64, r);
            pk.put(dst_row as u64, r);
            pk.put(src_index as u64, i);
            pk.put(dst_index as u64, i);
        }
    }
    Ok(pk.word)
}

pub fn decode(word: u64, cfg: &ArchConfig) -> Result<MicroOp, CodecError> {
    let tag = (word >> 61) as u8;
    let x = cfg.crossbar_bits();
    let r = cfg.row_bits();
    let p = cfg.partition_bits();
    let i = cfg.intra_bits();
    let mut up = Unpacker { word, pos: 61 };
    let addr = |up: &mut Unpacker| {
        let partition = up.take_usize(p);
        let intra_index = up.take_usize(i);
        ColumnAddress::new(partition, intra_index)
    };
    let op = match tag {
        0 | 1 => {
            let w = if tag == 0 { x } else { r };
            let m = RangeMask::new(up.take_usize(w), up.take_usize(w), up.take_usize(w));
            if tag == 0 {
                MicroOp::CrossbarMask(m)
            } else {
                MicroOp::RowMask(m)
            }
        }
        2 => MicroOp::Read { intra_index: up.take_usize(i) },
        3 => {
            let intra_index = up.take_usize(i);
            let data = up.take(cfg.word_n as u32);
            MicroOp::Write { intra_index, data }
        }
        4 => {
            let gate = HGate::from_bits(up.take(2));
            let in_a = addr(&mut up);
            let in_b = addr(&mut up);
            let out = addr(&mut up);
            let p_end = up.take_usize(p);
            let p_step = up.take_usize(p);
            MicroOp::HLogic(HLogic { gate, in_a, in_b, out, p_end, p_step })
        }
        5 => {
            let gate = match up.take(2) {
                0 => VGate::Init0,
                1 => VGate::Init1,
                2 => VGate::Not,
                _ => return Err(invalid("gate", "vertical logic supports INIT0, INIT1 and NOT only")),
            };
            let row_in = up.take_usize(r);
            let row_out = up.take_usize(r);
            let intra_index = up.take_usize(i);
            MicroOp::VLogic { gate, row_in, row_out, intra_index }
        }
        6 => MicroOp::Move {
            xb_dest: up.take_usize(x),
            src_row: up.take_usize(r),
            dst_row: up.take_usize(r),
            src_index: up.take_usize(i),
            dst_index: up.take_usize(i),
        },
        other => return Err(CodecError::UnknownKind(other)),
    };
    op.validate(cfg)?;
    Ok(op)
}

/// One lowercase 16-digit hex word per line.
pub fn write_trace(words: &[u64]) -> String {
    let mut out = String::with_capacity(words.len() * 17);
    for w in words {
        out.push_str(&format!("{w:016x}\n"));
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<u64>, CodecError> {
    let mut words = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.len() != 16 {
            return Err(CodecError::Trace { line: n + 1, msg: format!("expected 16 hex digits, got `{line}`") });
        }
        let w = u64::from_str_radix(line, 16)
            .map_err(|e| CodecError::Trace { line: n + 1, msg: e.to_string() })?;
        words.push(w);
    }
    Ok(words)
}
