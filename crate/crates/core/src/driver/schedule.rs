//! Bit-serial scheduling of a netlist onto one row.
//!
//! Operand bit `j` of source `s` sits at `(partition j, srcs[s])`; output bit
//! `j` must land at `(partition j, dst)`. Intermediate values live in scratch
//! registers. Every gate is a single-gate horizontal op, so its output
//! partition must be legal for the half-gate rules: a NOR with inputs in
//! partitions `pa <= pb` can write anywhere except `pa..pb`.
//!
//! Outputs must start at 1 in checked mode. Scratch cells are re-initialized
//! lazily: when a partition runs out of clean cells, one INIT1 resets the
//! longest run of partitions of some scratch register that holds no live
//! value, which amortizes initialization over many later gates.

use crate::geometry::{ArchConfig, ColumnAddress};
use crate::microop::{HGate, HLogic, MicroOp};

use super::netlist::{Netlist, Node, Sig};
use super::DriverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Clean,
    Dirty,
    Live,
}

struct Pool {
    regs: Vec<usize>,
    /// `cells[slot][partition]`
    cells: Vec<Vec<Cell>>,
    reserved: Vec<bool>,
}

struct Ctx {
    n: usize,
    dst: usize,
    ops: Vec<MicroOp>,
    pool: Pool,
    loc: Vec<Option<(usize, usize)>>,
    /// slot index of a scratch location, when it is one
    slot_of: Vec<Option<usize>>,
}

fn gate_op(gate: HGate, a: (usize, usize), b: (usize, usize), out: (usize, usize)) -> MicroOp {
    let (a, b) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    MicroOp::HLogic(HLogic::single(
        gate,
        ColumnAddress::new(a.0, a.1),
        ColumnAddress::new(b.0, b.1),
        ColumnAddress::new(out.0, out.1),
    ))
}

/// INIT over partitions `lo..=hi` of register `reg`.
pub fn init_range(gate: HGate, reg: usize, lo: usize, hi: usize) -> MicroOp {
    let at = ColumnAddress::new(lo, reg);
    MicroOp::HLogic(HLogic { gate, in_a: at, in_b: at, out: at, p_end: hi, p_step: usize::from(hi > lo) })
}

pub fn legal_nor_out(pa: usize, pb: usize, p: usize) -> bool {
    let (lo, hi) = if pa <= pb { (pa, pb) } else { (pb, pa) };
    p >= hi || p < lo
}

impl Ctx {
    /// Finds (and if needed initializes) a clean scratch cell in a legal
    /// partition as close to `hint` as possible.
    fn alloc(&mut self, hint: usize, legal: &dyn Fn(usize) -> bool) -> Result<(usize, usize), DriverError> {
        let n = self.n;
        let mut order: Vec<usize> = (0..n).filter(|&p| legal(p)).collect();
        order.sort_by_key(|&p| (p.abs_diff(hint), p));
        for &p in &order {
            let slots = self.pool.cells.len();
            if let Some(s) = (0..slots).find(|&s| !self.pool.reserved[s] && self.pool.cells[s][p] == Cell::Clean) {
                return Ok(self.take(s, p));
            }
            let mut best: Option<(usize, usize, usize, usize)> = None;
            for s in 0..slots {
                if self.pool.reserved[s] || self.pool.cells[s][p] == Cell::Live {
                    continue;
                }
                let row = &self.pool.cells[s];
                let mut lo = p;
                while lo > 0 && row[lo - 1] != Cell::Live {
                    lo -= 1;
                }
                let mut hi = p;
                while hi + 1 < n && row[hi + 1] != Cell::Live {
                    hi += 1;
                }
                let score = row[lo..=hi].iter().filter(|&&c| c == Cell::Dirty).count();
                if best.is_none_or(|b| score > b.0) {
                    best = Some((score, s, lo, hi));
                }
            }
            if let Some((_, s, lo, hi)) = best {
                self.ops.push(init_range(HGate::Init1, self.pool.regs[s], lo, hi));
                for c in &mut self.pool.cells[s][lo..=hi] {
                    *c = Cell::Clean;
                }
                return Ok(self.take(s, p));
            }
        }
        Err(DriverError::ScratchExhausted)
    }

    fn take(&mut self, slot: usize, p: usize) -> (usize, usize) {
        self.pool.cells[slot][p] = Cell::Live;
        (p, self.pool.regs[slot])
    }

    fn release(&mut self, v: Sig) {
        if let (Some((p, _)), Some(s)) = (self.loc[v as usize], self.slot_of[v as usize]) {
            self.pool.cells[s][p] = Cell::Dirty;
            self.slot_of[v as usize] = None;
        }
    }

    fn place(&mut self, v: Sig, at: (usize, usize)) {
        self.loc[v as usize] = Some(at);
        self.slot_of[v as usize] = self.pool.regs.iter().position(|&r| r == at.1);
        if at.1 == self.dst {
            self.slot_of[v as usize] = None;
        }
    }

    /// Scratch copy of the value at `from`, placed near partition `near`.
    fn copy_near(&mut self, from: (usize, usize), near: usize) -> Result<(usize, usize), DriverError> {
        let t = self.alloc(near, &|_| true)?;
        self.ops.push(gate_op(HGate::Not, from, from, t));
        let c = self.alloc(near, &|_| true)?;
        self.ops.push(gate_op(HGate::Not, t, t, c));
        self.free_cell(t);
        Ok(c)
    }

    fn free_cell(&mut self, at: (usize, usize)) {
        let s = self.pool.regs.iter().position(|&r| r == at.1).unwrap();
        self.pool.cells[s][at.0] = Cell::Dirty;
    }

    /// Copies the value at `from` into `(dst, j)` through a scratch complement.
    fn relocate(&mut self, from: (usize, usize), j: usize) -> Result<(), DriverError> {
        let t = self.alloc(j, &|_| true)?;
        self.ops.push(gate_op(HGate::Not, from, from, t));
        self.ops.push(gate_op(HGate::Not, t, t, (j, self.dst)));
        self.free_cell(t);
        Ok(())
    }
}

/// Emits the gate ops (no masks) computing `outputs` into `dst`.
pub fn schedule(
    net: &Netlist,
    outputs: &[Sig],
    srcs: &[usize],
    dst: usize,
    cfg: &ArchConfig,
) -> Result<Vec<MicroOp>, DriverError> {
    let n = cfg.word_n;
    assert_eq!(outputs.len(), n);
    let regs: Vec<usize> = cfg.scratch_regs().collect();
    let pool = Pool { cells: vec![vec![Cell::Dirty; n]; regs.len()], reserved: vec![false; regs.len()], regs };
    let nodes = net.nodes();
    let mut cx = Ctx {
        n,
        dst,
        ops: Vec::new(),
        pool,
        loc: vec![None; nodes.len()],
        slot_of: vec![None; nodes.len()],
    };

    // sources aliasing the destination are copied away first
    let mut src_regs = srcs.to_vec();
    if srcs.contains(&dst) {
        let (s1, s2) = (cx.pool.regs.len() - 2, cx.pool.regs.len() - 1);
        let (t1, t2) = (cx.pool.regs[s1], cx.pool.regs[s2]);
        cx.ops.push(MicroOp::HLogic(HLogic::parallel(HGate::Init1, t1, t1, t1, n)));
        cx.ops.push(MicroOp::HLogic(HLogic::parallel(HGate::Not, dst, dst, t1, n)));
        cx.ops.push(MicroOp::HLogic(HLogic::parallel(HGate::Init1, t2, t2, t2, n)));
        cx.ops.push(MicroOp::HLogic(HLogic::parallel(HGate::Not, t1, t1, t2, n)));
        cx.pool.reserved[s2] = true;
        for r in src_regs.iter_mut() {
            if *r == dst {
                *r = t2;
            }
        }
    }

    let reach = net.reachable(outputs);
    let mut uses = vec![0u32; nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        if !reach[i] {
            continue;
        }
        match *node {
            Node::Not(x) => uses[x as usize] += 1,
            Node::Nor(x, y) => {
                uses[x as usize] += 1;
                uses[y as usize] += 1;
            }
            _ => {}
        }
    }
    let mut out_bits: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (j, &o) in outputs.iter().enumerate() {
        out_bits[o as usize].push(j);
    }

    let all_false = outputs.iter().all(|&o| net.as_const(o) == Some(false));
    if all_false {
        cx.ops.push(init_range(HGate::Init0, dst, 0, n - 1));
        return Ok(cx.ops);
    }
    cx.ops.push(init_range(HGate::Init1, dst, 0, n - 1));

    let mut filled = vec![false; n];
    for (i, node) in nodes.iter().enumerate() {
        if let Node::Input { src, bit } = *node {
            cx.loc[i] = Some((bit as usize, src_regs[src as usize]));
            for &j in &out_bits[i] {
                cx.relocate((bit as usize, src_regs[src as usize]), j)?;
                filled[j] = true;
            }
        }
    }

    for (i, node) in nodes.iter().enumerate() {
        if !reach[i] {
            continue;
        }
        let (gate, a, b) = match *node {
            Node::Not(x) => (HGate::Not, x, x),
            Node::Nor(x, y) => (HGate::Nor, x, y),
            _ => continue,
        };
        let (mut la, mut lb) = (cx.loc[a as usize].expect("operand scheduled"), cx.loc[b as usize].expect("operand scheduled"));
        let legal = move |p: usize| gate == HGate::Not || legal_nor_out(la.0, lb.0, p);
        let direct = out_bits[i].iter().copied().find(|&j| !filled[j] && legal(j));
        let mut copied = None;
        let at = match direct {
            Some(j) => {
                filled[j] = true;
                (j, dst)
            }
            None => match cx.alloc(net.home_of(i as Sig), &legal) {
                Ok(at) => at,
                Err(DriverError::ScratchExhausted) if gate == HGate::Nor => {
                    // every legal partition is full: bring the higher operand
                    // next to the lower one, which frees up almost every partition
                    let hi_is_b = lb.0 >= la.0;
                    let (lo, hi) = if hi_is_b { (la, lb) } else { (lb, la) };
                    let c = cx.copy_near(hi, lo.0)?;
                    copied = Some(c);
                    if hi_is_b {
                        lb = c;
                    } else {
                        la = c;
                    }
                    cx.alloc(net.home_of(i as Sig), &move |p| legal_nor_out(la.0, lb.0, p))?
                }
                Err(e) => return Err(e),
            },
        };
        cx.ops.push(gate_op(gate, la, lb, at));
        if let Some(c) = copied {
            cx.free_cell(c);
        }
        cx.place(i as Sig, at);
        for x in if a == b { vec![a] } else { vec![a, b] } {
            uses[x as usize] -= 1;
            if uses[x as usize] == 0 {
                cx.release(x);
            }
        }
        let pending: Vec<usize> = out_bits[i].iter().copied().filter(|&j| !filled[j]).collect();
        for j in pending {
            cx.relocate(at, j)?;
            filled[j] = true;
        }
        if uses[i] == 0 {
            cx.release(i as Sig);
        }
    }

    // constant-zero outputs, grouped into contiguous runs
    let zeros: Vec<usize> = (0..n).filter(|&j| net.as_const(outputs[j]) == Some(false)).collect();
    let mut k = 0;
    while k < zeros.len() {
        let mut e = k;
        while e + 1 < zeros.len() && zeros[e + 1] == zeros[e] + 1 {
            e += 1;
        }
        cx.ops.push(init_range(HGate::Init0, dst, zeros[k], zeros[e]));
        k = e + 1;
    }
    Ok(cx.ops)
}
