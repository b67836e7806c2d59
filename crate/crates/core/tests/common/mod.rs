//! A deliberately naive cell-by-cell model of the crossbar memory, used as an
//! independent oracle for the bit-packed simulator.
#![allow(dead_code)]

pub mod checks;

use pim_core::geometry::ArchConfig;
use pim_core::microop::{HGate, HLogic, MicroOp, RangeMask, VGate};
use pim_core::ColumnAddress;
use rand::Rng;

pub struct RefState {
    pub cfg: ArchConfig,
    pub strict: bool,
    /// `[crossbar][row][column]`
    pub cells: Vec<Vec<Vec<bool>>>,
    pub active: Vec<bool>,
    pub xb_mask: RangeMask,
    pub row_mask: RangeMask,
}

fn members(m: RangeMask, limit: usize) -> Vec<bool> {
    let mut v = vec![false; limit];
    let mut i = m.start;
    loop {
        v[i] = true;
        if m.step == 0 || i + m.step > m.stop {
            break;
        }
        i += m.step;
    }
    v
}

/// Independent statement of which horizontal patterns the periphery can fire:
/// operands in range, a legal operand order, and non-overlapping gate spans.
/// Returns the concrete gates when legal.
pub fn legal_gates(op: &HLogic, n: usize) -> Option<Vec<(usize, usize, usize)>> {
    let count = if op.p_step == 0 { 1 } else { (op.p_end - op.out.partition) / op.p_step + 1 };
    let (pa, pb, po) = (op.in_a.partition, op.in_b.partition, op.out.partition);
    let shape_ok = match op.gate {
        HGate::Nor => (pa <= pb && pb <= po) || (po < pa && pa <= pb),
        _ => true,
    };
    if !shape_ok {
        return None;
    }
    let mut gates = Vec::new();
    let mut prev_hi: Option<usize> = None;
    for g in 0..count {
        let off = g * op.p_step;
        let used: Vec<usize> = match op.gate {
            HGate::Nor => vec![pa + off, pb + off, po + off],
            HGate::Not => vec![pa + off, po + off],
            _ => vec![po + off],
        };
        if used.iter().any(|&p| p >= n) {
            return None;
        }
        let lo = *used.iter().min().unwrap();
        let hi = *used.iter().max().unwrap();
        if let Some(ph) = prev_hi {
            if lo <= ph {
                return None;
            }
        }
        prev_hi = Some(hi);
        gates.push(match op.gate {
            HGate::Nor => (pa + off, pb + off, po + off),
            HGate::Not => (pa + off, pa + off, po + off),
            _ => (po + off, po + off, po + off),
        });
    }
    Some(gates)
}

impl RefState {
    pub fn new(cfg: &ArchConfig) -> Self {
        RefState {
            cfg: cfg.clone(),
            strict: cfg.strict_init,
            cells: vec![vec![vec![false; cfg.cols_w]; cfg.rows_h]; cfg.num_crossbars],
            active: members(RangeMask::single(0), cfg.num_crossbars),
            xb_mask: RangeMask::single(0),
            row_mask: RangeMask::single(0),
        }
    }

    fn col(&self, partition: usize, intra: usize) -> usize {
        partition * (self.cfg.cols_w / self.cfg.word_n) + intra
    }

    pub fn word(&self, xb: usize, row: usize, intra: usize) -> u64 {
        (0..self.cfg.word_n).fold(0, |acc, j| acc | (self.cells[xb][row][self.col(j, intra)] as u64) << j)
    }

    pub fn set_word(&mut self, xb: usize, row: usize, intra: usize, w: u64) {
        for j in 0..self.cfg.word_n {
            let c = self.col(j, intra);
            self.cells[xb][row][c] = w >> j & 1 == 1;
        }
    }

    pub fn execute(&mut self, op: &MicroOp) -> Result<Option<u64>, ()> {
        op.validate(&self.cfg).map_err(|_| ())?;
        let xbars = self.cfg.num_crossbars;
        let h = self.cfg.rows_h;
        match *op {
            MicroOp::CrossbarMask(m) => {
                self.active = members(m, xbars);
                self.xb_mask = m;
            }
            MicroOp::RowMask(m) => self.row_mask = m,
            MicroOp::Read { intra_index } => {
                let xs: Vec<usize> = (0..xbars).filter(|&x| self.active[x]).collect();
                let rs: Vec<usize> = (0..h).filter(|&r| members(self.row_mask, h)[r]).collect();
                if xs.len() != 1 || rs.len() != 1 {
                    return Err(());
                }
                return Ok(Some(self.word(xs[0], rs[0], intra_index)));
            }
            MicroOp::Write { intra_index, data } => {
                let rows = members(self.row_mask, h);
                for x in 0..xbars {
                    for r in 0..h {
                        if self.active[x] && rows[r] {
                            self.set_word(x, r, intra_index, data);
                        }
                    }
                }
            }
            MicroOp::HLogic(hl) => {
                let gates = legal_gates(&hl, self.cfg.word_n).ok_or(())?;
                let rows = members(self.row_mask, h);
                let before = self.cells.clone();
                for x in 0..xbars {
                    for r in 0..h {
                        if !(self.active[x] && rows[r]) {
                            continue;
                        }
                        for &(a, b, o) in &gates {
                            let oc = self.col(o, hl.out.intra_index);
                            let av = before[x][r][self.col(a, hl.in_a.intra_index)];
                            let bv = before[x][r][self.col(b, hl.in_b.intra_index)];
                            let old = before[x][r][oc];
                            let new = match hl.gate {
                                HGate::Init0 => false,
                                HGate::Init1 => true,
                                HGate::Not => old && !av,
                                HGate::Nor => old && !(av || bv),
                            };
                            if self.strict && matches!(hl.gate, HGate::Not | HGate::Nor) && !old {
                                self.cells = before;
                                return Err(());
                            }
                            self.cells[x][r][oc] = new;
                        }
                    }
                }
            }
            MicroOp::VLogic { gate, row_in, row_out, intra_index } => {
                let before = self.cells.clone();
                for x in 0..xbars {
                    if !self.active[x] {
                        continue;
                    }
                    for j in 0..self.cfg.word_n {
                        let c = self.col(j, intra_index);
                        let old = before[x][row_out][c];
                        let inp = before[x][row_in][c];
                        if self.strict && gate == VGate::Not && !old {
                            self.cells = before;
                            return Err(());
                        }
                        self.cells[x][row_out][c] = match gate {
                            VGate::Init0 => false,
                            VGate::Init1 => true,
                            VGate::Not => old && !inp,
                        };
                    }
                }
            }
            MicroOp::Move { xb_dest, src_row, dst_row, src_index, dst_index } => {
                let m = self.xb_mask;
                if xb_dest < m.start {
                    return Err(());
                }
                let multi = m.stop > m.start;
                if multi {
                    let mut s = m.step;
                    while s > 1 && s.is_multiple_of(4) {
                        s /= 4;
                    }
                    if s != 1 {
                        return Err(());
                    }
                }
                let d = xb_dest - m.start;
                let mut writes = Vec::new();
                for x in 0..xbars {
                    if !self.active[x] {
                        continue;
                    }
                    if x + d >= xbars || self.active[x + d] {
                        return Err(());
                    }
                    writes.push((x + d, self.word(x, src_row, src_index)));
                }
                for (dst, w) in writes {
                    self.set_word(dst, dst_row, dst_index, w);
                }
            }
        }
        Ok(None)
    }
}

pub fn random_mask(rng: &mut impl Rng, limit: usize) -> RangeMask {
    let start = rng.gen_range(0..limit);
    if rng.gen_bool(0.3) {
        return RangeMask::new(start, start, rng.gen_range(0..2));
    }
    if limit == 1 {
        return RangeMask::new(0, 0, 0);
    }
    let step = rng.gen_range(1..limit);
    let k = rng.gen_range(0..=(limit - 1 - start) / step);
    RangeMask::new(start, start + k * step, step)
}

pub fn random_ap4_mask(rng: &mut impl Rng, limit: usize) -> RangeMask {
    let steps: Vec<usize> = (0..).map(|e| 4usize.pow(e)).take_while(|&s| s < limit).collect();
    let step = steps[rng.gen_range(0..steps.len())];
    let start = rng.gen_range(0..limit);
    let k = rng.gen_range(0..=(limit - 1 - start) / step);
    RangeMask::new(start, start + k * step, step)
}

pub fn random_hlogic(rng: &mut impl Rng, cfg: &ArchConfig) -> HLogic {
    let n = cfg.word_n;
    let regs = cfg.regs_per_row();
    let gate = [HGate::Init0, HGate::Init1, HGate::Not, HGate::Nor][rng.gen_range(0..4)];
    let mut pa = rng.gen_range(0..n);
    let mut pb = rng.gen_range(0..n);
    if pa > pb {
        std::mem::swap(&mut pa, &mut pb);
    }
    let po = rng.gen_range(0..n);
    let p_step = if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..n.max(2)) };
    let p_end = if p_step == 0 { po } else { po + rng.gen_range(0..=(n - 1 - po) / p_step) * p_step };
    let addr = |p: usize, rng: &mut dyn rand::RngCore| ColumnAddress::new(p, rng.gen_range(0..regs));
    HLogic { gate, in_a: addr(pa, rng), in_b: addr(pb, rng), out: addr(po, rng), p_end, p_step }
}

/// A random micro-op that is well-formed for the codec; it may still fail
/// semantically (illegal pattern, bad move, ambiguous read).
pub fn random_op(rng: &mut impl Rng, cfg: &ArchConfig) -> MicroOp {
    let regs = cfg.regs_per_row();
    let h = cfg.rows_h;
    match rng.gen_range(0..10) {
        0 => MicroOp::CrossbarMask(if rng.gen_bool(0.5) {
            random_ap4_mask(rng, cfg.num_crossbars)
        } else {
            random_mask(rng, cfg.num_crossbars)
        }),
        1 => MicroOp::RowMask(random_mask(rng, h)),
        2 => MicroOp::Read { intra_index: rng.gen_range(0..regs) },
        3 => MicroOp::Write { intra_index: rng.gen_range(0..regs), data: rng.gen::<u64>() & cfg.word_mask() },
        4..=6 => MicroOp::HLogic(random_hlogic(rng, cfg)),
        7 | 8 => MicroOp::VLogic {
            gate: [VGate::Init0, VGate::Init1, VGate::Not][rng.gen_range(0..3)],
            row_in: rng.gen_range(0..h),
            row_out: rng.gen_range(0..h),
            intra_index: rng.gen_range(0..regs),
        },
        _ => MicroOp::Move {
            xb_dest: rng.gen_range(0..cfg.num_crossbars),
            src_row: rng.gen_range(0..h),
            dst_row: rng.gen_range(0..h),
            src_index: rng.gen_range(0..regs),
            dst_index: rng.gen_range(0..regs),
        },
    }
}
