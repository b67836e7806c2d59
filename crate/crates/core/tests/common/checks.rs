//! Property checks shared by the simulator tests and the acceptance report.
//! Each returns a short summary on success and the first counterexample on
//! failure.
#![allow(dead_code)]

use pim_core::geometry::ArchConfig;
use pim_core::microop::{HGate, HLogic, MicroOp, RangeMask, VGate};
use pim_core::sim::{resolve, MemoryState, ProfileCounters};
use pim_core::ColumnAddress;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{legal_gates, random_hlogic, random_op, RefState};

fn load_random(sim: &mut MemoryState, reference: &mut RefState, rng: &mut impl Rng) {
    let cfg = sim.config().clone();
    for xb in 0..cfg.num_crossbars {
        for row in 0..cfg.rows_h {
            for intra in 0..cfg.regs_per_row() {
                let w = rng.gen::<u64>() & cfg.word_mask();
                sim.poke(xb, row, intra, w);
                reference.set_word(xb, row, intra, w);
            }
        }
    }
}

fn same_state(sim: &MemoryState, reference: &RefState) -> Result<(), String> {
    let cfg = sim.config();
    for xb in 0..cfg.num_crossbars {
        for row in 0..cfg.rows_h {
            for intra in 0..cfg.regs_per_row() {
                let (a, b) = (sim.peek(xb, row, intra), reference.word(xb, row, intra));
                if a != b {
                    return Err(format!("xb {xb} row {row} reg {intra}: sim {a:#x} ref {b:#x}"));
                }
            }
        }
    }
    Ok(())
}

fn run_both(sim: &mut MemoryState, reference: &mut RefState, op: &MicroOp) -> Result<bool, String> {
    let mut c = ProfileCounters::default();
    let a = sim.execute(op, &mut c);
    let b = reference.execute(op);
    match (&a, &b) {
        (Ok(x), Ok(y)) if x.is_some() && x != y && y.is_some() => {
            Err(format!("{op}: read {x:?} vs {y:?}"))
        }
        (Ok(_), Ok(_)) => Ok(true),
        (Err(_), Err(_)) => Ok(false),
        _ => Err(format!("{op}: sim {a:?}, reference {}", if b.is_ok() { "ok" } else { "error" })),
    }
}

/// Every pattern of a width-`n` row with distinct operand registers.
pub fn all_patterns(n: usize) -> Vec<HLogic> {
    let mut out = Vec::new();
    for gate in [HGate::Init0, HGate::Init1, HGate::Not, HGate::Nor] {
        for pa in 0..n {
            for pb in pa..n {
                for po in 0..n {
                    for p_step in 0..n {
                        for p_end in po..n {
                            let ok = if p_step == 0 { p_end == po } else { (p_end - po) % p_step == 0 };
                            if !ok {
                                continue;
                            }
                            out.push(HLogic {
                                gate,
                                in_a: ColumnAddress::new(pa, 0),
                                in_b: ColumnAddress::new(pb, 1),
                                out: ColumnAddress::new(po, 2),
                                p_end,
                                p_step,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn check_pattern(cfg: &ArchConfig, op: &HLogic, rng: &mut impl Rng) -> Result<bool, String> {
    let decoded = resolve(op, cfg);
    let legal = legal_gates(op, cfg.word_n);
    match (&decoded, &legal) {
        (Ok(d), Some(l)) => {
            let got: Vec<(usize, usize, usize)> = d.iter().map(|g| (g.a, g.b, g.out)).collect();
            let want = l.clone();
            if got != want {
                return Err(format!("{op:?}: sections {got:?}, gates {want:?}"));
            }
        }
        (Err(_), None) => return Ok(false),
        _ => {
            return Err(format!(
                "{op:?}: section check {}, legality oracle {}",
                if decoded.is_ok() { "accepts" } else { "rejects" },
                if legal.is_some() { "accepts" } else { "rejects" }
            ))
        }
    }
    let mut sim = MemoryState::new(cfg);
    let mut reference = RefState::new(cfg);
    sim.set_strict(false);
    reference.strict = false;
    load_random(&mut sim, &mut reference, rng);
    let setup = [MicroOp::RowMask(RangeMask::first(cfg.rows_h)), MicroOp::HLogic(*op)];
    for m in &setup {
        if !run_both(&mut sim, &mut reference, m)? {
            return Err(format!("{m}: rejected by both models"));
        }
    }
    same_state(&sim, &reference).map_err(|e| format!("{op:?}: {e}"))?;
    Ok(true)
}

/// Exhaustive at `N = 4`, sampled at `N = 32`.
pub fn halfgate_soundness(samples_n32: usize) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg4 = ArchConfig::small(4, 16, 4, 1);
    let mut legal = 0;
    let patterns = all_patterns(4);
    for op in &patterns {
        legal += check_pattern(&cfg4, op, &mut rng)? as usize;
    }
    let cfg32 = ArchConfig::small(4, 128, 32, 1);
    let mut legal32 = 0;
    for _ in 0..samples_n32 {
        let op = random_hlogic(&mut rng, &cfg32);
        legal32 += check_pattern(&cfg32, &op, &mut rng)? as usize;
    }
    Ok(format!(
        "N=4: {} patterns, {legal} legal; N=32: {samples_n32} sampled, {legal32} legal",
        patterns.len()
    ))
}

/// Random traces agree cell for cell with the naive model.
pub fn reference_equivalence(cfg: &ArchConfig, ops: usize, strict: bool, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = MemoryState::new(cfg);
    let mut reference = RefState::new(cfg);
    sim.set_strict(strict);
    reference.strict = strict;
    load_random(&mut sim, &mut reference, &mut rng);
    let mut accepted = 0;
    for _ in 0..ops {
        let op = random_op(&mut rng, cfg);
        accepted += run_both(&mut sim, &mut reference, &op)? as usize;
        same_state(&sim, &reference).map_err(|e| format!("after {op}: {e}"))?;
    }
    Ok(format!("{ops} ops, {accepted} executed"))
}

fn region_changes(before: &MemoryState, after: &MemoryState) -> Vec<(usize, usize, usize, u64, u64)> {
    let cfg = before.config();
    let mut out = Vec::new();
    for xb in 0..cfg.num_crossbars {
        for row in 0..cfg.rows_h {
            for intra in 0..cfg.regs_per_row() {
                let (a, b) = (before.peek(xb, row, intra), after.peek(xb, row, intra));
                if a != b {
                    out.push((xb, row, intra, a, b));
                }
            }
        }
    }
    out
}

/// Masked-out cells never change, and in physical mode NOR/NOT never set a cell.
pub fn isolation(cfg: &ArchConfig, ops: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut executed = 0;
    let mut c = ProfileCounters::default();
    for i in 0..ops {
        let mut st = MemoryState::new(cfg);
        st.set_strict(i % 2 == 1);
        st.fill_with(|_, _, _| rng.gen());
        // random masks first, then the op under test
        let xm = MicroOp::CrossbarMask(super::random_mask(&mut rng, cfg.num_crossbars));
        let rm = MicroOp::RowMask(super::random_mask(&mut rng, cfg.rows_h));
        st.execute(&xm, &mut c).unwrap();
        st.execute(&rm, &mut c).unwrap();
        let op = match rng.gen_range(0..3) {
            0 => MicroOp::HLogic(random_hlogic(&mut rng, cfg)),
            _ => random_op(&mut rng, cfg),
        };
        let before = st.clone();
        if st.execute(&op, &mut c).is_err() {
            if !region_changes(&before, &st).is_empty() {
                return Err(format!("{op}: failed op modified state"));
            }
            continue;
        }
        executed += 1;
        let rows = before.row_mask();
        for (xb, row, intra, old, new) in region_changes(&before, &st) {
            let allowed = match op {
                MicroOp::Write { intra_index, .. } => {
                    before.is_active(xb) && rows.contains(row) && intra == intra_index
                }
                MicroOp::HLogic(h) => before.is_active(xb) && rows.contains(row) && intra == h.out.intra_index,
                MicroOp::VLogic { row_out, intra_index, .. } => {
                    before.is_active(xb) && row == row_out && intra == intra_index
                }
                MicroOp::Move { xb_dest, dst_row, dst_index, .. } => {
                    let m = before.crossbar_mask();
                    xb >= xb_dest - m.start
                        && before.is_active(xb - (xb_dest - m.start))
                        && row == dst_row
                        && intra == dst_index
                }
                _ => false,
            };
            if !allowed {
                return Err(format!("{op}: changed xb {xb} row {row} reg {intra}"));
            }
            let monotone = match op {
                MicroOp::HLogic(h) => matches!(h.gate, HGate::Not | HGate::Nor),
                MicroOp::VLogic { gate, .. } => gate == VGate::Not,
                _ => false,
            };
            if monotone && new & !old != 0 {
                return Err(format!("{op}: NOR/NOT set a cell ({old:#x} -> {new:#x})"));
            }
        }
    }
    Ok(format!("{ops} ops, {executed} executed"))
}
