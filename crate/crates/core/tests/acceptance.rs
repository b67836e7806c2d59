//! Acceptance report: one line per criterion, then a failing assertion if
//! any criterion failed. Criteria run on separate threads.
//!
//! `cargo test -p pim-core --test acceptance -- --nocapture` shows the report.

mod common;

use std::f32::consts::FRAC_PI_2;
use std::io::Write;
use std::thread;
use std::time::Instant;

use common::checks;
use pim_core::bench::{cordic_sincos, reference_cross_check, CORDIC_ITERATIONS};
use pim_core::driver::{budget, budget_table, oracle, replay_check, DType, Driver, MacroInstruction, Opcode};
use pim_core::microop::{decode, encode, payload_widths, OpKind, RangeMask};
use pim_core::tensor::reduce::tree_reduce;
use pim_core::{ArchConfig, MemoryState, MicroOp, Session};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = Box<dyn FnOnce() -> Outcome + Send>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn codec_round_trip() -> Outcome {
    let cfg = ArchConfig::default();
    let width = payload_widths(&cfg).into_iter().find(|(k, _)| *k == OpKind::HLogic).map(|(_, w)| w);
    ensure(width == Some(42), || format!("horizontal logic payload is {width:?} bits, want 42"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ops = 0;
    for i in 0..1_000_000 {
        let op = common::random_op(&mut rng, &cfg);
        if let Ok(w) = encode(&op, &cfg) {
            let back = decode(w, &cfg).map_err(|e| format!("#{i} {op}: decode failed: {e}"))?;
            ensure(back == op, || format!("#{i}: {op} -> {w:#018x} -> {back}"))?;
            ops += 1;
        }
    }
    ensure(ops >= 900_000, || format!("only {ops} of 10^6 fuzzed ops were encodable"))?;
    // raw words: whatever decodes re-encodes to a word that decodes the same
    let mut words = 0;
    for _ in 0..1_000_000 {
        let w: u64 = rng.gen();
        if let Ok(op) = decode(w, &cfg) {
            let again = encode(&op, &cfg).map_err(|e| format!("{w:#018x} decoded to {op} but won't encode: {e}"))?;
            ensure(decode(again, &cfg) == Ok(op), || format!("{w:#018x}: unstable decode"))?;
            words += 1;
        }
    }
    Ok(format!("{ops} op round trips, {words} decodable random words stable; horizontal payload 42 bits"))
}

const INT_EDGES: [u32; 6] = [0, 1, 0xFFFF_FFFF, 0x8000_0000, 0x7FFF_FFFF, 2];
const FLOAT_EDGES: [u32; 14] = [
    0x0000_0000, 0x8000_0000, 0x7F80_0000, 0xFF80_0000, 0x7FC0_0000, 0xFFC0_0001, 0x0000_0001, 0x807F_FFFF,
    0x0080_0000, 0x3F80_0000, 0xBF80_0000, 0x7F7F_FFFF, 0x0040_0000, 0x3F7F_FFFF,
];

fn float_word(rng: &mut ChaCha8Rng) -> u32 {
    match rng.gen_range(0..8) {
        0 => FLOAT_EDGES[rng.gen_range(0..FLOAT_EDGES.len())],
        // subnormals of either sign
        1 => rng.gen_range(0..0x0080_0000u32) | (rng.gen::<u32>() & 0x8000_0000),
        // close exponents: cancellation and rounding ties
        2 => 0x3F00_0000 | rng.gen_range(0..0x0200_0000u32),
        _ => rng.gen(),
    }
}

fn int_word(rng: &mut ChaCha8Rng) -> u32 {
    match rng.gen_range(0..6) {
        0 => INT_EDGES[rng.gen_range(0..INT_EDGES.len())],
        1 => rng.gen_range(-64i32..64) as u32,
        _ => rng.gen(),
    }
}

/// Operand tuples: every edge combination first, then random draws.
fn tuples(rng: &mut ChaCha8Rng, dtype: DType, arity: usize, count: usize) -> Vec<Vec<u64>> {
    let edges: &[u32] = match dtype {
        DType::Int32 => &INT_EDGES,
        DType::Float32 => &FLOAT_EDGES,
    };
    let mut out: Vec<Vec<u64>> = Vec::new();
    let mut idx = vec![0usize; arity];
    loop {
        out.push(idx.iter().map(|&i| edges[i] as u64).collect());
        let mut k = 0;
        while k < arity {
            idx[k] += 1;
            if idx[k] < edges.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == arity {
            break;
        }
    }
    while out.len() < count {
        out.push(
            (0..arity)
                .map(|_| match dtype {
                    DType::Int32 => int_word(rng),
                    DType::Float32 => float_word(rng),
                } as u64)
                .collect(),
        );
    }
    out
}

/// Replays every opcode in `ops` over enough rows for `per_op` distinct
/// tuples, checking each thread against the host oracle.
fn differential(dtype: DType, ops: &[Opcode], per_op: usize, crossbars: usize) -> Outcome {
    let cfg = ArchConfig { num_crossbars: crossbars, ..ArchConfig::default() };
    let warps = per_op.div_ceil(cfg.user_rows());
    assert!(warps <= crossbars);
    let driver = Driver::new(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(dtype as u64 + 17);
    let mut st = MemoryState::new(&cfg);
    let mut checked = 0;
    for &op in ops {
        let srcs: Vec<usize> = (0..op.arity()).map(|i| i + 1).collect();
        let instr = MacroInstruction::RType {
            opcode: op,
            dtype,
            dst: 9,
            srcs,
            warp_mask: RangeMask::first(warps),
            thread_mask: RangeMask::first(cfg.user_rows()),
        };
        let data = tuples(&mut rng, dtype, op.arity(), warps * cfg.user_rows());
        replay_check(&driver, &instr, &mut st, &data).map_err(|c| format!("{op} {dtype}: {c}"))?;
        checked += data.len();
    }
    Ok(format!("{} ops, {} tuples each ({checked} total), edge cross product included", ops.len(), checked / ops.len()))
}

fn budgets() -> Outcome {
    let cfg = ArchConfig::default();
    let n = cfg.word_n;
    let driver = Driver::new(&cfg);
    let rtype = |opcode: Opcode, dtype: DType, dst: usize, srcs: &[usize]| MacroInstruction::RType {
        opcode,
        dtype,
        dst,
        srcs: srcs[..opcode.arity()].to_vec(),
        warp_mask: RangeMask::first(cfg.num_crossbars),
        thread_mask: RangeMask::first(cfg.user_rows()),
    };
    let add = driver.lower(&rtype(Opcode::Add, DType::Int32, 2, &[0, 1])).map_err(|e| e.to_string())?.len();
    ensure(add <= 9 * n + 3 * n + 2, || format!("int add lowers to {add} > {}", 12 * n + 2))?;
    let b = budget(Opcode::Add, DType::Int32, n).ok_or("no int add budget")?;
    ensure(b.max_ops == 12 * n + 2, || format!("published int add budget is {}", b.max_ops))?;
    // gate ops excluding the two mask ops: not 2, or 4, and 6, xor 10
    for (op, max) in [(Opcode::Not, 2), (Opcode::Or, 4), (Opcode::And, 6), (Opcode::Xor, 10)] {
        for dtype in [DType::Int32, DType::Float32] {
            let ops = driver.lower(&rtype(op, dtype, 4, &[5, 6, 7])).map_err(|e| e.to_string())?;
            let gates = ops.iter().filter(|o| !matches!(o, MicroOp::CrossbarMask(_) | MicroOp::RowMask(_))).count();
            ensure(gates <= max, || format!("{op} {dtype} lowers to {gates} gate ops > {max}"))?;
            let parallel = ops.iter().all(|o| match o {
                MicroOp::HLogic(h) => h.p_step == 1 && h.p_end == n - 1,
                _ => true,
            });
            ensure(parallel, || format!("{op} {dtype} is not fully partition-parallel"))?;
        }
    }
    let placements: [(usize, [usize; 3]); 4] = [(7, [1, 2, 3]), (0, [5, 6, 7]), (15, [14, 13, 12]), (3, [3, 4, 3])];
    let table = budget_table(n);
    for b in &table {
        for (dst, srcs) in placements {
            let srcs = &srcs[..b.opcode.arity()];
            let len = driver.lower(&rtype(b.opcode, b.dtype, dst, srcs)).map_err(|e| e.to_string())?.len();
            let limit = b.limit(srcs.contains(&dst));
            ensure(len <= limit, || format!("{b}: r{dst} <- {srcs:?} lowers to {len} > {limit}"))?;
        }
    }
    Ok(format!("int add {add} <= {}; not/or/and/xor within 2/4/6/10 gate ops, fully parallel; {} routine budgets hold", 12 * n + 2, table.len()))
}

fn multiply_add() -> Outcome {
    // 2^20 elements need more rows than 16 crossbars of 1024 hold
    let cfg = ArchConfig { rows_h: 2048, num_crossbars: 1024, ..ArchConfig::default() };
    let mut s = Session::new(&cfg);
    let e = |e: pim_core::TensorError| e.to_string();
    let x = s.zeros(1 << 20, DType::Float32).map_err(e)?;
    let y = s.zeros(1 << 20, DType::Float32).map_err(e)?;
    for (i, a, b) in [(4, 8.0, 0.5), (5, 20.0, 1.0), (8, 10.0, 1.0)] {
        s.set_f32(x, i, a).map_err(e)?;
        s.set_f32(y, i, b).map_err(e)?;
    }
    let xy = s.mul(x, y).map_err(e)?;
    let z = s.add(xy, x).map_err(e)?;
    let got = s.sum_f32(z.slice(0, usize::MAX, 2)).map_err(e)?;
    ensure(got == 32.0, || format!("z[::2].sum() = {got}"))?;
    Ok(format!("z[::2].sum() = {got} over 2^20 elements, {} cycles", s.counters().total()))
}

fn interactive_session() -> Outcome {
    let mut s = Session::new(&ArchConfig::default());
    let e = |e: pim_core::TensorError| e.to_string();
    let x = s.zeros(8, DType::Float32).map_err(e)?;
    for (i, v) in [(2, 2.5), (3, 1.25), (4, 2.25)] {
        s.set_f32(x, i, v).map_err(e)?;
    }
    let even = x.slice(0, usize::MAX, 2);
    let view = s.to_f32(even).map_err(e)?;
    ensure(view == [0.0, 2.5, 2.25, 0.0], || format!("x[::2] = {view:?}"))?;
    let sum = s.sum_f32(even).map_err(e)?;
    ensure(sum == 4.75, || format!("sum = {sum}"))?;
    s.sort(even).map_err(e)?;
    let sorted = s.to_f32(even).map_err(e)?;
    ensure(sorted == [0.0, 0.0, 2.25, 2.5], || format!("sorted = {sorted:?}"))?;
    Ok(format!("x[::2] = {view:?}, sum = {sum}, sorted = {sorted:?}"))
}

fn random_floats(n: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1000.0f32..1000.0)).collect()
}

fn sum_and_sort_at_scale() -> Outcome {
    let cfg = ArchConfig { num_crossbars: 256, ..ArchConfig::default() };
    let e = |e: pim_core::TensorError| e.to_string();
    let vals = random_floats(1 << 16, 1);
    let mut s = Session::new(&cfg);
    let x = s.from_f32(&vals).map_err(e)?;
    let got = s.sum(x).map_err(e)?;
    let bits: Vec<u32> = vals.iter().map(|v| v.to_bits()).collect();
    let want = tree_reduce(&bits, &mut |a, b| oracle::float32(Opcode::Add, a, b, 0).unwrap()).unwrap();
    ensure(got == want, || format!("64k sum {got:#010x}, same-tree host {want:#010x}"))?;
    let mut notes = vec![format!("64k sum bit-exact ({})", f32::from_bits(got))];
    for n in [1 << 10, 1 << 16] {
        let vals = random_floats(n, n as u64);
        let mut s = Session::new(&cfg);
        let x = s.from_f32(&vals).map_err(e)?;
        s.sort(x).map_err(e)?;
        let mut want = vals.clone();
        want.sort_by(|a, b| a.total_cmp(b));
        ensure(s.to_f32(x).map_err(e)? == want, || format!("sort of {n} differs from host sort"))?;
        notes.push(format!("sort {n} exact ({} cycles)", s.counters().total()));
    }
    Ok(notes.join(", "))
}

fn throughput_formula() -> Outcome {
    let (t, rel) = reference_cross_check();
    ensure(rel <= 0.02, || format!("{t:.4e} ops/s is {:.2}% from 2.08e14", rel * 100.0))?;
    Ok(format!("64M rows / 92 cycles x 300 MHz = {t:.4e} ops/s, {:.2}% from 2.08e14", rel * 100.0))
}

fn isolation() -> Outcome {
    let a = checks::isolation(&ArchConfig::small(8, 16, 4, 16), 1000, 21)?;
    let b = checks::isolation(&ArchConfig::small(8, 64, 16, 4), 1000, 22)?;
    Ok(format!("{a}; {b}"))
}

fn cordic() -> Outcome {
    let cfg = ArchConfig { num_crossbars: 256, ..ArchConfig::default() };
    let e = |e: pim_core::TensorError| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let angles: Vec<f32> = (0..1 << 16).map(|_| rng.gen_range(-FRAC_PI_2..=FRAC_PI_2)).collect();
    let mut s = Session::new(&cfg);
    let t = s.from_f32(&angles).map_err(e)?;
    let (sin, cos) = cordic_sincos(&mut s, &t, CORDIC_ITERATIONS).map_err(e)?;
    let (gs, gc) = (s.to_f32(sin).map_err(e)?, s.to_f32(cos).map_err(e)?);
    let mut worst = 0.0f64;
    for i in 0..angles.len() {
        let a = angles[i] as f64;
        let err = (gs[i] as f64 - a.sin()).abs().max((gc[i] as f64 - a.cos()).abs());
        ensure(err <= 1e-3, || format!("angle {a}: sin {} cos {}, error {err:e}", gs[i], gc[i]))?;
        worst = worst.max(err);
    }
    Ok(format!("2^16 angles, {CORDIC_ITERATIONS} iterations, max error {worst:.2e}"))
}

#[test]
fn acceptance() {
    use Opcode::*;
    let int_ops = [Add, Sub, Mul, Div, Mod, Neg, Lt, Le, Gt, Ge, Eq, Not, And, Or, Xor, Sign, Zero, Abs, Mux];
    let criteria: Vec<(&str, Criterion)> = vec![
        ("codec round trip", Box::new(codec_round_trip)),
        ("half-gate soundness", Box::new(|| checks::halfgate_soundness(20_000))),
        ("integer differential", Box::new(move || differential(DType::Int32, &int_ops, 10_000, 16))),
        ("float differential", Box::new(|| differential(DType::Float32, &[Add, Sub, Mul, Div], 100_000, 256))),
        ("cycle budgets", Box::new(budgets)),
        ("multiply-add program", Box::new(multiply_add)),
        ("interactive session", Box::new(interactive_session)),
        ("reduction and sort at scale", Box::new(sum_and_sort_at_scale)),
        ("throughput formula", Box::new(throughput_formula)),
        ("isolation", Box::new(isolation)),
        ("cordic", Box::new(cordic)),
    ];
    let results: Vec<(&str, Outcome, f64)> = thread::scope(|scope| {
        let handles: Vec<_> = criteria
            .into_iter()
            .map(|(name, f)| {
                let h = scope.spawn(move || {
                    let t = Instant::now();
                    let r = f();
                    (r, t.elapsed().as_secs_f64())
                });
                (name, h)
            })
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| match h.join() {
                Ok((r, secs)) => (name, r, secs),
                Err(_) => (name, Err("panicked".to_string()), 0.0),
            })
            .collect()
    });
    // written to the stdout handle directly so the report shows even when
    // the harness captures output
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    writeln!(out).unwrap();
    for (name, r, secs) in &results {
        let (tag, msg) = match r {
            Ok(msg) => ("PASS", msg),
            Err(msg) => {
                failed += 1;
                ("FAIL", msg)
            }
        };
        writeln!(out, "{tag}  {name:<28} {msg} [{secs:.1}s]").unwrap();
    }
    drop(out);
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
