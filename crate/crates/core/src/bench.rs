//! Benchmark suite: arithmetic, comparison, CORDIC, reduction and sort, each
//! checked against a host oracle and reported with its cycle profile.

use std::f32::consts::FRAC_PI_2;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::driver::{oracle::eval as oracle_eval, DType, Opcode};
use crate::geometry::ArchConfig;
use crate::microop::{MicroOp, OpKind};
use crate::sim::ProfileCounters;
use crate::tensor::{reduce::tree_reduce, ReduceOp, Result, Session, Tensor, TensorError, View};

/// Rows and clock of the full-size 8 GB memory used as the reference point
/// for the throughput formula.
pub const REFERENCE_ROWS: u64 = 64_000_000;
pub const REFERENCE_CLOCK_HZ: u64 = 300_000_000;
pub const REFERENCE_INT_ADD_LATENCY: u64 = 92;
pub const REFERENCE_INT_ADD_THROUGHPUT: f64 = 208e12;

pub const CORDIC_ITERATIONS: usize = 24;

/// `rows / latency * clock`, in operations per second.
pub fn throughput(rows: u64, latency_cycles: u64, clock_hz: u64) -> f64 {
    if latency_cycles == 0 {
        return 0.0;
    }
    rows as f64 / latency_cycles as f64 * clock_hz as f64
}

/// The formula evaluated at the reference scale, and its relative distance
/// to the reference int-add throughput.
pub fn reference_cross_check() -> (f64, f64) {
    let t = throughput(REFERENCE_ROWS, REFERENCE_INT_ADD_LATENCY, REFERENCE_CLOCK_HZ);
    (t, (t - REFERENCE_INT_ADD_THROUGHPUT).abs() / REFERENCE_INT_ADD_THROUGHPUT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Arith,
    Compare,
    Cordic,
    Reduce,
    Sort,
}

/// A parsed benchmark name such as `arith/float32/mul` or `sort/int32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSpec {
    pub family: Family,
    pub dtype: DType,
    pub opcode: Opcode,
}

impl BenchSpec {
    /// Omitted parts default to int32 add / lt for arith / compare, float32
    /// sum for reduce, and float32 for sort and CORDIC.
    pub fn parse(name: &str) -> Result<BenchSpec> {
        let bad = || TensorError::Invalid(format!("unknown benchmark {name:?}"));
        let mut parts = name.split('/');
        let family = match parts.next().unwrap_or("") {
            "arith" => Family::Arith,
            "compare" => Family::Compare,
            "cordic" => Family::Cordic,
            "reduce" => Family::Reduce,
            "sort" => Family::Sort,
            _ => return Err(bad()),
        };
        let dtype = match parts.next() {
            None => match family {
                Family::Arith | Family::Compare => DType::Int32,
                _ => DType::Float32,
            },
            Some(d) => d.parse().map_err(|_| bad())?,
        };
        let opcode = match (family, parts.next()) {
            (Family::Arith, None) => Opcode::Add,
            (Family::Compare, None) => Opcode::Lt,
            (Family::Reduce, None | Some("sum")) => Opcode::Add,
            (Family::Reduce, Some("product")) => Opcode::Mul,
            (Family::Cordic | Family::Sort, None) => Opcode::Add,
            (Family::Arith, Some(o)) => match o.parse().ok() {
                Some(op @ (Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::Div | Opcode::Mod)) => op,
                _ => return Err(bad()),
            },
            (Family::Compare, Some(o)) => match o.parse().ok() {
                Some(op @ (Opcode::Lt | Opcode::Le | Opcode::Gt | Opcode::Ge | Opcode::Eq)) => op,
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        };
        if parts.next().is_some() || (family == Family::Cordic && dtype != DType::Float32) {
            return Err(bad());
        }
        if dtype == DType::Float32 && opcode == Opcode::Mod {
            return Err(bad());
        }
        Ok(BenchSpec { family, dtype, opcode })
    }

    pub fn name(&self) -> String {
        let d = self.dtype.name();
        match self.family {
            Family::Arith => format!("arith/{d}/{}", self.opcode),
            Family::Compare => format!("compare/{d}/{}", self.opcode),
            Family::Cordic => "cordic".into(),
            Family::Reduce => {
                let op = if self.opcode == Opcode::Mul { "product" } else { "sum" };
                format!("reduce/{d}/{op}")
            }
            Family::Sort => format!("sort/{d}"),
        }
    }

    /// Element count used when none is given: the whole memory for
    /// element-wise work, 2^16 for reduction and 2^10 for sort (both capped
    /// by capacity).
    pub fn default_elements(&self, cfg: &ArchConfig) -> usize {
        let cap = cfg.num_crossbars * cfg.user_rows();
        match self.family {
            Family::Arith | Family::Compare => cap,
            Family::Cordic | Family::Reduce => cap.min(1 << 16),
            Family::Sort => cap.min(1 << 10),
        }
    }
}

/// Outcome of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub name: String,
    pub elements: usize,
    pub dtype: DType,
    /// Cycles of the measured operation only.
    pub cycles: ProfileCounters,
    /// Cycles spent loading inputs and reading results back.
    pub setup_cycles: u64,
    pub rows: u64,
    pub clock_hz: u64,
    pub throughput: f64,
    pub pass: bool,
    /// First mismatch against the host oracle.
    pub counterexample: Option<String>,
    /// Largest absolute error, for CORDIC.
    pub max_error: Option<f64>,
}

impl BenchReport {
    pub fn latency(&self) -> u64 {
        self.cycles.total()
    }

    pub fn csv_header() -> &'static str {
        "name,elements,dtype,latency_cycles,crossbar_mask,row_mask,read,write,hlogic,vlogic,move,setup_cycles,rows,clock_hz,throughput_ops_per_s,pass,max_error,counterexample"
    }

    pub fn csv_row(&self) -> String {
        let kinds: Vec<String> = OpKind::ALL.iter().map(|&k| self.cycles.get(k).to_string()).collect();
        let note = self.counterexample.clone().unwrap_or_default().replace('"', "'");
        format!(
            "{},{},{},{},{},{},{},{},{:.6e},{},{},\"{}\"",
            self.name,
            self.elements,
            self.dtype.name(),
            self.latency(),
            kinds.join(","),
            self.setup_cycles,
            self.rows,
            self.clock_hz,
            self.throughput,
            self.pass,
            self.max_error.map(|e| format!("{e:e}")).unwrap_or_default(),
            note,
        )
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "benchmark   {}", self.name)?;
        writeln!(f, "elements    {}", self.elements)?;
        writeln!(f, "dtype       {}", self.dtype.name())?;
        writeln!(f, "latency     {} cycles", self.latency())?;
        for k in OpKind::ALL {
            writeln!(f, "  {:<14}{}", k.name(), self.cycles.get(k))?;
        }
        writeln!(f, "setup       {} cycles (load and readback, not timed)", self.setup_cycles)?;
        writeln!(
            f,
            "throughput  {} rows / {} cycles x {} Hz = {:.4e} ops/s",
            self.rows,
            self.latency(),
            self.clock_hz,
            self.throughput
        )?;
        if let Some(e) = self.max_error {
            writeln!(f, "max error   {e:.3e}")?;
        }
        match &self.counterexample {
            None => writeln!(f, "result      {}", if self.pass { "pass" } else { "FAIL" })?,
            Some(c) => writeln!(f, "result      FAIL: {c}")?,
        }
        let (t, rel) = reference_cross_check();
        write!(
            f,
            "reference   {} rows / {} cycles x {} Hz = {:.4e} ops/s ({:.2}% from the {:.3e} int-add reference)",
            REFERENCE_ROWS,
            REFERENCE_INT_ADD_LATENCY,
            REFERENCE_CLOCK_HZ,
            t,
            rel * 100.0,
            REFERENCE_INT_ADD_THROUGHPUT
        )
    }
}

fn random_word(rng: &mut ChaCha8Rng, dtype: DType) -> u32 {
    match dtype {
        DType::Int32 => rng.gen(),
        // a quarter raw bit patterns (specials, subnormals), the rest moderate values
        DType::Float32 => {
            if rng.gen_ratio(1, 4) {
                rng.gen()
            } else {
                rng.gen_range(-1.0e3f32..1.0e3).to_bits()
            }
        }
    }
}

/// Runs one benchmark on a fresh session. Inputs depend only on `seed`.
pub fn run_benchmark(name: &str, cfg: &ArchConfig, seed: u64, elements: Option<usize>) -> Result<BenchReport> {
    run_traced(name, cfg, seed, elements, false).map(|(r, _)| r)
}

/// [`run_benchmark`], optionally also returning every micro-op issued,
/// setup included.
pub fn run_traced(
    name: &str,
    cfg: &ArchConfig,
    seed: u64,
    elements: Option<usize>,
    trace: bool,
) -> Result<(BenchReport, Vec<MicroOp>)> {
    let spec = BenchSpec::parse(name)?;
    let n = elements.unwrap_or_else(|| spec.default_elements(cfg));
    if n == 0 {
        return Err(TensorError::ZeroLength);
    }
    let mut s = Session::new(cfg);
    if trace {
        s.start_trace();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cycles, check, max_error) = match spec.family {
        Family::Arith | Family::Compare => elementwise_bench(&mut s, &spec, n, &mut rng)?,
        Family::Cordic => cordic_bench(&mut s, n, &mut rng)?,
        Family::Reduce => reduce_bench(&mut s, &spec, n, &mut rng)?,
        Family::Sort => sort_bench(&mut s, &spec, n, &mut rng)?,
    };
    let rows = cfg.total_rows();
    let report = BenchReport {
        name: spec.name(),
        elements: n,
        dtype: spec.dtype,
        setup_cycles: s.counters().total() - cycles.total(),
        cycles,
        rows,
        clock_hz: cfg.clock_hz,
        throughput: throughput(rows, cycles.total(), cfg.clock_hz),
        pass: check.is_none(),
        counterexample: check,
        max_error,
    };
    Ok((report, s.take_trace()))
}

type Measured = (ProfileCounters, Option<String>, Option<f64>);

fn elementwise_bench(s: &mut Session, spec: &BenchSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Measured> {
    let a: Vec<u32> = (0..n).map(|_| random_word(rng, spec.dtype)).collect();
    let b: Vec<u32> = (0..n).map(|_| random_word(rng, spec.dtype)).collect();
    let ta = s.from_host(&a, spec.dtype)?;
    let tb = s.from_host(&b, spec.dtype)?;
    let (out, cycles) = s.profile(|s| s.binary(spec.opcode, ta, tb))?;
    let got = s.to_host(out)?;
    let mut bad = None;
    for i in 0..n {
        let want = oracle_eval(spec.opcode, spec.dtype, &[a[i] as u64, b[i] as u64]).expect("oracle") as u32;
        if got[i] != want {
            bad = Some(format!(
                "element {i}: {} {:#010x} {:#010x} expected {want:#010x}, got {:#010x}",
                spec.opcode, a[i], b[i], got[i]
            ));
            break;
        }
    }
    Ok((cycles, bad, None))
}

fn reduce_bench(s: &mut Session, spec: &BenchSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Measured> {
    let vals: Vec<u32> = match spec.dtype {
        DType::Int32 => (0..n).map(|_| rng.gen()).collect(),
        DType::Float32 => (0..n).map(|_| rng.gen_range(-1.0f32..1.0).to_bits()).collect(),
    };
    let op = if spec.opcode == Opcode::Mul { ReduceOp::Product } else { ReduceOp::Sum };
    let t = s.from_host(&vals, spec.dtype)?;
    let (got, cycles) = s.profile(|s| s.reduce(t, op))?;
    let want = tree_reduce(&vals, &mut |x, y| {
        oracle_eval(op.opcode(), spec.dtype, &[x as u64, y as u64]).expect("oracle") as u32
    })
    .expect("non-empty");
    let bad = (got != want).then(|| format!("expected {want:#010x}, got {got:#010x}"));
    Ok((cycles, bad, None))
}

fn sort_bench(s: &mut Session, spec: &BenchSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Measured> {
    let vals: Vec<u32> = match spec.dtype {
        DType::Int32 => (0..n).map(|_| rng.gen()).collect(),
        DType::Float32 => (0..n).map(|_| rng.gen_range(-1.0e3f32..1.0e3).to_bits()).collect(),
    };
    let t = s.from_host(&vals, spec.dtype)?;
    let ((), cycles) = s.profile(|s| s.sort(t))?;
    let got = s.to_host(t)?;
    let mut want = vals;
    match spec.dtype {
        DType::Int32 => want.sort_by_key(|&x| x as i32),
        DType::Float32 => want.sort_by(|&x, &y| f32::from_bits(x).total_cmp(&f32::from_bits(y))),
    }
    // -0.0 and +0.0 compare equal on device, so compare values rather than bits for floats
    let same = |x: u32, y: u32| match spec.dtype {
        DType::Int32 => x == y,
        DType::Float32 => f32::from_bits(x) == f32::from_bits(y),
    };
    let bad = (0..n)
        .find(|&i| !same(got[i], want[i]))
        .map(|i| format!("position {i}: expected {:#010x}, got {:#010x}", want[i], got[i]));
    Ok((cycles, bad, None))
}

fn cordic_bench(s: &mut Session, n: usize, rng: &mut ChaCha8Rng) -> Result<Measured> {
    let angles: Vec<f32> = (0..n).map(|_| rng.gen_range(-FRAC_PI_2..=FRAC_PI_2)).collect();
    let t = s.from_f32(&angles)?;
    let ((sin, cos), cycles) = s.profile(|s| cordic_sincos(s, &t, CORDIC_ITERATIONS))?;
    let (gs, gc) = (s.to_f32(sin)?, s.to_f32(cos)?);
    let mut worst = 0.0f64;
    let mut at = 0;
    for i in 0..n {
        let a = angles[i] as f64;
        let e = (gs[i] as f64 - a.sin()).abs().max((gc[i] as f64 - a.cos()).abs());
        if e > worst || e.is_nan() {
            worst = e;
            at = i;
        }
    }
    let bad = (worst.is_nan() || worst > CORDIC_TOLERANCE).then(|| {
        format!("angle {} -> sin {} cos {}, error {worst:e}", angles[at], gs[at], gc[at])
    });
    Ok((cycles, bad, Some(worst)))
}

/// Largest absolute sin/cos error accepted by the CORDIC benchmark.
pub const CORDIC_TOLERANCE: f64 = 1e-3;

/// Rotation-mode CORDIC on device. Returns `(sin, cos)` views; angles must
/// lie in `[-pi/2, pi/2]`.
///
/// Each step rotates by `d * atan(2^-i)` with `d = +1` when `z >= 0` and
/// `-1` otherwise, so every step rotates and the precomputed gain applies.
pub fn cordic_sincos(s: &mut Session, angles: &Tensor, iterations: usize) -> Result<(View, View)> {
    if angles.dtype != DType::Float32 {
        return Err(TensorError::DTypeMismatch(DType::Float32, angles.dtype));
    }
    // range check without leaving the device: count outliers with lt/gt and a sum
    let below = s.binary(Opcode::Lt, angles, -FRAC_PI_2)?;
    let above = s.binary(Opcode::Gt, angles, FRAC_PI_2)?;
    let outside = s.binary(Opcode::Or, below, above)?;
    s.release(below)?;
    s.release(above)?;
    let count = s.sum(outside)?;
    s.release(outside)?;
    if count != 0 {
        return Err(TensorError::Invalid(format!("{count} angles outside [-pi/2, pi/2]")));
    }

    let gain = (0..iterations).fold(1.0f64, |k, i| k / (1.0 + 4f64.powi(-(i as i32))).sqrt());
    let mut x = s.alloc(angles.len, DType::Float32, Some(angles))?.view();
    s.fill(x, (gain as f32).to_bits())?;
    let mut y = s.alloc(angles.len, DType::Float32, Some(angles))?.view();
    let mut z = s.alloc(angles.len, DType::Float32, Some(angles))?.view();
    s.copy(angles, z)?;
    for i in 0..iterations {
        let pow = (-(i as f32)).exp2();
        let atan = (pow as f64).atan() as f32;
        let neg = s.binary(Opcode::Lt, z, 0.0f32)?;
        let d = s.mux(neg, -1.0f32, 1.0f32)?;
        s.release(neg)?;
        let f = s.mul(d, pow)?;
        let fy = s.mul(f, y)?;
        let fx = s.mul(f, x)?;
        s.release(f)?;
        let step = s.mul(d, atan)?;
        s.release(d)?;
        let nx = s.sub(x, fy)?;
        let ny = s.add(y, fx)?;
        let nz = s.sub(z, step)?;
        for v in [fy, fx, step, x, y, z] {
            s.release(v)?;
        }
        (x, y, z) = (nx, ny, nz);
    }
    s.release(z)?;
    Ok((y, x))
}

