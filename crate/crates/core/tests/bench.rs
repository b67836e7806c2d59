use pim_core::bench::{cordic_sincos, reference_cross_check, BenchSpec, Family, CORDIC_ITERATIONS};
use pim_core::driver::budget;
use pim_core::{run_benchmark, throughput, ArchConfig, DType, Opcode, Session};

fn cfg(crossbars: usize) -> ArchConfig {
    ArchConfig { num_crossbars: crossbars, ..ArchConfig::default() }
}

#[test]
fn names_parse_with_defaults() {
    let s = BenchSpec::parse("arith").unwrap();
    assert_eq!((s.family, s.dtype, s.opcode), (Family::Arith, DType::Int32, Opcode::Add));
    assert_eq!(BenchSpec::parse("arith/float32/mul").unwrap().name(), "arith/float32/mul");
    assert_eq!(BenchSpec::parse("reduce").unwrap().name(), "reduce/float32/sum");
    assert_eq!(BenchSpec::parse("sort/int32").unwrap().name(), "sort/int32");
    for bad in ["", "arith/int64", "arith/int32/lt", "compare/int32/add", "arith/float32/mod", "cordic/int32", "sort/int32/x"] {
        assert!(BenchSpec::parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn throughput_formula() {
    let (t, rel) = reference_cross_check();
    assert!((t - 2.087e14).abs() / 2.087e14 < 1e-3, "{t}");
    assert!(rel <= 0.02);
    // same latency on 16 crossbars scales by 16 / 65536 relative to 64k crossbars of 1024 rows
    let full = throughput(65536 * 1024, 92, 300_000_000);
    let desk = throughput(16 * 1024, 92, 300_000_000);
    assert!((desk / full - 16.0 / 65536.0).abs() < 1e-12);
    assert_eq!(throughput(1024, 0, 1), 0.0);
}

#[test]
fn int_add_fits_its_budget_and_is_deterministic() {
    let c = cfg(256);
    let r = run_benchmark("arith/int32/add", &c, 7, Some(1 << 16)).unwrap();
    assert!(r.pass, "{r}");
    let b = budget(Opcode::Add, DType::Int32, c.word_n).unwrap();
    assert!(r.latency() <= b.max_ops as u64, "{} > {}", r.latency(), b.max_ops);
    assert_eq!(r.rows, 256 * 1024);
    let again = run_benchmark("arith/int32/add", &c, 7, Some(1 << 16)).unwrap();
    assert_eq!(r, again);
    assert!(r.to_string().contains("pass"));
    assert_eq!(r.csv_row().split(',').count(), pim_core::BenchReport::csv_header().split(',').count());
}

#[test]
fn elementwise_latency_is_independent_of_memory_size() {
    let mut seen = Vec::new();
    for xbs in [1, 4, 16] {
        let r = run_benchmark("arith/float32/add", &cfg(xbs), 3, None).unwrap();
        assert!(r.pass, "{r}");
        assert_eq!(r.elements, xbs * 1022);
        seen.push((r.latency(), r.throughput));
    }
    assert!(seen.iter().all(|s| s.0 == seen[0].0), "{seen:?}");
    assert!((seen[2].1 / seen[0].1 - 16.0).abs() < 1e-9);
}

#[test]
fn every_family_passes_at_desk_scale() {
    let c = cfg(4);
    for name in [
        "arith/int32/sub",
        "arith/int32/mul",
        "arith/int32/div",
        "arith/int32/mod",
        "arith/float32/sub",
        "arith/float32/mul",
        "arith/float32/div",
        "compare/int32/lt",
        "compare/int32/eq",
        "compare/float32/ge",
        "reduce/int32/sum",
        "reduce/float32/sum",
        "reduce/int32/product",
        "sort/int32",
        "sort/float32",
    ] {
        let r = run_benchmark(name, &c, 11, None).unwrap();
        assert!(r.pass, "{r}");
    }
    let r = run_benchmark("cordic", &c, 11, Some(512)).unwrap();
    assert!(r.pass && r.max_error.unwrap() <= 1e-3, "{r}");
}

#[test]
fn cordic_zero_angle_and_range() {
    let mut s = Session::new(&cfg(1));
    let t = s.from_f32(&[0.0, 1.0, -1.5707964, 0.5]).unwrap();
    let (sin, cos) = cordic_sincos(&mut s, &t, CORDIC_ITERATIONS).unwrap();
    let (sv, cv) = (s.to_f32(sin).unwrap(), s.to_f32(cos).unwrap());
    assert!(sv[0].abs() <= 2f32.powi(-20) && (cv[0] - 1.0).abs() <= 2f32.powi(-20), "{} {}", sv[0], cv[0]);
    for (i, a) in [0.0f64, 1.0, -1.5707964, 0.5].into_iter().enumerate() {
        assert!((sv[i] as f64 - a.sin()).abs() < 1e-5 && (cv[i] as f64 - a.cos()).abs() < 1e-5, "{a}");
    }
    let bad = s.from_f32(&[0.0, 2.0]).unwrap();
    assert!(cordic_sincos(&mut s, &bad, CORDIC_ITERATIONS).is_err());
    let ints = s.from_i32(&[0]).unwrap();
    assert!(cordic_sincos(&mut s, &ints, CORDIC_ITERATIONS).is_err());
}
