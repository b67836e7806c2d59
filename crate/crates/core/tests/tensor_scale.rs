//! Reductions and sorts at benchmark sizes.

use std::time::Instant;

use pim_core::driver::{oracle, DType, Opcode};
use pim_core::tensor::reduce::tree_reduce;
use pim_core::{ArchConfig, Session};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg_256() -> ArchConfig {
    ArchConfig { num_crossbars: 256, ..ArchConfig::default() }
}

fn random_floats(n: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1000.0f32..1000.0)).collect()
}

#[test]
fn sum_64k_matches_same_tree() {
    let vals = random_floats(1 << 16, 1);
    let mut s = Session::new(&cfg_256());
    let x = s.from_f32(&vals).unwrap();
    let t = Instant::now();
    let got = s.sum(x).unwrap();
    eprintln!("64k sum: {:?}, {} cycles", t.elapsed(), s.counters().total());
    let bits: Vec<u32> = vals.iter().map(|v| v.to_bits()).collect();
    let want = tree_reduce(&bits, &mut |a, b| oracle::float32(Opcode::Add, a, b, 0).unwrap()).unwrap();
    assert_eq!(got, want);
    let fold: f64 = vals.iter().map(|&v| v as f64).sum();
    assert!((f32::from_bits(got) as f64 - fold).abs() <= 1e-5 * vals.iter().map(|v| v.abs() as f64).sum::<f64>());
}

#[test]
fn sort_1k_and_64k() {
    for n in [1 << 10, 1 << 16] {
        let vals = random_floats(n, n as u64);
        let mut s = Session::new(&cfg_256());
        let x = s.from_f32(&vals).unwrap();
        let t = Instant::now();
        s.sort(x).unwrap();
        eprintln!("sort {n}: {:?}, {} cycles, {:?}", t.elapsed(), s.counters().total(), s.transfers());
        let mut want = vals.clone();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(s.to_f32(x).unwrap(), want);
    }
}

#[test]
fn multiply_add_program_at_full_length() {
    let cfg = ArchConfig { rows_h: 2048, num_crossbars: 1024, ..ArchConfig::default() };
    let mut s = Session::new(&cfg);
    let t = Instant::now();
    let x = s.zeros(1 << 20, DType::Float32).unwrap();
    let y = s.zeros(1 << 20, DType::Float32).unwrap();
    assert_eq!((x.first_warp, x.warp_count), (y.first_warp, y.warp_count));
    for (i, a, b) in [(4, 8.0, 0.5), (5, 20.0, 1.0), (8, 10.0, 1.0)] {
        s.set_f32(x, i, a).unwrap();
        s.set_f32(y, i, b).unwrap();
    }
    let xy = s.mul(x, y).unwrap();
    let z = s.add(xy, x).unwrap();
    assert_eq!(s.sum_f32(z.slice(0, usize::MAX, 2)).unwrap(), 32.0);
    eprintln!("multiply-add 2^20: {:?}", t.elapsed());
}
