mod common;

use common::{max_abs, random_graph};
use num_complex::Complex64;
use proptest::prelude::*;
use qpf_core::bundle::spectral_floor;
use qpf_core::linalg::CMatrix;
use qpf_core::paths::{
    estimate_partition, occupation_integral, ordered_exponential, parallel_transport, FkMode, JumpSampler, PathSample,
    Sampling,
};
use qpf_core::{Connection, Family, Potential, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Truncated simplex series `Σ_n (−1)^n ∫_{s_1 ≤ … ≤ s_n} B(s_1)⋯B(s_n)` for
/// a piecewise-constant integrand, accumulated interval by interval.
fn dyson(blocks: &[(CMatrix, f64)], order: usize) -> CMatrix {
    let r = blocks[0].0.nrows();
    let mut d: Vec<CMatrix> =
        (0..=order).map(|n| if n == 0 { CMatrix::identity(r, r) } else { CMatrix::zeros(r, r) }).collect();
    for (b, h) in blocks {
        let mut powers = vec![CMatrix::identity(r, r)];
        for _ in 0..order {
            let next = powers.last().unwrap() * b;
            powers.push(next);
        }
        let prev = d.clone();
        for n in 1..=order {
            let mut fact = 1.0;
            for k in 1..=n {
                fact *= k as f64;
                d[n] += &prev[n - k] * &powers[k] * Complex64::new(h.powi(k as i32) / fact, 0.0);
            }
        }
    }
    let mut sum = CMatrix::zeros(r, r);
    for (n, dn) in d.iter().enumerate() {
        sum += dn * Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    sum
}

fn random_path<R: Rng>(rng: &mut R, g: &WeightedGraph, x: usize, t: f64) -> PathSample {
    JumpSampler::new(g).sample(x, t, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ordered_exponential_matches_dyson_series(seed in any::<u64>(), rank in 2usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = WeightedGraph::generate(Family::Cycle { n: 4 }).unwrap();
        let c = Connection::random(&g, rank, &mut r);
        let v = Potential::random(4, rank, 0.3, &mut r);
        let t = 0.5;
        let path = random_path(&mut r, &g, 0, t);
        let a = ordered_exponential(&path, &c, &v, t).unwrap();

        let mut blocks = Vec::new();
        let mut transport = CMatrix::identity(rank, rank);
        let mut prev = None;
        for (state, _, len) in path.intervals(t) {
            if let Some(p) = prev {
                transport = c.get(p, state).unwrap() * transport;
            }
            blocks.push((transport.adjoint() * v.at(state) * &transport, len));
            prev = Some(state);
        }
        let norm = v.values().iter().map(qpf_core::linalg::op_norm).fold(0.0, f64::max);
        let series = dyson(&blocks, 4);
        prop_assert!(max_abs(&(a - series)) <= 5.0 * (norm * t).powi(5) + 1e-12);
    }

    #[test]
    fn gronwall_bound(seed in any::<u64>(), rank in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut r, 5, 0.7, 2.0, (0.5, 2.0));
        let c = Connection::random(&g, rank, &mut r);
        let v = Potential::random(5, rank, 1.5, &mut r);
        let w = spectral_floor(&v).unwrap().scalar_values().unwrap();
        let t = r.random_range(0.1..2.0);
        for x in 0..5 {
            let path = random_path(&mut r, &g, x, t);
            let a = ordered_exponential(&path, &c, &v, t).unwrap();
            let bound = (-occupation_integral(&path, &w, t)).exp();
            prop_assert!(qpf_core::linalg::op_norm(&a) <= bound + 1e-9);
        }
    }
}

#[test]
fn transport_stays_unitary_over_long_paths() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let g = WeightedGraph::generate(Family::Complete { n: 4 }).unwrap();
    let c = Connection::random(&g, 3, &mut r);
    let mut t = 1.0;
    let path = loop {
        let p = random_path(&mut r, &g, 0, t);
        if p.jump_count() >= 1000 {
            break p;
        }
        t *= 2.0;
    };
    let u = parallel_transport(&path, &c).unwrap();
    assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(3, 3))) < 1e-10);
}

#[test]
fn holding_time_mean_is_inverse_rate() {
    let g = WeightedGraph::from_indexed(3, &[(0, 1, 1.5), (0, 2, 0.5)], Some(&[0.5, 1.0, 1.0])).unwrap();
    let sampler = JumpSampler::new(&g);
    let rate = sampler.rate(0);
    assert!((rate - 4.0).abs() < 1e-12);
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let n = 200_000;
    let times: Vec<f64> = (0..n).map(|_| sampler.sample(0, 100.0, &mut r).jump_times()[1]).collect();
    let mean = times.iter().sum::<f64>() / n as f64;
    let se = (times.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt();
    assert!((mean - 1.0 / rate).abs() < 4.0 * se, "mean {mean}, se {se}");
}

#[test]
fn rank_one_covariant_reproduces_scalar_bitwise() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let g = random_graph(&mut r, 5, 0.7, 1.0, (0.5, 2.0));
    let w: Vec<f64> = (0..5).map(|_| r.random_range(0.0..1.0)).collect();
    let v = Potential::scalar(&w);
    let id = Connection::trivial(&g, 1);
    let sampling = Sampling::new(5000, 17);
    let scalar = estimate_partition(&g, &id, &v, 1.0, 0.5, &sampling, FkMode::Scalar).unwrap();
    let cov = estimate_partition(&g, &id, &v, 1.0, 0.5, &sampling, FkMode::Covariant).unwrap();
    assert_eq!(scalar.total.estimate.to_bits(), cov.total.estimate.to_bits());
    assert_eq!(scalar.total.stderr.to_bits(), cov.total.stderr.to_bits());
    assert_eq!(cov.imag, 0.0);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let g = WeightedGraph::generate(Family::Cycle { n: 3 }).unwrap();
    let c = Connection::random(&g, 2, &mut r);
    let v = Potential::random(3, 2, 0.5, &mut r);
    let base = Sampling::new(10_000, 99);
    let one = estimate_partition(&g, &c, &v, 1.0, 0.5, &base, FkMode::Covariant).unwrap();
    let four = estimate_partition(&g, &c, &v, 1.0, 0.5, &base.with_workers(4), FkMode::Covariant).unwrap();
    assert_eq!(one, four);
    let other_seed = estimate_partition(&g, &c, &v, 1.0, 0.5, &Sampling::new(10_000, 100), FkMode::Covariant).unwrap();
    assert_ne!(one.total.estimate, other_seed.total.estimate);
}
