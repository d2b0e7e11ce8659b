mod common;

use common::random_graph;
use proptest::prelude::*;
use qpf_core::bundle::{connection_from_magnetic, MagneticPotential};
use qpf_core::semiclassics::{
    classical_partition, golden_thompson_margin, sandwich_bounds, semiclassical_trace, sweep, SweepConfig, SweepMode,
};
use qpf_core::{Connection, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn golden_thompson_scalar(seed in any::<u64>(), n in 1usize..11) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut r, n, 0.5, 2.0, (0.1, 2.0));
        let w: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..=2.0)).collect();
        let t = r.random_range(0.01..=2.0);
        let gt = golden_thompson_margin(&g, &Connection::trivial(&g, 1), &Potential::scalar(&w), t).unwrap();
        prop_assert!(gt.holds(), "margin {}", gt.margin);
    }

    #[test]
    fn golden_thompson_covariant(seed in any::<u64>(), n in 1usize..8, rank in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut r, n, 0.5, 2.0, (0.1, 2.0));
        let c = Connection::random(&g, rank, &mut r);
        let v = Potential::random(n, rank, 1.5, &mut r);
        let t = r.random_range(0.01..=2.0);
        let gt = golden_thompson_margin(&g, &c, &v, t).unwrap();
        prop_assert!(gt.holds(), "margin {}", gt.margin);
    }

    #[test]
    fn sandwich_holds_on_random_scalar_instances(seed in any::<u64>(), n in 1usize..9) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut r, n, 0.5, 2.0, (0.1, 2.0));
        let w: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..=2.0)).collect();
        let (beta, hbar) = (r.random_range(0.1..2.0), r.random_range(1e-3..1.0));
        let trace = semiclassical_trace(&g, &Connection::trivial(&g, 1), &Potential::scalar(&w), beta, hbar).unwrap();
        let s = sandwich_bounds(&g, &w, beta, hbar).unwrap();
        prop_assert!(s.lower <= trace + 1e-9 && trace <= s.upper + 1e-9);
    }

    #[test]
    fn magnetic_trace_is_gauge_invariant(seed in any::<u64>(), n in 2usize..8) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut r, n, 0.6, 2.0, (0.1, 2.0));
        let theta = MagneticPotential::random(&g, &mut r);
        let sigma: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let v = Potential::scalar(&(0..n).map(|_| r.random_range(0.0..1.0)).collect::<Vec<_>>());
        let a = connection_from_magnetic(&g, &theta).unwrap();
        let b = connection_from_magnetic(&g, &theta.gauge_transform(&sigma)).unwrap();
        let ta = semiclassical_trace(&g, &a, &v, 1.0, 0.3).unwrap();
        let tb = semiclassical_trace(&g, &b, &v, 1.0, 0.3).unwrap();
        prop_assert!((ta - tb).abs() < 1e-10 * ta.max(1.0));
    }
}

#[test]
fn magnetic_and_covariant_sweeps_stay_below_classical() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let g = random_graph(&mut r, 6, 0.6, 1.0, (0.5, 2.0));
    let theta = MagneticPotential::random(&g, &mut r);
    let mag = connection_from_magnetic(&g, &theta).unwrap();
    let w = Potential::scalar(&(0..6).map(|k| 0.3 * k as f64).collect::<Vec<_>>());
    let result = sweep(&SweepConfig {
        graph: &g,
        connection: &mag,
        potential: &w,
        beta: 1.0,
        hbar_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
        mode: SweepMode::Magnetic,
    })
    .unwrap();
    assert!(result.rows.iter().all(|row| row.lower.is_none()));
    assert!(result.converged);

    let c = Connection::random(&g, 2, &mut r);
    let v = Potential::random(6, 2, 1.0, &mut r);
    let result = sweep(&SweepConfig {
        graph: &g,
        connection: &c,
        potential: &v,
        beta: 1.0,
        hbar_schedule: vec![1e-1, 1e-2, 1e-3],
        mode: SweepMode::Covariant,
    })
    .unwrap();
    let classical = classical_partition(&v, 1.0).unwrap();
    assert_eq!(result.classical_value, classical);
    assert!(result.rows.iter().all(|row| row.trace <= classical + 1e-9));
    assert!(result.last_gap() < result.rows[0].gap);
}
