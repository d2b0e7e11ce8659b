#![allow(dead_code)]

use num_complex::Complex64;
use qpf_core::linalg::CMatrix;
use qpf_core::{Section, WeightedGraph};
use rand::Rng;

/// Random weighted graph on `n` vertices; each pair is an edge with probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64, b_max: f64, m_range: (f64, f64)) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j, b_max * (1.0 - rng.random::<f64>()).max(1e-3)));
            }
        }
    }
    let measure: Vec<f64> = (0..n).map(|_| rng.random_range(m_range.0..m_range.1)).collect();
    WeightedGraph::from_indexed(n, &edges, Some(&measure)).unwrap()
}

pub fn random_section<R: Rng>(rng: &mut R, len: usize) -> Section {
    Section::from_fn(len, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `Σ_k A^k/k!` truncated once terms drop below machine precision.
pub fn taylor_exp(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..200 {
        term = &term * a / Complex64::new(k as f64, 0.0);
        sum += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    sum
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
