//! Covariant Schrödinger operators `H_{Φ,V}` on `⊕_x F_x`.
//!
//! Sections are flat complex vectors of length `n·ν`; the fibre at vertex `x`
//! occupies entries `x·ν .. (x+1)·ν`.
//!
//! ```text
//! (H f)(x) = (1/m(x)) Σ_y b(x,y) (f(x) − Φ_{y,x} f(y)) + V(x) f(x)
//! ```
//!
//! `H` is self-adjoint for `⟨f,g⟩_m = Σ_x m(x) (f(x), g(x))`, not for the
//! standard product, so [`OperatorMatrix`] also carries the Hermitian
//! conjugate `S = M^{1/2} A M^{−1/2}`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bundle::{validate_connection, Connection, Potential};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{self, CMatrix, ZERO};

pub type Section = DVector<Complex64>;

/// Largest `n·ν` materialized as a dense matrix by default.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    rank: usize,
    measure: Vec<f64>,
    matrix: CMatrix,
    symmetrized: CMatrix,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.measure.len()
    }

    /// Measure defining the inner product `H` is self-adjoint under.
    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// The matrix `A` of `H` in the standard basis of sections.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `S = M^{1/2} A M^{−1/2}`, Hermitian and similar to `A`.
    pub fn symmetrized(&self) -> &CMatrix {
        &self.symmetrized
    }

    pub fn apply(&self, f: &Section) -> Section {
        &self.matrix * f
    }
}

fn check_rank(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::RankMismatch { expected, found });
    }
    Ok(())
}

fn check_section(g: &WeightedGraph, rank: usize, f: &Section) -> Result<()> {
    if f.len() != g.len() * rank {
        return Err(Error::RankMismatch { expected: g.len() * rank, found: f.len() });
    }
    Ok(())
}

/// Dense matrix of `H_{Φ,V}`; `v = None` means `V = 0`.
pub fn assemble(g: &WeightedGraph, c: &Connection, v: Option<&Potential>) -> Result<OperatorMatrix> {
    assemble_with_cap(g, c, v, DEFAULT_DIMENSION_CAP)
}

pub fn assemble_with_cap(
    g: &WeightedGraph,
    c: &Connection,
    v: Option<&Potential>,
    cap: usize,
) -> Result<OperatorMatrix> {
    let rank = c.rank();
    if let Some(v) = v {
        check_rank(rank, v.rank())?;
        check_rank(g.len(), v.len())?;
        v.check_hermitian()?;
    }
    let report = validate_connection(c, g);
    if !report.is_valid() {
        let first = &report.violations[0];
        return Err(Error::InvalidConnection(format!(
            "{} violation(s), first on ({}, {}): {} (deviation {:.3e})",
            report.violations.len(),
            first.from,
            first.to,
            first.kind.name(),
            first.deviation
        )));
    }
    let n = g.len();
    let dim = n * rank;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }

    let measure = g.measure().to_vec();
    let degrees = g.degrees();
    let mut a = CMatrix::zeros(dim, dim);
    for x in 0..n {
        let inv_m = 1.0 / measure[x];
        for k in 0..rank {
            a[(x * rank + k, x * rank + k)] += Complex64::new(degrees.deg_m[x], 0.0);
        }
        if let Some(v) = v {
            let vx = v.at(x);
            for r in 0..rank {
                for s in 0..rank {
                    a[(x * rank + r, x * rank + s)] += vx[(r, s)];
                }
            }
        }
        for &(y, b) in g.neighbors(x) {
            let phi = c.require(y, x)?;
            let scale = Complex64::new(-b * inv_m, 0.0);
            for r in 0..rank {
                for s in 0..rank {
                    a[(x * rank + r, y * rank + s)] += scale * phi[(r, s)];
                }
            }
        }
    }

    let sqrt_m: Vec<f64> = measure.iter().map(|m| m.sqrt()).collect();
    let symmetrized = CMatrix::from_fn(dim, dim, |i, j| a[(i, j)] * (sqrt_m[i / rank] / sqrt_m[j / rank]));
    Ok(OperatorMatrix { rank, measure, matrix: a, symmetrized })
}

/// Matrix-free evaluation of `H_{Φ,V} f`.
pub fn apply_formal(g: &WeightedGraph, c: &Connection, v: Option<&Potential>, f: &Section) -> Result<Section> {
    let rank = c.rank();
    check_section(g, rank, f)?;
    if let Some(v) = v {
        check_rank(rank, v.rank())?;
        check_rank(g.len(), v.len())?;
    }
    let mut out = Section::zeros(f.len());
    for x in 0..g.len() {
        let fx = f.rows(x * rank, rank);
        let mut acc = DVector::<Complex64>::zeros(rank);
        for &(y, b) in g.neighbors(x) {
            let phi = c.require(y, x)?;
            let diff = fx - phi * f.rows(y * rank, rank);
            acc += diff * Complex64::new(b, 0.0);
        }
        acc /= Complex64::new(g.measure()[x], 0.0);
        if let Some(v) = v {
            acc += v.at(x) * fx;
        }
        out.rows_mut(x * rank, rank).copy_from(&acc);
    }
    Ok(out)
}

/// Fibre inner product, conjugate-linear in the second argument.
fn fiber_dot(u: &DVector<Complex64>, w: &DVector<Complex64>) -> Complex64 {
    u.iter().zip(w.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// `Q_{Φ,0}(f1, f2) = ½ Σ_{x∼y} b(x,y) (f1(x) − Φ_{y,x} f1(y), f2(x) − Φ_{y,x} f2(y))_x`.
pub fn quadratic_form(g: &WeightedGraph, c: &Connection, f1: &Section, f2: &Section) -> Result<Complex64> {
    let rank = c.rank();
    check_section(g, rank, f1)?;
    check_section(g, rank, f2)?;
    let mut total = ZERO;
    for x in 0..g.len() {
        for &(y, b) in g.neighbors(x) {
            let phi = c.require(y, x)?;
            let d1 = f1.rows(x * rank, rank) - phi * f1.rows(y * rank, rank);
            let d2 = f2.rows(x * rank, rank) - phi * f2.rows(y * rank, rank);
            total += fiber_dot(&d1, &d2) * b;
        }
    }
    Ok(total * 0.5)
}

/// `⟨f1, f2⟩_m`.
pub fn inner_m(g: &WeightedGraph, rank: usize, f1: &Section, f2: &Section) -> Result<Complex64> {
    check_section(g, rank, f1)?;
    check_section(g, rank, f2)?;
    Ok((0..g.len())
        .map(|x| {
            let u = f1.rows(x * rank, rank).into_owned();
            let w = f2.rows(x * rank, rank).into_owned();
            fiber_dot(&u, &w) * g.measure()[x]
        })
        .sum())
}

/// Pointwise fibre norm `|f|(x)` as a scalar section.
pub fn fiber_norms(rank: usize, f: &Section) -> Section {
    Section::from_iterator(
        f.len() / rank,
        (0..f.len() / rank).map(|x| Complex64::new(f.rows(x * rank, rank).norm(), 0.0)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeBound {
    pub c_bm: f64,
    /// `2·C(b, m)`.
    pub norm_bound: f64,
    /// Largest `|λ|` of the free scalar operator.
    pub observed_norm: f64,
    /// `max_y Σ_x b(x,y)²/m(x)`; always finite here.
    pub square_sum: f64,
}

/// Compares the operator norm of the free scalar operator with `2·C(b, m)`.
pub fn degree_bound(g: &WeightedGraph) -> Result<DegreeBound> {
    let c_bm = g.degrees().c_bm;
    let op = assemble(g, &Connection::trivial(g, 1), None)?;
    let (values, _) = linalg::hermitian_eigen(op.symmetrized())?;
    let observed_norm = values.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let square_sum = (0..g.len())
        .map(|y| g.neighbors(y).iter().map(|&(x, b)| b * b / g.measure()[x]).sum::<f64>())
        .fold(0.0, f64::max);
    let bound = DegreeBound { c_bm, norm_bound: 2.0 * c_bm, observed_norm, square_sum };
    if observed_norm > bound.norm_bound + 1e-9 {
        return Err(Error::InvariantViolation(format!(
            "operator norm {observed_norm} exceeds 2C(b,m) = {}",
            bound.norm_bound
        )));
    }
    Ok(bound)
}

/// Hermitian representative `S = M^{1/2} A M^{−1/2}`.
pub fn symmetrize(op: &OperatorMatrix) -> CMatrix {
    op.symmetrized().clone()
}
