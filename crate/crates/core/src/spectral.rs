//! Exact heat semigroups and traces from a full Hermitian eigendecomposition.

use num_complex::Complex64;

use crate::bundle::{Connection, Potential};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{self, CMatrix};
use crate::operator::{assemble, OperatorMatrix};

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of the symmetrized operator, as columns.
    vectors: CMatrix,
    measure: Vec<f64>,
    rank: usize,
}

impl SpectralDecomposition {
    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `e^{−tS}` in the standard basis.
    fn symmetric_semigroup(&self, t: f64) -> CMatrix {
        linalg::spectral_map(&self.eigenvalues, &self.vectors, |l| (-t * l).exp())
    }
}

pub fn eigendecompose(op: &OperatorMatrix) -> Result<SpectralDecomposition> {
    let s = op.symmetrized();
    let (eigenvalues, vectors) = linalg::hermitian_eigen(s)?;
    let lambda_max = eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let scaled = CMatrix::from_fn(s.nrows(), s.ncols(), |i, j| vectors[(i, j)] * eigenvalues[j]);
    let residual = linalg::max_abs(&(s * &vectors - scaled));
    if residual > 1e-9 * (1.0 + lambda_max) {
        return Err(Error::NumericalFailure(format!("eigen residual {residual:.3e}")));
    }
    Ok(SpectralDecomposition { eigenvalues, vectors, measure: op.measure().to_vec(), rank: op.rank() })
}

/// Integral kernel of `e^{−tH}` against `m`: `(e^{−tH} f)(x) = Σ_y K(t,x,y) f(y) m(y)`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    t: f64,
    rank: usize,
    measure: Vec<f64>,
    kernel: CMatrix,
}

impl HeatKernel {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// All blocks as one `nν × nν` matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.kernel
    }

    /// The `ν×ν` block `K(t, x, y)`.
    pub fn block(&self, x: usize, y: usize) -> CMatrix {
        let r = self.rank;
        self.kernel.view((x * r, y * r), (r, r)).into_owned()
    }

    /// Scalar kernel value `p(t, x, y)`; only meaningful for rank 1.
    pub fn scalar(&self, x: usize, y: usize) -> Complex64 {
        self.kernel[(x * self.rank, y * self.rank)]
    }

    /// Transition probabilities `p(t,x,y)·m(y)` in the scalar case.
    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.scalar(x, y).re * self.measure[y]
    }

    /// `e^{−tH}` as a matrix acting on sections: `K·M`.
    pub fn semigroup(&self) -> CMatrix {
        let r = self.rank;
        let m = &self.measure;
        CMatrix::from_fn(self.kernel.nrows(), self.kernel.ncols(), |i, j| self.kernel[(i, j)] * m[j / r])
    }

    /// `Σ_x tr_x K(t,x,x) m(x)`.
    pub fn trace(&self) -> f64 {
        let r = self.rank;
        (0..self.kernel.nrows()).map(|i| self.kernel[(i, i)].re * self.measure[i / r]).sum()
    }
}

pub fn heat_kernel(dec: &SpectralDecomposition, t: f64) -> Result<HeatKernel> {
    if !(t > 0.0) {
        return Err(Error::BadParams(format!("heat kernel time must be positive, got {t}")));
    }
    let e = dec.symmetric_semigroup(t);
    let r = dec.rank;
    let sqrt_m: Vec<f64> = dec.measure.iter().map(|m| m.sqrt()).collect();
    let kernel = CMatrix::from_fn(e.nrows(), e.ncols(), |i, j| e[(i, j)] / (sqrt_m[i / r] * sqrt_m[j / r]));
    Ok(HeatKernel { t, rank: r, measure: dec.measure.clone(), kernel })
}

/// `tr e^{−tH} = Σ_k e^{−tλ_k}`.
pub fn partition_function(dec: &SpectralDecomposition, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::BadParams(format!("partition function time must be positive, got {t}")));
    }
    Ok(dec.eigenvalues.iter().map(|l| (-t * l).exp()).sum())
}

/// Per-vertex diagonal traces `tr_x (e^{−tH})_{xx}`; they sum to the partition function.
pub fn diagonal_traces(dec: &SpectralDecomposition, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::BadParams(format!("time must be positive, got {t}")));
    }
    let r = dec.rank;
    let n = dec.dim() / r.max(1);
    Ok((0..n)
        .map(|x| {
            (0..r)
                .map(|a| {
                    let i = x * r + a;
                    dec.eigenvalues
                        .iter()
                        .enumerate()
                        .map(|(k, l)| dec.vectors[(i, k)].norm_sqr() * (-t * l).exp())
                        .sum::<f64>()
                })
                .sum()
        })
        .collect())
}

/// Free scalar operator `H` of the graph.
fn free_scalar(g: &WeightedGraph) -> Result<SpectralDecomposition> {
    eigendecompose(&assemble(g, &Connection::trivial(g, 1), None)?)
}

/// Relative tolerance of the adaptive Simpson rule in [`kato_functional`].
pub const KATO_REL_TOL: f64 = 1e-6;

/// `sup_x ∫_0^t Σ_y p(s,x,y) |w(y)| m(y) ds`.
pub fn kato_functional(g: &WeightedGraph, w: &[f64], t: f64) -> Result<f64> {
    Ok(kato_table(g, w, &[t])?[0].1)
}

/// [`kato_functional`] at every time in `times`, sharing one decomposition.
pub fn kato_table(g: &WeightedGraph, w: &[f64], times: &[f64]) -> Result<Vec<(f64, f64)>> {
    if w.len() != g.len() {
        return Err(Error::RankMismatch { expected: g.len(), found: w.len() });
    }
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::BadParams(format!("Kato time must be positive, got {t}")));
    }
    let dec = free_scalar(g)?;
    let m = g.measure();
    // (e^{−sH}|w|)(x) = m(x)^{−1/2} Σ_k U_{xk} e^{−sλ_k} c_k with c = U* M^{1/2} |w|.
    let weighted: Vec<Complex64> = w.iter().zip(m).map(|(w, m)| Complex64::new(w.abs() * m.sqrt(), 0.0)).collect();
    let n = g.len();
    let coeffs: Vec<Complex64> =
        (0..n).map(|k| (0..n).map(|y| dec.vectors[(y, k)].conj() * weighted[y]).sum()).collect();
    let integrand = |s: f64| -> Vec<f64> {
        (0..n)
            .map(|x| {
                let v: Complex64 =
                    (0..n).map(|k| dec.vectors[(x, k)] * coeffs[k] * (-s * dec.eigenvalues[k]).exp()).sum();
                v.re / m[x].sqrt()
            })
            .collect()
    };
    Ok(times
        .iter()
        .map(|&t| {
            let integral = adaptive_simpson(&integrand, 0.0, t, KATO_REL_TOL);
            (t, integral.into_iter().fold(0.0, f64::max))
        })
        .collect())
}

fn simpson(fa: &[f64], fm: &[f64], fb: &[f64], h: f64) -> Vec<f64> {
    fa.iter().zip(fm).zip(fb).map(|((a, m), b)| h / 6.0 * (a + 4.0 * m + b)).collect()
}

/// Vector-valued adaptive Simpson; the error is measured in the max norm
/// relative to the running estimate.
fn adaptive_simpson(f: &impl Fn(f64) -> Vec<f64>, a: f64, b: f64, rel_tol: f64) -> Vec<f64> {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(&fa, &fm, &fb, b - a);
    let scale = whole.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, &fa, &fm, &fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> Vec<f64>,
    a: f64,
    b: f64,
    fa: &[f64],
    fm: &[f64],
    fb: &[f64],
    whole: Vec<f64>,
    tol: f64,
    depth: u32,
) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let (flm, frm) = (f(0.5 * (a + mid)), f(0.5 * (mid + b)));
    let left = simpson(fa, &flm, fm, mid - a);
    let right = simpson(fm, &frm, fb, b - mid);
    let err = left.iter().zip(&right).zip(&whole).map(|((l, r), w)| (l + r - w).abs()).fold(0.0, f64::max);
    if depth == 0 || err <= 15.0 * tol {
        return left.iter().zip(&right).zip(&whole).map(|((l, r), w)| l + r + (l + r - w) / 15.0).collect();
    }
    let l = simpson_step(f, a, mid, fa, &flm, fm, left, 0.5 * tol, depth - 1);
    let r = simpson_step(f, mid, b, fm, &frm, fb, right, 0.5 * tol, depth - 1);
    l.into_iter().zip(r).map(|(a, b)| a + b).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormBoundCheck {
    pub holds: bool,
    /// Smallest eigenvalue of `C1·H_{Φ,0} + C2 − V⁻`.
    pub margin: f64,
}

/// Tests `Q_{V⁻}(f) ≤ C1·Q_{Φ,0}(f) + C2·‖f‖²_m` for all `f`.
pub fn relative_form_bound_check(
    g: &WeightedGraph,
    c: &Connection,
    v_minus: &Potential,
    c1: f64,
    c2: f64,
) -> Result<FormBoundCheck> {
    if !(c1 > 0.0 && c1 < 1.0) {
        return Err(Error::BadCoefficients(format!("C1 = {c1} must lie in (0, 1)")));
    }
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(Error::BadCoefficients(format!("C2 = {c2} must be non-negative")));
    }
    if v_minus.rank() != c.rank() {
        return Err(Error::RankMismatch { expected: c.rank(), found: v_minus.rank() });
    }
    if let Some((x, floor)) = crate::bundle::spectral_floor(v_minus)?
        .scalar_values()
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .find(|(_, f)| *f < -1e-12)
    {
        return Err(Error::BadParams(format!("V⁻ not positive semidefinite at vertex {x} (floor {floor})")));
    }
    let op = assemble(g, c, None)?;
    let r = c.rank();
    let mut s = op.symmetrized() * Complex64::new(c1, 0.0);
    for x in 0..g.len() {
        let vx = v_minus.at(x);
        for a in 0..r {
            s[(x * r + a, x * r + a)] += c2;
            for b in 0..r {
                s[(x * r + a, x * r + b)] -= vx[(a, b)];
            }
        }
    }
    let (values, _) = linalg::hermitian_eigen(&s)?;
    let margin = values[0];
    Ok(FormBoundCheck { holds: margin >= -1e-10, margin })
}
