//! Hermitian vector bundles over a graph: unitary connections, magnetic
//! phases and Hermitian potentials.
//!
//! Fibres are the standard `C^ν` with the standard inner product. A rank-1
//! bundle is the scalar case.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{self, CMatrix, ONE};

/// Tolerance for unitarity and inverse-symmetry checks.
pub const CONNECTION_TOL: f64 = 1e-10;

/// Unitary `b`-connection: `Φ_{i,j}: F_i → F_j` on every directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    rank: usize,
    maps: BTreeMap<(usize, usize), CMatrix>,
}

impl Connection {
    pub fn new(rank: usize) -> Self {
        Self { rank, maps: BTreeMap::new() }
    }

    /// Identity connection of the given rank on every edge of `g`.
    pub fn trivial(g: &WeightedGraph, rank: usize) -> Self {
        let mut c = Self::new(rank);
        for (i, j, _) in g.edges() {
            c.set_edge(i, j, CMatrix::identity(rank, rank));
        }
        c
    }

    /// Stores `Φ_{i,j} = m` and `Φ_{j,i} = m*`.
    pub fn set_edge(&mut self, i: usize, j: usize, m: CMatrix) {
        self.maps.insert((j, i), m.adjoint());
        self.maps.insert((i, j), m);
    }

    /// Stores a single direction without touching the reverse entry.
    pub fn set_directed(&mut self, i: usize, j: usize, m: CMatrix) {
        self.maps.insert((i, j), m);
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `Φ_{i,j}`, the map from the fibre at `i` to the fibre at `j`.
    pub fn get(&self, i: usize, j: usize) -> Option<&CMatrix> {
        self.maps.get(&(i, j))
    }

    pub fn require(&self, i: usize, j: usize) -> Result<&CMatrix> {
        self.get(i, j).ok_or(Error::MissingEdgeMatrix(i, j))
    }

    pub fn directed_entries(&self) -> impl Iterator<Item = (usize, usize, &CMatrix)> {
        self.maps.iter().map(|(&(i, j), m)| (i, j, m))
    }

    /// Connection on the induced subgraph over `keep` (ascending host order).
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let map = reindex(keep);
        let maps =
            self.maps.iter().filter_map(|(&(i, j), m)| Some(((*map.get(&i)?, *map.get(&j)?), m.clone()))).collect();
        Self { rank: self.rank, maps }
    }

    /// Haar-distributed unitary on every edge.
    pub fn random<R: Rng + ?Sized>(g: &WeightedGraph, rank: usize, rng: &mut R) -> Self {
        let mut c = Self::new(rank);
        for (i, j, _) in g.edges() {
            c.set_edge(i, j, random_unitary(rank, rng));
        }
        c
    }
}

/// Antisymmetric edge phase `θ(j, i) = −θ(i, j)`, stored once per edge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MagneticPotential {
    phases: BTreeMap<(usize, usize), f64>,
}

impl MagneticPotential {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero phase on every edge.
    pub fn zero(g: &WeightedGraph) -> Self {
        let mut theta = Self::new();
        for (i, j, _) in g.edges() {
            theta.phases.insert((i, j), 0.0);
        }
        theta
    }

    /// Sets `θ(i, j) = phase` (and therefore `θ(j, i) = −phase`).
    pub fn set(&mut self, i: usize, j: usize, phase: f64) -> Result<()> {
        if i == j {
            return Err(Error::BadParams(format!("phase on the diagonal at vertex {i}")));
        }
        if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&phase) {
            return Err(Error::BadParams(format!("phase {phase} outside [-pi, pi]")));
        }
        if i < j {
            self.phases.insert((i, j), phase);
        } else {
            self.phases.insert((j, i), -phase);
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i < j {
            self.phases.get(&(i, j)).copied()
        } else {
            self.phases.get(&(j, i)).map(|p| -p)
        }
    }

    /// Shifts by the gradient of a vertex function: `θ(x, y) + σ(y) − σ(x)`,
    /// wrapped back into `[−π, π]`.
    pub fn gauge_transform(&self, sigma: &[f64]) -> Self {
        let phases = self.phases.iter().map(|(&(i, j), &p)| ((i, j), wrap_phase(p + sigma[j] - sigma[i]))).collect();
        Self { phases }
    }

    pub fn random<R: Rng + ?Sized>(g: &WeightedGraph, rng: &mut R) -> Self {
        let mut theta = Self::new();
        for (i, j, _) in g.edges() {
            theta.phases.insert((i, j), rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI));
        }
        theta
    }
}

fn reindex(keep: &[usize]) -> BTreeMap<usize, usize> {
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    kept.into_iter().enumerate().map(|(k, i)| (i, k)).collect()
}

fn wrap_phase(p: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut q = p.rem_euclid(tau);
    if q > std::f64::consts::PI {
        q -= tau;
    }
    q
}

/// Fibrewise Hermitian potential `V(i)`, one `ν×ν` matrix per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    rank: usize,
    values: Vec<CMatrix>,
}

impl Potential {
    /// Validates shape and Hermiticity `‖V − V*‖ ≤ 1e−12·(1 + ‖V‖)`.
    pub fn new(rank: usize, values: Vec<CMatrix>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if v.nrows() != rank || v.ncols() != rank {
                return Err(Error::RankMismatch { expected: rank, found: v.nrows() });
            }
            let dev = linalg::hermitian_deviation(v);
            if dev > 1e-12 * (1.0 + linalg::op_norm(v)) || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonHermitian(i, dev));
            }
        }
        Ok(Self { rank, values })
    }

    pub fn scalar(values: &[f64]) -> Self {
        Self { rank: 1, values: values.iter().map(|&v| CMatrix::from_element(1, 1, Complex64::new(v, 0.0))).collect() }
    }

    pub fn zero(n: usize, rank: usize) -> Self {
        Self { rank, values: vec![CMatrix::zeros(rank, rank); n] }
    }

    /// Rank-`ν` potential `v(i)·1`.
    pub fn scalar_times_identity(values: &[f64], rank: usize) -> Self {
        Self { rank, values: values.iter().map(|&v| CMatrix::identity(rank, rank) * Complex64::new(v, 0.0)).collect() }
    }

    /// The geometric potential `−ln m`.
    pub fn neg_log_measure(g: &WeightedGraph) -> Self {
        Self::scalar(&g.measure().iter().map(|m| -m.ln()).collect::<Vec<_>>())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i: usize) -> &CMatrix {
        &self.values[i]
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    /// Real values of a rank-1 potential.
    pub fn scalar_values(&self) -> Option<Vec<f64>> {
        (self.rank == 1).then(|| self.values.iter().map(|v| v[(0, 0)].re).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { rank: self.rank, values: self.values.iter().map(|v| v * Complex64::new(factor, 0.0)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }

    pub fn check_hermitian(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            let dev = linalg::hermitian_deviation(v);
            if dev > 1e-12 * (1.0 + linalg::op_norm(v)) {
                return Err(Error::NonHermitian(i, dev));
            }
        }
        Ok(())
    }

    /// Values on `keep`, in ascending host order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let values =
            kept.iter().map(|&i| self.values.get(i).cloned().ok_or(Error::UnknownIndex(i))).collect::<Result<_>>()?;
        Ok(Self { rank: self.rank, values })
    }

    /// Random Hermitian matrices with entries of size about `scale`.
    pub fn random<R: Rng + ?Sized>(n: usize, rank: usize, scale: f64, rng: &mut R) -> Self {
        let values = (0..n)
            .map(|_| {
                let a = random_gaussian_matrix(rank, rng);
                (&a + a.adjoint()) * Complex64::new(0.5 * scale, 0.0)
            })
            .collect();
        Self { rank, values }
    }
}

/// `Φ_{i,j} = e^{iθ(i,j)}` on every edge of `g`.
pub fn connection_from_magnetic(g: &WeightedGraph, theta: &MagneticPotential) -> Result<Connection> {
    let mut c = Connection::new(1);
    for (i, j, _) in g.edges() {
        let phase = theta.get(i, j).ok_or(Error::MissingEdgePhase(i, j))?;
        c.set_directed(i, j, CMatrix::from_element(1, 1, Complex64::from_polar(1.0, phase)));
        c.set_directed(j, i, CMatrix::from_element(1, 1, Complex64::from_polar(1.0, -phase)));
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// An edge of the graph has no matrix in this direction.
    Missing,
    /// A matrix is stored on a pair that is not an edge.
    NotAnEdge,
    /// Matrix is not `ν×ν`.
    Shape,
    Unitarity,
    InverseSymmetry,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::Missing => "missing",
            ViolationKind::NotAnEdge => "not_an_edge",
            ViolationKind::Shape => "shape",
            ViolationKind::Unitarity => "unitarity",
            ViolationKind::InverseSymmetry => "inverse_symmetry",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub from: usize,
    pub to: usize,
    pub kind: ViolationKind,
    pub deviation: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConnectionReport {
    pub violations: Vec<Violation>,
}

impl ConnectionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_deviation(&self) -> f64 {
        self.violations.iter().map(|v| v.deviation).fold(0.0, f64::max)
    }
}

/// Lists every edge where `c` fails to be a unitary `b`-connection on `g`.
pub fn validate_connection(c: &Connection, g: &WeightedGraph) -> ConnectionReport {
    let rank = c.rank();
    let mut violations = Vec::new();
    let mut push = |from, to, kind, deviation| violations.push(Violation { from, to, kind, deviation });

    for (i, j, m) in c.directed_entries() {
        if i >= g.len() || j >= g.len() || g.weight(i, j) <= 0.0 {
            push(i, j, ViolationKind::NotAnEdge, f64::INFINITY);
            continue;
        }
        if m.nrows() != rank || m.ncols() != rank {
            push(i, j, ViolationKind::Shape, f64::INFINITY);
            continue;
        }
        let dev = linalg::op_norm(&(m.adjoint() * m - CMatrix::identity(rank, rank)));
        if !(dev <= CONNECTION_TOL) {
            push(i, j, ViolationKind::Unitarity, dev);
        }
    }
    for (i, j, _) in g.edges() {
        let (fwd, bwd) = (c.get(i, j), c.get(j, i));
        if fwd.is_none() {
            push(i, j, ViolationKind::Missing, f64::INFINITY);
        }
        if bwd.is_none() {
            push(j, i, ViolationKind::Missing, f64::INFINITY);
        }
        if let (Some(f), Some(b)) = (fwd, bwd) {
            if f.shape() != (rank, rank) || b.shape() != (rank, rank) {
                continue;
            }
            let dev = match f.clone().try_inverse() {
                Some(inv) => linalg::op_norm(&(b - inv)),
                None => f64::INFINITY,
            };
            if !(dev <= CONNECTION_TOL) {
                push(j, i, ViolationKind::InverseSymmetry, dev);
            }
        }
    }
    ConnectionReport { violations }
}

/// `w(i) = min spec V(i)`, the largest scalar lower bound of `V`.
pub fn spectral_floor(v: &Potential) -> Result<Potential> {
    v.check_hermitian()?;
    if let Some(values) = v.scalar_values() {
        return Ok(Potential::scalar(&values));
    }
    let floors =
        v.values().iter().map(|m| linalg::hermitian_eigen(m).map(|(vals, _)| vals[0])).collect::<Result<Vec<_>>>()?;
    Ok(Potential::scalar(&floors))
}

/// Spectral split `V = V⁺ − V⁻` into positive and negative parts.
pub fn decompose_potential(v: &Potential) -> Result<(Potential, Potential)> {
    v.check_hermitian()?;
    let mut plus = Vec::with_capacity(v.len());
    let mut minus = Vec::with_capacity(v.len());
    for m in v.values() {
        let (vals, vecs) = linalg::hermitian_eigen(m)?;
        plus.push(linalg::spectral_map(&vals, &vecs, |l| l.max(0.0)));
        minus.push(linalg::spectral_map(&vals, &vecs, |l| (-l).max(0.0)));
    }
    Ok((Potential { rank: v.rank, values: plus }, Potential { rank: v.rank, values: minus }))
}

fn random_gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar unitary from the QR factorisation of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = random_gaussian_matrix(n, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}
