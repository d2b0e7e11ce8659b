//! The jump process of a weighted graph and Feynman-Kac estimators.
//!
//! From state `y` the process waits an exponential time with rate
//! `deg_m(y)` and then jumps to a neighbour `x'` with probability
//! `b(x', y) / deg_1(y)`. Vertices without edges never jump.
//!
//! Estimators never sample bridges: the pinned expectation is replaced by
//! `p(t,x,x) m(x) E^{x,x}_t[F] = E^x[1{X_t = x} F]`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::bundle::{validate_connection, Connection, Potential};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{self, CMatrix};
use crate::stream::StreamFactory;

/// One realisation of the process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    horizon: f64,
    /// Jump chain `Y_0, ..., Y_{N(t)}`.
    states: Vec<usize>,
    /// Jump times `τ_0 = 0 < τ_1 < ... < τ_{N(t)} ≤ t`.
    jump_times: Vec<f64>,
}

impl PathSample {
    /// A path that stays at `start` up to `horizon`.
    pub fn constant(start: usize, horizon: f64) -> Self {
        Self { horizon, states: vec![start], jump_times: vec![0.0] }
    }

    /// Builds a path from its chain and jump times (`τ_0 = 0` implied).
    pub fn from_jumps(start: usize, horizon: f64, jumps: &[(f64, usize)]) -> Result<Self> {
        let mut path = Self::constant(start, horizon);
        for &(tau, state) in jumps {
            let last = *path.jump_times.last().unwrap();
            if !(tau > last) || tau > horizon {
                return Err(Error::BadParams(format!("jump time {tau} out of order")));
            }
            path.jump_times.push(tau);
            path.states.push(state);
        }
        Ok(path)
    }

    pub fn start(&self) -> usize {
        self.states[0]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// `N(t)`.
    pub fn jump_count(&self) -> usize {
        self.states.len() - 1
    }

    /// `X_t = Y_{N(t)}`.
    pub fn terminal(&self) -> usize {
        *self.states.last().unwrap()
    }

    /// Holding intervals `(state, start, length)` clipped to `[0, t]`.
    pub fn intervals(&self, t: f64) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let n = self.states.len();
        (0..n).filter_map(move |k| {
            let start = self.jump_times[k];
            if start >= t && k > 0 {
                return None;
            }
            let end = if k + 1 < n { self.jump_times[k + 1].min(t) } else { t };
            Some((self.states[k], start, (end - start).max(0.0)))
        })
    }

    /// Checks the chain moves along edges and the times increase.
    pub fn check(&self, g: &WeightedGraph) -> Result<()> {
        for w in self.states.windows(2) {
            if g.weight(w[0], w[1]) <= 0.0 {
                return Err(Error::InvariantViolation(format!("jump {} -> {} is not an edge", w[0], w[1])));
            }
        }
        for w in self.jump_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvariantViolation("jump times not increasing".into()));
            }
        }
        if *self.jump_times.last().unwrap() > self.horizon {
            return Err(Error::InvariantViolation("jump after the horizon".into()));
        }
        Ok(())
    }

    fn reset(&mut self, start: usize, horizon: f64) {
        self.horizon = horizon;
        self.states.clear();
        self.states.push(start);
        self.jump_times.clear();
        self.jump_times.push(0.0);
    }
}

/// Precomputed jump rates and neighbour tables of a graph.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    rates: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    /// Cumulative edge weights per vertex, last entry `deg_1`.
    cumulative: Vec<Vec<f64>>,
}

impl JumpSampler {
    pub fn new(g: &WeightedGraph) -> Self {
        let deg = g.degrees();
        let neighbors = (0..g.len()).map(|x| g.neighbors(x).iter().map(|&(y, _)| y).collect()).collect();
        let cumulative = (0..g.len())
            .map(|x| {
                g.neighbors(x)
                    .iter()
                    .scan(0.0, |acc, &(_, b)| {
                        *acc += b;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Self { rates: deg.deg_m, neighbors, cumulative }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Jump rate `deg_m(x)`.
    pub fn rate(&self, x: usize) -> f64 {
        self.rates[x]
    }

    /// Jump-chain transition probabilities out of `y`, as `(x', b(x',y)/deg_1(y))`.
    pub fn transition_probabilities(&self, y: usize) -> Vec<(usize, f64)> {
        let cum = &self.cumulative[y];
        let total = cum.last().copied().unwrap_or(0.0);
        let mut prev = 0.0;
        self.neighbors[y]
            .iter()
            .zip(cum)
            .map(|(&x, &c)| {
                let p = (c - prev) / total;
                prev = c;
                (x, p)
            })
            .collect()
    }

    fn next_state<R: Rng + ?Sized>(&self, y: usize, rng: &mut R) -> usize {
        let cum = &self.cumulative[y];
        let target = rng.random::<f64>() * cum[cum.len() - 1];
        let k = cum.partition_point(|&c| c <= target).min(cum.len() - 1);
        self.neighbors[y][k]
    }

    /// Samples a path from `x` on `[0, t]` into `path`, reusing its buffers.
    pub fn sample_into<R: Rng + ?Sized>(&self, x: usize, t: f64, rng: &mut R, path: &mut PathSample) {
        path.reset(x, t);
        let mut tau = 0.0;
        let mut y = x;
        loop {
            let rate = self.rates[y];
            if rate <= 0.0 {
                break;
            }
            let xi: f64 = rng.sample(Exp1);
            let next_tau = tau + xi / rate;
            if next_tau > t || next_tau <= tau {
                break;
            }
            tau = next_tau;
            y = self.next_state(y, rng);
            path.jump_times.push(tau);
            path.states.push(y);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: usize, t: f64, rng: &mut R) -> PathSample {
        let mut path = PathSample::constant(x, t);
        self.sample_into(x, t, rng, &mut path);
        path
    }
}

/// Samples one path of the jump process started at `x` with horizon `t`.
pub fn sample_path<R: Rng + ?Sized>(g: &WeightedGraph, x: usize, t: f64, rng: &mut R) -> Result<PathSample> {
    if x >= g.len() {
        return Err(Error::UnknownIndex(x));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::BadParams(format!("horizon must be finite and non-negative, got {t}")));
    }
    Ok(JumpSampler::new(g).sample(x, t, rng))
}

/// `∕∕_t = Φ_{Y_{N−1},Y_N} ⋯ Φ_{Y_0,Y_1}`, identity when `N(t) = 0`.
pub fn parallel_transport(path: &PathSample, c: &Connection) -> Result<CMatrix> {
    let mut transport = CMatrix::identity(c.rank(), c.rank());
    for w in path.states.windows(2) {
        transport = c.require(w[0], w[1])? * transport;
    }
    Ok(transport)
}

/// `∫_0^t v(X_s) ds` for a piecewise-constant path.
pub fn occupation_integral(path: &PathSample, v: &[f64], t: f64) -> f64 {
    path.intervals(t).map(|(state, _, len)| v[state] * len).sum()
}

/// `exp(−scale·∫v)`; the scalar Feynman-Kac weight.
fn scalar_weight(occupation: f64, scale: f64) -> f64 {
    (-(occupation * scale)).exp()
}

/// Per-vertex eigendecompositions of `V`, for repeated `e^{−sV(x)}`.
#[derive(Debug, Clone)]
pub struct PotentialExp {
    rank: usize,
    scalar: Option<Vec<f64>>,
    eigen: Vec<(Vec<f64>, CMatrix)>,
}

impl PotentialExp {
    pub fn new(v: &Potential) -> Result<Self> {
        v.check_hermitian()?;
        let scalar = v.scalar_values();
        let eigen = if scalar.is_some() {
            Vec::new()
        } else {
            v.values().iter().map(linalg::hermitian_eigen).collect::<Result<_>>()?
        };
        Ok(Self { rank: v.rank(), scalar, eigen })
    }

    /// `e^{−s·V(x)}`.
    pub fn exp(&self, x: usize, s: f64) -> CMatrix {
        match &self.scalar {
            Some(values) => CMatrix::from_element(1, 1, Complex64::new((-s * values[x]).exp(), 0.0)),
            None => {
                let (vals, vecs) = &self.eigen[x];
                linalg::spectral_map(vals, vecs, |l| (-s * l).exp())
            }
        }
    }
}

/// Time-ordered exponential `𝒜^{Φ,V}_t ∈ End(F_{X_0})` along `path`.
///
/// On each holding interval the integrand is the constant
/// `B_k = ∕∕_{τ_k}^{−1} V(Y_k) ∕∕_{τ_k}`, and `𝒜_t = e^{−Δ_0 B_0} e^{−Δ_1 B_1} ⋯`
/// with the earliest interval leftmost, matching the simplex series over
/// `s_1 ≤ … ≤ s_n`. For rank 1 this is `e^{−∫v}`.
pub fn ordered_exponential(path: &PathSample, c: &Connection, v: &Potential, t: f64) -> Result<CMatrix> {
    ordered_exponential_scaled(path, c, &PotentialExp::new(v)?, t, 1.0)
}

/// [`ordered_exponential`] for the potential `scale·V`.
pub fn ordered_exponential_scaled(
    path: &PathSample,
    c: &Connection,
    v: &PotentialExp,
    t: f64,
    scale: f64,
) -> Result<CMatrix> {
    if v.rank != c.rank() {
        return Err(Error::RankMismatch { expected: c.rank(), found: v.rank });
    }
    if t > path.horizon {
        return Err(Error::BadParams(format!("time {t} beyond the path horizon {}", path.horizon)));
    }
    if let Some(values) = &v.scalar {
        let occ = occupation_integral(path, values, t);
        return Ok(CMatrix::from_element(1, 1, Complex64::new(scalar_weight(occ, scale), 0.0)));
    }
    let r = c.rank();
    let mut acc = CMatrix::identity(r, r);
    let mut transport = CMatrix::identity(r, r);
    let mut prev: Option<usize> = None;
    for (state, _, len) in path.intervals(t) {
        if let Some(p) = prev {
            transport = c.require(p, state)? * transport;
        }
        let factor = transport.adjoint() * v.exp(state, len * scale) * &transport;
        acc *= factor;
        prev = Some(state);
    }
    Ok(acc)
}

fn z_score(estimate: f64, stderr: f64, exact: f64) -> f64 {
    if stderr > 0.0 {
        (estimate - exact) / stderr
    } else if estimate == exact {
        0.0
    } else {
        f64::INFINITY.copysign(estimate - exact)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub estimate: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    pub samples: u64,
    pub seed: String,
}

impl EstimatorReport {
    pub fn z_score(&self, exact: f64) -> f64 {
        z_score(self.estimate, self.stderr, exact)
    }

    pub fn within(&self, exact: f64, sigmas: f64) -> bool {
        self.z_score(exact).abs() <= sigmas
    }
}

/// Sample count, seed and thread count of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    /// Paths per start vertex.
    pub samples: u64,
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

impl Sampling {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Paths per accumulation chunk. Chunks are summed in index order.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: u64,
    sum_re: f64,
    sum_sq_re: f64,
    sum_im: f64,
    sum_sq_im: f64,
}

impl Moments {
    fn push(&mut self, z: Complex64) {
        self.count += 1;
        self.sum_re += z.re;
        self.sum_sq_re += z.re * z.re;
        self.sum_im += z.im;
        self.sum_sq_im += z.im * z.im;
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum_re += other.sum_re;
        self.sum_sq_re += other.sum_sq_re;
        self.sum_im += other.sum_im;
        self.sum_sq_im += other.sum_sq_im;
    }

    fn mean_se(n: u64, sum: f64, sum_sq: f64) -> (f64, f64) {
        let nf = n as f64;
        let mean = sum / nf;
        if n < 2 {
            return (mean, 0.0);
        }
        let var = ((sum_sq - sum * mean) / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    }

    fn real(&self) -> (f64, f64) {
        Self::mean_se(self.count, self.sum_re, self.sum_sq_re)
    }

    fn imag(&self) -> (f64, f64) {
        Self::mean_se(self.count, self.sum_im, self.sum_sq_im)
    }
}

fn check_sampling(g: &WeightedGraph, sampling: &Sampling, t: f64) -> Result<()> {
    if sampling.samples < 100 {
        return Err(Error::BadParams(format!("need at least 100 samples, got {}", sampling.samples)));
    }
    if sampling.workers == 0 {
        return Err(Error::BadParams("worker count must be positive".into()));
    }
    if g.len() >= (1 << 32) || sampling.samples >= (1 << 32) {
        return Err(Error::BadParams("too many vertices or samples for the stream layout".into()));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::BadParams(format!("time must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Runs `samples` paths from every vertex in `starts` and returns per-start moments.
fn run_paths<F>(g: &WeightedGraph, starts: &[usize], t: f64, sampling: &Sampling, observable: F) -> Result<Vec<Moments>>
where
    F: Fn(&PathSample) -> Result<Complex64> + Sync,
{
    check_sampling(g, sampling, t)?;
    let sampler = JumpSampler::new(g);
    let factory = StreamFactory::new(sampling.seed);
    let chunks_per_start = sampling.samples.div_ceil(CHUNK);
    let jobs: Vec<(usize, u64)> = starts.iter().flat_map(|&x| (0..chunks_per_start).map(move |c| (x, c))).collect();

    let run_chunk = |&(x, chunk): &(usize, u64)| -> Result<Moments> {
        let mut m = Moments::default();
        let mut path = PathSample::constant(x, t);
        let end = ((chunk + 1) * CHUNK).min(sampling.samples);
        for index in chunk * CHUNK..end {
            let mut rng: ChaCha8Rng = factory.stream(x, index);
            sampler.sample_into(x, t, &mut rng, &mut path);
            m.push(observable(&path)?);
        }
        Ok(m)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sampling.workers)
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
    let partials: Vec<Result<Moments>> = pool.install(|| jobs.par_iter().map(run_chunk).collect());

    let mut per_start = vec![Moments::default(); starts.len()];
    for (k, partial) in partials.into_iter().enumerate() {
        per_start[k / chunks_per_start as usize].merge(&partial?);
    }
    Ok(per_start)
}

fn report(m: &Moments, factory_seed: u64) -> EstimatorReport {
    let (estimate, stderr) = m.real();
    EstimatorReport { estimate, stderr, samples: m.count, seed: StreamFactory::new(factory_seed).descriptor() }
}

/// Estimates `p(t,x,y)·m(y) = P^x(X_t = y)` by the empirical frequency.
pub fn estimate_heat_kernel(
    g: &WeightedGraph,
    x: usize,
    y: usize,
    t: f64,
    sampling: &Sampling,
) -> Result<EstimatorReport> {
    if x >= g.len() || y >= g.len() {
        return Err(Error::UnknownIndex(x.max(y)));
    }
    let m = run_paths(g, &[x], t, sampling, |p| Ok(Complex64::new(if p.terminal() == y { 1.0 } else { 0.0 }, 0.0)))?;
    Ok(report(&m[0], sampling.seed))
}

/// Estimates `P^x(N(t) = 0)`.
pub fn estimate_no_jump(g: &WeightedGraph, x: usize, t: f64, sampling: &Sampling) -> Result<EstimatorReport> {
    if x >= g.len() {
        return Err(Error::UnknownIndex(x));
    }
    let m = run_paths(g, &[x], t, sampling, |p| Ok(Complex64::new(if p.jump_count() == 0 { 1.0 } else { 0.0 }, 0.0)))?;
    Ok(report(&m[0], sampling.seed))
}

/// Which Feynman-Kac functional to average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FkMode {
    /// `F = e^{−(1/ħ)∫w}` for a scalar potential; the connection is not used.
    Scalar,
    /// `F = tr_x(𝒜^{Φ,V/ħ}_t ∕∕_t^{−1})`.
    Covariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexEstimate {
    pub vertex: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub imag: f64,
    pub imag_stderr: f64,
}

impl VertexEstimate {
    pub fn z_score(&self, exact: f64) -> f64 {
        z_score(self.estimate, self.stderr, exact)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEstimate {
    /// Real part of `Σ_x E^x[1{X_t = x} F]`.
    pub total: EstimatorReport,
    pub imag: f64,
    pub imag_stderr: f64,
    pub per_vertex: Vec<VertexEstimate>,
}

/// Monte Carlo estimate of `tr e^{−βħ H_{Φ,V/ħ}}`.
pub fn estimate_partition(
    g: &WeightedGraph,
    c: &Connection,
    v: &Potential,
    beta: f64,
    hbar: f64,
    sampling: &Sampling,
    mode: FkMode,
) -> Result<PartitionEstimate> {
    if !(beta > 0.0) || !(hbar > 0.0) {
        return Err(Error::BadParams(format!("beta and hbar must be positive, got {beta}, {hbar}")));
    }
    if v.len() != g.len() {
        return Err(Error::RankMismatch { expected: g.len(), found: v.len() });
    }
    let t = beta * hbar;
    let scale = 1.0 / hbar;
    let starts: Vec<usize> = (0..g.len()).collect();
    let moments = match mode {
        FkMode::Scalar => {
            let w = v.scalar_values().ok_or(Error::RankMismatch { expected: 1, found: v.rank() })?;
            run_paths(g, &starts, t, sampling, |p| {
                let value =
                    if p.terminal() == p.start() { scalar_weight(occupation_integral(p, &w, t), scale) } else { 0.0 };
                Ok(Complex64::new(value, 0.0))
            })?
        }
        FkMode::Covariant => {
            if c.rank() != v.rank() {
                return Err(Error::RankMismatch { expected: c.rank(), found: v.rank() });
            }
            let report = validate_connection(c, g);
            if !report.is_valid() {
                return Err(Error::InvalidConnection(format!("{} violation(s)", report.violations.len())));
            }
            let vexp = PotentialExp::new(v)?;
            run_paths(g, &starts, t, sampling, |p| {
                if p.terminal() != p.start() {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let a = ordered_exponential_scaled(p, c, &vexp, t, scale)?;
                let transport = parallel_transport(p, c)?;
                Ok(linalg::trace(&(a * transport.adjoint())))
            })?
        }
    };

    let mut per_vertex = Vec::with_capacity(g.len());
    let (mut est, mut var, mut im, mut im_var) = (0.0, 0.0, 0.0, 0.0);
    for (x, m) in moments.iter().enumerate() {
        let (e, se) = m.real();
        let (ie, ise) = m.imag();
        est += e;
        var += se * se;
        im += ie;
        im_var += ise * ise;
        per_vertex.push(VertexEstimate { vertex: x, estimate: e, stderr: se, imag: ie, imag_stderr: ise });
    }
    Ok(PartitionEstimate {
        total: EstimatorReport {
            estimate: est,
            stderr: var.sqrt(),
            samples: sampling.samples * g.len() as u64,
            seed: StreamFactory::new(sampling.seed).descriptor(),
        },
        imag: im,
        imag_stderr: im_var.sqrt(),
        per_vertex,
    })
}
