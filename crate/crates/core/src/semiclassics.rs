//! Classical and quantum partition functions and the limit `ħ → 0`.
//!
//! The quantum trace is `tr e^{−βħ H_{Φ,V/ħ}}` and the classical sum is
//! `Σ_x tr_x e^{−βV(x)}`. In the scalar non-magnetic case the trace is
//! squeezed between `Σ_x e^{−deg_m(x)βħ − βw(x)}` and the classical sum.

use rayon::prelude::*;

use crate::bundle::{Connection, Potential};
use crate::error::{Error, Result};
use crate::graph::{ExhaustionSequence, WeightedGraph};
use crate::linalg::{self, CMatrix};
use crate::operator::assemble;
use crate::spectral::{eigendecompose, partition_function};

/// Absolute slack for the trace inequalities.
pub const TRACE_SLACK: f64 = 1e-9;

/// `Σ_x tr_x e^{−βV(x)}` (scalar: `Σ_x e^{−βw(x)}`).
pub fn classical_partition(v: &Potential, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::BadParams(format!("beta must be positive, got {beta}")));
    }
    if let Some(w) = v.scalar_values() {
        return Ok(w.iter().map(|w| (-beta * w).exp()).sum());
    }
    v.check_hermitian()?;
    let mut total = 0.0;
    for m in v.values() {
        let (vals, _) = linalg::hermitian_eigen(m)?;
        total += vals.iter().map(|l| (-beta * l).exp()).sum::<f64>();
    }
    Ok(total)
}

/// `tr e^{−βħ H_{Φ,V/ħ}}` from the exact spectrum.
pub fn semiclassical_trace(g: &WeightedGraph, c: &Connection, v: &Potential, beta: f64, hbar: f64) -> Result<f64> {
    if !(beta > 0.0) || !(hbar > 0.0) {
        return Err(Error::BadParams(format!("beta and hbar must be positive, got {beta}, {hbar}")));
    }
    let op = assemble(g, c, Some(&v.scaled(1.0 / hbar)))?;
    partition_function(&eigendecompose(&op)?, beta * hbar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    /// `Σ_x e^{−deg_m(x)βħ} e^{−βw(x)}`.
    pub lower: f64,
    /// `Σ_x e^{−βw(x)}`.
    pub upper: f64,
}

pub fn sandwich_bounds(g: &WeightedGraph, w: &[f64], beta: f64, hbar: f64) -> Result<Sandwich> {
    if w.len() != g.len() {
        return Err(Error::RankMismatch { expected: g.len(), found: w.len() });
    }
    if !(beta > 0.0) || !(hbar > 0.0) {
        return Err(Error::BadParams(format!("beta and hbar must be positive, got {beta}, {hbar}")));
    }
    let deg = g.degrees();
    let upper = w.iter().map(|w| (-beta * w).exp()).sum();
    let lower = w.iter().zip(&deg.deg_m).map(|(w, d)| (-d * beta * hbar).exp() * (-beta * w).exp()).sum();
    Ok(Sandwich { lower, upper })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenThompson {
    /// `Σ_x tr_x e^{−tV(x)}`.
    pub classical: f64,
    /// `tr e^{−tH_{Φ,V}}`.
    pub quantum: f64,
    pub margin: f64,
}

impl GoldenThompson {
    pub fn holds(&self) -> bool {
        self.margin >= -TRACE_SLACK
    }
}

/// `Σ_x tr_x e^{−tV(x)} − tr e^{−tH_{Φ,V}}`.
pub fn golden_thompson_margin(g: &WeightedGraph, c: &Connection, v: &Potential, t: f64) -> Result<GoldenThompson> {
    if !(t > 0.0) {
        return Err(Error::BadParams(format!("time must be positive, got {t}")));
    }
    let classical = classical_partition(v, t)?;
    let quantum = partition_function(&eigendecompose(&assemble(g, c, Some(v))?)?, t)?;
    Ok(GoldenThompson { classical, quantum, margin: classical - quantum })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Rank 1, trivial connection: the sandwich applies.
    Scalar,
    /// Rank 1 with a magnetic phase.
    Magnetic,
    /// Any rank.
    Covariant,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::Scalar => "scalar",
            SweepMode::Magnetic => "magnetic",
            SweepMode::Covariant => "covariant",
        }
    }
}

/// Geometric decade grid `1e-1, ..., 1e-4`.
pub fn default_schedule() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

#[derive(Debug, Clone)]
pub struct SweepConfig<'a> {
    pub graph: &'a WeightedGraph,
    pub connection: &'a Connection,
    pub potential: &'a Potential,
    pub beta: f64,
    /// Strictly decreasing, positive.
    pub hbar_schedule: Vec<f64>,
    pub mode: SweepMode,
}

impl SweepConfig<'_> {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::BadParams(format!("beta must be positive, got {}", self.beta)));
        }
        if self.hbar_schedule.is_empty() {
            return Err(Error::BadParams("empty hbar schedule".into()));
        }
        if self.hbar_schedule.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::BadParams("hbar schedule entries must be positive".into()));
        }
        if self.hbar_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::BadParams("hbar schedule must be strictly decreasing".into()));
        }
        if self.potential.len() != self.graph.len() {
            return Err(Error::RankMismatch { expected: self.graph.len(), found: self.potential.len() });
        }
        if self.connection.rank() != self.potential.rank() {
            return Err(Error::RankMismatch { expected: self.connection.rank(), found: self.potential.rank() });
        }
        match self.mode {
            SweepMode::Scalar | SweepMode::Magnetic if self.potential.rank() != 1 => {
                Err(Error::RankMismatch { expected: 1, found: self.potential.rank() })
            }
            SweepMode::Scalar if !is_trivial(self.connection) => {
                Err(Error::BadParams("scalar mode needs the trivial connection".into()))
            }
            _ => Ok(()),
        }
    }
}

fn is_trivial(c: &Connection) -> bool {
    c.directed_entries().all(|(_, _, m)| linalg::op_norm(&(m - CMatrix::identity(c.rank(), c.rank()))) <= 1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub hbar: f64,
    pub trace: f64,
    /// Sandwich lower bound; scalar mode only.
    pub lower: Option<f64>,
    pub upper: f64,
    /// `upper − trace`.
    pub gap: f64,
    /// `upper·(1 − e^{−βħ C(b,m)})`, the gap envelope implied by the sandwich.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub beta: f64,
    pub rows: Vec<SweepRow>,
    pub classical_value: f64,
    /// Last gap below `max(1e-6, 1e-3·classical_value)`.
    pub converged: bool,
    /// `gap(ħ_{k+1}) / gap(ħ_k)` along the schedule.
    pub gap_ratios: Vec<f64>,
    /// Every gap inside its envelope (asserted in scalar mode only).
    pub within_envelope: bool,
}

impl SweepResult {
    pub fn last_gap(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gap)
    }

    pub fn final_trace(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.trace)
    }
}

/// Quantum traces along the schedule, checked against the classical sum and,
/// in scalar mode, the lower sandwich.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let g = config.graph;
    let classical_value = classical_partition(config.potential, config.beta)?;
    let c_bm = g.degrees().c_bm;
    let scalar_w = match config.mode {
        SweepMode::Scalar => config.potential.scalar_values(),
        _ => None,
    };

    let rows: Vec<Result<SweepRow>> = config
        .hbar_schedule
        .par_iter()
        .map(|&hbar| {
            let trace = semiclassical_trace(g, config.connection, config.potential, config.beta, hbar)?;
            let lower = match &scalar_w {
                Some(w) => Some(sandwich_bounds(g, w, config.beta, hbar)?.lower),
                None => None,
            };
            Ok(SweepRow {
                hbar,
                trace,
                lower,
                upper: classical_value,
                gap: classical_value - trace,
                envelope: classical_value * (1.0 - (-config.beta * hbar * c_bm).exp()),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    for row in &rows {
        if row.trace > row.upper + TRACE_SLACK {
            return Err(Error::InvariantViolation(format!(
                "trace {} exceeds classical sum {} at hbar {}",
                row.trace, row.upper, row.hbar
            )));
        }
        if let Some(lower) = row.lower {
            if lower > row.trace + TRACE_SLACK {
                return Err(Error::InvariantViolation(format!(
                    "sandwich lower bound {lower} exceeds trace {} at hbar {}",
                    row.trace, row.hbar
                )));
            }
        }
    }
    let within_envelope = rows.iter().all(|r| r.gap <= r.envelope + TRACE_SLACK);
    if config.mode == SweepMode::Scalar && !within_envelope {
        return Err(Error::InvariantViolation("scalar gap outside the sandwich envelope".into()));
    }
    let gap_ratios = rows.windows(2).map(|w| w[1].gap / w[0].gap).collect();
    let last_gap = rows.last().unwrap().gap;
    Ok(SweepResult {
        mode: config.mode,
        beta: config.beta,
        converged: last_gap.abs() < f64::max(1e-6, 1e-3 * classical_value),
        rows,
        classical_value,
        gap_ratios,
        within_envelope,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionRow {
    pub size: usize,
    pub classical_value: f64,
    pub final_trace: f64,
    pub final_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionTable {
    pub rows: Vec<ExhaustionRow>,
    /// Ratio of the last two per-vertex increments of the classical sum.
    pub increment_ratio: Option<f64>,
    /// Geometric extrapolation of the remaining classical mass.
    pub tail_estimate: Option<f64>,
    /// Classical sums keep growing without an apparent bound.
    pub divergent_trend: bool,
}

/// Sweeps every truncation of `host` in the exhaustion.
///
/// `connection` and `potential` live on the host and are restricted along
/// with the graph. Divergence is flagged when the per-vertex increments of
/// the classical sum stop shrinking (ratio ≥ 1) or when their geometric tail
/// extrapolation exceeds 10% of the current value.
pub fn exhaustion_sweep(
    host: &WeightedGraph,
    exhaustion: &ExhaustionSequence,
    connection: &Connection,
    potential: &Potential,
    beta: f64,
    hbar_schedule: &[f64],
    mode: SweepMode,
) -> Result<ExhaustionTable> {
    if exhaustion.host_size() != host.len() {
        return Err(Error::BadParams("exhaustion built for a different host".into()));
    }
    let mut rows = Vec::with_capacity(exhaustion.subsets().len());
    for keep in exhaustion.subsets() {
        let g = host.restrict(keep)?;
        let c = connection.restrict(keep);
        let v = potential.restrict(keep)?;
        let result = sweep(&SweepConfig {
            graph: &g,
            connection: &c,
            potential: &v,
            beta,
            hbar_schedule: hbar_schedule.to_vec(),
            mode,
        })?;
        rows.push(ExhaustionRow {
            size: g.len(),
            classical_value: result.classical_value,
            final_trace: result.final_trace(),
            final_gap: result.last_gap(),
            converged: result.converged,
        });
    }

    let increments: Vec<f64> = rows
        .windows(2)
        .filter(|w| w[1].size > w[0].size)
        .map(|w| (w[1].classical_value - w[0].classical_value) / (w[1].size - w[0].size) as f64)
        .collect();
    let (increment_ratio, tail_estimate, divergent_trend) = match increments.as_slice() {
        [.., prev, last] if *prev > 0.0 => {
            let ratio = last / prev;
            let current = rows.last().unwrap().classical_value;
            if ratio >= 1.0 {
                (Some(ratio), None, true)
            } else {
                let tail = last * ratio / (1.0 - ratio);
                (Some(ratio), Some(tail), tail > 0.1 * current)
            }
        }
        _ => (None, None, false),
    };
    Ok(ExhaustionTable { rows, increment_ratio, tail_estimate, divergent_trend })
}
