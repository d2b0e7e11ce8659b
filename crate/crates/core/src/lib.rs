//! Scalar, magnetic and covariant Schrödinger operators on finite weighted
//! graphs, their quantum partition functions computed exactly and by
//! Feynman-Kac Monte Carlo, and the semiclassical limit `ħ → 0`.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | weighted graphs `(X, b, m)`, degrees, generators, truncation |
//! | [`bundle`] | unitary connections, magnetic phases, Hermitian potentials |
//! | [`operator`] | matrices and forms of `H_{Φ,V}` |
//! | [`spectral`] | eigendecomposition, heat kernels, traces, Kato functional |
//! | [`semiclassics`] | classical sums, trace sweeps, Golden-Thompson margins |
//! | [`paths`] | jump process, parallel transport, Monte Carlo estimators |
//! | [`formats`] | JSON-compatible file formats |

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod error;
pub mod formats;
pub mod graph;
pub mod linalg;
pub mod operator;
pub mod paths;
pub mod semiclassics;
pub mod spectral;
pub mod stream;

pub use bundle::{Connection, MagneticPotential, Potential};
pub use error::{Error, Result};
pub use graph::{DegreeProfile, ExhaustionSequence, Family, GraphSpec, WeightedGraph};
pub use operator::{OperatorMatrix, Section};
pub use spectral::{HeatKernel, SpectralDecomposition};
