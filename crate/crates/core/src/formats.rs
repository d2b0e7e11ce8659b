//! JSON-compatible file formats.
//!
//! * graph: `{"vertices": [...], "edges": [[a, b, w], ...], "measure": [[a, m], ...]}`
//! * connection: `[[a, b, [[[re, im], ...], ...]], ...]`
//! * magnetic: `[[a, b, phase], ...]`
//! * potential: `[[a, matrix], ...]` or `[[a, scalar], ...]`
//!
//! A connection entry for `a → b` without its reverse gets the adjoint.
//! Vertices missing from a potential file carry the zero matrix; scalars in a
//! matrix-valued file mean multiples of the identity.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundle::{Connection, MagneticPotential, Potential};
use crate::error::{Error, Result};
use crate::graph::{GraphSpec, WeightedGraph};
use crate::linalg::CMatrix;

/// Rows of `[re, im]` pairs.
pub type ComplexRows = Vec<Vec<[f64; 2]>>;

pub type ConnectionEntry = (String, String, ComplexRows);
pub type MagneticEntry = (String, String, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialValue {
    Scalar(f64),
    Matrix(ComplexRows),
}

pub type PotentialEntry = (String, PotentialValue);

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    WeightedGraph::build(&parse::<GraphSpec>(text, "graph")?)
}

pub fn graph_to_json(g: &WeightedGraph) -> String {
    serde_json::to_string_pretty(&g.to_spec()).expect("graph spec serializes")
}

pub fn matrix_from_rows(rows: &ComplexRows) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix must be square and nonempty".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn matrix_to_rows(m: &CMatrix) -> ComplexRows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn lookup(g: &WeightedGraph, label: &str) -> Result<usize> {
    g.index_of(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

pub fn connection_from_entries(g: &WeightedGraph, entries: &[ConnectionEntry]) -> Result<Connection> {
    let mut given = Vec::with_capacity(entries.len());
    for (a, b, rows) in entries {
        given.push((lookup(g, a)?, lookup(g, b)?, matrix_from_rows(rows)?));
    }
    let rank = given.first().map_or(1, |(_, _, m)| m.nrows());
    if let Some((_, _, m)) = given.iter().find(|(_, _, m)| m.nrows() != rank) {
        return Err(Error::RankMismatch { expected: rank, found: m.nrows() });
    }
    let keys: BTreeSet<(usize, usize)> = given.iter().map(|&(i, j, _)| (i, j)).collect();
    let mut c = Connection::new(rank);
    for (i, j, m) in given {
        if !keys.contains(&(j, i)) {
            c.set_directed(j, i, m.adjoint());
        }
        c.set_directed(i, j, m);
    }
    Ok(c)
}

pub fn parse_connection(g: &WeightedGraph, text: &str) -> Result<Connection> {
    connection_from_entries(g, &parse::<Vec<ConnectionEntry>>(text, "connection")?)
}

pub fn connection_to_entries(g: &WeightedGraph, c: &Connection) -> Vec<ConnectionEntry> {
    c.directed_entries().map(|(i, j, m)| (g.label(i).to_string(), g.label(j).to_string(), matrix_to_rows(m))).collect()
}

/// Unlisted edges carry phase 0.
pub fn magnetic_from_entries(g: &WeightedGraph, entries: &[MagneticEntry]) -> Result<MagneticPotential> {
    let mut theta = MagneticPotential::zero(g);
    for (a, b, phase) in entries {
        let (i, j) = (lookup(g, a)?, lookup(g, b)?);
        if g.weight(i, j) <= 0.0 {
            return Err(Error::BadParams(format!("phase given on non-edge {a} - {b}")));
        }
        theta.set(i, j, *phase)?;
    }
    Ok(theta)
}

pub fn parse_magnetic(g: &WeightedGraph, text: &str) -> Result<MagneticPotential> {
    magnetic_from_entries(g, &parse::<Vec<MagneticEntry>>(text, "magnetic")?)
}

pub fn potential_from_entries(g: &WeightedGraph, entries: &[PotentialEntry]) -> Result<Potential> {
    let mut rank = None;
    for (_, value) in entries {
        if let PotentialValue::Matrix(rows) = value {
            match rank {
                None => rank = Some(rows.len()),
                Some(r) if r != rows.len() => return Err(Error::RankMismatch { expected: r, found: rows.len() }),
                _ => {}
            }
        }
    }
    let rank = rank.unwrap_or(1);
    let mut values = vec![CMatrix::zeros(rank, rank); g.len()];
    let mut seen = BTreeSet::new();
    for (label, value) in entries {
        let i = lookup(g, label)?;
        if !seen.insert(i) {
            return Err(Error::DuplicateLabel(label.clone()));
        }
        values[i] = match value {
            PotentialValue::Scalar(s) => CMatrix::identity(rank, rank) * Complex64::new(*s, 0.0),
            PotentialValue::Matrix(rows) => matrix_from_rows(rows)?,
        };
    }
    Potential::new(rank, values)
}

pub fn parse_potential(g: &WeightedGraph, text: &str) -> Result<Potential> {
    potential_from_entries(g, &parse::<Vec<PotentialEntry>>(text, "potential")?)
}

/// Scalars when the rank is 1, matrices otherwise.
pub fn potential_to_entries(g: &WeightedGraph, v: &Potential) -> Vec<PotentialEntry> {
    (0..v.len())
        .map(|i| {
            let value = match v.rank() {
                1 => PotentialValue::Scalar(v.at(i)[(0, 0)].re),
                _ => PotentialValue::Matrix(matrix_to_rows(v.at(i))),
            };
            (g.label(i).to_string(), value)
        })
        .collect()
}
