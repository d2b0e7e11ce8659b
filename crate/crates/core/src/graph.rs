//! Finite weighted graphs `(X, b, m)`.
//!
//! Vertices carry opaque string labels but every numeric routine works on the
//! contiguous indices `0..n`. Edge weights are stored once per undirected pair
//! (smaller index first); the adjacency lists give the directed view.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input description of a graph, as read from a graph spec file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    /// Vertex labels in index order. When empty, labels are collected from
    /// `edges` and `measure` in order of first appearance.
    #[serde(default)]
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String, f64)>,
    /// Missing entries default to 1.0.
    #[serde(default)]
    pub measure: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(usize, usize), f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
    measure: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile {
    /// `deg_1(i) = Σ_j b(i, j)`.
    pub deg_1: Vec<f64>,
    /// `deg_m(i) = deg_1(i) / m(i)`, the jump rate at `i`.
    pub deg_m: Vec<f64>,
    /// `C(b, m) = max_i deg_m(i)`.
    pub c_bm: f64,
}

/// Graph families with unit weights and unit measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Path { n: usize },
    Cycle { n: usize },
    Star { leaves: usize },
    Complete { n: usize },
    LatticeBox { dim: usize, side: usize },
}

impl WeightedGraph {
    /// Builds a graph from labels, undirected weighted edges and a measure.
    ///
    /// An edge may be listed in both orientations as long as the weights agree.
    pub fn build(spec: &GraphSpec) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        if spec.vertices.is_empty() {
            let seen = spec.edges.iter().flat_map(|(a, b, _)| [a, b]).chain(spec.measure.iter().map(|(a, _)| a));
            for label in seen {
                if !index.contains_key(label) {
                    index.insert(label.clone(), labels.len());
                    labels.push(label.clone());
                }
            }
        } else {
            for label in &spec.vertices {
                if index.insert(label.clone(), labels.len()).is_some() {
                    return Err(Error::DuplicateLabel(label.clone()));
                }
                labels.push(label.clone());
            }
        }
        if labels.is_empty() {
            return Err(Error::BadParams("graph has no vertices".into()));
        }
        let lookup = |label: &String| index.get(label).copied().ok_or_else(|| Error::UnknownLabel(label.clone()));

        let mut edges = BTreeMap::new();
        for (a, b, w) in &spec.edges {
            let (i, j) = (lookup(a)?, lookup(b)?);
            if i == j {
                return Err(Error::SelfLoop(a.clone()));
            }
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::NonpositiveWeight(a.clone(), b.clone(), *w));
            }
            let key = (i.min(j), i.max(j));
            if let Some(&prev) = edges.get(&key) {
                if prev != *w {
                    return Err(Error::AsymmetricInput(a.clone(), b.clone(), prev, *w));
                }
            }
            edges.insert(key, *w);
        }

        let mut measure = vec![1.0; labels.len()];
        let mut measured = vec![false; labels.len()];
        for (a, value) in &spec.measure {
            let i = lookup(a)?;
            if measured[i] {
                return Err(Error::DuplicateLabel(a.clone()));
            }
            if !(*value > 0.0) || !value.is_finite() {
                return Err(Error::NonpositiveMeasure(a.clone(), *value));
            }
            measure[i] = *value;
            measured[i] = true;
        }
        Ok(Self::from_parts(labels, edges, measure))
    }

    /// Index-based constructor; `edges` are `(i, j, b)` with `i != j`.
    pub fn from_indexed(n: usize, edges: &[(usize, usize, f64)], measure: Option<&[f64]>) -> Result<Self> {
        let spec = GraphSpec {
            vertices: (0..n).map(|i| i.to_string()).collect(),
            edges: edges
                .iter()
                .map(|&(i, j, w)| {
                    if i >= n || j >= n {
                        return Err(Error::UnknownIndex(i.max(j)));
                    }
                    Ok((i.to_string(), j.to_string(), w))
                })
                .collect::<Result<_>>()?,
            measure: match measure {
                Some(m) if m.len() != n => {
                    return Err(Error::BadParams(format!("measure has {} entries, expected {n}", m.len())))
                }
                Some(m) => m.iter().enumerate().map(|(i, &v)| (i.to_string(), v)).collect(),
                None => Vec::new(),
            },
        };
        Self::build(&spec)
    }

    fn from_parts(labels: Vec<String>, edges: BTreeMap<(usize, usize), f64>, measure: Vec<f64>) -> Self {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        for (&(i, j), &w) in &edges {
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
        }
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self { labels, index, edges, adjacency, measure }
    }

    /// Standard families; all weights and measures are 1.
    pub fn generate(family: Family) -> Result<Self> {
        let bad = |msg: &str| Err(Error::BadParams(msg.to_string()));
        let (labels, edges): (Vec<String>, Vec<(usize, usize)>) = match family {
            Family::Path { n } => {
                if n == 0 {
                    return bad("path needs at least one vertex");
                }
                (index_labels(n), (1..n).map(|i| (i - 1, i)).collect())
            }
            Family::Cycle { n } => {
                if n < 3 {
                    return bad("cycle needs at least three vertices");
                }
                (index_labels(n), (0..n).map(|i| (i, (i + 1) % n)).collect())
            }
            Family::Star { leaves } => {
                if leaves == 0 {
                    return bad("star needs at least one leaf");
                }
                (index_labels(leaves + 1), (1..=leaves).map(|i| (0, i)).collect())
            }
            Family::Complete { n } => {
                if n == 0 {
                    return bad("complete graph needs at least one vertex");
                }
                let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
                (index_labels(n), edges)
            }
            Family::LatticeBox { dim, side } => {
                if dim == 0 || side < 2 {
                    return bad("lattice box needs dim >= 1 and side >= 2");
                }
                let n = side.checked_pow(dim as u32).ok_or_else(|| Error::BadParams("lattice box too large".into()))?;
                let coords = |mut k: usize| {
                    let mut c = vec![0usize; dim];
                    for slot in c.iter_mut().rev() {
                        *slot = k % side;
                        k /= side;
                    }
                    c
                };
                let labels =
                    (0..n).map(|k| coords(k).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")).collect();
                // Neighbours at Euclidean distance 1 differ by one in exactly one coordinate.
                let mut edges = Vec::new();
                for k in 0..n {
                    let c = coords(k);
                    let mut stride = 1;
                    for axis in (0..dim).rev() {
                        if c[axis] + 1 < side {
                            edges.push((k, k + stride));
                        }
                        stride *= side;
                    }
                }
                (labels, edges)
            }
        };
        let n = labels.len();
        let edges = edges.into_iter().map(|(i, j)| ((i.min(j), i.max(j)), 1.0)).collect();
        Ok(Self::from_parts(labels, edges, vec![1.0; n]))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// `b(i, j)`, zero for non-edges and on the diagonal.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    /// Undirected edges `(i, j, b)` with `i < j`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbours of `i` with their weights, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degrees(&self) -> DegreeProfile {
        let deg_1: Vec<f64> = self.adjacency.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        let deg_m: Vec<f64> = deg_1.iter().zip(&self.measure).map(|(d, m)| d / m).collect();
        let c_bm = deg_m.iter().copied().fold(0.0, f64::max);
        DegreeProfile { deg_1, deg_m, c_bm }
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Component id per vertex, numbered in order of the smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &(u, _) in &self.adjacency[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = next;
                        queue.push_back(u);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Induced subgraph on `keep` (Dirichlet truncation). Retained vertices
    /// keep their labels, measure and mutual edges, in ascending host order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&i| i >= self.len()) {
            return Err(Error::UnknownIndex(bad));
        }
        let mut new_index = vec![usize::MAX; self.len()];
        for (k, &i) in kept.iter().enumerate() {
            new_index[i] = k;
        }
        let labels = kept.iter().map(|&i| self.labels[i].clone()).collect();
        let measure = kept.iter().map(|&i| self.measure[i]).collect();
        let edges = self
            .edges
            .iter()
            .filter(|(&(i, j), _)| new_index[i] != usize::MAX && new_index[j] != usize::MAX)
            .map(|(&(i, j), &w)| ((new_index[i], new_index[j]), w))
            .collect();
        Ok(Self::from_parts(labels, edges, measure))
    }

    /// Returns a copy with the measure replaced.
    pub fn with_measure(&self, measure: &[f64]) -> Result<Self> {
        if measure.len() != self.len() {
            return Err(Error::BadParams(format!("measure has {} entries, expected {}", measure.len(), self.len())));
        }
        if let Some((i, &v)) = measure.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonpositiveMeasure(self.labels[i].clone(), v));
        }
        let mut g = self.clone();
        g.measure = measure.to_vec();
        Ok(g)
    }

    /// Serializable description that rebuilds an equal graph.
    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.labels.clone(),
            edges: self.edges().map(|(i, j, w)| (self.labels[i].clone(), self.labels[j].clone(), w)).collect(),
            measure: self.labels.iter().zip(&self.measure).map(|(l, &m)| (l.clone(), m)).collect(),
        }
    }
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Nested vertex subsets of a host graph, used to probe limits by truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionSequence {
    host_size: usize,
    subsets: Vec<Vec<usize>>,
    partial: bool,
}

impl ExhaustionSequence {
    pub fn new(host: &WeightedGraph, subsets: Vec<Vec<usize>>) -> Result<Self> {
        if subsets.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut normalized: Vec<Vec<usize>> = Vec::with_capacity(subsets.len());
        for mut s in subsets {
            if s.is_empty() {
                return Err(Error::EmptySubset);
            }
            s.sort_unstable();
            s.dedup();
            if let Some(&bad) = s.iter().find(|&&i| i >= host.len()) {
                return Err(Error::UnknownIndex(bad));
            }
            if let Some(prev) = normalized.last() {
                if !prev.iter().all(|i| s.binary_search(i).is_ok()) {
                    return Err(Error::BadParams("exhaustion subsets are not nested".into()));
                }
            }
            normalized.push(s);
        }
        let partial = normalized.last().is_none_or(|s| s.len() != host.len());
        Ok(Self { host_size: host.len(), subsets: normalized, partial })
    }

    /// Index prefixes `{0..k}` for each `k` in `sizes`.
    pub fn prefixes(host: &WeightedGraph, sizes: &[usize]) -> Result<Self> {
        Self::new(host, sizes.iter().map(|&k| (0..k).collect()).collect())
    }

    /// Combinatorial balls of radius `0, 1, ...` around `root`, until the
    /// component of `root` is exhausted.
    pub fn balls(host: &WeightedGraph, root: usize) -> Result<Self> {
        if root >= host.len() {
            return Err(Error::UnknownIndex(root));
        }
        let mut dist = vec![usize::MAX; host.len()];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        let mut radius = 0;
        while let Some(v) = queue.pop_front() {
            radius = radius.max(dist[v]);
            for &(u, _) in host.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let subsets = (0..=radius).map(|r| (0..host.len()).filter(|&i| dist[i] <= r).collect()).collect();
        Self::new(host, subsets)
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn host_size(&self) -> usize {
        self.host_size
    }

    /// True when the last subset is not the whole host.
    pub fn is_partial(&self) -> bool {
        self.partial
    }
}
