//! Experiment config files and their resolution into in-memory objects.
//!
//! ```json
//! {
//!   "graph": {"preset": "two_vertex"},
//!   "magnetic": [["a", "b", 0.5]],
//!   "potential": "potential.json",
//!   "params": {"beta": 1.0, "hbar_schedule": [0.1, 0.01]},
//!   "output_dir": "out",
//!   "seed": 7
//! }
//! ```
//!
//! `connection`, `magnetic` and `potential` take either a path or the file
//! contents inline. Relative paths are resolved against the config file.

use std::fs;
use std::path::{Path, PathBuf};

use qpf_core::bundle::connection_from_magnetic;
use qpf_core::formats::{self, ConnectionEntry, MagneticEntry, PotentialEntry};
use qpf_core::semiclassics::{default_schedule, SweepMode};
use qpf_core::{Connection, Family, GraphSpec, Potential, WeightedGraph};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// One edge, `b = 1`, `m ≡ 1`, `w = (0, 1)`.
    TwoVertex,
    /// Unit 4-cycle, `w = 0`.
    FourCycle,
    /// Star with four leaves, `w = 0`.
    Star,
    /// 3×3 lattice box, `w = 0`.
    LatticeBox,
    /// Path with `m = (1, 2, 3)` and `w = −ln m`.
    WeylPath,
}

impl Preset {
    pub fn graph(self) -> WeightedGraph {
        let g = match self {
            Preset::TwoVertex => WeightedGraph::generate(Family::Path { n: 2 }),
            Preset::FourCycle => WeightedGraph::generate(Family::Cycle { n: 4 }),
            Preset::Star => WeightedGraph::generate(Family::Star { leaves: 4 }),
            Preset::LatticeBox => WeightedGraph::generate(Family::LatticeBox { dim: 2, side: 3 }),
            Preset::WeylPath => {
                WeightedGraph::generate(Family::Path { n: 3 }).and_then(|g| g.with_measure(&[1.0, 2.0, 3.0]))
            }
        };
        g.expect("preset graphs are valid")
    }

    pub fn potential(self, g: &WeightedGraph) -> Potential {
        match self {
            Preset::TwoVertex => Potential::scalar(&[0.0, 1.0]),
            Preset::WeylPath => Potential::neg_log_measure(g),
            _ => Potential::zero(g.len(), 1),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Preset(Preset),
    File(String),
    Generate(Family),
    Inline(GraphSpec),
}

/// Either a path to a file or its contents.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    File(String),
    Inline(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Scalar,
    Magnetic,
    Covariant,
}

impl From<ModeName> for SweepMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Scalar => SweepMode::Scalar,
            ModeName::Magnetic => SweepMode::Magnetic,
            ModeName::Covariant => SweepMode::Covariant,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub beta: f64,
    /// Single `ħ` for `fk-compare`.
    pub hbar: f64,
    pub hbar_schedule: Vec<f64>,
    /// Time for `kernel` and `gt-check` when `t_grid` is absent.
    pub t: f64,
    pub t_grid: Option<Vec<f64>>,
    /// Paths per start vertex.
    pub samples: u64,
    pub mode: Option<ModeName>,
    pub workers: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            beta: 1.0,
            hbar: 1.0,
            hbar_schedule: default_schedule(),
            t: 1.0,
            t_grid: None,
            samples: 100_000,
            mode: None,
            workers: 1,
        }
    }
}

impl Params {
    pub fn times(&self) -> Vec<f64> {
        self.t_grid.clone().unwrap_or_else(|| vec![self.t])
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub connection: Option<Source<Vec<ConnectionEntry>>>,
    pub magnetic: Option<Source<Vec<MagneticEntry>>>,
    pub potential: Option<Source<Vec<PotentialEntry>>>,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub seed: Option<u64>,
}

fn default_output_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))
    }
}

/// A config with every source loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub graph: WeightedGraph,
    pub connection: Connection,
    pub potential: Potential,
    pub mode: SweepMode,
    pub params: Params,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
}

fn read(base: &Path, name: &str) -> Result<String> {
    let path = base.join(name);
    if !path.exists() {
        return Err(CliError::FileNotFound(path));
    }
    Ok(fs::read_to_string(path)?)
}

fn load<T>(base: &Path, source: &Source<T>, what: &str) -> Result<T>
where
    T: Clone + for<'de> Deserialize<'de>,
{
    match source {
        Source::Inline(v) => Ok(v.clone()),
        Source::File(name) => serde_json::from_str(&read(base, name)?)
            .map_err(|e| CliError::ConfigParse(format!("{what} file {name}: {e}"))),
    }
}

impl Experiment {
    /// Loads the config at `path`; relative paths inside it refer to its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CliError::FileNotFound(path.to_path_buf()));
        }
        let config = ExperimentConfig::parse(&fs::read_to_string(path)?)?;
        Self::resolve(config, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(config: ExperimentConfig, base: &Path) -> Result<Self> {
        let (graph, preset) = match &config.graph {
            GraphSource::Preset(p) => (p.graph(), Some(*p)),
            GraphSource::File(name) => (formats::parse_graph(&read(base, name)?)?, None),
            GraphSource::Generate(family) => (WeightedGraph::generate(*family)?, None),
            GraphSource::Inline(spec) => (WeightedGraph::build(spec)?, None),
        };

        if config.connection.is_some() && config.magnetic.is_some() {
            return Err(CliError::ConfigParse("give either `connection` or `magnetic`, not both".into()));
        }
        let connection = match (&config.connection, &config.magnetic) {
            (Some(src), _) => Some(formats::connection_from_entries(&graph, &load(base, src, "connection")?)?),
            (_, Some(src)) => {
                let theta = formats::magnetic_from_entries(&graph, &load(base, src, "magnetic")?)?;
                Some(connection_from_magnetic(&graph, &theta)?)
            }
            _ => None,
        };
        let potential = match &config.potential {
            Some(src) => Some(formats::potential_from_entries(&graph, &load(base, src, "potential")?)?),
            None => None,
        };
        let rank = connection.as_ref().map(|c| c.rank()).or(potential.as_ref().map(|v| v.rank())).unwrap_or(1);
        let potential = match potential {
            Some(v) => v,
            None if rank == 1 => preset.map_or_else(|| Potential::zero(graph.len(), 1), |p| p.potential(&graph)),
            None => Potential::zero(graph.len(), rank),
        };
        let mode = match config.params.mode {
            Some(m) => m.into(),
            None if rank > 1 => SweepMode::Covariant,
            None if config.magnetic.is_some() || config.connection.is_some() => SweepMode::Magnetic,
            None => SweepMode::Scalar,
        };
        let connection = connection.unwrap_or_else(|| Connection::trivial(&graph, rank));
        if config.params.workers == 0 {
            return Err(qpf_core::Error::BadParams("workers must be positive".into()).into());
        }
        Ok(Self {
            graph,
            connection,
            potential,
            mode,
            params: config.params,
            output_dir: base.join(&config.output_dir),
            seed: config.seed,
        })
    }
}
