//! Experiment configuration: a TOML document with `[graph]`, `[experiment]`,
//! `[nmscg]` and `[sem]` tables. Every key is optional. See `docs/config.md`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use multiperturb_core::generate::DEFAULT_RETRIES;
use multiperturb_core::mec::DEFAULT_ENSEMBLE_SIZE;
use multiperturb_core::sem::{DEFAULT_CLAMP, DEFAULT_MI_REPEATS, DEFAULT_OBSERVATIONAL_ROWS, DEFAULT_ROWS_PER_INTERVENTION};
use multiperturb_core::{Dag, GraphKind, GraphSpec, NmscgParams};
use serde::{Deserialize, Serialize};

use crate::io;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("graph file: {0}")]
    Graph(#[from] io::IoError),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rand,
    Greedy1,
    Dgc,
    SsgA,
    SsgB,
    SsgBestQ,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Rand, Algorithm::Greedy1, Algorithm::Dgc, Algorithm::SsgA, Algorithm::SsgB, Algorithm::SsgBestQ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rand => "rand",
            Algorithm::Greedy1 => "greedy1",
            Algorithm::Dgc => "dgc",
            Algorithm::SsgA => "ssg_a",
            Algorithm::SsgB => "ssg_b",
            Algorithm::SsgBestQ => "ssg_best_q",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EdgesOrientedFraction,
    FInf,
    FMi,
    F1,
    Shd,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::EdgesOrientedFraction => "edges_oriented_fraction",
            Metric::FInf => "f_inf",
            Metric::FMi => "f_mi",
            Metric::F1 => "f1",
            Metric::Shd => "shd",
        }
    }

    /// Metrics that need simulated data.
    pub fn needs_data(self) -> bool {
        matches!(self, Metric::FMi | Metric::F1 | Metric::Shd)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        [Metric::EdgesOrientedFraction, Metric::FInf, Metric::FMi, Metric::F1, Metric::Shd]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown metric `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The designer knows the interventional classes exactly.
    #[default]
    Infinite,
    /// Designs use a posterior given simulated observational data.
    Finite,
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "infinite" => Ok(Mode::Infinite),
            "finite" => Ok(Mode::Finite),
            _ => invalid(format!("unknown mode `{s}`")),
        }
    }
}

/// Where each repeat's ground truth comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    /// Drawn afresh for each repeat; the spec's seed is replaced per repeat.
    Random(GraphSpec),
    /// The same graph in every repeat.
    Fixed(Dag),
}

impl GraphSource {
    pub fn p(&self) -> usize {
        match self {
            GraphSource::Random(s) => s.p,
            GraphSource::Fixed(g) => g.p(),
        }
    }

    /// Parses `er:P:DENSITY`, `tree:P`, `complete:P`, `star:S1,S2,..`;
    /// anything else names an edge-list file.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let num = |x: &str| x.parse::<usize>().map_err(|_| ConfigError::Invalid(format!("bad number `{x}` in `{s}`")));
        let spec = match kind {
            "er" => {
                let (p, rho) = rest.split_once(':').ok_or_else(|| ConfigError::Invalid(format!("expected er:P:DENSITY, got `{s}`")))?;
                let rho: f64 = rho.parse().map_err(|_| ConfigError::Invalid(format!("bad density in `{s}`")))?;
                GraphSpec::er(num(p)?, rho, 0)
            }
            "tree" => GraphSpec::new(GraphKind::Tree, num(rest)?, 0),
            "complete" => GraphSpec::new(GraphKind::Complete, num(rest)?, 0),
            "star" => GraphSpec::star_forest(rest.split(',').map(num).collect::<Result<_, _>>()?, 0),
            _ => return Ok(GraphSource::Fixed(io::load_edge_list(Path::new(s))?.dag)),
        };
        spec.validate().map_err(|e| ConfigError::Invalid(format!("{s}: {e}")))?;
        Ok(GraphSource::Random(spec))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemOptions {
    pub observational: usize,
    pub per_intervention: usize,
    pub clamp: f64,
    pub mi_repeats: usize,
    /// Prior is the full equivalence class up to this size, a sample beyond.
    pub full_mec_limit: usize,
}

impl Default for SemOptions {
    fn default() -> Self {
        SemOptions {
            observational: DEFAULT_OBSERVATIONAL_ROWS,
            per_intervention: DEFAULT_ROWS_PER_INTERVENTION,
            clamp: DEFAULT_CLAMP,
            mi_repeats: DEFAULT_MI_REPEATS,
            full_mec_limit: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub algorithms: Vec<Algorithm>,
    pub m_values: Vec<usize>,
    pub q_values: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub metric: Metric,
    pub mode: Mode,
    /// Design ensemble size; 0 uses the whole equivalence class.
    pub ensemble: usize,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Zero wall times so output is byte-stable.
    pub reproducible: bool,
    /// Round budget for sequential batches; 0 means the true edge count.
    pub rounds: usize,
    pub nmscg: NmscgParams,
    pub sem: SemOptions,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSource) -> Self {
        ExperimentConfig {
            graph,
            algorithms: Algorithm::ALL[..5].to_vec(),
            m_values: vec![1],
            q_values: vec![1],
            repeats: 1,
            seed: 0,
            metric: Metric::EdgesOrientedFraction,
            mode: Mode::Infinite,
            ensemble: DEFAULT_ENSEMBLE_SIZE,
            threads: 0,
            reproducible: false,
            rounds: 0,
            nmscg: NmscgParams::default(),
            sem: SemOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.graph.p();
        if self.repeats == 0 {
            return invalid("repeats must be at least 1");
        }
        if self.algorithms.is_empty() {
            return invalid("no algorithms selected");
        }
        if self.m_values.is_empty() || self.q_values.is_empty() {
            return invalid("m and q need at least one value each");
        }
        if let Some(m) = self.m_values.iter().find(|&&m| m == 0) {
            return invalid(format!("m = {m} is not allowed; m must be at least 1"));
        }
        if let Some(q) = self.q_values.iter().find(|&&q| q == 0 || q > p) {
            return invalid(format!("q = {q} is infeasible for {p} nodes"));
        }
        if self.algorithms.contains(&Algorithm::SsgA) {
            if let Some(q) = self.q_values.iter().find(|&&q| q > p / 2) {
                return invalid(format!("ssg_a needs q <= {} for {p} nodes, got {q}", p / 2));
            }
        }
        if self.metric.needs_data() && self.mode != Mode::Finite {
            return invalid(format!("metric {} needs mode = \"finite\"", self.metric));
        }
        self.nmscg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.sem;
        if s.observational == 0 || s.per_intervention == 0 || s.mi_repeats == 0 || s.full_mec_limit == 0 {
            return invalid("sem row counts, mi_repeats and full_mec_limit must be positive");
        }
        if !(s.clamp.is_finite()) {
            return invalid("clamp must be finite");
        }
        Ok(())
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let file: File = toml::from_str(text)?;
        file.into_config(base)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    graph: GraphTable,
    #[serde(default)]
    experiment: ExperimentTable,
    #[serde(default)]
    nmscg: NmscgTable,
    #[serde(default)]
    sem: SemTable,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphTable {
    kind: Option<String>,
    p: Option<usize>,
    density: Option<f64>,
    sizes: Option<Vec<usize>>,
    path: Option<PathBuf>,
    seed: Option<u64>,
    mec_min: Option<usize>,
    mec_max: Option<usize>,
    retries: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentTable {
    algorithms: Option<Vec<Algorithm>>,
    m: Option<OneOrMany>,
    q: Option<OneOrMany>,
    repeats: Option<usize>,
    seed: Option<u64>,
    metric: Option<Metric>,
    mode: Option<Mode>,
    ensemble: Option<usize>,
    threads: Option<usize>,
    reproducible: Option<bool>,
    rounds: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<usize> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NmscgTable {
    iterations: Option<usize>,
    samples: Option<usize>,
    rounding_repeats: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SemTable {
    observational: Option<usize>,
    per_intervention: Option<usize>,
    clamp: Option<f64>,
    mi_repeats: Option<usize>,
    full_mec_limit: Option<usize>,
}

impl GraphTable {
    fn into_source(self, base: &Path) -> Result<GraphSource, ConfigError> {
        let kind = match self.kind.as_deref() {
            Some(k) => k,
            None if self.path.is_some() => "file",
            None => "er",
        };
        if kind == "file" {
            let Some(path) = self.path else { return invalid("graph.kind = \"file\" needs graph.path") };
            let path = if path.is_absolute() { path } else { base.join(path) };
            return Ok(GraphSource::Fixed(io::load_edge_list(&path)?.dag));
        }
        let kind = match kind {
            "er" => GraphKind::Er { density: self.density.unwrap_or(0.1) },
            "tree" => GraphKind::Tree,
            "complete" => GraphKind::Complete,
            "star_forest" => {
                let Some(sizes) = self.sizes.clone() else { return invalid("graph.kind = \"star_forest\" needs graph.sizes") };
                GraphKind::StarForest { sizes }
            }
            other => return invalid(format!("unknown graph kind `{other}`")),
        };
        let p = match (&kind, self.p) {
            (GraphKind::StarForest { sizes }, _) => sizes.iter().sum(),
            (_, Some(p)) => p,
            (_, None) => return invalid("graph.p is required"),
        };
        let mut spec = GraphSpec::new(kind, p, self.seed.unwrap_or(0));
        spec.retries = self.retries.unwrap_or(DEFAULT_RETRIES);
        match (self.mec_min, self.mec_max) {
            (None, None) => {}
            (lo, hi) => spec.mec_size_range = Some((lo.unwrap_or(1), hi.unwrap_or(usize::MAX))),
        }
        spec.validate().map_err(|e| ConfigError::Invalid(format!("graph: {e}")))?;
        Ok(GraphSource::Random(spec))
    }
}

impl File {
    fn into_config(self, base: &Path) -> Result<ExperimentConfig, ConfigError> {
        let mut c = ExperimentConfig::new(self.graph.into_source(base)?);
        let e = self.experiment;
        if let Some(a) = e.algorithms {
            c.algorithms = a;
        }
        if let Some(m) = e.m {
            c.m_values = m.into_vec();
        }
        if let Some(q) = e.q {
            c.q_values = q.into_vec();
        }
        c.repeats = e.repeats.unwrap_or(c.repeats);
        c.seed = e.seed.unwrap_or(c.seed);
        c.metric = e.metric.unwrap_or(c.metric);
        c.mode = e.mode.unwrap_or(c.mode);
        c.ensemble = e.ensemble.unwrap_or(c.ensemble);
        c.threads = e.threads.unwrap_or(c.threads);
        c.reproducible = e.reproducible.unwrap_or(c.reproducible);
        c.rounds = e.rounds.unwrap_or(c.rounds);
        let n = self.nmscg;
        c.nmscg.iterations = n.iterations.unwrap_or(c.nmscg.iterations);
        c.nmscg.samples = n.samples.unwrap_or(c.nmscg.samples);
        c.nmscg.rounding_repeats = n.rounding_repeats.unwrap_or(c.nmscg.rounding_repeats);
        let s = self.sem;
        c.sem.observational = s.observational.unwrap_or(c.sem.observational);
        c.sem.per_intervention = s.per_intervention.unwrap_or(c.sem.per_intervention);
        c.sem.clamp = s.clamp.unwrap_or(c.sem.clamp);
        c.sem.mi_repeats = s.mi_repeats.unwrap_or(c.sem.mi_repeats);
        c.sem.full_mec_limit = s.full_mec_limit.unwrap_or(c.sem.full_mec_limit);
        c.validate()?;
        Ok(c)
    }
}
