//! Experiment configuration and its line-oriented `key = value` text form.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cascade::ActivationFunction;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::graph::{generate_random_graph, load_edge_list, DirectedGraph};
use crate::inference::Method;

/// Where the ground-truth network comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Random { nodes: usize, edges: usize },
    Dataset(Dataset),
    File(PathBuf),
}

impl GraphSource {
    /// Materializes the graph; random graphs are drawn with `seed`.
    pub fn load(&self, seed: u64) -> Result<DirectedGraph> {
        match self {
            GraphSource::Random { nodes, edges } => generate_random_graph(*nodes, *edges, seed),
            GraphSource::Dataset(d) => d.graph(),
            GraphSource::File(path) => load_edge_list(path),
        }
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Random { nodes, edges } => write!(f, "random:{nodes},{edges}"),
            GraphSource::Dataset(d) => write!(f, "dataset:{}", d.name()),
            GraphSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for GraphSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("random:") {
            let (n, e) = rest
                .split_once(',')
                .ok_or_else(|| Error::Validation(format!("random graph spec {s:?} is not random:N,E")))?;
            return Ok(GraphSource::Random { nodes: parse_num(n)?, edges: parse_num(e)? });
        }
        if let Some(name) = s.strip_prefix("dataset:") {
            return Ok(GraphSource::Dataset(name.parse()?));
        }
        let path = s.strip_prefix("file:").unwrap_or(s);
        if path.is_empty() {
            return Err(Error::Validation("empty graph source".into()));
        }
        Ok(GraphSource::File(PathBuf::from(path)))
    }
}

/// Which in-degree distribution the likelihood-based methods are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaSource {
    /// The ground-truth network's distribution.
    #[default]
    Truth,
    /// The distribution of the heuristic's reconstruction.
    Bootstrap,
}

impl fmt::Display for GammaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GammaSource::Truth => "truth",
            GammaSource::Bootstrap => "bootstrap",
        })
    }
}

impl FromStr for GammaSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "truth" => Ok(GammaSource::Truth),
            "bootstrap" => Ok(GammaSource::Bootstrap),
            other => Err(Error::Validation(format!("unknown gamma source {other:?}"))),
        }
    }
}

pub const DEFAULT_STEP_CAP: u32 = 10_000;
pub const DEFAULT_SURROGATE_CASCADES: usize = 2000;
pub const DEFAULT_SURROGATE_GRAPHS: usize = 4;

/// Everything needed to reproduce one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub model: ActivationFunction,
    pub cascades: usize,
    pub seed: u64,
    pub step_cap: u32,
    pub methods: Vec<Method>,
    pub gamma_from: GammaSource,
    /// Cascades simulated on the surrogate; defaults to
    /// `max(cascades, DEFAULT_SURROGATE_CASCADES)`.
    pub surrogate_cascades: Option<usize>,
    /// Independent surrogate networks the surrogate cascades are split over.
    pub surrogate_graphs: usize,
    /// Cascades the heuristic looks at; defaults to all of them.
    pub heuristic_cascades: Option<usize>,
    /// Last time bucket of the surrogate table; defaults to the longest
    /// observed cascade.
    pub t_limit: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSource, model: ActivationFunction, cascades: usize, seed: u64) -> Self {
        ExperimentConfig {
            graph,
            model,
            cascades,
            seed,
            step_cap: DEFAULT_STEP_CAP,
            methods: Method::ALL.to_vec(),
            gamma_from: GammaSource::Truth,
            surrogate_cascades: None,
            surrogate_graphs: DEFAULT_SURROGATE_GRAPHS,
            heuristic_cascades: None,
            t_limit: None,
        }
    }

    pub fn with_methods(mut self, methods: &[Method]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cascades == 0 {
            return Err(Error::Validation("cascades must be positive".into()));
        }
        if self.step_cap == 0 {
            return Err(Error::Validation("step_cap must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Validation("no methods selected".into()));
        }
        if self.surrogate_graphs == 0 {
            return Err(Error::Validation("surrogate_graphs must be positive".into()));
        }
        if self.surrogate_cascades == Some(0) || self.heuristic_cascades == Some(0) || self.t_limit == Some(0) {
            return Err(Error::Validation("surrogate_cascades, heuristic_cascades and t_limit must be positive".into()));
        }
        Ok(())
    }

    pub fn surrogate_cascades(&self) -> usize {
        self.surrogate_cascades
            .unwrap_or_else(|| self.cascades.max(DEFAULT_SURROGATE_CASCADES))
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "graph" => self.graph = value.parse()?,
            "model" => self.model = value.parse()?,
            "cascades" => self.cascades = parse_num(value)?,
            "seed" => self.seed = parse_num(value)?,
            "step_cap" => self.step_cap = parse_num(value)?,
            "methods" => self.methods = value.split(',').map(str::parse).collect::<Result<_>>()?,
            "gamma_from" => self.gamma_from = value.parse()?,
            "surrogate_cascades" => self.surrogate_cascades = parse_optional(value)?,
            "surrogate_graphs" => self.surrogate_graphs = parse_num(value)?,
            "heuristic_cascades" => self.heuristic_cascades = parse_optional(value)?,
            "t_limit" => self.t_limit = parse_optional(value)?,
            other => return Err(Error::Validation(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a config file. `graph`, `model` and `cascades` are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut partial = PartialConfig::default();
        for (lineno, key, value) in key_values(text)? {
            partial.set(key, value).map_err(|e| at_line(lineno, e))?;
        }
        partial.finish()
    }

    /// The config in the same `key = value` form [`ExperimentConfig::parse`]
    /// reads; used as the parameter echo in reports.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<usize>| v.map_or("auto".to_string(), |v| v.to_string());
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        writeln!(out, "graph = {}", self.graph).unwrap();
        writeln!(out, "model = {}", self.model).unwrap();
        writeln!(out, "cascades = {}", self.cascades).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "step_cap = {}", self.step_cap).unwrap();
        writeln!(out, "methods = {}", methods.join(",")).unwrap();
        writeln!(out, "gamma_from = {}", self.gamma_from).unwrap();
        writeln!(out, "surrogate_cascades = {}", opt(self.surrogate_cascades)).unwrap();
        writeln!(out, "surrogate_graphs = {}", self.surrogate_graphs).unwrap();
        writeln!(out, "heuristic_cascades = {}", opt(self.heuristic_cascades)).unwrap();
        writeln!(out, "t_limit = {}", opt(self.t_limit)).unwrap();
        out
    }
}

/// Builder used while reading a config file, before the required keys are known.
#[derive(Debug, Default)]
pub(crate) struct PartialConfig {
    graph: Option<GraphSource>,
    model: Option<ActivationFunction>,
    cascades: Option<usize>,
    rest: Vec<(String, String)>,
}

impl PartialConfig {
    pub(crate) fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "graph" => self.graph = Some(value.parse()?),
            "model" => self.model = Some(value.parse()?),
            "cascades" => self.cascades = Some(parse_num(value)?),
            _ => {
                // Validate eagerly against a throwaway config.
                let mut probe = ExperimentConfig::new(
                    GraphSource::Random { nodes: 2, edges: 0 },
                    ActivationFunction::Threshold { gamma: 0.0, epsilon: 0.0, f_c: 0.0 },
                    1,
                    0,
                );
                probe.set(key, value)?;
                self.rest.push((key.to_string(), value.to_string()));
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<ExperimentConfig> {
        let missing = |k: &str| Error::Validation(format!("config is missing required key `{k}`"));
        let mut cfg = ExperimentConfig::new(
            self.graph.ok_or_else(|| missing("graph"))?,
            self.model.ok_or_else(|| missing("model"))?,
            self.cascades.ok_or_else(|| missing("cascades"))?,
            0,
        );
        for (k, v) in &self.rest {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub(crate) fn key_values(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: "expected `key = value`".into(),
        })?;
        out.push((idx + 1, k.trim(), v.trim()));
    }
    Ok(out)
}

pub(crate) fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::Parse { line, msg: other.to_string() },
    }
}

pub(crate) fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Validation(format!("{s:?} is not a valid number")))
}

fn parse_optional(s: &str) -> Result<Option<usize>> {
    if s == "auto" {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

/// Independent seed number `stream` derived from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}
