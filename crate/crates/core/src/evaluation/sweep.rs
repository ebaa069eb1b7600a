//! One-parameter sweeps over [`run_trial`], with replicates.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::config::{at_line, derive_seed, key_values, parse_num, PartialConfig};
use super::{run_trial, ExperimentConfig, GraphSource};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::inference::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    Gamma,
    Epsilon,
    FC,
    NExperiments,
    NNodes,
    NEdges,
    /// Edges as a fraction of the `N (N - 1)` ordered pairs.
    Density,
}

impl SweptParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweptParameter::Gamma => "gamma",
            SweptParameter::Epsilon => "epsilon",
            SweptParameter::FC => "f_c",
            SweptParameter::NExperiments => "n_experiments",
            SweptParameter::NNodes => "n_nodes",
            SweptParameter::NEdges => "n_edges",
            SweptParameter::Density => "density",
        }
    }
}

impl FromStr for SweptParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use SweptParameter::*;
        [Gamma, Epsilon, FC, NExperiments, NNodes, NEdges, Density]
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown sweep parameter {s:?}")))
    }
}

impl fmt::Display for SweptParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How many cascades each sweep point gets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CascadePolicy {
    /// The base config's `cascades` (or the swept value for `n_experiments`).
    #[default]
    Fixed,
    /// As many cascades as edges.
    EqualEdges,
    /// `fraction * N (N - 1)` cascades.
    PairFraction(f64),
}

impl FromStr for CascadePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed" => Ok(CascadePolicy::Fixed),
            "edges" => Ok(CascadePolicy::EqualEdges),
            other => match other.strip_prefix("pairs:") {
                Some(x) => Ok(CascadePolicy::PairFraction(parse_num(x)?)),
                None => Err(Error::Validation(format!("unknown cascade policy {other:?}"))),
            },
        }
    }
}

impl fmt::Display for CascadePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CascadePolicy::Fixed => write!(f, "fixed"),
            CascadePolicy::EqualEdges => write!(f, "edges"),
            CascadePolicy::PairFraction(x) => write!(f, "pairs:{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub swept_parameter: SweptParameter,
    pub values: Vec<f64>,
    /// Base configuration; its `methods` are the methods evaluated.
    pub fixed: ExperimentConfig,
    pub replicates: usize,
    pub cascade_policy: CascadePolicy,
    /// Write measured wall time into the CSV; off gives byte-identical reruns.
    pub timing: bool,
}

pub const DEFAULT_REPLICATES: usize = 3;

impl SweepSpec {
    pub fn new(swept_parameter: SweptParameter, values: Vec<f64>, fixed: ExperimentConfig) -> Self {
        SweepSpec {
            swept_parameter,
            values,
            fixed,
            replicates: DEFAULT_REPLICATES,
            cascade_policy: CascadePolicy::Fixed,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Validation("sweep has no values".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Validation("replicates must be at least 1".into()));
        }
        self.fixed.validate()
    }

    /// A base config plus `sweep`, `values`, `replicates`, `cascade_policy`
    /// and `timing` keys.
    pub fn parse(text: &str) -> Result<Self> {
        let mut base = PartialConfig::default();
        let mut param = None;
        let mut values = None;
        let mut replicates = DEFAULT_REPLICATES;
        let mut policy = CascadePolicy::Fixed;
        let mut timing = true;
        for (lineno, key, value) in key_values(text)? {
            let r: Result<()> = (|| {
                match key {
                    "sweep" => param = Some(value.parse()?),
                    "values" => values = Some(value.split(',').map(parse_num).collect::<Result<Vec<f64>>>()?),
                    "replicates" => replicates = parse_num(value)?,
                    "cascade_policy" => policy = value.parse()?,
                    "timing" => {
                        timing = value
                            .parse()
                            .map_err(|_| Error::Validation(format!("timing must be true or false, got {value:?}")))?
                    }
                    _ => base.set(key, value)?,
                }
                Ok(())
            })();
            r.map_err(|e| at_line(lineno, e))?;
        }
        let spec = SweepSpec {
            swept_parameter: param.ok_or_else(|| Error::Validation("sweep config needs `sweep = <parameter>`".into()))?,
            values: values.ok_or_else(|| Error::Validation("sweep config needs `values = a,b,...`".into()))?,
            fixed: base.finish()?,
            replicates,
            cascade_policy: policy,
            timing,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Config for sweep point `value`, replicate `replicate`. Replicate 0
    /// keeps the base seed, so a one-replicate sweep equals `run_trial`.
    pub fn point_config(&self, value: f64, replicate: usize) -> Result<ExperimentConfig> {
        let mut cfg = self.fixed.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Validation(format!("{} needs whole numbers, got {v}", self.swept_parameter)))
            }
        };
        let random_graph = |cfg: &ExperimentConfig| -> Result<(usize, usize)> {
            match cfg.graph {
                GraphSource::Random { nodes, edges } => Ok((nodes, edges)),
                _ => Err(Error::Validation(format!(
                    "sweeping {} needs a random graph source",
                    self.swept_parameter
                ))),
            }
        };
        match self.swept_parameter {
            SweptParameter::Gamma | SweptParameter::Epsilon | SweptParameter::FC => {
                cfg.model = cfg.model.with_threshold_param(self.swept_parameter.name(), value)?;
            }
            SweptParameter::NExperiments => cfg.cascades = as_count(value)?,
            SweptParameter::NNodes => {
                let (_, edges) = random_graph(&cfg)?;
                cfg.graph = GraphSource::Random { nodes: as_count(value)?, edges };
            }
            SweptParameter::NEdges => {
                let (nodes, _) = random_graph(&cfg)?;
                cfg.graph = GraphSource::Random { nodes, edges: as_count(value)? };
            }
            SweptParameter::Density => {
                let (nodes, _) = random_graph(&cfg)?;
                let edges = (value * (nodes * nodes.saturating_sub(1)) as f64).round() as usize;
                cfg.graph = GraphSource::Random { nodes, edges };
            }
        }
        if self.swept_parameter != SweptParameter::NExperiments {
            let (nodes, edges) = match (&cfg.graph, self.cascade_policy) {
                (_, CascadePolicy::Fixed) => (0, 0),
                (GraphSource::Random { nodes, edges }, _) => (*nodes, *edges),
                (other, _) => {
                    let g = other.load(cfg.seed)?;
                    (g.n_nodes(), g.n_edges())
                }
            };
            match self.cascade_policy {
                CascadePolicy::Fixed => {}
                CascadePolicy::EqualEdges => cfg.cascades = edges.max(1),
                CascadePolicy::PairFraction(x) => {
                    cfg.cascades = ((x * (nodes * nodes.saturating_sub(1)) as f64).round() as usize).max(1)
                }
            }
        }
        if replicate > 0 {
            cfg.seed = derive_seed(self.fixed.seed, replicate as u64);
        }
        Ok(cfg)
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweptParameter,
    pub value: f64,
    pub method: Method,
    pub replicate: usize,
    pub accuracy: f64,
    pub seconds: f64,
}

/// Runs every `(value, replicate)` trial. Rows come back sorted by value,
/// then replicate, then method, whatever order the trials ran in.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(f64, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.replicates).map(move |r| (v, r)))
        .collect();
    let results = Exec::default().map(jobs.len(), |idx| {
        let (value, replicate) = jobs[idx];
        let reports = run_trial(&spec.point_config(value, replicate)?)?;
        Ok(reports
            .into_iter()
            .map(|r| SweepRow {
                param: spec.swept_parameter,
                value,
                method: r.method,
                replicate,
                accuracy: r.accuracy,
                seconds: if spec.timing { r.wall_time } else { 0.0 },
            })
            .collect::<Vec<_>>())
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.replicate.cmp(&b.replicate))
            .then(a.method.cmp(&b.method))
    });
    Ok(rows)
}

/// `param,value,method,replicate,accuracy,seconds`
pub fn format_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,method,replicate,accuracy,seconds\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.param, r.value, r.method, r.replicate, r.accuracy, r.seconds).unwrap();
    }
    out
}

/// Mean accuracy and its standard error over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub value: f64,
    pub method: Method,
    pub mean: f64,
    pub stderr: f64,
    pub replicates: usize,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut keys: Vec<(f64, Method)> = rows.iter().map(|r| (r.value, r.method)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(value, method)| {
            let accs: Vec<f64> = rows
                .iter()
                .filter(|r| r.value == value && r.method == method)
                .map(|r| r.accuracy)
                .collect();
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let stderr = if accs.len() > 1 {
                (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            };
            SweepSummary { value, method, mean, stderr, replicates: accs.len() }
        })
        .collect()
}

/// One row per swept value with a mean and standard-error column pair per
/// method, e.g. `value,theoretical,theoretical_se,heuristic,heuristic_se`.
pub fn format_summary_csv(param: SweptParameter, summaries: &[SweepSummary]) -> String {
    let mut methods: Vec<Method> = summaries.iter().map(|s| s.method).collect();
    methods.sort();
    methods.dedup();
    let mut values: Vec<f64> = summaries.iter().map(|s| s.value).collect();
    values.dedup();
    let mut out = param.to_string();
    for m in &methods {
        write!(out, ",{m},{m}_se").unwrap();
    }
    out.push('\n');
    for v in values {
        write!(out, "{v}").unwrap();
        for m in &methods {
            match summaries.iter().find(|s| s.value == v && s.method == *m) {
                Some(s) => write!(out, ",{},{}", s.mean, s.stderr).unwrap(),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}
