//! Edge reconstruction from activation times: mean-field Bayesian
//! likelihoods, surrogate-measured likelihoods, and consecutive-activation
//! counting, plus top-`E` edge selection.

mod heuristic;
mod posterior;
mod select;
mod semiempirical;
mod theoretical;

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

pub use heuristic::{bootstrap_degree_distribution, score_heuristic, score_heuristic_with, HeuristicScores};
pub use posterior::{bayes_step, clamp_probability, prior_omega, EdgePosterior, PROBABILITY_FLOOR};
pub use select::select_edges;
pub use semiempirical::{
    infer_semiempirical, infer_semiempirical_with, measure_likelihood_table, measure_likelihood_table_with,
    LikelihoodTable,
};
pub use theoretical::{
    infer_theoretical, infer_theoretical_with, noedge_pair_likelihood, theoretical_pair_likelihood, ProviderDynamics,
    TheoreticalModel,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Theoretical,
    Semiempirical,
    Heuristic,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Theoretical, Method::Semiempirical, Method::Heuristic];

    pub fn name(self) -> &'static str {
        match self {
            Method::Theoretical => "theoretical",
            Method::Semiempirical => "semiempirical",
            Method::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown method {s:?}")))
    }
}

/// A ranked score matrix as written by `infer`: posterior log-odds for the
/// Bayesian methods, consecutive-activation counts for the heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDump {
    pub method: Method,
    pub omega: f64,
    pub n_nodes: usize,
    /// Row-major, NaN on the diagonal.
    pub values: Vec<f64>,
}

impl ScoreDump {
    pub fn from_posterior(method: Method, posterior: &EdgePosterior) -> Self {
        let n = posterior.n_nodes();
        let values = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if i == j {
                    f64::NAN
                } else {
                    posterior.log_odds(i, j)
                }
            })
            .collect();
        ScoreDump { method, omega: posterior.omega(), n_nodes: n, values }
    }

    pub fn from_heuristic(scores: &HeuristicScores, omega: f64) -> Self {
        ScoreDump { method: Method::Heuristic, omega, n_nodes: scores.n_nodes(), values: scores.scores() }
    }

    pub fn select(&self, n_edges: usize) -> Vec<(usize, usize)> {
        select_edges(self.n_nodes, &self.values, n_edges)
    }

    /// `# method=<name> omega=<value>` then one tab-separated row per source
    /// node, `-` on the diagonal.
    pub fn format(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# method={} omega={}", self.method, self.omega).unwrap();
        for row in self.values.chunks(self.n_nodes.max(1)) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push('\t');
                }
                if v.is_nan() {
                    out.push('-');
                } else {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty score dump".into() })?;
        let mut method = None;
        let mut omega = None;
        for kv in header.trim_start_matches('#').split_whitespace() {
            match kv.split_once('=') {
                Some(("method", v)) => method = Some(v.parse()?),
                Some(("omega", v)) => {
                    omega = Some(v.parse().map_err(|_| Error::Parse { line: 1, msg: format!("bad omega {v:?}") })?)
                }
                _ => {}
            }
        }
        let (Some(method), Some(omega)) = (method, omega) else {
            return Err(Error::Parse { line: 1, msg: "header must be `# method=<name> omega=<value>`".into() });
        };
        let mut values = Vec::new();
        let mut rows = 0;
        let mut width = None;
        for (idx, line) in lines {
            let before = values.len();
            for field in line.split('\t') {
                values.push(if field == "-" {
                    f64::NAN
                } else {
                    field.trim().parse().map_err(|_| Error::Parse {
                        line: idx + 1,
                        msg: format!("bad score {field:?}"),
                    })?
                });
            }
            let w = values.len() - before;
            if *width.get_or_insert(w) != w {
                return Err(Error::Parse { line: idx + 1, msg: "ragged score matrix".into() });
            }
            rows += 1;
        }
        if width.unwrap_or(0) != rows {
            return Err(Error::Validation(format!("score matrix is {rows} x {}, not square", width.unwrap_or(0))));
        }
        Ok(ScoreDump { method, omega, n_nodes: rows, values })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.format()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
