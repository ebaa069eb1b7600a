//! Ground-truth comparison and the trial/sweep harness.

mod config;
mod sweep;

use std::collections::HashSet;
use std::time::Instant;

pub use config::{
    derive_seed, ExperimentConfig, GammaSource, GraphSource, DEFAULT_STEP_CAP, DEFAULT_SURROGATE_CASCADES,
    DEFAULT_SURROGATE_GRAPHS,
};
pub use sweep::{format_summary_csv, format_sweep_csv, run_sweep, summarize, CascadePolicy, SweepRow, SweepSpec, SweepSummary, SweptParameter};

use crate::cascade::{run_experiments, ActivationFunction, CascadeTraceSet};
use crate::error::{Error, Result};
use crate::graph::{build_surrogate, in_degree_distribution, DegreeDistribution, DirectedGraph};
use crate::inference::{
    bootstrap_degree_distribution, infer_semiempirical, infer_theoretical, measure_likelihood_table, prior_omega,
    score_heuristic, LikelihoodTable, Method, ScoreDump,
};

/// Fraction of true edges that appear among the predicted ones.
pub fn accuracy(predicted: &[(usize, usize)], truth: &[(usize, usize)]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Validation("accuracy needs at least one true edge".into()));
    }
    let truth: HashSet<&(usize, usize)> = truth.iter().collect();
    let predicted: HashSet<&(usize, usize)> = predicted.iter().collect();
    Ok(predicted.intersection(&truth).count() as f64 / truth.len() as f64)
}

/// Result of one method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub method: Method,
    pub predicted_edges: Vec<(usize, usize)>,
    pub accuracy: f64,
    /// `key = value` echo of the configuration that produced this report.
    pub params: String,
    pub wall_time: f64,
}

/// Seed streams derived from the trial seed, one per random ingredient.
mod streams {
    pub const CASCADES: u64 = 1;
    pub const SURROGATE_GRAPH: u64 = 2;
    pub const SURROGATE_CASCADES: u64 = 3;
}

/// Inputs shared by the methods once the traces exist.
pub struct InferenceContext<'a> {
    pub traces: &'a CascadeTraceSet,
    pub model: &'a ActivationFunction,
    pub n_edges: usize,
    /// Distribution handed to the likelihood-based methods.
    pub gamma: Option<&'a DegreeDistribution>,
    pub seed: u64,
    pub step_cap: u32,
    pub surrogate_cascades: usize,
    pub surrogate_graphs: usize,
    pub heuristic_cascades: Option<usize>,
    pub t_limit: Option<usize>,
}

impl InferenceContext<'_> {
    fn gamma(&self) -> Result<&DegreeDistribution> {
        self.gamma
            .ok_or_else(|| Error::Validation("this method needs an in-degree distribution".into()))
    }

    pub fn omega(&self) -> Result<f64> {
        prior_omega(self.traces.n_nodes(), self.n_edges)
    }

    /// Simulates cascades on `surrogate_graphs` surrogates built from the
    /// context's distribution and pools their time-pair counts.
    pub fn likelihood_table(&self) -> Result<LikelihoodTable> {
        if self.surrogate_graphs == 0 {
            return Err(Error::Validation("surrogate_graphs must be positive".into()));
        }
        let gamma = self.gamma()?;
        let t_limit = self.t_limit.unwrap_or(self.traces.t_max() as usize).max(1);
        let graph_seed = derive_seed(self.seed, streams::SURROGATE_GRAPH);
        let cascade_seed = derive_seed(self.seed, streams::SURROGATE_CASCADES);
        let (per, extra) = (self.surrogate_cascades / self.surrogate_graphs, self.surrogate_cascades % self.surrogate_graphs);
        let tables = (0..self.surrogate_graphs)
            .map(|k| {
                let surrogate = build_surrogate(gamma, self.traces.n_nodes(), derive_seed(graph_seed, k as u64))?;
                let n = per + usize::from(k < extra);
                measure_likelihood_table(
                    &surrogate,
                    self.model,
                    n.max(1),
                    derive_seed(cascade_seed, k as u64),
                    self.step_cap,
                    t_limit,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        LikelihoodTable::pooled(&tables)
    }

    /// Scores every ordered pair with `method`.
    pub fn scores(&self, method: Method) -> Result<ScoreDump> {
        let omega = self.omega()?;
        Ok(match method {
            Method::Theoretical => {
                let post = infer_theoretical(self.traces, self.gamma()?, self.model, omega)?;
                ScoreDump::from_posterior(method, &post)
            }
            Method::Semiempirical => {
                let post = infer_semiempirical(self.traces, &self.likelihood_table()?, omega)?;
                ScoreDump::from_posterior(method, &post)
            }
            Method::Heuristic => {
                let used = self.traces.truncated(self.heuristic_cascades.unwrap_or(usize::MAX));
                ScoreDump::from_heuristic(&score_heuristic(&used), omega)
            }
        })
    }
}

/// Degree distribution the likelihood methods receive for a trial.
pub fn trial_gamma(
    source: GammaSource,
    truth: &DirectedGraph,
    traces: &CascadeTraceSet,
    heuristic_cascades: Option<usize>,
) -> DegreeDistribution {
    match source {
        GammaSource::Truth => in_degree_distribution(truth),
        GammaSource::Bootstrap => bootstrap_degree_distribution(
            &traces.truncated(heuristic_cascades.unwrap_or(usize::MAX)),
            truth.n_edges(),
        ),
    }
}

/// Builds or loads the network, simulates the cascades, runs every
/// configured method and scores it against the truth. Deterministic for a
/// given config except for `wall_time`.
pub fn run_trial(config: &ExperimentConfig) -> Result<Vec<InferenceReport>> {
    config.validate()?;
    let graph = config.graph.load(config.seed)?;
    let truth = graph.edges();
    let traces = run_experiments(
        &graph,
        &config.model,
        config.cascades,
        derive_seed(config.seed, streams::CASCADES),
        config.step_cap,
    );
    let needs_gamma = config.methods.iter().any(|m| *m != Method::Heuristic);
    let gamma = needs_gamma.then(|| trial_gamma(config.gamma_from, &graph, &traces, config.heuristic_cascades));
    let ctx = InferenceContext {
        traces: &traces,
        model: &config.model,
        n_edges: graph.n_edges(),
        gamma: gamma.as_ref(),
        seed: config.seed,
        step_cap: config.step_cap,
        surrogate_cascades: config.surrogate_cascades(),
        surrogate_graphs: config.surrogate_graphs,
        heuristic_cascades: config.heuristic_cascades,
        t_limit: config.t_limit,
    };
    let params = config.to_text();
    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let predicted = ctx.scores(method)?.select(graph.n_edges());
            Ok(InferenceReport {
                method,
                accuracy: accuracy(&predicted, &truth)?,
                predicted_edges: predicted,
                params: params.clone(),
                wall_time: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_graph;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accuracy_cases() {
        let truth: Vec<(usize, usize)> = (0..100).map(|i| (i, i + 1)).collect();
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        let mut predicted = truth[..90].to_vec();
        predicted.extend((0..10).map(|i| (i + 1, i)));
        assert!((accuracy(&predicted, &truth).unwrap() - 0.9).abs() < 1e-15);
        let disjoint: Vec<(usize, usize)> = (0..100).map(|i| (i + 1, i)).collect();
        assert_eq!(accuracy(&disjoint, &truth).unwrap(), 0.0);
        assert!(accuracy(&truth, &[]).is_err());
    }

    #[test]
    fn accuracy_ignores_node_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = generate_random_graph(40, 120, 1).unwrap().edges();
        let predicted = generate_random_graph(40, 120, 2).unwrap().edges();
        let before = accuracy(&predicted, &truth).unwrap();
        let mut perm: Vec<usize> = (0..40).collect();
        perm.shuffle(&mut rng);
        let relabel = |v: &[(usize, usize)]| v.iter().map(|&(a, b)| (perm[a], perm[b])).collect::<Vec<_>>();
        assert_eq!(accuracy(&relabel(&predicted), &relabel(&truth)).unwrap(), before);
    }

    #[test]
    fn random_selection_scores_edge_density() {
        // Picking E of the N(N-1) slots at random hits E^2/(N(N-1)) true edges
        // on average, i.e. accuracy E/(N(N-1)) = 200/2450.
        let (n, e) = (50, 200);
        let truth = generate_random_graph(n, e, 0).unwrap().edges();
        let reps = 100;
        let accs: Vec<f64> = (0..reps)
            .map(|r| accuracy(&generate_random_graph(n, e, 1000 + r).unwrap().edges(), &truth).unwrap())
            .collect();
        let mean = accs.iter().sum::<f64>() / reps as f64;
        let expected = e as f64 / (n * (n - 1)) as f64;
        // Hypergeometric variance of the hit count.
        let slots = (n * (n - 1)) as f64;
        let var_hits = e as f64 * (e as f64 / slots) * (1.0 - e as f64 / slots) * (slots - e as f64) / (slots - 1.0);
        let sigma = var_hits.sqrt() / e as f64 / (reps as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * sigma, "mean {mean} expected {expected} sigma {sigma}");
    }

    #[test]
    fn trial_is_reproducible() {
        let cfg = ExperimentConfig::new(
            GraphSource::Random { nodes: 30, edges: 90 },
            ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap(),
            60,
            5,
        );
        let a = run_trial(&cfg).unwrap();
        let b = run_trial(&cfg).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.predicted_edges, y.predicted_edges);
            assert_eq!(x.accuracy, y.accuracy);
            assert_eq!(x.predicted_edges.len(), 90);
            assert!((0.0..=1.0).contains(&x.accuracy));
        }
    }

    #[test]
    fn single_cascade_trial_runs() {
        let cfg = ExperimentConfig::new(
            GraphSource::Random { nodes: 30, edges: 90 },
            ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap(),
            1,
            5,
        );
        let reports = run_trial(&cfg).unwrap();
        assert!(reports.iter().all(|r| r.predicted_edges.len() == 90));
    }
}
