//! Pair likelihoods measured by simulation on a surrogate network.

use crate::cascade::{run_experiments_with, ActivationFunction, ActivationTime, CascadeTraceSet};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::DirectedGraph;

use super::posterior::{fold_evidence, EdgePosterior, EvidenceGrid};
use super::theoretical::check_omega;

/// Empirical `P(t_i, t_j | i -> j)` and `P(t_i, t_j | no edge)` on a grid of
/// times `1..=t_limit` plus one overflow bucket (late or censored).
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable {
    t_limit: usize,
    edge_counts: Vec<u64>,
    noedge_counts: Vec<u64>,
    p_edge: Vec<f64>,
    p_noedge: Vec<f64>,
}

impl LikelihoodTable {
    /// Builds a table from raw counts over the `(t_limit + 1)^2` grid,
    /// applying add-one smoothing and normalizing each population.
    pub fn from_counts(t_limit: usize, edge_counts: Vec<u64>, noedge_counts: Vec<u64>) -> Result<Self> {
        let cells = (t_limit + 1) * (t_limit + 1);
        if t_limit == 0 || edge_counts.len() != cells || noedge_counts.len() != cells {
            return Err(Error::Validation(format!(
                "likelihood table needs t_limit >= 1 and {cells} cells per population"
            )));
        }
        let smooth = |counts: &[u64]| {
            let total = counts.iter().sum::<u64>() as f64 + cells as f64;
            counts.iter().map(|&c| (c as f64 + 1.0) / total).collect::<Vec<_>>()
        };
        Ok(LikelihoodTable {
            t_limit,
            p_edge: smooth(&edge_counts),
            p_noedge: smooth(&noedge_counts),
            edge_counts,
            noedge_counts,
        })
    }

    /// Pools the raw counts of tables measured on different surrogates.
    pub fn pooled(tables: &[LikelihoodTable]) -> Result<Self> {
        let first = tables.first().ok_or_else(|| Error::Validation("no likelihood tables to pool".into()))?;
        if tables.iter().any(|t| t.t_limit != first.t_limit) {
            return Err(Error::Validation("pooled likelihood tables must share t_limit".into()));
        }
        let sum = |pick: fn(&LikelihoodTable) -> &Vec<u64>| {
            let mut out = vec![0u64; pick(first).len()];
            for t in tables {
                out.iter_mut().zip(pick(t)).for_each(|(a, b)| *a += b);
            }
            out
        };
        Self::from_counts(first.t_limit, sum(|t| &t.edge_counts), sum(|t| &t.noedge_counts))
    }

    pub fn t_limit(&self) -> usize {
        self.t_limit
    }

    fn width(&self) -> usize {
        self.t_limit + 1
    }

    /// Grid index of a time: `t - 1` for `t <= t_limit`, else the overflow bucket.
    pub fn bucket(&self, t: ActivationTime) -> usize {
        bucket_of(self.t_limit, t)
    }

    fn cell(&self, t_i: ActivationTime, t_j: ActivationTime) -> usize {
        self.bucket(t_i) * self.width() + self.bucket(t_j)
    }

    pub fn p_edge(&self, t_i: ActivationTime, t_j: ActivationTime) -> f64 {
        self.p_edge[self.cell(t_i, t_j)]
    }

    pub fn p_noedge(&self, t_i: ActivationTime, t_j: ActivationTime) -> f64 {
        self.p_noedge[self.cell(t_i, t_j)]
    }

    pub fn edge_count(&self, t_i: ActivationTime, t_j: ActivationTime) -> u64 {
        self.edge_counts[self.cell(t_i, t_j)]
    }

    pub fn noedge_count(&self, t_i: ActivationTime, t_j: ActivationTime) -> u64 {
        self.noedge_counts[self.cell(t_i, t_j)]
    }

    pub fn total_edge_observations(&self) -> u64 {
        self.edge_counts.iter().sum()
    }

    pub fn total_noedge_observations(&self) -> u64 {
        self.noedge_counts.iter().sum()
    }

    /// The smoothed, normalized edge population in grid order.
    pub fn p_edge_values(&self) -> &[f64] {
        &self.p_edge
    }

    pub fn p_noedge_values(&self) -> &[f64] {
        &self.p_noedge
    }

    fn evidence_grid(&self) -> EvidenceGrid {
        let llr = self.p_edge.iter().zip(&self.p_noedge).map(|(e, n)| e.ln() - n.ln()).collect();
        EvidenceGrid { width: self.width(), llr }
    }
}

fn bucket_of(t_limit: usize, t: ActivationTime) -> usize {
    match t {
        Some(t) if (t.get() as usize) <= t_limit => t.get() as usize - 1,
        _ => t_limit,
    }
}

/// Counts `(t_i, t_j)` over every ordered pair of one cascade on `graph`.
/// Unconnected pairs are all pairs minus the diagonal minus the edges, which
/// is computed from the per-bucket histogram without visiting every pair.
fn accumulate(graph: &DirectedGraph, t_limit: usize, row: &[ActivationTime], edge: &mut [u64], noedge: &mut [u64]) {
    let width = t_limit + 1;
    let buckets: Vec<usize> = row.iter().map(|&t| bucket_of(t_limit, t)).collect();
    let mut hist = vec![0u64; width];
    for &b in &buckets {
        hist[b] += 1;
    }
    let mut this_edge = vec![0u64; width * width];
    for (j, &bj) in buckets.iter().enumerate() {
        for &i in graph.providers(j) {
            this_edge[buckets[i as usize] * width + bj] += 1;
        }
    }
    for a in 0..width {
        for b in 0..width {
            let cell = a * width + b;
            let pairs = hist[a] * hist[b] - if a == b { hist[a] } else { 0 };
            edge[cell] += this_edge[cell];
            noedge[cell] += pairs - this_edge[cell];
        }
    }
}

/// Simulates `n_cascades` cascades on `surrogate` and tabulates activation
/// time pairs over its edges and over all of its unconnected ordered pairs.
pub fn measure_likelihood_table(
    surrogate: &DirectedGraph,
    f: &ActivationFunction,
    n_cascades: usize,
    seed: u64,
    step_cap: u32,
    t_limit: usize,
) -> Result<LikelihoodTable> {
    measure_likelihood_table_with(Exec::default(), surrogate, f, n_cascades, seed, step_cap, t_limit)
}

pub fn measure_likelihood_table_with(
    exec: Exec,
    surrogate: &DirectedGraph,
    f: &ActivationFunction,
    n_cascades: usize,
    seed: u64,
    step_cap: u32,
    t_limit: usize,
) -> Result<LikelihoodTable> {
    if surrogate.n_edges() == 0 {
        return Err(Error::Validation("surrogate network has no edges to measure".into()));
    }
    if t_limit == 0 {
        return Err(Error::Validation("t_limit must be at least 1".into()));
    }
    let traces = run_experiments_with(exec, surrogate, f, n_cascades, seed, step_cap);
    let cells = (t_limit + 1) * (t_limit + 1);
    // Fixed-size chunks so partial sums (exact integers) do not depend on
    // the thread count.
    const CHUNK: usize = 64;
    let n_chunks = n_cascades.div_ceil(CHUNK);
    let partials = exec.map(n_chunks, |chunk| {
        let mut edge = vec![0u64; cells];
        let mut noedge = vec![0u64; cells];
        for c in chunk * CHUNK..((chunk + 1) * CHUNK).min(n_cascades) {
            accumulate(surrogate, t_limit, traces.cascade(c), &mut edge, &mut noedge);
        }
        (edge, noedge)
    });
    let mut edge = vec![0u64; cells];
    let mut noedge = vec![0u64; cells];
    for (e, n) in partials {
        edge.iter_mut().zip(e).for_each(|(a, b)| *a += b);
        noedge.iter_mut().zip(n).for_each(|(a, b)| *a += b);
    }
    LikelihoodTable::from_counts(t_limit, edge, noedge)
}

/// Posterior for every ordered pair using the measured table as likelihoods.
pub fn infer_semiempirical(traces: &CascadeTraceSet, table: &LikelihoodTable, omega: f64) -> Result<EdgePosterior> {
    infer_semiempirical_with(Exec::default(), traces, table, omega)
}

pub fn infer_semiempirical_with(
    exec: Exec,
    traces: &CascadeTraceSet,
    table: &LikelihoodTable,
    omega: f64,
) -> Result<EdgePosterior> {
    check_omega(omega)?;
    let grid = table.evidence_grid();
    let evidence = fold_evidence(exec, traces, &grid, |t| table.bucket(t));
    Ok(EdgePosterior::from_evidence(traces.n_nodes(), omega, evidence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_graph;
    use crate::inference::posterior::bayes_step;
    use std::num::NonZeroU32;

    fn t(v: u32) -> ActivationTime {
        NonZeroU32::new(v)
    }

    #[test]
    fn certain_activation_puts_all_mass_on_first_cell() {
        let g = generate_random_graph(10, 30, 2).unwrap();
        let one = ActivationFunction::constant(1.0).unwrap();
        let table = measure_likelihood_table(&g, &one, 7, 1, 100, 4).unwrap();
        assert_eq!(table.edge_count(t(1), t(1)), 30 * 7);
        assert_eq!(table.total_edge_observations(), 30 * 7);
        assert_eq!(table.noedge_count(t(1), t(1)), 60 * 7);
        assert_eq!(table.total_noedge_observations(), 60 * 7);
    }

    #[test]
    fn pooling_adds_counts() {
        let a = LikelihoodTable::from_counts(1, vec![3, 0, 1, 0], vec![5, 2, 2, 9]).unwrap();
        let b = LikelihoodTable::from_counts(1, vec![1, 1, 0, 0], vec![0, 1, 1, 0]).unwrap();
        let pooled = LikelihoodTable::pooled(&[a.clone(), b]).unwrap();
        assert_eq!(pooled, LikelihoodTable::from_counts(1, vec![4, 1, 1, 0], vec![5, 3, 3, 9]).unwrap());
        assert_eq!(LikelihoodTable::pooled(std::slice::from_ref(&a)).unwrap(), a);
        let c = LikelihoodTable::from_counts(2, vec![0; 9], vec![0; 9]).unwrap();
        assert!(LikelihoodTable::pooled(&[a, c]).is_err());
        assert!(LikelihoodTable::pooled(&[]).is_err());
    }

    #[test]
    fn tables_are_normalized_and_positive() {
        let g = generate_random_graph(30, 120, 2).unwrap();
        let f = ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap();
        let table = measure_likelihood_table(&g, &f, 200, 9, 10_000, 12).unwrap();
        for values in [table.p_edge_values(), table.p_noedge_values()] {
            assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(values.iter().all(|&v| v > 0.0));
        }
        assert_eq!(table.total_edge_observations(), 120 * 200);
        assert_eq!(table.total_noedge_observations(), (30 * 29 - 120) * 200);
        assert_eq!(table.bucket(t(12)), 11);
        assert_eq!(table.bucket(t(13)), 12);
        assert_eq!(table.bucket(None), 12);
    }

    #[test]
    fn measurement_is_thread_independent() {
        let g = generate_random_graph(30, 120, 2).unwrap();
        let f = ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap();
        let a = measure_likelihood_table_with(Exec::Sequential, &g, &f, 300, 9, 10_000, 10).unwrap();
        let b = measure_likelihood_table_with(Exec::Parallel, &g, &f, 300, 9, 10_000, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edgeless_surrogate_is_rejected() {
        let f = ActivationFunction::constant(0.5).unwrap();
        assert!(measure_likelihood_table(&DirectedGraph::empty(5), &f, 10, 1, 10, 3).is_err());
    }

    #[test]
    fn identical_populations_keep_the_prior() {
        let counts = vec![3u64; 9];
        let table = LikelihoodTable::from_counts(2, counts.clone(), counts).unwrap();
        let traces = CascadeTraceSet::from_raw(3, &[vec![1, 2, 3], vec![2, 0, 1]]).unwrap();
        let post = infer_semiempirical(&traces, &table, 0.1).unwrap();
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                assert_eq!(post.probability(i, j), Some(0.1));
            }
        }
    }

    #[test]
    fn one_observation_matches_bayes_step() {
        let edge = vec![5, 1, 0, 9, 2, 2, 0, 1, 4];
        let noedge = vec![1, 1, 1, 1, 8, 1, 3, 1, 1];
        let table = LikelihoodTable::from_counts(2, edge, noedge).unwrap();
        let traces = CascadeTraceSet::from_raw(2, &[vec![2, 1]]).unwrap();
        let post = infer_semiempirical(&traces, &table, 0.2).unwrap();
        let expected = bayes_step(0.2, table.p_edge(t(2), t(1)), table.p_noedge(t(2), t(1))).unwrap();
        assert!((post.probability(0, 1).unwrap() - expected).abs() < 1e-12);
        // (t_1, t_0) = (1, 2) is a different cell.
        let expected = bayes_step(0.2, table.p_edge(t(1), t(2)), table.p_noedge(t(1), t(2))).unwrap();
        assert!((post.probability(1, 0).unwrap() - expected).abs() < 1e-12);
    }
}
