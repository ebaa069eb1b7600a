use crate::cascade::CascadeTraceSet;
use crate::exec::Exec;
use crate::graph::{in_degree_distribution, DegreeDistribution, DirectedGraph};

use super::select::select_edges;

/// `counts[i][j]`: number of cascades in which `j` fired exactly one step
/// after `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicScores {
    n_nodes: usize,
    counts: Vec<u32>,
}

impl HeuristicScores {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n_nodes + j]
    }

    /// Row-major counts as ranking scores, NaN on the diagonal.
    pub fn scores(&self) -> Vec<f64> {
        let n = self.n_nodes;
        self.counts
            .iter()
            .enumerate()
            .map(|(idx, &c)| if idx / n == idx % n { f64::NAN } else { c as f64 })
            .collect()
    }
}

pub fn score_heuristic(traces: &CascadeTraceSet) -> HeuristicScores {
    score_heuristic_with(Exec::default(), traces)
}

pub fn score_heuristic_with(exec: Exec, traces: &CascadeTraceSet) -> HeuristicScores {
    let n = traces.n_nodes();
    // Per cascade, the nodes grouped by activation time (CSR layout).
    let horizon = traces.t_max() as usize;
    let mut starts: Vec<Vec<u32>> = Vec::with_capacity(traces.n_cascades());
    let mut members: Vec<Vec<u32>> = Vec::with_capacity(traces.n_cascades());
    for row in traces.cascades() {
        let mut start = vec![0u32; horizon + 2];
        for t in row.iter().flatten() {
            start[t.get() as usize + 1] += 1;
        }
        for t in 1..start.len() {
            start[t] += start[t - 1];
        }
        let mut fill = start.clone();
        let mut by_time = vec![0u32; start[horizon + 1] as usize];
        for (node, t) in row.iter().enumerate() {
            if let Some(t) = t {
                let slot = &mut fill[t.get() as usize];
                by_time[*slot as usize] = node as u32;
                *slot += 1;
            }
        }
        starts.push(start);
        members.push(by_time);
    }

    let mut counts = vec![0u32; n * n];
    exec.for_each_chunk_mut(&mut counts, n.max(1), |i, row| {
        for (c, times) in traces.cascades().enumerate() {
            let Some(ti) = times[i] else { continue };
            let next = ti.get() as usize + 1;
            if next > horizon {
                continue;
            }
            let (lo, hi) = (starts[c][next] as usize, starts[c][next + 1] as usize);
            for &j in &members[c][lo..hi] {
                row[j as usize] += 1;
            }
        }
    });
    HeuristicScores { n_nodes: n, counts }
}

/// In-degree distribution of the graph formed by the `n_edges` highest
/// heuristic scores, for use when the true distribution is unknown.
pub fn bootstrap_degree_distribution(traces: &CascadeTraceSet, n_edges: usize) -> DegreeDistribution {
    let scores = score_heuristic(traces);
    let edges = select_edges(traces.n_nodes(), &scores.scores(), n_edges);
    let graph = DirectedGraph::from_edges(traces.n_nodes(), edges).expect("selected pairs form a simple digraph");
    in_degree_distribution(&graph)
}

#[cfg(test)]
pub(crate) fn naive_counts(traces: &CascadeTraceSet) -> Vec<u32> {
    let n = traces.n_nodes();
    let mut counts = vec![0u32; n * n];
    for c in 0..traces.n_cascades() {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let (Some(a), Some(b)) = (traces.time(c, i), traces.time(c, j)) {
                    if b == a + 1 {
                        counts[i * n + j] += 1;
                    }
                }
            }
        }
    }
    counts
}
