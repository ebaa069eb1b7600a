use std::num::NonZeroU32;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::activation::{ActivationFunction, ActivationTable};
use super::traces::{ActivationTime, CascadeTraceSet};
use crate::exec::Exec;
use crate::graph::DirectedGraph;

/// RNG for cascade `index` of a run seeded with `seed`: the seed picks the
/// key and the index picks an independent stream.
pub fn cascade_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Synchronous permanent-activation cascade simulator for one graph and one
/// activation function. Reusable across cascades.
pub struct Simulator<'g> {
    graph: &'g DirectedGraph,
    successors: Vec<Vec<u32>>,
    table: ActivationTable,
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g DirectedGraph, f: &ActivationFunction) -> Self {
        let max_k = (0..graph.n_nodes()).map(|j| graph.in_degree(j)).max().unwrap_or(0);
        Simulator { graph, successors: graph.successors(), table: ActivationTable::new(f, max_k) }
    }

    /// Runs one cascade from the all-inactive state.
    ///
    /// Step `t` decisions read provider states as they were at the end of
    /// step `t - 1`. Stops once every node is active or after `step_cap`
    /// steps; nodes still inactive are censored.
    pub fn run<R: Rng>(&self, rng: &mut R, step_cap: u32) -> Vec<ActivationTime> {
        let n = self.graph.n_nodes();
        let mut times: Vec<ActivationTime> = vec![None; n];
        let mut active_providers = vec![0u32; n];
        let mut inactive: Vec<u32> = (0..n as u32).collect();
        let mut fresh: Vec<u32> = Vec::new();

        for t in 1..=step_cap {
            if inactive.is_empty() {
                break;
            }
            let stamp = NonZeroU32::new(t).unwrap();
            let mut any_chance = false;
            inactive.retain(|&j| {
                let j = j as usize;
                let p = self
                    .table
                    .get(active_providers[j] as usize, self.graph.in_degree(j));
                let fires = if p >= 1.0 {
                    true
                } else if p <= 0.0 {
                    false
                } else {
                    any_chance = true;
                    rng.gen::<f64>() < p
                };
                if fires {
                    times[j] = Some(stamp);
                    fresh.push(j as u32);
                }
                !fires
            });
            if fresh.is_empty() && !any_chance {
                // Frozen: nothing changed and nothing can.
                break;
            }
            for &i in &fresh {
                for &j in &self.successors[i as usize] {
                    active_providers[j as usize] += 1;
                }
            }
            fresh.clear();
        }
        times
    }
}

/// One cascade on `g`, using stream 0 of `seed`.
pub fn simulate_cascade(g: &DirectedGraph, f: &ActivationFunction, seed: u64, step_cap: u32) -> Vec<ActivationTime> {
    Simulator::new(g, f).run(&mut cascade_rng(seed, 0), step_cap)
}

/// `n_cascades` independent cascades; cascade `c` uses stream `c` of `seed`.
pub fn run_experiments(
    g: &DirectedGraph,
    f: &ActivationFunction,
    n_cascades: usize,
    seed: u64,
    step_cap: u32,
) -> CascadeTraceSet {
    run_experiments_with(Exec::default(), g, f, n_cascades, seed, step_cap)
}

pub fn run_experiments_with(
    exec: Exec,
    g: &DirectedGraph,
    f: &ActivationFunction,
    n_cascades: usize,
    seed: u64,
    step_cap: u32,
) -> CascadeTraceSet {
    let sim = Simulator::new(g, f);
    let n = g.n_nodes();
    let mut times = vec![None; n * n_cascades];
    exec.for_each_chunk_mut(&mut times, n, |c, row| {
        row.copy_from_slice(&sim.run(&mut cascade_rng(seed, c as u64), step_cap));
    });
    CascadeTraceSet::from_flat(n, n_cascades, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_graph;

    fn t(v: u32) -> ActivationTime {
        NonZeroU32::new(v)
    }

    #[test]
    fn certain_activation_happens_at_step_one() {
        let g = generate_random_graph(20, 60, 1).unwrap();
        let one = ActivationFunction::constant(1.0).unwrap();
        assert!(simulate_cascade(&g, &one, 3, 100).iter().all(|&x| x == t(1)));
        let traces = run_experiments(&g, &one, 5, 3, 100);
        assert_eq!(traces.n_cascades(), 5);
        assert!(traces.cascades().all(|r| r.iter().all(|&x| x == t(1))));
    }

    #[test]
    fn impossible_activation_censors_everything() {
        let g = generate_random_graph(20, 60, 1).unwrap();
        let zero = ActivationFunction::constant(0.0).unwrap();
        assert!(simulate_cascade(&g, &zero, 3, 50).iter().all(Option::is_none));
    }

    #[test]
    fn two_node_chain() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        // Node 0 has no providers, so it only ever sees f(0) = 0.
        let f = ActivationFunction::threshold(0.0, 1.0, 0.5).unwrap();
        assert_eq!(simulate_cascade(&g, &f, 9, 20), vec![None, None]);
        // With a spontaneous rate node 1 follows node 0 after exactly one step.
        let f = ActivationFunction::threshold(0.3, 1.0, 0.5).unwrap();
        for seed in 0..200 {
            let tr = simulate_cascade(&g, &f, seed, 1000);
            let (a, b) = (tr[0].unwrap().get(), tr[1].unwrap().get());
            assert!(b <= a + 1, "seed {seed}: {a} -> {b}");
        }
    }

    #[test]
    fn runs_are_reproducible_across_execution_modes() {
        let g = generate_random_graph(60, 300, 4).unwrap();
        let f = ActivationFunction::threshold(0.04, 0.6, 0.4).unwrap();
        let a = run_experiments_with(Exec::Sequential, &g, &f, 40, 77, 10_000);
        let b = run_experiments_with(Exec::Parallel, &g, &f, 40, 77, 10_000);
        assert_eq!(a, b);
        assert_ne!(a, run_experiments(&g, &f, 40, 78, 10_000));
    }

    #[test]
    fn synchronous_update_reads_previous_step() {
        // f(0) is small and any active provider forces activation, so every
        // node fires no later than one step after its earliest provider.
        let g = generate_random_graph(40, 200, 8).unwrap();
        let f = ActivationFunction::tabulated(vec![(0.0, 0.05), (0.01, 1.0)]).unwrap();
        for seed in 0..50 {
            let tr = simulate_cascade(&g, &f, seed, 500);
            for j in 0..g.n_nodes() {
                let tj = tr[j].unwrap().get();
                if let Some(earliest) = g.providers(j).iter().map(|&i| tr[i as usize].unwrap().get()).min() {
                    assert!(tj <= earliest + 1, "node {j} at {tj}, provider at {earliest}");
                }
            }
        }
    }
}
