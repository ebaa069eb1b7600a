use crate::cascade::{ActivationTime, CascadeTraceSet};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Probabilities handed out by the Bayesian machinery stay inside
/// `[PROBABILITY_FLOOR, 1 - PROBABILITY_FLOOR]`.
pub const PROBABILITY_FLOOR: f64 = 1e-9;

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
}

/// Edge density `E / (N (N - 1))`, the prior probability of any ordered pair.
pub fn prior_omega(n_nodes: usize, n_edges: usize) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::Validation(format!("need at least 2 nodes, got {n_nodes}")));
    }
    let slots = n_nodes * (n_nodes - 1);
    if n_edges > slots {
        return Err(Error::Validation(format!("{n_edges} edges exceed the {slots} ordered pairs")));
    }
    Ok(n_edges as f64 / slots as f64)
}

/// One Bayes update of `P(i -> j)` given the likelihood of the new
/// observation with and without the edge. The result is clamped.
pub fn bayes_step(prev: f64, l_edge: f64, l_noedge: f64) -> Result<f64> {
    if l_edge == 0.0 && l_noedge == 0.0 {
        return Err(Error::DegenerateEvidence);
    }
    let num = prev * l_edge;
    Ok(clamp_probability(num / (num + (1.0 - prev) * l_noedge)))
}

/// Posterior edge probabilities for every ordered pair.
///
/// Stored as the accumulated log likelihood ratio per pair, so the result is
/// the exact product of all per-cascade updates regardless of their order.
/// [`EdgePosterior::probability`] converts back and applies the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePosterior {
    n_nodes: usize,
    omega: f64,
    evidence: Vec<f64>,
}

impl EdgePosterior {
    /// Posterior before any data: `omega` everywhere.
    pub fn prior(n_nodes: usize, omega: f64) -> Self {
        let mut evidence = vec![0.0; n_nodes * n_nodes];
        for i in 0..n_nodes {
            evidence[i * n_nodes + i] = f64::NAN;
        }
        EdgePosterior { n_nodes, omega, evidence }
    }

    pub(crate) fn from_evidence(n_nodes: usize, omega: f64, evidence: Vec<f64>) -> Self {
        debug_assert_eq!(evidence.len(), n_nodes * n_nodes);
        EdgePosterior { n_nodes, omega, evidence }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Sum of per-observation `ln(l_edge / l_noedge)` for `i -> j`.
    pub fn evidence(&self, i: usize, j: usize) -> f64 {
        self.evidence[i * self.n_nodes + j]
    }

    /// Posterior log-odds `ln(P / (1 - P))` before clamping.
    pub fn log_odds(&self, i: usize, j: usize) -> f64 {
        (self.omega / (1.0 - self.omega)).ln() + self.evidence(i, j)
    }

    /// `P(i -> j | data)`, clamped to the probability floor. `None` on the
    /// diagonal.
    pub fn probability(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        let e = self.evidence(i, j);
        let p = if e == 0.0 {
            self.omega
        } else {
            let odds = self.omega / (1.0 - self.omega) * e.exp();
            if odds.is_infinite() {
                1.0
            } else {
                odds / (1.0 + odds)
            }
        };
        Some(clamp_probability(p))
    }

    /// Row-major ranking scores (log-odds up to a shared constant); the
    /// diagonal is NaN so selection skips it.
    pub fn scores(&self) -> &[f64] {
        &self.evidence
    }
}

/// Per-cell log likelihood ratios over a square grid of time buckets.
#[derive(Debug, Clone)]
pub(crate) struct EvidenceGrid {
    pub width: usize,
    pub llr: Vec<f64>,
}

/// Accumulates `grid[bucket(t_i), bucket(t_j)]` over cascades, in cascade
/// order, for every ordered pair `i != j`.
pub(crate) fn fold_evidence<B>(exec: Exec, traces: &CascadeTraceSet, grid: &EvidenceGrid, bucket: B) -> Vec<f64>
where
    B: Fn(ActivationTime) -> usize + Sync,
{
    let n = traces.n_nodes();
    let buckets: Vec<u32> = traces
        .cascades()
        .flat_map(|row| row.iter().map(|&t| bucket(t) as u32))
        .collect();
    let mut evidence = vec![0.0f64; n * n];
    exec.for_each_chunk_mut(&mut evidence, n.max(1), |i, row| {
        for c in 0..traces.n_cascades() {
            let cascade = &buckets[c * n..(c + 1) * n];
            let cells = &grid.llr[cascade[i] as usize * grid.width..][..grid.width];
            for (acc, &bj) in row.iter_mut().zip(cascade) {
                *acc += cells[bj as usize];
            }
        }
        row[i] = f64::NAN;
    });
    evidence
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn omega_values() {
        assert!((prior_omega(200, 1484).unwrap() - 0.0372864).abs() < 1e-7);
        assert!((prior_omega(67, 182).unwrap() - 0.0411579).abs() < 1e-7);
        assert_eq!(prior_omega(10, 0).unwrap(), 0.0);
        assert!(prior_omega(3, 7).is_err());
        assert!(prior_omega(1, 0).is_err());
    }

    #[test]
    fn bayes_step_arithmetic() {
        assert!((bayes_step(0.5, 0.2, 0.1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bayes_step(0.3, 0.7, 0.7).unwrap(), 0.3);
        assert!(matches!(bayes_step(0.3, 0.0, 0.0), Err(Error::DegenerateEvidence)));
        assert_eq!(bayes_step(0.5, 1.0, 0.0).unwrap(), 1.0 - PROBABILITY_FLOOR);
        assert_eq!(bayes_step(0.5, 0.0, 1.0).unwrap(), PROBABILITY_FLOOR);
    }

    #[test]
    fn prior_posterior_is_omega() {
        let p = EdgePosterior::prior(4, 0.25);
        assert_eq!(p.probability(0, 1), Some(0.25));
        assert_eq!(p.probability(2, 2), None);
    }

    proptest! {
        #[test]
        fn bayes_steps_commute(prev in 0.01f64..0.99, obs in proptest::collection::vec((0.001f64..1.0, 0.001f64..1.0), 1..12), seed: u64) {
            let mut shuffled = obs.clone();
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
            let fold = |v: &[(f64, f64)]| v.iter().fold(prev, |p, &(a, b)| bayes_step(p, a, b).unwrap());
            let (x, y) = (fold(&obs), fold(&shuffled));
            // Ratios stay within [1e-3, 1e3]^12, far from the floor.
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }

        #[test]
        fn evidence_moves_posterior_in_its_direction(prev in 0.001f64..0.999, a in 0.0001f64..1.0, b in 0.0001f64..1.0) {
            let next = bayes_step(prev, a, b).unwrap();
            prop_assert!(next >= PROBABILITY_FLOOR && next <= 1.0 - PROBABILITY_FLOOR);
            if a > b * (1.0 + 1e-9) {
                prop_assert!(next > prev || next == 1.0 - PROBABILITY_FLOOR);
            } else if b > a * (1.0 + 1e-9) {
                prop_assert!(next < prev || next == PROBABILITY_FLOOR);
            }
        }
    }
}
