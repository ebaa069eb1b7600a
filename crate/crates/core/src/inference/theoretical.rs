//! Likelihoods of a pair of activation times derived from the mean-field
//! picture, with and without a directed edge between the two nodes.

use crate::cascade::{binomial_row, empirical_curves, ActivationFunction, ActivationTable, CascadeTraceSet, MeanFieldCurves};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::DegreeDistribution;

use super::posterior::{fold_evidence, EdgePosterior, EvidenceGrid, PROBABILITY_FLOOR};

/// How `j`'s other providers are modelled while `j` waits to fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProviderDynamics {
    /// Each step the other providers are drawn afresh, each active with
    /// probability `Q(t - 1)`.
    Redrawn,
    /// Providers fire once and stay active: the number of active others is a
    /// counting process that grows with hazard `D(t) / (1 - Q(t - 1))`.
    #[default]
    Persistent,
}

/// Precomputed `P(t_i, t_j | i -> j)` for all `1 <= t_i, t_j <= horizon`.
///
/// Node `j` is given `k` providers with probability `Γ(k)` (restricted to
/// `k >= 1`, since `i` is one of them). `i` counts as active from step
/// `t_i + 1` on; the other `k - 1` follow [`ProviderDynamics`]. `Q_j(t)` is
/// the probability that `j` has fired by step `t`, so
/// `P = D(t_i) [Q_j(t_j) - Q_j(t_j - 1)]`.
#[derive(Debug, Clone)]
pub struct TheoreticalModel {
    horizon: usize,
    /// Row-major `[t_i - 1][t_j - 1]`.
    p_edge: Vec<f64>,
    d: Vec<f64>,
}

impl TheoreticalModel {
    pub fn new(dist: &DegreeDistribution, f: &ActivationFunction, curves: &MeanFieldCurves) -> Result<Self> {
        Self::with_dynamics(dist, f, curves, ProviderDynamics::default())
    }

    pub fn with_dynamics(
        dist: &DegreeDistribution,
        f: &ActivationFunction,
        curves: &MeanFieldCurves,
        dynamics: ProviderDynamics,
    ) -> Result<Self> {
        let horizon = curves.horizon();
        let degrees: Vec<(usize, f64)> = dist.iter().filter(|&(k, g)| k >= 1 && g > 0.0).collect();
        let mass: f64 = degrees.iter().map(|&(_, g)| g).sum();
        if degrees.is_empty() || mass <= 0.0 {
            return Err(Error::Validation(
                "degree distribution has no mass at in-degree >= 1, so no node can have a provider".into(),
            ));
        }
        let max_k = degrees.iter().map(|&(k, _)| k).max().unwrap();
        let table = ActivationTable::new(f, max_k);

        // fire[(t_i - 1) * horizon + t_j - 1] = P(j fires at t_j | i fired at t_i)
        let mut fire = vec![0.0; horizon * horizon];
        for &(k, g) in &degrees {
            let weight = g / mass;
            match dynamics {
                ProviderDynamics::Redrawn => redrawn_firing(k, weight, &table, curves, &mut fire),
                ProviderDynamics::Persistent => persistent_firing(k, weight, &table, curves, &mut fire),
            }
        }
        let mut p_edge = fire;
        for t_i in 1..=horizon {
            let d_i = curves.d(t_i);
            p_edge[(t_i - 1) * horizon..t_i * horizon].iter_mut().for_each(|p| *p *= d_i);
        }
        Ok(TheoreticalModel { horizon, p_edge, d: curves.d_values().to_vec() })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn edge_likelihood(&self, t_i: u32, t_j: u32) -> Result<f64> {
        let (a, b) = (t_i as usize, t_j as usize);
        if a == 0 || b == 0 || a > self.horizon || b > self.horizon {
            return Err(Error::Domain(format!(
                "times ({t_i}, {t_j}) outside the curve horizon 1..={}",
                self.horizon
            )));
        }
        Ok(self.p_edge[(a - 1) * self.horizon + b - 1])
    }

    fn evidence_grid(&self, omega: f64) -> EvidenceGrid {
        // Bucket 0 is censored and carries no evidence.
        let width = self.horizon + 1;
        let mut llr = vec![0.0; width * width];
        for a in 1..width {
            for b in 1..width {
                let p_edge = self.p_edge[(a - 1) * self.horizon + b - 1];
                let indep = self.d[a - 1] * self.d[b - 1];
                let p_noedge = noedge_from_parts(indep, omega, p_edge);
                llr[a * width + b] = p_edge.max(PROBABILITY_FLOOR).ln() - p_noedge.ln();
            }
        }
        EvidenceGrid { width, llr }
    }
}

fn redrawn_firing(k: usize, weight: f64, table: &ActivationTable, curves: &MeanFieldCurves, fire: &mut [f64]) {
    let horizon = curves.horizon();
    let mut before = vec![0.0; horizon];
    let mut after = vec![0.0; horizon];
    let mut row = Vec::new();
    for t in 1..=horizon {
        binomial_row(k - 1, curves.q(t - 1), &mut row);
        for (m, b) in row.iter().enumerate() {
            before[t - 1] += b * table.get(m, k);
            after[t - 1] += b * table.get(m + 1, k);
        }
    }
    for t_i in 1..=horizon {
        let mut alive = 1.0;
        for t in 1..=horizon {
            let h = if t <= t_i { before[t - 1] } else { after[t - 1] };
            fire[(t_i - 1) * horizon + t - 1] += weight * alive * h;
            alive *= 1.0 - h;
        }
    }
}

fn persistent_firing(k: usize, weight: f64, table: &ActivationTable, curves: &MeanFieldCurves, fire: &mut [f64]) {
    let horizon = curves.horizon();
    let others = k - 1;
    // trans[t - 1][m]: law of newly active others at step t given m active.
    let trans: Vec<Vec<Vec<f64>>> = (1..=horizon)
        .map(|t| {
            let q_prev = curves.q(t - 1);
            let lambda = if q_prev < 1.0 { (curves.d(t) / (1.0 - q_prev)).clamp(0.0, 1.0) } else { 0.0 };
            (0..=others)
                .map(|m| {
                    let mut row = Vec::new();
                    binomial_row(others - m, lambda, &mut row);
                    row
                })
                .collect()
        })
        .collect();
    let advance = |state: &mut Vec<f64>, next: &mut Vec<f64>, t: usize| {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (m, &p) in state.iter().enumerate() {
            if p != 0.0 {
                for (j, b) in trans[t - 1][m].iter().enumerate() {
                    next[m + j] += p * b;
                }
            }
        }
        std::mem::swap(state, next);
    };

    // Before the switch: P(j still inactive after step t, m others active by t).
    let mut states = Vec::with_capacity(horizon + 1);
    let mut pre_fire = vec![0.0; horizon];
    let mut state = vec![0.0; others + 1];
    state[0] = 1.0;
    let mut next = vec![0.0; others + 1];
    states.push(state.clone());
    for t in 1..=horizon {
        for (m, p) in state.iter_mut().enumerate() {
            let h = table.get(m, k);
            pre_fire[t - 1] += *p * h;
            *p *= 1.0 - h;
        }
        advance(&mut state, &mut next, t);
        states.push(state.clone());
    }

    for t_i in 1..=horizon {
        let row = &mut fire[(t_i - 1) * horizon..t_i * horizon];
        for t in 1..=t_i {
            row[t - 1] += weight * pre_fire[t - 1];
        }
        let mut state = states[t_i].clone();
        for t in t_i + 1..=horizon {
            let mut p_fire = 0.0;
            for (m, p) in state.iter_mut().enumerate() {
                let h = table.get(m + 1, k);
                p_fire += *p * h;
                *p *= 1.0 - h;
            }
            row[t - 1] += weight * p_fire;
            advance(&mut state, &mut next, t);
        }
    }
}

/// `P(t_i, t_j | i -> j)`; see [`TheoreticalModel`].
pub fn theoretical_pair_likelihood(
    t_i: u32,
    t_j: u32,
    dist: &DegreeDistribution,
    f: &ActivationFunction,
    curves: &MeanFieldCurves,
) -> Result<f64> {
    TheoreticalModel::new(dist, f, curves)?.edge_likelihood(t_i, t_j)
}

fn noedge_from_parts(independent: f64, omega: f64, p_edge: f64) -> f64 {
    ((independent - omega * p_edge) / (1.0 - omega)).max(PROBABILITY_FLOOR)
}

/// `P(t_i, t_j | no edge)` recovered from `D(t_i) D(t_j) = ω P_edge + (1 - ω) P_noedge`,
/// floored so it never goes non-positive.
pub fn noedge_pair_likelihood(t_i: u32, t_j: u32, omega: f64, p_edge: f64, curves: &MeanFieldCurves) -> f64 {
    noedge_from_parts(curves.d(t_i as usize) * curves.d(t_j as usize), omega, p_edge)
}

/// Posterior for every ordered pair using the mean-field likelihoods, with
/// `D` and `Q` measured from the traces themselves. Pairs where either node
/// is censored are skipped for that cascade.
pub fn infer_theoretical(
    traces: &CascadeTraceSet,
    dist: &DegreeDistribution,
    f: &ActivationFunction,
    omega: f64,
) -> Result<EdgePosterior> {
    infer_theoretical_with(Exec::default(), traces, dist, f, omega)
}

pub fn infer_theoretical_with(
    exec: Exec,
    traces: &CascadeTraceSet,
    dist: &DegreeDistribution,
    f: &ActivationFunction,
    omega: f64,
) -> Result<EdgePosterior> {
    check_omega(omega)?;
    let n = traces.n_nodes();
    if traces.t_max() == 0 {
        return Ok(EdgePosterior::prior(n, omega));
    }
    let model = TheoreticalModel::new(dist, f, &empirical_curves(traces))?;
    let grid = model.evidence_grid(omega);
    let evidence = fold_evidence(exec, traces, &grid, |t| t.map_or(0, |t| t.get() as usize));
    Ok(EdgePosterior::from_evidence(n, omega, evidence))
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if (0.0..1.0).contains(&omega) {
        Ok(())
    } else {
        Err(Error::Validation(format!("prior {omega} must lie in [0, 1)")))
    }
}
