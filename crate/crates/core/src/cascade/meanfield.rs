use super::activation::{ActivationFunction, ActivationTable};
use super::traces::CascadeTraceSet;
use crate::graph::DegreeDistribution;

/// `C(k, m) q^m (1 - q)^(k - m)`, the probability that exactly `m` of `k`
/// providers are active when each is active independently with probability
/// `q`. Returns 0 for `m > k`.
pub fn binomial_weight(m: usize, k: usize, q: f64) -> f64 {
    if m > k {
        return 0.0;
    }
    if q <= 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if q >= 1.0 {
        return if m == k { 1.0 } else { 0.0 };
    }
    if k <= 60 {
        binomial_coefficient(k, m) * q.powi(m as i32) * (1.0 - q).powi((k - m) as i32)
    } else {
        let ln_c: f64 = (0..m).map(|i| ((k - i) as f64 / (i + 1) as f64).ln()).sum();
        (ln_c + m as f64 * q.ln() + (k - m) as f64 * (-q).ln_1p()).exp()
    }
}

fn binomial_coefficient(k: usize, m: usize) -> f64 {
    let m = m.min(k - m);
    // Exact in u128 for every k this is called with.
    let mut c: u128 = 1;
    for i in 0..m {
        c = c * (k - i) as u128 / (i + 1) as u128;
    }
    c as f64
}

/// Fills `out[m]` with `binomial_weight(m, k, q)` for `m = 0..=k`.
pub(crate) fn binomial_row(k: usize, q: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..=k).map(|m| binomial_weight(m, k, q)));
}

/// Fraction of nodes activating at each step, `D(t)`, and its running sum
/// `Q(t)`, for `t = 1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldCurves {
    d: Vec<f64>,
    q: Vec<f64>,
}

impl MeanFieldCurves {
    /// Builds curves from `D(1..=T)`, accumulating `Q` and clamping it at 1.
    pub fn from_d(d: impl IntoIterator<Item = f64>) -> Self {
        let mut curves = MeanFieldCurves { d: Vec::new(), q: Vec::new() };
        for v in d {
            curves.push(v);
        }
        curves
    }

    fn push(&mut self, raw: f64) {
        let prev = self.q_prev_of_next();
        let d = raw.max(0.0).min(1.0 - prev);
        self.d.push(d);
        self.q.push(prev + d);
    }

    fn q_prev_of_next(&self) -> f64 {
        self.q.last().copied().unwrap_or(0.0)
    }

    pub fn horizon(&self) -> usize {
        self.d.len()
    }

    /// `D(t)` for `1 <= t <= horizon`; 0 outside that range.
    pub fn d(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.d.get(t - 1).copied().unwrap_or(0.0)
        }
    }

    /// `Q(t)`, with `Q(0) = 0` and `Q` held constant past the horizon.
    pub fn q(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.q.get(t - 1).or(self.q.last()).copied().unwrap_or(0.0)
        }
    }

    pub fn d_values(&self) -> &[f64] {
        &self.d
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    /// `sup_t |D_self(t) - D_other(t)|` over the longer of the two horizons.
    pub fn sup_distance(&self, other: &MeanFieldCurves) -> f64 {
        let h = self.horizon().max(other.horizon());
        (1..=h).map(|t| (self.d(t) - other.d(t)).abs()).fold(0.0, f64::max)
    }
}

/// How the forward recursion treats nodes that are already active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanFieldRule {
    /// `D(t) = Σ_k Γ(k) Σ_m B(m, k, Q(t-1)) f(m/k)` taken literally: the
    /// per-step activation chance of a random node, whether or not it has
    /// already fired. Only the clamp `Q <= 1` stops it.
    Direct,
    /// Same hazard, weighted by the probability that a degree-`k` node is
    /// still inactive. `D(t)` is then a fraction of newly active nodes, which
    /// is what a simulation measures.
    Survival,
    /// Tracks, per degree, the joint law of "still inactive" and "m providers
    /// active". Providers fire with the population hazard
    /// `D(t) / (1 - Q(t-1))`, so a provider stays active once it has fired
    /// instead of being redrawn every step.
    #[default]
    ProviderChain,
}

/// Iterates the mean-field recursion for `horizon` steps. `D(1) = f(0)` under
/// every rule since `Q(0) = 0`.
pub fn meanfield_forward(
    dist: &DegreeDistribution,
    f: &ActivationFunction,
    horizon: usize,
    rule: MeanFieldRule,
) -> MeanFieldCurves {
    let degrees: Vec<(usize, f64)> = dist.iter().filter(|&(_, g)| g > 0.0).collect();
    let max_k = degrees.iter().map(|&(k, _)| k).max().unwrap_or(0);
    let table = ActivationTable::new(f, max_k);
    match rule {
        MeanFieldRule::ProviderChain => provider_chain(&degrees, &table, horizon),
        MeanFieldRule::Direct | MeanFieldRule::Survival => {
            hazard_recursion(&degrees, &table, horizon, rule == MeanFieldRule::Survival)
        }
    }
}

fn hazard_recursion(degrees: &[(usize, f64)], table: &ActivationTable, horizon: usize, survival: bool) -> MeanFieldCurves {
    let mut alive = vec![1.0f64; degrees.len()];
    let mut curves = MeanFieldCurves { d: Vec::with_capacity(horizon), q: Vec::with_capacity(horizon) };
    let mut row = Vec::new();
    for _ in 0..horizon {
        let q_prev = curves.q_prev_of_next();
        let mut d = 0.0;
        for (s, &(k, gamma)) in alive.iter_mut().zip(degrees) {
            binomial_row(k, q_prev, &mut row);
            let hazard: f64 = row.iter().enumerate().map(|(m, b)| b * table.get(m, k)).sum();
            if survival {
                d += gamma * *s * hazard;
                *s *= 1.0 - hazard;
            } else {
                d += gamma * hazard;
            }
        }
        curves.push(d);
    }
    curves
}

fn provider_chain(degrees: &[(usize, f64)], table: &ActivationTable, horizon: usize) -> MeanFieldCurves {
    // state[idx][m] = P(inactive after step t, m of k providers active by t)
    let mut state: Vec<Vec<f64>> = degrees
        .iter()
        .map(|&(k, _)| {
            let mut v = vec![0.0; k + 1];
            v[0] = 1.0;
            v
        })
        .collect();
    let mut curves = MeanFieldCurves { d: Vec::with_capacity(horizon), q: Vec::with_capacity(horizon) };
    let mut row = Vec::new();
    let mut next = Vec::new();
    for _ in 0..horizon {
        let q_prev = curves.q_prev_of_next();
        let mut d = 0.0;
        for (p, &(k, gamma)) in state.iter_mut().zip(degrees) {
            for (m, pm) in p.iter_mut().enumerate() {
                let h = table.get(m, k);
                d += gamma * *pm * h;
                *pm *= 1.0 - h;
            }
        }
        curves.push(d);
        let d = curves.d(curves.horizon());
        let lambda = if q_prev < 1.0 { (d / (1.0 - q_prev)).clamp(0.0, 1.0) } else { 0.0 };
        for (p, &(k, _)) in state.iter_mut().zip(degrees) {
            next.clear();
            next.resize(k + 1, 0.0);
            for m in 0..=k {
                if p[m] == 0.0 {
                    continue;
                }
                binomial_row(k - m, lambda, &mut row);
                for (j, b) in row.iter().enumerate() {
                    next[m + j] += p[m] * b;
                }
            }
            std::mem::swap(p, &mut next);
        }
    }
    curves
}

/// `D(t)` measured by counting activations at each step over all cascades,
/// normalized by `n_nodes * n_cascades`. Censored entries count nowhere.
pub fn empirical_curves(traces: &CascadeTraceSet) -> MeanFieldCurves {
    let horizon = traces.t_max() as usize;
    let mut counts = vec![0u64; horizon + 1];
    for row in traces.cascades() {
        for t in row.iter().flatten() {
            counts[t.get() as usize] += 1;
        }
    }
    let total = (traces.n_nodes() * traces.n_cascades()) as f64;
    MeanFieldCurves::from_d(counts[1..].iter().map(|&c| c as f64 / total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn binomial_matches_factorial_formula() {
        for k in 0..=20 {
            for m in 0..=k {
                for &q in &[0.0f64, 0.01, 0.25, 0.42, 0.5, 0.9, 1.0] {
                    let oracle = factorial(k) / (factorial(m) * factorial(k - m))
                        * q.powf(m as f64)
                        * (1.0 - q).powf((k - m) as f64);
                    assert!((binomial_weight(m, k, q) - oracle).abs() < 1e-12, "{m} {k} {q}");
                }
            }
        }
        assert_eq!(binomial_weight(0, 5, 0.0), 1.0);
        assert_eq!(binomial_weight(2, 2, 0.3), 0.3 * 0.3);
        // (3, 7, 0.42): 35 * 0.42^3 * 0.58^4
        let expected = 35.0 * 0.074088 * 0.11316496;
        assert!((binomial_weight(3, 7, 0.42) - expected).abs() < 1e-12);
    }

    #[test]
    fn binomial_rows_sum_to_one() {
        for k in [0, 1, 5, 20, 59, 60, 61, 150, 400] {
            for &q in &[0.0, 0.03, 0.5, 0.97, 1.0] {
                let mut row = Vec::new();
                binomial_row(k, q, &mut row);
                let s: f64 = row.iter().sum();
                assert!((s - 1.0).abs() < 1e-10, "k={k} q={q} sum={s}");
            }
        }
    }

    fn dist(pairs: &[(usize, f64)]) -> DegreeDistribution {
        DegreeDistribution::new(pairs.iter().copied().collect::<BTreeMap<_, _>>()).unwrap()
    }

    #[test]
    fn direct_rule_with_constant_f() {
        let f = ActivationFunction::constant(0.1).unwrap();
        let c = meanfield_forward(&dist(&[(3, 0.5), (5, 0.5)]), &f, 12, MeanFieldRule::Direct);
        for t in 1..=10 {
            assert!((c.d(t) - 0.1).abs() < 1e-12);
        }
        // Q reaches 1 at t = 10 and the clamp truncates the tail.
        assert!(c.d(11).abs() < 1e-9 && c.d(12) == 0.0);
        assert!(c.q(12) <= 1.0);
    }

    #[test]
    fn survival_rule_with_constant_f_is_geometric() {
        let f = ActivationFunction::constant(0.1).unwrap();
        let c = meanfield_forward(&dist(&[(3, 0.5), (5, 0.5)]), &f, 30, MeanFieldRule::Survival);
        for t in 1..=30 {
            assert!((c.d(t) - 0.1 * 0.9f64.powi(t as i32 - 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn provider_chain_with_constant_f_is_geometric() {
        let f = ActivationFunction::constant(0.1).unwrap();
        let c = meanfield_forward(&dist(&[(0, 0.3), (3, 0.3), (5, 0.4)]), &f, 30, MeanFieldRule::ProviderChain);
        for t in 1..=30 {
            assert!((c.d(t) - 0.1 * 0.9f64.powi(t as i32 - 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn provider_chain_matches_single_provider_renewal() {
        // Every node has one provider whose activation time follows the
        // population law D. Given the provider fires at s, the node fires at
        // rate g up to step s and at rate e afterwards.
        let (g, e) = (0.05, 0.7);
        let f = ActivationFunction::threshold(g, e, 0.5).unwrap();
        let horizon = 25;
        let c = meanfield_forward(&dist(&[(1, 1.0)]), &f, horizon, MeanFieldRule::ProviderChain);
        let mut d: Vec<f64> = Vec::new();
        for t in 1..=horizon {
            let q_before: f64 = d[..t - 1].iter().sum();
            let mut p = (1.0 - q_before) * (1.0 - g).powi(t as i32 - 1) * g;
            for s in 1..t {
                p += d[s - 1] * (1.0 - g).powi(s as i32) * (1.0 - e).powi((t - 1 - s) as i32) * e;
            }
            d.push(p);
        }
        for t in 1..=horizon {
            assert!((c.d(t) - d[t - 1]).abs() < 1e-12, "t={t}: {} vs {}", c.d(t), d[t - 1]);
        }
    }

    #[test]
    fn providerless_nodes_only_see_f_zero() {
        let f = ActivationFunction::threshold(0.2, 0.9, 0.5).unwrap();
        let c = meanfield_forward(&dist(&[(0, 1.0)]), &f, 4, MeanFieldRule::Direct);
        assert!(c.d_values().iter().all(|&d| (d - 0.2).abs() < 1e-15));
    }

    #[test]
    fn hand_expanded_second_step() {
        let f = ActivationFunction::threshold(0.1, 0.9, 0.5).unwrap();
        let c = meanfield_forward(&dist(&[(2, 1.0)]), &f, 3, MeanFieldRule::Direct);
        assert!((c.d(1) - 0.1).abs() < 1e-15);
        // B(0,2,.1)*.1 + B(1,2,.1)*.9 + B(2,2,.1)*.9
        let d2 = 0.81 * 0.1 + 0.18 * 0.9 + 0.01 * 0.9;
        assert!((c.d(2) - d2).abs() < 1e-12);
        let s = meanfield_forward(&dist(&[(2, 1.0)]), &f, 3, MeanFieldRule::Survival);
        assert!((s.d(2) - 0.9 * d2).abs() < 1e-12);
    }

    #[test]
    fn curves_are_monotone_and_consistent() {
        let f = ActivationFunction::tabulated(vec![(0.0, 0.3), (1.0, 1.0)]).unwrap();
        for rule in [MeanFieldRule::Direct, MeanFieldRule::Survival, MeanFieldRule::ProviderChain] {
            let c = meanfield_forward(&dist(&[(1, 0.2), (4, 0.5), (9, 0.3)]), &f, 40, rule);
            for t in 1..=40 {
                assert!(c.d(t) >= 0.0);
                assert!(c.q(t) >= c.q(t - 1) && c.q(t) <= 1.0);
                assert_eq!(c.q(t), c.q(t - 1) + c.d(t));
            }
        }
    }

    #[test]
    fn empirical_counts() {
        let all_one = CascadeTraceSet::from_raw(3, &[vec![1, 1, 1], vec![1, 1, 1]]).unwrap();
        let c = empirical_curves(&all_one);
        assert_eq!(c.d_values(), &[1.0]);
        assert_eq!(c.d(2), 0.0);

        let half = CascadeTraceSet::from_raw(2, &[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(empirical_curves(&half).d_values(), &[0.5, 0.5]);

        let censored = CascadeTraceSet::from_raw(2, &[vec![1, 0]]).unwrap();
        let c = empirical_curves(&censored);
        assert_eq!(c.d_values(), &[0.5]);
        assert_eq!(c.q(5), 0.5);
    }
}
