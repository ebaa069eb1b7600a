//! Directed graphs stored as provider (in-neighbour) lists, plus random and
//! surrogate construction, in-degree statistics and edge-list I/O.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A simple directed graph on dense node ids `0..n_nodes`.
///
/// Edge `i -> j` is stored as `i` appearing in `providers(j)`. Provider lists
/// are kept sorted, so two graphs with the same edge set compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n_nodes: usize,
    providers: Vec<Vec<u32>>,
    n_edges: usize,
}

impl DirectedGraph {
    pub fn empty(n_nodes: usize) -> Self {
        DirectedGraph { n_nodes, providers: vec![Vec::new(); n_nodes], n_edges: 0 }
    }

    /// Builds a graph from `(src, dst)` pairs, rejecting self-loops, duplicates
    /// and out-of-range ids.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut providers = vec![Vec::new(); n_nodes];
        for (src, dst) in edges {
            if src >= n_nodes || dst >= n_nodes {
                return Err(Error::Validation(format!(
                    "edge {src}->{dst} references a node outside 0..{n_nodes}"
                )));
            }
            if src == dst {
                return Err(Error::Validation(format!("self-loop on node {src}")));
            }
            providers[dst].push(src as u32);
        }
        Self::from_provider_lists(providers)
    }

    fn from_provider_lists(mut providers: Vec<Vec<u32>>) -> Result<Self> {
        let mut n_edges = 0;
        for (j, list) in providers.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!("duplicate edge {}->{j}", w[0])));
            }
            n_edges += list.len();
        }
        Ok(DirectedGraph { n_nodes: providers.len(), providers, n_edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Sorted in-neighbours of `node`.
    pub fn providers(&self, node: usize) -> &[u32] {
        &self.providers[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.providers[node].len()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.providers[dst].binary_search(&(src as u32)).is_ok()
    }

    /// Out-neighbour lists, computed on demand.
    pub fn successors(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.n_nodes];
        for (dst, list) in self.providers.iter().enumerate() {
            for &src in list {
                out[src as usize].push(dst as u32);
            }
        }
        out
    }

    /// All edges as `(src, dst)`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .providers
            .iter()
            .enumerate()
            .flat_map(|(dst, list)| list.iter().map(move |&src| (src as usize, dst)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Number of nodes for each in-degree.
    pub fn in_degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for list in &self.providers {
            *hist.entry(list.len()).or_insert(0) += 1;
        }
        hist
    }
}

/// Largest edge count a simple digraph on `n_nodes` nodes can hold.
pub fn max_edges(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1)
}

/// Uniformly random simple digraph with exactly `n_edges` edges.
pub fn generate_random_graph(n_nodes: usize, n_edges: usize, seed: u64) -> Result<DirectedGraph> {
    let max = max_edges(n_nodes);
    if n_edges > max {
        return Err(Error::Capacity { nodes: n_nodes, edges: n_edges, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut providers = vec![Vec::new(); n_nodes];
    // Slot s encodes the ordered pair (s / (n-1), s % (n-1)) with the
    // diagonal skipped.
    for slot in index::sample(&mut rng, max, n_edges) {
        let src = slot / (n_nodes - 1);
        let r = slot % (n_nodes - 1);
        let dst = if r < src { r } else { r + 1 };
        providers[dst].push(src as u32);
    }
    DirectedGraph::from_provider_lists(providers)
}

/// Fraction of nodes with each in-degree, `Γ(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    gamma: BTreeMap<usize, f64>,
}

impl DegreeDistribution {
    /// Validates that the fractions are non-negative and sum to one.
    pub fn new(gamma: BTreeMap<usize, f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::Validation("degree distribution is empty".into()));
        }
        if let Some((k, v)) = gamma.iter().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation(format!("gamma[{k}] = {v} is not a valid fraction")));
        }
        let total: f64 = gamma.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("degree fractions sum to {total}, not 1")));
        }
        Ok(DegreeDistribution { gamma })
    }

    pub fn from_histogram(hist: &BTreeMap<usize, usize>) -> Result<Self> {
        let n: usize = hist.values().sum();
        if n == 0 {
            return Err(Error::Validation("degree histogram has no nodes".into()));
        }
        Self::new(hist.iter().map(|(&k, &c)| (k, c as f64 / n as f64)).collect())
    }

    pub fn get(&self, k: usize) -> f64 {
        self.gamma.get(&k).copied().unwrap_or(0.0)
    }

    /// `(k, Γ(k))` pairs in increasing `k`, zero entries included.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.gamma.iter().map(|(&k, &v)| (k, v))
    }

    pub fn as_map(&self) -> &BTreeMap<usize, f64> {
        &self.gamma
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, v)| k as f64 * v).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.iter().filter(|&(_, v)| v > 0.0).map(|(k, _)| k).max().unwrap_or(0)
    }

    /// Integer node counts per degree for a graph of `n_nodes` nodes:
    /// rounded, then fixed up by largest remainder so they sum to `n_nodes`.
    pub fn node_counts(&self, n_nodes: usize) -> BTreeMap<usize, usize> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut remainders = Vec::new();
        for (k, v) in self.iter() {
            let exact = v * n_nodes as f64;
            let floor = exact.floor();
            counts.insert(k, floor as usize);
            remainders.push((exact - floor, k));
        }
        let assigned: usize = counts.values().sum();
        // Largest remainder first; ties go to the smaller degree.
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, k) in remainders.iter().cycle().take(n_nodes.saturating_sub(assigned)) {
            *counts.get_mut(&k).unwrap() += 1;
        }
        counts.retain(|_, c| *c > 0);
        counts
    }
}

/// `k weight` per line (`#` comments allowed); weights are normalized, so
/// node counts work as well as fractions.
pub fn parse_degree_distribution(text: &str) -> Result<DegreeDistribution> {
    let mut weights = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse { line: idx + 1, msg: msg.to_string() };
        let mut it = line.split_whitespace();
        let (Some(k), Some(w), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad("expected `k weight`"));
        };
        let k: usize = k.parse().map_err(|_| bad("degree is not a non-negative integer"))?;
        let w: f64 = w.parse().map_err(|_| bad("weight is not a number"))?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(bad("weight must be finite and non-negative"));
        }
        *weights.entry(k).or_insert(0.0) += w;
    }
    let total: f64 = weights.values().sum();
    if !(total > 0.0) {
        return Err(Error::Validation("degree distribution has no positive weight".into()));
    }
    weights.values_mut().for_each(|w| *w /= total);
    DegreeDistribution::new(weights)
}

/// One `k fraction` line per degree, readable by [`parse_degree_distribution`].
pub fn format_degree_distribution(dist: &DegreeDistribution) -> String {
    dist.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
}

pub fn in_degree_distribution(g: &DirectedGraph) -> DegreeDistribution {
    if g.n_nodes() == 0 {
        return DegreeDistribution { gamma: BTreeMap::from([(0, 1.0)]) };
    }
    DegreeDistribution::from_histogram(&g.in_degree_histogram())
        .expect("histogram of a non-empty graph is a valid distribution")
}

/// Random graph whose in-degree distribution matches `target` exactly.
///
/// Degrees are dealt to a random permutation of the nodes; each node then
/// draws its providers uniformly without replacement. Out-degrees are not
/// controlled.
pub fn build_surrogate(target: &DegreeDistribution, n_nodes: usize, seed: u64) -> Result<DirectedGraph> {
    if n_nodes == 0 {
        return Err(Error::Surrogate { k: 0, nodes: 0, reason: "no nodes".into() });
    }
    let counts = target.node_counts(n_nodes);
    if let Some((&k, _)) = counts.iter().find(|(&k, _)| k >= n_nodes) {
        return Err(Error::Surrogate {
            k,
            nodes: n_nodes,
            reason: format!("at most {} providers are available", n_nodes - 1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degrees: Vec<usize> = counts.iter().flat_map(|(&k, &c)| std::iter::repeat(k).take(c)).collect();
    degrees.shuffle(&mut rng);

    let providers = degrees
        .iter()
        .enumerate()
        .map(|(node, &k)| {
            index::sample(&mut rng, n_nodes - 1, k)
                .into_iter()
                .map(|r| if r < node { r as u32 } else { r as u32 + 1 })
                .collect()
        })
        .collect();
    DirectedGraph::from_provider_lists(providers)
}

/// Parses the edge-list text format.
///
/// With a `# nodes=N` header, tokens must be integer ids in `0..N`. Without
/// one, tokens are arbitrary labels numbered in order of first appearance.
pub fn parse_edge_list(text: &str) -> Result<DirectedGraph> {
    let mut declared: Option<usize> = None;
    let mut raw: Vec<(usize, &str, &str)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("nodes=") {
                let n = value.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad node count {value:?}"),
                })?;
                declared = Some(n);
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => raw.push((lineno, a, b)),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected exactly two fields `src<TAB>dst`".into(),
                })
            }
        }
    }

    let mut edges = Vec::with_capacity(raw.len());
    let n_nodes = match declared {
        Some(n) => {
            for &(lineno, a, b) in &raw {
                let id = |tok: &str| -> Result<usize> {
                    let v: usize = tok.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("node id {tok:?} is not an integer"),
                    })?;
                    if v >= n {
                        return Err(Error::Validation(format!(
                            "line {lineno}: node id {v} out of range for nodes={n}"
                        )));
                    }
                    Ok(v)
                };
                edges.push((lineno, id(a)?, id(b)?));
            }
            n
        }
        None => {
            let mut labels: HashMap<&str, usize> = HashMap::new();
            for &(lineno, a, b) in &raw {
                let next = labels.len();
                let s = *labels.entry(a).or_insert(next);
                let next = labels.len();
                let d = *labels.entry(b).or_insert(next);
                edges.push((lineno, s, d));
            }
            labels.len()
        }
    };

    let mut providers = vec![Vec::new(); n_nodes];
    for &(lineno, s, d) in &edges {
        if s == d {
            return Err(Error::Validation(format!("line {lineno}: self-loop on node {s}")));
        }
        providers[d].push(s as u32);
    }
    DirectedGraph::from_provider_lists(providers)
}

/// Canonical text form: `# nodes=N` header, then edges sorted by `(src, dst)`.
pub fn format_edge_list(g: &DirectedGraph) -> String {
    let mut out = String::with_capacity(g.n_edges() * 8 + 16);
    writeln!(out, "# nodes={}", g.n_nodes()).unwrap();
    for (s, d) in g.edges() {
        writeln!(out, "{s}\t{d}").unwrap();
    }
    out
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<DirectedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text)
}

pub fn save_edge_list(g: &DirectedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_edge_list(g)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degree_distribution_text() {
        let d = parse_degree_distribution("# counts\n0 1\n2 3 # trailing\n\n").unwrap();
        assert_eq!(d.get(0), 0.25);
        assert_eq!(d.get(2), 0.75);
        assert_eq!(parse_degree_distribution(&format_degree_distribution(&d)).unwrap(), d);
        assert!(parse_degree_distribution("1 0\n").is_err());
        assert!(matches!(parse_degree_distribution("1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_degree_distribution("-1 2\n").is_err());
    }

    #[test]
    fn complete_digraph_on_three_nodes() {
        let g = generate_random_graph(3, 6, 99).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        assert_eq!(in_degree_distribution(&g).as_map(), &BTreeMap::from([(2, 1.0)]));
    }

    #[test]
    fn fig_one_regime_is_constructible() {
        let g = generate_random_graph(200, 1484, 7).unwrap();
        assert_eq!(g.n_edges(), 1484);
        assert!((0..200).all(|j| !g.has_edge(j, j)));
        let mean = in_degree_distribution(&g).mean();
        assert!((mean - 7.42).abs() < 1e-12);
    }

    #[test]
    fn zero_edges_and_capacity() {
        let g = generate_random_graph(5, 0, 1).unwrap();
        assert!((0..5).all(|j| g.providers(j).is_empty()));
        assert_eq!(in_degree_distribution(&g).as_map(), &BTreeMap::from([(0, 1.0)]));
        assert!(matches!(generate_random_graph(3, 7, 1), Err(Error::Capacity { max: 6, .. })));
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let a = generate_random_graph(100, 500, 11).unwrap();
        assert_eq!(a, generate_random_graph(100, 500, 11).unwrap());
        assert_ne!(a.edges(), generate_random_graph(100, 500, 12).unwrap().edges());
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(DirectedGraph::from_edges(3, [(0, 0)]).is_err());
        assert!(DirectedGraph::from_edges(3, [(0, 1), (0, 1)]).is_err());
        assert!(DirectedGraph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn surrogate_forced_cases() {
        let empty = build_surrogate(&DegreeDistribution::new(BTreeMap::from([(0, 1.0)])).unwrap(), 10, 3).unwrap();
        assert_eq!(empty.n_edges(), 0);
        let full = build_surrogate(&DegreeDistribution::new(BTreeMap::from([(9, 1.0)])).unwrap(), 10, 3).unwrap();
        assert_eq!(full.n_edges(), 90);
        assert!((0..10).all(|j| full.in_degree(j) == 9));
    }

    #[test]
    fn surrogate_rejects_unrealizable_degree() {
        let d = DegreeDistribution::new(BTreeMap::from([(1, 0.5), (10, 0.5)])).unwrap();
        match build_surrogate(&d, 10, 0) {
            Err(Error::Surrogate { k, .. }) => assert_eq!(k, 10),
            other => panic!("expected surrogate error, got {other:?}"),
        }
    }

    #[test]
    fn largest_remainder_rounding() {
        let d = DegreeDistribution::new(BTreeMap::from([(1, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 1.0 / 3.0)])).unwrap();
        let c = d.node_counts(10);
        assert_eq!(c.values().sum::<usize>(), 10);
        assert_eq!(c, BTreeMap::from([(1, 4), (2, 3), (3, 3)]));
    }

    #[test]
    fn distribution_validation() {
        assert!(DegreeDistribution::new(BTreeMap::from([(1, 0.5)])).is_err());
        assert!(DegreeDistribution::new(BTreeMap::from([(1, 1.5), (2, -0.5)])).is_err());
        assert!(DegreeDistribution::new(BTreeMap::new()).is_err());
    }

    #[test]
    fn parse_labels_in_first_appearance_order() {
        let g = parse_edge_list("# a comment\nalice\tbob\nbob carol\n\ncarol\talice\n").unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn header_declares_isolated_nodes() {
        let g = parse_edge_list("# nodes=5\n0\t1\n").unwrap();
        assert_eq!(g.n_nodes(), 5);
        assert_eq!(g.n_edges(), 1);
        let header_only = parse_edge_list(&format_edge_list(&DirectedGraph::empty(5))).unwrap();
        assert_eq!(header_only, DirectedGraph::empty(5));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_edge_list("0\t1\n1\t2\t3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_edge_list("# nodes=3\n0\t1\n2\tx\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_edge_list("# nodes=3\n0\t3\n"), Err(Error::Validation(_))));
    }

    #[test]
    fn file_round_trip() {
        let g = generate_random_graph(50, 200, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        save_edge_list(&g, &path).unwrap();
        assert_eq!(load_edge_list(&path).unwrap(), g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn distribution_mean_is_edge_density(n in 1usize..60, frac in 0.0f64..1.0, seed: u64) {
            let e = (frac * max_edges(n) as f64) as usize;
            let g = generate_random_graph(n, e, seed).unwrap();
            let hist = g.in_degree_histogram();
            prop_assert_eq!(hist.values().sum::<usize>(), n);
            prop_assert_eq!(hist.iter().map(|(k, c)| k * c).sum::<usize>(), e);
            let d = in_degree_distribution(&g);
            prop_assert!((d.iter().map(|(_, v)| v).sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn surrogate_reproduces_target(n in 2usize..80, frac in 0.0f64..0.5, seed: u64) {
            let e = (frac * max_edges(n) as f64) as usize;
            let g = generate_random_graph(n, e, seed).unwrap();
            let target = in_degree_distribution(&g);
            let s = build_surrogate(&target, n, seed ^ 0x5eed).unwrap();
            prop_assert_eq!(s.in_degree_histogram(), g.in_degree_histogram());
            prop_assert_eq!(in_degree_distribution(&s), target);
        }

        #[test]
        fn text_round_trip(n in 1usize..40, frac in 0.0f64..1.0, seed: u64) {
            let e = (frac * max_edges(n) as f64) as usize;
            let g = generate_random_graph(n, e, seed).unwrap();
            prop_assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g);
        }
    }
}
