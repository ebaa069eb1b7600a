use std::cmp::Ordering;

/// The `n_edges` ordered pairs with the highest scores from a row-major
/// `n_nodes x n_nodes` matrix, best first. Ties go to the lexicographically
/// smaller `(i, j)`. The diagonal and non-finite scores are never selected.
pub fn select_edges(n_nodes: usize, scores: &[f64], n_edges: usize) -> Vec<(usize, usize)> {
    assert_eq!(scores.len(), n_nodes * n_nodes, "score matrix must be n_nodes x n_nodes");
    let mut candidates: Vec<(f64, u32, u32)> = scores
        .iter()
        .enumerate()
        .filter_map(|(idx, &s)| {
            let (i, j) = (idx / n_nodes, idx % n_nodes);
            (i != j && s.is_finite()).then_some((s, i as u32, j as u32))
        })
        .collect();
    let order = |a: &(f64, u32, u32), b: &(f64, u32, u32)| -> Ordering {
        b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    };
    let keep = n_edges.min(candidates.len());
    if keep < candidates.len() && keep > 0 {
        candidates.select_nth_unstable_by(keep - 1, order);
    }
    candidates.truncate(keep);
    candidates.sort_unstable_by(order);
    candidates.into_iter().map(|(_, i, j)| (i as usize, j as usize)).collect()
}
