//! Networks bundled with the crate, as edge-list files under `data/`.
//! See `data/README.md` for where each one comes from.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, DirectedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dataset {
    /// Zachary's karate club, each tie as two directed edges (34 nodes, 156 edges).
    Karate,
    /// Prison friendship network stand-in (67 nodes, 182 edges).
    Prison,
    /// Physician advice network stand-in (246 nodes, 480 edges).
    PhysicianAdvice,
    /// Physician discussion network stand-in (246 nodes, 565 edges).
    PhysicianDiscussion,
}

impl Dataset {
    pub const ALL: [Dataset; 4] =
        [Dataset::Karate, Dataset::Prison, Dataset::PhysicianAdvice, Dataset::PhysicianDiscussion];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Karate => "karate",
            Dataset::Prison => "prison",
            Dataset::PhysicianAdvice => "physician-advice",
            Dataset::PhysicianDiscussion => "physician-discussion",
        }
    }

    /// Raw edge-list text.
    pub fn text(self) -> &'static str {
        match self {
            Dataset::Karate => include_str!("../data/karate.tsv"),
            Dataset::Prison => include_str!("../data/prison.tsv"),
            Dataset::PhysicianAdvice => include_str!("../data/physician_advice.tsv"),
            Dataset::PhysicianDiscussion => include_str!("../data/physician_discussion.tsv"),
        }
    }

    pub fn graph(self) -> Result<DirectedGraph> {
        parse_edge_list(self.text())
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.name() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown dataset {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sizes() {
        let expect = [(Dataset::Karate, 34, 156), (Dataset::Prison, 67, 182), (Dataset::PhysicianAdvice, 246, 480), (Dataset::PhysicianDiscussion, 246, 565)];
        for (d, n, e) in expect {
            let g = d.graph().unwrap();
            assert_eq!((g.n_nodes(), g.n_edges()), (n, e), "{d}");
        }
    }

    #[test]
    fn karate_is_symmetric() {
        let g = Dataset::Karate.graph().unwrap();
        assert!(g.edges().iter().all(|&(s, d)| g.has_edge(d, s)));
    }
}
