use std::fmt::Write as _;
use std::num::NonZeroU32;
use std::path::Path;

use crate::error::{Error, Result};

/// Activation step of a node in one cascade; `None` means censored (the node
/// had not activated when the cascade was cut off).
pub type ActivationTime = Option<NonZeroU32>;

/// Activation times of every node in every cascade, stored cascade-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeTraceSet {
    n_nodes: usize,
    n_cascades: usize,
    times: Vec<ActivationTime>,
    t_max: u32,
}

impl CascadeTraceSet {
    /// Builds a trace set from per-cascade rows of `n_nodes` times each.
    pub fn from_rows(n_nodes: usize, rows: Vec<Vec<ActivationTime>>) -> Result<Self> {
        let n_cascades = rows.len();
        let mut times = Vec::with_capacity(n_nodes * n_cascades);
        for (c, row) in rows.into_iter().enumerate() {
            if row.len() != n_nodes {
                return Err(Error::Validation(format!(
                    "cascade {c} has {} entries, expected {n_nodes}",
                    row.len()
                )));
            }
            times.extend(row);
        }
        Ok(Self::from_flat(n_nodes, n_cascades, times))
    }

    pub(crate) fn from_flat(n_nodes: usize, n_cascades: usize, times: Vec<ActivationTime>) -> Self {
        debug_assert_eq!(times.len(), n_nodes * n_cascades);
        let t_max = times.iter().flatten().map(|t| t.get()).max().unwrap_or(0);
        CascadeTraceSet { n_nodes, n_cascades, times, t_max }
    }

    /// Convenience constructor from plain integers, `0` meaning censored.
    pub fn from_raw(n_nodes: usize, rows: &[Vec<u32>]) -> Result<Self> {
        Self::from_rows(
            n_nodes,
            rows.iter().map(|r| r.iter().map(|&t| NonZeroU32::new(t)).collect()).collect(),
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_cascades(&self) -> usize {
        self.n_cascades
    }

    /// Largest finite activation time, `0` if every entry is censored.
    pub fn t_max(&self) -> u32 {
        self.t_max
    }

    pub fn cascade(&self, c: usize) -> &[ActivationTime] {
        &self.times[c * self.n_nodes..(c + 1) * self.n_nodes]
    }

    pub fn cascades(&self) -> impl Iterator<Item = &[ActivationTime]> + '_ {
        self.times.chunks(self.n_nodes.max(1)).take(self.n_cascades)
    }

    pub fn time(&self, cascade: usize, node: usize) -> Option<u32> {
        self.times[cascade * self.n_nodes + node].map(NonZeroU32::get)
    }

    pub fn n_censored(&self) -> usize {
        self.times.iter().filter(|t| t.is_none()).count()
    }

    /// The first `n` cascades.
    pub fn truncated(&self, n: usize) -> CascadeTraceSet {
        let n = n.min(self.n_cascades);
        Self::from_flat(self.n_nodes, n, self.times[..n * self.n_nodes].to_vec())
    }

    /// Cascades reordered by `order` (a permutation of cascade indices).
    pub fn permuted(&self, order: &[usize]) -> CascadeTraceSet {
        let times = order.iter().flat_map(|&c| self.cascade(c).iter().copied()).collect();
        Self::from_flat(self.n_nodes, order.len(), times)
    }
}

/// Text form: `# nodes=N cascades=M`, then one line per cascade with the
/// node times separated by single spaces and `-` for censored entries.
pub fn format_traces(traces: &CascadeTraceSet) -> String {
    let mut out = String::with_capacity(traces.times.len() * 3 + 32);
    writeln!(out, "# nodes={} cascades={}", traces.n_nodes, traces.n_cascades).unwrap();
    for row in traces.cascades() {
        for (i, t) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match t {
                Some(t) => write!(out, "{t}").unwrap(),
                None => out.push('-'),
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_traces(text: &str) -> Result<CascadeTraceSet> {
    let mut lines = text.lines().enumerate();
    let (n_nodes, n_cascades) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(Error::Parse { line: 1, msg: "missing `# nodes=N cascades=M` header".into() });
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        break parse_header(line).ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: "expected `# nodes=N cascades=M` header".into(),
        })?;
    };

    let mut times = Vec::with_capacity(n_nodes * n_cascades);
    let mut rows = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let before = times.len();
        for field in line.split_whitespace() {
            let t = if field == "-" {
                None
            } else {
                let v: u32 = field.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad activation time {field:?}"),
                })?;
                Some(NonZeroU32::new(v).ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: "activation times start at 1".into(),
                })?)
            };
            times.push(t);
        }
        if times.len() - before != n_nodes {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {n_nodes} fields, found {}", times.len() - before),
            });
        }
        rows += 1;
    }
    if rows != n_cascades {
        return Err(Error::Validation(format!("header declares {n_cascades} cascades, found {rows}")));
    }
    Ok(CascadeTraceSet::from_flat(n_nodes, n_cascades, times))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let body = line.strip_prefix('#')?;
    let mut nodes = None;
    let mut cascades = None;
    for kv in body.split_whitespace() {
        match kv.split_once('=')? {
            ("nodes", v) => nodes = Some(v.parse().ok()?),
            ("cascades", v) => cascades = Some(v.parse().ok()?),
            _ => return None,
        }
    }
    Some((nodes?, cascades?))
}

pub fn load_traces(path: impl AsRef<Path>) -> Result<CascadeTraceSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_traces(&text)
}

pub fn save_traces(traces: &CascadeTraceSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_traces(traces)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_format_is_exact() {
        let t = CascadeTraceSet::from_raw(3, &[vec![1, 2, 0], vec![3, 1, 1]]).unwrap();
        let s = format_traces(&t);
        assert_eq!(s, "# nodes=3 cascades=2\n1 2 -\n3 1 1\n");
        assert_eq!(t.t_max(), 3);
        assert_eq!(t.n_censored(), 1);
        assert_eq!(parse_traces(&s).unwrap(), t);
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(parse_traces("1 2\n").is_err());
        assert!(matches!(parse_traces("# nodes=2 cascades=1\n1 2 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_traces("# nodes=2 cascades=1\n1 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_traces("# nodes=2 cascades=2\n1 1\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(n in 1usize..12, rows in proptest::collection::vec(proptest::collection::vec(0u32..50, 12), 0..8)) {
            let rows: Vec<Vec<u32>> = rows.into_iter().map(|mut r| { r.truncate(n); r }).collect();
            let t = CascadeTraceSet::from_raw(n, &rows).unwrap();
            let s = format_traces(&t);
            let back = parse_traces(&s).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(format_traces(&back), s);
        }
    }
}
