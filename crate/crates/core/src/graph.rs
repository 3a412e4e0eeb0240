//! Sparse directed signed graph and its tab-separated text format.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Sparse directed user-user graph with edge signs in {+1, -1}.
///
/// An absent pair encodes a missing (unknown) link. Self-edges are never
/// stored and indices always lie in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedGraph {
    n: usize,
    /// Sorted by `(src, dst)`.
    edges: Vec<(usize, usize, i8)>,
}

impl SignedGraph {
    /// Build a graph from an edge list. Duplicate `(src, dst)` entries keep
    /// the last sign seen.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, i8)>,
    {
        let mut map = BTreeMap::new();
        for (src, dst, sign) in edges {
            if src == dst {
                return Err(Error::validation(format!("self-edge at node {src}")));
            }
            if src >= n || dst >= n {
                return Err(Error::validation(format!(
                    "edge ({src}, {dst}) out of range for n = {n}"
                )));
            }
            if sign != 1 && sign != -1 {
                return Err(Error::validation(format!(
                    "edge ({src}, {dst}) has sign {sign}, expected 1 or -1"
                )));
            }
            map.insert((src, dst), sign);
        }
        Ok(Self {
            n,
            edges: map.into_iter().map(|((s, d), g)| (s, d, g)).collect(),
        })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All stored edges, sorted by `(src, dst)`.
    pub fn edges(&self) -> &[(usize, usize, i8)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn positive_count(&self) -> usize {
        self.edges.iter().filter(|e| e.2 > 0).count()
    }

    pub fn negative_count(&self) -> usize {
        self.edges.iter().filter(|e| e.2 < 0).count()
    }

    /// Stored sign of `(src, dst)`, `None` when the pair is missing.
    pub fn sign(&self, src: usize, dst: usize) -> Option<i8> {
        self.edges
            .binary_search_by_key(&(src, dst), |&(s, d, _)| (s, d))
            .ok()
            .map(|idx| self.edges[idx].2)
    }
}

/// A loaded graph together with ingestion warnings.
#[derive(Debug)]
pub struct GraphLoad {
    pub graph: SignedGraph,
    /// Number of self-edge lines that were dropped.
    pub self_edges_dropped: usize,
}

/// Load a signed graph from lines of `src<TAB>dst<TAB>sign`.
///
/// `n` overrides the inferred user count (`1 + max index seen`). Duplicate
/// pairs keep the last sign; self-edges are dropped and counted.
pub fn load_signed_graph(path: &Path, n: Option<usize>) -> Result<GraphLoad> {
    let text = fs::read_to_string(path)?;
    let mut map: BTreeMap<(usize, usize), i8> = BTreeMap::new();
    let mut max_index = None::<usize>;
    let mut self_edges_dropped = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "source index is not an integer"))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "target index is not an integer"))?;
        let sign: i64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "sign is not an integer"))?;
        if sign != 1 && sign != -1 {
            return Err(Error::validation(format!(
                "{}:{lineno}: sign {sign} is not in {{1, -1}}",
                path.display()
            )));
        }
        max_index = Some(max_index.map_or(src.max(dst), |m| m.max(src).max(dst)));
        if src == dst {
            self_edges_dropped += 1;
            continue;
        }
        map.insert((src, dst), sign as i8);
    }

    let inferred = max_index.map_or(0, |m| m + 1);
    let n = match n {
        Some(n) => {
            if inferred > n {
                return Err(Error::validation(format!(
                    "index {} out of range for given n = {n}",
                    inferred - 1
                )));
            }
            n
        }
        None => inferred,
    };

    let graph = SignedGraph::from_edges(n, map.into_iter().map(|((s, d), g)| (s, d, g)))?;
    Ok(GraphLoad {
        graph,
        self_edges_dropped,
    })
}

/// Write a graph in the `load_signed_graph` format, edges sorted by
/// `(src, dst)`.
pub fn save_signed_graph(graph: &SignedGraph, path: &Path) -> Result<()> {
    let mut out = String::new();
    for &(src, dst, sign) in graph.edges() {
        out.push_str(&format!("{src}\t{dst}\t{sign}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}
