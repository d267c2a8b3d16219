//! Static (single-round) graphs and their exact expansion statistics.
//!
//! Graphs are undirected, simple, on vertices `0..n`. Adjacency is kept as
//! per-vertex bitmasks, which keeps subset enumeration for the isoperimetric
//! number and component closures cheap at the scales exact enumeration is
//! meant for.

use num::bigint::BigInt;
use num::rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default vertex-count cap for exact isoperimetric enumeration.
pub const ISOPERIMETRIC_CAP: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} out of range for n = {1}")]
    VertexOutOfRange(u32, usize),
    #[error("self loop at vertex {0}")]
    SelfLoop(u32),
    #[error("graph on {n} vertices exceeds exact-enumeration cap {cap}")]
    EnumerationCap { n: usize, cap: usize },
    #[error("isoperimetric number undefined for n < 2")]
    TooSmall,
    #[error("share denominator {d} below 2 * max degree {max_degree}")]
    DenominatorTooSmall { d: u64, max_degree: usize },
}

/// One round's communication graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct ConstituentGraph {
    n: usize,
    /// `adj[u]` has bit `v` set iff `{u, v}` is an edge.
    adj: Vec<u64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct GraphRepr {
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl From<ConstituentGraph> for GraphRepr {
    fn from(g: ConstituentGraph) -> Self {
        GraphRepr { n: g.n, edges: g.edges() }
    }
}

impl TryFrom<GraphRepr> for ConstituentGraph {
    type Error = GraphError;
    fn try_from(r: GraphRepr) -> Result<Self, GraphError> {
        ConstituentGraph::new(r.n, &r.edges)
    }
}

impl ConstituentGraph {
    pub fn new(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        assert!(n <= 64, "bitmask adjacency supports up to 64 vertices");
        let mut adj = vec![0u64; n];
        for &(u, v) in edges {
            if u as usize >= n {
                return Err(GraphError::VertexOutOfRange(u, n));
            }
            if v as usize >= n {
                return Err(GraphError::VertexOutOfRange(v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u as usize] |= 1 << v;
            adj[v as usize] |= 1 << u;
        }
        Ok(ConstituentGraph { n, adj })
    }

    pub fn empty(n: usize) -> Self {
        ConstituentGraph::new(n, &[]).expect("empty graph")
    }

    pub fn clique(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                edges.push((u, v));
            }
        }
        ConstituentGraph::new(n, &edges).expect("clique")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (0..n.saturating_sub(1) as u32).map(|u| (u, u + 1)).collect();
        ConstituentGraph::new(n, &edges).expect("path")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3);
        let mut edges: Vec<_> = (0..n as u32 - 1).map(|u| (u, u + 1)).collect();
        edges.push((0, n as u32 - 1));
        ConstituentGraph::new(n, &edges).expect("cycle")
    }

    /// Star with center `c` over the vertex set bits of `members`.
    pub fn star_on(n: usize, c: u32, members: u64) -> Self {
        let mut edges = Vec::new();
        for v in 0..n as u32 {
            if v != c && members & (1 << v) != 0 {
                edges.push((c.min(v), c.max(v)));
            }
        }
        ConstituentGraph::new(n, &edges).expect("star")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for u in 0..self.n as u32 {
            let mut rest = self.adj[u as usize] & !((1u64 << (u + 1)) - 1);
            while rest != 0 {
                let v = rest.trailing_zeros();
                out.push((u, v));
                rest &= rest - 1;
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize] & (1 << v) != 0
    }

    pub fn neighbors_mask(&self, u: usize) -> u64 {
        self.adj[u]
    }

    pub fn neighbors(&self, u: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut rest = self.adj[u];
        while rest != 0 {
            out.push(rest.trailing_zeros());
            rest &= rest - 1;
        }
        out
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(|m| m.count_ones() as usize).min().unwrap_or(0)
    }

    /// Union graph: edge present iff present in any input.
    pub fn union(graphs: &[&ConstituentGraph]) -> ConstituentGraph {
        assert!(!graphs.is_empty());
        let n = graphs[0].n;
        let mut adj = vec![0u64; n];
        for g in graphs {
            assert_eq!(g.n, n, "union over mismatched vertex counts");
            for u in 0..n {
                adj[u] |= g.adj[u];
            }
        }
        ConstituentGraph { n, adj }
    }

    /// Expand `set` to the union of the connected components it touches.
    pub fn component_closure(&self, set: u64) -> u64 {
        let mut cur = set;
        loop {
            let mut next = cur;
            for u in 0..self.n {
                if cur & (1 << u) != 0 {
                    next |= self.adj[u];
                }
            }
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    /// One-hop growth of `set` (the set plus its neighborhood).
    pub fn grow_one_hop(&self, set: u64) -> u64 {
        let mut next = set;
        for u in 0..self.n {
            if set & (1 << u) != 0 {
                next |= self.adj[u];
            }
        }
        next
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let all = full_mask(self.n);
        self.component_closure(1) == all
    }

    /// Number of edges with exactly one endpoint in `set`.
    pub fn boundary_size(&self, set: u64) -> usize {
        let mut cut = 0usize;
        for u in 0..self.n {
            if set & (1 << u) != 0 {
                cut += (self.adj[u] & !set).count_ones() as usize;
            }
        }
        cut
    }

    /// Relabel vertices: vertex `u` becomes `perm[u]`.
    pub fn relabel(&self, perm: &[u32]) -> ConstituentGraph {
        assert_eq!(perm.len(), self.n);
        let edges: Vec<_> = self
            .edges()
            .iter()
            .map(|&(u, v)| (perm[u as usize], perm[v as usize]))
            .collect();
        ConstituentGraph::new(self.n, &edges).expect("relabel")
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            n: self.n,
            edge_count: self.edge_count(),
            min_degree: self.min_degree(),
            max_degree: self.max_degree(),
            connected: self.is_connected(),
            isoperimetric: isoperimetric_number(self).ok().map(|r| r.to_string()),
        }
    }
}

pub fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Summary statistics for one constituent graph. The isoperimetric number is
/// rendered as an exact rational string, absent above the enumeration cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub edge_count: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub connected: bool,
    pub isoperimetric: Option<String>,
}

/// Exact isoperimetric number: the minimum of `|boundary(X)| / |X|` over all
/// nonempty vertex sets with `|X| <= n/2`, by full subset enumeration.
pub fn isoperimetric_number(g: &ConstituentGraph) -> Result<BigRational, GraphError> {
    isoperimetric_number_with_cap(g, ISOPERIMETRIC_CAP)
}

pub fn isoperimetric_number_with_cap(
    g: &ConstituentGraph,
    cap: usize,
) -> Result<BigRational, GraphError> {
    let n = g.n();
    if n < 2 {
        return Err(GraphError::TooSmall);
    }
    if n > cap {
        return Err(GraphError::EnumerationCap { n, cap });
    }
    let half = n / 2;
    // Track the minimum as an integer pair; sizes fit easily in u64.
    let mut best: Option<(u64, u64)> = None;
    for set in 1u64..(1u64 << n) {
        let size = set.count_ones() as usize;
        if size > half {
            continue;
        }
        let cut = g.boundary_size(set) as u64;
        let cand = (cut, size as u64);
        let better = match best {
            None => true,
            Some((bc, bs)) => cand.0 * bs < bc * cand.1,
        };
        if better {
            best = Some(cand);
        }
    }
    let (cut, size) = best.expect("n >= 2 guarantees a candidate");
    Ok(BigRational::new(BigInt::from(cut), BigInt::from(size)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn clique_isoperimetric() {
        // K4: the worst cut takes half the vertices, boundary 4, ratio 2.
        let g = ConstituentGraph::clique(4);
        assert_eq!(isoperimetric_number(&g).unwrap(), rat(2, 1));
    }

    #[test]
    fn path_isoperimetric() {
        // 4-path: cutting one end pair crosses a single edge.
        let g = ConstituentGraph::path(4);
        assert_eq!(isoperimetric_number(&g).unwrap(), rat(1, 2));
    }

    #[test]
    fn k2_isoperimetric() {
        let g = ConstituentGraph::clique(2);
        assert_eq!(isoperimetric_number(&g).unwrap(), rat(1, 1));
    }

    #[test]
    fn six_clique_isoperimetric() {
        let g = ConstituentGraph::clique(6);
        assert_eq!(isoperimetric_number(&g).unwrap(), rat(3, 1));
    }

    #[test]
    fn disconnected_graph_has_zero_expansion() {
        let g = ConstituentGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(isoperimetric_number(&g).unwrap(), rat(0, 1));
        assert!(!g.is_connected());
    }

    #[test]
    fn union_and_closure() {
        let a = ConstituentGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let b = ConstituentGraph::new(4, &[(1, 2), (0, 3)]).unwrap();
        let u = ConstituentGraph::union(&[&a, &b]);
        assert!(u.is_connected());
        assert_eq!(u.edge_count(), 4);
        assert_eq!(a.component_closure(1), 0b0011);
        assert_eq!(u.component_closure(1), 0b1111);
    }

    #[test]
    fn enumeration_cap_enforced() {
        let g = ConstituentGraph::clique(22);
        assert!(matches!(
            isoperimetric_number(&g),
            Err(GraphError::EnumerationCap { n: 22, cap: 20 })
        ));
    }

    #[test]
    fn relabel_preserves_structure() {
        let g = ConstituentGraph::path(4);
        let p = g.relabel(&[3, 2, 1, 0]);
        assert_eq!(isoperimetric_number(&p).unwrap(), rat(1, 2));
        assert!(p.has_edge(3, 2) && p.has_edge(1, 0));
    }
}
