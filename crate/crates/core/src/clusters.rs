//! Link graph, cluster census and the switching classes `S+(t)`.
//!
//! Two edges are *linked* when they share exactly `ell` vertices. The link
//! graph has the edges of `H` as its vertices; a *cluster* is a connected
//! component of it with at least two members.
//!
//! A graph is in `S+(t)` when
//!  (a) any two edges share at most `ell` vertices,
//!  (b) every cluster is exactly two linked edges `{e, f}`, every other edge
//!      meets `e ∪ f` in at most `ell - 1` vertices, and the vertex sets of
//!      any two clusters share at most one vertex,
//!  (c) it has `t <= M` clusters.

use serde::{Deserialize, Serialize};

use crate::combinatorics::Params;
use crate::hypergraph::{sorted_intersection_size, GeneralGraph, Hypergraph, RSet, Vertex};

pub fn linked(e: &RSet, f: &RSet, ell: u32) -> bool {
    e.intersection_size(f) == ell as usize
}

/// Adjacency over edge positions; symmetric and loop-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkGraph {
    pub adjacency: Vec<Vec<usize>>,
}

impl LinkGraph {
    pub fn pair_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Linked pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.adjacency.iter().enumerate() {
            out.extend(nb.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Connected components with at least two vertices, each sorted, ordered
    /// by smallest member.
    pub fn nontrivial_components(&self) -> Vec<Vec<usize>> {
        let m = self.adjacency.len();
        let mut seen = vec![false; m];
        let mut out = Vec::new();
        for start in 0..m {
            if seen[start] || self.adjacency[start].is_empty() {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < comp.len() {
                let x = comp[head];
                head += 1;
                for &y in &self.adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

pub fn build_link_graph(g: &GeneralGraph) -> LinkGraph {
    let edges = g.edges();
    let ell = g.params().ell();
    let mut adjacency = vec![Vec::new(); edges.len()];
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            if linked(&edges[i], &edges[j], ell) {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    LinkGraph { adjacency }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCensus {
    pub t: usize,
    /// Edge positions of each cluster.
    pub clusters: Vec<Vec<usize>>,
    pub link_pairs: Vec<(usize, usize)>,
}

pub fn cluster_census(g: &GeneralGraph) -> ClusterCensus {
    let lg = build_link_graph(g);
    let clusters = lg.nontrivial_components();
    ClusterCensus {
        t: clusters.len(),
        clusters,
        link_pairs: lg.pairs(),
    }
}

/// `M = ceil(ln n + 3^(ell+2) r^(2 ell) m^2 / (ell! n^ell))`.
pub fn capacity_m(params: &Params, m: u64) -> u64 {
    let (n, r, ell) = (params.n() as f64, params.r() as f64, params.ell() as i32);
    let ell_fact: f64 = (1..=params.ell()).map(|i| i as f64).product();
    let mf = m as f64;
    let term = 3f64.powi(ell + 2) * r.powi(2 * ell) * mf * mf / (ell_fact * n.powi(ell));
    (n.ln() + term).ceil() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterFault {
    /// A link-graph component with three or more edges.
    OversizedCluster,
    /// An edge outside a cluster meets the cluster's vertex set in `>= ell` vertices.
    EdgeMeetsCluster,
    /// The vertex sets of two clusters share two or more vertices.
    ClustersOverlap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassLabel {
    InClass(usize),
    /// Two edges sharing more than `ell` vertices.
    ViolatesA { edges: [usize; 2] },
    ViolatesB { fault: ClusterFault, edges: Vec<usize> },
    ViolatesC { clusters: usize, capacity: u64 },
}

impl ClassLabel {
    pub fn class(&self) -> Option<usize> {
        match self {
            ClassLabel::InClass(t) => Some(*t),
            _ => None,
        }
    }
}

/// Classifies `g` against properties (a)-(c) with cluster capacity `capacity`,
/// reporting the first violated property.
pub fn classify_splus(g: &GeneralGraph, capacity: u64) -> ClassLabel {
    let edges = g.edges();
    let ell = g.params().ell() as usize;
    let mut adjacency = vec![Vec::new(); edges.len()];
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let s = edges[i].intersection_size(&edges[j]);
            if s > ell {
                return ClassLabel::ViolatesA { edges: [i, j] };
            }
            if s == ell {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    let lg = LinkGraph { adjacency };
    let clusters = lg.nontrivial_components();

    for c in &clusters {
        if c.len() > 2 {
            let centre = *c.iter().find(|&&x| lg.adjacency[x].len() >= 2).expect("path in component");
            let mut w = vec![lg.adjacency[centre][0], centre, lg.adjacency[centre][1]];
            w.sort_unstable();
            return ClassLabel::ViolatesB {
                fault: ClusterFault::OversizedCluster,
                edges: w,
            };
        }
    }

    let spans: Vec<Vec<Vertex>> = clusters.iter().map(|c| edges[c[0]].union(&edges[c[1]])).collect();
    for (c, span) in clusters.iter().zip(&spans) {
        for (k, e) in edges.iter().enumerate() {
            if c.contains(&k) {
                continue;
            }
            if sorted_intersection_size(e.vertices(), span) >= ell {
                return ClassLabel::ViolatesB {
                    fault: ClusterFault::EdgeMeetsCluster,
                    edges: vec![c[0], c[1], k],
                };
            }
        }
    }
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            if sorted_intersection_size(&spans[a], &spans[b]) >= 2 {
                return ClassLabel::ViolatesB {
                    fault: ClusterFault::ClustersOverlap,
                    edges: vec![clusters[a][0], clusters[a][1], clusters[b][0], clusters[b][1]],
                };
            }
        }
    }
    if clusters.len() as u64 > capacity {
        return ClassLabel::ViolatesC {
            clusters: clusters.len(),
            capacity,
        };
    }
    ClassLabel::InClass(clusters.len())
}

/// [`classify_splus`] with the capacity `M` computed from the graph's size.
pub fn classify(g: &GeneralGraph) -> ClassLabel {
    classify_splus(g, capacity_m(g.params(), g.edge_count() as u64))
}
