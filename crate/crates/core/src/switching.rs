//! Forward/reverse cluster switchings and edge displacement/replacement,
//! with exact counters.
//!
//! A forward switching from `H` in `S+(t)` removes a cluster `{e, f}` and
//! inserts, in order, two new edges `g1`, `g2` so that the result lies in
//! `S+(t-1)` with `g1`, `g2` outside every cluster. Concretely each `g`
//! meets every remaining edge and every remaining cluster's vertex set in at
//! most `ell - 1` vertices, and `|g1 ∩ g2| <= ell - 1`. The removed edges may
//! be inserted again.
//!
//! A reverse switching from `H''` in `S+(s)` deletes an ordered pair of
//! non-cluster edges, picks a `(2r - ell)`-set `T` meeting every remaining
//! edge in at most `ell - 1` vertices and every cluster's vertex set in at
//! most one vertex, and places a new cluster with vertex set `T`. It is
//! counted only when `s + 1 <= M`. The two operations are inverse, so summed
//! over each class the counts agree exactly.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::clusters::{capacity_m, classify_splus, ClassLabel};
use crate::combinatorics::{all_rsets, binomial, binomial_u64, Combinations, Params};
use crate::error::{Error, Result};
use crate::formulas::{forward_switchings_predicted, pr_predicted, reverse_switchings_predicted};
use crate::hypergraph::{ell_subsets, sorted_intersection_size, subset_key, GeneralGraph, Hypergraph, RSet, SubsetKey, Vertex};

/// Enumeration limit on candidate r-sets (and on `(2r - ell)`-sets).
pub const MAX_CANDIDATES: u64 = 1_000_000;
/// Work limit for the attribution count used past [`MAX_CANDIDATES`].
pub const ATTRIBUTION_BUDGET: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingCount {
    pub exact: u128,
    pub predicted: f64,
}

impl SwitchingCount {
    pub fn ratio(&self) -> f64 {
        self.exact as f64 / self.predicted
    }
}

fn ell_minus_one_fits(x: &RSet, edges: &[&RSet], spans: &[&[Vertex]], ell: usize, span_limit: usize) -> bool {
    edges.iter().all(|h| x.intersection_size(h) < ell)
        && spans.iter().all(|u| sorted_intersection_size(x.vertices(), u) <= span_limit)
}

fn all_candidates(params: &Params) -> Result<Vec<RSet>> {
    let n_total = params.total_rsets_u64().unwrap_or(u64::MAX);
    if n_total > MAX_CANDIDATES {
        return Err(Error::Infeasible(format!(
            "C(n,r) = {} exceeds the enumeration limit {MAX_CANDIDATES}",
            params.total_rsets()
        )));
    }
    Ok(all_rsets(params.n(), params.r()))
}

/// r-sets distinct from `e_i` with fewer than `ell` vertices in every edge of `g`.
///
/// Counted by enumeration when `C(n,r) <= 10^6`. Otherwise the complement is
/// counted exactly by charging each bad r-set to its lexicographically first
/// ell-subset that lies in some edge.
pub fn count_pr(g: &GeneralGraph, e_i: &RSet) -> Result<SwitchingCount> {
    let params = *g.params();
    e_i.check(&params)?;
    let ell = params.ell() as usize;
    let predicted = pr_predicted(&params, g.edges().len() as u64);
    let good = |x: &RSet| g.edges().iter().all(|h| x.intersection_size(h) < ell);
    let n_total = params
        .total_rsets_u64()
        .ok_or_else(|| Error::Infeasible("C(n,r) does not fit in 64 bits".into()))?;
    let exact = if n_total <= MAX_CANDIDATES {
        let mut comb = Combinations::new(params.n() as usize, params.r() as usize);
        let mut count = 0u64;
        let mut x = Vec::with_capacity(params.r() as usize);
        while let Some(c) = comb.next_ref() {
            x.clear();
            x.extend(c.iter().map(|&i| i as u32 + 1));
            let xs = RSet::from_sorted_unchecked(x.iter().copied());
            if xs != *e_i && good(&xs) {
                count += 1;
            }
        }
        count
    } else {
        let bad = count_bad_by_attribution(g)?;
        n_total - bad - u64::from(good(e_i))
    };
    Ok(SwitchingCount {
        exact: exact as u128,
        predicted,
    })
}

fn count_bad_by_attribution(g: &GeneralGraph) -> Result<u64> {
    let params = *g.params();
    let (n, r, ell) = (params.n(), params.r() as usize, params.ell() as usize);
    let mut covered: HashSet<SubsetKey> = HashSet::new();
    let mut covered_sets: Vec<Vec<Vertex>> = Vec::new();
    for e in g.edges() {
        for s in ell_subsets(e, ell as u32) {
            if covered.insert(subset_key(&s, n)) {
                covered_sets.push(s);
            }
        }
    }
    let per = binomial_u64((n as usize - ell) as u64, (r - ell) as u64);
    let work = (covered_sets.len() as u64).saturating_mul(per).saturating_mul(binomial_u64(r as u64, ell as u64));
    if work > ATTRIBUTION_BUDGET {
        return Err(Error::Infeasible(format!(
            "attribution count needs {work} steps, limit {ATTRIBUTION_BUDGET}"
        )));
    }
    let mut bad = 0u64;
    for l in &covered_sets {
        let rest: Vec<Vertex> = (1..=n).filter(|v| !l.contains(v)).collect();
        let mut comb = Combinations::new(rest.len(), r - ell);
        while let Some(c) = comb.next_ref() {
            let x = RSet::new(l.iter().copied().chain(c.iter().map(|&i| rest[i]))).expect("distinct labels");
            let first = ell_subsets(&x, ell as u32)
                .into_iter()
                .find(|s| covered.contains(&subset_key(s, n)))
                .expect("x contains l");
            if first == *l {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

fn class_of(g: &GeneralGraph) -> (ClassLabel, u64) {
    let cap = capacity_m(g.params(), g.edges().len() as u64);
    (classify_splus(g, cap), cap)
}

fn cluster_pairs(g: &GeneralGraph) -> Vec<(usize, usize)> {
    crate::clusters::cluster_census(g)
        .clusters
        .into_iter()
        .map(|c| (c[0], c[1]))
        .collect()
}

/// Ordered pairs `(x, y)` from `a` with `|x ∩ y| >= ell`, including `x = y`.
///
/// With `c_J` the number of members containing `J`, `S_j = sum_{|J|=j} c_J^2`
/// counts pairs weighted by `C(|x ∩ y|, j)`; inverting that triangular system
/// gives the number `P_i` of pairs meeting in exactly `i` vertices.
fn heavy_pairs(a: &[RSet], n: u32, r: usize, ell: usize) -> u128 {
    let mut s = vec![0u128; r + 1];
    for j in ell..=r {
        let mut counts: HashMap<SubsetKey, u64> = HashMap::new();
        for x in a {
            for sub in ell_subsets(x, j as u32) {
                *counts.entry(subset_key(&sub, n)).or_insert(0) += 1;
            }
        }
        s[j] = counts.values().map(|&c| c as u128 * c as u128).sum();
    }
    let mut p = vec![0u128; r + 1];
    for i in (ell..=r).rev() {
        let mut v = s[i];
        for k in i + 1..=r {
            v -= binomial_u64(k as u64, i as u64) as u128 * p[k];
        }
        p[i] = v;
    }
    p[ell..].iter().sum()
}

/// Valid first insertions after removing cluster `(ci, cj)`.
fn forward_candidates(g: &GeneralGraph, clusters: &[(usize, usize)], which: usize, pool: &[RSet]) -> Vec<RSet> {
    let ell = g.params().ell() as usize;
    let (ci, cj) = clusters[which];
    let edges: Vec<&RSet> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != ci && k != cj)
        .map(|(_, e)| e)
        .collect();
    let spans: Vec<Vec<Vertex>> = clusters
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != which)
        .map(|(_, &(a, b))| g.edges()[a].union(&g.edges()[b]))
        .collect();
    let span_refs: Vec<&[Vertex]> = spans.iter().map(Vec::as_slice).collect();
    pool.iter()
        .filter(|x| ell_minus_one_fits(x, &edges, &span_refs, ell, ell - 1))
        .cloned()
        .collect()
}

/// Number of forward switchings from `g`, against the leading term `t N^2`.
pub fn count_forward_switchings(g: &GeneralGraph) -> Result<SwitchingCount> {
    let params = *g.params();
    let (label, _) = class_of(g);
    let t = label
        .class()
        .ok_or_else(|| Error::Domain(format!("graph is not in any switching class: {label:?}")))?;
    let predicted = forward_switchings_predicted(&params, t as u64);
    if t == 0 {
        return Ok(SwitchingCount { exact: 0, predicted });
    }
    let pool = all_candidates(&params)?;
    let clusters = cluster_pairs(g);
    let (r, ell) = (params.r() as usize, params.ell() as usize);
    let mut exact = 0u128;
    for which in 0..clusters.len() {
        let a = forward_candidates(g, &clusters, which, &pool);
        let size = a.len() as u128;
        exact += size * size - heavy_pairs(&a, params.n(), r, ell);
    }
    Ok(SwitchingCount { exact, predicted })
}

/// Number of reverse switchings from `g` in `S+(s)` into `S+(s+1)`.
pub fn count_reverse_switchings(g: &GeneralGraph) -> Result<SwitchingCount> {
    let params = *g.params();
    let (label, cap) = class_of(g);
    let s = label
        .class()
        .ok_or_else(|| Error::Domain(format!("graph is not in any switching class: {label:?}")))?;
    let m = g.edges().len() as u64;
    let predicted = reverse_switchings_predicted(&params, m, s as u64 + 1);
    if s as u64 + 1 > cap {
        return Ok(SwitchingCount { exact: 0, predicted });
    }
    let (n, r, ell) = (params.n(), params.r(), params.ell());
    let width = (2 * r - ell) as usize;
    if width > n as usize {
        return Ok(SwitchingCount { exact: 0, predicted });
    }
    let n_t = binomial_u64(n as u64, width as u64);
    if n_t > MAX_CANDIDATES * 10 {
        return Err(Error::Infeasible(format!("C(n, 2r-ell) = {n_t} too many sets to enumerate")));
    }
    let clusters = cluster_pairs(g);
    let in_cluster: HashSet<usize> = clusters.iter().flat_map(|&(a, b)| [a, b]).collect();
    let cluster_edges: Vec<&RSet> = in_cluster.iter().map(|&k| &g.edges()[k]).collect();
    let spans: Vec<Vec<Vertex>> = clusters.iter().map(|&(a, b)| g.edges()[a].union(&g.edges()[b])).collect();
    let free: Vec<&RSet> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| !in_cluster.contains(k))
        .map(|(_, e)| e)
        .collect();
    let q = free.len() as u128;
    if q < 2 {
        return Ok(SwitchingCount { exact: 0, predicted });
    }
    let ell_u = ell as usize;
    let mut pairs = 0u128;
    let mut comb = Combinations::new(n as usize, width);
    while let Some(c) = comb.next_ref() {
        let t_set = RSet::from_sorted_unchecked(c.iter().map(|&i| i as u32 + 1));
        if !cluster_edges.iter().all(|h| t_set.intersection_size(h) < ell_u) {
            continue;
        }
        if !spans.iter().all(|u| sorted_intersection_size(t_set.vertices(), u) <= 1) {
            continue;
        }
        let blockers = free.iter().filter(|h| t_set.intersection_size(h) >= ell_u).count();
        pairs += match blockers {
            0 => q * (q - 1),
            1 => 2 * (q - 1),
            2 => 2,
            _ => 0,
        };
    }
    let placements = binomial_u64(width as u64, ell as u64) * binomial_u64((width - ell_u) as u64, (r - ell) as u64) / 2;
    Ok(SwitchingCount {
        exact: pairs * placements as u128,
        predicted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    Forward,
    Reverse,
    Displacement,
    Replacement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchingMove {
    pub kind: MoveKind,
    pub removed: Vec<RSet>,
    pub inserted: Vec<RSet>,
}

fn precondition(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

/// Applies `mv` to `g` after checking every constraint of its kind.
pub fn apply_switching(g: &GeneralGraph, mv: &SwitchingMove) -> Result<GeneralGraph> {
    let params = *g.params();
    let want = match mv.kind {
        MoveKind::Forward | MoveKind::Reverse => 2,
        MoveKind::Displacement | MoveKind::Replacement => 1,
    };
    if mv.removed.len() != want || mv.inserted.len() != want {
        return Err(precondition(format!("{:?} moves remove and insert {want} edge(s)", mv.kind)));
    }
    let mut positions = Vec::new();
    for e in &mv.removed {
        let pos = g
            .edges()
            .iter()
            .position(|x| x == e)
            .ok_or_else(|| precondition(format!("removed edge {e} is not in the graph")))?;
        if positions.contains(&pos) {
            return Err(precondition(format!("edge {e} removed twice")));
        }
        positions.push(pos);
    }
    let mut out = g.without(&positions);
    for e in &mv.inserted {
        e.check(&params)?;
        out = out
            .with_edge(e.clone())
            .map_err(|_| precondition(format!("inserted edge {e} is already present")))?;
    }
    let ell = params.ell() as usize;
    match mv.kind {
        MoveKind::Forward => {
            let t = class_of(g).0.class().ok_or_else(|| precondition("source not in a switching class"))?;
            let clusters = cluster_pairs(g);
            let mut rem = positions.clone();
            rem.sort_unstable();
            if !clusters.iter().any(|&(a, b)| [a, b] == rem[..]) {
                return Err(precondition("removed edges are not a cluster"));
            }
            if class_of(&out).0 != ClassLabel::InClass(t - 1) || touches_cluster(&out, &mv.inserted) {
                return Err(precondition("result is not in the class below with the new edges unclustered"));
            }
        }
        MoveKind::Reverse => {
            let s = class_of(g).0.class().ok_or_else(|| precondition("source not in a switching class"))?;
            let clusters = cluster_pairs(g);
            if positions.iter().any(|p| clusters.iter().any(|&(a, b)| *p == a || *p == b)) {
                return Err(precondition("removed edges must lie outside every cluster"));
            }
            if mv.inserted[0].intersection_size(&mv.inserted[1]) != ell {
                return Err(precondition("inserted edges must share exactly ell vertices"));
            }
            if class_of(&out).0 != ClassLabel::InClass(s + 1) {
                return Err(precondition("result is not in the class above"));
            }
        }
        MoveKind::Displacement | MoveKind::Replacement => {
            if !g.is_partial_steiner() {
                return Err(precondition("source is not a partial system"));
            }
            if mv.kind == MoveKind::Displacement && mv.removed[0] == mv.inserted[0] {
                return Err(precondition("displacement must move the edge elsewhere"));
            }
            if !out.is_partial_steiner() {
                return Err(precondition("inserted edge shares ell vertices with a remaining edge"));
            }
        }
    }
    Ok(out)
}

fn touches_cluster(g: &GeneralGraph, edges: &[RSet]) -> bool {
    let clusters = cluster_pairs(g);
    edges.iter().any(|e| {
        let pos = g.edges().iter().position(|x| x == e);
        clusters.iter().any(|&(a, b)| Some(a) == pos || Some(b) == pos)
    })
}

/// `e_i`-displacements of `g`: move `e_i` to any r-set distinct from it with
/// fewer than `ell` vertices in each remaining edge.
pub fn count_ei_displacements(g: &GeneralGraph, e_i: &RSet) -> Result<SwitchingCount> {
    let pos = g
        .edges()
        .iter()
        .position(|x| x == e_i)
        .ok_or_else(|| Error::Usage(format!("{e_i} is not an edge of the graph")))?;
    count_pr(&g.without(&[pos]), e_i)
}

/// Legal `e_i`-replacements of `g`: remove one unprotected edge so that `e_i`
/// can be inserted and the result is still a partial system.
pub fn count_legal_ei_replacements(g: &GeneralGraph, e_i: &RSet, protected: &[RSet]) -> Result<u64> {
    let params = *g.params();
    e_i.check(&params)?;
    if g.contains_edge(e_i) {
        return Err(Error::Usage(format!("{e_i} is already an edge")));
    }
    if let Some(p) = protected.iter().find(|p| !g.contains_edge(p)) {
        return Err(Error::Usage(format!("protected edge {p} is not in the graph")));
    }
    if !g.is_partial_steiner() {
        return Err(Error::Usage("graph is not a partial system".into()));
    }
    let ell = params.ell() as usize;
    let colliders: Vec<&RSet> = g.edges().iter().filter(|h| h.intersection_size(e_i) >= ell).collect();
    let unprotected = |h: &RSet| !protected.contains(h);
    let distinct_protected = protected.iter().collect::<HashSet<_>>().len() as u64;
    Ok(match colliders.as_slice() {
        [] => g.edges().len() as u64 - distinct_protected,
        [h] if unprotected(h) => 1,
        _ => 0,
    })
}

/// `|S+(t)|` for every `t`, by classifying all m-edge r-graphs.
pub fn exhaustive_class_counts(params: &Params, m: u64) -> Result<BTreeMap<usize, u64>> {
    let pool = all_candidates(params)?;
    let total = binomial(pool.len() as u64, m).to_u64().unwrap_or(u64::MAX);
    if total > 10_000_000 {
        return Err(Error::Infeasible(format!("{total} graphs to classify")));
    }
    let cap = capacity_m(params, m);
    let mut out = BTreeMap::new();
    let mut comb = Combinations::new(pool.len(), m as usize);
    while let Some(idx) = comb.next_ref() {
        let g = GeneralGraph::new(*params, idx.iter().map(|&i| pool[i].clone()).collect())?;
        if let Some(t) = classify_splus(&g, cap).class() {
            *out.entry(t).or_insert(0) += 1;
        }
    }
    Ok(out)
}

/// `(sum of forward counts over S+(t), sum of reverse counts over S+(t-1))`.
pub fn double_counting_sums(params: &Params, m: u64, t: usize) -> Result<(u128, u128)> {
    if t == 0 {
        return Err(Error::Usage("t must be at least 1".into()));
    }
    let pool = all_candidates(params)?;
    let cap = capacity_m(params, m);
    let (mut fwd, mut rev) = (0u128, 0u128);
    let mut comb = Combinations::new(pool.len(), m as usize);
    while let Some(idx) = comb.next_ref() {
        let g = GeneralGraph::new(*params, idx.iter().map(|&i| pool[i].clone()).collect())?;
        match classify_splus(&g, cap).class() {
            Some(c) if c == t => fwd += count_forward_switchings(&g)?.exact,
            Some(c) if c + 1 == t => rev += count_reverse_switchings(&g)?.exact,
            _ => {}
        }
    }
    Ok((fwd, rev))
}
