//! Brute-force ground truth on tiny instances.
//!
//! Systems are counted by depth-first search over r-sets in a fixed order,
//! adding only r-sets later in the order than the previous one, so every
//! unordered system is reached exactly once.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{all_rsets, binomial_u64, sample_uniform_rset, Params};
use crate::error::{Error, Result};
use crate::formulas::log_acceptance_asymptotic;
use crate::hypergraph::{GeneralGraph, Hypergraph, PartialSystem, RSet, Vertex};
use crate::process::UnionFind;

/// Largest `C(n, r)` the counting oracle accepts.
pub const MAX_RSETS: u64 = 10_000;
/// Default limit on DFS work: one unit per node plus one per candidate scanned at a leaf.
pub const NODE_BUDGET: u64 = 1_000_000_000;
/// Smallest predicted acceptance probability the rejection sampler accepts.
pub const ACCEPTANCE_FLOOR: f64 = 1e-6;

/// Colex ranks of ell-subsets of `[n]`.
#[derive(Clone, Debug)]
struct EllRanker {
    ell: usize,
    /// `binom[v][i] = C(v, i)` for `v < n`, `i <= ell`.
    binom: Vec<Vec<u64>>,
    total: u64,
}

impl EllRanker {
    fn new(params: &Params) -> Self {
        let (n, ell) = (params.n() as u64, params.ell() as u64);
        let binom = (0..n).map(|v| (0..=ell).map(|i| binomial_u64(v, i)).collect()).collect();
        EllRanker {
            ell: ell as usize,
            binom,
            total: binomial_u64(n, ell),
        }
    }

    fn rank(&self, labels: &[Vertex]) -> u64 {
        labels
            .iter()
            .enumerate()
            .map(|(i, &v)| self.binom[(v - 1) as usize][i + 1])
            .sum()
    }

    fn ranks(&self, e: &RSet) -> Vec<u32> {
        let v = e.vertices();
        let r = v.len();
        let mut idx: Vec<usize> = (0..self.ell).collect();
        let mut out = Vec::new();
        let mut buf = vec![0; self.ell];
        loop {
            for (b, &i) in buf.iter_mut().zip(&idx) {
                *b = v[i];
            }
            out.push(self.rank(&buf) as u32);
            let mut j = self.ell;
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                if idx[j] < r - self.ell + j {
                    idx[j] += 1;
                    for k in j + 1..self.ell {
                        idx[k] = idx[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

/// All r-sets with their ell-subset ranks.
struct Table {
    rsets: Vec<RSet>,
    ranks: Vec<Vec<u32>>,
    n_ell: usize,
}

impl Table {
    fn new(params: &Params) -> Result<Self> {
        let total = params.total_rsets_u64().unwrap_or(u64::MAX);
        if total > MAX_RSETS {
            return Err(Error::Infeasible(format!(
                "C(n,r) = {} exceeds the exact-oracle limit {MAX_RSETS}",
                params.total_rsets()
            )));
        }
        let ranker = EllRanker::new(params);
        let rsets = all_rsets(params.n(), params.r());
        let ranks = rsets.iter().map(|e| ranker.ranks(e)).collect();
        Ok(Table {
            rsets,
            ranks,
            n_ell: ranker.total as usize,
        })
    }

    fn fits(&self, i: usize, occ: &[bool]) -> bool {
        self.ranks[i].iter().all(|&k| !occ[k as usize])
    }

    fn mark(&self, i: usize, occ: &mut [bool], on: bool) {
        for &k in &self.ranks[i] {
            occ[k as usize] = on;
        }
    }
}

struct Budget {
    nodes: AtomicU64,
    limit: u64,
    blown: AtomicBool,
}

impl Budget {
    fn new(limit: u64) -> Self {
        Budget {
            nodes: AtomicU64::new(0),
            limit,
            blown: AtomicBool::new(false),
        }
    }

    /// Charges `work` units; leaf scans cost one unit per candidate.
    fn charge(&self, work: u64) -> Result<()> {
        if self.blown.load(Ordering::Relaxed) || self.nodes.fetch_add(work, Ordering::Relaxed) >= self.limit {
            self.blown.store(true, Ordering::Relaxed);
            return Err(Error::Infeasible(format!("search exceeded {} work units", self.limit)));
        }
        Ok(())
    }
}

fn dfs(t: &Table, order: &[usize], start: usize, remain: u64, occ: &mut [bool], budget: &Budget) -> Result<u128> {
    if remain == 0 {
        return Ok(1);
    }
    budget.charge(1)?;
    if remain == 1 {
        budget.charge((order.len() - start) as u64)?;
        return Ok(order[start..].iter().filter(|&&i| t.fits(i, occ)).count() as u128);
    }
    let mut total = 0u128;
    for pos in start..order.len() {
        if ((order.len() - pos) as u64) < remain {
            break;
        }
        let i = order[pos];
        if t.fits(i, occ) {
            t.mark(i, occ, true);
            let sub = dfs(t, order, pos + 1, remain - 1, occ, budget);
            t.mark(i, occ, false);
            total += sub?;
        }
    }
    Ok(total)
}

fn count_from(t: &Table, order: &[usize], occ: Vec<bool>, m: u64, budget: &Budget) -> Result<u128> {
    if m == 0 {
        return Ok(1);
    }
    (0..order.len())
        .into_par_iter()
        .map(|pos| {
            let i = order[pos];
            if !t.fits(i, &occ) {
                return Ok(0);
            }
            let mut local = occ.clone();
            t.mark(i, &mut local, true);
            dfs(t, order, pos + 1, m - 1, &mut local, budget)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `|S(n,r,ell;m)|`.
pub fn count_systems(params: &Params, m: u64) -> Result<BigUint> {
    count_systems_budgeted(params, m, NODE_BUDGET)
}

pub fn count_systems_budgeted(params: &Params, m: u64, node_limit: u64) -> Result<BigUint> {
    let t = Table::new(params)?;
    let order: Vec<usize> = (0..t.rsets.len()).collect();
    let occ = vec![false; t.n_ell];
    Ok(BigUint::from(count_from(&t, &order, occ, m, &Budget::new(node_limit))?))
}

/// [`count_systems`] with the DFS visiting r-sets in `order` (a permutation
/// of the lexicographic indices `0..C(n,r)`).
pub fn count_systems_with_order(params: &Params, m: u64, order: &[usize]) -> Result<BigUint> {
    let t = Table::new(params)?;
    let mut seen = vec![false; t.rsets.len()];
    if order.len() != t.rsets.len() || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Usage("order is not a permutation of the r-set indices".into()));
    }
    let occ = vec![false; t.n_ell];
    Ok(BigUint::from(count_from(&t, order, occ, m, &Budget::new(NODE_BUDGET))?))
}

/// `|{H in S(n,r,ell;m) : K ⊆ H}|`; 0 when `K` is not itself a partial system.
pub fn count_systems_containing(params: &Params, m: u64, k: &[RSet]) -> Result<BigUint> {
    let t = Table::new(params)?;
    for e in k {
        e.check(params)?;
    }
    let kg = match GeneralGraph::new(*params, k.to_vec()) {
        Ok(g) => g,
        Err(_) => return Err(Error::Usage("K has a repeated edge".into())),
    };
    if !kg.is_partial_steiner() || k.len() as u64 > m {
        return Ok(BigUint::zero());
    }
    let ranker = EllRanker::new(params);
    let mut occ = vec![false; t.n_ell];
    for e in k {
        for r in ranker.ranks(e) {
            occ[r as usize] = true;
        }
    }
    let order: Vec<usize> = (0..t.rsets.len()).collect();
    Ok(BigUint::from(count_from(
        &t,
        &order,
        occ,
        m - k.len() as u64,
        &Budget::new(NODE_BUDGET),
    )?))
}

/// `P[K ⊆ H]` for `H` uniform on `S(n,r,ell;m)`.
pub fn exact_containment_prob(params: &Params, m: u64, k: &[RSet]) -> Result<BigRational> {
    let total = count_systems(params, m)?;
    if total.is_zero() {
        return Err(Error::Domain(format!("S({params}; {m}) is empty")));
    }
    let hit = count_systems_containing(params, m, k)?;
    Ok(BigRational::new(hit.into(), total.into()))
}

/// `P[vertices 1..=h all have degree 0] = |S(n-h,r,ell;m)| / |S(n,r,ell;m)|`.
pub fn exact_deg_zero_prob(params: &Params, m: u64, h: u32) -> Result<BigRational> {
    let n = params.n();
    if h > n {
        return Err(Error::Usage(format!("h = {h} exceeds n = {n}")));
    }
    if m == 0 {
        return Ok(BigRational::one());
    }
    let total = count_systems(params, m)?;
    if total.is_zero() {
        return Err(Error::Domain(format!("S({params}; {m}) is empty")));
    }
    if n - h < params.r() {
        return Ok(BigRational::zero());
    }
    let rest = count_systems(&params.with_n(n - h)?, m)?;
    Ok(BigRational::new(rest.into(), total.into()))
}

/// Every system of `S(n,r,ell;m)` as a lexicographically sorted edge list,
/// in lexicographic order of those lists.
pub fn enumerate_systems(params: &Params, m: u64) -> Result<Vec<Vec<RSet>>> {
    let t = Table::new(params)?;
    let budget = Budget::new(NODE_BUDGET);
    let mut out = Vec::new();
    let mut stack = Vec::new();
    let mut occ = vec![false; t.n_ell];
    fn walk(
        t: &Table,
        start: usize,
        remain: u64,
        occ: &mut [bool],
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<RSet>>,
        budget: &Budget,
    ) -> Result<()> {
        budget.charge(1 + (t.rsets.len() - start) as u64)?;
        if remain == 0 {
            out.push(stack.iter().map(|&i| t.rsets[i].clone()).collect());
            return Ok(());
        }
        for i in start..t.rsets.len() {
            if t.fits(i, occ) {
                t.mark(i, occ, true);
                stack.push(i);
                let res = walk(t, i + 1, remain - 1, occ, stack, out, budget);
                stack.pop();
                t.mark(i, occ, false);
                res?;
            }
        }
        Ok(())
    }
    walk(&t, 0, m, &mut occ, &mut stack, &mut out, &budget)?;
    Ok(out)
}

/// Ownership of ell-sets during one sampling attempt; entries from earlier
/// attempts are invalidated by bumping the generation.
struct Owners {
    ranker: EllRanker,
    stamp: Vec<u32>,
    owner: Vec<u32>,
    generation: u32,
}

impl Owners {
    fn new(params: &Params) -> Self {
        let ranker = EllRanker::new(params);
        let size = ranker.total as usize;
        Owners {
            ranker,
            stamp: vec![0; size],
            owner: vec![0; size],
            generation: 0,
        }
    }

    fn reset(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
    }

    fn get(&self, rank: u32) -> Option<u32> {
        (self.stamp[rank as usize] == self.generation).then(|| self.owner[rank as usize])
    }

    fn set(&mut self, rank: u32, edge: u32) {
        self.stamp[rank as usize] = self.generation;
        self.owner[rank as usize] = edge;
    }
}

/// Uniform sampling from `S(n,r,ell;m)` by rejection.
///
/// An attempt draws r-sets one at a time, redrawing any repeat, so the
/// first `m` distinct ones form a uniform m-subset of all r-sets. The attempt
/// succeeds iff that subset is a partial system; it is abandoned at the first
/// clash since the outcome is already decided.
pub struct UniformSystemSampler {
    params: Params,
    m: u64,
    owners: Owners,
    attempts: u64,
    accepted: u64,
}

impl UniformSystemSampler {
    pub fn new(params: Params, m: u64) -> Result<Self> {
        Self::with_floor(params, m, ACCEPTANCE_FLOOR)
    }

    pub fn with_floor(params: Params, m: u64, floor: f64) -> Result<Self> {
        let total = params.total_rsets_u64().unwrap_or(u64::MAX);
        if m > total {
            return Err(Error::Domain(format!("m = {m} exceeds N = {total}")));
        }
        if m > u32::MAX as u64 {
            return Err(Error::Infeasible(format!("m = {m} too large")));
        }
        let n_ell = binomial_u64(params.n() as u64, params.ell() as u64);
        if n_ell > 1 << 28 {
            return Err(Error::Infeasible(format!("C(n,ell) = {n_ell} too large for the sampler")));
        }
        let p = log_acceptance_asymptotic(&params, m)?.to_f64();
        if p < floor {
            return Err(Error::Infeasible(format!(
                "predicted acceptance {p:.3e} is below the floor {floor:e}"
            )));
        }
        Ok(UniformSystemSampler {
            params,
            m,
            owners: Owners::new(&params),
            attempts: 0,
            accepted: 0,
        })
    }

    /// One attempt: a uniform m-subset of r-sets, returned iff it is a partial
    /// system.
    pub fn attempt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Vec<RSet>> {
        self.attempts += 1;
        self.owners.reset();
        let mut edges: Vec<RSet> = Vec::with_capacity(self.m as usize);
        'draw: while (edges.len() as u64) < self.m {
            let e = sample_uniform_rset(&self.params, rng);
            let ranks = self.owners.ranker.ranks(&e);
            for &k in &ranks {
                if let Some(o) = self.owners.get(k) {
                    if edges[o as usize] == e {
                        continue 'draw;
                    }
                    return None;
                }
            }
            let id = edges.len() as u32;
            for k in ranks {
                self.owners.set(k, id);
            }
            edges.push(e);
        }
        self.accepted += 1;
        Some(edges)
    }

    pub fn sample_edges<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<RSet> {
        loop {
            if let Some(e) = self.attempt(rng) {
                return e;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> PartialSystem {
        let edges = self.sample_edges(rng);
        PartialSystem::from_edges(self.params, &edges).expect("sampled edges form a partial system")
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.attempts as f64
    }
}

pub fn sample_uniform_system<R: Rng + ?Sized>(params: Params, m: u64, rng: &mut R) -> Result<PartialSystem> {
    Ok(UniformSystemSampler::new(params, m)?.sample(rng))
}

/// A uniform r-graph with `m` distinct edges.
pub fn sample_uniform_hypergraph<R: Rng + ?Sized>(params: Params, m: u64, rng: &mut R) -> Result<GeneralGraph> {
    let total = params.total_rsets_u64().unwrap_or(u64::MAX);
    if m > total {
        return Err(Error::Domain(format!("m = {m} exceeds N = {total}")));
    }
    if m.saturating_mul(2) > total {
        let mut all = all_rsets(params.n(), params.r());
        let idx = rand::seq::index::sample(rng, all.len(), m as usize);
        let mut pick: Vec<usize> = idx.into_vec();
        pick.sort_unstable();
        let edges = pick.into_iter().rev().map(|i| all.swap_remove(i)).collect::<Vec<_>>();
        return GeneralGraph::new(params, edges.into_iter().rev().collect());
    }
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(m as usize);
    while (edges.len() as u64) < m {
        let e = sample_uniform_rset(&params, rng);
        if seen.insert(e.clone()) {
            edges.push(e);
        }
    }
    GeneralGraph::new(params, edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentStats {
    /// Vertices.
    pub k: usize,
    /// Edges.
    pub h: usize,
    /// `(r - 1) h - k`.
    pub excess: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCensus {
    /// Components with at least one edge, sorted.
    pub components: Vec<ComponentStats>,
    pub isolated: usize,
}

pub fn component_census<H: Hypergraph>(g: &H) -> ComponentCensus {
    let params = *g.params();
    let n = params.n();
    let mut uf = UnionFind::new(n);
    let mut degree = vec![0u32; n as usize];
    for e in g.edge_iter() {
        uf.union_edge(e);
        for &v in e.vertices() {
            degree[(v - 1) as usize] += 1;
        }
    }
    let mut stats: HashMap<Vertex, (usize, usize)> = HashMap::new();
    for v in 1..=n {
        if degree[(v - 1) as usize] > 0 {
            stats.entry(uf.find(v)).or_default().0 += 1;
        }
    }
    for e in g.edge_iter() {
        stats.get_mut(&uf.find(e.vertices()[0])).expect("edge vertex counted").1 += 1;
    }
    let r = params.r() as i64;
    let mut components: Vec<ComponentStats> = stats
        .into_values()
        .map(|(k, h)| ComponentStats {
            k,
            h,
            excess: (r - 1) * h as i64 - k as i64,
        })
        .collect();
    components.sort_unstable();
    ComponentCensus {
        components,
        isolated: degree.iter().filter(|&&d| d == 0).count(),
    }
}
