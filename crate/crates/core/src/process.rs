//! The random partial Steiner system process.
//!
//! Candidate r-sets arrive in the order of a uniform random permutation of
//! all `C(n, r)` r-sets; each is accepted iff it keeps the system partial
//! Steiner. Stage `m` is the system after `m` acceptances.
//!
//! The permutation is generated lazily: i.i.d. uniform r-sets are drawn and
//! any r-set seen before is skipped. Conditioned on the set of r-sets seen so
//! far, the next new one is uniform over the rest, which is exactly the law
//! of the next entry of a uniform permutation.

use std::collections::HashSet;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_u64, rng_from_seed, sample_uniform_rset, Params, SimRng};
use crate::error::{Error, Result};
use crate::hypergraph::{subset_key, AddOutcome, PartialSystem, RSet, SubsetKey, Vertex};

/// Saturation runs must enumerate every r-set, so they are limited to this many.
pub const SATURATION_LIMIT: u64 = 10_000_000;

/// Disjoint sets over the vertices `1..=n`.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    component_count: usize,
}

impl UnionFind {
    pub fn new(n: u32) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n as usize],
            component_count: n as usize,
        }
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    fn root(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    pub fn find(&mut self, v: Vertex) -> Vertex {
        self.root(v - 1) + 1
    }

    pub fn union(&mut self, a: Vertex, b: Vertex) -> bool {
        let (x, y) = (self.root(a - 1), self.root(b - 1));
        if x == y {
            return false;
        }
        let (x, y) = if self.rank[x as usize] < self.rank[y as usize] { (y, x) } else { (x, y) };
        self.parent[y as usize] = x;
        if self.rank[x as usize] == self.rank[y as usize] {
            self.rank[x as usize] += 1;
        }
        self.component_count -= 1;
        true
    }

    pub fn union_edge(&mut self, e: &RSet) {
        let v = e.vertices();
        for &w in &v[1..] {
            self.union(v[0], w);
        }
    }
}

/// Uniform random permutation of all r-sets, generated on demand.
pub struct LazyPermutation {
    params: Params,
    total: u64,
    seen: HashSet<SubsetKey>,
    draws: u64,
    duplicates: u64,
}

impl LazyPermutation {
    pub fn new(params: Params) -> Self {
        LazyPermutation {
            params,
            total: params.total_rsets_u64().unwrap_or(u64::MAX),
            seen: HashSet::new(),
            draws: 0,
            duplicates: 0,
        }
    }

    /// The next r-set of the permutation, or `None` once all have appeared.
    pub fn next_rset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<RSet> {
        if self.seen.len() as u64 >= self.total {
            return None;
        }
        loop {
            let e = sample_uniform_rset(&self.params, rng);
            self.draws += 1;
            if self.seen.insert(subset_key(e.vertices(), self.params.n())) {
                return Some(e);
            }
            self.duplicates += 1;
        }
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn seen(&self) -> u64 {
        self.seen.len() as u64
    }

    pub fn is_exhausted(&self) -> bool {
        self.seen.len() as u64 >= self.total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    AtConnectivity,
    AtEdgeCount(u64),
    AtSaturation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessTrace {
    pub params: Params,
    pub seed: u64,
    pub accepted: Vec<RSet>,
    pub tau_o: Option<u64>,
    pub tau_c: Option<u64>,
    pub draws_total: u64,
    pub rejections: u64,
    pub duplicates_skipped: u64,
    pub saturated: bool,
}

/// Runs the process from `seed` until the stop rule fires or every r-set has
/// been examined.
pub fn run_process(params: Params, seed: u64, stop: StopRule) -> Result<ProcessTrace> {
    run_process_with(params, seed, &mut rng_from_seed(seed), stop)
}

/// [`run_process`] on a caller-supplied generator; `seed` is only recorded.
pub fn run_process_with(params: Params, seed: u64, rng: &mut SimRng, stop: StopRule) -> Result<ProcessTrace> {
    match stop {
        StopRule::AtEdgeCount(m) => {
            let n_total = params.total_rsets_u64().unwrap_or(u64::MAX);
            if m > n_total {
                return Err(Error::Domain(format!("m = {m} exceeds the {n_total} r-sets")));
            }
            let (n, r, ell) = (params.n() as u64, params.r() as u64, params.ell() as u64);
            let cap = binomial_u64(n, ell) / binomial_u64(r, ell);
            if m > cap {
                return Err(Error::Domain(format!(
                    "m = {m} exceeds C(n,ell)/C(r,ell) = {cap}, the largest possible partial system"
                )));
            }
        }
        StopRule::AtSaturation => match params.total_rsets_u64() {
            Some(t) if t <= SATURATION_LIMIT => {}
            _ => {
                return Err(Error::Infeasible(format!(
                    "saturation needs all C(n,r) r-sets; limit is {SATURATION_LIMIT}"
                )))
            }
        },
        StopRule::AtConnectivity => {}
    }

    let n = params.n();
    let mut sys = PartialSystem::new(params);
    let mut uf = UnionFind::new(n);
    let mut perm = LazyPermutation::new(params);
    let mut trace = ProcessTrace {
        params,
        seed,
        accepted: Vec::new(),
        tau_o: None,
        tau_c: None,
        draws_total: 0,
        rejections: 0,
        duplicates_skipped: 0,
        saturated: false,
    };

    loop {
        let done = match stop {
            StopRule::AtConnectivity => trace.tau_c.is_some(),
            StopRule::AtEdgeCount(m) => trace.accepted.len() as u64 >= m,
            StopRule::AtSaturation => false,
        };
        if done {
            break;
        }
        let Some(e) = perm.next_rset(rng) else {
            trace.saturated = true;
            break;
        };
        match sys.try_add(e.clone())? {
            AddOutcome::Rejected(_) => trace.rejections += 1,
            AddOutcome::Added(_) => {
                uf.union_edge(&e);
                trace.accepted.push(e);
                let stage = trace.accepted.len() as u64;
                if trace.tau_o.is_none() && sys.zero_degree_count() == 0 {
                    trace.tau_o = Some(stage);
                }
                if trace.tau_c.is_none() && uf.component_count() == 1 {
                    trace.tau_c = Some(stage);
                    assert!(trace.tau_o.is_some(), "connected with an isolated vertex");
                }
            }
        }
    }
    trace.draws_total = perm.draws();
    trace.duplicates_skipped = perm.duplicates();
    Ok(trace)
}

/// The system formed by the first `m` accepted edges.
pub fn stage_snapshot(trace: &ProcessTrace, m: u64) -> Result<PartialSystem> {
    if m > trace.accepted.len() as u64 {
        return Err(Error::Domain(format!(
            "stage {m} beyond the {} accepted edges",
            trace.accepted.len()
        )));
    }
    PartialSystem::from_edges(trace.params, &trace.accepted[..m as usize])
}

/// One JSONL line per trial; unreached hitting times are `null`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seed: u64,
    pub n: u32,
    pub r: u32,
    pub ell: u32,
    pub tau_o: Option<u64>,
    pub tau_c: Option<u64>,
    pub draws_total: u64,
    pub rejections: u64,
}

impl From<&ProcessTrace> for TraceRecord {
    fn from(t: &ProcessTrace) -> Self {
        TraceRecord {
            seed: t.seed,
            n: t.params.n(),
            r: t.params.r(),
            ell: t.params.ell(),
            tau_o: t.tau_o,
            tau_c: t.tau_c,
            draws_total: t.draws_total,
            rejections: t.rejections,
        }
    }
}

pub fn write_trace_jsonl<W: Write>(mut out: W, trace: &ProcessTrace) -> Result<()> {
    let line = serde_json::to_string(&TraceRecord::from(trace)).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{all_rsets, trial_seed};
    use crate::hypergraph::Hypergraph;
    use crate::stats::chi_square_uniformity;
    use std::collections::HashMap;

    fn p(n: u32, r: u32, ell: u32) -> Params {
        Params::new(n, r, ell).unwrap()
    }

    fn rs(v: &[u32]) -> RSet {
        RSet::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn union_find_examples() {
        let mut uf = UnionFind::new(5);
        uf.union_edge(&rs(&[1, 2, 3]));
        assert_eq!(uf.component_count(), 3);
        uf.union_edge(&rs(&[1, 2, 3]));
        assert_eq!(uf.component_count(), 3);
        uf.union_edge(&rs(&[3, 4, 5]));
        assert_eq!(uf.component_count(), 1);
        assert_eq!(uf.find(5), uf.find(1));
    }

    #[test]
    fn trivial_runs() {
        let t = run_process(p(3, 3, 2), 1, StopRule::AtConnectivity).unwrap();
        assert_eq!(t.accepted.len(), 1);
        assert_eq!((t.tau_o, t.tau_c), (Some(1), Some(1)));

        let t = run_process(p(4, 3, 2), 9, StopRule::AtSaturation).unwrap();
        assert_eq!(t.accepted.len(), 1);
        assert_eq!((t.tau_o, t.tau_c), (None, None));
        assert!(t.saturated);
        assert_eq!(t.rejections, 3);

        let a = run_process(p(30, 3, 2), 77, StopRule::AtConnectivity).unwrap();
        let b = run_process(p(30, 3, 2), 77, StopRule::AtConnectivity).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stop_rule_errors() {
        assert!(matches!(
            run_process(p(5, 3, 2), 0, StopRule::AtEdgeCount(11)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            run_process(p(2000, 3, 2), 0, StopRule::AtSaturation),
            Err(Error::Infeasible(_))
        ));
        let t = run_process(p(20, 3, 2), 4, StopRule::AtEdgeCount(30)).unwrap();
        assert_eq!(t.accepted.len(), 30);
    }

    #[test]
    fn saturation_before_connectivity() {
        // (7,3,2) saturates at a maximal system; some seeds stay disconnected
        for seed in 0..50 {
            let t = run_process(p(7, 3, 2), seed, StopRule::AtConnectivity).unwrap();
            assert!(t.tau_c.is_some() || t.saturated);
        }
    }

    #[test]
    fn snapshots_and_replay() {
        let t = run_process(p(25, 3, 2), 5, StopRule::AtConnectivity).unwrap();
        assert_eq!(stage_snapshot(&t, 0).unwrap().edge_count(), 0);
        let full = stage_snapshot(&t, t.accepted.len() as u64).unwrap();
        assert_eq!(full.edge_count(), t.accepted.len());
        assert!(stage_snapshot(&t, t.accepted.len() as u64 + 1).is_err());
        let tau_o = t.tau_o.unwrap();
        assert_eq!(stage_snapshot(&t, tau_o).unwrap().isolated_count(), 0);
        assert!(stage_snapshot(&t, tau_o - 1).unwrap().isolated_count() >= 1);
        assert!(full.to_general_graph().is_partial_steiner());
    }

    fn bfs_connected(n: u32, edges: &[RSet]) -> bool {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n as usize + 1];
        for (i, e) in edges.iter().enumerate() {
            for &v in e.vertices() {
                incident[v as usize].push(i);
            }
        }
        let mut seen_v = vec![false; n as usize + 1];
        let mut seen_e = vec![false; edges.len()];
        let mut queue = vec![1u32];
        seen_v[1] = true;
        while let Some(v) = queue.pop() {
            for &i in &incident[v as usize] {
                if !seen_e[i] {
                    seen_e[i] = true;
                    for &w in edges[i].vertices() {
                        if !seen_v[w as usize] {
                            seen_v[w as usize] = true;
                            queue.push(w);
                        }
                    }
                }
            }
        }
        seen_v[1..].iter().all(|&b| b)
    }

    #[test]
    fn hitting_times_match_from_scratch_checks() {
        for (i, params) in [p(9, 3, 2), p(12, 3, 2), p(20, 4, 2), p(30, 3, 2), p(30, 4, 3), p(16, 5, 2)]
            .into_iter()
            .enumerate()
        {
            for trial in 0..20 {
                let t = run_process(params, trial_seed(i as u64, trial), StopRule::AtConnectivity).unwrap();
                let mut tau_c = None;
                let mut tau_o = None;
                for m in 1..=t.accepted.len() {
                    let edges = &t.accepted[..m];
                    let snap = PartialSystem::from_edges(params, edges).unwrap();
                    if tau_o.is_none() && snap.isolated_count() == 0 {
                        tau_o = Some(m as u64);
                    }
                    if tau_c.is_none() && bfs_connected(params.n(), edges) {
                        tau_c = Some(m as u64);
                    }
                }
                assert_eq!(t.tau_c, tau_c);
                assert_eq!(t.tau_o, tau_o);
                if let (Some(o), Some(c)) = (t.tau_o, t.tau_c) {
                    assert!(o <= c);
                }
            }
        }
    }

    #[test]
    fn lazy_permutation_is_uniform_at_n4() {
        let params = p(4, 3, 2);
        let pool = all_rsets(4, 3);
        let mut orders: HashMap<Vec<usize>, u64> = HashMap::new();
        let mut first_accepted = [0u64; 4];
        let seeds = 100_000;
        for s in 0..seeds {
            let mut rng = rng_from_seed(trial_seed(4242, s));
            let mut perm = LazyPermutation::new(params);
            let mut order = Vec::new();
            while let Some(e) = perm.next_rset(&mut rng) {
                order.push(pool.iter().position(|x| *x == e).unwrap());
            }
            let trace = run_process(params, trial_seed(4242, s), StopRule::AtSaturation).unwrap();
            assert_eq!(trace.accepted, vec![pool[order[0]].clone()]);
            first_accepted[order[0]] += 1;
            *orders.entry(order).or_default() += 1;
        }
        assert_eq!(orders.len(), 24);
        let counts: Vec<u64> = orders.values().copied().collect();
        let c = chi_square_uniformity(&counts, 24).unwrap();
        assert!(c.p_value > 1e-3, "orderings p = {}", c.p_value);
        let c = chi_square_uniformity(&first_accepted, 4).unwrap();
        assert!(c.p_value > 1e-3, "first edge p = {}", c.p_value);
    }

    #[test]
    fn jsonl_record() {
        let t = run_process(p(4, 3, 2), 2, StopRule::AtSaturation).unwrap();
        let mut buf = Vec::new();
        write_trace_jsonl(&mut buf, &t).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.ends_with('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["tau_c"], serde_json::Value::Null);
        assert_eq!(v["n"], 4);
        assert_eq!(v["rejections"], 3);
    }
}
