//! r-uniform hypergraphs on `[n]`: the partial Steiner system state with its
//! ell-subset occupancy index, and the unconstrained [`GeneralGraph`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::combinatorics::{Combinations, Params};
use crate::error::{Error, Result};

pub type Vertex = u32;

/// A strictly increasing list of 1-based vertex labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct RSet(SmallVec<[Vertex; 8]>);

impl RSet {
    /// Sorts the labels; rejects label 0 and repeated labels.
    pub fn new<I: IntoIterator<Item = Vertex>>(labels: I) -> Result<Self> {
        let mut v: SmallVec<[Vertex; 8]> = labels.into_iter().collect();
        v.sort_unstable();
        if v.first() == Some(&0) {
            return Err(Error::Usage("vertex labels start at 1".into()));
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Usage(format!("repeated vertex in {v:?}")));
        }
        Ok(RSet(v))
    }

    pub(crate) fn from_sorted_unchecked<I: IntoIterator<Item = Vertex>>(labels: I) -> Self {
        let v: SmallVec<[Vertex; 8]> = labels.into_iter().collect();
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]) && v.first() != Some(&0));
        RSet(v)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn intersection_size(&self, other: &RSet) -> usize {
        sorted_intersection_size(&self.0, &other.0)
    }

    pub fn is_superset_of(&self, labels: &[Vertex]) -> bool {
        labels.iter().all(|&v| self.contains(v))
    }

    /// Sorted union of the two label sets.
    pub fn union(&self, other: &RSet) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self.0.iter().chain(other.0.iter()).copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn check(&self, params: &Params) -> Result<()> {
        if self.len() != params.r() as usize {
            return Err(Error::Usage(format!(
                "edge {self} has {} vertices, expected r = {}",
                self.len(),
                params.r()
            )));
        }
        if self.0.last().is_some_and(|&v| v > params.n()) {
            return Err(Error::Usage(format!("edge {self} leaves [1, {}]", params.n())));
        }
        Ok(())
    }
}

impl TryFrom<Vec<u32>> for RSet {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage(format!("{v:?} is not strictly increasing")));
        }
        RSet::new(v)
    }
}

impl From<RSet> for Vec<u32> {
    fn from(e: RSet) -> Self {
        e.0.into_vec()
    }
}

impl fmt::Display for RSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub(crate) fn sorted_intersection_size(a: &[Vertex], b: &[Vertex]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// All `C(r, ell)` ell-subsets of `e`, each sorted, in lexicographic order.
pub fn ell_subsets(e: &RSet, ell: u32) -> Vec<Vec<Vertex>> {
    let v = e.vertices();
    let mut out = Vec::new();
    let mut comb = Combinations::new(v.len(), ell as usize);
    while let Some(c) = comb.next_ref() {
        out.push(c.iter().map(|&i| v[i]).collect());
    }
    out
}

/// Hash key of a sorted vertex subset.
///
/// When `n < 2^16` and the subset has at most 8 labels, the labels are packed
/// as 16-bit lanes into a `u128`, first label most significant:
/// `key = sum_j label_j << (16 * (len - 1 - j))`. Otherwise the key is the
/// concatenation of the labels as 4-byte big-endian integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubsetKey {
    Packed(u128),
    Bytes(Box<[u8]>),
}

pub fn subset_key(labels: &[Vertex], n: u32) -> SubsetKey {
    if n < (1 << 16) && labels.len() <= 8 {
        SubsetKey::Packed(labels.iter().fold(0u128, |acc, &v| (acc << 16) | v as u128))
    } else {
        SubsetKey::Bytes(labels.iter().flat_map(|v| v.to_be_bytes()).collect())
    }
}

fn ell_keys(e: &RSet, ell: u32, n: u32) -> SmallVec<[(SubsetKey, SmallVec<[Vertex; 8]>); 10]> {
    let v = e.vertices();
    let mut out = SmallVec::new();
    let mut comb = Combinations::new(v.len(), ell as usize);
    while let Some(c) = comb.next_ref() {
        let labels: SmallVec<[Vertex; 8]> = c.iter().map(|&i| v[i]).collect();
        out.push((subset_key(&labels, n), labels));
    }
    out
}

pub(crate) fn excess_value(r: u32, m: usize, n: usize) -> i64 {
    (r as i64 - 1) * m as i64 - n as i64
}

/// Read access shared by both hypergraph representations.
pub trait Hypergraph {
    fn params(&self) -> &Params;
    fn edge_iter(&self) -> impl Iterator<Item = &RSet>;

    fn edge_count(&self) -> usize {
        self.edge_iter().count()
    }

    /// Number of edges containing every vertex of `u`.
    fn codegree(&self, u: &[Vertex]) -> usize {
        self.edge_iter().filter(|e| e.is_superset_of(u)).count()
    }

    /// `(r - 1) m - n` over the full vertex universe `[n]`.
    fn excess(&self) -> i64 {
        excess_value(self.params().r(), self.edge_count(), self.params().n() as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AddOutcome {
    Added(EdgeId),
    /// The lexicographically first ell-subset already covered by an edge.
    Rejected(Vec<Vertex>),
}

/// How a candidate r-set relates to the current occupancy index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fit {
    Free,
    Duplicate(EdgeId),
    Conflict { ell_set: Vec<Vertex>, owner: EdgeId },
}

/// A partial Steiner `(n, r, ell)`-system: every ell-subset of `[n]` lies in
/// at most one edge.
///
/// Edges live in numbered slots. Removing an edge frees its slot and the
/// next insertion reuses the lowest free slot, so add-after-remove restores
/// the previous logical state exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSystem {
    params: Params,
    slots: Vec<Option<RSet>>,
    free: BTreeSet<usize>,
    ell_index: HashMap<SubsetKey, EdgeId>,
    degree: Vec<u32>,
    zero_degree_count: usize,
    edge_count: usize,
}

impl PartialSystem {
    pub fn new(params: Params) -> Self {
        PartialSystem {
            params,
            slots: Vec::new(),
            free: BTreeSet::new(),
            ell_index: HashMap::new(),
            degree: vec![0; params.n() as usize],
            zero_degree_count: params.n() as usize,
            edge_count: 0,
        }
    }

    /// Inserts the edges in order; fails on the first rejection.
    pub fn from_edges<'a, I: IntoIterator<Item = &'a RSet>>(params: Params, edges: I) -> Result<Self> {
        let mut sys = PartialSystem::new(params);
        for e in edges {
            if let AddOutcome::Rejected(w) = sys.try_add(e.clone())? {
                return Err(Error::Usage(format!(
                    "edge {e} shares the ell-set {w:?} with an earlier edge"
                )));
            }
        }
        Ok(sys)
    }

    pub fn clear(&mut self) {
        self.slots.clear();
        self.free.clear();
        self.ell_index.clear();
        self.degree.iter_mut().for_each(|d| *d = 0);
        self.zero_degree_count = self.params.n() as usize;
        self.edge_count = 0;
    }

    pub fn fit(&self, e: &RSet) -> Fit {
        let n = self.params.n();
        for (key, labels) in ell_keys(e, self.params.ell(), n) {
            if let Some(&owner) = self.ell_index.get(&key) {
                if self.slots[owner.0].as_ref() == Some(e) {
                    return Fit::Duplicate(owner);
                }
                return Fit::Conflict {
                    ell_set: labels.into_vec(),
                    owner,
                };
            }
        }
        Fit::Free
    }

    pub fn is_compatible(&self, e: &RSet) -> bool {
        matches!(self.fit(e), Fit::Free)
    }

    pub fn try_add(&mut self, e: RSet) -> Result<AddOutcome> {
        e.check(&self.params)?;
        match self.fit(&e) {
            Fit::Duplicate(id) => Err(Error::Usage(format!("edge {e} is already present as {id:?}"))),
            Fit::Conflict { ell_set, .. } => Ok(AddOutcome::Rejected(ell_set)),
            Fit::Free => Ok(AddOutcome::Added(self.insert_unchecked(e))),
        }
    }

    fn insert_unchecked(&mut self, e: RSet) -> EdgeId {
        let id = match self.free.pop_first() {
            Some(slot) => EdgeId(slot),
            None => {
                self.slots.push(None);
                EdgeId(self.slots.len() - 1)
            }
        };
        for (key, _) in ell_keys(&e, self.params.ell(), self.params.n()) {
            self.ell_index.insert(key, id);
        }
        for &v in e.vertices() {
            let d = &mut self.degree[(v - 1) as usize];
            if *d == 0 {
                self.zero_degree_count -= 1;
            }
            *d += 1;
        }
        self.slots[id.0] = Some(e);
        self.edge_count += 1;
        id
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<RSet> {
        let e = self
            .slots
            .get_mut(id.0)
            .and_then(Option::take)
            .ok_or_else(|| Error::Usage(format!("no edge with id {id:?}")))?;
        for (key, _) in ell_keys(&e, self.params.ell(), self.params.n()) {
            self.ell_index.remove(&key);
        }
        for &v in e.vertices() {
            let d = &mut self.degree[(v - 1) as usize];
            *d -= 1;
            if *d == 0 {
                self.zero_degree_count += 1;
            }
        }
        self.edge_count -= 1;
        self.free.insert(id.0);
        // trailing empty slots are dropped so the slot vector stays canonical
        while matches!(self.slots.last(), Some(None)) {
            self.slots.pop();
            self.free.remove(&self.slots.len());
        }
        Ok(e)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&RSet> {
        self.slots.get(id.0).and_then(Option::as_ref)
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &RSet)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|e| (EdgeId(i), e)))
    }

    pub fn edge_id_of(&self, e: &RSet) -> Option<EdgeId> {
        match self.fit(e) {
            Fit::Duplicate(id) => Some(id),
            _ => None,
        }
    }

    pub fn contains_edge(&self, e: &RSet) -> bool {
        self.edge_id_of(e).is_some()
    }

    pub fn degree(&self, v: Vertex) -> u32 {
        self.degree[(v - 1) as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn zero_degree_count(&self) -> usize {
        self.zero_degree_count
    }

    /// Number of ell-subsets currently indexed.
    pub fn ell_index_len(&self) -> usize {
        self.ell_index.len()
    }

    /// Owner of an ell-set, if covered.
    pub fn ell_owner(&self, ell_set: &[Vertex]) -> Option<EdgeId> {
        self.ell_index.get(&subset_key(ell_set, self.params.n())).copied()
    }

    pub fn isolated_vertices(&self) -> Vec<Vertex> {
        (1..=self.params.n()).filter(|&v| self.degree(v) == 0).collect()
    }

    pub fn isolated_count(&self) -> usize {
        self.zero_degree_count
    }

    pub fn to_general_graph(&self) -> GeneralGraph {
        GeneralGraph {
            params: self.params,
            edges: self.edges().map(|(_, e)| e.clone()).collect(),
        }
    }
}

impl Hypergraph for PartialSystem {
    fn params(&self) -> &Params {
        &self.params
    }

    fn edge_iter(&self) -> impl Iterator<Item = &RSet> {
        self.slots.iter().flatten()
    }

    fn edge_count(&self) -> usize {
        self.edge_count
    }
}

/// An r-graph whose edges are distinct but may share ell-sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralGraph {
    params: Params,
    edges: Vec<RSet>,
}

impl GeneralGraph {
    pub fn new(params: Params, edges: Vec<RSet>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            e.check(&params)?;
            if !seen.insert(e) {
                return Err(Error::Usage(format!("duplicate edge {e}")));
            }
        }
        Ok(GeneralGraph { params, edges })
    }

    pub fn empty(params: Params) -> Self {
        GeneralGraph {
            params,
            edges: Vec::new(),
        }
    }

    pub fn edges(&self) -> &[RSet] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<RSet> {
        self.edges
    }

    pub fn contains_edge(&self, e: &RSet) -> bool {
        self.edges.contains(e)
    }

    /// True iff no ell-set lies in two edges.
    pub fn is_partial_steiner(&self) -> bool {
        let n = self.params.n();
        let mut seen = HashSet::new();
        for e in &self.edges {
            for (key, _) in ell_keys(e, self.params.ell(), n) {
                if !seen.insert(key) {
                    return false;
                }
            }
        }
        true
    }

    /// Copy with the edges at the given positions removed.
    pub fn without(&self, positions: &[usize]) -> GeneralGraph {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !positions.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        GeneralGraph {
            params: self.params,
            edges,
        }
    }

    /// Copy with one more edge; fails on a duplicate.
    pub fn with_edge(&self, e: RSet) -> Result<GeneralGraph> {
        e.check(&self.params)?;
        if self.contains_edge(&e) {
            return Err(Error::Usage(format!("duplicate edge {e}")));
        }
        let mut edges = self.edges.clone();
        edges.push(e);
        Ok(GeneralGraph {
            params: self.params,
            edges,
        })
    }
}

impl Hypergraph for GeneralGraph {
    fn params(&self) -> &Params {
        &self.params
    }

    fn edge_iter(&self) -> impl Iterator<Item = &RSet> {
        self.edges.iter()
    }

    fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Writes the edge-list text format: a header line `n r ell m`, then one
/// edge per line as ascending space-separated labels.
pub fn write_edge_list<'a, W: Write, I>(mut out: W, params: &Params, edges: I) -> Result<()>
where
    I: IntoIterator<Item = &'a RSet>,
    I::IntoIter: ExactSizeIterator,
{
    let edges = edges.into_iter();
    writeln!(out, "{} {} {} {}", params.n(), params.r(), params.ell(), edges.len())?;
    for e in edges {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

/// Parses the edge-list text format. Blank lines are ignored.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<(Params, Vec<RSet>)> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let parse_nums = |line: usize, s: &str| -> Result<Vec<u32>> {
        s.split_whitespace()
            .map(|t| {
                t.parse::<u32>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("not an integer: {t:?}"),
                })
            })
            .collect()
    };

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let header = parse_nums(hline, &header?)?;
    let [n, r, ell, m] = header[..] else {
        return Err(Error::Parse {
            line: hline,
            msg: "header must be `n r ell m`".into(),
        });
    };
    let params = Params::new(n, r, ell)?;
    let mut edges = Vec::with_capacity(m as usize);
    for (line, text) in lines {
        let labels = parse_nums(line, &text?)?;
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse {
                line,
                msg: "labels must be strictly ascending".into(),
            });
        }
        let e = RSet::new(labels).map_err(|err| Error::Parse {
            line,
            msg: err.to_string(),
        })?;
        e.check(&params).map_err(|err| Error::Parse {
            line,
            msg: err.to_string(),
        })?;
        edges.push(e);
    }
    if edges.len() != m as usize {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header announces {m} edges, found {}", edges.len()),
        });
    }
    Ok((params, edges))
}
