//! Graph types shared by every other module: DAGs, partially directed graphs,
//! interventions and batches.
//!
//! Nodes are dense indices `0..p`. Adjacency is kept as bit rows so the
//! orientation engine can intersect neighbourhoods word by word.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::BitMatrix;
use crate::error::{Error, Result};

pub type NodeId = usize;

/// Ordered pair `(from, to)`.
pub type Edge = (NodeId, NodeId);

/// Upper bound on `p` accepted by the checked constructors.
pub const DEFAULT_NODE_LIMIT: usize = 512;

/// A directed acyclic graph. Immutable once built.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    p: usize,
    children: BitMatrix,
    parents: BitMatrix,
    edges: Vec<Edge>,
}

impl Dag {
    pub fn new(p: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        Self::with_limit(p, edges, DEFAULT_NODE_LIMIT)
    }

    pub fn with_limit(p: usize, edges: impl IntoIterator<Item = Edge>, limit: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::EmptyGraph);
        }
        if p > limit {
            return Err(Error::TooManyNodes { p, limit });
        }
        let mut children = BitMatrix::new(p);
        let mut parents = BitMatrix::new(p);
        let mut list = Vec::new();
        for (i, j) in edges {
            check_node(i, p)?;
            check_node(j, p)?;
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if children.get(i, j) || children.get(j, i) {
                return Err(Error::DuplicateEdge(i, j));
            }
            children.set(i, j);
            parents.set(j, i);
            list.push((i, j));
        }
        list.sort_unstable();
        if !is_acyclic(&list, p) {
            return Err(Error::Cyclic);
        }
        Ok(Dag { p, children, parents, edges: list })
    }

    pub fn empty(p: usize) -> Result<Self> {
        Self::new(p, [])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.children.get(i, j)
    }

    pub fn is_adjacent(&self, i: NodeId, j: NodeId) -> bool {
        self.children.get(i, j) || self.children.get(j, i)
    }

    pub fn parents(&self, j: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.parents.row_ones(j)
    }

    pub fn children(&self, i: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children.row_ones(i)
    }

    pub fn in_degree(&self, j: NodeId) -> usize {
        self.parents.row_count(j)
    }

    /// A topological order; ties resolved by smallest node id.
    pub fn topological_order(&self) -> Vec<NodeId> {
        topo_sort(&self.edges, self.p).expect("Dag is acyclic by construction")
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(p={}, {:?})", self.p, self.edges)
    }
}

/// Partially directed graph: a set of directed and a set of undirected edges
/// with at most one edge per node pair.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pdag {
    p: usize,
    children: BitMatrix,
    parents: BitMatrix,
    undirected: BitMatrix,
}

impl Pdag {
    /// Graph on `p` nodes without edges.
    pub fn new(p: usize) -> Self {
        Pdag {
            p,
            children: BitMatrix::new(p),
            parents: BitMatrix::new(p),
            undirected: BitMatrix::new(p),
        }
    }

    pub fn from_edges(
        p: usize,
        directed: impl IntoIterator<Item = Edge>,
        undirected: impl IntoIterator<Item = Edge>,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::EmptyGraph);
        }
        if p > DEFAULT_NODE_LIMIT {
            return Err(Error::TooManyNodes { p, limit: DEFAULT_NODE_LIMIT });
        }
        let mut g = Pdag::new(p);
        for (i, j) in directed {
            g.check_new_edge(i, j)?;
            g.insert_directed(i, j);
        }
        for (i, j) in undirected {
            g.check_new_edge(i, j)?;
            g.insert_undirected(i, j);
        }
        Ok(g)
    }

    fn check_new_edge(&self, i: NodeId, j: NodeId) -> Result<()> {
        check_node(i, self.p)?;
        check_node(j, self.p)?;
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if self.is_adjacent(i, j) {
            return Err(Error::DuplicateEdge(i, j));
        }
        Ok(())
    }

    pub(crate) fn insert_directed(&mut self, i: NodeId, j: NodeId) {
        self.children.set(i, j);
        self.parents.set(j, i);
    }

    pub(crate) fn insert_undirected(&mut self, i: NodeId, j: NodeId) {
        self.undirected.set(i, j);
        self.undirected.set(j, i);
    }

    /// Turns the undirected edge `i - j` into `i -> j`.
    pub(crate) fn orient(&mut self, i: NodeId, j: NodeId) {
        debug_assert!(self.is_undirected(i, j));
        self.undirected.clear(i, j);
        self.undirected.clear(j, i);
        self.insert_directed(i, j);
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_directed(&self, i: NodeId, j: NodeId) -> bool {
        self.children.get(i, j)
    }

    pub fn is_undirected(&self, i: NodeId, j: NodeId) -> bool {
        self.undirected.get(i, j)
    }

    pub fn is_adjacent(&self, i: NodeId, j: NodeId) -> bool {
        self.undirected.get(i, j) || self.children.get(i, j) || self.children.get(j, i)
    }

    pub fn parents(&self, j: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.parents.row_ones(j)
    }

    pub fn children(&self, i: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children.row_ones(i)
    }

    pub fn undirected_neighbors(&self, i: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.undirected.row_ones(i)
    }

    pub fn undirected_degree(&self, i: NodeId) -> usize {
        self.undirected.row_count(i)
    }

    pub(crate) fn parent_row(&self, j: NodeId) -> &[u64] {
        self.parents.row(j)
    }

    pub(crate) fn undirected_row(&self, i: NodeId) -> &[u64] {
        self.undirected.row(i)
    }

    pub(crate) fn child_row(&self, i: NodeId) -> &[u64] {
        self.children.row(i)
    }

    /// Words of the adjacency row of `i`, any edge mark.
    pub(crate) fn adjacency_words(&self, i: NodeId) -> impl Iterator<Item = u64> + '_ {
        self.children
            .row(i)
            .iter()
            .zip(self.parents.row(i))
            .zip(self.undirected.row(i))
            .map(|((x, y), z)| x | y | z)
    }

    /// Directed edges in lexicographic order.
    pub fn directed_edges(&self) -> Vec<Edge> {
        (0..self.p).flat_map(|i| self.children(i).map(move |j| (i, j))).collect()
    }

    /// Undirected edges as `(i, j)` with `i < j`, lexicographic.
    pub fn undirected_edges(&self) -> Vec<Edge> {
        (0..self.p)
            .flat_map(|i| self.undirected_neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
            .collect()
    }

    pub fn n_directed(&self) -> usize {
        self.children.count()
    }

    pub fn n_undirected(&self) -> usize {
        self.undirected.count() / 2
    }

    pub fn is_fully_directed(&self) -> bool {
        self.n_undirected() == 0
    }

    /// Nodes incident to at least one undirected edge.
    pub fn active_nodes(&self) -> Vec<NodeId> {
        (0..self.p).filter(|&i| self.undirected_degree(i) > 0).collect()
    }

    /// Directed part as a DAG, when the graph has no undirected edges left.
    pub fn to_dag(&self) -> Result<Dag> {
        if !self.is_fully_directed() {
            return Err(Error::InvalidParameter("graph still has undirected edges"));
        }
        Dag::new(self.p, self.directed_edges())
    }
}

impl fmt::Debug for Pdag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Pdag(p={}, directed={:?}, undirected={:?})",
            self.p,
            self.directed_edges(),
            self.undirected_edges()
        )
    }
}

fn check_node(i: NodeId, p: usize) -> Result<()> {
    if i >= p {
        Err(Error::NodeOutOfRange { node: i, p })
    } else {
        Ok(())
    }
}

pub fn skeleton(g: &Dag) -> Pdag {
    let mut s = Pdag::new(g.p());
    for &(i, j) in g.edges() {
        s.insert_undirected(i, j);
    }
    s
}

/// Colliders `i -> k <- j` with `i`, `j` nonadjacent, reported as `(i, j, k)`
/// with `i < j`, sorted.
pub fn v_structures(g: &Dag) -> Vec<(NodeId, NodeId, NodeId)> {
    let mut out = Vec::new();
    for k in 0..g.p() {
        let pa: Vec<NodeId> = g.parents(k).collect();
        for (a, &i) in pa.iter().enumerate() {
            for &j in &pa[a + 1..] {
                if !g.is_adjacent(i, j) {
                    out.push((i, j, k));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Colliders among the directed edges of a partially directed graph.
pub(crate) fn pdag_v_structures(g: &Pdag) -> Vec<(NodeId, NodeId, NodeId)> {
    let mut out = Vec::new();
    for k in 0..g.p() {
        let pa: Vec<NodeId> = g.parents(k).collect();
        for (a, &i) in pa.iter().enumerate() {
            for &j in &pa[a + 1..] {
                if !g.is_adjacent(i, j) {
                    out.push((i, j, k));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Kahn's algorithm; `None` when the edges contain a cycle.
fn topo_sort(edges: &[Edge], p: usize) -> Option<Vec<NodeId>> {
    let mut indeg = vec![0usize; p];
    let mut out: Vec<Vec<NodeId>> = vec![Vec::new(); p];
    for &(i, j) in edges {
        if i >= p || j >= p {
            return None;
        }
        indeg[j] += 1;
        out[i].push(j);
    }
    let mut ready: BTreeSet<NodeId> = (0..p).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    (order.len() == p).then_some(order)
}

/// True iff the directed edge set admits a topological order. Edges that
/// reference nodes outside `0..p` make the answer false.
pub fn is_acyclic(edges: &[Edge], p: usize) -> bool {
    topo_sort(edges, p).is_some()
}

/// A set of perturbation targets. Stored sorted and deduplicated, so the
/// derived ordering is the canonical lexicographic one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Intervention {
    targets: Vec<NodeId>,
}

impl Intervention {
    pub fn new(targets: impl IntoIterator<Item = NodeId>) -> Self {
        let mut targets: Vec<NodeId> = targets.into_iter().collect();
        targets.sort_unstable();
        targets.dedup();
        Intervention { targets }
    }

    pub fn single(v: NodeId) -> Self {
        Intervention { targets: vec![v] }
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.targets.binary_search(&v).is_ok()
    }

    pub fn with(&self, v: NodeId) -> Self {
        let mut t = self.targets.clone();
        if let Err(pos) = t.binary_search(&v) {
            t.insert(pos, v);
        }
        Intervention { targets: t }
    }

    pub fn without(&self, v: NodeId) -> Self {
        Intervention { targets: self.targets.iter().copied().filter(|&x| x != v).collect() }
    }

    /// `[p] \ I`.
    pub fn complement(&self, p: usize) -> Self {
        Intervention { targets: (0..p).filter(|&v| !self.contains(v)).collect() }
    }

    pub(crate) fn mask(&self, p: usize) -> Vec<bool> {
        let mut m = vec![false; p];
        for &v in &self.targets {
            if v < p {
                m[v] = true;
            }
        }
        m
    }
}

impl FromIterator<NodeId> for Intervention {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        Intervention::new(iter)
    }
}

impl fmt::Debug for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.targets).finish()
    }
}

/// A set of interventions in canonical order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Batch(BTreeSet<Intervention>);

impl Batch {
    pub fn new() -> Self {
        Batch(BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, i: Intervention) -> bool {
        self.0.insert(i)
    }

    pub fn contains(&self, i: &Intervention) -> bool {
        self.0.contains(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Intervention> {
        self.0.iter()
    }

    /// `self ∪ {i}`.
    pub fn with(&self, i: Intervention) -> Batch {
        let mut b = self.clone();
        b.insert(i);
        b
    }

    pub fn union(&self, other: &Batch) -> Batch {
        Batch(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &Batch) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<Intervention> for Batch {
    fn from_iter<T: IntoIterator<Item = Intervention>>(iter: T) -> Self {
        Batch(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Batch {
    type Item = &'a Intervention;
    type IntoIter = alloc::collections::btree_set::Iter<'a, Intervention>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Debug for Batch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// Membership in `C_{m,q}`: at most `m` interventions of at most `q` targets.
pub fn check_constraints(b: &Batch, m: usize, q: usize) -> bool {
    b.len() <= m && b.iter().all(|i| i.len() <= q)
}
