//! Orientation engine.
//!
//! An intervention orients every undirected edge it cuts (exactly one endpoint
//! intervened). The Meek rules then propagate orientations to a fixpoint.
//! `R(ξ, G, ξ')` is the set of edges directed by that process that were
//! undirected in the current essential graph.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::{and_into, Ones};
use crate::error::{Error, Result};
use crate::graph::{Batch, Dag, Edge, Intervention, NodeId, Pdag};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientationResult {
    /// Edges directed by the batch that were undirected before, sorted.
    pub oriented: Vec<Edge>,
    pub closure: Pdag,
}

/// Fails unless every directed edge of `ess` is an edge of `g` and every
/// undirected edge of `ess` is an edge of `g` in some direction.
pub fn check_pattern(ess: &Pdag, g: &Dag) -> Result<()> {
    if ess.p() != g.p() {
        return Err(Error::InvalidParameter("graphs differ in node count"));
    }
    for i in 0..ess.p() {
        for j in ess.children(i) {
            if !g.has_edge(i, j) {
                return Err(Error::PatternMismatch(i, j));
            }
        }
        for j in ess.undirected_neighbors(i) {
            if !g.is_adjacent(i, j) {
                return Err(Error::PatternMismatch(i, j));
            }
        }
    }
    Ok(())
}

/// Directs every undirected edge cut by `mask` as it appears in `g`.
pub(crate) fn apply_cut(pd: &mut Pdag, g: &Dag, mask: &[bool]) {
    for a in 0..pd.p() {
        if !mask[a] {
            continue;
        }
        let nbrs: Vec<NodeId> = pd.undirected_neighbors(a).filter(|&b| !mask[b]).collect();
        for b in nbrs {
            if g.has_edge(a, b) {
                pd.orient(a, b);
            } else {
                pd.orient(b, a);
            }
        }
    }
}

pub fn orient_by_intervention(ess: &Pdag, g: &Dag, i: &Intervention) -> Result<Pdag> {
    check_pattern(ess, g)?;
    let mut pd = ess.clone();
    apply_cut(&mut pd, g, &i.mask(g.p()));
    Ok(pd)
}

/// Meek rules R1-R4 applied until no rule fires.
pub fn meek_closure(pd: &Pdag) -> Pdag {
    let mut g = pd.clone();
    close_in_place(&mut g);
    g
}

/// Worklist closure. Orienting `u -> v` can only enable rules on undirected
/// edges touching `u`, `v`, or a child of `v` (R4's chain head), so only those
/// nodes are revisited.
pub(crate) fn close_in_place(g: &mut Pdag) {
    let p = g.p();
    let mut queued = vec![true; p];
    let mut queue: VecDeque<NodeId> = (0..p).collect();
    let mut scratch = Scratch::default();
    let mut nbrs = Vec::new();
    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        nbrs.clear();
        nbrs.extend(g.undirected_neighbors(v));
        for &w in &nbrs {
            if !g.is_undirected(v, w) {
                continue;
            }
            let (a, b) = if implied(g, v, w, &mut scratch) {
                (v, w)
            } else if implied(g, w, v, &mut scratch) {
                (w, v)
            } else {
                continue;
            };
            g.orient(a, b);
            let mut touch = |x: NodeId, queue: &mut VecDeque<NodeId>| {
                if !queued[x] {
                    queued[x] = true;
                    queue.push_back(x);
                }
            };
            touch(a, &mut queue);
            touch(b, &mut queue);
            let kids: Vec<NodeId> = g.children(b).collect();
            for c in kids {
                touch(c, &mut queue);
            }
        }
    }
}

#[derive(Default)]
struct Scratch {
    buf: Vec<u64>,
    buf2: Vec<u64>,
}

/// Whether some rule forces the undirected edge `a - b` to be `a -> b`.
fn implied(g: &Pdag, a: NodeId, b: NodeId, s: &mut Scratch) -> bool {
    // R1: c -> a - b with c, b nonadjacent
    if g.parents(a).any(|c| !g.is_adjacent(c, b)) {
        return true;
    }
    // R2: a -> c -> b
    and_into(&mut s.buf, g.child_row(a), g.parent_row(b));
    if s.buf.iter().any(|&w| w != 0) {
        return true;
    }
    // R3: a - c -> b, a - d -> b, c and d nonadjacent
    and_into(&mut s.buf, g.undirected_row(a), g.parent_row(b));
    let cands: Vec<NodeId> = Ones::new(&s.buf).collect();
    for (k, &c) in cands.iter().enumerate() {
        if cands[k + 1..].iter().any(|&d| !g.is_adjacent(c, d)) {
            return true;
        }
    }
    // R4: c -> d -> b with c, b nonadjacent and a adjacent to both c and d.
    // The a~c and a~d edges may be undirected or already directed.
    s.buf2.clear();
    s.buf2.extend(g.parent_row(b).iter().zip(g.adjacency_words(a)).map(|(x, y)| x & y));
    for d in Ones::new(&s.buf2) {
        if g.parents(d).any(|c| c != a && g.is_adjacent(a, c) && !g.is_adjacent(c, b)) {
            return true;
        }
    }
    false
}

/// Closure of `ess` after cutting with every intervention in `batch`.
/// Does not validate `g` against `ess`.
pub(crate) fn closure_unchecked<'a>(
    ess: &Pdag,
    g: &Dag,
    batch: impl IntoIterator<Item = &'a Intervention>,
) -> Pdag {
    let mut pd = ess.clone();
    let p = pd.p();
    for i in batch {
        apply_cut(&mut pd, g, &i.mask(p));
    }
    close_in_place(&mut pd);
    pd
}

/// Adds the cuts of `extra` to an already closed graph and re-closes it.
/// Closure is order independent, so this equals closing everything at once.
pub(crate) fn extend_closure(closed: &Pdag, g: &Dag, extra: &Intervention) -> Pdag {
    let mut pd = closed.clone();
    apply_cut(&mut pd, g, &extra.mask(g.p()));
    close_in_place(&mut pd);
    pd
}

/// Edges directed in `closed` that are undirected in `base`.
pub(crate) fn newly_directed(base: &Pdag, closed: &Pdag) -> Vec<Edge> {
    let mut out = Vec::new();
    for (i, j) in base.undirected_edges() {
        if closed.is_directed(i, j) {
            out.push((i, j));
        } else if closed.is_directed(j, i) {
            out.push((j, i));
        }
    }
    out.sort_unstable();
    out
}

pub fn orient(batch: &Batch, g: &Dag, ess: &Pdag) -> Result<OrientationResult> {
    check_pattern(ess, g)?;
    let closure = closure_unchecked(ess, g, batch);
    Ok(OrientationResult { oriented: newly_directed(ess, &closure), closure })
}

/// `R(batch, g, ess)`: edges newly oriented relative to `ess`.
pub fn r_oriented(batch: &Batch, g: &Dag, ess: &Pdag) -> Result<Vec<Edge>> {
    orient(batch, g, ess).map(|r| r.oriented)
}
