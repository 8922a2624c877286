//! q-sparse separating systems: families of node sets of size at most `q`
//! such that every required node pair has exactly one endpoint in some set.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Intervention, NodeId, Pdag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeparationMode {
    /// Separates every node pair; ignores the graph.
    Agnostic,
    /// Separates the undirected edges of an essential graph.
    GraphSensitive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatingSystem {
    pub sets: Vec<Intervention>,
    pub sparsity: usize,
    pub mode: SeparationMode,
}

impl SeparatingSystem {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Which pairs a system must separate.
#[derive(Clone, Copy, Debug)]
pub enum Requirement<'a> {
    AllPairs(usize),
    UndirectedEdges(&'a Pdag),
}

/// Graph-agnostic construction from balanced labels.
///
/// Nodes get distinct length-`ℓ` labels over an alphabet of `a = ⌈p/q⌉`
/// symbols; every (position, nonzero symbol) yields one set. Position 0 holds
/// `v mod a`, position `i > 0` holds `(digit_i(v) + v mod a) mod a`. The shift
/// keeps every symbol at every position used by at most `⌈p/a⌉ ≤ q` nodes,
/// which plain base-`a` digits do not guarantee in the leading position.
pub fn separate_agnostic(p: usize, q: usize) -> Result<SeparatingSystem> {
    let max = p / 2;
    if q == 0 || q > max {
        return Err(Error::InvalidSparsity { q, p, max });
    }
    let a = p.div_ceil(q);
    let mut len = 1;
    let mut span = a;
    while span < p {
        span *= a;
        len += 1;
    }
    let label = |v: usize, pos: usize| -> usize {
        let low = v % a;
        if pos == 0 {
            low
        } else {
            (v / a.pow(pos as u32) % a + low) % a
        }
    };
    let mut sets: Vec<Intervention> = Vec::new();
    for pos in 0..len {
        for sym in 1..a {
            let s: Intervention = (0..p).filter(|&v| label(v, pos) == sym).collect();
            if !s.is_empty() && !sets.contains(&s) {
                sets.push(s);
            }
        }
    }
    Ok(SeparatingSystem { sets, sparsity: q, mode: SeparationMode::Agnostic })
}

/// Graph-sensitive construction: vertex cover of the undirected part from a
/// maximal matching, Welsh-Powell colouring of the cover, colour classes cut
/// into chunks of at most `q` nodes.
pub fn separate_graph_sensitive(ess: &Pdag, q: usize) -> Result<SeparatingSystem> {
    if q == 0 {
        return Err(Error::InvalidSparsity { q, p: ess.p(), max: ess.p() });
    }
    let cover = matching_cover(ess);
    let colors = welsh_powell(ess, &cover);
    let mut sets = Vec::new();
    for class in colors {
        for chunk in class.chunks(q) {
            sets.push(Intervention::new(chunk.iter().copied()));
        }
    }
    Ok(SeparatingSystem { sets, sparsity: q, mode: SeparationMode::GraphSensitive })
}

/// Endpoints of a maximal matching, edges scanned in lexicographic order.
pub(crate) fn matching_cover(ess: &Pdag) -> Vec<NodeId> {
    let mut matched = vec![false; ess.p()];
    for (i, j) in ess.undirected_edges() {
        if !matched[i] && !matched[j] {
            matched[i] = true;
            matched[j] = true;
        }
    }
    (0..ess.p()).filter(|&v| matched[v]).collect()
}

/// Colour classes of the undirected subgraph induced on `nodes`, each sorted.
pub(crate) fn welsh_powell(ess: &Pdag, nodes: &[NodeId]) -> Vec<Vec<NodeId>> {
    let mut inside = vec![false; ess.p()];
    for &v in nodes {
        inside[v] = true;
    }
    let degree = |v: NodeId| ess.undirected_neighbors(v).filter(|&w| inside[w]).count();
    let mut order: Vec<NodeId> = nodes.to_vec();
    order.sort_by(|&x, &y| degree(y).cmp(&degree(x)).then(x.cmp(&y)));
    let mut color = vec![usize::MAX; ess.p()];
    let mut classes: Vec<Vec<NodeId>> = Vec::new();
    let mut remaining = order.len();
    while remaining > 0 {
        let c = classes.len();
        let mut class = Vec::new();
        for &v in &order {
            if color[v] == usize::MAX && !class.iter().any(|&w| ess.is_undirected(v, w)) {
                color[v] = c;
                class.push(v);
            }
        }
        remaining -= class.len();
        class.sort_unstable();
        classes.push(class);
    }
    classes
}

pub fn verify_separation(sets: &[Intervention], req: Requirement<'_>) -> bool {
    let separated = |i: NodeId, j: NodeId| sets.iter().any(|s| s.contains(i) != s.contains(j));
    match req {
        Requirement::AllPairs(p) => (0..p).all(|i| (i + 1..p).all(|j| separated(i, j))),
        Requirement::UndirectedEdges(g) => g.undirected_edges().into_iter().all(|(i, j)| separated(i, j)),
    }
}

/// `⌈p/q⌉·⌈log₂ p⌉`, the size bound for the agnostic construction.
pub fn agnostic_size_bound(p: usize, q: usize) -> usize {
    let log2 = if p <= 1 { 0 } else { (usize::BITS - (p - 1).leading_zeros()) as usize };
    p.div_ceil(q) * log2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::iv;
    use crate::graph::{skeleton, Dag};
    use crate::mec::essential_graph;
    use crate::graph::Batch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn complete_undirected(p: usize) -> Pdag {
        Pdag::from_edges(p, [], (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j)))).unwrap()
    }

    fn star_forest() -> Pdag {
        let mut edges = Vec::new();
        let mut hub = 0;
        for size in [7, 7, 6] {
            for leaf in hub + 1..hub + size {
                edges.push((hub, leaf));
            }
            hub += size;
        }
        skeleton(&Dag::new(20, edges).unwrap())
    }

    #[test]
    fn agnostic_four_nodes() {
        let ss = separate_agnostic(4, 2).unwrap();
        // a = 2, two label positions, one nonzero symbol each
        assert_eq!(ss.len(), 2);
        assert_eq!(ss.sets[0], iv(&[1, 3]));
        assert!(ss.sets.iter().all(|s| s.len() <= 2));
        assert!(verify_separation(&ss.sets, Requirement::AllPairs(4)));
    }

    #[test]
    fn agnostic_two_nodes() {
        assert_eq!(separate_agnostic(2, 1).unwrap().sets, vec![iv(&[1])]);
    }

    #[test]
    fn agnostic_singletons_when_q_is_one() {
        let ss = separate_agnostic(6, 1).unwrap();
        assert_eq!(ss.sets, (1..6).map(Intervention::single).collect::<Vec<_>>());
    }

    #[test]
    fn agnostic_forty_nodes() {
        let ss = separate_agnostic(40, 3).unwrap();
        assert!(ss.len() <= agnostic_size_bound(40, 3));
        assert!(ss.sets.iter().all(|s| s.len() <= 3));
        assert!(verify_separation(&ss.sets, Requirement::AllPairs(40)));
    }

    #[test]
    fn agnostic_leading_position_stays_within_q() {
        // plain base-4 digits would put nodes 4..=7 in one set here
        let ss = separate_agnostic(10, 3).unwrap();
        assert!(ss.sets.iter().all(|s| s.len() <= 3), "{:?}", ss.sets);
        assert!(verify_separation(&ss.sets, Requirement::AllPairs(10)));
    }

    #[test]
    fn agnostic_rejects_bad_sparsity() {
        assert_eq!(separate_agnostic(5, 3), Err(Error::InvalidSparsity { q: 3, p: 5, max: 2 }));
        assert!(separate_agnostic(5, 0).is_err());
        assert!(separate_agnostic(1, 1).is_err());
    }

    #[test]
    fn size_bound_values() {
        assert_eq!(agnostic_size_bound(40, 3), 14 * 6);
        assert_eq!(agnostic_size_bound(4, 2), 4);
        assert_eq!(agnostic_size_bound(5, 1), 15);
    }

    #[test]
    fn complete_graph_gives_singletons() {
        for q in 1..=4 {
            let ss = separate_graph_sensitive(&complete_undirected(5), q).unwrap();
            assert!(ss.sets.iter().all(|s| s.len() == 1));
            assert!(verify_separation(&ss.sets, Requirement::UndirectedEdges(&complete_undirected(5))));
        }
    }

    #[test]
    fn directed_graph_needs_nothing() {
        let g = Dag::new(3, [(0, 2), (1, 2)]).unwrap();
        let ess = essential_graph(&g, &Batch::new());
        assert!(separate_graph_sensitive(ess.pdag(), 2).unwrap().is_empty());
    }

    #[test]
    fn star_forest_hubs_form_one_set() {
        let ess = star_forest();
        let ss = separate_graph_sensitive(&ess, 3).unwrap();
        assert_eq!(ss.sets[0], iv(&[0, 7, 14]));
        let hubs_only = [iv(&[0, 7, 14])];
        assert!(verify_separation(&hubs_only, Requirement::UndirectedEdges(&ess)));
        assert_eq!(ess.n_undirected(), 17);
    }

    #[test]
    fn verify_examples() {
        let edge = Pdag::from_edges(2, [], [(0, 1)]).unwrap();
        assert!(!verify_separation(&[iv(&[0, 1])], Requirement::UndirectedEdges(&edge)));
        assert!(verify_separation(&[iv(&[0])], Requirement::UndirectedEdges(&edge)));
        assert!(verify_separation(&separate_agnostic(8, 2).unwrap().sets, Requirement::AllPairs(8)));
    }

    #[test]
    fn fuzz_constructions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let p = rng.random_range(2..=64);
            let q = rng.random_range(1..=p / 2);
            let ss = separate_agnostic(p, q).unwrap();
            assert!(ss.len() <= agnostic_size_bound(p, q), "p={p} q={q}");
            assert!(ss.sets.iter().all(|s| s.len() <= q));
            assert!(verify_separation(&ss.sets, Requirement::AllPairs(p)));

            let density = rng.random_range(0.02..0.3);
            let edges = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j)));
            let und: Vec<_> = edges.filter(|_| rng.random_bool(density)).collect();
            let h = Pdag::from_edges(p, [], und).unwrap();
            let gs = separate_graph_sensitive(&h, q).unwrap();
            assert!(gs.sets.iter().all(|s| s.len() <= q));
            assert!(verify_separation(&gs.sets, Requirement::UndirectedEdges(&h)));
            for s in &gs.sets {
                for &a in s.targets() {
                    assert!(s.targets().iter().all(|&b| !h.is_undirected(a, b)));
                }
            }
            // chunking must keep colour classes separating
            let cover = matching_cover(&h);
            let whole: Vec<Intervention> =
                welsh_powell(&h, &cover).into_iter().map(Intervention::new).collect();
            assert!(verify_separation(&whole, Requirement::UndirectedEdges(&h)));
        }
    }
}
