//! Essential graphs, equivalence-class enumeration and DAG ensembles.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{
    is_acyclic, pdag_v_structures, skeleton, v_structures, Batch, Dag, Edge, Intervention, NodeId, Pdag,
};
use crate::meek::{apply_cut, check_pattern, close_in_place, closure_unchecked, newly_directed};
use crate::rng;

/// Default bound on the number of members `enumerate_mec` will produce.
pub const DEFAULT_MEC_CAP: usize = 50_000;

/// Default ensemble size when sampling from an equivalence class.
pub const DEFAULT_ENSEMBLE_SIZE: usize = 40;

/// Essential graph of a DAG given the interventions already performed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EssentialGraph {
    pdag: Pdag,
    prior: Batch,
}

impl EssentialGraph {
    /// Wraps a graph that is already Meek-closed.
    pub fn from_closed(pdag: Pdag, prior: Batch) -> Self {
        EssentialGraph { pdag, prior }
    }

    pub fn pdag(&self) -> &Pdag {
        &self.pdag
    }

    pub fn prior(&self) -> &Batch {
        &self.prior
    }

    pub fn p(&self) -> usize {
        self.pdag.p()
    }
}

/// Skeleton plus the v-structures of `g`, cut by every prior intervention,
/// then Meek-closed.
pub fn essential_graph(g: &Dag, prior: &Batch) -> EssentialGraph {
    let mut pd = skeleton(g);
    for (i, j, k) in v_structures(g) {
        if pd.is_undirected(i, k) {
            pd.orient(i, k);
        }
        if pd.is_undirected(j, k) {
            pd.orient(j, k);
        }
    }
    for iv in prior {
        apply_cut(&mut pd, g, &iv.mask(g.p()));
    }
    close_in_place(&mut pd);
    EssentialGraph { pdag: pd, prior: prior.clone() }
}

/// Weighted multiset of DAGs.
#[derive(Clone, Debug, PartialEq)]
pub struct DagEnsemble {
    dags: Vec<Dag>,
    weights: Vec<f64>,
}

impl DagEnsemble {
    /// Equal weight `1/n` on every member.
    pub fn uniform(dags: Vec<Dag>) -> Result<Self> {
        if dags.is_empty() {
            return Err(Error::InvalidParameter("ensemble must be nonempty"));
        }
        let w = 1.0 / dags.len() as f64;
        let weights = vec![w; dags.len()];
        Ok(DagEnsemble { dags, weights })
    }

    pub fn weighted(dags: Vec<Dag>, weights: Vec<f64>) -> Result<Self> {
        if dags.is_empty() || dags.len() != weights.len() {
            return Err(Error::InvalidParameter("ensemble needs one weight per member"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("ensemble weights must be finite and nonnegative"));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("ensemble weights must not all be zero"));
        }
        Ok(DagEnsemble { dags, weights })
    }

    pub fn len(&self) -> usize {
        self.dags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dags.is_empty()
    }

    pub fn dags(&self) -> &[Dag] {
        &self.dags
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Dag, f64)> {
        self.dags.iter().zip(self.weights.iter().copied())
    }

    /// Same members, new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        Self::weighted(self.dags.clone(), weights)
    }

    /// Fails if some member disagrees with `ess`.
    pub fn check_consistent(&self, ess: &EssentialGraph) -> Result<()> {
        self.dags.iter().try_for_each(|g| check_pattern(ess.pdag(), g))
    }
}

fn for_each_member(
    ess: &EssentialGraph,
    cap: usize,
    visit: &mut dyn FnMut(Dag),
) -> Result<usize> {
    let target = pdag_v_structures(ess.pdag());
    let mut count = 0;
    if !is_acyclic(&ess.pdag().directed_edges(), ess.p()) {
        return Ok(0);
    }
    branch(ess.pdag().clone(), &target, cap, &mut count, visit)?;
    Ok(count)
}

// Orient the lexicographically first undirected edge both ways, close, and
// recurse. Branches differ on that edge, so no member is produced twice.
fn branch(
    pd: Pdag,
    target: &[(NodeId, NodeId, NodeId)],
    cap: usize,
    count: &mut usize,
    visit: &mut dyn FnMut(Dag),
) -> Result<()> {
    let Some(&(i, j)) = pd.undirected_edges().first() else {
        let dag = pd.to_dag()?;
        if v_structures(&dag) == target {
            *count += 1;
            if *count > cap {
                return Err(Error::CapExceeded { cap });
            }
            visit(dag);
        }
        return Ok(());
    };
    for (a, b) in [(i, j), (j, i)] {
        let mut next = pd.clone();
        next.orient(a, b);
        close_in_place(&mut next);
        if !is_acyclic(&next.directed_edges(), next.p()) {
            continue;
        }
        // directed colliders only accumulate, so an extra one is final
        if pdag_v_structures(&next) != target {
            continue;
        }
        branch(next, target, cap, count, visit)?;
    }
    Ok(())
}

/// All DAGs represented by `ess`, uniformly weighted.
pub fn enumerate_mec(ess: &EssentialGraph) -> Result<DagEnsemble> {
    enumerate_mec_capped(ess, DEFAULT_MEC_CAP)
}

pub fn enumerate_mec_capped(ess: &EssentialGraph, cap: usize) -> Result<DagEnsemble> {
    let mut dags = Vec::new();
    for_each_member(ess, cap, &mut |d| dags.push(d))?;
    DagEnsemble::uniform(dags)
}

/// Number of members, or `CapExceeded` once it passes `cap`.
pub fn mec_size(ess: &EssentialGraph, cap: usize) -> Result<usize> {
    for_each_member(ess, cap, &mut |_| {})
}

/// Partition of ensemble indices into interventional equivalence classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classes {
    /// Class index of each ensemble member.
    pub class_of: Vec<usize>,
    /// Members of each class, in order of first appearance.
    pub members: Vec<Vec<usize>>,
}

impl Classes {
    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// Size of the class containing member `k`.
    pub fn size_of(&self, k: usize) -> usize {
        self.members[self.class_of[k]].len()
    }
}

/// Groups members whose orientation sets under `batch` coincide.
pub fn interventional_classes(ens: &DagEnsemble, batch: &Batch, ess: &EssentialGraph) -> Result<Classes> {
    ens.check_consistent(ess)?;
    Ok(classes_unchecked(ens, batch, ess.pdag()))
}

pub(crate) fn classes_unchecked(ens: &DagEnsemble, batch: &Batch, ess: &Pdag) -> Classes {
    let keys = ens.dags().iter().map(|g| newly_directed(ess, &closure_unchecked(ess, g, batch)));
    group_keys(keys)
}

pub(crate) fn group_keys(keys: impl Iterator<Item = Vec<Edge>>) -> Classes {
    let mut index: BTreeMap<Vec<Edge>, usize> = BTreeMap::new();
    let mut class_of = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (k, key) in keys.enumerate() {
        let next = members.len();
        let c = *index.entry(key).or_insert(next);
        if c == next {
            members.push(Vec::new());
        }
        members[c].push(k);
        class_of.push(c);
    }
    Classes { class_of, members }
}

/// `n` uniform draws with replacement from the members of `ess`.
pub fn sample_ensemble(ess: &EssentialGraph, n: usize, seed: u64) -> Result<DagEnsemble> {
    sample_ensemble_capped(ess, n, seed, DEFAULT_MEC_CAP)
}

pub fn sample_ensemble_capped(ess: &EssentialGraph, n: usize, seed: u64, cap: usize) -> Result<DagEnsemble> {
    if n == 0 {
        return Err(Error::InvalidParameter("ensemble size must be positive"));
    }
    let all = enumerate_mec_capped(ess, cap)?;
    Ok(resample(all.dags(), n, seed))
}

pub(crate) fn resample(members: &[Dag], n: usize, seed: u64) -> DagEnsemble {
    let mut r = rng::seeded(seed);
    let dags = (0..n).map(|_| members[r.random_range(0..members.len())].clone()).collect();
    DagEnsemble::uniform(dags).expect("n > 0")
}

/// Fixed ensemble on which the single-intervention restriction of the
/// ensemble log-class-size objective fails diminishing returns.
#[derive(Clone, Debug)]
pub struct Prop1Counterexample {
    pub ensemble: DagEnsemble,
    pub ess: EssentialGraph,
    /// Larger intervention.
    pub larger: Intervention,
    /// Subset of `larger`.
    pub smaller: Intervention,
    /// Node added to both.
    pub added: NodeId,
}

pub fn prop1_counterexample() -> Prop1Counterexample {
    let shared = [(4, 1), (4, 0), (4, 5), (5, 2)];
    let g1 = Dag::new(6, shared.iter().copied().chain([(0, 1), (4, 3)])).unwrap();
    let g2 = Dag::new(6, shared.iter().copied().chain([(0, 1), (3, 4)])).unwrap();
    let g3 = Dag::new(6, shared.iter().copied().chain([(1, 0), (4, 3)])).unwrap();
    let ess = essential_graph(&g1, &Batch::new());
    Prop1Counterexample {
        ensemble: DagEnsemble::uniform(vec![g1, g2, g3]).unwrap(),
        ess,
        larger: Intervention::new([1, 2, 3]),
        smaller: Intervention::new([1, 2]),
        added: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::testutil::random_instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tree_essential_graph_is_skeleton() {
        let ess = essential_graph(&tree5(), &Batch::new());
        assert_eq!(ess.pdag(), &skeleton(&tree5()));
    }

    #[test]
    fn collider_is_fully_directed() {
        let g = Dag::new(3, [(0, 2), (1, 2)]).unwrap();
        assert!(essential_graph(&g, &Batch::new()).pdag().is_fully_directed());
    }

    #[test]
    fn prior_two_node_intervention_identifies_tree() {
        let ess = essential_graph(&tree5(), &batch(&[&[1, 2]]));
        assert_eq!(ess.pdag().directed_edges(), tree5().edges().to_vec());
    }

    #[test]
    fn tree_class_has_one_member_per_root() {
        let ens = enumerate_mec(&essential_graph(&tree5(), &Batch::new())).unwrap();
        assert_eq!(ens.len(), 5);
        let mut roots: Vec<usize> =
            ens.dags().iter().map(|d| (0..5).find(|&v| d.in_degree(v) == 0).unwrap()).collect();
        roots.sort_unstable();
        assert_eq!(roots, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn small_enumerations() {
        let collider = Dag::new(3, [(0, 2), (1, 2)]).unwrap();
        let ens = enumerate_mec(&essential_graph(&collider, &Batch::new())).unwrap();
        assert_eq!(ens.dags(), &[collider]);
        let path = Dag::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(enumerate_mec(&essential_graph(&path, &Batch::new())).unwrap().len(), 3);
    }

    #[test]
    fn cap_is_enforced() {
        let ess = essential_graph(&tree5(), &Batch::new());
        assert_eq!(enumerate_mec_capped(&ess, 4), Err(Error::CapExceeded { cap: 4 }));
        assert_eq!(mec_size(&ess, 5), Ok(5));
    }

    fn tree_classes(b: &Batch) -> Vec<usize> {
        let ess = essential_graph(&tree5(), &Batch::new());
        let ens = enumerate_mec(&ess).unwrap();
        let mut s = interventional_classes(&ens, b, &ess).unwrap().sizes();
        s.sort_unstable();
        s
    }

    #[test]
    fn tree_class_partitions() {
        assert_eq!(tree_classes(&batch(&[&[1, 2]])), vec![1, 1, 1, 1, 1]);
        assert_eq!(tree_classes(&Batch::new()), vec![5]);
        assert_eq!(tree_classes(&batch(&[&[1]])), vec![1, 1, 1, 2]);
    }

    #[test]
    fn sampling_is_reproducible_and_supported() {
        let ess = essential_graph(&tree5(), &Batch::new());
        let all = enumerate_mec(&ess).unwrap();
        let a = sample_ensemble(&ess, 40, 9).unwrap();
        assert_eq!(a, sample_ensemble(&ess, 40, 9).unwrap());
        assert_eq!(a.len(), 40);
        assert!(a.dags().iter().all(|d| all.dags().contains(d)));
        let collider = Dag::new(3, [(0, 2), (1, 2)]).unwrap();
        let one = sample_ensemble(&essential_graph(&collider, &Batch::new()), 1, 0).unwrap();
        assert_eq!(one.dags(), &[collider]);
    }

    #[test]
    fn sampling_is_uniform() {
        let ess = essential_graph(&tree5(), &Batch::new());
        let all = enumerate_mec(&ess).unwrap();
        let n = 100_000;
        let ens = sample_ensemble(&ess, n, 1234).unwrap();
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        for d in all.dags() {
            let c = ens.dags().iter().filter(|x| *x == d).count() as f64;
            assert!((c - n as f64 / 5.0).abs() < 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn counterexample_shape() {
        let c = prop1_counterexample();
        let edges: Vec<Vec<Edge>> = c.ensemble.dags().iter().map(|d| d.edges().to_vec()).collect();
        assert_eq!(edges[0], vec![(0, 1), (4, 0), (4, 1), (4, 3), (4, 5), (5, 2)]);
        assert_eq!(edges[1], vec![(0, 1), (3, 4), (4, 0), (4, 1), (4, 5), (5, 2)]);
        assert_eq!(edges[2], vec![(1, 0), (4, 0), (4, 1), (4, 3), (4, 5), (5, 2)]);
        assert!(c.smaller.targets().iter().all(|&v| c.larger.contains(v)));
        assert!(!c.larger.contains(c.added));
        c.ensemble.check_consistent(&c.ess).unwrap();
    }

    /// Every DAG on `p` nodes by brute force over all edge-mark assignments.
    fn all_dags(p: usize) -> Vec<Dag> {
        let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect();
        let mut out = Vec::new();
        let total = 3usize.pow(pairs.len() as u32);
        for code in 0..total {
            let mut c = code;
            let mut edges = Vec::new();
            for &(i, j) in &pairs {
                match c % 3 {
                    1 => edges.push((i, j)),
                    2 => edges.push((j, i)),
                    _ => {}
                }
                c /= 3;
            }
            if let Ok(d) = Dag::new(p, edges) {
                out.push(d);
            }
        }
        out
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 1..=5 {
            let universe = all_dags(p);
            for _ in 0..12 {
                let g = &universe[rng.random_range(0..universe.len())];
                let skel = skeleton(g);
                let vs = v_structures(g);
                let mut expect: Vec<&Dag> =
                    universe.iter().filter(|d| skeleton(d) == skel && v_structures(d) == vs).collect();
                expect.sort_by_key(|d| d.edges().to_vec());
                let ens = enumerate_mec(&essential_graph(g, &Batch::new())).unwrap();
                let mut got: Vec<&Dag> = ens.dags().iter().collect();
                got.sort_by_key(|d| d.edges().to_vec());
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn essential_graph_is_class_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let (g, ess) = random_instance(&mut rng, 7, 0.4);
            let ens = enumerate_mec(&essential_graph(&g, &Batch::new())).unwrap();
            for d in ens.dags() {
                assert_eq!(essential_graph(d, &Batch::new()).pdag(), &ess);
            }
        }
    }

    #[test]
    fn classes_form_a_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let (g, _) = random_instance(&mut rng, 7, 0.4);
            let ess = essential_graph(&g, &Batch::new());
            let ens = enumerate_mec(&ess).unwrap();
            let i: Intervention = (0..g.p()).filter(|_| rng.random_bool(0.4)).collect();
            let cl = interventional_classes(&ens, &Batch::new().with(i), &ess).unwrap();
            let mut seen = vec![false; ens.len()];
            for (c, members) in cl.members.iter().enumerate() {
                for &k in members {
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(cl.class_of[k], c);
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}
