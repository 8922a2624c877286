//! Random DAG generators with optional equivalence-class size filtering.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{Batch, Dag};
use crate::mec::{essential_graph, mec_size};
use crate::rng::{self, Rng};

pub const DEFAULT_RETRIES: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum GraphKind {
    /// Each unordered pair joined with probability `density`, oriented along
    /// a uniform random node order.
    Er { density: f64 },
    /// Uniform random recursive tree, edges pointing away from node 0.
    Tree,
    /// Disjoint stars; star `k` has `sizes[k]` nodes, its hub listed first.
    StarForest { sizes: Vec<usize> },
    /// Every pair joined, oriented along a uniform random node order.
    Complete,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub p: usize,
    pub seed: u64,
    /// Accept only graphs whose equivalence class size lies in `lo..=hi`.
    pub mec_size_range: Option<(usize, usize)>,
    pub retries: usize,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, p: usize, seed: u64) -> Self {
        GraphSpec { kind, p, seed, mec_size_range: None, retries: DEFAULT_RETRIES }
    }

    pub fn er(p: usize, density: f64, seed: u64) -> Self {
        Self::new(GraphKind::Er { density }, p, seed)
    }

    pub fn star_forest(sizes: Vec<usize>, seed: u64) -> Self {
        let p = sizes.iter().sum();
        Self::new(GraphKind::StarForest { sizes }, p, seed)
    }

    pub fn with_mec_range(mut self, lo: usize, hi: usize) -> Self {
        self.mec_size_range = Some((lo, hi));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::EmptyGraph);
        }
        match &self.kind {
            GraphKind::Er { density } if !(*density > 0.0 && *density <= 1.0) => {
                return Err(Error::InvalidParameter("density must lie in (0, 1]"));
            }
            GraphKind::StarForest { sizes } => {
                if sizes.is_empty() || sizes.iter().any(|&s| s < 2) {
                    return Err(Error::InvalidParameter("stars need at least two nodes"));
                }
                if sizes.iter().sum::<usize>() != self.p {
                    return Err(Error::InvalidParameter("star sizes must add up to p"));
                }
            }
            _ => {}
        }
        if let Some((lo, hi)) = self.mec_size_range {
            if lo > hi || hi == 0 {
                return Err(Error::InvalidParameter("equivalence class size range is empty"));
            }
        }
        if self.retries == 0 {
            return Err(Error::InvalidParameter("retries must be positive"));
        }
        Ok(())
    }
}

pub fn gen_dag(spec: &GraphSpec) -> Result<Dag> {
    spec.validate()?;
    let mut r = rng::seeded(spec.seed);
    let Some((lo, hi)) = spec.mec_size_range else {
        return draw(spec, &mut r);
    };
    for _ in 0..spec.retries {
        let g = draw(spec, &mut r)?;
        let ess = essential_graph(&g, &Batch::new());
        match mec_size(&ess, hi) {
            Ok(n) if n >= lo => return Ok(g),
            Ok(_) | Err(Error::CapExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryExhausted(spec.retries))
}

fn forward_edges(p: usize, r: &mut Rng, keep: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(r);
    let mut edges = Vec::new();
    for a in 0..p {
        for b in a + 1..p {
            if r.random_bool(keep) {
                edges.push((order[a], order[b]));
            }
        }
    }
    edges
}

fn draw(spec: &GraphSpec, r: &mut Rng) -> Result<Dag> {
    let p = spec.p;
    let edges = match &spec.kind {
        GraphKind::Er { density } => forward_edges(p, r, *density),
        GraphKind::Complete => forward_edges(p, r, 1.0),
        GraphKind::Tree => (1..p).map(|k| (r.random_range(0..k), k)).collect(),
        GraphKind::StarForest { sizes } => {
            let mut edges = Vec::new();
            let mut hub = 0;
            for &s in sizes {
                edges.extend((hub + 1..hub + s).map(|leaf| (hub, leaf)));
                hub += s;
            }
            edges
        }
    };
    Dag::with_limit(p, edges, p.max(crate::graph::DEFAULT_NODE_LIMIT))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_acyclic, skeleton};
    use crate::mec::enumerate_mec;

    fn components(g: &Dag) -> usize {
        let mut parent: Vec<usize> = (0..g.p()).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for &(a, b) in g.edges() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        (0..g.p()).filter(|&x| find(&mut parent, x) == x).count()
    }

    #[test]
    fn star_forest_shape() {
        let g = gen_dag(&GraphSpec::star_forest(alloc::vec![7, 7, 6], 0)).unwrap();
        assert_eq!(g.n_edges(), 17);
        assert_eq!(components(&g), 3);
        assert_eq!(g.children(0).count(), 6);
        assert_eq!(g.children(14).count(), 5);
        assert_eq!(skeleton(&g).n_undirected(), 17);
    }

    #[test]
    fn complete_and_dense_er_agree() {
        let g = gen_dag(&GraphSpec::new(GraphKind::Complete, 5, 3)).unwrap();
        assert_eq!(g.n_edges(), 10);
        assert!(is_acyclic(g.edges(), 5));
        assert_eq!(gen_dag(&GraphSpec::er(5, 1.0, 3)).unwrap(), g);
    }

    #[test]
    fn tree_shape() {
        for seed in 0..50 {
            let g = gen_dag(&GraphSpec::new(GraphKind::Tree, 9, seed)).unwrap();
            assert_eq!(g.n_edges(), 8);
            assert_eq!(components(&g), 1);
            assert!((1..9).all(|v| g.in_degree(v) == 1));
        }
    }

    #[test]
    fn er_edge_count_concentrates() {
        let (p, rho, n) = (10, 0.3, 10_000);
        let pairs = (p * (p - 1) / 2) as f64;
        let total: usize = (0..n).map(|s| gen_dag(&GraphSpec::er(p, rho, s)).unwrap().n_edges()).sum();
        let mean = total as f64 / n as f64;
        let sd = (pairs * rho * (1.0 - rho) / n as f64).sqrt();
        assert!((mean - rho * pairs).abs() <= 3.0 * sd, "{mean}");
    }

    #[test]
    fn generated_graphs_are_acyclic() {
        for seed in 0..200 {
            let g = gen_dag(&GraphSpec::er(12, 0.4, seed)).unwrap();
            assert!(is_acyclic(g.edges(), 12));
        }
    }

    #[test]
    fn mec_range_filter() {
        for seed in 0..10 {
            let spec = GraphSpec::er(8, 0.3, seed).with_mec_range(4, 12);
            let g = gen_dag(&spec).unwrap();
            let n = enumerate_mec(&essential_graph(&g, &Batch::new())).unwrap().len();
            assert!((4..=12).contains(&n), "{n}");
        }
        let mut impossible = GraphSpec::star_forest(alloc::vec![2, 2], 0).with_mec_range(100, 200);
        impossible.retries = 5;
        assert_eq!(gen_dag(&impossible), Err(Error::RetryExhausted(5)));
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_dag(&GraphSpec::er(5, 0.0, 0)).is_err());
        assert!(gen_dag(&GraphSpec::er(5, 1.5, 0)).is_err());
        assert!(gen_dag(&GraphSpec::star_forest(alloc::vec![1, 3], 0)).is_err());
        assert!(gen_dag(&GraphSpec::er(5, 0.5, 0).with_mec_range(3, 2)).is_err());
        assert!(gen_dag(&GraphSpec::new(GraphKind::Tree, 0, 0)).is_err());
    }

    #[test]
    fn reproducible() {
        let spec = GraphSpec::er(15, 0.15, 42).with_mec_range(20, 200);
        assert_eq!(gen_dag(&spec).unwrap(), gen_dag(&spec).unwrap());
    }
}
