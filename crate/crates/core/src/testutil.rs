//! Random instances for unit tests.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Batch, Dag, Pdag};
use crate::mec::essential_graph;

/// Random DAG on 2..=max_p nodes (edges kept with probability `density`
/// along a random order) and its observational essential graph.
pub(crate) fn random_instance(rng: &mut impl Rng, max_p: usize, density: f64) -> (Dag, Pdag) {
    let p = rng.random_range(2..=max_p);
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..p {
        for b in a + 1..p {
            if rng.random_bool(density) {
                edges.push((perm[a], perm[b]));
            }
        }
    }
    let g = Dag::new(p, edges).unwrap();
    let ess = essential_graph(&g, &Batch::new()).pdag().clone();
    (g, ess)
}
