//! Infinite-sample design objectives over a DAG ensemble.
//!
//! `F_EO` is the weighted count of edges a batch newly orients, averaged over
//! the ensemble with the member weights `a(G)`. `F̃∞` is minus the mean log2
//! size of the interventional class each member falls in.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{Batch, Edge, Intervention, NodeId, Pdag};
use crate::mec::{group_keys, DagEnsemble, EssentialGraph};
use crate::meek::{closure_unchecked, extend_closure, newly_directed};
use crate::rng;

/// Largest `p` for which the multilinear extension is evaluated exactly.
pub const EXACT_MULTILINEAR_LIMIT: usize = 20;

/// Edge weights `w(e)` over unordered node pairs. Unlisted pairs weigh 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EoWeights {
    edges: BTreeMap<Edge, f64>,
}

impl EoWeights {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn set(&mut self, i: NodeId, j: NodeId, w: f64) -> Result<()> {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidParameter("edge weights must be finite and nonnegative"));
        }
        self.edges.insert((i.min(j), i.max(j)), w);
        Ok(())
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(1.0)
    }
}

/// Per-member closures of a fixed batch, reused to score one more
/// intervention without redoing the batch. Closure is order independent, so
/// cutting on top of a closed graph and re-closing is exact.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    ens: &'a DagEnsemble,
    ess: &'a Pdag,
    batch: Batch,
    closed: Vec<Pdag>,
    /// Undirected edges of `ess` with their weights.
    targets: Vec<(Edge, f64)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(ens: &'a DagEnsemble, ess: &'a EssentialGraph, w: &EoWeights, batch: &Batch) -> Result<Self> {
        ens.check_consistent(ess)?;
        Ok(Self::new_unchecked(ens, ess.pdag(), w, batch))
    }

    pub(crate) fn new_unchecked(ens: &'a DagEnsemble, ess: &'a Pdag, w: &EoWeights, batch: &Batch) -> Self {
        let closed = ens.dags().iter().map(|g| closure_unchecked(ess, g, batch)).collect();
        let targets = ess.undirected_edges().into_iter().map(|(i, j)| ((i, j), w.get(i, j))).collect();
        Evaluator { ens, ess, batch: batch.clone(), closed, targets }
    }

    pub fn p(&self) -> usize {
        self.ess.p()
    }

    pub fn batch(&self) -> &Batch {
        &self.batch
    }

    pub fn ensemble(&self) -> &DagEnsemble {
        self.ens
    }

    /// Adds `i` to the batch.
    pub fn push(&mut self, i: Intervention) {
        if self.batch.insert(i.clone()) {
            for k in 0..self.closed.len() {
                self.closed[k] = self.member_closure(k, &i);
            }
        }
    }

    /// Closure of member `k` under the batch plus `i`.
    pub fn member_closure(&self, k: usize, i: &Intervention) -> Pdag {
        extend_closure(&self.closed[k], &self.ens.dags()[k], i)
    }

    /// Weighted count of `ess` edges directed in `closed`.
    pub fn coverage(&self, closed: &Pdag) -> f64 {
        self.targets.iter().filter(|((i, j), _)| !closed.is_undirected(*i, *j)).map(|(_, w)| w).sum()
    }

    /// `f̂(I, G_k)`: weighted orientation count of member `k` under batch ∪ {I}.
    pub fn member_eo(&self, k: usize, i: Option<&Intervention>) -> f64 {
        match i {
            Some(i) => self.coverage(&self.member_closure(k, i)),
            None => self.coverage(&self.closed[k]),
        }
    }

    /// `F_EO` of the batch.
    pub fn eo(&self) -> f64 {
        self.ens.weights().iter().zip(&self.closed).map(|(a, pd)| a * self.coverage(pd)).sum()
    }

    /// `F_EO` of the batch plus `i`.
    pub fn eo_with(&self, i: &Intervention) -> f64 {
        (0..self.closed.len()).map(|k| self.ens.weights()[k] * self.member_eo(k, Some(i))).sum()
    }

    /// `F̃∞` of the batch.
    pub fn inf(&self) -> f64 {
        log_class_score(self.closed.iter().map(|pd| newly_directed(self.ess, pd)))
    }

    /// `F̃∞` of the batch plus `i`.
    pub fn inf_with(&self, i: &Intervention) -> f64 {
        log_class_score((0..self.closed.len()).map(|k| newly_directed(self.ess, &self.member_closure(k, i))))
    }
}

// Minus the mean log2 class size, classes keyed by orientation sets.
fn log_class_score(keys: impl Iterator<Item = Vec<Edge>>) -> f64 {
    let classes = group_keys(keys);
    let n = classes.class_of.len();
    let total: f64 = (0..n).map(|k| libm::log2(classes.size_of(k) as f64)).sum();
    -total / n as f64
}

pub fn f_eo(batch: &Batch, ens: &DagEnsemble, ess: &EssentialGraph, w: &EoWeights) -> Result<f64> {
    Ok(Evaluator::new(ens, ess, w, batch)?.eo())
}

/// `F_EO^ξ(I) = F_EO(ξ ∪ {I})`.
pub fn f_eo_node_restricted(
    i_set: &Intervention,
    batch: &Batch,
    ens: &DagEnsemble,
    ess: &EssentialGraph,
    w: &EoWeights,
) -> Result<f64> {
    Ok(Evaluator::new(ens, ess, w, batch)?.eo_with(i_set))
}

/// Ensemble log-class-size objective; at most 0, equal to 0 when every
/// member is identified.
pub fn f_inf_tilde(batch: &Batch, ens: &DagEnsemble, ess: &EssentialGraph) -> Result<f64> {
    Ok(Evaluator::new(ens, ess, &EoWeights::uniform(), batch)?.inf())
}

/// Soft interventions: a batch scores as the singletons of all its targets.
pub fn f_eo_soft(batch: &Batch, ens: &DagEnsemble, ess: &EssentialGraph, w: &EoWeights) -> Result<f64> {
    f_eo(&soft_equivalent(batch), ens, ess, w)
}

/// The single-node hard batch a soft batch is equivalent to.
pub fn soft_equivalent(batch: &Batch) -> Batch {
    batch.iter().flat_map(|i| i.targets().iter().copied()).map(Intervention::single).collect()
}

/// Checks `0 <= x_i <= 1` and, when given, `Σ x_i <= q` (with slack `1e-9`).
pub fn check_fractional(x: &[f64], p: usize, q: Option<usize>) -> Result<()> {
    if x.len() != p {
        return Err(Error::InvalidParameter("fractional point has the wrong length"));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter("fractional point outside the unit cube"));
    }
    if let Some(q) = q {
        if x.iter().sum::<f64>() > q as f64 + 1e-9 {
            return Err(Error::InvalidParameter("fractional point exceeds the sparsity budget"));
        }
    }
    Ok(())
}

/// Multilinear extension of `F_EO^ξ` at `x` by summing over all `2^p`
/// node subsets.
pub fn multilinear_value_exact(
    x: &[f64],
    batch: &Batch,
    ens: &DagEnsemble,
    ess: &EssentialGraph,
    w: &EoWeights,
) -> Result<f64> {
    let p = ess.p();
    if p > EXACT_MULTILINEAR_LIMIT {
        return Err(Error::SizeLimit { p, limit: EXACT_MULTILINEAR_LIMIT });
    }
    check_fractional(x, p, None)?;
    let ev = Evaluator::new(ens, ess, w, batch)?;
    let mut total = 0.0;
    for bits in 0u32..(1 << p) {
        let mut prob = 1.0;
        for (v, &xv) in x.iter().enumerate() {
            prob *= if bits >> v & 1 == 1 { xv } else { 1.0 - xv };
        }
        if prob == 0.0 {
            continue;
        }
        let i: Intervention = (0..p).filter(|v| bits >> v & 1 == 1).collect();
        total += prob * ev.eo_with(&i);
    }
    Ok(total)
}

/// Sample mean of the stochastic gradient and its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

/// Unbiased estimate of the gradient of the multilinear extension of
/// `F_EO^ξ` at `x`.
pub fn estimate_gradient(
    x: &[f64],
    batch: &Batch,
    ens: &DagEnsemble,
    ess: &EssentialGraph,
    w: &EoWeights,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let ev = Evaluator::new(ens, ess, w, batch)?;
    gradient_samples(&ev, x, n_samples, seed).map(|g| g.mean)
}

pub fn estimate_gradient_stats(
    x: &[f64],
    batch: &Batch,
    ens: &DagEnsemble,
    ess: &EssentialGraph,
    w: &EoWeights,
    n_samples: usize,
    seed: u64,
) -> Result<GradientEstimate> {
    let ev = Evaluator::new(ens, ess, w, batch)?;
    gradient_samples(&ev, x, n_samples, seed)
}

/// Each sample draws `G ∝ a(G)` and `I` with independent inclusion
/// probabilities `x`, then takes `f̂(I ∪ {i}, G) - f̂(I \ {i}, G)` for every
/// coordinate. Scaling by the total member weight makes the mean unbiased
/// for the `a`-weighted objective.
pub(crate) fn gradient_samples(ev: &Evaluator<'_>, x: &[f64], n_samples: usize, seed: u64) -> Result<GradientEstimate> {
    let p = ev.p();
    check_fractional(x, p, None)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("gradient needs at least one sample"));
    }
    let weights = ev.ensemble().weights();
    let scale: f64 = weights.iter().sum();
    let pick = WeightedIndex::new(weights).map_err(|_| Error::InvalidParameter("ensemble weights"))?;
    let mut r = rng::seeded(seed);
    let mut sum = vec![0.0; p];
    let mut sum_sq = vec![0.0; p];
    for _ in 0..n_samples {
        let k = pick.sample(&mut r);
        let i: Intervention = (0..p).filter(|&v| r.random::<f64>() < x[v]).collect();
        let here = ev.member_eo(k, Some(&i));
        for v in 0..p {
            let other = if i.contains(v) { i.without(v) } else { i.with(v) };
            let there = ev.member_eo(k, Some(&other));
            let d = if i.contains(v) { here - there } else { there - here } * scale;
            sum[v] += d;
            sum_sq[v] += d * d;
        }
    }
    let n = n_samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err = (0..p)
        .map(|v| {
            let var = if n_samples > 1 { (sum_sq[v] - n * mean[v] * mean[v]).max(0.0) / (n - 1.0) } else { 0.0 };
            libm::sqrt(var / n)
        })
        .collect();
    Ok(GradientEstimate { mean, std_err })
}
