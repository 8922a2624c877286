//! Finite-sample layer: linear-Gaussian structural equation models, hard
//! interventions, likelihood reweighting of candidate DAGs, Monte-Carlo
//! mutual-information estimates and posterior evaluation.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{Batch, Dag, Intervention, NodeId};
use crate::mec::DagEnsemble;
use crate::rng::{self, Rng};

/// Value interventions fix their targets to.
pub const DEFAULT_CLAMP: f64 = 5.0;
pub const DEFAULT_OBSERVATIONAL_ROWS: usize = 800;
pub const DEFAULT_ROWS_PER_INTERVENTION: usize = 3;
pub const DEFAULT_MI_REPEATS: usize = 10;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSem {
    dag: Dag,
    /// One weight per edge of `dag`, in `dag.edges()` order.
    weights: Vec<f64>,
    noise_sd: Vec<f64>,
}

impl LinearSem {
    /// Unit noise on every node.
    pub fn new(dag: Dag, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != dag.n_edges() {
            return Err(Error::InvalidParameter("need one weight per edge"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("edge weights must be finite"));
        }
        let noise_sd = vec![1.0; dag.p()];
        Ok(LinearSem { dag, weights, noise_sd })
    }

    pub fn with_noise(mut self, noise_sd: Vec<f64>) -> Result<Self> {
        if noise_sd.len() != self.dag.p() || noise_sd.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter("need one finite nonnegative noise level per node"));
        }
        self.noise_sd = noise_sd;
        Ok(self)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.dag.edges().binary_search(&(i, j)).ok().map(|k| self.weights[k])
    }

    pub fn noise_sd(&self) -> &[f64] {
        &self.noise_sd
    }

    /// Incoming `(parent, weight)` pairs per node.
    fn incoming(&self) -> Vec<Vec<(NodeId, f64)>> {
        let mut inc = vec![Vec::new(); self.dag.p()];
        for (&(i, j), &w) in self.dag.edges().iter().zip(&self.weights) {
            inc[j].push((i, w));
        }
        inc
    }
}

/// Edge weights uniform on `[-1, -0.25] ∪ [0.25, 1]`.
pub fn gen_sem(dag: &Dag, seed: u64) -> LinearSem {
    let mut r = rng::seeded(seed);
    let mag = Uniform::new_inclusive(0.25, 1.0).expect("valid range");
    let weights = (0..dag.n_edges())
        .map(|_| {
            let m = mag.sample(&mut r);
            if r.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    LinearSem::new(dag.clone(), weights).expect("weights match edges")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Empty for observational rows.
    pub intervention: Intervention,
    pub sample: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: Dataset) {
        self.rows.extend(other.rows);
    }
}

/// `n` rows by ancestral sampling; targets of `intervention` are fixed to
/// `clamp` with their mechanisms removed.
pub fn simulate(sem: &LinearSem, intervention: &Intervention, n: usize, clamp: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one row"));
    }
    let mut r = rng::seeded(seed);
    let mut data = Dataset::new();
    let sampler = Sampler::new(sem);
    for _ in 0..n {
        let sample = sampler.draw(intervention, clamp, &mut r);
        data.rows.push(Row { intervention: intervention.clone(), sample });
    }
    Ok(data)
}

/// Observational rows plus `per_intervention` rows for each member of `batch`.
pub fn simulate_batch(
    sem: &LinearSem,
    batch: &Batch,
    observational: usize,
    per_intervention: usize,
    clamp: f64,
    seed: u64,
) -> Dataset {
    let sampler = Sampler::new(sem);
    let mut r = rng::seeded(seed);
    let mut data = Dataset::new();
    let empty = Intervention::default();
    let plan = core::iter::repeat_n(&empty, observational)
        .chain(batch.iter().flat_map(|i| core::iter::repeat_n(i, per_intervention)));
    for i in plan {
        let sample = sampler.draw(i, clamp, &mut r);
        data.rows.push(Row { intervention: i.clone(), sample });
    }
    data
}

struct Sampler<'a> {
    sem: &'a LinearSem,
    order: Vec<NodeId>,
    incoming: Vec<Vec<(NodeId, f64)>>,
}

impl<'a> Sampler<'a> {
    fn new(sem: &'a LinearSem) -> Self {
        Sampler { sem, order: sem.dag.topological_order(), incoming: sem.incoming() }
    }

    fn draw(&self, intervention: &Intervention, clamp: f64, r: &mut Rng) -> Vec<f64> {
        let mut x = vec![0.0; self.sem.dag.p()];
        for &j in &self.order {
            if intervention.contains(j) {
                x[j] = clamp;
                continue;
            }
            let eps: f64 = r.sample(StandardNormal);
            x[j] = self.incoming[j].iter().map(|&(i, w)| w * x[i]).sum::<f64>() + self.sem.noise_sd[j] * eps;
        }
        x
    }
}

/// Gram matrices of the data, with the rows in which each node was
/// intervened on split out so per-node fits can drop them.
#[derive(Clone, Debug)]
pub struct SuffStats {
    p: usize,
    total: DMatrix<f64>,
    rows: usize,
    excluded: Vec<DMatrix<f64>>,
    excluded_rows: Vec<usize>,
}

impl SuffStats {
    pub fn new(p: usize) -> Self {
        SuffStats {
            p,
            total: DMatrix::zeros(p, p),
            rows: 0,
            excluded: vec![DMatrix::zeros(0, 0); p],
            excluded_rows: vec![0; p],
        }
    }

    pub fn from_data(p: usize, data: &Dataset) -> Result<Self> {
        let mut s = Self::new(p);
        for row in &data.rows {
            s.add(&row.intervention, &row.sample)?;
        }
        Ok(s)
    }

    pub fn add(&mut self, intervention: &Intervention, x: &[f64]) -> Result<()> {
        if x.len() != self.p || intervention.targets().iter().any(|&v| v >= self.p) {
            return Err(Error::InvalidParameter("row does not match the node count"));
        }
        let v = DVector::from_column_slice(x);
        let outer = &v * v.transpose();
        self.total += &outer;
        self.rows += 1;
        for &j in intervention.targets() {
            if self.excluded[j].nrows() == 0 {
                self.excluded[j] = DMatrix::zeros(self.p, self.p);
            }
            self.excluded[j] += &outer;
            self.excluded_rows[j] += 1;
        }
        Ok(())
    }

    fn entry(&self, j: NodeId, a: usize, b: usize) -> f64 {
        let e = &self.excluded[j];
        self.total[(a, b)] - if e.nrows() == 0 { 0.0 } else { e[(a, b)] }
    }

    /// Least-squares weights of `j` on `parents` (minimum norm when the
    /// design is rank deficient) and the residual sum of squares.
    fn regress(&self, j: NodeId, parents: &[NodeId]) -> (Vec<f64>, f64) {
        let yy = self.entry(j, j, j);
        if parents.is_empty() {
            return (Vec::new(), yy.max(0.0));
        }
        let k = parents.len();
        let g = DMatrix::from_fn(k, k, |a, b| self.entry(j, parents[a], parents[b]));
        let rhs = DVector::from_fn(k, |a, _| self.entry(j, parents[a], j));
        let scale = g.diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let pinv = g.pseudo_inverse(1e-10 * scale).expect("nonnegative tolerance");
        let beta = pinv * &rhs;
        let rss = (yy - rhs.dot(&beta)).max(0.0);
        (beta.iter().copied().collect(), rss)
    }

    fn usable_rows(&self, j: NodeId) -> usize {
        self.rows - self.excluded_rows[j]
    }
}

/// Per-node least-squares fit of `dag` with unit noise.
pub fn fit_mle(dag: &Dag, stats: &SuffStats) -> LinearSem {
    let mut weights = vec![0.0; dag.n_edges()];
    for j in 0..dag.p() {
        let parents: Vec<NodeId> = dag.parents(j).collect();
        let (beta, _) = stats.regress(j, &parents);
        for (i, b) in parents.into_iter().zip(beta) {
            let k = dag.edges().binary_search(&(i, j)).expect("edge of dag");
            weights[k] = b;
        }
    }
    LinearSem::new(dag.clone(), weights).expect("weights match edges")
}

/// Gaussian log-likelihood at the maximum-likelihood weights, unit noise.
/// Rows contribute only for the nodes they do not intervene on.
pub fn profile_log_likelihood(dag: &Dag, stats: &SuffStats) -> f64 {
    (0..dag.p())
        .map(|j| {
            let parents: Vec<NodeId> = dag.parents(j).collect();
            let (_, rss) = stats.regress(j, &parents);
            -0.5 * rss - 0.5 * stats.usable_rows(j) as f64 * LN_2PI
        })
        .sum()
}

/// Candidate DAGs with normalized log posterior weights. Repeated members of
/// the source ensemble are merged, their prior weights summed.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    pub ens: DagEnsemble,
    pub log_weights: Vec<f64>,
}

impl Posterior {
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| libm::exp(*l)).collect()
    }

    pub fn len(&self) -> usize {
        self.ens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ens.is_empty()
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.log_weights)
    }

    /// The candidates weighted by posterior probability.
    pub fn to_ensemble(&self) -> DagEnsemble {
        self.ens.reweighted(self.weights()).expect("normalized weights")
    }
}

fn entropy_bits(log_weights: &[f64]) -> f64 {
    let h: f64 = log_weights
        .iter()
        .filter(|l| l.is_finite())
        .map(|&l| {
            let w = libm::exp(l);
            -w * l
        })
        .sum();
    (h / core::f64::consts::LN_2).max(0.0)
}

fn normalize(mut logs: Vec<f64>) -> Vec<f64> {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| libm::exp(l - top)).sum();
    let lz = top + libm::log(z);
    for l in &mut logs {
        *l -= lz;
    }
    logs
}

fn merge_members(ens: &DagEnsemble) -> DagEnsemble {
    let mut dags: Vec<Dag> = Vec::new();
    let mut prior: Vec<f64> = Vec::new();
    for (g, w) in ens.iter() {
        match dags.iter().position(|d| d == g) {
            Some(k) => prior[k] += w,
            None => {
                dags.push(g.clone());
                prior.push(w);
            }
        }
    }
    DagEnsemble::weighted(dags, prior).expect("source ensemble is valid")
}

fn log_posterior(ens: &DagEnsemble, stats: &SuffStats) -> Vec<f64> {
    let logs = ens
        .iter()
        .map(|(g, a)| if a > 0.0 { libm::log(a) + profile_log_likelihood(g, stats) } else { f64::NEG_INFINITY })
        .collect();
    normalize(logs)
}

/// Weights each candidate by its prior weight times the likelihood of `data`
/// at its own maximum-likelihood parameters.
pub fn reweight_posterior(ens: &DagEnsemble, data: &Dataset) -> Result<Posterior> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("reweighting needs data"));
    }
    let merged = merge_members(ens);
    let stats = SuffStats::from_data(merged.dags()[0].p(), data)?;
    let log_weights = log_posterior(&merged, &stats);
    Ok(Posterior { ens: merged, log_weights })
}

/// Everything the mutual-information estimate needs: the posterior given the
/// current data, the data's statistics and each candidate's fitted model.
#[derive(Clone, Debug)]
pub struct FiniteModel {
    pub posterior: Posterior,
    pub stats: SuffStats,
    pub fits: Vec<LinearSem>,
    pub clamp: f64,
}

impl FiniteModel {
    pub fn new(ens: &DagEnsemble, data: &Dataset, clamp: f64) -> Result<Self> {
        let posterior = reweight_posterior(ens, data)?;
        let stats = SuffStats::from_data(ens.dags()[0].p(), data)?;
        let fits = posterior.ens.dags().iter().map(|g| fit_mle(g, &stats)).collect();
        Ok(FiniteModel { posterior, stats, fits, clamp })
    }
}

/// Monte-Carlo estimate, in bits, of the expected entropy drop of the
/// posterior after observing `rows_per_intervention` rows per member of
/// `batch`: draw a candidate from the posterior, simulate under its fit,
/// refit every candidate on the augmented data, and average over `repeats`.
pub fn f_mi_estimate(batch: &Batch, model: &FiniteModel, rows_per_intervention: usize, repeats: usize, seed: u64) -> f64 {
    f_mi_samples(batch, model, rows_per_intervention, repeats, seed).0
}

/// Mean entropy drop and its standard error.
pub fn f_mi_samples(
    batch: &Batch,
    model: &FiniteModel,
    rows_per_intervention: usize,
    repeats: usize,
    seed: u64,
) -> (f64, f64) {
    let post = &model.posterior;
    if batch.is_empty() || post.len() <= 1 || rows_per_intervention == 0 || repeats == 0 {
        return (0.0, 0.0);
    }
    let before = post.entropy();
    let pick = WeightedIndex::new(post.weights()).expect("normalized weights");
    let mut drops = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let mut r = rng::seeded(rng::derive(seed, rep as u64));
        let g = pick.sample(&mut r);
        let sampler = Sampler::new(&model.fits[g]);
        let mut stats = model.stats.clone();
        for i in batch {
            for _ in 0..rows_per_intervention {
                let x = sampler.draw(i, model.clamp, &mut r);
                stats.add(i, &x).expect("row from the same graph");
            }
        }
        let after = entropy_bits(&log_posterior(&post.ens, &stats));
        drops.push(before - after);
    }
    let n = drops.len() as f64;
    let mean = drops.iter().sum::<f64>() / n;
    let var = if drops.len() > 1 { drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, libm::sqrt(var / n))
}

/// `P(u -> v)`: posterior mass of the candidates containing the edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProbabilities {
    p: usize,
    probs: Vec<f64>,
}

impl EdgeProbabilities {
    pub fn get(&self, u: NodeId, v: NodeId) -> f64 {
        self.probs[u * self.p + v]
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

pub fn edge_probabilities(post: &Posterior) -> EdgeProbabilities {
    let p = post.ens.dags()[0].p();
    let mut probs = vec![0.0; p * p];
    for (g, w) in post.ens.dags().iter().zip(post.weights()) {
        for &(u, v) in g.edges() {
            probs[u * p + v] += w;
        }
    }
    for x in &mut probs {
        *x = x.clamp(0.0, 1.0);
    }
    EdgeProbabilities { p, probs }
}

/// Missing, extra and reversed edges each count once.
pub fn shd(a: &Dag, b: &Dag) -> usize {
    let p = a.p();
    let mut d = 0;
    for i in 0..p {
        for j in i + 1..p {
            let ea = (a.has_edge(i, j), a.has_edge(j, i));
            let eb = (b.has_edge(i, j), b.has_edge(j, i));
            d += (ea != eb) as usize;
        }
    }
    d
}

/// Best F1 over thresholds at the distinct positive edge probabilities, and
/// the posterior-weighted mean structural Hamming distance to `truth`.
pub fn eval_f1_shd(post: &Posterior, truth: &Dag) -> (f64, f64) {
    let probs = edge_probabilities(post);
    let p = truth.p();
    let mut levels: Vec<f64> = probs.probs.iter().copied().filter(|&x| x > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let n_true = truth.n_edges();
    let mut best = if n_true == 0 { 1.0 } else { 0.0 };
    for t in levels {
        let (mut tp, mut fp) = (0usize, 0usize);
        for u in 0..p {
            for v in 0..p {
                if probs.get(u, v) >= t {
                    if truth.has_edge(u, v) {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
        }
        let f1 = 2.0 * tp as f64 / (2 * tp + fp + (n_true - tp)) as f64;
        best = f64::max(best, f1);
    }
    let mean_shd = post.ens.dags().iter().zip(post.weights()).map(|(g, w)| w * shd(g, truth) as f64).sum();
    (best, mean_shd)
}
