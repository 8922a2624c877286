//! Experiment runs: per-repeat instances, algorithm dispatch, scoring,
//! sequential batch loops and result files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use multiperturb_core::mec::{enumerate_mec_capped, mec_size, sample_ensemble_capped, DEFAULT_MEC_CAP};
use multiperturb_core::optimize::{baseline_greedy_single, baseline_rand, dgc, ssg, ssg_with, SsgMode};
use multiperturb_core::rng::derive;
use multiperturb_core::sem::simulate_batch;
use multiperturb_core::{
    essential_graph, eval_f1_shd, f_inf_tilde, f_mi_estimate, gen_dag, gen_sem, r_oriented, reweight_posterior, Batch, Dag,
    DagEnsemble, Dataset, DesignProblem, Error, EssentialGraph, FiniteModel, LinearSem, Objective, SeparationMode,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig, GraphSource, Metric, Mode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub m: usize,
    pub q: usize,
    pub repeat: usize,
    pub seed: u64,
    pub metric: Metric,
    pub value: f64,
    pub wall_ms: f64,
}

/// A (algorithm, m, q, repeat) cell that produced no value.
#[derive(Clone, Debug, PartialEq)]
pub struct RowError {
    pub algorithm: Option<Algorithm>,
    pub m: usize,
    pub q: usize,
    pub repeat: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub errors: Vec<RowError>,
}

/// Simulated data and the posterior it induces.
#[derive(Clone, Debug)]
pub struct FiniteSetup {
    pub sem: LinearSem,
    pub data: Dataset,
    pub prior: DagEnsemble,
    pub model: FiniteModel,
}

/// Everything a repeat shares across algorithms and constraint sets.
#[derive(Clone, Debug)]
pub struct Instance {
    pub repeat: usize,
    pub seed: u64,
    pub dag: Dag,
    pub ess: EssentialGraph,
    /// The ensemble the designers optimise over.
    pub ens: DagEnsemble,
    pub finite: Option<FiniteSetup>,
}

const GRAPH: u64 = 0;
const ENSEMBLE: u64 = 1;
const DESIGN: u64 = 2;
const SEM: u64 = 3;
const DATA: u64 = 4;
const SCORE: u64 = 5;
const MI_DESIGN: u64 = 6;
const ROUNDS: u64 = 1 << 20;

pub fn repeat_seed(config: &ExperimentConfig, repeat: usize) -> u64 {
    derive(config.seed, repeat as u64)
}

/// Whole class when `n == 0`, else `n` uniform draws.
pub fn design_ensemble(ess: &EssentialGraph, n: usize, seed: u64) -> Result<DagEnsemble, Error> {
    if n == 0 {
        enumerate_mec_capped(ess, DEFAULT_MEC_CAP)
    } else {
        sample_ensemble_capped(ess, n, seed, DEFAULT_MEC_CAP)
    }
}

pub fn truth(config: &ExperimentConfig, seed: u64) -> Result<Dag, Error> {
    match &config.graph {
        GraphSource::Fixed(g) => Ok(g.clone()),
        GraphSource::Random(spec) => {
            let mut spec = spec.clone();
            spec.seed = derive(seed, GRAPH);
            gen_dag(&spec)
        }
    }
}

pub fn prepare(config: &ExperimentConfig, repeat: usize) -> Result<Instance, Error> {
    let seed = repeat_seed(config, repeat);
    let dag = truth(config, seed)?;
    let ess = essential_graph(&dag, &Batch::new());
    let (ens, finite) = match config.mode {
        Mode::Infinite => (design_ensemble(&ess, config.ensemble, derive(seed, ENSEMBLE))?, None),
        Mode::Finite => {
            let s = &config.sem;
            let sem = gen_sem(&dag, derive(seed, SEM));
            let data = simulate_batch(&sem, &Batch::new(), s.observational, s.per_intervention, s.clamp, derive(seed, DATA));
            let prior = match mec_size(&ess, s.full_mec_limit) {
                Ok(_) => design_ensemble(&ess, 0, 0)?,
                Err(Error::CapExceeded { .. }) => {
                    let n = if config.ensemble == 0 { multiperturb_core::mec::DEFAULT_ENSEMBLE_SIZE } else { config.ensemble };
                    design_ensemble(&ess, n, derive(seed, ENSEMBLE))?
                }
                Err(e) => return Err(e),
            };
            let model = FiniteModel::new(&prior, &data, s.clamp)?;
            (model.posterior.to_ensemble(), Some(FiniteSetup { sem, data, prior, model }))
        }
    };
    Ok(Instance { repeat, seed, dag, ess, ens, finite })
}

/// The batch `algorithm` designs for `inst` under `C_{m,q}`.
pub fn design(
    config: &ExperimentConfig,
    inst: &Instance,
    algorithm: Algorithm,
    m: usize,
    q: usize,
    seed: u64,
) -> Result<Batch, Error> {
    let objective = match algorithm {
        Algorithm::SsgA | Algorithm::SsgB | Algorithm::SsgBestQ => Objective::MiInf,
        _ => Objective::Eo,
    };
    let problem = DesignProblem::new(inst.ess.clone(), inst.ens.clone(), m, q, objective, seed)?;
    let mode = match algorithm {
        Algorithm::Rand => {
            return match baseline_rand(&problem) {
                Err(Error::NoUndirectedEdges) => Ok(Batch::new()),
                other => other,
            };
        }
        Algorithm::Greedy1 => return Ok(baseline_greedy_single(&problem)),
        Algorithm::Dgc => return dgc(&problem, &config.nmscg),
        Algorithm::SsgA => SsgMode::Agnostic,
        Algorithm::SsgB => SsgMode::GraphSensitive,
        Algorithm::SsgBestQ => SsgMode::BestOverQ(SeparationMode::GraphSensitive),
    };
    match &inst.finite {
        None => ssg(&problem, mode),
        Some(f) => {
            let s = &config.sem;
            let mi_seed = derive(inst.seed, MI_DESIGN);
            let mut objective = |b: &Batch| f_mi_estimate(b, &f.model, s.per_intervention, s.mi_repeats, mi_seed);
            ssg_with(&problem, mode, &mut objective).map(|o| o.batch)
        }
    }
}

/// Fraction of the starting undirected edges that `batch` orients in the truth.
pub fn oriented_fraction(inst: &Instance, batch: &Batch) -> Result<f64, Error> {
    let total = inst.ess.pdag().n_undirected();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(r_oriented(batch, &inst.dag, inst.ess.pdag())?.len() as f64 / total as f64)
}

pub fn score(config: &ExperimentConfig, inst: &Instance, batch: &Batch, metric: Metric) -> Result<f64, Error> {
    let seed = derive(inst.seed, SCORE);
    match metric {
        Metric::EdgesOrientedFraction => oriented_fraction(inst, batch),
        Metric::FInf => f_inf_tilde(batch, &inst.ens, &inst.ess),
        Metric::FMi | Metric::F1 | Metric::Shd => {
            let f = inst.finite.as_ref().ok_or(Error::InvalidParameter("metric needs finite mode"))?;
            let s = &config.sem;
            if metric == Metric::FMi {
                return Ok(f_mi_estimate(batch, &f.model, s.per_intervention, s.mi_repeats, seed));
            }
            let mut data = f.data.clone();
            data.extend(simulate_batch(&f.sem, batch, 0, s.per_intervention, s.clamp, seed));
            let (f1, shd) = eval_f1_shd(&reweight_posterior(&f.prior, &data)?, &inst.dag);
            Ok(if metric == Metric::F1 { f1 } else { shd })
        }
    }
}

fn elapsed_ms(config: &ExperimentConfig, start: Instant) -> f64 {
    if config.reproducible {
        0.0
    } else {
        start.elapsed().as_secs_f64() * 1e3
    }
}

fn grid(config: &ExperimentConfig) -> Vec<(usize, usize)> {
    config.m_values.iter().flat_map(|&m| config.q_values.iter().map(move |&q| (m, q))).collect()
}

fn run_repeat(config: &ExperimentConfig, repeat: usize) -> Outcome {
    let mut out = Outcome::default();
    let seed = repeat_seed(config, repeat);
    let inst = match prepare(config, repeat) {
        Ok(inst) => inst,
        Err(e) => {
            for (m, q) in grid(config) {
                out.errors.push(RowError { algorithm: None, m, q, repeat, seed, message: e.to_string() });
            }
            return out;
        }
    };
    let design_seed = derive(seed, DESIGN);
    for (m, q) in grid(config) {
        for &algorithm in &config.algorithms {
            let start = Instant::now();
            let result = design(config, &inst, algorithm, m, q, design_seed);
            let wall_ms = elapsed_ms(config, start);
            match result.and_then(|b| score(config, &inst, &b, config.metric)) {
                Ok(value) => out.rows.push(ResultRow { algorithm, m, q, repeat, seed, metric: config.metric, value, wall_ms }),
                Err(e) => out.errors.push(RowError { algorithm: Some(algorithm), m, q, repeat, seed, message: e.to_string() }),
            }
        }
    }
    out
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// One row per (algorithm, m, q, repeat), ordered by algorithm as listed in
/// the config, then m, q and repeat. Output does not depend on the thread
/// count.
pub fn run_experiment(config: &ExperimentConfig) -> Outcome {
    let parts: Vec<Outcome> = in_pool(config.threads, || (0..config.repeats).into_par_iter().map(|r| run_repeat(config, r)).collect());
    let mut out = Outcome::default();
    for part in parts {
        out.rows.extend(part.rows);
        out.errors.extend(part.errors);
    }
    let rank = |a: Algorithm| config.algorithms.iter().position(|&b| b == a).unwrap_or(usize::MAX);
    out.rows.sort_by_key(|r| (rank(r.algorithm), r.m, r.q, r.repeat));
    out
}

/// Per-round progress of one sequential run.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopTrace {
    pub algorithm: Algorithm,
    pub m: usize,
    pub q: usize,
    pub repeat: usize,
    pub seed: u64,
    /// Undirected edges of the starting essential graph.
    pub start_undirected: usize,
    /// Cumulative count of those edges oriented after each round.
    pub oriented: Vec<usize>,
    pub batches: Vec<Batch>,
    pub wall_ms: Vec<f64>,
    pub fully_oriented: bool,
}

impl LoopTrace {
    pub fn rounds(&self) -> usize {
        self.oriented.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopOutcome {
    pub traces: Vec<LoopTrace>,
    pub errors: Vec<RowError>,
}

/// Designs a batch against the current essential graph, applies it to the
/// truth, and repeats until everything is oriented or the round budget
/// (`config.rounds`, or the edge count when 0) runs out.
pub fn sequential_run(
    config: &ExperimentConfig,
    dag: &Dag,
    algorithm: Algorithm,
    m: usize,
    q: usize,
    seed: u64,
) -> Result<LoopTrace, Error> {
    let budget = if config.rounds == 0 { dag.n_edges() } else { config.rounds };
    let mut done = Batch::new();
    let mut ess = essential_graph(dag, &done);
    let start_undirected = ess.pdag().n_undirected();
    let mut trace = LoopTrace {
        algorithm,
        m,
        q,
        repeat: 0,
        seed,
        start_undirected,
        oriented: Vec::new(),
        batches: Vec::new(),
        wall_ms: Vec::new(),
        fully_oriented: start_undirected == 0,
    };
    for round in 0..budget as u64 {
        if ess.pdag().n_undirected() == 0 {
            break;
        }
        let start = Instant::now();
        let round_seed = derive(seed, ROUNDS + round);
        let ens = design_ensemble(&ess, config.ensemble, derive(round_seed, ENSEMBLE))?;
        let inst = Instance { repeat: 0, seed: round_seed, dag: dag.clone(), ess: ess.clone(), ens, finite: None };
        let batch = design(config, &inst, algorithm, m, q, derive(round_seed, DESIGN))?;
        done = done.union(&batch);
        ess = essential_graph(dag, &done);
        trace.oriented.push(start_undirected - ess.pdag().n_undirected());
        trace.batches.push(batch);
        trace.wall_ms.push(elapsed_ms(config, start));
    }
    trace.fully_oriented = ess.pdag().n_undirected() == 0;
    Ok(trace)
}

pub fn run_sequential_batches(config: &ExperimentConfig) -> LoopOutcome {
    let work: Vec<(usize, usize, usize, Algorithm)> = (0..config.repeats)
        .flat_map(|r| grid(config).into_iter().flat_map(move |(m, q)| config.algorithms.iter().map(move |&a| (r, m, q, a))))
        .collect();
    let results: Vec<Result<LoopTrace, RowError>> = in_pool(config.threads, || {
        work.par_iter()
            .map(|&(repeat, m, q, algorithm)| {
                let seed = repeat_seed(config, repeat);
                let err = |e: Error| RowError { algorithm: Some(algorithm), m, q, repeat, seed, message: e.to_string() };
                if config.mode != Mode::Infinite {
                    return Err(err(Error::InvalidParameter("sequential batches run in infinite mode")));
                }
                let dag = truth(config, seed).map_err(err)?;
                let mut t = sequential_run(config, &dag, algorithm, m, q, derive(seed, DESIGN)).map_err(err)?;
                t.repeat = repeat;
                t.seed = seed;
                Ok(t)
            })
            .collect()
    });
    let mut out = LoopOutcome::default();
    for r in results {
        match r {
            Ok(t) => out.traces.push(t),
            Err(e) => out.errors.push(e),
        }
    }
    let rank = |a: Algorithm| config.algorithms.iter().position(|&b| b == a).unwrap_or(usize::MAX);
    out.traces.sort_by_key(|t| (rank(t.algorithm), t.m, t.q, t.repeat));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

pub const CSV_HEADER: &str = "algorithm,m,q,repeat,seed,metric,value,wall_ms";

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

#[derive(Serialize)]
struct RoundRecord {
    algorithm: Algorithm,
    m: usize,
    q: usize,
    repeat: usize,
    round: usize,
    seed: u64,
    oriented: usize,
    value: f64,
    wall_ms: f64,
}

/// `algorithm,m,q,repeat,round,seed,oriented,value,wall_ms`, one row per
/// executed round; `value` is the cumulative oriented fraction.
pub fn write_rounds_csv(traces: &[LoopTrace], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for t in traces {
        for (k, &oriented) in t.oriented.iter().enumerate() {
            let value = if t.start_undirected == 0 { 1.0 } else { oriented as f64 / t.start_undirected as f64 };
            w.serialize(RoundRecord {
                algorithm: t.algorithm,
                m: t.m,
                q: t.q,
                repeat: t.repeat,
                round: k + 1,
                seed: t.seed,
                oriented,
                value,
                wall_ms: t.wall_ms[k],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of mean ± 1 SD per algorithm against q when only q varies,
/// against m otherwise.
pub fn render_svg(rows: &[ResultRow], metric: Metric) -> String {
    let rows: Vec<&ResultRow> = rows.iter().filter(|r| r.metric == metric).collect();
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    let mut qs: Vec<usize> = rows.iter().map(|r| r.q).collect();
    ms.sort_unstable();
    ms.dedup();
    qs.sort_unstable();
    qs.dedup();
    let by_q = ms.len() <= 1 && qs.len() > 1;
    let xs = if by_q { &qs } else { &ms };
    let x_of = |r: &ResultRow| if by_q { r.q } else { r.m };
    let mut algos: Vec<Algorithm> = Vec::new();
    for r in &rows {
        if !algos.contains(&r.algorithm) {
            algos.push(r.algorithm);
        }
    }
    let mut series = Vec::new();
    for &a in &algos {
        let pts: Vec<(usize, f64, f64)> = xs
            .iter()
            .map(|&x| {
                let vals: Vec<f64> = rows.iter().filter(|r| r.algorithm == a && x_of(r) == x).map(|r| r.value).collect();
                let (mu, sd) = mean_sd(&vals);
                (x, mu, sd)
            })
            .filter(|p| p.1.is_finite())
            .collect();
        series.push((a, pts));
    }
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 150.0, 30.0, 50.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &series {
        for &(_, mu, sd) in pts {
            lo = lo.min(mu - sd);
            hi = hi.max(mu + sd);
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let (x0, x1) = (xs.first().copied().unwrap_or(0) as f64, xs.last().copied().unwrap_or(1) as f64);
    let span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |x: usize| left + (x as f64 - x0 + if x1 > x0 { 0.0 } else { 0.5 }) / span * (w - left - right);
    let py = |y: f64| top + (hi - y) / (hi - lo) * (h - top - bottom);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, (w - right + left) / 2.0, metric).unwrap();
    let (ax, ay) = (left, h - bottom);
    writeln!(s, r#"<line x1="{ax}" y1="{top}" x2="{ax}" y2="{ay}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line x1="{ax}" y1="{ay}" x2="{}" y2="{ay}" stroke="black"/>"#, w - right).unwrap();
    for &x in xs.iter() {
        writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x}</text>"#, px(x), ay + 16.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (w - right + left) / 2.0, h - 10.0, if by_q { "q" } else { "m" })
        .unwrap();
    for k in 0..=4 {
        let y = lo + (hi - lo) * k as f64 / 4.0;
        writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#, ax - 6.0, py(y) + 4.0, y).unwrap();
    }
    for (k, (a, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, mu, _)| format!("{:.1},{:.1}", px(x), py(mu))).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#, path.join(" ")).unwrap();
        for &(x, mu, sd) in pts {
            let cx = px(x);
            writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{colour}"/>"#, py(mu - sd), py(mu + sd)).unwrap();
            writeln!(s, r#"<circle cx="{cx:.1}" cy="{:.1}" r="3" fill="{colour}"/>"#, py(mu)).unwrap();
        }
        let ly = top + 16.0 * k as f64 + 10.0;
        writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, w - right + 15.0, w - right + 35.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{a}</text>"#, w - right + 40.0, ly + 4.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Writes `results.csv` and one `<metric>.svg` per metric present.
pub fn emit(rows: &[ResultRow], out_dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, EmitError> {
    let io_err = |p: &Path| {
        let path = p.display().to_string();
        move |source| EmitError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        let path = out_dir.join("results.csv");
        write_csv(rows, &path)?;
        written.push(path);
    }
    if formats.contains(&Format::Svg) {
        let mut metrics: Vec<Metric> = Vec::new();
        for r in rows {
            if !metrics.contains(&r.metric) {
                metrics.push(r.metric);
            }
        }
        for metric in metrics {
            let path = out_dir.join(format!("{metric}.svg"));
            fs::write(&path, render_svg(rows, metric)).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree5() -> Dag {
        Dag::new(5, [(0, 1), (0, 2), (1, 3), (1, 4)]).unwrap()
    }

    #[test]
    fn greedy1_identifies_tree() {
        let mut c = ExperimentConfig::new(GraphSource::Fixed(tree5()));
        c.algorithms = vec![Algorithm::Greedy1];
        c.m_values = vec![2];
        c.repeats = 5;
        let out = run_experiment(&c);
        assert!(out.errors.is_empty());
        assert_eq!(out.rows.len(), 5);
        assert!(out.rows.iter().all(|r| r.value == 1.0));
    }

    #[test]
    fn row_order_and_errors() {
        let mut c = ExperimentConfig::new(GraphSource::Fixed(tree5()));
        c.algorithms = vec![Algorithm::SsgB, Algorithm::Rand];
        c.m_values = vec![2, 1];
        c.repeats = 3;
        let out = run_experiment(&c);
        let keys: Vec<_> = out.rows.iter().map(|r| (r.algorithm, r.m, r.repeat)).collect();
        assert_eq!(keys[0], (Algorithm::SsgB, 1, 0));
        assert_eq!(keys[11], (Algorithm::Rand, 2, 2));
        c.algorithms = vec![Algorithm::SsgA];
        c.q_values = vec![4];
        let out = run_experiment(&c);
        assert_eq!(out.errors.len(), 6);
        assert!(out.rows.is_empty());
    }

    #[test]
    fn directed_truth_scores_one() {
        let g = Dag::new(3, [(0, 2), (1, 2)]).unwrap();
        let mut c = ExperimentConfig::new(GraphSource::Fixed(g.clone()));
        c.algorithms = Algorithm::ALL.to_vec();
        let out = run_experiment(&c);
        assert!(out.errors.is_empty(), "{:?}", out.errors);
        assert!(out.rows.iter().all(|r| r.value == 1.0));
        let t = sequential_run(&c, &g, Algorithm::Dgc, 1, 1, 0).unwrap();
        assert_eq!(t.rounds(), 0);
        assert!(t.fully_oriented);
    }

    #[test]
    fn sequential_loop_on_tree() {
        let c = ExperimentConfig::new(GraphSource::Fixed(tree5()));
        for a in Algorithm::ALL {
            let t = sequential_run(&c, &tree5(), a, 1, 1, 3).unwrap();
            assert!(t.fully_oriented, "{a}");
            assert!(t.rounds() <= 4);
            assert!(t.oriented.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*t.oriented.last().unwrap(), 4);
        }
    }

    #[test]
    fn svg_handles_degenerate_input() {
        let s = render_svg(&[], Metric::FInf);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        let row = ResultRow { algorithm: Algorithm::Dgc, m: 1, q: 1, repeat: 0, seed: 0, metric: Metric::FInf, value: -1.0, wall_ms: 0.0 };
        assert!(!render_svg(&[row], Metric::FInf).contains("NaN"));
    }

    #[test]
    fn mean_sd_basics() {
        assert_eq!(mean_sd(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_sd(&[5.0]), (5.0, 0.0));
    }
}
