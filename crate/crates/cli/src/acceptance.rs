//! The acceptance criteria as runnable checks. Each returns a [`Report`];
//! `multiperturb selftest` and the `acceptance` test target print them.

use std::fmt;
use std::time::{Duration, Instant};

use multiperturb_core::mec::{enumerate_mec, sample_ensemble};
use multiperturb_core::objectives::estimate_gradient_stats;
use multiperturb_core::optimize::{dependent_round, ssg_with, SsgMode};
use multiperturb_core::rng::{derive, seeded, Rng};
use multiperturb_core::sepsys::agnostic_size_bound;
use multiperturb_core::{
    essential_graph, eval_f1_shd, f_eo, f_eo_node_restricted, f_inf_tilde, f_mi_estimate, gen_dag, meek_closure,
    multilinear_value_exact, prop1_counterexample, r_oriented, reweight_posterior, separate_agnostic, separate_graph_sensitive,
    theorem3_bound, verify_separation, Batch, Dag, DagEnsemble, DesignProblem, Edge, EoWeights, GraphKind,
    GraphSpec, Intervention, Objective, Pdag, Requirement,
};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::config::{Algorithm, ExperimentConfig, GraphSource, Metric, Mode};
use crate::harness::{mean_sd, run_experiment, sequential_run, ResultRow};
use crate::stats::paired_greater;

#[derive(Clone, Debug)]
pub struct Report {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<28} {} ({:.2}s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn timed(id: u8, name: &'static str, limit: Option<Duration>, body: impl FnOnce() -> (bool, String)) -> Report {
    let start = Instant::now();
    let (ok, mut detail) = body();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    if !in_time {
        detail.push_str(&format!("; over the {:.0}s budget", limit.unwrap().as_secs_f64()));
    }
    Report { id, name, passed: ok && in_time, detail, elapsed, limit }
}

/// Criteria known not to pass with the algorithms as specified.
///
/// 1: plain continuous greedy on the five-node tree reaches the optimum
/// `{1, 2}` on roughly two thirds of seeds, short of 18 of 20.
pub const KNOWN_GAPS: &[u8] = &[1];

const SECOND: Duration = Duration::from_secs(1);
const MINUTE: Duration = Duration::from_secs(60);
const EPS: f64 = 1e-9;

pub fn tree5() -> Dag {
    Dag::new(5, [(0, 1), (0, 2), (1, 3), (1, 4)]).unwrap()
}

fn random_dag(r: &mut Rng, p_lo: usize, p_hi: usize) -> Dag {
    let p = r.random_range(p_lo..=p_hi);
    let density = r.random_range(0.2..0.8);
    gen_dag(&GraphSpec::er(p, density, r.random())).unwrap()
}

fn random_set(r: &mut Rng, p: usize, keep: f64) -> Intervention {
    (0..p).filter(|_| r.random_bool(keep)).collect()
}

fn values(rows: &[ResultRow], a: Algorithm, m: usize, q: usize) -> Vec<f64> {
    rows.iter().filter(|r| r.algorithm == a && r.m == m && r.q == q).map(|r| r.value).collect()
}

pub fn run_all() -> Vec<Report> {
    vec![
        c01_tree(),
        c02_counterexample(),
        c03_submodularity(),
        c04_meek(),
        c05_separation(),
        c06_ssg_bound(),
        c07_gradient(),
        c08_rounding(),
        c09_directional(),
        c10_k5(),
        c11_finite(),
        c12_sequential(),
    ]
}

pub fn c01_tree() -> Report {
    timed(1, "tree identification", Some(SECOND), || {
        let g = tree5();
        let ess = essential_graph(&g, &Batch::new());
        let size = enumerate_mec(&ess).map(|e| e.len()).unwrap_or(0);
        let mut c = ExperimentConfig::new(GraphSource::Fixed(g));
        c.ensemble = 0;
        c.repeats = 20;
        c.algorithms = vec![Algorithm::Greedy1];
        c.m_values = vec![2];
        c.q_values = vec![1];
        let greedy = run_experiment(&c);
        let greedy_ok = greedy.errors.is_empty() && greedy.rows.iter().all(|r| r.value == 1.0);
        c.algorithms = vec![Algorithm::Dgc];
        c.m_values = vec![1];
        c.q_values = vec![2];
        let dgc = run_experiment(&c);
        let hits = dgc.rows.iter().filter(|r| r.value == 1.0).count();
        let ok = size == 5 && greedy_ok && dgc.errors.is_empty() && hits >= 18;
        (ok, format!("mec size {size}; greedy1 m=2 q=1 full on all 20: {greedy_ok}; dgc m=1 q=2 full on {hits}/20 (need 18)"))
    })
}

pub fn c02_counterexample() -> Report {
    timed(2, "diminishing returns fails", Some(SECOND), || {
        let c = prop1_counterexample();
        let f = |i: &Intervention| f_inf_tilde(&Batch::new().with(i.clone()), &c.ensemble, &c.ess).unwrap();
        let small = f(&c.smaller.with(c.added)) - f(&c.smaller);
        let large = f(&c.larger.with(c.added)) - f(&c.larger);
        (small < large, format!("gain at {{1,2}} = {small:.4} < gain at {{1,2,3}} = {large:.4}"))
    })
}

/// Batch-level and node-level submodularity checked
/// exhaustively over a random groundset of interventions per instance.
pub fn c03_submodularity() -> Report {
    timed(3, "submodularity oracles", Some(2 * MINUTE), || {
        let mut r = seeded(0xC3);
        let w = EoWeights::uniform();
        let (mut batch_checks, mut node_checks, mut violations) = (0usize, 0usize, 0usize);
        for _ in 0..50 {
            let g = random_dag(&mut r, 3, 6);
            let p = g.p();
            let ess = essential_graph(&g, &Batch::new());
            let ens = sample_ensemble(&ess, r.random_range(1..=10), r.random()).unwrap();
            let ground: Vec<Intervention> = (0..5).map(|_| random_set(&mut r, p, 0.4)).collect();
            let n = ground.len();
            let sub = |bits: usize| -> Batch { (0..n).filter(|k| bits >> k & 1 == 1).map(|k| ground[k].clone()).collect() };
            let f: Vec<f64> = (0..1usize << n).map(|b| f_eo(&sub(b), &ens, &ess, &w).unwrap()).collect();
            for b2 in 0..1usize << n {
                let mut b1 = b2;
                loop {
                    violations += (f[b1] > f[b2] + EPS) as usize;
                    for k in 0..n {
                        let ik = 1 << k;
                        if b2 & ik == 0 {
                            batch_checks += 1;
                            violations += (f[b1 | ik] - f[b1] < f[b2 | ik] - f[b2] - EPS) as usize;
                        }
                    }
                    if b1 == 0 {
                        break;
                    }
                    b1 = (b1 - 1) & b2;
                }
            }
            for b in [0, r.random_range(0..1usize << n)] {
                let prior = sub(b);
                let h: Vec<f64> = (0..1usize << p)
                    .map(|s| f_eo_node_restricted(&(0..p).filter(|v| s >> v & 1 == 1).collect(), &prior, &ens, &ess, &w).unwrap())
                    .collect();
                for a in 0..h.len() {
                    for b in 0..h.len() {
                        node_checks += 1;
                        violations += (h[a] + h[b] < h[a | b] + h[a & b] - EPS) as usize;
                    }
                }
            }
        }
        (violations == 0, format!("{violations} violations in {batch_checks} batch-level and {node_checks} node-level checks"))
    })
}

fn relabel(pd: &Pdag, perm: &[usize], r: &mut Rng) -> Pdag {
    let mut dir: Vec<Edge> = pd.directed_edges().into_iter().map(|(a, b)| (perm[a], perm[b])).collect();
    let mut und: Vec<Edge> = pd.undirected_edges().into_iter().map(|(a, b)| (perm[a], perm[b])).collect();
    dir.shuffle(r);
    und.shuffle(r);
    Pdag::from_edges(pd.p(), dir, und).unwrap()
}

/// `ess` with the listed undirected edges oriented as in `g`.
fn with_oriented(ess: &Pdag, g: &Dag, picked: &[Edge]) -> Pdag {
    let oriented: Vec<Edge> = picked.iter().map(|&(a, b)| if g.has_edge(a, b) { (a, b) } else { (b, a) }).collect();
    let und: Vec<Edge> = ess.undirected_edges().into_iter().filter(|e| !picked.contains(e)).collect();
    Pdag::from_edges(ess.p(), ess.directed_edges().into_iter().chain(oriented), und).unwrap()
}

pub fn c04_meek() -> Report {
    timed(4, "meek engine properties", Some(2 * MINUTE), || {
        let mut r = seeded(0xC4);
        let mut failures = Vec::new();
        for t in 0..50 {
            let g = random_dag(&mut r, 3, 9);
            let p = g.p();
            let ess = essential_graph(&g, &Batch::new()).pdag().clone();
            let mut und = ess.undirected_edges();
            und.shuffle(&mut r);
            let picked: Vec<Edge> = und.iter().copied().filter(|_| r.random_bool(0.3)).collect();
            let start = with_oriented(&ess, &g, &picked);
            let closed = meek_closure(&start);
            if meek_closure(&closed) != closed {
                failures.push(format!("instance {t}: not idempotent"));
            }
            for _ in 0..10 {
                let mut perm: Vec<usize> = (0..p).collect();
                perm.shuffle(&mut r);
                let mut inverse = vec![0; p];
                for (v, &pv) in perm.iter().enumerate() {
                    inverse[pv] = v;
                }
                let back = relabel(&meek_closure(&relabel(&start, &perm, &mut r)), &inverse, &mut r);
                let mut step = ess.clone();
                let mut order = picked.clone();
                order.shuffle(&mut r);
                for e in order {
                    if step.is_undirected(e.0, e.1) {
                        step = meek_closure(&with_oriented(&step, &g, &[e]));
                    }
                }
                if back != closed || meek_closure(&step) != closed {
                    failures.push(format!("instance {t}: order dependent"));
                    break;
                }
            }
        }
        let mut pairs = 0;
        for t in 0..500 {
            let g = random_dag(&mut r, 2, 9);
            let p = g.p();
            let ess = essential_graph(&g, &Batch::new()).pdag().clone();
            let small: Batch = (0..r.random_range(0..3)).map(|_| random_set(&mut r, p, 0.3)).collect();
            let large = small.union(&(0..r.random_range(1..3)).map(|_| random_set(&mut r, p, 0.3)).collect());
            let rs = r_oriented(&small, &g, &ess).unwrap();
            let rl = r_oriented(&large, &g, &ess).unwrap();
            if !rs.iter().all(|e| rl.contains(e)) {
                failures.push(format!("pair {t}: not monotone"));
            }
            let i = random_set(&mut r, p, 0.5);
            let a = r_oriented(&Batch::new().with(i.clone()), &g, &ess).unwrap();
            let b = r_oriented(&Batch::new().with(i.complement(p)), &g, &ess).unwrap();
            if a != b {
                failures.push(format!("pair {t}: complement differs"));
            }
            pairs += 1;
        }
        let detail = if failures.is_empty() {
            format!("50 instances x 10 relabelings, {pairs} monotonicity/complement pairs")
        } else {
            failures[..failures.len().min(3)].join("; ")
        };
        (failures.is_empty(), detail)
    })
}

pub fn c05_separation() -> Report {
    timed(5, "separating systems", Some(MINUTE), || {
        let mut r = seeded(0xC5);
        let mut failures = Vec::new();
        for t in 0..200 {
            let p = r.random_range(2..=64);
            let q = r.random_range(1..=p / 2);
            let s = separate_agnostic(p, q).unwrap();
            if !verify_separation(&s.sets, Requirement::AllPairs(p))
                || s.len() > agnostic_size_bound(p, q)
                || s.sets.iter().any(|i| i.len() > q)
            {
                failures.push(format!("agnostic p={p} q={q} (trial {t})"));
            }
            let g = gen_dag(&GraphSpec::er(p, r.random_range(0.05..0.5), r.random())).unwrap();
            let ess = essential_graph(&g, &Batch::new());
            let s = separate_graph_sensitive(ess.pdag(), q).unwrap();
            if !verify_separation(&s.sets, Requirement::UndirectedEdges(ess.pdag())) || s.sets.iter().any(|i| i.len() > q) {
                failures.push(format!("graph-sensitive p={p} q={q} (trial {t})"));
            }
        }
        let k5 = gen_dag(&GraphSpec::new(GraphKind::Complete, 5, 0)).unwrap();
        let ess = essential_graph(&k5, &Batch::new());
        for q in 1..=5 {
            let s = separate_graph_sensitive(ess.pdag(), q).unwrap();
            if ess.pdag().n_undirected() != 10 || s.sets.iter().any(|i| i.len() != 1) {
                failures.push(format!("K5 q={q} not all singletons"));
            }
        }
        let detail = if failures.is_empty() { "200 trials, K5 all singletons for q=1..5".to_string() } else { failures.join("; ") };
        (failures.is_empty(), detail)
    })
}

pub fn c06_ssg_bound() -> Report {
    timed(6, "ssg guarantee", Some(5 * MINUTE), || {
        let mut r = seeded(0xC6);
        let mut violations = 0;
        let mut slack = f64::INFINITY;
        for _ in 0..100 {
            let g = random_dag(&mut r, 2, 10);
            let p = g.p();
            let ess = essential_graph(&g, &Batch::new());
            let ens = enumerate_mec(&ess).unwrap();
            let q = r.random_range(1..=p / 2);
            let size = separate_agnostic(p, q).unwrap().len();
            let m = r.random_range(1..=size.max(1));
            let pr = DesignProblem::new(ess, ens, m, q, Objective::MiInf, r.random()).unwrap();
            let mut f = pr.objective_handle(Objective::MiInf);
            let out = ssg_with(&pr, SsgMode::Agnostic, &mut f).unwrap();
            if !theorem3_bound(&out.batch, out.system_size, &pr) {
                violations += 1;
            }
            let empty = pr.value_of(Objective::MiInf, &Batch::new());
            let factor = 1.0 - out.batch.len() as f64 / out.system_size.max(1) as f64;
            slack = slack.min(out.value - factor * empty);
        }
        (violations == 0, format!("{violations} violations in 100 instances, smallest slack {slack:.4}"))
    })
}

pub fn c07_gradient() -> Report {
    timed(7, "gradient estimator", Some(5 * MINUTE), || {
        let mut r = seeded(0xC7);
        let w = EoWeights::uniform();
        let (mut coords, mut worst, mut misses) = (0, 0.0f64, 0);
        for _ in 0..20 {
            let g = random_dag(&mut r, 3, 8);
            let p = g.p();
            let ess = essential_graph(&g, &Batch::new());
            let ens = sample_ensemble(&ess, r.random_range(1..=10), r.random()).unwrap();
            let prior: Batch = if r.random_bool(0.3) { Batch::new().with(random_set(&mut r, p, 0.3)) } else { Batch::new() };
            let x: Vec<f64> = (0..p).map(|_| r.random::<f64>()).collect();
            let est = estimate_gradient_stats(&x, &prior, &ens, &ess, &w, 10_000, r.random()).unwrap();
            for i in 0..p {
                let (mut hi, mut lo) = (x.clone(), x.clone());
                hi[i] = 1.0;
                lo[i] = 0.0;
                let exact = multilinear_value_exact(&hi, &prior, &ens, &ess, &w).unwrap()
                    - multilinear_value_exact(&lo, &prior, &ens, &ess, &w).unwrap();
                let err = (est.mean[i] - exact).abs();
                let z = if est.std_err[i] > 0.0 { err / est.std_err[i] } else if err < EPS { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
                misses += (z > 3.0) as usize;
                coords += 1;
            }
        }
        (misses == 0, format!("{coords} coordinates, largest deviation {worst:.2} standard errors"))
    })
}

pub fn c08_rounding() -> Report {
    timed(8, "dependent rounding", None, || {
        let points: [&[f64]; 4] = [
            &[0.5, 0.5, 0.5, 0.5],
            &[0.2, 0.9, 0.4, 0.5, 0.0, 1.0],
            &[0.3, 0.3, 0.3, 0.1, 0.7, 0.6, 0.7],
            &[0.15, 0.25, 0.35, 0.45],
        ];
        let n = 10_000;
        let mut r = seeded(0xC8);
        let (mut worst, mut misses, mut bad_sizes) = (0.0f64, 0, 0);
        for x in points {
            let sum: f64 = x.iter().sum();
            let mut hits = vec![0usize; x.len()];
            for _ in 0..n {
                let i = dependent_round(x, &mut r);
                let k = i.len() as f64;
                let (lo, hi) = ((sum + EPS).floor(), (sum - EPS).ceil());
                bad_sizes += (k < lo || k > hi) as usize;
                for &v in i.targets() {
                    hits[v] += 1;
                }
            }
            for (v, &xv) in x.iter().enumerate() {
                let freq = hits[v] as f64 / n as f64;
                let sd = (xv * (1.0 - xv) / n as f64).sqrt();
                let z = if sd > 0.0 { (freq - xv).abs() / sd } else if (freq - xv).abs() < EPS { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
                misses += (z > 3.0) as usize;
            }
        }
        (misses == 0 && bad_sizes == 0, format!("{bad_sizes} size violations; largest marginal deviation {worst:.2} sd"))
    })
}

pub fn c09_directional() -> Report {
    timed(9, "directional performance", Some(15 * MINUTE), || {
        let mut notes = Vec::new();
        let mut ok = true;
        let spec = GraphSpec::er(15, 0.15, 0).with_mec_range(20, 200);
        let mut c = ExperimentConfig::new(GraphSource::Random(spec));
        c.algorithms = vec![Algorithm::Rand, Algorithm::Greedy1, Algorithm::Dgc, Algorithm::SsgB];
        c.m_values = vec![2];
        c.q_values = vec![3];
        c.repeats = 30;
        c.seed = 0xC9;
        let out = run_experiment(&c);
        ok &= out.errors.is_empty();
        let v = |a| values(&out.rows, a, 2, 3);
        for a in [Algorithm::Dgc, Algorithm::SsgB] {
            for b in [Algorithm::Rand, Algorithm::Greedy1] {
                let pv = paired_greater(&v(a), &v(b));
                ok &= pv < 0.05;
                notes.push(format!("{a}>{b} p={pv:.2e}"));
            }
        }
        let means: Vec<String> = c.algorithms.iter().map(|&a| format!("{a}={:.3}", mean_sd(&v(a)).0)).collect();
        notes.push(format!("ER means {}", means.join(" ")));
        let mut c = ExperimentConfig::new(GraphSource::Random(GraphSpec::star_forest(vec![7, 7, 6], 0)));
        c.algorithms = vec![Algorithm::Dgc, Algorithm::SsgB, Algorithm::SsgA];
        c.q_values = vec![3];
        c.repeats = 30;
        c.seed = 0xC9;
        let out = run_experiment(&c);
        ok &= out.errors.is_empty();
        let v = |a| values(&out.rows, a, 1, 3);
        let (dgc, ssg_b, ssg_a) = (mean_sd(&v(Algorithm::Dgc)).0, mean_sd(&v(Algorithm::SsgB)).0, v(Algorithm::SsgA));
        let lower = ssg_a.iter().zip(v(Algorithm::SsgB)).filter(|(a, b)| *a < b).count();
        ok &= dgc >= 0.9 && ssg_b >= 0.9 && lower * 10 >= ssg_a.len() * 7;
        notes.push(format!("stars dgc={dgc:.3} ssg_b={ssg_b:.3}, ssg_a lower in {lower}/{}", ssg_a.len()));
        (ok, notes.join("; "))
    })
}

pub fn c10_k5() -> Report {
    timed(10, "K5 q-sensitivity", None, || {
        let mut c = ExperimentConfig::new(GraphSource::Random(GraphSpec::new(GraphKind::Complete, 5, 0)));
        c.algorithms = vec![Algorithm::SsgB, Algorithm::Dgc];
        c.m_values = vec![2];
        c.q_values = vec![1, 2, 3];
        c.repeats = 30;
        c.seed = 0xCA;
        let out = run_experiment(&c);
        let ssg: Vec<Vec<f64>> = (1..=3).map(|q| values(&out.rows, Algorithm::SsgB, 2, q)).collect();
        let same = ssg[0] == ssg[1] && ssg[1] == ssg[2];
        let d1 = mean_sd(&values(&out.rows, Algorithm::Dgc, 2, 1)).0;
        let d3 = mean_sd(&values(&out.rows, Algorithm::Dgc, 2, 3)).0;
        let ok = out.errors.is_empty() && same && d3 > d1;
        (ok, format!("ssg_b identical across q: {same} (mean {:.3}); dgc mean q=1 {d1:.3}, q=3 {d3:.3}", mean_sd(&ssg[0]).0))
    })
}

pub fn c11_finite() -> Report {
    timed(11, "finite-sample sanity", Some(15 * MINUTE), || {
        let spec = GraphSpec::er(8, 0.2, 0).with_mec_range(2, usize::MAX);
        let mut c = ExperimentConfig::new(GraphSource::Random(spec));
        c.mode = Mode::Finite;
        c.metric = Metric::FMi;
        c.algorithms = vec![Algorithm::SsgB, Algorithm::Rand];
        c.m_values = vec![2];
        c.q_values = vec![2];
        c.repeats = 50;
        c.seed = 0xCB;
        let out = run_experiment(&c);
        let (s, rnd) = (values(&out.rows, Algorithm::SsgB, 2, 2), values(&out.rows, Algorithm::Rand, 2, 2));
        let pv = paired_greater(&s, &rnd);
        let mut ok = out.errors.is_empty() && s.len() == 50 && pv < 0.05;
        let mut notes = vec![format!("f_mi ssg_b {:.3} vs rand {:.3}, p={pv:.2e}", mean_sd(&s).0, mean_sd(&rnd).0)];

        let inst = crate::harness::prepare(&c, 0).unwrap();
        let model = &inst.finite.as_ref().unwrap().model;
        let empty = f_mi_estimate(&Batch::new(), model, 3, 10, 1);
        let truth = inst.dag.clone();
        let data = &inst.finite.as_ref().unwrap().data;
        let point = reweight_posterior(&DagEnsemble::uniform(vec![truth.clone()]).unwrap(), data).unwrap();
        let (f1, shd) = eval_f1_shd(&point, &truth);
        ok &= empty == 0.0 && f1 == 1.0 && shd == 0.0;
        notes.push(format!("f_mi(empty)={empty}, point mass F1={f1} SHD={shd}"));
        (ok, notes.join("; "))
    })
}

pub fn c12_sequential() -> Report {
    timed(12, "sequential consistency", None, || {
        let mut r = seeded(0xCC);
        let mut c = ExperimentConfig::new(GraphSource::Fixed(tree5()));
        c.ensemble = 0;
        let mut failures = Vec::new();
        let mut runs = 0;
        for t in 0..40 {
            let g = random_dag(&mut r, 2, 8);
            let seed = derive(0xCC, t);
            for a in Algorithm::ALL {
                runs += 1;
                match sequential_run(&c, &g, a, 1, 1, seed) {
                    Ok(tr) => {
                        let monotone = tr.oriented.windows(2).all(|w| w[0] <= w[1]);
                        if !tr.fully_oriented || tr.rounds() > g.n_edges() || !monotone {
                            failures.push(format!("{a} on instance {t}: {} rounds, full {}", tr.rounds(), tr.fully_oriented));
                        }
                    }
                    Err(e) => failures.push(format!("{a} on instance {t}: {e}")),
                }
            }
        }
        let detail = if failures.is_empty() {
            format!("{runs} runs (40 instances x 6 algorithms, m=1 q=1) fully oriented within |edges| rounds")
        } else {
            failures[..failures.len().min(3)].join("; ")
        };
        (failures.is_empty(), detail)
    })
}
