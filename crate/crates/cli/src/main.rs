use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multiperturb::acceptance::{run_all, KNOWN_GAPS};
use multiperturb::config::{Algorithm, ConfigError, ExperimentConfig, GraphSource, Metric, Mode};
use multiperturb::harness::{self, emit, write_rounds_csv, Format, RowError};
use multiperturb::io;

#[derive(Parser)]
#[command(name = "multiperturb", version, about = "Batch design of multi-node interventions for causal structure learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random DAG and write it as an edge list.
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Design one batch for a graph and print it, one intervention per line.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Score a batch file against a graph.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Batch file, one intervention per line.
        #[arg(long)]
        batch: PathBuf,
    },
    /// Compare algorithms over repeats and write results.csv and charts.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Sequential batches against the updated essential graph.
    Loop {
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list file, or er:P:DENSITY, tree:P, complete:P, star:S1,S2,...
    #[arg(long)]
    graph: Option<String>,
    /// Comma-separated algorithms: rand, greedy1, dgc, ssg_a, ssg_b, ssg_best_q.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    /// Interventions per batch; comma-separated for a sweep.
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Targets per intervention; comma-separated for a sweep.
    #[arg(long, value_delimiter = ',')]
    q: Vec<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// infinite or finite.
    #[arg(long)]
    mode: Option<String>,
    /// edges_oriented_fraction, f_inf, f_mi, f1 or shd.
    #[arg(long)]
    metric: Option<String>,
    /// Design ensemble size; 0 uses the whole equivalence class.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Round budget for `loop`; 0 means the number of true edges.
    #[arg(long)]
    rounds: Option<usize>,
    /// Output directory (sweep, loop) or file (gen, design).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: csv, svg.
    #[arg(long, value_delimiter = ',', default_value = "csv,svg")]
    formats: Vec<String>,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long)]
    threads: Option<usize>,
    /// Zero wall-clock columns so output is byte-stable.
    #[arg(long)]
    reproducible: bool,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let graph = self.graph.as_deref().map(GraphSource::parse).transpose()?;
        let mut c = match (&self.config, graph) {
            (Some(path), graph) => {
                let mut c = ExperimentConfig::load(path)?;
                if let Some(g) = graph {
                    c.graph = g;
                }
                c
            }
            (None, Some(g)) => ExperimentConfig::new(g),
            (None, None) => return Err(Failure::Config("give --graph or --config".into())),
        };
        if !self.algo.is_empty() {
            c.algorithms = self.algo.iter().map(|a| a.parse()).collect::<Result<_, _>>()?;
        }
        if !self.m.is_empty() {
            c.m_values = self.m.clone();
        }
        if !self.q.is_empty() {
            c.q_values = self.q.clone();
        }
        c.repeats = self.repeats.unwrap_or(c.repeats);
        c.seed = self.seed.unwrap_or(c.seed);
        if let Some(mode) = &self.mode {
            c.mode = mode.parse()?;
        }
        if let Some(metric) = &self.metric {
            c.metric = metric.parse()?;
        }
        c.ensemble = self.ensemble.unwrap_or(c.ensemble);
        c.rounds = self.rounds.unwrap_or(c.rounds);
        c.threads = self.threads.unwrap_or(c.threads);
        c.reproducible |= self.reproducible;
        c.validate()?;
        Ok(c)
    }

    fn formats(&self) -> Result<Vec<Format>, Failure> {
        self.formats.iter().map(|f| f.parse().map_err(Failure::Config)).collect()
    }

    fn single_algorithm(&self, c: &ExperimentConfig) -> Result<Algorithm, Failure> {
        match c.algorithms.as_slice() {
            [a] => Ok(*a),
            _ if self.algo.is_empty() => Ok(Algorithm::Dgc),
            _ => Err(Failure::Config("design takes exactly one --algo".into())),
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_errors(errors: &[RowError]) -> Result<(), Failure> {
    for e in errors {
        let algo = e.algorithm.map_or("-".to_string(), |a| a.to_string());
        eprintln!("error: {algo} m={} q={} repeat={} seed={}: {}", e.m, e.q, e.repeat, e.seed, e.message);
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} cells failed", errors.len())))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { common } => {
            let c = common.config()?;
            let dag = harness::truth(&c, c.seed).map_err(runtime)?;
            write_or_print(&common.out, &io::format_edge_list(&dag))
        }
        Command::Design { common } => {
            let c = common.config()?;
            let algorithm = common.single_algorithm(&c)?;
            let inst = harness::prepare(&c, 0).map_err(runtime)?;
            let batch = harness::design(&c, &inst, algorithm, c.m_values[0], c.q_values[0], c.seed).map_err(runtime)?;
            write_or_print(&common.out, &io::format_batch(&batch))
        }
        Command::Eval { common, batch } => {
            let c = common.config()?;
            let inst = harness::prepare(&c, 0).map_err(runtime)?;
            let batch = io::load_batch(&batch, inst.dag.p()).map_err(|e| Failure::Config(e.to_string()))?;
            let mut metrics = vec![c.metric];
            if c.mode == Mode::Infinite && c.metric == Metric::EdgesOrientedFraction {
                metrics.push(Metric::FInf);
            }
            for metric in metrics {
                let v = harness::score(&c, &inst, &batch, metric).map_err(runtime)?;
                println!("{metric}\t{v}");
            }
            Ok(())
        }
        Command::Sweep { common } => {
            let c = common.config()?;
            let formats = common.formats()?;
            let out = harness::run_experiment(&c);
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            for path in emit(&out.rows, &dir, &formats).map_err(runtime)? {
                eprintln!("wrote {}", path.display());
            }
            report_errors(&out.errors)
        }
        Command::Loop { common } => {
            let c = common.config()?;
            if c.mode != Mode::Infinite {
                return Err(Failure::Config("loop runs in infinite mode".into()));
            }
            let out = harness::run_sequential_batches(&c);
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            std::fs::create_dir_all(&dir).map_err(runtime)?;
            let path = dir.join("rounds.csv");
            write_rounds_csv(&out.traces, &path).map_err(runtime)?;
            eprintln!("wrote {}", path.display());
            for t in &out.traces {
                println!(
                    "{}\tm={}\tq={}\trepeat={}\trounds={}\tfully_oriented={}",
                    t.algorithm,
                    t.m,
                    t.q,
                    t.repeat,
                    t.rounds(),
                    t.fully_oriented
                );
            }
            report_errors(&out.errors)
        }
        Command::Selftest => {
            let reports = run_all();
            for r in &reports {
                let gap = if !r.passed && KNOWN_GAPS.contains(&r.id) { "  [known gap]" } else { "" };
                println!("{r}{gap}");
            }
            let bad = reports.iter().filter(|r| !r.passed && !KNOWN_GAPS.contains(&r.id)).count();
            if bad == 0 {
                Ok(())
            } else {
                Err(Failure::Runtime(format!("{bad} criteria failed")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
