use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;

use nbn::analysis::{
    deception_filter, identify_optima, summarize_runs, FitnessScale, OptimaReport, RunSummary,
    SetDistance, DEFAULT_DECEPTION_DIST_MAX, DEFAULT_DECEPTION_NBD_MIN,
};
use nbn::builder::DEFAULT_LEAF_SIZE;
use nbn::io::{self as nio, Annotations, ExportFormat, RunIndex, StoredSamples};
use nbn::problems::{generate_rue, parse_tsplib, WModel, WModelParams, RUE_DEFAULT_EXTENT};
use nbn::sampling::{sample_global, sample_local, LocalStrategy};
use nbn::transition::{verify_against_cnbsi, verify_against_transition, TransitionModel};
use nbn::{build_graph, Algorithm, BuildConfig, Encoding, NbnGraph, Problem, SampleSet, Solution};

const BUILD_ID: &str = env!("NBN_BUILD_ID");

#[derive(Parser)]
#[command(name = "nbn", version, about = "Nearest-better network construction and landscape analysis")]
struct Cli {
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a global or local sample and store it.
    Sample(SampleArgs),
    /// Build the network of a stored sample.
    Build(BuildArgs),
    /// Merge trajectory records into a stored sample.
    Ingest(IngestArgs),
    /// Optima, deception and trajectory statistics.
    Analyze(AnalyzeArgs),
    /// Check a network against an exact oracle.
    Verify(VerifyArgs),
    /// Write per-node records as CSV, JSON lines or DOT.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Onemax,
    Wmodel,
    Tsp,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    UniformRadius,
    UniformBall,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Number of bits for OneMax and the W-Model.
    #[arg(long, default_value_t = 120)]
    dim: usize,
    /// Tie-free fitness perturbation for OneMax.
    #[arg(long)]
    jitter_seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    wmodel_gamma: usize,
    #[arg(long, default_value_t = 0)]
    wmodel_mu: usize,
    #[arg(long, default_value_t = 0)]
    wmodel_upsilon: usize,
    /// TSPLIB instance (EUC_2D).
    #[arg(long, conflicts_with_all = ["rue_d", "rue_seed"])]
    tsplib: Option<PathBuf>,
    /// Random uniform Euclidean instance size.
    #[arg(long)]
    rue_d: Option<usize>,
    #[arg(long, default_value_t = 1)]
    rue_seed: u64,
    #[arg(long)]
    n: usize,
    /// `optimum`, or a file of whitespace separated values (tours 1-based).
    #[arg(long, requires = "k")]
    local_center: Option<String>,
    /// Local sampling radius.
    #[arg(long, requires = "local_center")]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "uniform-radius")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Cnbsi,
    Cnbsrp,
}

#[derive(Args, Clone)]
struct BuildParams {
    #[arg(long, value_enum, default_value = "cnbsrp")]
    algo: AlgoArg,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    /// Projection rounds; derived from epsilon when absent.
    #[arg(long)]
    rounds: Option<usize>,
    /// Leaf size below which subsets are searched exhaustively.
    #[arg(long, default_value_t = DEFAULT_LEAF_SIZE)]
    nm: usize,
    /// Re-split the subset holding the stored local-sampling center.
    #[arg(long)]
    local: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    samples: PathBuf,
    #[command(flatten)]
    params: BuildParams,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    trajectories: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Raw,
    Dimension,
    Relative,
}

#[derive(Args, Clone)]
struct OptimaParams {
    #[arg(long, default_value_t = f64::NEG_INFINITY, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = 0.0)]
    vartheta: f64,
    /// Fitness mapping applied before the theta comparison.
    #[arg(long, value_enum, default_value = "raw")]
    scale: ScaleArg,
    /// Reference fitness for the relative scale; best in the set when absent.
    #[arg(long, allow_negative_numbers = true)]
    reference: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DECEPTION_NBD_MIN)]
    deception_nbd_min: f64,
    #[arg(long, default_value_t = DEFAULT_DECEPTION_DIST_MAX)]
    deception_dist_max: f64,
    /// Optimum for deception screening; best solution in the set when absent.
    #[arg(long)]
    optimum: Option<u32>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    samples: PathBuf,
    /// Prebuilt network; built from the samples when absent.
    #[arg(long, conflicts_with = "trajectories")]
    graph: Option<PathBuf>,
    /// Trajectory records merged into the samples before building.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    #[command(flatten)]
    optima: OptimaParams,
    #[command(flatten)]
    build: BuildParams,
    /// JSON report destination; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Cnbsi,
    ArgmaxTransition,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "cnbsi")]
    oracle: OracleArg,
    /// Check only the first ids.
    #[arg(long)]
    sample_cap: Option<usize>,
    /// Mutation step size of the transition model.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
    Dot,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Include plot coordinates.
    #[arg(long)]
    layout: bool,
    /// Flag optima and deceptive candidates.
    #[arg(long)]
    flags: bool,
    #[command(flatten)]
    optima: OptimaParams,
    /// Destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(nbn::Error),
}

impl From<nbn::Error> for Failure {
    fn from(e: nbn::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn header(command: &str, seed: Option<u64>, params: serde_json::Value) {
    let seed = seed.map_or("-".to_string(), |s| s.to_string());
    eprintln!(
        "# nbn {} build {BUILD_ID} command={command} seed={seed} params={params}",
        env!("CARGO_PKG_VERSION")
    );
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Sample(a) => sample(a),
        Command::Build(a) => build(a),
        Command::Ingest(a) => ingest(a),
        Command::Analyze(a) => analyze(a),
        Command::Verify(a) => verify(a),
        Command::Export(a) => export(a),
    }
}

fn make_problem(a: &SampleArgs) -> CliResult<Problem> {
    Ok(match a.problem {
        ProblemArg::Onemax => match a.jitter_seed {
            None => Problem::onemax(a.dim),
            Some(s) => Problem::onemax_jittered(a.dim, s),
        },
        ProblemArg::Wmodel => Problem::WModel(WModel::new(WModelParams::new(
            a.dim,
            a.wmodel_gamma,
            a.wmodel_mu,
            a.wmodel_upsilon,
        ))?),
        ProblemArg::Tsp => match (&a.tsplib, a.rue_d) {
            (Some(path), _) => Problem::Tsp(parse_tsplib(&std::fs::read_to_string(path)?)?),
            (None, Some(d)) => {
                if d < 3 {
                    return Err(Failure::Usage("--rue-d must be at least 3".into()));
                }
                Problem::Tsp(generate_rue(d, a.rue_seed, RUE_DEFAULT_EXTENT))
            }
            (None, None) => {
                return Err(Failure::Usage("tsp needs --tsplib or --rue-d".into()));
            }
        },
    })
}

fn read_center(spec: &str, problem: &Problem) -> CliResult<Vec<u32>> {
    if spec == "optimum" {
        return problem
            .optimum()
            .ok_or_else(|| Failure::Usage("this problem has no closed-form optimum".into()));
    }
    let text = std::fs::read_to_string(spec)?;
    let shift = (problem.encoding() == Encoding::Tour) as u32;
    let mut values = Vec::new();
    for (i, tok) in text.split_whitespace().enumerate() {
        let v: u32 = tok.parse().map_err(|_| {
            nbn::Error::InvalidSolution(format!("center value {} is not a number: `{tok}`", i + 1))
        })?;
        if v < shift {
            return Err(nbn::Error::InvalidSolution("cities are numbered from 1".into()).into());
        }
        values.push(v - shift);
    }
    problem.evaluate(&values)?;
    Ok(values)
}

fn sample(a: SampleArgs) -> CliResult<()> {
    header(
        "sample",
        Some(a.seed),
        serde_json::json!({"n": a.n, "k": a.k, "local_center": a.local_center}),
    );
    let problem = Arc::new(make_problem(&a)?);
    if a.n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    let (set, center) = match (&a.local_center, a.k) {
        (Some(spec), Some(k)) => {
            if k < 1 {
                return Err(Failure::Usage("--k must be at least 1".into()));
            }
            let center = read_center(spec, &problem)?;
            let strategy = match a.strategy {
                StrategyArg::UniformRadius => LocalStrategy::UniformRadius,
                StrategyArg::UniformBall => LocalStrategy::UniformBall,
            };
            let set = sample_local(&problem, &center, k, a.n, a.seed, strategy)?;
            (set, Some(center))
        }
        _ => (sample_global(&problem, a.n, a.seed)?, None),
    };
    eprintln!("# problem={} samples={}", problem.name(), set.len());
    nio::save_samples(&a.out, &set, center.as_deref(), None)?;
    Ok(())
}

fn load(path: &Path) -> CliResult<StoredSamples> {
    Ok(nio::load_samples(path, None)?)
}

fn build_config(p: &BuildParams, stored: &StoredSamples) -> CliResult<BuildConfig> {
    let center = if p.local {
        let c = stored.center.clone().ok_or_else(|| {
            Failure::Usage("--local needs a sample file drawn around a center".into())
        })?;
        let f = stored.set.problem().evaluate(&c)?;
        Some(Solution::new(c, f))
    } else {
        None
    };
    Ok(BuildConfig {
        algorithm: match p.algo {
            AlgoArg::Cnbsi => Algorithm::Cnbsi,
            AlgoArg::Cnbsrp => Algorithm::Cnbsrp,
        },
        rounds: p.rounds,
        epsilon: p.epsilon,
        leaf_size: p.nm,
        seed: p.seed,
        center,
    })
}

fn build_with(set: Arc<SampleSet>, cfg: &BuildConfig) -> CliResult<NbnGraph> {
    if cfg.algorithm == Algorithm::Cnbsrp {
        let rounds = cfg.effective_rounds(set.len())?;
        eprintln!("# rounds={rounds} leaf_size={}", cfg.leaf_size);
    }
    Ok(build_graph(set, cfg)?)
}

fn build(a: BuildArgs) -> CliResult<()> {
    let stored = load(&a.samples)?;
    let cfg = build_config(&a.params, &stored)?;
    header("build", Some(cfg.seed), serde_json::to_value(&cfg).unwrap_or_default());
    let g = build_with(Arc::new(stored.set), &cfg)?;
    eprintln!("# nodes={} roots={}", g.len(), g.roots().len());
    nio::save_graph(&a.out, &g)?;
    Ok(())
}

fn ingest(a: IngestArgs) -> CliResult<()> {
    header("ingest", None, serde_json::json!({"trajectories": a.trajectories}));
    let stored = load(&a.samples)?;
    let (set, runs) = merge_trajectories(&stored, &a.trajectories)?;
    nio::save_samples(&a.out, &set, stored.center.as_deref(), Some(&runs))?;
    Ok(())
}

fn merge_trajectories(stored: &StoredSamples, path: &Path) -> CliResult<(SampleSet, RunIndex)> {
    let (set, new_runs) = nio::ingest_trajectories(path, &stored.set)?;
    let mut runs = stored.runs.clone().unwrap_or_default();
    for (id, run, it) in new_runs.labels() {
        runs.add(id, run, it);
    }
    eprintln!(
        "# merged {} labels from {} runs; samples={}",
        new_runs.len(),
        new_runs.run_count(),
        set.len()
    );
    Ok((set, runs))
}

fn scale_of(p: &OptimaParams) -> FitnessScale {
    match p.scale {
        ScaleArg::Raw => FitnessScale::Raw,
        ScaleArg::Dimension => FitnessScale::Dimension,
        ScaleArg::Relative => FitnessScale::RelativeToBest {
            reference: p.reference,
        },
    }
}

struct Screening {
    optima: OptimaReport,
    optimum: u32,
    deceptive: Vec<u32>,
}

fn screen(g: &NbnGraph, p: &OptimaParams) -> CliResult<Screening> {
    let optima = identify_optima(g, p.theta, p.vartheta, scale_of(p))?;
    let optimum = match p.optimum {
        Some(o) if o as usize >= g.len() => {
            return Err(Failure::Usage(format!("--optimum {o} is not in the sample")));
        }
        Some(o) => o,
        None => optima
            .global_optimum_id
            .ok_or_else(|| nbn::Error::Config("empty sample".into()))?,
    };
    let deceptive = deception_filter(g, optimum, p.deception_nbd_min, p.deception_dist_max);
    Ok(Screening {
        optima,
        optimum,
        deceptive,
    })
}

#[derive(Serialize)]
struct AnalysisReport {
    problem: String,
    samples: usize,
    roots: usize,
    optima: OptimaReport,
    optimum: u32,
    deception_nbd_min: f64,
    deception_dist_max: f64,
    deceptive: Vec<u32>,
    runs: Option<RunSummary>,
    all_runs: Option<SetDistance>,
}

fn analyze(a: AnalyzeArgs) -> CliResult<()> {
    let stored = load(&a.samples)?;
    let (set, runs) = match &a.trajectories {
        Some(t) => {
            let (s, r) = merge_trajectories(&stored, t)?;
            (s, Some(r))
        }
        None => (stored.set.clone(), stored.runs.clone()),
    };
    let set = Arc::new(set);
    let cfg = build_config(&a.build, &stored)?;
    header(
        "analyze",
        Some(cfg.seed),
        serde_json::json!({
            "theta": a.optima.theta, "vartheta": a.optima.vartheta,
            "deception_nbd_min": a.optima.deception_nbd_min,
            "deception_dist_max": a.optima.deception_dist_max,
        }),
    );
    let g = match &a.graph {
        Some(path) => nio::load_graph(path, set.clone())?,
        None => build_with(set.clone(), &cfg)?,
    };
    let s = screen(&g, &a.optima)?;
    let run_summary = match &runs {
        Some(r) => summarize_runs(&g, &r.runs())?,
        None => None,
    };
    let all_runs = match &runs {
        Some(r) if !r.is_empty() => {
            let ids: Vec<u32> = r.labels().iter().map(|l| l.0).collect();
            Some(nbn::analysis::set_distance(&g, &ids)?)
        }
        _ => None,
    };
    let report = AnalysisReport {
        problem: set.problem().name(),
        samples: set.len(),
        roots: g.roots().len(),
        optima: s.optima,
        optimum: s.optimum,
        deception_nbd_min: a.optima.deception_nbd_min,
        deception_dist_max: a.optima.deception_dist_max,
        deceptive: s.deceptive,
        runs: run_summary,
        all_runs,
    };
    let mut out = open_out(a.report.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(nbn::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    header(
        "verify",
        None,
        serde_json::json!({"sample_cap": a.sample_cap, "r": a.r}),
    );
    let stored = load(&a.samples)?;
    let set = Arc::new(stored.set);
    let g = nio::load_graph(&a.graph, set.clone())?;
    let report = match a.oracle {
        OracleArg::Cnbsi => {
            if a.sample_cap.is_some() {
                warn!("--sample-cap is ignored by the cnbsi oracle");
            }
            verify_against_cnbsi(&g)
        }
        OracleArg::ArgmaxTransition => {
            let model = TransitionModel::new(a.r, set.dim())
                .map_err(|e| Failure::Usage(e.to_string()))?;
            verify_against_transition(&g, &model, a.sample_cap)
        }
    };
    println!(
        "{}",
        serde_json::json!({
            "oracle": report.oracle,
            "checked": report.checked,
            "mismatched": report.mismatched.len(),
            "worse": report.worse.len(),
            "error_rate": report.error_rate(),
            "unsound": report.unsound.len(),
        })
    );
    if !report.unsound.is_empty() {
        return Err(nbn::Error::Invariant(format!("{} unsound links", report.unsound.len())).into());
    }
    Ok(())
}

fn export(a: ExportArgs) -> CliResult<()> {
    header("export", None, serde_json::json!({"layout": a.layout, "flags": a.flags}));
    let stored = load(&a.samples)?;
    let set = Arc::new(stored.set);
    let g = nio::load_graph(&a.graph, set)?;
    let layout = a.layout.then(|| nio::layout_2d(&g));
    let screening = if a.flags { Some(screen(&g, &a.optima)?) } else { None };
    let ann = Annotations {
        optima: screening.as_ref().map(|s| &s.optima.optima_ids[..]),
        deceptive: screening.as_ref().map(|s| &s.deceptive[..]),
        runs: stored.runs.as_ref(),
        layout: layout.as_deref(),
    };
    let format = match a.format {
        FormatArg::Csv => ExportFormat::Csv,
        FormatArg::Jsonl => ExportFormat::Jsonl,
        FormatArg::Dot => ExportFormat::Dot,
    };
    nio::export_graph(&g, format, &ann, open_out(a.out.as_deref())?)?;
    Ok(())
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
