//! `mstm`: generate data, compute ground truth, learn weights, build a fused
//! index, search it and benchmark it against the baselines.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use mstm::io::{
    load_dataset, load_queries, read_weights, training_log_csv, write_synthetic, write_weights, DatasetManifest,
    QuerySet, SyntheticSpec,
};
use mstm::{
    build_fused_index, compute_ground_truth, recall_at_k, run_bench, train_weights, BenchConfig, BenchInputs,
    BuildParams, Framework, FusedIndex, GroundTruth, JointSearcher, MrIndexSet, MultiModalDataset, NegativeSampling,
    SearchParams, TrainConfig, TrainingPair, WeightVector,
};

#[derive(Parser)]
#[command(name = "mstm", version, about = "Multimodal target-modality search over a fused proximity graph")]
#[command(after_help = "Log level is read from the MSTM_LOG environment variable (default: info).")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with queries and a manifest.
    Gen(GenArgs),
    /// Compute exact top-k ground truth for the manifest's queries.
    Gt(GtArgs),
    /// Learn modality weights from (query, positive) pairs.
    TrainWeights(TrainArgs),
    /// Build a fused index under the given weights.
    Build(BuildArgs),
    /// Search a fused index with the manifest's queries.
    Search(SearchArgs),
    /// Compare frameworks over a sweep of result-set sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// TOML file with the synthetic dataset description.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WeightArgs {
    /// Weights JSON file mapping modality index to ω².
    #[arg(long, conflicts_with = "squared_weights")]
    weights: Option<PathBuf>,
    /// Comma-separated ω² per modality, e.g. `0.7,0.2,0.1`.
    #[arg(long, value_delimiter = ',')]
    squared_weights: Option<Vec<f64>>,
}

impl WeightArgs {
    fn load(&self) -> Result<Option<WeightVector>> {
        if let Some(path) = &self.weights {
            return Ok(Some(
                read_weights(path).with_context(|| format!("weights: loading {}", path.display()))?,
            ));
        }
        if let Some(sq) = &self.squared_weights {
            return Ok(Some(WeightVector::from_squared(sq).context("weights: invalid --squared-weights")?));
        }
        Ok(None)
    }
}

#[derive(Args)]
struct GtArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    /// Truth entries per query.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Output ivecs file; defaults to the manifest's truth path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampling {
    Hard,
    Random,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output weights JSON.
    #[arg(long)]
    out: PathBuf,
    /// Per-pass loss and recall CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 0.002)]
    learning_rate: f64,
    /// Passes over the training pairs.
    #[arg(long, default_value_t = 700)]
    iterations: usize,
    #[arg(long, default_value_t = 10)]
    negatives: usize,
    #[arg(long, default_value_t = 64)]
    minibatch: usize,
    /// Steps between hard-negative re-mining.
    #[arg(long, default_value_t = 50)]
    remine_every: usize,
    #[arg(long, value_enum, default_value = "hard")]
    sampling: Sampling,
}

#[derive(Args)]
struct GraphArgs {
    /// γ: neighbor list capacity.
    #[arg(long, default_value_t = 30)]
    gamma: usize,
    /// ε: refinement sweeps of the initial graph.
    #[arg(long, default_value_t = 3)]
    epsilon: usize,
    /// Worker threads; all cores when unset.
    #[arg(long)]
    threads: Option<usize>,
}

impl GraphArgs {
    fn params(&self, seed: u64) -> BuildParams {
        BuildParams::new(self.gamma, self.epsilon, seed)
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Output index file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Overrides the weights stored in the index.
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Result set size; `max(k, n/100)` when unset.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    no_pruning: bool,
    /// Start from the seed vertex only instead of l vertices.
    #[arg(long)]
    seed_only_init: bool,
    /// Results CSV (`query,rank,id,score`); stdout when unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Fused index for `must`; built on the fly when missing.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Weights for `must` and `must-exact`; overrides the index weights.
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Comma-separated: must, mr, je, must-exact, mr-exact.
    #[arg(long, value_delimiter = ',', default_value = "must")]
    frameworks: Vec<Framework>,
    #[arg(long, value_delimiter = ',', default_value = "700,1000,1500,2000,4000")]
    l_sweep: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Truth entries counted by recall.
    #[arg(long, default_value_t = 10)]
    truth_k: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long)]
    no_pruning: bool,
    /// Candidates per MR stream; the stream's l when unset.
    #[arg(long)]
    mr_candidates: Option<usize>,
    /// Use the composition vector as MR's target-modality query.
    #[arg(long)]
    mr_composition: bool,
    /// Report CSV; a table goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_manifest(path: &Path) -> Result<(DatasetManifest, MultiModalDataset)> {
    let manifest = DatasetManifest::load(path).with_context(|| format!("io: loading manifest {}", path.display()))?;
    let data = load_dataset(&manifest).context("io: loading dataset")?;
    info!("loaded {} objects, dims {:?}", data.len(), data.dims());
    Ok((manifest, data))
}

fn load_query_set(manifest: &DatasetManifest) -> Result<QuerySet> {
    let set = load_queries(manifest).context("io: loading queries")?;
    if set.queries.is_empty() {
        bail!("io: manifest lists no queries");
    }
    Ok(set)
}

fn load_truth(manifest: &DatasetManifest) -> Result<Option<GroundTruth>> {
    match manifest.truth_path() {
        Some(p) if p.exists() => Ok(Some(
            GroundTruth::read(&p).with_context(|| format!("eval: loading truth {}", p.display()))?,
        )),
        _ => Ok(None),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().context("thread pool")?;
            Ok(pool.install(f))
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("io: writing {}", path.display()))
}

fn gen(args: &GenArgs, seed: u64) -> Result<()> {
    let text = fs::read_to_string(&args.spec).with_context(|| format!("io: reading {}", args.spec.display()))?;
    let mut spec: SyntheticSpec =
        toml::from_str(&text).with_context(|| format!("io: parsing {}", args.spec.display()))?;
    if spec.seed == 0 {
        spec.seed = seed;
    }
    write_synthetic(&spec, &args.out).context("io: generating synthetic data")?;
    info!("wrote {} objects and {} queries to {}", spec.objects, spec.queries, args.out.display());
    Ok(())
}

fn gt(args: &GtArgs) -> Result<()> {
    let (manifest, data) = load_manifest(&args.manifest)?;
    let queries = load_query_set(&manifest)?;
    let w = match args.weights.load()? {
        Some(w) => w,
        None => WeightVector::uniform(data.modalities())?,
    };
    let truth = compute_ground_truth(&data, &queries.queries, &w, args.k).context("eval: ground truth")?;
    let out = match (&args.out, manifest.truth_path()) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => p,
        (None, None) => bail!("eval: no --out given and the manifest names no truth file"),
    };
    truth.write(&out).with_context(|| format!("io: writing {}", out.display()))?;
    info!("wrote top-{} truth for {} queries to {}", args.k, truth.len(), out.display());
    Ok(())
}

fn train(args: &TrainArgs, seed: u64) -> Result<()> {
    let (manifest, data) = load_manifest(&args.manifest)?;
    let set = load_query_set(&manifest)?;
    let Some(positives) = set.positives else {
        bail!("weights: manifest lists no positives for training");
    };
    let anchors: Vec<TrainingPair> = set
        .queries
        .into_iter()
        .zip(positives)
        .map(|(anchor, positive)| TrainingPair { anchor, positive })
        .collect();
    let cfg = TrainConfig {
        learning_rate: args.learning_rate,
        iterations: args.iterations,
        negatives_per_anchor: args.negatives,
        minibatch: args.minibatch,
        remine_every: args.remine_every,
        sampling: match args.sampling {
            Sampling::Hard => NegativeSampling::Hard,
            Sampling::Random => NegativeSampling::Random,
        },
        seed,
    };
    let report = train_weights(&anchors, &data, &cfg).context("weights: training")?;
    write_weights(&args.out, &report.weights).with_context(|| format!("io: writing {}", args.out.display()))?;
    if let Some(log) = &args.log {
        write_file(log, training_log_csv(&report))?;
    }
    info!(
        "learned ω² = {:?} in {} steps, final loss {:.4}",
        report.weights.squared(),
        report.steps,
        report.loss.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn build(args: &BuildArgs, seed: u64) -> Result<()> {
    let (_, data) = load_manifest(&args.manifest)?;
    let w = match args.weights.load()? {
        Some(w) => w,
        None => WeightVector::uniform(data.modalities())?,
    };
    let params = args.graph.params(seed);
    let index = with_threads(args.graph.threads, || build_fused_index(&data, &w, &params))?.context("index: build")?;
    index.write(&args.out).with_context(|| format!("io: writing {}", args.out.display()))?;
    info!("wrote index over {} objects to {}", index.len(), args.out.display());
    Ok(())
}

fn read_index(path: &Path) -> Result<FusedIndex> {
    FusedIndex::read(path).with_context(|| format!("index: loading {}", path.display()))
}

fn search(args: &SearchArgs, seed: u64) -> Result<()> {
    let index = read_index(&args.index)?;
    let (manifest, data) = load_manifest(&args.manifest)?;
    let set = load_query_set(&manifest)?;
    let w = args.weights.load()?.unwrap_or_else(|| index.weights().clone());
    if w.len() != index.weights().len() {
        bail!(
            "search: weights cover {} modalities but the index was built over {}",
            w.len(),
            index.weights().len()
        );
    }
    let searcher = JointSearcher::with_weights(&index, &data, &w).context("search: setup")?;
    let truth = load_truth(&manifest)?;
    if let Some(t) = &truth {
        t.check(data.len(), set.queries.len()).context("eval: truth file")?;
    }

    let mut params = match args.l {
        Some(l) => SearchParams::new(args.k, l),
        None => SearchParams::with_default_l(args.k, data.len()),
    };
    params.pruning = !args.no_pruning;
    params.seed_only_init = args.seed_only_init;

    let mut csv = String::from("query,rank,id,score\n");
    let (mut recall, mut visited, mut pruned) = (0.0, 0usize, 0usize);
    for (i, q) in set.queries.iter().enumerate() {
        params.seed = seed.wrapping_add(i as u64);
        let out = searcher.search(q, &params).with_context(|| format!("search: query {i}"))?;
        for (rank, s) in out.results.iter().enumerate() {
            writeln!(csv, "{i},{},{},{}", rank + 1, s.id, s.score)?;
        }
        if let Some(t) = &truth {
            recall += recall_at_k(&out.ids(), t.get(i), args.k.min(t.get(i).len()))?;
        }
        visited += out.stats.visited;
        pruned += out.stats.pruned_evaluations;
    }
    match &args.out {
        Some(p) => write_file(p, csv)?,
        None => print!("{csv}"),
    }
    let nq = set.queries.len() as f64;
    info!(
        "{} queries, l = {}, mean visited {:.1}, mean pruned {:.1}",
        set.queries.len(),
        params.l,
        visited as f64 / nq,
        pruned as f64 / nq
    );
    if truth.is_some() {
        eprintln!("Recall@{k}({k}): {:.4}", recall / nq, k = args.k);
    }
    Ok(())
}

fn bench(args: &BenchArgs, seed: u64) -> Result<()> {
    let (manifest, data) = load_manifest(&args.manifest)?;
    let set = load_query_set(&manifest)?;
    let Some(truth) = load_truth(&manifest)? else {
        bail!("eval: bench needs a truth file; run `mstm gt` first");
    };
    let override_w = args.weights.load()?;
    let params = args.graph.params(seed);
    let needs = |fs: &[Framework]| args.frameworks.iter().any(|f| fs.contains(f));

    let index = if needs(&[Framework::Must]) {
        Some(match &args.index {
            Some(p) => read_index(p)?,
            None => {
                let w = match &override_w {
                    Some(w) => w.clone(),
                    None => bail!("eval: `must` needs --index or weights to build one"),
                };
                info!("building fused index");
                with_threads(args.graph.threads, || build_fused_index(&data, &w, &params))?.context("index: build")?
            }
        })
    } else {
        None
    };
    let mr = if needs(&[Framework::Mr, Framework::Je]) {
        info!("building per-modality indexes");
        Some(with_threads(args.graph.threads, || MrIndexSet::build(&data, &params))?.context("baselines: build")?)
    } else {
        None
    };
    let exact_w = match (&override_w, needs(&[Framework::MustExact]), &index) {
        (Some(w), _, _) => Some(w.clone()),
        (None, true, None) => bail!("eval: `must-exact` needs --index or weights"),
        _ => None,
    };

    let inputs = BenchInputs {
        data: &data,
        queries: &set.queries,
        composition: set.composition.as_deref(),
        truth: &truth,
        index: index.as_ref(),
        weights: exact_w.as_ref(),
        mr: mr.as_ref(),
    };
    let cfg = BenchConfig {
        frameworks: args.frameworks.clone(),
        l_sweep: args.l_sweep.clone(),
        k: args.k,
        truth_k: args.truth_k,
        trials: args.trials,
        pruning: !args.no_pruning,
        mr_candidates: args.mr_candidates,
        mr_composition: args.mr_composition,
        seed,
    };
    let report = run_bench(&inputs, &cfg).context("eval: bench")?;
    print!("{}", report.to_table());
    if let Some(p) = &args.out {
        write_file(p, report.to_csv())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a, cli.seed),
        Command::Gt(a) => gt(a),
        Command::TrainWeights(a) => train(a, cli.seed),
        Command::Build(a) => build(a, cli.seed),
        Command::Search(a) => search(a, cli.seed),
        Command::Bench(a) => bench(a, cli.seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MSTM_LOG", "info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
