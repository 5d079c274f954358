//! Command-line definitions and subcommand implementations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use amrqe_core::amr::AmrGraph;
use amrqe_core::apps::{
    check_ranks, correlation_p_value, correlation_table, kde_scott, pearson, percentiles, permutation_shard, rank_systems,
    ranking_report, scott_bandwidth, select_parse_index, shard_plan, Candidate, CandidateSet, RankingReport, Selection,
    Significance, SystemRank,
};
use amrqe_core::datagen::{derive_seed, gen_training_corpus, SystemSpec};
use amrqe_core::metrics::{evaluate_all_with, Prf, ScoreVector, SmatchOptions, Task, SCORE_DIM};
use amrqe_core::model::{EpochRecord, Model, ModelConfig, TrainConfig};
use amrqe_core::preprocess::{build_vocab, linearize_input, read_dep_tsv, tokenize_sentence, DepTree, DEFAULT_MAX_LEN};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{format_entry, read_corpus, CorpusEntry};
use crate::dataset::{read_dataset, read_vocab, to_examples, write_dataset, write_vocab, Record};
use crate::error::{read_to_string, write_file, AppError, Result};
use crate::modelfile::{load_model, save_model};
use crate::tables::{
    format_key_values, format_manifest, format_scores, num, read_manifest, read_prior, read_rows, read_scores,
    read_true_ranks, ManifestRow, ScoreRow, PRIOR_HEADER, SPLIT_HEADER,
};

#[derive(Debug, Parser)]
#[command(name = "amrqe", version, about = "AMR evaluation suite and parse accuracy prediction")]
pub struct Cli {
    /// Base directory for relative paths.
    #[arg(long, global = true, env = "AMRQE_DATA_DIR", default_value = ".")]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score parses against gold graphs on all 36 metrics.
    Eval(EvalArgs),
    /// Generate a synthetic corpus with simulated parser outputs.
    Gen(GenArgs),
    /// Linearize parses into a training/prediction dataset.
    Prep(PrepArgs),
    /// Train an accuracy prediction model.
    Train(TrainArgs),
    /// Predict the 36 scores for every record of a dataset.
    Predict(PredictArgs),
    /// Pick the best candidate parse per sentence.
    Rank(RankArgs),
    /// Rank systems by mean predicted Smatch F1 and test the ranking.
    RankSystems(RankSystemsArgs),
    /// Correlations, percentiles and density estimates of predictions.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// System name written in the output rows.
    #[arg(long, default_value = "pred")]
    pub system: String,
    /// Append the mean over all rows.
    #[arg(long)]
    pub summary: bool,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub sentences: usize,
    /// Comma-separated `name:severity` list.
    #[arg(long, default_value = "low:1,mid:3,high:6")]
    pub systems: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Percentage of sentences assigned to the dev split.
    #[arg(long, default_value_t = 15)]
    pub dev_pct: u64,
    /// Percentage of sentences assigned to the test split.
    #[arg(long, default_value_t = 15)]
    pub test_pct: u64,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Candidate manifest (sentence_id, system, parse_file, offset).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Gold corpus; enables target scores.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Dependency trees, one per sentence in order of first appearance in
    /// the manifest.
    #[arg(long)]
    pub deps: Option<PathBuf>,
    #[arg(long, requires = "split")]
    pub split_file: Option<PathBuf>,
    /// Keep only sentences of this split.
    #[arg(long, requires = "split_file")]
    pub split: Option<String>,
    /// Existing vocabulary to encode against.
    #[arg(long, conflicts_with = "vocab_out")]
    pub vocab: Option<PathBuf>,
    /// Build a vocabulary from this dataset and write it here.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub min_freq: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch history TSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 128)]
    pub hidden_dim: usize,
    /// Feed sentence-order tokens instead of the dependency linearization.
    #[arg(long)]
    pub no_dep: bool,
    #[arg(long)]
    pub no_pointers: bool,
    /// Predict all 36 scores from one flat head.
    #[arg(long)]
    pub no_hl: bool,
    /// Train on the Smatch scores only.
    #[arg(long)]
    pub no_hmtl: bool,
    /// One recurrent layer per encoder instead of two.
    #[arg(long)]
    pub one_lstm: bool,
    /// Suppress per-epoch progress on standard error.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Predicted scores (id, system, 36 columns).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold corpus; enables the oracle and baseline summary.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Per-system dev Smatch F1 added to the predicted score.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct RankSystemsArgs {
    /// Predicted scores (id, system, 36 columns).
    #[arg(long, required_unless_present = "rank_pairs", conflicts_with = "rank_pairs")]
    pub predictions: Option<PathBuf>,
    /// Reference ranking (system, true_rank).
    #[arg(long)]
    pub true_ranks: Option<PathBuf>,
    /// Precomputed rankings (system, predicted_rank, true_rank).
    #[arg(long)]
    pub rank_pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold scores (id, system, 36 columns); enables correlations.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Comma-separated percentiles of predicted Smatch F1.
    #[arg(long, default_value = "5,25,75,90,95,97,99")]
    pub quantiles: String,
    /// Density grid points over [-0.25, 1.25].
    #[arg(long, default_value_t = 151)]
    pub grid: usize,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[command(flatten)]
    pub output: Output,
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let base = cli.data_dir;
    match cli.command {
        Command::Eval(a) => cmd_eval(&base, a),
        Command::Gen(a) => cmd_gen(&base, a),
        Command::Prep(a) => cmd_prep(&base, a),
        Command::Train(a) => cmd_train(&base, a),
        Command::Predict(a) => cmd_predict(&base, a),
        Command::Rank(a) => cmd_rank(&base, a),
        Command::RankSystems(a) => cmd_rank_systems(&base, a),
        Command::Report(a) => cmd_report(&base, a),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn existing(base: &Path, p: &Path) -> Result<PathBuf> {
    let full = resolve(base, p);
    if !full.is_file() {
        return Err(AppError::io(&full, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
    }
    Ok(full)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start {jobs} workers: {e}")))
}

fn emit(base: &Path, out: &Output, text: String) -> Result<()> {
    match &out.out {
        Some(p) => write_file(&resolve(base, p), text),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| AppError::io(Path::new("<stdout>"), e))
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn gold_graph<'a>(path: &Path, e: &'a CorpusEntry) -> Result<&'a AmrGraph> {
    e.graph.as_ref().map_err(|err| AppError::Penman { path: path.to_path_buf(), source: err.clone() })
}

#[derive(Serialize)]
struct ScoreTableJson<'a> {
    columns: Vec<String>,
    rows: Vec<ScoreRowJson<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct ScoreRowJson<'a> {
    id: &'a str,
    system: &'a str,
    values: Vec<f64>,
}

fn mean_scores(rows: &[ScoreRow]) -> ScoreVector {
    let mut acc = [0.0; SCORE_DIM];
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r.scores.to_array()) {
            *a += v;
        }
    }
    let n = rows.len().max(1) as f64;
    ScoreVector::from_slice(&acc.map(|a| a / n)).expect("36 values")
}

fn render_scores(rows: &[ScoreRow], mean: Option<ScoreVector>, format: Format) -> Result<String> {
    match format {
        Format::Tsv => {
            let mut text = format_scores(rows);
            if let Some(m) = mean {
                let summary = format_scores(&[ScoreRow { id: "MEAN".into(), system: "*".into(), scores: m }]);
                text.push_str(summary.lines().nth(1).unwrap_or_default());
                text.push('\n');
            }
            Ok(text)
        }
        Format::Json => json(&ScoreTableJson {
            columns: ScoreVector::column_names(),
            rows: rows
                .iter()
                .map(|r| ScoreRowJson { id: &r.id, system: &r.system, values: r.scores.to_array().to_vec() })
                .collect(),
            mean: mean.map(|m| m.to_array().to_vec()),
        }),
    }
}

fn cmd_eval(base: &Path, a: EvalArgs) -> Result<()> {
    let pred_path = existing(base, &a.pred)?;
    let gold_path = existing(base, &a.gold)?;
    let pred = read_corpus(&pred_path)?;
    let gold = read_corpus(&gold_path)?;
    if pred.len() != gold.len() {
        return Err(AppError::Usage(format!(
            "{} holds {} graphs but {} holds {}",
            pred_path.display(),
            pred.len(),
            gold_path.display(),
            gold.len()
        )));
    }
    if a.restarts == 0 {
        return Err(AppError::Usage("--restarts must be at least 1".into()));
    }
    let golds = gold.iter().map(|g| gold_graph(&gold_path, g)).collect::<Result<Vec<_>>>()?;
    for p in &pred {
        if let Err(e) = &p.graph {
            warn(format!("{}: entry {} unreadable, scored as 0: {e}", pred_path.display(), p.id));
        }
    }
    let opts = SmatchOptions { restarts: a.restarts, seed: a.seed };
    let scores: Vec<ScoreVector> = pool(a.jobs)?.install(|| {
        pred.par_iter()
            .zip(golds.par_iter())
            .map(|(p, g)| p.graph.as_ref().map_or(ScoreVector::zeros(), |pg| evaluate_all_with(pg, g, opts)))
            .collect()
    });
    let rows: Vec<ScoreRow> = gold
        .iter()
        .zip(scores)
        .map(|(g, s)| ScoreRow { id: g.id.clone(), system: a.system.clone(), scores: s })
        .collect();
    let mean = a.summary.then(|| mean_scores(&rows));
    emit(base, &a.output, render_scores(&rows, mean, a.output.format)?)
}

fn parse_systems(spec: &str) -> Result<Vec<SystemSpec>> {
    let mut out: Vec<SystemSpec> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, sev) = item
            .split_once(':')
            .ok_or_else(|| AppError::Usage(format!("system {item:?} is not name:severity")))?;
        let sev: usize = sev.parse().map_err(|_| AppError::Usage(format!("bad severity in {item:?}")))?;
        if name.is_empty() || name.contains(['\t', '/', '\\']) || out.iter().any(|s| s.name == name) {
            return Err(AppError::Usage(format!("invalid or duplicate system name {name:?}")));
        }
        out.push(SystemSpec::with_severity(name, sev));
    }
    if out.is_empty() {
        return Err(AppError::Usage("no systems given".into()));
    }
    Ok(out)
}

/// Deterministic split of sentence `i`.
fn split_of(seed: u64, i: usize, dev_pct: u64, test_pct: u64) -> &'static str {
    let h = derive_seed(seed ^ 0x5eed_5b17, i as u64) % 100;
    if h < dev_pct {
        "dev"
    } else if h < dev_pct + test_pct {
        "test"
    } else {
        "train"
    }
}

fn cmd_gen(base: &Path, a: GenArgs) -> Result<()> {
    let systems = parse_systems(&a.systems)?;
    if a.sentences == 0 {
        return Err(AppError::Usage("--sentences must be positive".into()));
    }
    if a.dev_pct + a.test_pct > 100 {
        return Err(AppError::Usage("split percentages exceed 100".into()));
    }
    let out = resolve(base, &a.out);
    let corpus = gen_training_corpus(a.sentences, &systems, a.seed);
    let mut gold = String::new();
    let mut split = Vec::new();
    for (i, g) in corpus.golds.iter().enumerate() {
        format_entry(&mut gold, &g.id, Some(&g.sentence.join(" ")), &g.graph);
        split.push((g.id.as_str(), split_of(a.seed, i, a.dev_pct, a.test_pct).to_string()));
    }
    write_file(&out.join("gold.amr"), gold)?;
    write_file(&out.join("split.tsv"), format_key_values(SPLIT_HEADER, split.iter().map(|(k, v)| (*k, v.clone()))))?;

    let mut parses: BTreeMap<&str, String> = BTreeMap::new();
    let mut manifest = Vec::new();
    let mut scores = Vec::new();
    let mut dev_sum: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let n_sys = systems.len();
    for (k, inst) in corpus.instances.iter().enumerate() {
        let sentence = k / n_sys;
        let file = format!("parses/{}.amr", inst.system);
        format_entry(parses.entry(&inst.system).or_default(), &inst.sentence_id, Some(&inst.sentence.join(" ")), &inst.parse);
        manifest.push((inst.sentence_id.clone(), inst.system.clone(), file, sentence));
        scores.push(ScoreRow { id: inst.sentence_id.clone(), system: inst.system.clone(), scores: inst.targets });
        let e = dev_sum.entry(&inst.system).or_default();
        if split[sentence].1 == "dev" {
            e.0 += inst.targets.smatch_f1();
            e.1 += 1;
        }
    }
    for (sys, text) in &parses {
        write_file(&out.join(format!("parses/{sys}.amr")), text)?;
    }
    write_file(&out.join("manifest.tsv"), format_manifest(&manifest))?;
    write_file(&out.join("scores.tsv"), format_scores(&scores))?;
    let prior = systems.iter().map(|s| {
        let (sum, n) = dev_sum.get(s.name.as_str()).copied().unwrap_or_default();
        (s.name.as_str(), num(if n > 0 { sum / n as f64 } else { 0.0 }))
    });
    write_file(&out.join("prior.tsv"), format_key_values(PRIOR_HEADER, prior))?;
    Ok(())
}

/// Parse files referenced by a manifest, read once each.
struct ParseCache(HashMap<PathBuf, Vec<CorpusEntry>>);

impl ParseCache {
    fn load(rows: &[&ManifestRow]) -> Result<ParseCache> {
        let mut map = HashMap::new();
        for r in rows {
            if !map.contains_key(&r.parse_file) {
                map.insert(r.parse_file.clone(), read_corpus(&r.parse_file)?);
            }
        }
        Ok(ParseCache(map))
    }

    fn get(&self, r: &ManifestRow) -> Result<&CorpusEntry> {
        self.0[&r.parse_file].get(r.offset).ok_or_else(|| {
            AppError::Usage(format!("{} has no entry at offset {}", r.parse_file.display(), r.offset))
        })
    }
}

fn read_split(path: &Path, want: &str) -> Result<BTreeSet<String>> {
    Ok(read_rows(path, &SPLIT_HEADER)?
        .into_iter()
        .filter(|(_, c)| c.get(1).map(String::as_str) == Some(want))
        .map(|(_, c)| c[0].clone())
        .collect())
}

fn cmd_prep(base: &Path, a: PrepArgs) -> Result<()> {
    let manifest_path = existing(base, &a.manifest)?;
    let manifest = read_manifest(&manifest_path)?;
    let gold_path = a.gold.as_ref().map(|g| existing(base, g)).transpose()?;
    let deps_path = a.deps.as_ref().map(|d| existing(base, d)).transpose()?;
    let split_path = a.split_file.as_ref().map(|s| existing(base, s)).transpose()?;
    let vocab_in = a.vocab.as_ref().map(|v| existing(base, v)).transpose()?;
    if vocab_in.is_none() && a.vocab_out.is_none() {
        return Err(AppError::Usage("either --vocab or --vocab-out is required".into()));
    }
    if a.restarts == 0 || a.max_len == 0 {
        return Err(AppError::Usage("--restarts and --max-len must be positive".into()));
    }

    let keep = match (&split_path, &a.split) {
        (Some(p), Some(s)) => Some(read_split(p, s)?),
        _ => None,
    };
    let gold: Option<BTreeMap<String, CorpusEntry>> = match &gold_path {
        Some(p) => Some(read_corpus(p)?.into_iter().map(|e| (e.id.clone(), e)).collect()),
        None => None,
    };
    let mut sentence_order: Vec<&str> = Vec::new();
    for r in &manifest {
        if !sentence_order.contains(&r.sentence_id.as_str()) {
            sentence_order.push(&r.sentence_id);
        }
    }
    let deps: Option<BTreeMap<&str, DepTree>> = match &deps_path {
        Some(p) => {
            let trees = read_dep_tsv(&read_to_string(p)?)?;
            if trees.len() != sentence_order.len() {
                return Err(AppError::format(
                    p,
                    0,
                    format!("{} trees for {} sentences in the manifest", trees.len(), sentence_order.len()),
                ));
            }
            Some(sentence_order.iter().copied().zip(trees).collect())
        }
        None => None,
    };

    let selected: Vec<&ManifestRow> =
        manifest.iter().filter(|r| keep.as_ref().is_none_or(|k| k.contains(&r.sentence_id))).collect();
    let cache = ParseCache::load(&selected)?;
    let opts = SmatchOptions { restarts: a.restarts, seed: a.seed };

    let build = |r: &&ManifestRow| -> Result<Option<Record>> {
        let entry = cache.get(r)?;
        let Ok(parse) = &entry.graph else {
            return Ok(None);
        };
        let gold_entry = match &gold {
            Some(g) => Some(g.get(&r.sentence_id).ok_or_else(|| {
                AppError::Usage(format!("sentence {} missing from the gold corpus", r.sentence_id))
            })?),
            None => None,
        };
        let targets = match (gold_entry, &gold_path) {
            (Some(e), Some(p)) => Some(evaluate_all_with(parse, gold_graph(p, e)?, opts).to_array().to_vec()),
            _ => None,
        };
        let tree = match &deps {
            Some(d) => d[r.sentence_id.as_str()].clone(),
            None => {
                let snt = gold_entry.and_then(|e| e.sentence.as_deref()).or(entry.sentence.as_deref()).ok_or_else(|| {
                    AppError::Usage(format!("no sentence text for {} (add # ::snt or --deps)", r.sentence_id))
                })?;
                DepTree::flat(&tokenize_sentence(snt))
            }
        };
        let input = linearize_input(parse, &tree)?;
        Ok(Some(Record { id: r.sentence_id.clone(), system: r.system.clone(), input, targets }))
    };
    let built: Vec<Option<Record>> = pool(a.jobs)?.install(|| selected.par_iter().map(build).collect::<Result<Vec<_>>>())?;
    let mut records = Vec::with_capacity(built.len());
    for (r, rec) in selected.iter().zip(built) {
        match rec {
            Some(rec) => records.push(rec),
            None => warn(format!("{} entry {}: unreadable parse skipped", r.parse_file.display(), r.offset)),
        }
    }
    if records.is_empty() {
        return Err(AppError::Usage("no records selected".into()));
    }
    if let Some(out) = &a.vocab_out {
        let inputs: Vec<_> = records.iter().map(|r| r.input.clone()).collect();
        let vocab = build_vocab(&inputs, a.min_freq, a.max_len)?;
        write_vocab(&resolve(base, out), &vocab)?;
    }
    write_dataset(&resolve(base, &a.out), &records)
}

fn cmd_train(base: &Path, a: TrainArgs) -> Result<()> {
    let train_path = existing(base, &a.train)?;
    let dev_path = existing(base, &a.dev)?;
    let vocab = read_vocab(&existing(base, &a.vocab)?)?;
    let train = to_examples(&train_path, &read_dataset(&train_path)?, &vocab)?;
    let dev = to_examples(&dev_path, &read_dataset(&dev_path)?, &vocab)?;
    let config = ModelConfig {
        embed_dim: a.embed_dim,
        hidden_dim: a.hidden_dim,
        lstm_layers: if a.one_lstm { 1 } else { 2 },
        use_dep: !a.no_dep,
        use_pointers: !a.no_pointers,
        hierarchical: !a.no_hl,
        multitask: !a.no_hmtl,
        seed: a.seed,
        ..ModelConfig::for_vocab(&vocab)
    };
    let tc = TrainConfig { lr: a.lr, epochs: a.epochs, batch_size: a.batch, seed: a.seed, ..TrainConfig::default() };
    let quiet = a.quiet;
    let progress = |r: &EpochRecord| {
        if !quiet {
            eprintln!(
                "epoch {:>3}  train_loss {:.6}  dev_loss {:.6}  dev_pearson {}",
                r.epoch,
                r.train_loss,
                r.dev_loss,
                r.dev_pearson.map_or("NA".into(), num)
            );
        }
    };
    let (model, history) = Model::init(config)?.train_with(&train, &dev, &tc, progress)?;
    save_model(&resolve(base, &a.out), &model, &vocab)?;
    if let Some(h) = &a.history {
        let mut text = String::from("epoch\ttrain_loss\tdev_loss\tdev_pearson\tbest\n");
        for r in &history.records {
            let _ = writeln!(
                text,
                "{}\t{}\t{}\t{}\t{}",
                r.epoch,
                num(r.train_loss),
                num(r.dev_loss),
                r.dev_pearson.map_or("NA".into(), num),
                u8::from(r.epoch == history.best_epoch)
            );
        }
        write_file(&resolve(base, h), text)?;
    }
    let best = &history.records[history.best_epoch];
    println!("best_epoch\t{}\tdev_pearson\t{}", history.best_epoch, best.dev_pearson.map_or("NA".into(), num));
    Ok(())
}

fn cmd_predict(base: &Path, a: PredictArgs) -> Result<()> {
    let (model, vocab) = load_model(&existing(base, &a.model)?)?;
    let data_path = existing(base, &a.data)?;
    let records = read_dataset(&data_path)?;
    let preds: Vec<ScoreVector> = pool(a.jobs)?.install(|| {
        records
            .par_iter()
            .map(|r| model.predict(&amrqe_core::preprocess::encode(&r.input, &vocab, vocab.max_len)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let rows: Vec<ScoreRow> = records
        .iter()
        .zip(preds)
        .map(|(r, s)| ScoreRow { id: r.id.clone(), system: r.system.clone(), scores: s })
        .collect();
    emit(base, &a.output, render_scores(&rows, None, a.output.format)?)
}

fn index_scores(path: &Path, rows: Vec<ScoreRow>) -> Result<BTreeMap<(String, String), ScoreVector>> {
    let mut out = BTreeMap::new();
    for r in rows {
        if out.insert((r.id.clone(), r.system.clone()), r.scores).is_some() {
            return Err(AppError::format(path, 0, format!("duplicate row for {}/{}", r.id, r.system)));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct RankJson<'a> {
    selections: &'a [Selection],
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a RankingReport>,
}

fn prf_cells(p: Prf) -> String {
    format!("{}\t{}\t{}", num(p.precision), num(p.recall), num(p.f1))
}

fn cmd_rank(base: &Path, a: RankArgs) -> Result<()> {
    let manifest_path = existing(base, &a.manifest)?;
    let manifest = read_manifest(&manifest_path)?;
    let pred_path = existing(base, &a.predictions)?;
    let preds = index_scores(&pred_path, read_scores(&pred_path)?)?;
    let prior = a.prior.as_ref().map(|p| existing(base, p).and_then(|p| read_prior(&p))).transpose()?;
    let gold = match &a.gold {
        Some(g) => {
            let p = existing(base, g)?;
            let entries: BTreeMap<String, CorpusEntry> = read_corpus(&p)?.into_iter().map(|e| (e.id.clone(), e)).collect();
            Some((p, entries))
        }
        None => None,
    };
    // sentences without any prediction belong to another split
    let predicted_ids: BTreeSet<&str> = preds.keys().map(|(id, _)| id.as_str()).collect();
    let all: Vec<&ManifestRow> = manifest.iter().filter(|r| predicted_ids.contains(r.sentence_id.as_str())).collect();
    let skipped = manifest.len() - all.len();
    if skipped > 0 {
        warn(format!("{skipped} manifest rows skipped: their sentences have no predictions"));
    }
    if all.is_empty() {
        return Err(AppError::Usage("no manifest sentence has predictions".into()));
    }
    let cache = if gold.is_some() { Some(ParseCache::load(&all)?) } else { None };
    let opts = SmatchOptions { restarts: a.restarts, seed: a.seed };

    let mut sets: Vec<CandidateSet> = Vec::new();
    let mut pos: BTreeMap<&str, usize> = BTreeMap::new();
    for r in all {
        let predicted = match preds.get(&(r.sentence_id.clone(), r.system.clone())) {
            Some(p) => *p,
            None => {
                warn(format!("no prediction for {}/{}, using 0", r.sentence_id, r.system));
                ScoreVector::zeros()
            }
        };
        let (parse, gold_scores) = match (&cache, &gold) {
            (Some(c), Some((gp, entries))) => {
                let e = entries.get(&r.sentence_id).ok_or_else(|| {
                    AppError::Usage(format!("sentence {} missing from the gold corpus", r.sentence_id))
                })?;
                let g = gold_graph(gp, e)?;
                let parse = c.get(r)?.graph.as_ref().ok().cloned();
                let s = parse.as_ref().map_or(ScoreVector::zeros(), |p| evaluate_all_with(p, g, opts));
                (parse, Some(s))
            }
            _ => (None, None),
        };
        let idx = *pos.entry(&r.sentence_id).or_insert_with(|| {
            sets.push(CandidateSet { sentence_id: r.sentence_id.clone(), candidates: Vec::new() });
            sets.len() - 1
        });
        sets[idx].candidates.push(Candidate { system: r.system.clone(), parse, predicted, gold: gold_scores });
    }
    let (selections, summary) = if gold.is_some() {
        let report = ranking_report(&sets, prior.as_ref())?;
        (report.selections.clone(), Some(report))
    } else {
        let sel = sets
            .iter()
            .map(|cs| {
                let i = select_parse_index(cs, prior.as_ref())?;
                let c = &cs.candidates[i];
                Ok(Selection {
                    sentence_id: cs.sentence_id.clone(),
                    system: c.system.clone(),
                    predicted_f1: c.predicted.smatch_f1(),
                    gold_f1: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (sel, None)
    };
    let text = match a.output.format {
        Format::Json => json(&RankJson { selections: &selections, summary: summary.as_ref() })?,
        Format::Tsv => {
            let mut t = String::from("# selections\nsentence_id\tsystem\tpredicted_f1\tgold_f1\n");
            for s in &selections {
                let g = s.gold_f1.map_or("NA".to_string(), num);
                let _ = writeln!(t, "{}\t{}\t{}\t{}", s.sentence_id, s.system, num(s.predicted_f1), g);
            }
            if let Some(r) = &summary {
                t.push_str("\n# summary\nchoice\tP\tR\tF1\n");
                for (name, p) in [("selected", r.selected), ("random", r.random), ("lower", r.lower), ("upper", r.upper)] {
                    let _ = writeln!(t, "{name}\t{}", prf_cells(p));
                }
                t.push_str("\n# correlation\nsentences\tscored\tskipped\tmean_rho\tpct_pos\n");
                let _ = writeln!(
                    t,
                    "{}\t{}\t{}\t{}\t{}",
                    r.sentences,
                    r.scored,
                    r.skipped,
                    r.mean_rho.map_or("NA".into(), num),
                    r.pct_pos.map_or("NA".into(), num)
                );
            }
            t
        }
    };
    emit(base, &a.output, text)
}

#[derive(Serialize)]
struct RankSystemsJson {
    ranking: Vec<RankRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    significance: Option<Significance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Serialize)]
struct RankRow {
    system: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_f1: Option<f64>,
    predicted_rank: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    true_rank: Option<f64>,
}

/// ρ, p1 and p2 with permutation shards spread over `jobs` workers. The
/// result does not depend on the number of workers.
pub fn significance_parallel(pred: &[f64], truth: &[f64], trials: u64, seed: u64, jobs: usize) -> Result<Significance> {
    check_ranks(pred, truth)?;
    if trials == 0 {
        return Err(AppError::Usage("--trials must be positive".into()));
    }
    let rho = pearson(pred, truth)?;
    let plan = shard_plan(trials);
    let hits: Vec<u64> = pool(jobs)?.install(|| {
        plan.par_iter()
            .enumerate()
            .map(|(i, &n)| permutation_shard(pred, truth, rho, n, seed, i as u64))
            .collect()
    });
    Ok(Significance { rho, p1: correlation_p_value(rho, pred.len()), p2: hits.iter().sum::<u64>() as f64 / trials as f64, trials })
}

fn cmd_rank_systems(base: &Path, a: RankSystemsArgs) -> Result<()> {
    let mut rows: Vec<RankRow> = Vec::new();
    if let Some(p) = &a.rank_pairs {
        let path = existing(base, p)?;
        for (line, c) in read_rows(&path, &["system", "predicted_rank", "true_rank"])? {
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| AppError::format(&path, line, "rank must be a number"));
            if c.len() < 3 {
                return Err(AppError::format(&path, line, "expected 3 columns"));
            }
            rows.push(RankRow { system: c[0].clone(), mean_f1: None, predicted_rank: parse(&c[1])?, true_rank: Some(parse(&c[2])?) });
        }
    } else {
        let path = existing(base, a.predictions.as_ref().expect("clap enforces one source"))?;
        let mut per: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for r in read_scores(&path)? {
            if per.entry(r.system.clone()).or_default().insert(r.id.clone(), r.scores.smatch_f1()).is_some() {
                return Err(AppError::format(&path, 0, format!("duplicate row for {}/{}", r.id, r.system)));
            }
        }
        let ids: Option<Vec<&String>> = per.values().next().map(|m| m.keys().collect());
        if let Some((sys, _)) = per.iter().find(|(_, m)| Some(m.keys().collect::<Vec<_>>()) != ids) {
            return Err(AppError::Usage(format!("system {sys} was not scored on the same sentences as the others")));
        }
        let lists: Vec<(String, Vec<f64>)> = per.into_iter().map(|(s, m)| (s, m.into_values().collect())).collect();
        let truth = a.true_ranks.as_ref().map(|t| existing(base, t).and_then(|p| read_true_ranks(&p))).transpose()?;
        for SystemRank { system, mean_f1, rank } in rank_systems(&lists)? {
            let true_rank = match &truth {
                Some(t) => Some(*t.get(&system).ok_or_else(|| AppError::Usage(format!("no true rank for system {system}")))?),
                None => None,
            };
            rows.push(RankRow { system, mean_f1: Some(mean_f1), predicted_rank: rank as f64, true_rank });
        }
    }
    let (significance, note) = if rows.iter().all(|r| r.true_rank.is_some()) {
        let pred: Vec<f64> = rows.iter().map(|r| r.predicted_rank).collect();
        let truth: Vec<f64> = rows.iter().filter_map(|r| r.true_rank).collect();
        match significance_parallel(&pred, &truth, a.trials, a.seed, a.jobs) {
            Ok(s) => (Some(s), None),
            Err(AppError::Core(e @ amrqe_core::Error::InvalidArgument(_))) => (None, Some(format!("significance refused: {e}"))),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };
    let text = match a.output.format {
        Format::Json => json(&RankSystemsJson { ranking: rows, significance, note })?,
        Format::Tsv => {
            let mut t = String::from("# ranking\nsystem\tmean_f1\tpredicted_rank\ttrue_rank\n");
            let opt = |x: Option<f64>| x.map_or("NA".to_string(), num);
            for r in &rows {
                let _ = writeln!(t, "{}\t{}\t{}\t{}", r.system, opt(r.mean_f1), r.predicted_rank, r.true_rank.map_or("NA".into(), |x| x.to_string()));
            }
            if let Some(s) = significance {
                t.push_str("\n# significance\nrho\tp1\tp2\ttrials\n");
                let _ = writeln!(t, "{}\t{}\t{}\t{}", num(s.rho), num(s.p1), num(s.p2), s.trials);
            }
            if let Some(n) = note {
                let _ = writeln!(t, "\n# {n}");
            }
            t
        }
    };
    emit(base, &a.output, text)
}

#[derive(Serialize)]
struct ReportJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    correlations: Option<Vec<TaskCorrelation>>,
    quantiles: Vec<f64>,
    percentiles: Vec<SystemPercentiles>,
    grid: Vec<f64>,
    densities: Vec<SystemDensity>,
    bin_edges: Vec<f64>,
    histograms: Vec<SystemHistogram>,
}

#[derive(Serialize)]
struct TaskCorrelation {
    task: &'static str,
    n: usize,
    precision: Option<f64>,
    recall: Option<f64>,
    f1: Option<f64>,
}

#[derive(Serialize)]
struct SystemPercentiles {
    system: String,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct SystemDensity {
    system: String,
    bandwidth: Option<f64>,
    density: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct SystemHistogram {
    system: String,
    counts: Vec<usize>,
}

fn cmd_report(base: &Path, a: ReportArgs) -> Result<()> {
    let pred_path = existing(base, &a.predictions)?;
    let preds = read_scores(&pred_path)?;
    if preds.is_empty() {
        return Err(AppError::Usage("no predictions".into()));
    }
    let quantiles = a
        .quantiles
        .split(',')
        .map(|q| q.trim().parse::<f64>().map_err(|_| AppError::Usage(format!("bad quantile {q:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if a.grid < 2 || a.bins == 0 {
        return Err(AppError::Usage("--grid must be at least 2 and --bins positive".into()));
    }

    let correlations = match &a.gold {
        Some(g) => {
            let gp = existing(base, g)?;
            let gold = index_scores(&gp, read_scores(&gp)?)?;
            let mut p = Vec::new();
            let mut q = Vec::new();
            for r in &preds {
                match gold.get(&(r.id.clone(), r.system.clone())) {
                    Some(s) => {
                        p.push(r.scores);
                        q.push(*s);
                    }
                    None => return Err(AppError::Usage(format!("no gold scores for {}/{}", r.id, r.system))),
                }
            }
            let table = correlation_table(&p, &q)?;
            Some(
                Task::ALL
                    .iter()
                    .enumerate()
                    .map(|(i, t)| TaskCorrelation {
                        task: t.name(),
                        n: p.len(),
                        precision: table[3 * i],
                        recall: table[3 * i + 1],
                        f1: table[3 * i + 2],
                    })
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };

    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &preds {
        groups.entry(r.system.clone()).or_default().push(r.scores.smatch_f1());
    }
    if groups.len() > 1 {
        groups.insert("*".into(), preds.iter().map(|r| r.scores.smatch_f1()).collect());
    }
    let percentile_rows = groups
        .iter()
        .map(|(s, v)| Ok(SystemPercentiles { system: s.clone(), values: percentiles(v, &quantiles)? }))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<f64> = (0..a.grid).map(|i| -0.25 + 1.5 * i as f64 / (a.grid - 1) as f64).collect();
    let densities: Vec<SystemDensity> = groups
        .iter()
        .map(|(s, v)| SystemDensity {
            system: s.clone(),
            bandwidth: scott_bandwidth(v).ok(),
            density: kde_scott(v, &grid).ok(),
        })
        .collect();
    let bin_edges: Vec<f64> = (0..=a.bins).map(|i| i as f64 / a.bins as f64).collect();
    let histograms: Vec<SystemHistogram> = groups
        .iter()
        .map(|(s, v)| {
            let mut counts = vec![0; a.bins];
            for x in v {
                let b = ((x.clamp(0.0, 1.0)) * a.bins as f64) as usize;
                counts[b.min(a.bins - 1)] += 1;
            }
            SystemHistogram { system: s.clone(), counts }
        })
        .collect();

    let text = match a.output.format {
        Format::Json => json(&ReportJson {
            correlations,
            quantiles,
            percentiles: percentile_rows,
            grid,
            densities,
            bin_edges,
            histograms,
        })?,
        Format::Tsv => {
            let opt = |x: Option<f64>| x.map_or("NA".to_string(), num);
            let mut t = String::new();
            if let Some(c) = &correlations {
                t.push_str("# correlations\ntask\tn\tP\tR\tF1\n");
                for r in c {
                    let _ = writeln!(t, "{}\t{}\t{}\t{}\t{}", r.task, r.n, opt(r.precision), opt(r.recall), opt(r.f1));
                }
                t.push('\n');
            }
            t.push_str("# percentiles\nsystem");
            for q in &quantiles {
                let _ = write!(t, "\tp{q}");
            }
            t.push('\n');
            for r in &percentile_rows {
                t.push_str(&r.system);
                for v in &r.values {
                    let _ = write!(t, "\t{}", num(*v));
                }
                t.push('\n');
            }
            t.push_str("\n# density\nx");
            for d in &densities {
                let _ = write!(t, "\t{}", d.system);
            }
            t.push('\n');
            for (i, x) in grid.iter().enumerate() {
                t.push_str(&num(*x));
                for d in &densities {
                    let _ = write!(t, "\t{}", opt(d.density.as_ref().map(|v| v[i])));
                }
                t.push('\n');
            }
            t.push_str("\n# histogram\nbin_lo\tbin_hi");
            for h in &histograms {
                let _ = write!(t, "\t{}", h.system);
            }
            t.push('\n');
            for b in 0..a.bins {
                let _ = write!(t, "{}\t{}", num(bin_edges[b]), num(bin_edges[b + 1]));
                for h in &histograms {
                    let _ = write!(t, "\t{}", h.counts[b]);
                }
                t.push('\n');
            }
            t
        }
    };
    emit(base, &a.output, text)
}

/// Parse `args`, run, and map the outcome to an exit code. Failures print
/// one line `error<TAB>kind<TAB>message` on standard error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error\tusage\t{first}");
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error\t{}\t{}", e.kind(), e.to_string().replace(['\n', '\t'], " "));
            1
        }
    }
}
