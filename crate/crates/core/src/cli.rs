//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numerical failure. File outputs are written atomically and each
//! successful run writes a `<out>.manifest.json` next to its primary output
//! (or to `--manifest` when the command has no output file).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::baselines::{
    load_transe, save_transe, transe_train, Norm, PmiScorer, PmiTable, TransEConfig, TransEScorer,
};
use crate::encoder::{load_encoder, load_word_vectors, save_encoder, EncoderParams, EncoderScorer};
use crate::error::{Error, Result};
use crate::io::{manifest_path_for, write_atomic, RunManifest};
use crate::kb::KnowledgeGraph;
use crate::pretrain::{
    gradient_check, random_word_table, sample, train, RelationKind, TrainConfig, TrainingRun,
};
use crate::qa::{
    evaluate, grid_search, load_dataset, CombinationWeights, PairScorer, QaInstance, ScoringContext,
};
use crate::text::{Retriever, Stopwords};

#[derive(Debug, Parser)]
#[command(
    name = "kgrel",
    version,
    about = "Commonsense concept-relatedness models over a triple knowledge graph"
)]
struct Cli {
    /// Random seed (overrides any config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 is the deterministic mode.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Manifest path for commands that have no output file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a raw assertion dump to the four-column triple TSV.
    ConvertConceptnet {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse a triple TSV into a binary graph snapshot.
    Ingest {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the co-occurrence PMI table.
        #[arg(long)]
        pmi_out: Option<PathBuf>,
    },
    /// Pretrain a scorer. Writes `<out>.dir`, `<out>.ind` or `<out>.transe`.
    Train(TrainArgs),
    /// Compare analytic and finite-difference gradients on a tiny model.
    GradCheck {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Direct)]
        kind: KindArg,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        hidden: usize,
        #[arg(long, default_value_t = 4)]
        word_dim: usize,
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Fail (exit 3) when the relative error exceeds this.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Link a sentence to knowledge-graph concepts.
    Retrieve {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        text: String,
        /// Stopword file (one word per line) replacing the built-in list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Keep stopword unigrams.
        #[arg(long)]
        no_filter: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score one concept pair with every supplied model.
    ScorePair {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[command(flatten)]
        scorers: ScorerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiple-choice accuracy with fixed or grid-searched weights.
    Eval(EvalArgs),
    /// Search the weight lattice on a validation set.
    GridSearch {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        #[command(flatten)]
        scorers: ScorerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Direct,
    Indirect,
    Transe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    Pmi,
    Transe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    L1,
    L2,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Output prefix.
    #[arg(long)]
    out: PathBuf,
    /// `key = value` training config (encoder kinds only).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pretrained word vectors (`word v1 .. vd` per line).
    #[arg(long)]
    word_vectors: Option<PathBuf>,
    #[arg(long)]
    freeze_words: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    word_dim: Option<usize>,
    #[arg(long)]
    neighbor_cap: Option<usize>,
    /// TransE embedding width.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
}

#[derive(Debug, Args, Default)]
struct ScorerArgs {
    /// Direct-relation encoder checkpoint.
    #[arg(long)]
    dir_model: Option<PathBuf>,
    /// Indirect-relation encoder checkpoint.
    #[arg(long)]
    ind_model: Option<PathBuf>,
    /// Use a baseline in the direct channel instead of an encoder.
    #[arg(long, value_enum)]
    baseline: Option<BaselineArg>,
    #[arg(long)]
    transe_model: Option<PathBuf>,
    /// PMI table; computed from the graph when omitted.
    #[arg(long)]
    pmi_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    scorers: ScorerArgs,
    #[arg(long, conflicts_with = "grid")]
    alpha: Option<f64>,
    #[arg(long, conflicts_with = "grid")]
    beta_dir: Option<f64>,
    #[arg(long, conflicts_with = "grid")]
    beta_ind: Option<f64>,
    /// Pick weights by grid search on `--valid`.
    #[arg(long, requires = "valid")]
    grid: bool,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Map an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main_with_args(argv: impl IntoIterator<Item = OsString>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch(argv, &mut stdout.lock(), &mut stderr.lock())
}

struct Ctx<'a> {
    seed: Option<u64>,
    threads: usize,
    quiet: bool,
    manifest: Option<PathBuf>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn log(&mut self, msg: &str) {
        if !self.quiet {
            let _ = writeln!(self.err, "{msg}");
        }
    }

    fn print(&mut self, msg: &str) -> Result<()> {
        if !self.quiet {
            write!(self.out, "{msg}")?;
        }
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }

    /// Write the manifest next to `primary`, else to `--manifest` if given.
    fn finish(&self, mut m: RunManifest, primary: Option<&Path>, started: Instant) -> Result<()> {
        m.duration_secs = started.elapsed().as_secs_f64();
        let target = primary
            .map(manifest_path_for)
            .or_else(|| self.manifest.clone());
        if let Some(p) = target {
            m.write(&p)?;
        }
        Ok(())
    }
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut ctx = Ctx {
        seed: cli.seed,
        threads: cli.threads.unwrap_or(1) as usize,
        quiet: cli.quiet,
        manifest: cli.manifest,
        out,
        err,
    };
    let started = Instant::now();
    match cli.command {
        Command::ConvertConceptnet { input, out } => {
            let mut m = RunManifest::new("convert-conceptnet", ctx.seed(), ctx.threads);
            m.add_input(&input)?;
            let reader = BufReader::new(File::open(&input)?);
            let mut stats = None;
            write_atomic(&out, |w| {
                stats = Some(crate::conceptnet::convert(reader, w)?);
                Ok(())
            })?;
            let stats = stats.expect("set by the writer");
            m.config = serde_json::to_value(stats)?;
            m.add_output(&out);
            ctx.log(&format!(
                "{} rows, {} kept, {} non-English, {} self-loops",
                stats.rows, stats.kept, stats.non_english, stats.self_loops
            ));
            ctx.finish(m, Some(&out), started)
        }
        Command::Ingest {
            triples,
            out,
            pmi_out,
        } => {
            let mut m = RunManifest::new("ingest", ctx.seed(), ctx.threads);
            m.add_input(&triples)?;
            let kg = KnowledgeGraph::load_path(&triples)?;
            write_atomic(&out, |w| kg.write_binary(w))?;
            m.add_output(&out);
            if let Some(p) = &pmi_out {
                let table = PmiTable::from_graph(&kg);
                write_atomic(p, |w| table.write_tsv(&kg, w))?;
                m.add_output(p);
            }
            m.config = json!({
                "concepts": kg.num_concepts(),
                "relations": kg.num_relations(),
                "triples": kg.num_triples(),
            });
            ctx.log(&format!(
                "{} concepts, {} relations, {} triples",
                kg.num_concepts(),
                kg.num_relations(),
                kg.num_triples()
            ));
            ctx.finish(m, Some(&out), started)
        }
        Command::Train(args) => cmd_train(&mut ctx, args, started),
        Command::GradCheck {
            kb,
            kind,
            samples,
            hidden,
            word_dim,
            margin,
            epsilon,
            tolerance,
            out,
        } => {
            let kind = match kind {
                KindArg::Direct => RelationKind::Direct,
                KindArg::Indirect => RelationKind::Indirect,
                KindArg::Transe => {
                    return Err(Error::Config("grad-check applies to encoder kinds".into()))
                }
            };
            let mut m = RunManifest::new("grad-check", ctx.seed(), ctx.threads);
            m.add_input(&kb)?;
            let kg = KnowledgeGraph::load_path(&kb)?;
            let cfg = TrainConfig {
                kind,
                hidden,
                word_dim,
                margin,
                seed: ctx.seed(),
                ..TrainConfig::default()
            };
            cfg.validate()?;
            let words = random_word_table(&kg, &cfg);
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
            let params = EncoderParams::random(
                words,
                kg.relations().to_vec(),
                hidden,
                cfg.neighbor_cap,
                &mut rng,
            );
            let picks = sample(&kg, kind, samples, cfg.seed)?;
            let mut reports = Vec::new();
            let mut worst = 0.0f64;
            for s in &picks {
                let r = gradient_check(&params, &kg, s, margin, epsilon)?;
                if r.loss > 0.0 {
                    worst = worst.max(r.max_relative_error);
                }
                reports.push(r);
            }
            let report = json!({
                "kind": kind.as_str(),
                "samples": reports,
                "max_relative_error": worst,
                "tolerance": tolerance,
            });
            m.config = json!({"kind": kind.as_str(), "samples": samples, "hidden": hidden,
                               "word_dim": word_dim, "margin": margin, "epsilon": epsilon});
            emit(&mut ctx, &mut m, out.as_deref(), &report)?;
            ctx.finish(m, out.as_deref(), started)?;
            if worst > tolerance {
                return Err(Error::Numerical(format!(
                    "gradient check failed: relative error {worst:.3e} > {tolerance:.0e}"
                )));
            }
            Ok(())
        }
        Command::Retrieve {
            kb,
            text,
            stopwords,
            no_filter,
            out,
        } => {
            let mut m = RunManifest::new("retrieve", ctx.seed(), ctx.threads);
            m.add_input(&kb)?;
            let kg = KnowledgeGraph::load_path(&kb)?;
            let retriever = if no_filter {
                Retriever::without_filter()
            } else if let Some(p) = &stopwords {
                m.add_input(p)?;
                Retriever::with_stopwords(Stopwords::from_reader(BufReader::new(File::open(p)?))?)
            } else {
                Retriever::new()
            };
            let set = retriever.retrieve(&text, &kg);
            let matches: Vec<_> = set
                .matches
                .iter()
                .map(|mt| json!({"ngram": mt.ngram, "span": [mt.span.0, mt.span.1], "concept": kg.surface(mt.concept)}))
                .collect();
            let concepts: Vec<&str> = set.concept_ids.iter().map(|&c| kg.surface(c)).collect();
            let report = json!({"text": text, "concepts": concepts, "matches": matches});
            m.config = json!({"text": text, "no_filter": no_filter});
            emit(&mut ctx, &mut m, out.as_deref(), &report)?;
            ctx.finish(m, out.as_deref(), started)
        }
        Command::ScorePair {
            kb,
            a,
            b,
            scorers,
            out,
        } => {
            let mut m = RunManifest::new("score-pair", ctx.seed(), ctx.threads);
            m.add_input(&kb)?;
            let kg = KnowledgeGraph::load_path(&kb)?;
            let (ca, cb) = (kg.require(&a)?, kg.require(&b)?);
            let models = Models::load(&scorers, &kg, &mut m)?;
            let built = models.build(&kg)?;
            let mut scores = serde_json::Map::new();
            for s in built.all() {
                scores.insert(s.name().to_string(), json!(s.score(ca, cb)));
            }
            if scores.is_empty() {
                return Err(Error::Config(
                    "no scorer given (use --dir-model, --ind-model or --baseline)".into(),
                ));
            }
            let report = json!({"a": kg.surface(ca), "b": kg.surface(cb), "scores": scores});
            m.config = json!({"a": a, "b": b});
            emit(&mut ctx, &mut m, out.as_deref(), &report)?;
            ctx.finish(m, out.as_deref(), started)
        }
        Command::Eval(args) => cmd_eval(&mut ctx, args, started),
        Command::GridSearch {
            kb,
            valid,
            scorers,
            out,
        } => {
            let mut m = RunManifest::new("grid-search", ctx.seed(), ctx.threads);
            m.add_input(&kb)?;
            m.add_input(&valid)?;
            let kg = KnowledgeGraph::load_path(&kb)?;
            let data = read_dataset(&valid)?;
            let models = Models::load(&scorers, &kg, &mut m)?;
            let built = models.build(&kg)?;
            let sctx = built.context(&kg);
            let result = ctx
                .pool()?
                .install(|| grid_search(&data, &sctx, &CombinationWeights::default()))?;
            m.config = json!({"scorers": built.names()});
            ctx.log(&format!(
                "best alpha={} beta_dir={} beta_ind={} accuracy={:.4}",
                result.best.alpha, result.best.beta_dir, result.best.beta_ind, result.best_accuracy
            ));
            emit(
                &mut ctx,
                &mut m,
                out.as_deref(),
                &serde_json::to_value(&result)?,
            )?;
            ctx.finish(m, out.as_deref(), started)
        }
    }
}

/// Write a JSON report to `out` atomically, or print it.
fn emit(
    ctx: &mut Ctx<'_>,
    m: &mut RunManifest,
    out: Option<&Path>,
    value: &serde_json::Value,
) -> Result<()> {
    match out {
        Some(p) => {
            write_atomic(p, |w| {
                serde_json::to_writer_pretty(&mut *w, value)?;
                w.write_all(b"\n")?;
                Ok(())
            })?;
            m.add_output(p);
            Ok(())
        }
        None => ctx.print(&format!("{}\n", serde_json::to_string_pretty(value)?)),
    }
}

fn read_dataset(path: &Path) -> Result<Vec<QaInstance>> {
    load_dataset(BufReader::new(File::open(path)?))
}

fn cmd_train(ctx: &mut Ctx<'_>, a: TrainArgs, started: Instant) -> Result<()> {
    let mut m = RunManifest::new("train", ctx.seed(), ctx.threads);
    m.add_input(&a.kb)?;
    let kg = KnowledgeGraph::load_path(&a.kb)?;
    let kind = match a.kind {
        KindArg::Direct => RelationKind::Direct,
        KindArg::Indirect => RelationKind::Indirect,
        KindArg::Transe => return train_transe(ctx, a, kg, m, started),
    };
    let mut cfg = match &a.config {
        Some(p) => {
            m.add_input(p)?;
            TrainConfig::from_reader(BufReader::new(File::open(p)?))?
        }
        None => TrainConfig::default(),
    };
    cfg.kind = kind;
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    if ctx.seed.is_some() || a.config.is_none() {
        cfg.threads = ctx.threads;
    }
    if a.freeze_words {
        cfg.freeze_words = true;
    }
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.margin = a.margin.unwrap_or(cfg.margin);
    cfg.learning_rate = a.lr.unwrap_or(cfg.learning_rate);
    cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    cfg.hidden = a.hidden.unwrap_or(cfg.hidden);
    cfg.word_dim = a.word_dim.unwrap_or(cfg.word_dim);
    cfg.neighbor_cap = a.neighbor_cap.unwrap_or(cfg.neighbor_cap);
    cfg.validate()?;
    let words = match &a.word_vectors {
        Some(p) => {
            m.add_input(p)?;
            load_word_vectors(BufReader::new(File::open(p)?), cfg.word_dim)?
        }
        None => random_word_table(&kg, &cfg),
    };
    let run: TrainingRun = train(&kg, words, &cfg)?;
    for e in run.epochs() {
        let acc = e
            .heldout_accuracy
            .map_or(String::new(), |v| format!(" heldout_accuracy={v:.4}"));
        ctx.log(&format!("epoch {} loss={:.6}{acc}", e.epoch, e.mean_loss));
    }
    let path = with_suffix(&a.out, kind.suffix());
    write_atomic(&path, |w| save_encoder(w, &run.params, &kg, kind.as_str()))?;
    m.add_output(&path);
    m.seed = cfg.seed;
    m.threads = cfg.threads;
    m.config = json!({"train": cfg, "epochs": run.epochs()});
    ctx.finish(m, Some(&path), started)
}

fn train_transe(
    ctx: &mut Ctx<'_>,
    a: TrainArgs,
    kg: KnowledgeGraph,
    mut m: RunManifest,
    started: Instant,
) -> Result<()> {
    if a.config.is_some() || a.word_vectors.is_some() {
        return Err(Error::Config(
            "--config and --word-vectors apply to encoder training only".into(),
        ));
    }
    let d = TransEConfig::default();
    let cfg = TransEConfig {
        dim: a.dim.unwrap_or(d.dim),
        norm: match a.norm {
            Some(NormArg::L1) => Norm::L1,
            Some(NormArg::L2) | None => Norm::L2,
        },
        margin: a.margin.unwrap_or(d.margin),
        learning_rate: a.lr.unwrap_or(d.learning_rate),
        epochs: a.epochs.unwrap_or(d.epochs),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        seed: ctx.seed(),
    };
    let run = transe_train(&kg, &cfg)?;
    if let (Some(first), Some(last)) = (run.loss_history.first(), run.loss_history.last()) {
        ctx.log(&format!("transe loss {first:.6} -> {last:.6}"));
    }
    let path = with_suffix(&a.out, "transe");
    write_atomic(&path, |w| save_transe(w, &run.params, &kg))?;
    m.add_output(&path);
    m.config = json!({"transe": cfg, "loss_history": run.loss_history});
    ctx.finish(m, Some(&path), started)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_eval(ctx: &mut Ctx<'_>, a: EvalArgs, started: Instant) -> Result<()> {
    let mut m = RunManifest::new("eval", ctx.seed(), ctx.threads);
    m.add_input(&a.kb)?;
    m.add_input(&a.data)?;
    let kg = KnowledgeGraph::load_path(&a.kb)?;
    let data = read_dataset(&a.data)?;
    let models = Models::load(&a.scorers, &kg, &mut m)?;
    let built = models.build(&kg)?;
    let sctx = built.context(&kg);
    let pool = ctx.pool()?;
    let (weights, grid) = if a.grid {
        let valid_path = a.valid.as_ref().expect("clap enforces --valid with --grid");
        m.add_input(valid_path)?;
        let valid = read_dataset(valid_path)?;
        let g = pool.install(|| grid_search(&valid, &sctx, &CombinationWeights::default()))?;
        (g.best.clone(), Some(g))
    } else {
        let d = CombinationWeights::default();
        (
            d.with_weights(
                a.alpha.unwrap_or(d.alpha),
                a.beta_dir.unwrap_or(d.beta_dir),
                a.beta_ind.unwrap_or(d.beta_ind),
            ),
            None,
        )
    };
    let report = pool.install(|| evaluate(&data, &sctx, &weights))?;
    ctx.print(&report.render_table())?;
    m.config = json!({"weights": weights, "scorers": built.names(), "grid": grid.is_some()});
    let mut value = serde_json::to_value(&report)?;
    if let Some(g) = grid {
        value["grid_search"] = serde_json::to_value(&g)?;
    }
    if let Some(p) = &a.out {
        write_atomic(p, |w| {
            serde_json::to_writer_pretty(&mut *w, &value)?;
            w.write_all(b"\n")?;
            Ok(())
        })?;
        m.add_output(p);
    }
    ctx.finish(m, a.out.as_deref(), started)
}

/// Model parameters loaded from disk, before binding to the graph.
struct Models {
    dir: Option<EncoderParams>,
    ind: Option<EncoderParams>,
    baseline: Option<Box<dyn PairScorer + Send>>,
}

impl Models {
    fn load(args: &ScorerArgs, kg: &KnowledgeGraph, m: &mut RunManifest) -> Result<Self> {
        let mut encoder = |p: &Option<PathBuf>| -> Result<Option<EncoderParams>> {
            match p {
                None => Ok(None),
                Some(p) => {
                    m.add_input(p)?;
                    let ck = load_encoder(BufReader::new(File::open(p)?))?;
                    ck.check_graph(kg)?;
                    Ok(Some(ck.params))
                }
            }
        };
        let dir = encoder(&args.dir_model)?;
        let ind = encoder(&args.ind_model)?;
        let baseline: Option<Box<dyn PairScorer + Send>> = match args.baseline {
            None => None,
            Some(BaselineArg::Pmi) => {
                let table = match &args.pmi_table {
                    Some(p) => {
                        m.add_input(p)?;
                        PmiTable::read_tsv(BufReader::new(File::open(p)?), kg)?
                    }
                    None => PmiTable::from_graph(kg),
                };
                Some(Box::new(PmiScorer::new(table)))
            }
            Some(BaselineArg::Transe) => {
                let p = args.transe_model.as_ref().ok_or_else(|| {
                    Error::Config("--baseline transe needs --transe-model".into())
                })?;
                m.add_input(p)?;
                let params = load_transe(BufReader::new(File::open(p)?), kg)?;
                Some(Box::new(TransEScorer::new(params, kg)?))
            }
        };
        if baseline.is_some() && dir.is_some() {
            return Err(Error::Config(
                "--baseline replaces --dir-model; give only one".into(),
            ));
        }
        Ok(Self { dir, ind, baseline })
    }

    fn build<'a>(&'a self, kg: &'a KnowledgeGraph) -> Result<Built<'a>> {
        let bind =
            |p: &'a Option<EncoderParams>, name: &str| -> Result<Option<EncoderScorer<'a>>> {
                p.as_ref()
                    .map(|p| EncoderScorer::new(p, kg, name))
                    .transpose()
            };
        Ok(Built {
            dir: bind(&self.dir, "direct")?,
            ind: bind(&self.ind, "indirect")?,
            baseline: self.baseline.as_deref().map(|b| b as &dyn PairScorer),
        })
    }
}

struct Built<'a> {
    dir: Option<EncoderScorer<'a>>,
    ind: Option<EncoderScorer<'a>>,
    baseline: Option<&'a dyn PairScorer>,
}

impl<'a> Built<'a> {
    fn dir_slot(&self) -> Option<&dyn PairScorer> {
        self.baseline
            .or_else(|| self.dir.as_ref().map(|s| s as &dyn PairScorer))
    }

    fn ind_slot(&self) -> Option<&dyn PairScorer> {
        self.ind.as_ref().map(|s| s as &dyn PairScorer)
    }

    fn all(&self) -> Vec<&dyn PairScorer> {
        self.dir_slot().into_iter().chain(self.ind_slot()).collect()
    }

    fn names(&self) -> Vec<String> {
        self.all().iter().map(|s| s.name().to_string()).collect()
    }

    fn context<'b>(&'b self, kg: &'b KnowledgeGraph) -> ScoringContext<'b> {
        ScoringContext {
            kg,
            retriever: Retriever::new(),
            dir: self.dir_slot(),
            ind: self.ind_slot(),
        }
    }
}
