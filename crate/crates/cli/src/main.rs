//! `qpp-workbench`: index a corpus, retrieve runs, evaluate them, compute
//! QPP predictor scores, correlate predictions with ground truth, and sweep
//! the full sensitivity/contingency grid.
//!
//! Set `QPP_WORKBENCH_LOG` (error/warn/info/debug) to control logging.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qpp_core::config::{Overrides, RawConfig, RunConfig};
use qpp_core::correlation::{correlate, CorrelationKind};
use qpp_core::harness;
use qpp_core::index::Index;
use qpp_core::metrics::{evaluate, MetricSpec, NdcgGains};
use qpp_core::predictors::{predict, PredictorKind, PredictorSpec, QppParams};
use qpp_core::retrieval::{search, RetrievalModel};
use qpp_core::synth::{self, SynthSpec};
use qpp_core::trec::{self, CorpusFormat};

#[derive(Parser)]
#[command(name = "qpp-workbench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus path: TSV file (doc_id<TAB>text) or TREC SGML directory.
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus format.
    #[arg(long, default_value = "tsv")]
    format: String,
}

impl CorpusArgs {
    fn build_index(&self) -> Result<Index> {
        let format: CorpusFormat = self.format.parse()?;
        let docs = trec::read_corpus(&self.corpus, format)?;
        Ok(Index::build(docs)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the deterministic synthetic test collection.
    Synth {
        /// Output directory for corpus.tsv, topics.tsv, qrels.txt.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, default_value_t = 50)]
        queries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Build an index and print collection statistics.
    Index {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Write a portable JSON snapshot of the analyzed index.
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
    },
    /// Retrieve the top-k documents per topic into a TREC run file.
    Search {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Topics path (TSV or TREC topic format).
        #[arg(long)]
        topics: PathBuf,
        /// Retrieval model, KIND:PARAMS (lmjm:0.6, lmdir:1000, bm25:0.7,0.3).
        #[arg(long)]
        model: String,
        /// Retrieval depth.
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value = "qpp-workbench")]
        run_tag: String,
        /// Run file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a run file against qrels, one metric value per query.
    Eval {
        /// TREC run file.
        #[arg(long)]
        run: PathBuf,
        /// TREC qrels file.
        #[arg(long)]
        qrels: PathBuf,
        /// Metric spec KIND@K; repeatable.
        #[arg(long = "metric", required = true)]
        metrics: Vec<String>,
        /// nDCG gain function: graded or binary.
        #[arg(long, default_value = "graded")]
        gains: String,
        /// Output TSV (qid, metric, value).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute QPP predictor scores per topic.
    Qpp {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        topics: PathBuf,
        /// Retrieval model used for runs and score normalization.
        #[arg(long, default_value = "lmdir:1000")]
        model: String,
        /// Predictors to compute; repeatable. Defaults to the full battery.
        #[arg(long = "predictor")]
        predictors: Vec<String>,
        /// Use an existing run file instead of retrieving. Content-based
        /// predictors (clarity, uef) still need the documents in the corpus.
        #[arg(long)]
        run: Option<PathBuf>,
        /// Retrieval depth when no run file is given.
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output TSV (qid, predictor, value).
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate a predictions TSV with a ground-truth TSV.
    Correlate {
        /// Predictions TSV (qid, predictor, value).
        #[arg(long)]
        predictions: PathBuf,
        /// Ground-truth TSV (qid, metric, value).
        #[arg(long)]
        ground_truth: PathBuf,
        /// Correlation kinds (r, rho, tau); repeatable. Defaults to all.
        #[arg(long = "kind")]
        kinds: Vec<String>,
        /// Output TSV (predictor, metric, kind, value).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full experiment grid and write sensitivity/contingency
    /// reports.
    Sweep {
        /// JSON run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        topics: Option<PathBuf>,
        #[arg(long)]
        qrels: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Report output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QPP_WORKBENCH_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Synth {
            out,
            docs,
            queries,
            seed,
        } => cmd_synth(out, docs, queries, seed),
        Command::Index {
            corpus,
            snapshot_out,
        } => cmd_index(corpus, snapshot_out),
        Command::Search {
            corpus,
            topics,
            model,
            k,
            run_tag,
            out,
        } => cmd_search(corpus, topics, model, k, run_tag, out),
        Command::Eval {
            run,
            qrels,
            metrics,
            gains,
            out,
        } => cmd_eval(run, qrels, metrics, gains, out),
        Command::Qpp {
            corpus,
            topics,
            model,
            predictors,
            run,
            k,
            seed,
            out,
        } => cmd_qpp(corpus, topics, model, predictors, run, k, seed, out),
        Command::Correlate {
            predictions,
            ground_truth,
            kinds,
            out,
        } => cmd_correlate(predictions, ground_truth, kinds, out),
        Command::Sweep {
            config,
            corpus,
            format,
            topics,
            qrels,
            k,
            seed,
            jobs,
            out,
        } => cmd_sweep(config, corpus, format, topics, qrels, k, seed, jobs, out),
    }
}

fn cmd_synth(out: PathBuf, docs: usize, queries: usize, seed: u64) -> Result<()> {
    let data = synth::generate(&SynthSpec {
        num_docs: docs,
        num_queries: queries,
        seed,
    });
    let written = synth::write_files(&data, &out)?;
    println!(
        "generated {} docs, {} topics, {} qrels lines (seed {seed})",
        data.corpus.len(),
        data.topics.len(),
        data.qrels.len()
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_index(corpus: CorpusArgs, snapshot_out: Option<PathBuf>) -> Result<()> {
    let index = corpus.build_index()?;
    let stats = index.stats();
    println!(
        "N={} |C|={} vocab={} avg_doc_len={:.2}",
        stats.num_docs(),
        stats.total_tokens(),
        index.vocab_size(),
        stats.avg_doc_len()
    );
    if let Some(path) = snapshot_out {
        index.write_snapshot(&path)?;
        println!("wrote snapshot {}", path.display());
    }
    Ok(())
}

fn cmd_search(
    corpus: CorpusArgs,
    topics: PathBuf,
    model: String,
    k: usize,
    run_tag: String,
    out: PathBuf,
) -> Result<()> {
    if k == 0 {
        bail!("--k must be >= 1");
    }
    let index = corpus.build_index()?;
    let model: RetrievalModel = model.parse()?;
    let queries = trec::read_topics(&topics)?;
    let runs: BTreeMap<String, _> = queries
        .iter()
        .map(|q| (q.qid.clone(), search(&index, &model, q, k)))
        .collect();
    trec::write_run_file(&out, &runs, &run_tag)?;
    let lines: usize = runs.values().map(|r| r.len()).sum();
    println!(
        "wrote {} ({} lines, {} queries, model {})",
        out.display(),
        lines,
        runs.len(),
        model.id()
    );
    Ok(())
}

fn cmd_eval(
    run: PathBuf,
    qrels_path: PathBuf,
    metrics: Vec<String>,
    gains: String,
    out: PathBuf,
) -> Result<()> {
    let runs = trec::read_run(&run)?;
    let qrels = trec::read_qrels(&qrels_path)?;
    let gains = parse_gains(&gains)?;
    let specs: Vec<MetricSpec> = metrics
        .iter()
        .map(|s| s.parse())
        .collect::<qpp_core::Result<_>>()?;

    let mut rows = Vec::new();
    let mut means: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (qid, ranked) in &runs {
        for &spec in &specs {
            let value = evaluate(spec, ranked, &qrels, gains)
                .with_context(|| format!("evaluating {} for query {qid}", spec.id()))?;
            let entry = means.entry(spec.id()).or_insert((0.0, 0));
            entry.0 += value;
            entry.1 += 1;
            rows.push((qid.clone(), spec.id(), value));
        }
    }
    let file = fs::File::create(&out)?;
    trec::write_label_tsv(std::io::BufWriter::new(file), rows)?;
    for (metric, (sum, n)) in means {
        println!("{metric}: mean {:.4} over {n} queries", sum / n as f64);
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_qpp(
    corpus: CorpusArgs,
    topics: PathBuf,
    model: String,
    predictors: Vec<String>,
    run: Option<PathBuf>,
    k: usize,
    seed: u64,
    out: PathBuf,
) -> Result<()> {
    let index = corpus.build_index()?;
    let model: RetrievalModel = model.parse()?;
    let queries = trec::read_topics(&topics)?;
    let kinds: Vec<PredictorKind> = if predictors.is_empty() {
        PredictorKind::ALL.to_vec()
    } else {
        predictors
            .iter()
            .map(|s| s.parse())
            .collect::<qpp_core::Result<_>>()?
    };

    let runs = match &run {
        Some(path) => trec::read_run(path)?,
        None => queries
            .iter()
            .map(|q| (q.qid.clone(), search(&index, &model, q, k)))
            .collect(),
    };

    let params = QppParams {
        seed,
        ..QppParams::default()
    };
    let mut rows = Vec::new();
    for &kind in &kinds {
        let spec = PredictorSpec::new(kind, params);
        let vector = predict(&spec, &queries, &runs, &index, &model)?;
        for (qid, value) in vector.qids.iter().zip(&vector.values) {
            rows.push((qid.clone(), kind.id().to_string(), *value));
        }
    }
    let file = fs::File::create(&out)?;
    trec::write_label_tsv(std::io::BufWriter::new(file), rows)?;
    println!(
        "wrote {} ({} predictors x {} queries, model {})",
        out.display(),
        kinds.len(),
        queries.len(),
        model.id()
    );
    Ok(())
}

fn cmd_correlate(
    predictions: PathBuf,
    ground_truth: PathBuf,
    kinds: Vec<String>,
    out: PathBuf,
) -> Result<()> {
    let preds = trec::read_label_tsv(&predictions)?;
    let truths = trec::read_label_tsv(&ground_truth)?;
    let kinds: Vec<CorrelationKind> = if kinds.is_empty() {
        CorrelationKind::ALL.to_vec()
    } else {
        kinds
            .iter()
            .map(|s| s.parse())
            .collect::<qpp_core::Result<_>>()?
    };

    let mut file = std::io::BufWriter::new(fs::File::create(&out)?);
    for (pred_label, pred_by_qid) in &preds {
        for (truth_label, truth_by_qid) in &truths {
            if pred_by_qid.len() != truth_by_qid.len()
                || !pred_by_qid.keys().eq(truth_by_qid.keys())
            {
                bail!(
                    "query sets differ between {pred_label} ({} queries) and \
                     {truth_label} ({} queries)",
                    pred_by_qid.len(),
                    truth_by_qid.len()
                );
            }
            let x: Vec<f64> = pred_by_qid.values().copied().collect();
            let y: Vec<f64> = truth_by_qid.values().copied().collect();
            if x.len() < 2 {
                bail!("need at least 2 aligned queries, got {}", x.len());
            }
            for &kind in &kinds {
                let cell = match correlate(kind, &x, &y) {
                    Some(v) => format!("{v:.4}"),
                    None => "n/a".to_string(),
                };
                writeln!(file, "{pred_label}\t{truth_label}\t{kind}\t{cell}")?;
            }
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: Option<PathBuf>,
    corpus: Option<PathBuf>,
    format: Option<String>,
    topics: Option<PathBuf>,
    qrels: Option<PathBuf>,
    k: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let overrides = Overrides {
        corpus,
        corpus_format: format.as_deref().map(str::parse).transpose()?,
        topics,
        qrels,
        kappa: k,
        seed,
        output_dir: out,
        jobs,
    };
    let resolved = match &config {
        Some(path) => RunConfig::load(path, &overrides)?,
        None => RunConfig::resolve(RawConfig::default(), &overrides, std::path::Path::new("."))?,
    };
    let started = Instant::now();
    let output = harness::run_grid(&resolved)?;
    println!(
        "sweep finished in {:.2}s: {} sensitivity tables, {} contingency tables",
        started.elapsed().as_secs_f64(),
        output.sensitivity.len(),
        output.contingency.len()
    );
    for path in &output.written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn parse_gains(s: &str) -> Result<NdcgGains> {
    match s.to_ascii_lowercase().as_str() {
        "graded" => Ok(NdcgGains::Graded),
        "binary" => Ok(NdcgGains::Binary),
        _ => bail!("gains must be graded or binary, got {s:?}"),
    }
}
