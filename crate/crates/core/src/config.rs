//! Run configuration: a JSON file plus CLI overrides, resolved against
//! defaults and validated up front. Validation is aggregated: every problem
//! is reported in one error before any compute starts.
//!
//! Relative paths in a config file are resolved against the file's own
//! directory, so configs are location-independent.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::correlation::CorrelationKind;
use crate::metrics::{MetricSpec, NdcgGains};
use crate::predictors::{PredictorKind, QppParams, StdDev};
use crate::retrieval::RetrievalModel;
use crate::trec::CorpusFormat;
use crate::{Error, Result};

/// Default sensitivity grid: the three tuned models.
pub fn default_models() -> Vec<RetrievalModel> {
    vec![
        RetrievalModel::JelinekMercer { lambda: 0.6 },
        RetrievalModel::Bm25 { k1: 0.7, b: 0.3 },
        RetrievalModel::Dirichlet { mu: 1000.0 },
    ]
}

/// Default sensitivity metrics: AP, nDCG and recall at 100 plus P@10.
pub fn default_metrics() -> Vec<MetricSpec> {
    ["ap@100", "ndcg@100", "r@100", "p@10"]
        .iter()
        .map(|s| s.parse().expect("static metric spec"))
        .collect()
}

/// Default paired-metric axis: {AP, R, nDCG} x {10, 100, 1000}.
pub fn default_contingency_metrics() -> Vec<MetricSpec> {
    [
        "ap@10",
        "ap@100",
        "ap@1000",
        "r@10",
        "r@100",
        "r@1000",
        "ndcg@10",
        "ndcg@100",
        "ndcg@1000",
    ]
    .iter()
    .map(|s| s.parse().expect("static metric spec"))
    .collect()
}

/// Default paired-model axis: parameter sweeps of all three models.
pub fn default_contingency_models() -> Vec<RetrievalModel> {
    [
        "lmjm:0.3",
        "lmjm:0.6",
        "bm25:0.7,0.3",
        "bm25:1,1",
        "bm25:0.3,0.7",
        "lmdir:100",
        "lmdir:500",
        "lmdir:1000",
    ]
    .iter()
    .map(|s| s.parse().expect("static model spec"))
    .collect()
}

/// Raw JSON shape; every field optional, unknown fields rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub corpus: Option<String>,
    pub corpus_format: Option<String>,
    pub topics: Option<String>,
    pub qrels: Option<String>,
    pub models: Option<Vec<String>>,
    pub metrics: Option<Vec<String>>,
    pub predictors: Option<Vec<String>>,
    pub correlations: Option<Vec<String>>,
    pub contingency: Option<RawContingency>,
    pub kappa: Option<usize>,
    pub qpp: Option<RawQpp>,
    pub ndcg_gains: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawContingency {
    pub metric_axis: Option<Vec<String>>,
    pub model_axis: Option<Vec<String>>,
    pub rank_by: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawQpp {
    pub k: Option<usize>,
    pub pool: Option<usize>,
    pub samples: Option<usize>,
    pub fb_terms: Option<usize>,
    pub mu: Option<f64>,
    pub nqc_std_dev: Option<String>,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub corpus_format: Option<CorpusFormat>,
    pub topics: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub kappa: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// A fully resolved, validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub corpus_format: CorpusFormat,
    pub topics: PathBuf,
    pub qrels: PathBuf,
    pub models: Vec<RetrievalModel>,
    pub metrics: Vec<MetricSpec>,
    pub predictors: Vec<PredictorKind>,
    pub correlations: Vec<CorrelationKind>,
    pub contingency_metric_axis: Vec<MetricSpec>,
    pub contingency_model_axis: Vec<RetrievalModel>,
    pub contingency_rank_by: Vec<CorrelationKind>,
    pub kappa: usize,
    pub qpp: QppParams,
    pub ndcg_gains: NdcgGains,
    pub output_dir: PathBuf,
    pub jobs: Option<usize>,
}

impl RunConfig {
    /// Loads and resolves a config file, applying CLI overrides.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let raw: RawConfig = serde_json::from_str(&content).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::resolve(raw, overrides, base)
    }

    /// Resolves a raw config against defaults and validates it; relative
    /// paths are resolved against `base`.
    pub fn resolve(raw: RawConfig, overrides: &Overrides, base: &Path) -> Result<Self> {
        let mut errors: Vec<String> = Vec::new();

        fn parse_list<T: std::str::FromStr<Err = Error>>(
            what: &str,
            specs: &[String],
            errors: &mut Vec<String>,
        ) -> Vec<T> {
            let mut out = Vec::new();
            for s in specs {
                match s.parse::<T>() {
                    Ok(v) => out.push(v),
                    Err(Error::InvalidConfig(msgs)) => {
                        errors.extend(msgs.into_iter().map(|m| format!("{what}: {m}")))
                    }
                    Err(e) => errors.push(format!("{what}: {e}")),
                }
            }
            out
        }

        let resolve_path = |raw: &Option<String>, over: &Option<PathBuf>| -> Option<PathBuf> {
            over.clone().or_else(|| {
                raw.as_ref().map(|p| {
                    let p = Path::new(p);
                    if p.is_absolute() {
                        p.to_path_buf()
                    } else {
                        base.join(p)
                    }
                })
            })
        };

        let mut require_file = |what: &str, path: Option<PathBuf>| -> PathBuf {
            match path {
                Some(p) => {
                    if !p.exists() {
                        errors.push(format!("{what} path does not exist: {}", p.display()));
                    }
                    p
                }
                None => {
                    errors.push(format!("{what} path is required"));
                    PathBuf::new()
                }
            }
        };

        let corpus = require_file("corpus", resolve_path(&raw.corpus, &overrides.corpus));
        let topics = require_file("topics", resolve_path(&raw.topics, &overrides.topics));
        let qrels = require_file("qrels", resolve_path(&raw.qrels, &overrides.qrels));

        let corpus_format = match (&overrides.corpus_format, &raw.corpus_format) {
            (Some(f), _) => *f,
            (None, Some(s)) => s.parse().unwrap_or_else(|e: Error| {
                errors.push(e.to_string());
                CorpusFormat::Tsv
            }),
            (None, None) => CorpusFormat::Tsv,
        };

        let models = match &raw.models {
            Some(specs) => parse_list::<RetrievalModel>("models", specs, &mut errors),
            None => default_models(),
        };
        let metrics = match &raw.metrics {
            Some(specs) => parse_list::<MetricSpec>("metrics", specs, &mut errors),
            None => default_metrics(),
        };
        let predictors = match &raw.predictors {
            Some(specs) => parse_list::<PredictorKind>("predictors", specs, &mut errors),
            None => PredictorKind::ALL.to_vec(),
        };
        let correlations = match &raw.correlations {
            Some(specs) => parse_list::<CorrelationKind>("correlations", specs, &mut errors),
            None => CorrelationKind::ALL.to_vec(),
        };

        let raw_cont = raw.contingency.clone().unwrap_or_default();
        let contingency_metric_axis = match &raw_cont.metric_axis {
            Some(specs) => parse_list::<MetricSpec>("contingency.metric_axis", specs, &mut errors),
            // full default axis, unless the user narrowed the metric list
            None if raw.metrics.is_none() => default_contingency_metrics(),
            None => metrics.clone(),
        };
        let contingency_model_axis = match &raw_cont.model_axis {
            Some(specs) => {
                parse_list::<RetrievalModel>("contingency.model_axis", specs, &mut errors)
            }
            None if raw.models.is_none() => default_contingency_models(),
            None => models.clone(),
        };
        let contingency_rank_by = match &raw_cont.rank_by {
            Some(specs) => parse_list::<CorrelationKind>("contingency.rank_by", specs, &mut errors),
            None => vec![CorrelationKind::PearsonR, CorrelationKind::KendallTau],
        };

        if models.is_empty() {
            errors.push("at least one model is required".to_string());
        }
        if metrics.is_empty() {
            errors.push("at least one metric is required".to_string());
        }
        if predictors.is_empty() {
            errors.push("at least one predictor is required".to_string());
        }
        if correlations.is_empty() {
            errors.push("at least one correlation kind is required".to_string());
        }

        // retrieval depth: explicit, or the deepest metric cutoff in play
        let max_cutoff = metrics
            .iter()
            .chain(contingency_metric_axis.iter())
            .map(|m| m.cutoff)
            .max()
            .unwrap_or(1000);
        let kappa = overrides.kappa.or(raw.kappa).unwrap_or(max_cutoff);
        if kappa == 0 {
            errors.push("kappa must be >= 1".to_string());
        }

        let seed = overrides.seed.or(raw.seed).unwrap_or(42);
        let raw_qpp = raw.qpp.clone().unwrap_or_default();
        let nqc_std_dev = match raw_qpp.nqc_std_dev.as_deref() {
            None | Some("population") => StdDev::Population,
            Some("sample") => StdDev::Sample,
            Some(other) => {
                errors.push(format!(
                    "qpp.nqc_std_dev must be population or sample, got {other:?}"
                ));
                StdDev::Population
            }
        };
        let defaults = QppParams::default();
        let qpp = QppParams {
            top_k: raw_qpp.k.unwrap_or(defaults.top_k),
            pool_k: raw_qpp.pool.unwrap_or(defaults.pool_k),
            num_samples: raw_qpp.samples.unwrap_or(defaults.num_samples),
            fb_terms: raw_qpp.fb_terms.unwrap_or(defaults.fb_terms),
            mu: raw_qpp.mu.unwrap_or(defaults.mu),
            nqc_std_dev,
            seed,
        };
        if let Err(Error::InvalidConfig(msgs)) = qpp.validate() {
            errors.extend(msgs);
        }

        let ndcg_gains = match raw.ndcg_gains.as_deref() {
            None | Some("graded") => NdcgGains::Graded,
            Some("binary") => NdcgGains::Binary,
            Some(other) => {
                errors.push(format!(
                    "ndcg_gains must be graded or binary, got {other:?}"
                ));
                NdcgGains::Graded
            }
        };

        let output_dir = overrides
            .output_dir
            .clone()
            .or_else(|| {
                raw.output_dir.as_ref().map(|p| {
                    let p = Path::new(p);
                    if p.is_absolute() {
                        p.to_path_buf()
                    } else {
                        base.join(p)
                    }
                })
            })
            .unwrap_or_else(|| PathBuf::from("out"));

        let jobs = overrides.jobs.or(raw.jobs);
        if jobs == Some(0) {
            errors.push("jobs must be >= 1".to_string());
        }

        if !errors.is_empty() {
            return Err(Error::InvalidConfig(errors));
        }
        Ok(Self {
            corpus,
            corpus_format,
            topics,
            qrels,
            models,
            metrics,
            predictors,
            correlations,
            contingency_metric_axis,
            contingency_model_axis,
            contingency_rank_by,
            kappa,
            qpp,
            ndcg_gains,
            output_dir,
            jobs,
        })
    }
}
