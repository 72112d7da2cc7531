//! The experiment engine: evaluates every predictor under every evaluation
//! context (metric, retrieval model, rank cutoff), then derives
//!
//! * sensitivity reports: per-predictor grids of correlation outcomes with
//!   row-wise (across metrics) and column-wise (across models) standard
//!   deviations, and
//! * contingency reports: for each pair of contexts, the Kendall-tau
//!   agreement between the orderings they induce over the predictor
//!   battery.
//!
//! Retrieval runs are cached per (model, cutoff) and computed exactly once;
//! every cell is an independent job whose result lands in a pre-shaped,
//! id-keyed grid, so parallel scheduling never affects the output.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::correlation::{correlate, kendall_tau_b, CorrelationKind};
use crate::index::{Index, Query};
use crate::metrics::{ground_truth, MetricSpec, NdcgGains, Qrels};
use crate::predictors::{predict, PredictorKind, PredictorSpec, QppParams};
use crate::retrieval::{search, RankedList, RetrievalModel};
use crate::Result;

/// The evaluation context a QPP ground truth is constructed in: which
/// metric, which retrieval model, and how deep retrieval goes.
#[derive(Debug, Clone, PartialEq)]
pub struct QppContext {
    pub metric: MetricSpec,
    pub model: RetrievalModel,
    pub kappa: usize,
}

impl QppContext {
    pub fn id(&self) -> String {
        format!("{}|{}|{}", self.metric.id(), self.model.id(), self.kappa)
    }
}

/// One predictor evaluated in one context, under each correlation measure.
/// `None` marks an undefined correlation (constant vector).
#[derive(Debug, Clone)]
pub struct QppOutcome {
    pub predictor: PredictorKind,
    pub context_id: String,
    pub by_correlation: BTreeMap<CorrelationKind, Option<f64>>,
}

/// Per-query ranked lists for one (model, kappa) pair.
pub type RunSet = BTreeMap<String, RankedList>;

/// Concurrent populate-or-read cache of retrieval runs; each key is
/// computed exactly once even under concurrent access.
#[derive(Default)]
pub struct RunCache {
    inner: Mutex<HashMap<String, Arc<OnceLock<Arc<RunSet>>>>>,
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(
        &self,
        index: &Index,
        model: &RetrievalModel,
        kappa: usize,
        queries: &[Query],
    ) -> Arc<RunSet> {
        let key = format!("{}|{kappa}", model.id());
        self.get_or_init(&key, || retrieve_runs(index, model, kappa, queries))
    }

    /// Returns the cached value for `key`, running `init` at most once.
    pub fn get_or_init(&self, key: &str, init: impl FnOnce() -> RunSet) -> Arc<RunSet> {
        let cell = {
            let mut map = self.inner.lock().expect("run cache poisoned");
            map.entry(key.to_string()).or_default().clone()
        };
        cell.get_or_init(|| Arc::new(init())).clone()
    }
}

/// Retrieves the top-kappa run for every query.
pub fn retrieve_runs(
    index: &Index,
    model: &RetrievalModel,
    kappa: usize,
    queries: &[Query],
) -> RunSet {
    queries
        .par_iter()
        .map(|q| (q.qid.clone(), search(index, model, q, kappa)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Evaluates one predictor in one context: retrieve (via the cache),
/// predict, compute ground truth, correlate under every requested measure.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_outcome(
    spec: &PredictorSpec,
    context: &QppContext,
    queries: &[Query],
    qrels: &Qrels,
    index: &Index,
    kinds: &[CorrelationKind],
    gains: NdcgGains,
    cache: &RunCache,
) -> Result<QppOutcome> {
    let runs = cache.get_or_compute(index, &context.model, context.kappa, queries);
    let phi = predict(spec, queries, &runs, index, &context.model)?;
    let order: Vec<String> = queries.iter().map(|q| q.qid.clone()).collect();
    let gt = ground_truth(context.metric, &runs, qrels, &order, gains)?;
    let by_correlation = kinds
        .iter()
        .map(|&k| (k, correlate(k, &phi.values, &gt.values)))
        .collect();
    Ok(QppOutcome {
        predictor: spec.kind,
        context_id: context.id(),
        by_correlation,
    })
}

/// Everything a grid computation needs besides the axes themselves.
pub struct GridInputs<'a> {
    pub index: &'a Index,
    pub queries: &'a [Query],
    pub qrels: &'a Qrels,
    pub params: QppParams,
    pub gains: NdcgGains,
    pub kappa: usize,
}

/// All outcomes for a battery over a set of (metric, model) pairs, keyed by
/// (predictor id, metric id, model id).
pub struct OutcomeTable {
    cells: BTreeMap<(String, String, String), BTreeMap<CorrelationKind, Option<f64>>>,
    pub kappa: usize,
}

impl OutcomeTable {
    pub fn get(
        &self,
        predictor: PredictorKind,
        metric: MetricSpec,
        model: &RetrievalModel,
    ) -> Option<&BTreeMap<CorrelationKind, Option<f64>>> {
        self.cells
            .get(&(predictor.id().to_string(), metric.id(), model.id()))
    }

    pub fn outcome(
        &self,
        predictor: PredictorKind,
        metric: MetricSpec,
        model: &RetrievalModel,
        kind: CorrelationKind,
    ) -> Option<f64> {
        self.get(predictor, metric, model)
            .and_then(|m| m.get(&kind).copied().flatten())
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<
        Item = (
            &(String, String, String),
            &BTreeMap<CorrelationKind, Option<f64>>,
        ),
    > {
        self.cells.iter()
    }
}

/// Computes outcomes for `battery` x `pairs` x `kinds`.
///
/// Work is phased so each expensive artifact is computed once and in
/// parallel: retrieval runs per model, prediction vectors per
/// (predictor, model), ground-truth vectors per (metric, model).
pub fn compute_outcomes(
    inputs: &GridInputs,
    battery: &[PredictorKind],
    pairs: &[(MetricSpec, RetrievalModel)],
    kinds: &[CorrelationKind],
    cache: &RunCache,
) -> Result<OutcomeTable> {
    let order: Vec<String> = inputs.queries.iter().map(|q| q.qid.clone()).collect();

    let mut models: Vec<RetrievalModel> = Vec::new();
    for (_, model) in pairs {
        if !models.iter().any(|m| m.id() == model.id()) {
            models.push(*model);
        }
    }

    // phase 1: retrieval runs
    models.par_iter().for_each(|model| {
        cache.get_or_compute(inputs.index, model, inputs.kappa, inputs.queries);
    });

    // phase 2: prediction vectors, one battery job per model so UEF
    // variants share their sampling work
    let predictions: BTreeMap<(String, String), Vec<f64>> = models
        .par_iter()
        .map(|model| {
            let runs = cache.get_or_compute(inputs.index, model, inputs.kappa, inputs.queries);
            let vectors = crate::predictors::predict_battery(
                battery,
                inputs.params,
                inputs.queries,
                &runs,
                inputs.index,
                model,
            )?;
            Ok(vectors
                .into_iter()
                .map(|(kind, phi)| ((kind.id().to_string(), model.id()), phi.values))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    // phase 3: ground-truth vectors per (metric, model)
    let mut gt_jobs: Vec<(MetricSpec, RetrievalModel)> = Vec::new();
    for (metric, model) in pairs {
        if !gt_jobs
            .iter()
            .any(|(me, mo)| me.id() == metric.id() && mo.id() == model.id())
        {
            gt_jobs.push((*metric, *model));
        }
    }
    let truths: BTreeMap<(String, String), Vec<f64>> = gt_jobs
        .par_iter()
        .map(|(metric, model)| {
            let runs = cache.get_or_compute(inputs.index, model, inputs.kappa, inputs.queries);
            let gt = ground_truth(*metric, &runs, inputs.qrels, &order, inputs.gains)?;
            Ok(((metric.id(), model.id()), gt.values))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    // phase 4: correlations
    let mut cells = BTreeMap::new();
    for &predictor in battery {
        for (metric, model) in &gt_jobs {
            let phi = &predictions[&(predictor.id().to_string(), model.id())];
            let gt = &truths[&(metric.id(), model.id())];
            let by_corr: BTreeMap<CorrelationKind, Option<f64>> =
                kinds.iter().map(|&k| (k, correlate(k, phi, gt))).collect();
            cells.insert(
                (predictor.id().to_string(), metric.id(), model.id()),
                by_corr,
            );
        }
    }
    Ok(OutcomeTable {
        cells,
        kappa: inputs.kappa,
    })
}

/// Textbook sample standard deviation (n-1 denominator); `None` for fewer
/// than two values.
pub fn sample_std_dev(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

/// A standard deviation over the defined cells of a row or column, plus
/// how many undefined cells were excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaCell {
    pub sigma: Option<f64>,
    pub excluded: usize,
}

fn sigma_over(cells: impl Iterator<Item = Option<f64>>) -> SigmaCell {
    let mut defined = Vec::new();
    let mut excluded = 0;
    for c in cells {
        match c {
            Some(v) => defined.push(v),
            None => excluded += 1,
        }
    }
    SigmaCell {
        sigma: sample_std_dev(&defined),
        excluded,
    }
}

/// Sensitivity of one predictor's outcomes to the evaluation context:
/// for each correlation measure, a models x metrics grid with sigma(theta)
/// per row (variation across metrics) and sigma(S) per column (variation
/// across models).
#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub predictor: PredictorKind,
    pub corr_kinds: Vec<CorrelationKind>,
    pub model_axis: Vec<RetrievalModel>,
    pub metric_axis: Vec<MetricSpec>,
    pub kappa: usize,
    /// `cells[kind][model][metric]`
    pub cells: Vec<Vec<Vec<Option<f64>>>>,
    /// `sigma_theta[kind][model]`: std-dev across the metric axis.
    pub sigma_theta: Vec<Vec<SigmaCell>>,
    /// `sigma_s[kind][metric]`: std-dev across the model axis.
    pub sigma_s: Vec<Vec<SigmaCell>>,
}

/// Builds the sensitivity report for one predictor from computed outcomes.
pub fn sensitivity(
    table: &OutcomeTable,
    predictor: PredictorKind,
    model_axis: &[RetrievalModel],
    metric_axis: &[MetricSpec],
    corr_kinds: &[CorrelationKind],
) -> SensitivityReport {
    let cells: Vec<Vec<Vec<Option<f64>>>> = corr_kinds
        .iter()
        .map(|&kind| {
            model_axis
                .iter()
                .map(|model| {
                    metric_axis
                        .iter()
                        .map(|&metric| table.outcome(predictor, metric, model, kind))
                        .collect()
                })
                .collect()
        })
        .collect();

    let sigma_theta = cells
        .iter()
        .map(|grid: &Vec<Vec<Option<f64>>>| {
            grid.iter()
                .map(|row| sigma_over(row.iter().copied()))
                .collect()
        })
        .collect();
    let sigma_s = cells
        .iter()
        .map(|grid: &Vec<Vec<Option<f64>>>| {
            (0..metric_axis.len())
                .map(|col| sigma_over(grid.iter().map(|row| row[col])))
                .collect()
        })
        .collect();

    SensitivityReport {
        predictor,
        corr_kinds: corr_kinds.to_vec(),
        model_axis: model_axis.to_vec(),
        metric_axis: metric_axis.to_vec(),
        kappa: table.kappa,
        cells,
        sigma_theta,
        sigma_s,
    }
}

/// Which context component varies across a contingency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContingencyAxis {
    /// Pairs of metrics, grouped by model.
    Metric,
    /// Pairs of models, grouped by metric.
    Model,
}

impl ContingencyAxis {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Metric => "metric",
            Self::Model => "model",
        }
    }
}

/// Rank-stability matrix: cell (i, j, g) is the Kendall tau between the
/// orderings of the predictor battery induced by primary contexts i and j
/// within group g. Only the upper triangle (j > i) is populated.
#[derive(Debug, Clone)]
pub struct ContingencyReport {
    pub axis: ContingencyAxis,
    pub rank_by: CorrelationKind,
    pub battery: Vec<PredictorKind>,
    /// Labels of the paired dimension (metric or model labels).
    pub primary: Vec<String>,
    /// Labels of the grouping dimension.
    pub groups: Vec<String>,
    /// `cells[i][j][g]`; `None` off the upper triangle or when undefined.
    pub cells: Vec<Vec<Vec<Option<f64>>>>,
}

/// Kendall tau between the orderings two outcome vectors induce over the
/// battery. Tie-adjusted: outcome ties are handled by tau-b rather than by
/// arbitrary tie-breaking, since arbitrary order would inject noise into
/// exactly the stability being measured. `None` if any outcome in either
/// context is undefined.
pub fn ordering_agreement(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let a: Option<Vec<f64>> = a.iter().copied().collect();
    let b: Option<Vec<f64>> = b.iter().copied().collect();
    kendall_tau_b(&a?, &b?)
}

/// Builds one contingency matrix from computed outcomes.
pub fn contingency(
    table: &OutcomeTable,
    battery: &[PredictorKind],
    axis: ContingencyAxis,
    metric_axis: &[MetricSpec],
    model_axis: &[RetrievalModel],
    rank_by: CorrelationKind,
) -> ContingencyReport {
    // outcome vector over the battery for each (metric, model) context
    let outcomes = |metric: MetricSpec, model: &RetrievalModel| -> Vec<Option<f64>> {
        battery
            .iter()
            .map(|&p| table.outcome(p, metric, model, rank_by))
            .collect()
    };

    let (primary_len, groups_len) = match axis {
        ContingencyAxis::Metric => (metric_axis.len(), model_axis.len()),
        ContingencyAxis::Model => (model_axis.len(), metric_axis.len()),
    };

    let mut cells = vec![vec![vec![None; groups_len]; primary_len]; primary_len];
    for i in 0..primary_len {
        for j in (i + 1)..primary_len {
            for g in 0..groups_len {
                let (a, b) = match axis {
                    ContingencyAxis::Metric => (
                        outcomes(metric_axis[i], &model_axis[g]),
                        outcomes(metric_axis[j], &model_axis[g]),
                    ),
                    ContingencyAxis::Model => (
                        outcomes(metric_axis[g], &model_axis[i]),
                        outcomes(metric_axis[g], &model_axis[j]),
                    ),
                };
                cells[i][j][g] = ordering_agreement(&a, &b);
            }
        }
    }

    let (primary, groups) = match axis {
        ContingencyAxis::Metric => (
            metric_axis.iter().map(|m| m.label()).collect(),
            model_axis.iter().map(|m| m.label()).collect(),
        ),
        ContingencyAxis::Model => (
            model_axis.iter().map(|m| m.label()).collect(),
            metric_axis.iter().map(|m| m.label()).collect(),
        ),
    };

    ContingencyReport {
        axis,
        rank_by,
        battery: battery.to_vec(),
        primary,
        groups,
        cells,
    }
}

/// Index, queries and qrels loaded per the run configuration. Queries
/// without relevant documents in the qrels are dropped with a notice.
pub struct LoadedExperiment {
    pub index: Index,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

pub fn load_experiment(config: &crate::config::RunConfig) -> Result<LoadedExperiment> {
    let corpus = crate::trec::read_corpus(&config.corpus, config.corpus_format)?;
    let index = Index::build(corpus)?;
    let qrels = crate::trec::read_qrels(&config.qrels)?;
    let all_queries = crate::trec::read_topics(&config.topics)?;

    let mut queries = Vec::with_capacity(all_queries.len());
    for q in all_queries {
        if qrels.relevant_count(&q.qid) == 0 {
            log::info!(
                "dropping query {}: no relevant documents in the qrels",
                q.qid
            );
        } else {
            queries.push(q);
        }
    }
    if queries.len() < 2 {
        return Err(crate::Error::InvalidConfig(vec![format!(
            "need at least 2 usable queries for correlation, got {}",
            queries.len()
        )]));
    }
    Ok(LoadedExperiment {
        index,
        queries,
        qrels,
    })
}

/// Output of a full grid run.
pub struct GridOutput {
    pub sensitivity: Vec<SensitivityReport>,
    pub contingency: Vec<ContingencyReport>,
    pub written: Vec<std::path::PathBuf>,
}

/// Runs the full experiment grid described by the configuration and writes
/// TSV/Markdown reports into the output directory. Deterministic given the
/// seed regardless of the number of worker threads.
pub fn run_grid(config: &crate::config::RunConfig) -> Result<GridOutput> {
    match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| {
                crate::Error::InvalidConfig(vec![format!("failed to build thread pool: {e}")])
            })?
            .install(|| run_grid_inner(config)),
        None => run_grid_inner(config),
    }
}

fn run_grid_inner(config: &crate::config::RunConfig) -> Result<GridOutput> {
    let loaded = load_experiment(config)?;
    let inputs = GridInputs {
        index: &loaded.index,
        queries: &loaded.queries,
        qrels: &loaded.qrels,
        params: config.qpp,
        gains: config.ndcg_gains,
        kappa: config.kappa,
    };

    let mut pairs: Vec<(MetricSpec, RetrievalModel)> = Vec::new();
    {
        let mut push = |metric: MetricSpec, model: &RetrievalModel| {
            if !pairs
                .iter()
                .any(|(me, mo)| me.id() == metric.id() && mo.id() == model.id())
            {
                pairs.push((metric, *model));
            }
        };
        for model in &config.models {
            for metric in config.metrics.iter().chain(&config.contingency_metric_axis) {
                push(*metric, model);
            }
        }
        for model in &config.contingency_model_axis {
            for metric in &config.metrics {
                push(*metric, model);
            }
        }
    }

    let mut kinds = config.correlations.clone();
    for k in &config.contingency_rank_by {
        if !kinds.contains(k) {
            kinds.push(*k);
        }
    }

    let cache = RunCache::new();
    let table = compute_outcomes(&inputs, &config.predictors, &pairs, &kinds, &cache)?;

    let sensitivity_reports: Vec<SensitivityReport> = config
        .predictors
        .iter()
        .map(|&p| {
            sensitivity(
                &table,
                p,
                &config.models,
                &config.metrics,
                &config.correlations,
            )
        })
        .collect();

    let mut contingency_reports = Vec::new();
    if config.predictors.len() >= 2 {
        for &rank_by in &config.contingency_rank_by {
            contingency_reports.push(contingency(
                &table,
                &config.predictors,
                ContingencyAxis::Metric,
                &config.contingency_metric_axis,
                &config.models,
                rank_by,
            ));
            contingency_reports.push(contingency(
                &table,
                &config.predictors,
                ContingencyAxis::Model,
                &config.metrics,
                &config.contingency_model_axis,
                rank_by,
            ));
        }
    } else {
        log::warn!("skipping contingency reports: fewer than 2 predictors configured");
    }

    let written = crate::report::write_reports(
        &config.output_dir,
        &sensitivity_reports,
        &contingency_reports,
        &table,
    )?;
    Ok(GridOutput {
        sensitivity: sensitivity_reports,
        contingency: contingency_reports,
        written,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Document;
    use std::collections::BTreeMap as Map;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn doc(id: &str, counts: &[(&str, u32)]) -> Document {
        let term_counts: Map<String, u32> =
            counts.iter().map(|(t, c)| (t.to_string(), *c)).collect();
        let length = term_counts.values().sum();
        Document {
            doc_id: id.to_string(),
            term_counts,
            length,
        }
    }

    /// Documents vary in length and term df so that different retrieval
    /// models rank differently and no predictor is constant across queries.
    fn tiny_index() -> Index {
        Index::from_documents(vec![
            doc("d00", &[("cat", 1), ("fill", 1)]),
            doc("d01", &[("cat", 5), ("fill", 45)]),
            doc("d02", &[("cat", 2), ("fill", 8)]),
            doc("d03", &[("dog", 1), ("fill", 1)]),
            doc("d04", &[("dog", 5), ("fill", 45)]),
            doc("d05", &[("dog", 2), ("fill", 8)]),
            doc("d06", &[("bird", 2), ("fill", 4)]),
            doc("d07", &[("bird", 1), ("cat", 1), ("fill", 6)]),
            doc("d08", &[("fill", 30)]),
            doc("d09", &[("fill", 20)]),
        ])
        .unwrap()
    }

    fn tiny_queries() -> Vec<Query> {
        vec![
            Query {
                qid: "q1".into(),
                terms: vec!["cat".into()],
            },
            Query {
                qid: "q2".into(),
                terms: vec!["dog".into()],
            },
            Query {
                qid: "q3".into(),
                terms: vec!["bird".into(), "cat".into()],
            },
        ]
    }

    fn tiny_qrels() -> Qrels {
        let mut qrels = Qrels::new();
        for (q, docs) in [
            ("q1", vec!["d01", "d07"]),
            ("q2", vec!["d03"]),
            ("q3", vec!["d06", "d07"]),
        ] {
            for d in docs {
                qrels.insert(q, d, 1);
            }
        }
        qrels
    }

    #[test]
    fn shared_state_is_send_and_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Index>();
        assert_send_sync::<RunCache>();
        assert_send_sync::<OutcomeTable>();
    }

    #[test]
    fn run_cache_computes_each_key_exactly_once() {
        let cache = RunCache::new();
        let calls = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..8 {
                scope.spawn(|| {
                    cache.get_or_init("lmdir:1000|100", || {
                        calls.fetch_add(1, Ordering::SeqCst);
                        RunSet::new()
                    });
                });
            }
        });
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        cache.get_or_init("lmdir:1000|100", || {
            calls.fetch_add(1, Ordering::SeqCst);
            RunSet::new()
        });
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        cache.get_or_init("bm25:0.7,0.3|100", || {
            calls.fetch_add(1, Ordering::SeqCst);
            RunSet::new()
        });
        assert_eq!(calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn caching_is_observationally_invisible() {
        let index = tiny_index();
        let queries = tiny_queries();
        let qrels = tiny_qrels();
        let spec = PredictorSpec::new(PredictorKind::Nqc, QppParams::default());
        let context = QppContext {
            metric: "ap@10".parse().unwrap(),
            model: RetrievalModel::Dirichlet { mu: 100.0 },
            kappa: 10,
        };
        let shared = RunCache::new();
        let a = evaluate_outcome(
            &spec,
            &context,
            &queries,
            &qrels,
            &index,
            &CorrelationKind::ALL,
            NdcgGains::Graded,
            &shared,
        )
        .unwrap();
        let b = evaluate_outcome(
            &spec,
            &context,
            &queries,
            &qrels,
            &index,
            &CorrelationKind::ALL,
            NdcgGains::Graded,
            &shared,
        )
        .unwrap();
        let fresh = evaluate_outcome(
            &spec,
            &context,
            &queries,
            &qrels,
            &index,
            &CorrelationKind::ALL,
            NdcgGains::Graded,
            &RunCache::new(),
        )
        .unwrap();
        assert_eq!(a.by_correlation, b.by_correlation);
        assert_eq!(a.by_correlation, fresh.by_correlation);
    }

    #[test]
    fn perfect_and_inverted_predictors_hit_the_extremes() {
        // build an outcome directly from synthetic phi == g
        let g = vec![0.1, 0.4, 0.3, 0.9];
        for kind in CorrelationKind::ALL {
            assert_eq!(correlate(kind, &g, &g), Some(1.0));
        }
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        assert_eq!(correlate(CorrelationKind::KendallTau, &neg, &g), Some(-1.0));
    }

    #[test]
    fn sigma_matches_table_values() {
        let row = [0.3795, 0.3966, 0.3869, 0.3311];
        let sigma = sample_std_dev(&row).unwrap();
        assert!((sigma - 0.0291).abs() < 1e-4, "sigma = {sigma}");

        let col = [0.3795, 0.5006, 0.5208];
        let sigma = sample_std_dev(&col).unwrap();
        assert!((sigma - 0.0764).abs() < 1e-4, "sigma = {sigma}");

        assert_eq!(sample_std_dev(&[0.5]), None);
        assert_eq!(sample_std_dev(&[0.5, 0.5, 0.5]), Some(0.0));
    }

    #[test]
    fn sigma_matches_an_independent_formulation() {
        // sum-of-squares route: sqrt((sum(x^2) - n*mean^2) / (n-1))
        let mut state = 0x9E37u64;
        for _ in 0..100 {
            let n = 2 + (state % 12) as usize;
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
                })
                .collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let sq_sum: f64 = values.iter().map(|v| v * v).sum();
            let reference = ((sq_sum - n as f64 * mean * mean).max(0.0) / (n as f64 - 1.0)).sqrt();
            let got = sample_std_dev(&values).unwrap();
            assert!((got - reference).abs() < 1e-12, "{got} vs {reference}");
        }
    }

    #[test]
    fn ordering_self_agreement_is_one_when_tie_free() {
        let v: Vec<Option<f64>> = [0.42, -0.1, 0.9, 0.3, 0.31, 0.05, 0.77]
            .iter()
            .map(|&x| Some(x))
            .collect();
        assert_eq!(ordering_agreement(&v, &v), Some(1.0));
        // symmetry
        let w: Vec<Option<f64>> = [0.1, 0.2, 0.15, 0.9, 0.0, -0.3, 0.5]
            .iter()
            .map(|&x| Some(x))
            .collect();
        assert_eq!(ordering_agreement(&v, &w), ordering_agreement(&w, &v));
    }

    #[test]
    fn ordering_agreement_quantizes_in_twenty_firsts() {
        // identity ordering vs one adjacent swap among 7 systems
        let a: Vec<Option<f64>> = (0..7).map(|i| Some(i as f64)).collect();
        let mut b = a.clone();
        b.swap(0, 1);
        let tau = ordering_agreement(&a, &b).unwrap();
        assert!((tau - 19.0 / 21.0).abs() < 1e-12);

        // any undefined outcome poisons the cell
        let mut c = a.clone();
        c[3] = None;
        assert_eq!(ordering_agreement(&a, &c), None);
    }

    #[test]
    fn avgidf_outcome_depends_on_context_only_through_ground_truth() {
        let index = tiny_index();
        let queries = tiny_queries();
        let qrels = tiny_qrels();
        let cache = RunCache::new();
        let spec = PredictorSpec::new(PredictorKind::AvgIdf, QppParams::default());
        let metric: MetricSpec = "ap@10".parse().unwrap();
        let m1 = RetrievalModel::JelinekMercer { lambda: 0.6 };
        let m2 = RetrievalModel::Dirichlet { mu: 100.0 };

        // identical predictions under both models
        let runs1 = cache.get_or_compute(&index, &m1, 10, &queries);
        let runs2 = cache.get_or_compute(&index, &m2, 10, &queries);
        let p1 = predict(&spec, &queries, &runs1, &index, &m1).unwrap();
        let p2 = predict(&spec, &queries, &runs2, &index, &m2).unwrap();
        assert_eq!(p1, p2);

        // generally different ground truths
        let order: Vec<String> = queries.iter().map(|q| q.qid.clone()).collect();
        let g1 = ground_truth(metric, &runs1, &qrels, &order, NdcgGains::Graded).unwrap();
        let g2 = ground_truth(metric, &runs2, &qrels, &order, NdcgGains::Graded).unwrap();
        // the two models rank differently on this fixture
        assert_ne!(g1.values, g2.values);
    }

    #[test]
    fn compute_outcomes_fills_every_cell() {
        let index = tiny_index();
        let queries = tiny_queries();
        let qrels = tiny_qrels();
        let inputs = GridInputs {
            index: &index,
            queries: &queries,
            qrels: &qrels,
            params: QppParams {
                top_k: 3,
                pool_k: 5,
                num_samples: 2,
                ..QppParams::default()
            },
            gains: NdcgGains::Graded,
            kappa: 10,
        };
        let battery = [
            PredictorKind::AvgIdf,
            PredictorKind::Nqc,
            PredictorKind::Wig,
        ];
        let metrics: Vec<MetricSpec> = ["ap@10", "p@5"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let models = [
            RetrievalModel::Dirichlet { mu: 100.0 },
            RetrievalModel::Bm25 { k1: 0.7, b: 0.3 },
        ];
        let pairs: Vec<(MetricSpec, RetrievalModel)> = metrics
            .iter()
            .flat_map(|&me| models.iter().map(move |&mo| (me, mo)))
            .collect();
        let cache = RunCache::new();
        let table = compute_outcomes(
            &inputs,
            &battery,
            &pairs,
            &[CorrelationKind::PearsonR, CorrelationKind::KendallTau],
            &cache,
        )
        .unwrap();

        for &p in &battery {
            for &(me, mo) in &pairs {
                let cell = table.get(p, me, &mo).expect("cell missing");
                assert_eq!(cell.len(), 2);
            }
        }

        let report = sensitivity(
            &table,
            PredictorKind::Nqc,
            &models,
            &metrics,
            &[CorrelationKind::PearsonR],
        );
        assert_eq!(report.cells[0].len(), 2);
        assert_eq!(report.cells[0][0].len(), 2);
        assert_eq!(report.sigma_theta[0].len(), 2);
        assert_eq!(report.sigma_s[0].len(), 2);

        let cont = contingency(
            &table,
            &battery,
            ContingencyAxis::Metric,
            &metrics,
            &models,
            CorrelationKind::PearsonR,
        );
        assert_eq!(cont.primary.len(), 2);
        assert_eq!(cont.groups.len(), 2);
        // upper triangle only
        assert!(cont.cells[0][1].iter().any(|c| c.is_some()));
        assert!(cont.cells[1][0].iter().all(|c| c.is_none()));

        // the single-cell path computes the same outcomes as the grid
        for &p in &battery {
            for &(metric, model) in &pairs {
                let spec = PredictorSpec::new(p, inputs.params);
                let context = QppContext {
                    metric,
                    model,
                    kappa: inputs.kappa,
                };
                let outcome = evaluate_outcome(
                    &spec,
                    &context,
                    &queries,
                    &qrels,
                    &index,
                    &[CorrelationKind::PearsonR, CorrelationKind::KendallTau],
                    NdcgGains::Graded,
                    &cache,
                )
                .unwrap();
                assert_eq!(
                    &outcome.by_correlation,
                    table.get(p, metric, &model).unwrap(),
                    "{p} {metric} {model}"
                );
            }
        }
    }
}
