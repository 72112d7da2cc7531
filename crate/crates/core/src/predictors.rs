//! Query performance predictors: pre-retrieval AvgIDF and post-retrieval
//! Clarity, WIG, NQC, and UEF wrapping each post-retrieval base.
//!
//! All predictors are pure functions of (query, ranked list, index,
//! parameters, seed). UEF is the only randomized predictor; its sampling
//! RNG is seeded per query from the global seed and a stable hash of the
//! qid, so values do not depend on scheduling or platform.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::correlation::pearson;
use crate::index::{CorpusStats, Document, Index, Query};
use crate::retrieval::{corpus_score, RankedList, RetrievalModel};
use crate::{Error, Result};

/// Post-retrieval predictors usable as the base estimator inside UEF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasePredictor {
    Clarity,
    Wig,
    Nqc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredictorKind {
    AvgIdf,
    Clarity,
    Wig,
    Nqc,
    Uef(BasePredictor),
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 7] = [
        PredictorKind::AvgIdf,
        PredictorKind::Clarity,
        PredictorKind::Wig,
        PredictorKind::Nqc,
        PredictorKind::Uef(BasePredictor::Clarity),
        PredictorKind::Uef(BasePredictor::Wig),
        PredictorKind::Uef(BasePredictor::Nqc),
    ];

    /// Canonical machine id, file-name safe.
    pub fn id(&self) -> &'static str {
        match self {
            Self::AvgIdf => "avgidf",
            Self::Clarity => "clarity",
            Self::Wig => "wig",
            Self::Nqc => "nqc",
            Self::Uef(BasePredictor::Clarity) => "uef_clarity",
            Self::Uef(BasePredictor::Wig) => "uef_wig",
            Self::Uef(BasePredictor::Nqc) => "uef_nqc",
        }
    }

    /// Display form used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            Self::AvgIdf => "AvgIDF",
            Self::Clarity => "Clarity",
            Self::Wig => "WIG",
            Self::Nqc => "NQC",
            Self::Uef(BasePredictor::Clarity) => "UEF(Clarity)",
            Self::Uef(BasePredictor::Wig) => "UEF(WIG)",
            Self::Uef(BasePredictor::Nqc) => "UEF(NQC)",
        }
    }

    pub fn is_post_retrieval(&self) -> bool {
        !matches!(self, Self::AvgIdf)
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| match c {
                '(' | ')' | '-' | ' ' => '_',
                c => c,
            })
            .collect();
        match norm.trim_matches('_') {
            "avgidf" => Ok(Self::AvgIdf),
            "clarity" => Ok(Self::Clarity),
            "wig" => Ok(Self::Wig),
            "nqc" => Ok(Self::Nqc),
            "uef_clarity" => Ok(Self::Uef(BasePredictor::Clarity)),
            "uef_wig" => Ok(Self::Uef(BasePredictor::Wig)),
            "uef_nqc" => Ok(Self::Uef(BasePredictor::Nqc)),
            _ => Err(Error::InvalidConfig(vec![format!(
                "unrecognized predictor: {s:?}"
            )])),
        }
    }
}

/// Standard-deviation denominator used by NQC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdDev {
    /// 1/n.
    #[default]
    Population,
    /// 1/(n-1); 0 for singleton inputs.
    Sample,
}

/// Shared predictor parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QppParams {
    /// Number of top documents a post-retrieval predictor looks at (k).
    pub top_k: usize,
    /// Size of the pool UEF samples from (K >= k).
    pub pool_k: usize,
    /// Number of UEF samples.
    pub num_samples: usize,
    /// Relevance-model vocabulary truncation; `usize::MAX` disables it.
    pub fb_terms: usize,
    /// Dirichlet smoothing mass for relevance-model estimation and
    /// re-scoring, independent of the retrieval model.
    pub mu: f64,
    pub nqc_std_dev: StdDev,
    /// Global seed; combined with a stable per-qid hash for UEF sampling.
    pub seed: u64,
}

impl Default for QppParams {
    fn default() -> Self {
        Self {
            top_k: 20,
            pool_k: 100,
            num_samples: 10,
            fb_terms: 100,
            mu: 1000.0,
            nqc_std_dev: StdDev::Population,
            seed: 42,
        }
    }
}

impl QppParams {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.top_k < 1 {
            errors.push("qpp k must be >= 1".to_string());
        }
        if self.pool_k < self.top_k {
            errors.push(format!(
                "qpp pool K ({}) must be >= k ({})",
                self.pool_k, self.top_k
            ));
        }
        if self.num_samples < 1 {
            errors.push("qpp num_samples must be >= 1".to_string());
        }
        if self.fb_terms < 1 {
            errors.push("qpp fb_terms must be >= 1".to_string());
        }
        if self.mu.is_nan() || self.mu <= 0.0 {
            errors.push(format!("qpp mu must be > 0, got {}", self.mu));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }
}

/// A predictor instance: which method, with which parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub params: QppParams,
}

impl PredictorSpec {
    pub fn new(kind: PredictorKind, params: QppParams) -> Self {
        Self { kind, params }
    }
}

/// Per-query predicted scores aligned with a query order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionVector {
    pub qids: Vec<String>,
    pub values: Vec<f64>,
}

/// A unigram term distribution estimated from feedback documents.
///
/// Weights are strictly positive, sum to 1, and are stored sorted by
/// descending weight (ties by term) so that iteration order, and therefore
/// floating-point accumulation, is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceModel {
    weights: Vec<(String, f64)>,
}

impl RelevanceModel {
    /// Normalizes raw positive weights into a distribution.
    pub fn from_weights(mut weights: Vec<(String, f64)>) -> Self {
        debug_assert!(weights.iter().all(|(_, w)| *w > 0.0));
        weights.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut weights {
            *w /= total;
        }
        Self { weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w).sum()
    }
}

/// Average inverse document frequency of the query terms present in the
/// index: (1/|present|) * sum of ln(N/df(t)). Pre-retrieval: independent of
/// any ranked list. 0 when no query term is indexed.
pub fn avg_idf(query: &Query, stats: CorpusStats) -> f64 {
    let n = stats.num_docs() as f64;
    let mut sum = 0.0;
    let mut present = 0usize;
    for term in &query.terms {
        let df = stats.doc_freq(term);
        if df > 0 {
            sum += (n / f64::from(df)).ln();
            present += 1;
        }
    }
    if present == 0 {
        0.0
    } else {
        sum / present as f64
    }
}

/// Dirichlet-smoothed document language model P(t|D).
fn smoothed_prob(doc: &Document, term: &str, stats: CorpusStats, mu: f64) -> f64 {
    (f64::from(doc.tf(term)) + mu * stats.collection_prob(term)) / (f64::from(doc.length) + mu)
}

/// Estimates a relevance model from feedback documents:
/// P(w|R) proportional to sum over docs of P(w|D) * P(Q|D), with P(w|D)
/// Dirichlet-smoothed and P(Q|D) the query likelihood computed in log space
/// and exponentiated after a max shift. The vocabulary is the union of the
/// feedback documents' terms, truncated to the `fb_terms` highest-weight
/// terms and renormalized.
pub fn estimate_rlm(
    query: &Query,
    docs: &[&Document],
    stats: CorpusStats,
    mu: f64,
    fb_terms: usize,
) -> Result<RelevanceModel> {
    if docs.is_empty() {
        return Err(Error::EmptyFeedbackSet);
    }

    let log_likelihoods: Vec<f64> = docs
        .iter()
        .map(|doc| {
            query
                .terms
                .iter()
                .filter(|t| stats.coll_freq(t) > 0)
                .map(|t| smoothed_prob(doc, t, stats, mu).ln())
                .sum()
        })
        .collect();
    let max_ll = log_likelihoods
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let doc_weights: Vec<f64> = log_likelihoods
        .iter()
        .map(|ll| (ll - max_ll).exp())
        .collect();

    // P(t|D) = tf/(|D|+mu) + mu*P(t|C)/(|D|+mu): accumulate the tf part per
    // posting, then add the smoothing floor once per vocabulary term.
    let mut weights: std::collections::BTreeMap<&str, f64> = std::collections::BTreeMap::new();
    let mut floor_scale = 0.0;
    for (doc, w) in docs.iter().zip(&doc_weights) {
        let denom = f64::from(doc.length) + mu;
        floor_scale += w / denom;
        for (term, &tf) in &doc.term_counts {
            *weights.entry(term.as_str()).or_insert(0.0) += w * f64::from(tf) / denom;
        }
    }

    let mut weights: Vec<(String, f64)> = weights
        .into_iter()
        .map(|(term, tf_part)| {
            let floor = mu * stats.collection_prob(term) * floor_scale;
            (term.to_string(), tf_part + floor)
        })
        .collect();

    if weights.len() > fb_terms {
        weights.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        weights.truncate(fb_terms);
    }
    if weights.is_empty() {
        // every feedback document was empty; fall back to a uniform model
        // over the distinct query terms present in the index
        let distinct: std::collections::BTreeSet<&String> = query
            .terms
            .iter()
            .filter(|t| stats.coll_freq(t) > 0)
            .collect();
        weights = distinct.into_iter().map(|t| (t.clone(), 1.0)).collect();
        if weights.is_empty() {
            return Err(Error::EmptyFeedbackSet);
        }
    }
    Ok(RelevanceModel::from_weights(weights))
}

/// KL divergence (base 2) of a relevance model from the collection model.
pub fn clarity_from_rlm(rlm: &RelevanceModel, stats: CorpusStats) -> f64 {
    rlm.iter()
        .map(|(term, w)| w * (w / stats.collection_prob(term)).log2())
        .sum()
}

fn resolve_docs<'a>(ranked: &RankedList, index: &'a Index, k: usize) -> Result<Vec<&'a Document>> {
    ranked
        .entries
        .iter()
        .take(k)
        .map(|e| {
            index.doc(&e.doc_id).ok_or_else(|| Error::UnknownDoc {
                qid: ranked.qid.clone(),
                doc_id: e.doc_id.clone(),
            })
        })
        .collect()
}

/// Clarity: KL divergence between a relevance model estimated on the top-k
/// documents and the collection model. An empty ranked list scores 0.
pub fn clarity(
    query: &Query,
    ranked: &RankedList,
    index: &Index,
    params: &QppParams,
) -> Result<f64> {
    if ranked.is_empty() {
        log::warn!("clarity({}): empty ranked list scored as 0", query.qid);
        return Ok(0.0);
    }
    let docs = resolve_docs(ranked, index, params.top_k)?;
    let stats = index.stats();
    let rlm = estimate_rlm(query, &docs, stats, params.mu, params.fb_terms)?;
    Ok(clarity_from_rlm(&rlm, stats))
}

/// WIG on raw scores: mean gain of the top-k scores over the corpus-level
/// score, normalized by sqrt of the query length.
pub fn wig_from_scores(scores: &[f64], corpus: f64, top_k: usize, query_len: usize) -> f64 {
    let k = top_k.min(scores.len());
    if k == 0 || query_len == 0 {
        return 0.0;
    }
    let gain: f64 = scores[..k].iter().map(|s| s - corpus).sum();
    gain / (k as f64 * (query_len as f64).sqrt())
}

/// WIG: mean score gain of the top-k documents over the corpus-level score,
/// normalized by sqrt of the query length (analyzed term count, duplicates
/// included). An empty ranked list scores 0.
pub fn wig(
    query: &Query,
    ranked: &RankedList,
    model: &RetrievalModel,
    stats: CorpusStats,
    params: &QppParams,
) -> f64 {
    if ranked.is_empty() {
        log::warn!("wig({}): empty ranked list scored as 0", query.qid);
        return 0.0;
    }
    let scores: Vec<f64> = ranked.scores().collect();
    wig_from_scores(
        &scores,
        corpus_score(model, query, stats),
        params.top_k,
        query.terms.len(),
    )
}

/// NQC on raw scores: standard deviation of the top-k scores, divided by
/// |corpus| when that magnitude exceeds 1e-9.
pub fn nqc_from_scores(scores: &[f64], corpus: f64, top_k: usize, mode: StdDev) -> f64 {
    let k = top_k.min(scores.len());
    if k == 0 {
        return 0.0;
    }
    let top = &scores[..k];
    let mean = top.iter().sum::<f64>() / k as f64;
    let ss: f64 = top.iter().map(|s| (s - mean) * (s - mean)).sum();
    let sigma = match mode {
        StdDev::Population => (ss / k as f64).sqrt(),
        StdDev::Sample => {
            if k < 2 {
                0.0
            } else {
                (ss / (k as f64 - 1.0)).sqrt()
            }
        }
    };
    if corpus.abs() > 1e-9 {
        sigma / corpus.abs()
    } else {
        sigma
    }
}

/// NQC: standard deviation of the top-k scores, divided by the magnitude of
/// the corpus-level score when that magnitude exceeds 1e-9 (BM25's corpus
/// score is 0, so BM25 lists get the raw deviation). An empty ranked list
/// scores 0.
pub fn nqc(
    query: &Query,
    ranked: &RankedList,
    model: &RetrievalModel,
    stats: CorpusStats,
    params: &QppParams,
) -> f64 {
    if ranked.is_empty() {
        log::warn!("nqc({}): empty ranked list scored as 0", query.qid);
        return 0.0;
    }
    let scores: Vec<f64> = ranked.scores().collect();
    nqc_from_scores(
        &scores,
        corpus_score(model, query, stats),
        params.top_k,
        params.nqc_std_dev,
    )
}

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in seed.to_le_bytes().iter().chain(bytes) {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Re-scores the sampled documents by the cross entropy of the relevance
/// model with each document's Dirichlet-smoothed language model:
/// sum over w of P(w|RLM) * ln P(w|D).
pub fn rlm_rescore(
    query: &Query,
    sample: &RankedList,
    index: &Index,
    params: &QppParams,
) -> Result<Vec<f64>> {
    let docs = resolve_docs(sample, index, sample.len())?;
    let stats = index.stats();
    let rlm = estimate_rlm(query, &docs, stats, params.mu, params.fb_terms)?;
    Ok(docs
        .iter()
        .map(|doc| {
            rlm.iter()
                .map(|(term, w)| w * smoothed_prob(doc, term, stats, params.mu).ln())
                .sum()
        })
        .collect())
}

/// UEF with the default relevance-model re-scorer.
pub fn uef(
    query: &Query,
    ranked: &RankedList,
    base: BasePredictor,
    index: &Index,
    model: &RetrievalModel,
    params: &QppParams,
) -> Result<f64> {
    uef_with_rescorer(query, ranked, base, index, model, params, rlm_rescore)
}

/// Single-base UEF with an injectable re-scorer, so the scaling behaviour
/// can be verified against analytically known re-score maps.
pub fn uef_with_rescorer<F>(
    query: &Query,
    ranked: &RankedList,
    base: BasePredictor,
    index: &Index,
    model: &RetrievalModel,
    params: &QppParams,
    rescorer: F,
) -> Result<f64>
where
    F: Fn(&Query, &RankedList, &Index, &QppParams) -> Result<Vec<f64>>,
{
    uef_multi_with_rescorer(query, ranked, &[base], index, model, params, rescorer)
        .map(|values| values[0])
}

/// UEF over several base predictors at once. The samples, the re-scores and
/// the stability coefficient depend only on (seed, qid, ranked list), so
/// evaluating the bases together is exact, not an approximation, and saves
/// repeating the sampling and relevance-model work per base.
pub fn uef_multi(
    query: &Query,
    ranked: &RankedList,
    bases: &[BasePredictor],
    index: &Index,
    model: &RetrievalModel,
    params: &QppParams,
) -> Result<Vec<f64>> {
    uef_multi_with_rescorer(query, ranked, bases, index, model, params, rlm_rescore)
}

/// UEF: for each seeded sample of k documents drawn without replacement
/// from the top-K entries (original score order preserved), correlates the
/// original scores with re-scores (Pearson; 0 when degenerate), scales each
/// base predictor computed on the sample by that coefficient, and averages
/// over samples.
pub fn uef_multi_with_rescorer<F>(
    query: &Query,
    ranked: &RankedList,
    bases: &[BasePredictor],
    index: &Index,
    model: &RetrievalModel,
    params: &QppParams,
    rescorer: F,
) -> Result<Vec<f64>>
where
    F: Fn(&Query, &RankedList, &Index, &QppParams) -> Result<Vec<f64>>,
{
    if ranked.is_empty() {
        log::warn!("uef({}): empty ranked list scored as 0", query.qid);
        return Ok(vec![0.0; bases.len()]);
    }
    let pool = ranked.prefix(params.pool_k);
    let sample_size = params.top_k.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(params.seed, query.qid.as_bytes()));
    let stats = index.stats();

    let mut acc = vec![0.0; bases.len()];
    for _ in 0..params.num_samples {
        let mut picks = rand::seq::index::sample(&mut rng, pool.len(), sample_size).into_vec();
        picks.sort_unstable();
        let sample = RankedList::from_scored(
            &query.qid,
            picks
                .iter()
                .map(|&i| (pool.entries[i].doc_id.clone(), pool.entries[i].score)),
        );

        let rescored = rescorer(query, &sample, index, params)?;
        let original: Vec<f64> = sample.scores().collect();
        let xi = if original.len() < 2 {
            0.0
        } else {
            pearson(&original, &rescored).unwrap_or(0.0)
        };

        for (slot, &base) in acc.iter_mut().zip(bases) {
            let base_value = match base {
                BasePredictor::Clarity => clarity(query, &sample, index, params)?,
                BasePredictor::Wig => wig(query, &sample, model, stats, params),
                BasePredictor::Nqc => nqc(query, &sample, model, stats, params),
            };
            *slot += xi * base_value;
        }
    }
    for slot in &mut acc {
        *slot /= params.num_samples as f64;
    }
    Ok(acc)
}

/// Computes one predictor over a query set, aligned to the query order.
/// Post-retrieval predictors require a ranked list per query; AvgIDF
/// ignores the runs entirely.
pub fn predict(
    spec: &PredictorSpec,
    queries: &[Query],
    runs: &std::collections::BTreeMap<String, RankedList>,
    index: &Index,
    model: &RetrievalModel,
) -> Result<PredictionVector> {
    let stats = index.stats();
    let params = &spec.params;
    let mut values = Vec::with_capacity(queries.len());
    for query in queries {
        let value = match spec.kind {
            PredictorKind::AvgIdf => avg_idf(query, stats),
            post => {
                let ranked = runs
                    .get(&query.qid)
                    .ok_or_else(|| Error::MissingRun(query.qid.clone()))?;
                match post {
                    PredictorKind::Clarity => clarity(query, ranked, index, params)?,
                    PredictorKind::Wig => wig(query, ranked, model, stats, params),
                    PredictorKind::Nqc => nqc(query, ranked, model, stats, params),
                    PredictorKind::Uef(base) => uef(query, ranked, base, index, model, params)?,
                    PredictorKind::AvgIdf => unreachable!(),
                }
            }
        };
        debug_assert!(value.is_finite(), "{}({}) = {value}", spec.kind, query.qid);
        values.push(value);
    }
    Ok(PredictionVector {
        qids: queries.iter().map(|q| q.qid.clone()).collect(),
        values,
    })
}

/// Computes a battery of predictors over a query set, sharing the sampling
/// and relevance-model work across UEF variants. Output order matches
/// `kinds`; each vector is identical to what [`predict`] returns for that
/// predictor alone.
pub fn predict_battery(
    kinds: &[PredictorKind],
    params: QppParams,
    queries: &[Query],
    runs: &std::collections::BTreeMap<String, RankedList>,
    index: &Index,
    model: &RetrievalModel,
) -> Result<Vec<(PredictorKind, PredictionVector)>> {
    let uef_bases: Vec<BasePredictor> = kinds
        .iter()
        .filter_map(|k| match k {
            PredictorKind::Uef(base) => Some(*base),
            _ => None,
        })
        .collect();

    let mut uef_values: std::collections::BTreeMap<BasePredictor, Vec<f64>> = uef_bases
        .iter()
        .map(|&b| (b, Vec::with_capacity(queries.len())))
        .collect();
    if !uef_bases.is_empty() {
        for query in queries {
            let ranked = runs
                .get(&query.qid)
                .ok_or_else(|| Error::MissingRun(query.qid.clone()))?;
            let values = uef_multi(query, ranked, &uef_bases, index, model, &params)?;
            for (&base, value) in uef_bases.iter().zip(values) {
                uef_values.get_mut(&base).expect("slot exists").push(value);
            }
        }
    }

    let qids: Vec<String> = queries.iter().map(|q| q.qid.clone()).collect();
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let vector = match kind {
            PredictorKind::Uef(base) => PredictionVector {
                qids: qids.clone(),
                values: uef_values[&base].clone(),
            },
            other => predict(
                &PredictorSpec::new(other, params),
                queries,
                runs,
                index,
                model,
            )?,
        };
        out.push((kind, vector));
    }
    Ok(out)
}
