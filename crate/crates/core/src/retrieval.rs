//! Retrieval models (query-document scoring functions) and top-k search.
//!
//! Three models are supported: query likelihood with Jelinek-Mercer
//! smoothing, query likelihood with Dirichlet smoothing, and Okapi BM25
//! with the non-negative idf variant. Ties in search are broken by
//! ascending doc id so run files are bit-exact across runs.

use std::fmt;
use std::str::FromStr;

use crate::index::{CorpusStats, Document, Index, Query};
use crate::{Error, Result};

/// A retrieval scoring function with its smoothing parameters.
///
/// `lambda` weights the document model in Jelinek-Mercer smoothing (so
/// `lambda = 0.6` leans toward the document model).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetrievalModel {
    JelinekMercer { lambda: f64 },
    Dirichlet { mu: f64 },
    Bm25 { k1: f64, b: f64 },
}

impl RetrievalModel {
    pub fn jelinek_mercer(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidConfig(vec![format!(
                "lmjm lambda must be in (0,1), got {lambda}"
            )]));
        }
        Ok(Self::JelinekMercer { lambda })
    }

    pub fn dirichlet(mu: f64) -> Result<Self> {
        if mu.is_nan() || mu <= 0.0 {
            return Err(Error::InvalidConfig(vec![format!(
                "lmdir mu must be > 0, got {mu}"
            )]));
        }
        Ok(Self::Dirichlet { mu })
    }

    pub fn bm25(k1: f64, b: f64) -> Result<Self> {
        if k1.is_nan() || k1 < 0.0 || !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidConfig(vec![format!(
                "bm25 requires k1 >= 0 and b in [0,1], got k1={k1}, b={b}"
            )]));
        }
        Ok(Self::Bm25 { k1, b })
    }

    /// Canonical id, also the accepted `KIND:PARAMS` parse format,
    /// e.g. `lmjm:0.6`, `lmdir:1000`, `bm25:0.7,0.3`.
    pub fn id(&self) -> String {
        match self {
            Self::JelinekMercer { lambda } => format!("lmjm:{lambda}"),
            Self::Dirichlet { mu } => format!("lmdir:{mu}"),
            Self::Bm25 { k1, b } => format!("bm25:{k1},{b}"),
        }
    }

    /// Short display form used in report tables, e.g. `LMJM(0.6)`.
    pub fn label(&self) -> String {
        match self {
            Self::JelinekMercer { lambda } => format!("LMJM({lambda})"),
            Self::Dirichlet { mu } => format!("LMDir({mu})"),
            Self::Bm25 { k1, b } => format!("BM25({k1},{b})"),
        }
    }
}

impl fmt::Display for RetrievalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for RetrievalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidConfig(vec![format!("unrecognized model spec: {s:?}")]);
        let (kind, params) = s.split_once(':').ok_or_else(invalid)?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| invalid());
        match kind.trim().to_ascii_lowercase().as_str() {
            "lmjm" => Self::jelinek_mercer(parse(params)?),
            "lmdir" => Self::dirichlet(parse(params)?),
            "bm25" => {
                let (k1, b) = params.split_once(',').ok_or_else(invalid)?;
                Self::bm25(parse(k1)?, parse(b)?)
            }
            _ => Err(invalid()),
        }
    }
}

/// One search result entry. `rank` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
    pub rank: u32,
}

/// Ranked retrieval output for one query: scores non-increasing, ranks
/// consecutive from 1, doc ids distinct.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub qid: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Builds a list from `(doc_id, score)` pairs already sorted by
    /// descending score, assigning consecutive ranks.
    pub fn from_scored(qid: &str, scored: impl IntoIterator<Item = (String, f64)>) -> Self {
        let entries = scored
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RankedEntry {
                doc_id,
                score,
                rank: i as u32 + 1,
            })
            .collect();
        Self {
            qid: qid.to_string(),
            entries,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// A copy truncated to the first `k` entries.
    pub fn prefix(&self, k: usize) -> Self {
        Self {
            qid: self.qid.clone(),
            entries: self.entries.iter().take(k).cloned().collect(),
        }
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.score)
    }

    /// Checks the structural invariants; used by tests and run-file parsing.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i as u32 + 1 {
                return Err(format!("rank {} at position {i}", e.rank));
            }
            if !seen.insert(e.doc_id.as_str()) {
                return Err(format!("duplicate doc id {}", e.doc_id));
            }
            if i > 0 && e.score > self.entries[i - 1].score {
                return Err(format!("score increases at rank {}", e.rank));
            }
        }
        Ok(())
    }
}

/// Scores one document for a query under the given model.
///
/// Query term multiplicity is respected: each occurrence of a term adds its
/// per-term contribution. Terms with `cf = 0` (not in the corpus) are
/// skipped by every model. A zero-length document under the LM models falls
/// back to the collection-probability term only.
pub fn score(model: &RetrievalModel, query: &Query, doc: &Document, stats: CorpusStats) -> f64 {
    let mut total = 0.0;
    for term in &query.terms {
        let cf = stats.coll_freq(term);
        if cf == 0 {
            continue;
        }
        let tf = f64::from(doc.tf(term));
        let doc_len = f64::from(doc.length);
        let p_coll = stats.collection_prob(term);
        total += match *model {
            RetrievalModel::JelinekMercer { lambda } => {
                let p_doc = if doc.length == 0 { 0.0 } else { tf / doc_len };
                (lambda * p_doc + (1.0 - lambda) * p_coll).ln()
            }
            RetrievalModel::Dirichlet { mu } => ((tf + mu * p_coll) / (doc_len + mu)).ln(),
            RetrievalModel::Bm25 { k1, b } => {
                if tf == 0.0 {
                    0.0
                } else {
                    let df = f64::from(stats.doc_freq(term));
                    let n = stats.num_docs() as f64;
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    let norm = k1 * (1.0 - b + b * doc_len / stats.avg_doc_len());
                    idf * tf * (k1 + 1.0) / (tf + norm)
                }
            }
        };
    }
    total
}

/// The collection-level score used as the gain baseline by WIG and as the
/// NQC normalizer: the LM score of the collection treated as one document,
/// i.e. sum of qtf * ln(cf/|C|). BM25 has no query likelihood of the
/// collection, so its corpus score is defined as 0.
pub fn corpus_score(model: &RetrievalModel, query: &Query, stats: CorpusStats) -> f64 {
    match model {
        RetrievalModel::Bm25 { .. } => 0.0,
        RetrievalModel::JelinekMercer { .. } | RetrievalModel::Dirichlet { .. } => query
            .terms
            .iter()
            .filter(|t| stats.coll_freq(t) > 0)
            .map(|t| stats.collection_prob(t).ln())
            .sum(),
    }
}

/// Retrieves the top `kappa` documents among those containing at least one
/// query term. Ties are broken by ascending doc id. A query with no indexed
/// terms yields an empty list.
pub fn search(index: &Index, model: &RetrievalModel, query: &Query, kappa: usize) -> RankedList {
    let mut candidates: Vec<u32> = Vec::new();
    for term in &query.terms {
        if let Some(tp) = index.postings(term) {
            candidates.extend(tp.postings.iter().map(|p| p.doc));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        log::warn!("query {} matches no indexed documents", query.qid);
        return RankedList {
            qid: query.qid.clone(),
            entries: Vec::new(),
        };
    }

    let stats = index.stats();
    let mut scored: Vec<(u32, f64)> = candidates
        .into_iter()
        .map(|pos| (pos, score(model, query, index.doc_at(pos), stats)))
        .collect();
    scored.sort_unstable_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.doc_at(a.0).doc_id.cmp(&index.doc_at(b.0).doc_id))
    });
    scored.truncate(kappa);

    RankedList::from_scored(
        &query.qid,
        scored
            .into_iter()
            .map(|(pos, s)| (index.doc_at(pos).doc_id.clone(), s)),
    )
}
