//! IR evaluation metrics computed from a ranked list and relevance
//! assessments: AP@k, nDCG@k, P@k and Recall@k.
//!
//! Conventions follow trec_eval: the AP denominator is the total number of
//! judged-relevant documents (not min(R, k)), nDCG uses raw grades with a
//! log2(rank+1) discount, and unjudged retrieved documents count as
//! non-relevant. nDCG gains are graded by default; binary gains are a
//! configuration option.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::retrieval::RankedList;
use crate::{Error, Result};

/// Relevance assessments: qid -> doc id -> grade (0 = judged non-relevant).
#[derive(Debug, Clone, Default)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a judgment; the last grade wins if a pair is repeated.
    pub fn insert(&mut self, qid: &str, doc_id: &str, grade: u32) {
        self.judgments
            .entry(qid.to_string())
            .or_default()
            .insert(doc_id.to_string(), grade);
    }

    pub fn contains_qid(&self, qid: &str) -> bool {
        self.judgments.contains_key(qid)
    }

    pub fn grade(&self, qid: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(qid)
            .and_then(|docs| docs.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    /// Number of judged-relevant documents (grade > 0) for a query.
    pub fn relevant_count(&self, qid: &str) -> usize {
        self.judgments
            .get(qid)
            .map_or(0, |docs| docs.values().filter(|&&g| g > 0).count())
    }

    /// Positive grades for a query, sorted descending (for ideal DCG).
    fn positive_grades_desc(&self, qid: &str) -> Vec<u32> {
        let mut grades: Vec<u32> = self.judgments.get(qid).map_or_else(Vec::new, |docs| {
            docs.values().copied().filter(|&g| g > 0).collect()
        });
        grades.sort_unstable_by(|a, b| b.cmp(a));
        grades
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    Ap,
    Ndcg,
    Precision,
    Recall,
}

/// An evaluation metric with its rank cutoff, e.g. `AP@100`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub cutoff: usize,
}

impl MetricSpec {
    pub fn new(kind: MetricKind, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidConfig(vec![
                "metric cutoff must be >= 1".to_string()
            ]));
        }
        Ok(Self { kind, cutoff })
    }

    /// Canonical id, also the accepted parse format: `ap@100`, `ndcg@10`,
    /// `r@100`, `p@10`.
    pub fn id(&self) -> String {
        let kind = match self.kind {
            MetricKind::Ap => "ap",
            MetricKind::Ndcg => "ndcg",
            MetricKind::Precision => "p",
            MetricKind::Recall => "r",
        };
        format!("{kind}@{}", self.cutoff)
    }

    /// Display form used in report tables, e.g. `AP@100`, `nDCG@10`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            MetricKind::Ap => "AP",
            MetricKind::Ndcg => "nDCG",
            MetricKind::Precision => "P",
            MetricKind::Recall => "R",
        };
        format!("{kind}@{}", self.cutoff)
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidConfig(vec![format!("unrecognized metric spec: {s:?}")]);
        let (kind, cutoff) = s.split_once('@').ok_or_else(invalid)?;
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "ap" | "map" => MetricKind::Ap,
            "ndcg" => MetricKind::Ndcg,
            "p" | "precision" => MetricKind::Precision,
            "r" | "recall" => MetricKind::Recall,
            _ => return Err(invalid()),
        };
        let cutoff: usize = cutoff.trim().parse().map_err(|_| invalid())?;
        MetricSpec::new(kind, cutoff)
    }
}

/// Gain function used by nDCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NdcgGains {
    /// Raw relevance grades (trec_eval convention).
    #[default]
    Graded,
    /// Any grade > 0 counts as gain 1.
    Binary,
}

/// Per-query ground-truth vector g aligned with a query order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthVector {
    pub qids: Vec<String>,
    pub values: Vec<f64>,
}

/// Evaluates one metric on one ranked list.
///
/// The qid must be judged with at least one relevant document; an unknown
/// qid signals a query-set/qrels mismatch. An empty ranked list scores 0.
pub fn evaluate(
    spec: MetricSpec,
    ranked: &RankedList,
    qrels: &Qrels,
    gains: NdcgGains,
) -> Result<f64> {
    if !qrels.contains_qid(&ranked.qid) {
        return Err(Error::UnknownQuery(ranked.qid.clone()));
    }
    let relevant_total = qrels.relevant_count(&ranked.qid);
    if relevant_total == 0 {
        return Err(Error::NoRelevantDocs(ranked.qid.clone()));
    }
    if ranked.is_empty() {
        return Ok(0.0);
    }

    let k = spec.cutoff;
    let top = &ranked.entries[..ranked.len().min(k)];
    let value = match spec.kind {
        MetricKind::Ap => {
            let mut hits = 0u32;
            let mut sum = 0.0;
            for (i, entry) in top.iter().enumerate() {
                if qrels.grade(&ranked.qid, &entry.doc_id) > 0 {
                    hits += 1;
                    sum += f64::from(hits) / (i as f64 + 1.0);
                }
            }
            sum / relevant_total as f64
        }
        MetricKind::Precision => {
            let hits = top
                .iter()
                .filter(|e| qrels.grade(&ranked.qid, &e.doc_id) > 0)
                .count();
            hits as f64 / k as f64
        }
        MetricKind::Recall => {
            let hits = top
                .iter()
                .filter(|e| qrels.grade(&ranked.qid, &e.doc_id) > 0)
                .count();
            hits as f64 / relevant_total as f64
        }
        MetricKind::Ndcg => {
            let gain = |grade: u32| -> f64 {
                match gains {
                    NdcgGains::Graded => f64::from(grade),
                    NdcgGains::Binary => f64::from(u32::from(grade > 0)),
                }
            };
            let dcg: f64 = top
                .iter()
                .enumerate()
                .map(|(i, e)| gain(qrels.grade(&ranked.qid, &e.doc_id)) / (i as f64 + 2.0).log2())
                .sum();
            let ideal: f64 = qrels
                .positive_grades_desc(&ranked.qid)
                .into_iter()
                .take(k)
                .enumerate()
                .map(|(i, g)| gain(g) / (i as f64 + 2.0).log2())
                .sum();
            if ideal == 0.0 {
                0.0
            } else {
                dcg / ideal
            }
        }
    };
    debug_assert!((0.0..=1.0 + 1e-12).contains(&value), "{spec}: {value}");
    Ok(value.min(1.0))
}

/// Evaluates one metric across a query set, aligned to `query_order`.
pub fn ground_truth(
    spec: MetricSpec,
    runs: &BTreeMap<String, RankedList>,
    qrels: &Qrels,
    query_order: &[String],
    gains: NdcgGains,
) -> Result<GroundTruthVector> {
    let mut values = Vec::with_capacity(query_order.len());
    for qid in query_order {
        let ranked = runs
            .get(qid)
            .ok_or_else(|| Error::MissingRun(qid.clone()))?;
        values.push(evaluate(spec, ranked, qrels, gains)?);
    }
    Ok(GroundTruthVector {
        qids: query_order.to_vec(),
        values,
    })
}
