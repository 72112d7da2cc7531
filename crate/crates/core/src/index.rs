//! Corpus ingestion and an immutable in-memory inverted index.
//!
//! The index is built once, single-threaded, and never mutated afterwards,
//! so it can be shared freely across threads. Target scale is a few hundred
//! thousand short documents; postings are kept uncompressed.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::analyze;
use crate::{Error, Result};

/// An analyzed document: bag of terms plus its token count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub term_counts: BTreeMap<String, u32>,
    /// Token count after analysis; equals the sum of `term_counts` values.
    pub length: u32,
}

impl Document {
    pub fn tf(&self, term: &str) -> u32 {
        self.term_counts.get(term).copied().unwrap_or(0)
    }
}

/// One posting: document position within the index plus term frequency.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermPostings {
    /// Collection frequency: sum of tf over all postings.
    pub coll_freq: u64,
    pub postings: Vec<Posting>,
}

/// An analyzed query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub qid: String,
    /// Analyzed terms in surface order; duplicates carry query term frequency.
    pub terms: Vec<String>,
}

impl Query {
    /// Analyzes raw text into a query. Queries that analyze to an empty term
    /// list are rejected.
    pub fn parse(qid: &str, text: &str) -> Result<Self> {
        let terms = analyze(text);
        if terms.is_empty() {
            return Err(Error::EmptyQuery(qid.to_string()));
        }
        Ok(Self {
            qid: qid.to_string(),
            terms,
        })
    }
}

/// Immutable inverted index over an analyzed corpus.
#[derive(Debug)]
pub struct Index {
    docs: Vec<Document>,
    doc_lookup: HashMap<String, u32>,
    dictionary: BTreeMap<String, TermPostings>,
    total_tokens: u64,
}

/// Collection-level statistics used by all retrieval models and predictors.
///
/// This is a cheap view over the index; copy it freely.
#[derive(Debug, Clone, Copy)]
pub struct CorpusStats<'a> {
    index: &'a Index,
}

impl CorpusStats<'_> {
    /// Number of documents N.
    pub fn num_docs(&self) -> usize {
        self.index.docs.len()
    }

    /// Total token count |C|.
    pub fn total_tokens(&self) -> u64 {
        self.index.total_tokens
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.index.total_tokens as f64 / self.index.docs.len() as f64
    }

    /// Document frequency df(t); 0 for unindexed terms.
    pub fn doc_freq(&self, term: &str) -> u32 {
        self.index
            .dictionary
            .get(term)
            .map_or(0, |tp| tp.postings.len() as u32)
    }

    /// Collection frequency cf(t); 0 for unindexed terms.
    pub fn coll_freq(&self, term: &str) -> u64 {
        self.index.dictionary.get(term).map_or(0, |tp| tp.coll_freq)
    }

    /// Collection language model P(t|C) = cf(t)/|C|.
    pub fn collection_prob(&self, term: &str) -> f64 {
        self.coll_freq(term) as f64 / self.total_tokens() as f64
    }
}

impl Index {
    /// Builds an index from a stream of `(doc_id, raw_text)` pairs, applying
    /// the analysis pipeline to each document.
    ///
    /// Fails on a duplicate doc id (naming it) and on an empty stream.
    pub fn build<I>(corpus: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let analyzed = corpus.into_iter().map(|(doc_id, text)| {
            let mut term_counts: BTreeMap<String, u32> = BTreeMap::new();
            for term in analyze(&text) {
                *term_counts.entry(term).or_insert(0) += 1;
            }
            let length = term_counts.values().sum();
            Document {
                doc_id,
                term_counts,
                length,
            }
        });
        Self::from_documents(analyzed)
    }

    /// Assembles an index from already-analyzed documents.
    pub fn from_documents<I>(documents: I) -> Result<Self>
    where
        I: IntoIterator<Item = Document>,
    {
        let mut docs = Vec::new();
        let mut doc_lookup = HashMap::new();
        let mut dictionary: BTreeMap<String, TermPostings> = BTreeMap::new();
        let mut total_tokens = 0u64;

        for doc in documents {
            let pos = docs.len() as u32;
            if doc_lookup.insert(doc.doc_id.clone(), pos).is_some() {
                return Err(Error::DuplicateDocId(doc.doc_id));
            }
            total_tokens += u64::from(doc.length);
            for (term, &tf) in &doc.term_counts {
                let entry = dictionary.entry(term.clone()).or_insert(TermPostings {
                    coll_freq: 0,
                    postings: Vec::new(),
                });
                entry.coll_freq += u64::from(tf);
                entry.postings.push(Posting { doc: pos, tf });
            }
            docs.push(doc);
        }

        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self {
            docs,
            doc_lookup,
            dictionary,
            total_tokens,
        })
    }

    pub fn stats(&self) -> CorpusStats<'_> {
        CorpusStats { index: self }
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.dictionary.len()
    }

    pub fn doc(&self, doc_id: &str) -> Option<&Document> {
        self.doc_lookup
            .get(doc_id)
            .map(|&pos| &self.docs[pos as usize])
    }

    pub fn doc_at(&self, pos: u32) -> &Document {
        &self.docs[pos as usize]
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.iter()
    }

    pub fn postings(&self, term: &str) -> Option<&TermPostings> {
        self.dictionary.get(term)
    }

    /// Terms with their postings, in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&str, &TermPostings)> {
        self.dictionary.iter().map(|(t, tp)| (t.as_str(), tp))
    }

    /// Writes a portable JSON snapshot (analyzed documents only; postings are
    /// rebuilt on load).
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let snapshot = Snapshot {
            version: SNAPSHOT_VERSION,
            docs: &self.docs,
        };
        serde_json::to_writer(BufWriter::new(file), &snapshot).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_snapshot(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let snapshot: SnapshotOwned =
            serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: 0,
                reason: format!("unsupported snapshot version {}", snapshot.version),
            });
        }
        Self::from_documents(snapshot.docs)
    }
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Snapshot<'a> {
    version: u32,
    docs: &'a [Document],
}

#[derive(Deserialize)]
struct SnapshotOwned {
    version: u32,
    docs: Vec<Document>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(data: &[(&str, &str)]) -> Vec<(String, String)> {
        data.iter()
            .map(|(id, text)| (id.to_string(), text.to_string()))
            .collect()
    }

    #[test]
    fn two_doc_corpus_statistics() {
        let index =
            Index::build(pairs(&[("d1", "the cat sat"), ("d2", "a cat ran fast")])).unwrap();
        let stats = index.stats();
        assert_eq!(stats.num_docs(), 2);
        assert_eq!(stats.doc_freq("cat"), 2);
        assert_eq!(stats.doc_freq("sat"), 1);
        assert_eq!(stats.doc_freq("the"), 0, "stopword must not be indexed");
        assert_eq!(stats.doc_freq("a"), 0);
        assert_eq!(stats.total_tokens(), 5);
        assert!((stats.avg_doc_len() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn all_stopword_document_is_admitted_with_zero_length() {
        let index = Index::build(pairs(&[("d1", "the of and")])).unwrap();
        assert_eq!(index.num_docs(), 1);
        assert_eq!(index.doc("d1").unwrap().length, 0);
    }

    #[test]
    fn duplicate_doc_id_is_rejected_with_the_id() {
        let err = Index::build(pairs(&[("d1", "cat"), ("d1", "dog")])).unwrap_err();
        match err {
            Error::DuplicateDocId(id) => assert_eq!(id, "d1"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(Index::build(Vec::new()), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn posting_lists_are_consistent_with_frequencies() {
        let index = Index::build(pairs(&[
            ("d1", "cat dog cat"),
            ("d2", "dog bird"),
            ("d3", "cat bird bird bird"),
        ]))
        .unwrap();
        let stats = index.stats();
        let mut total = 0u64;
        for (term, tp) in index.terms() {
            assert_eq!(tp.postings.len() as u32, stats.doc_freq(term));
            let tf_sum: u64 = tp.postings.iter().map(|p| u64::from(p.tf)).sum();
            assert_eq!(tf_sum, tp.coll_freq);
            assert!(stats.doc_freq(term) >= 1);
            assert!(u64::from(stats.doc_freq(term)) <= tp.coll_freq);
            total += tp.coll_freq;
        }
        assert_eq!(total, stats.total_tokens());
    }

    #[test]
    fn rebuild_is_deterministic() {
        let data = pairs(&[("d1", "Cats chased dogs"), ("d2", "dogs sleeping soundly")]);
        let a = Index::build(data.clone()).unwrap();
        let b = Index::build(data).unwrap();
        assert_eq!(a.num_docs(), b.num_docs());
        assert_eq!(a.vocab_size(), b.vocab_size());
        for ((ta, pa), (tb, pb)) in a.terms().zip(b.terms()) {
            assert_eq!(ta, tb);
            assert_eq!(pa.coll_freq, pb.coll_freq);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        let index = Index::build(pairs(&[("d1", "cat sat"), ("d2", "cat ran fast")])).unwrap();
        index.write_snapshot(&path).unwrap();
        let loaded = Index::read_snapshot(&path).unwrap();
        assert_eq!(loaded.num_docs(), index.num_docs());
        assert_eq!(loaded.stats().total_tokens(), index.stats().total_tokens());
        assert_eq!(loaded.stats().doc_freq("cat"), 2);
    }

    #[test]
    fn query_parse_rejects_empty_analysis() {
        assert!(matches!(
            Query::parse("q1", "the of and"),
            Err(Error::EmptyQuery(_))
        ));
        let q = Query::parse("q2", "organized crime").unwrap();
        assert_eq!(q.terms, vec!["organ", "crime"]);
    }
}
