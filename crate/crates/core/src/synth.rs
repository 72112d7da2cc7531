//! Deterministic synthetic test collection generator.
//!
//! Documents are drawn from a Zipf-distributed background vocabulary mixed
//! with per-topic vocabularies at a rate that depends on the document's
//! relevance role, so retrieval is informative but imperfect: strongly
//! relevant documents are term-dense, weakly relevant ones sometimes miss
//! the query terms entirely, and some on-topic documents are judged
//! non-relevant. Every artifact (corpus, topics, graded qrels) is a pure
//! function of the seed.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{is_stopword, porter};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub num_docs: usize,
    pub num_queries: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_docs: 1000,
            num_queries: 50,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    /// `(doc_id, text)` pairs.
    pub corpus: Vec<(String, String)>,
    /// `(qid, query text)` pairs.
    pub topics: Vec<(String, String)>,
    /// `(qid, doc_id, grade)` triples.
    pub qrels: Vec<(String, String, u32)>,
}

const BACKGROUND_VOCAB: usize = 800;
const TOPIC_VOCAB: usize = 12;

/// Zipf-like sampler over ranks 0..n with exponent 1.
struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize) -> Self {
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for rank in 0..n {
            acc += 1.0 / (rank as f64 + 1.0);
            cumulative.push(acc);
        }
        Self { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.gen_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Pronounceable unique pseudo-words; uniqueness is enforced on the stemmed
/// form so distinct vocabulary entries stay distinct in the index.
fn make_vocab(rng: &mut ChaCha8Rng, count: usize, taken: &mut HashSet<String>) -> Vec<String> {
    const ONSETS: [&str; 20] = [
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gl",
        "pr", "st", "tr",
    ];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    const CODAS: [&str; 8] = ["", "n", "r", "s", "t", "l", "m", "k"];

    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let syllables = rng.gen_range(2..=3);
        let mut word = String::new();
        for _ in 0..syllables {
            word.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
            word.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
        }
        word.push_str(CODAS[rng.gen_range(0..CODAS.len())]);
        if is_stopword(&word) || !taken.insert(porter::stem(&word)) {
            continue;
        }
        words.push(word);
    }
    words
}

/// Relevance role of a document for its home topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Strong,
    Weak,
    JudgedZero,
    Unjudged,
}

impl Role {
    fn for_slot(slot: usize, per_topic: usize) -> Role {
        // 40% strong, 25% weak, 15% judged non-relevant, 20% unjudged
        let frac = slot as f64 / per_topic.max(1) as f64;
        if frac < 0.40 {
            Role::Strong
        } else if frac < 0.65 {
            Role::Weak
        } else if frac < 0.80 {
            Role::JudgedZero
        } else {
            Role::Unjudged
        }
    }

    fn topic_rate(self) -> f64 {
        match self {
            Role::Strong => 0.50,
            Role::Weak => 0.22,
            Role::JudgedZero => 0.10,
            Role::Unjudged => 0.05,
        }
    }

    fn grade(self) -> Option<u32> {
        match self {
            Role::Strong => Some(2),
            Role::Weak => Some(1),
            Role::JudgedZero => Some(0),
            Role::Unjudged => None,
        }
    }
}

pub fn generate(spec: &SynthSpec) -> SynthData {
    assert!(spec.num_queries >= 1, "need at least one query");
    assert!(
        spec.num_docs >= spec.num_queries,
        "need at least one document per topic"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut taken = HashSet::new();
    let background = make_vocab(&mut rng, BACKGROUND_VOCAB, &mut taken);
    let topic_pools: Vec<Vec<String>> = (0..spec.num_queries)
        .map(|_| make_vocab(&mut rng, TOPIC_VOCAB, &mut taken))
        .collect();

    let background_zipf = Zipf::new(BACKGROUND_VOCAB);
    let topic_zipf = Zipf::new(TOPIC_VOCAB);
    let per_topic = spec.num_docs / spec.num_queries;

    let id_width = spec.num_docs.to_string().len();
    let mut corpus = Vec::with_capacity(spec.num_docs);
    let mut roles = Vec::with_capacity(spec.num_docs);
    for i in 0..spec.num_docs {
        let topic = i % spec.num_queries;
        let role = Role::for_slot(i / spec.num_queries, per_topic);
        roles.push((topic, role));

        let length = rng.gen_range(40..=120);
        let mut words = Vec::with_capacity(length);
        for _ in 0..length {
            if rng.gen_bool(role.topic_rate()) {
                words.push(topic_pools[topic][topic_zipf.sample(&mut rng)].as_str());
            } else {
                words.push(background[background_zipf.sample(&mut rng)].as_str());
            }
        }
        let doc_id = format!("d{:0width$}", i + 1, width = id_width);
        corpus.push((doc_id, words.join(" ")));
    }

    let qid_width = spec.num_queries.to_string().len();
    let mut topics = Vec::with_capacity(spec.num_queries);
    let mut qrels = Vec::new();
    #[allow(clippy::needless_range_loop)] // t is a topic id, not just an index
    for t in 0..spec.num_queries {
        let qid = format!("q{:0width$}", t + 1, width = qid_width);

        // 2-4 distinct topic words, Zipf-weighted so mid-pool words (which
        // weakly relevant docs often miss) show up, plus one mid-frequency
        // background word that pulls in a broad candidate set; together
        // these keep recall below 1 and spread it across queries
        let n_terms = rng.gen_range(2..=4usize.min(TOPIC_VOCAB));
        let mut picks: Vec<usize> = Vec::new();
        while picks.len() < n_terms {
            let idx = topic_zipf.sample(&mut rng);
            if !picks.contains(&idx) {
                picks.push(idx);
            }
        }
        let mut words: Vec<&str> = picks.iter().map(|&i| topic_pools[t][i].as_str()).collect();
        words.push(background[rng.gen_range(10..300)].as_str());
        topics.push((qid.clone(), words.join(" ")));

        let mut judged: HashSet<usize> = HashSet::new();
        for (i, (topic, role)) in roles.iter().enumerate() {
            if *topic == t {
                if let Some(grade) = role.grade() {
                    qrels.push((qid.clone(), corpus[i].0.clone(), grade));
                    judged.insert(i);
                }
            }
        }
        // a handful of judged non-relevant documents from other topics;
        // each (query, doc) pair is judged at most once
        for _ in 0..10 {
            let i = rng.gen_range(0..spec.num_docs);
            if roles[i].0 != t && judged.insert(i) {
                qrels.push((qid.clone(), corpus[i].0.clone(), 0));
            }
        }
    }

    SynthData {
        corpus,
        topics,
        qrels,
    }
}

/// File names written by [`write_files`].
pub const CORPUS_FILE: &str = "corpus.tsv";
pub const TOPICS_FILE: &str = "topics.tsv";
pub const QRELS_FILE: &str = "qrels.txt";

/// Writes the collection as `corpus.tsv`, `topics.tsv` and `qrels.txt`.
pub fn write_files(data: &SynthData, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let corpus_path = dir.join(CORPUS_FILE);
    let topics_path = dir.join(TOPICS_FILE);
    let qrels_path = dir.join(QRELS_FILE);

    let mut f = fs::File::create(&corpus_path)?;
    for (doc_id, text) in &data.corpus {
        writeln!(f, "{doc_id}\t{text}")?;
    }
    let mut f = fs::File::create(&topics_path)?;
    for (qid, text) in &data.topics {
        writeln!(f, "{qid}\t{text}")?;
    }
    let mut f = fs::File::create(&qrels_path)?;
    for (qid, doc_id, grade) in &data.qrels {
        writeln!(f, "{qid} 0 {doc_id} {grade}")?;
    }
    Ok(vec![corpus_path, topics_path, qrels_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec {
            num_docs: 60,
            num_queries: 6,
            seed: 42,
        };
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.topics, b.topics);
        assert_eq!(a.qrels, b.qrels);

        let other = generate(&SynthSpec { seed: 7, ..spec });
        assert_ne!(a.corpus, other.corpus);
    }

    #[test]
    fn default_spec_shape() {
        let data = generate(&SynthSpec {
            num_docs: 200,
            num_queries: 10,
            seed: 42,
        });
        assert_eq!(data.corpus.len(), 200);
        assert_eq!(data.topics.len(), 10);

        // every query has relevant docs
        let mut relevant: BTreeMap<&str, usize> = BTreeMap::new();
        for (qid, _, grade) in &data.qrels {
            if *grade > 0 {
                *relevant.entry(qid.as_str()).or_default() += 1;
            }
        }
        assert_eq!(relevant.len(), 10);
        assert!(relevant.values().all(|&n| n >= 5));
    }

    #[test]
    fn qrels_pairs_are_judged_at_most_once() {
        let data = generate(&SynthSpec {
            num_docs: 400,
            num_queries: 20,
            seed: 42,
        });
        let mut seen = std::collections::HashSet::new();
        for (qid, doc, _) in &data.qrels {
            assert!(
                seen.insert((qid.clone(), doc.clone())),
                "{qid} {doc} judged twice"
            );
        }
    }

    #[test]
    fn doc_ids_are_unique_and_texts_are_tab_free() {
        let data = generate(&SynthSpec {
            num_docs: 120,
            num_queries: 8,
            seed: 1,
        });
        let ids: std::collections::HashSet<&str> =
            data.corpus.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids.len(), data.corpus.len());
        assert!(data.corpus.iter().all(|(_, text)| !text.contains('\t')));
    }
}
