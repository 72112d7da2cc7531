//! Text analysis applied identically to documents and queries: lowercase,
//! split on non-alphanumeric characters, remove English stopwords, Porter
//! stemming.
//!
//! The pipeline is fixed and deterministic so that rebuilding an index, or
//! re-running any experiment, reproduces the same term space exactly.

pub mod porter;

/// The classic 33-word English stopword list (sorted).
const STOPWORDS: [&str; 33] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Runs the full analysis pipeline on raw text, yielding index/query terms
/// in surface order. May be empty (e.g. all-stopword input).
pub fn analyze(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .map(porter::stem)
        .collect()
}
