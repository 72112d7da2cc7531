//! File-format adapters: corpora (TSV lines or TREC SGML directories),
//! topics (TSV or TREC topic format, title only), qrels, and TREC run
//! files. Run files are the interchange boundary: anything written here can
//! be read back losslessly and external run files can be evaluated.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::index::Query;
use crate::metrics::Qrels;
use crate::retrieval::{RankedEntry, RankedList};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// One document per line: `doc_id<TAB>text`.
    #[default]
    Tsv,
    /// A directory of TREC SGML files: `<DOC><DOCNO>..</DOCNO><TEXT>..</TEXT></DOC>`.
    TrecSgml,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsv" => Ok(Self::Tsv),
            "trec" | "sgml" => Ok(Self::TrecSgml),
            _ => Err(Error::InvalidConfig(vec![format!(
                "unrecognized corpus format: {s:?} (expected tsv or trec)"
            )])),
        }
    }
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads a corpus in the requested format into `(doc_id, text)` pairs.
pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<(String, String)>> {
    match format {
        CorpusFormat::Tsv => read_corpus_tsv(path),
        CorpusFormat::TrecSgml => read_corpus_trec_dir(path),
    }
}

pub fn read_corpus_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let file = fs::File::open(path)?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (doc_id, text) = line
            .split_once('\t')
            .ok_or_else(|| malformed(path, i + 1, "expected doc_id<TAB>text"))?;
        if doc_id.trim().is_empty() {
            return Err(malformed(path, i + 1, "empty doc id"));
        }
        docs.push((doc_id.trim().to_string(), text.to_string()));
    }
    Ok(docs)
}

/// Reads every file in a directory as TREC SGML, in file-name order.
/// A single SGML file path is also accepted.
pub fn read_corpus_trec_dir(path: &Path) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in fs::read_dir(path)? {
            let p = entry?.path();
            if p.is_file() {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    if files.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut docs = Vec::new();
    for file in &files {
        let content = fs::read_to_string(file)?;
        let before = docs.len();
        parse_trec_sgml(file, &content, &mut docs)?;
        if docs.len() == before {
            return Err(Error::NotTrecSgml(file.clone()));
        }
    }
    Ok(docs)
}

fn extract_between<'a>(haystack: &'a str, open: &str, close: &str) -> Option<(&'a str, usize)> {
    let start = haystack.find(open)? + open.len();
    let end = haystack[start..].find(close)? + start;
    Some((&haystack[start..end], end + close.len()))
}

fn parse_trec_sgml(path: &Path, content: &str, out: &mut Vec<(String, String)>) -> Result<()> {
    let mut rest = content;
    while let Some((record, consumed)) = extract_between(rest, "<DOC>", "</DOC>") {
        let (docno, _) = extract_between(record, "<DOCNO>", "</DOCNO>")
            .ok_or_else(|| malformed(path, 0, "missing <DOCNO> in a <DOC> record"))?;
        let mut text = String::new();
        let mut body = record;
        while let Some((chunk, used)) = extract_between(body, "<TEXT>", "</TEXT>") {
            text.push_str(chunk);
            text.push(' ');
            body = &body[used..];
        }
        out.push((docno.trim().to_string(), text));
        rest = &rest[consumed..];
    }
    Ok(())
}

/// Reads topics, auto-detecting the format: files starting with `<` are
/// parsed as TREC topics (title field only), anything else as
/// `qid<TAB>query text` lines. Topics that analyze to an empty term list
/// are rejected.
pub fn read_topics(path: &Path) -> Result<Vec<Query>> {
    let content = fs::read_to_string(path)?;
    if content.trim_start().starts_with('<') {
        read_topics_trec(path, &content)
    } else {
        read_topics_tsv(path, &content)
    }
}

fn read_topics_tsv(path: &Path, content: &str) -> Result<Vec<Query>> {
    let mut queries = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (qid, text) = line
            .split_once('\t')
            .ok_or_else(|| malformed(path, i + 1, "expected qid<TAB>query text"))?;
        queries.push(Query::parse(qid.trim(), text)?);
    }
    Ok(queries)
}

fn read_topics_trec(path: &Path, content: &str) -> Result<Vec<Query>> {
    let mut queries = Vec::new();
    let mut rest = content;
    while let Some((topic, consumed)) = extract_between(rest, "<top>", "</top>") {
        let num = tag_field(topic, "<num>")
            .ok_or_else(|| malformed(path, 0, "missing <num> in a <top> record"))?;
        let qid = num.trim_start_matches("Number:").trim().to_string();
        let title = tag_field(topic, "<title>")
            .ok_or_else(|| malformed(path, 0, "missing <title> in a <top> record"))?;
        queries.push(Query::parse(&qid, title)?);
        rest = &rest[consumed..];
    }
    if queries.is_empty() {
        return Err(malformed(path, 0, "no <top> records found"));
    }
    Ok(queries)
}

/// Classic TREC topics have unclosed field tags; a field runs until the
/// next `<` or the end of the record.
fn tag_field<'a>(topic: &'a str, tag: &str) -> Option<&'a str> {
    let start = topic.find(tag)? + tag.len();
    let tail = &topic[start..];
    let end = tail.find('<').unwrap_or(tail.len());
    Some(tail[..end].trim())
}

/// Reads qrels in TREC format: `qid 0 doc_id grade`, whitespace-separated.
pub fn read_qrels(path: &Path) -> Result<Qrels> {
    let file = fs::File::open(path)?;
    let mut qrels = Qrels::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(malformed(path, i + 1, "expected: qid 0 doc_id grade"));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| malformed(path, i + 1, format!("bad grade {:?}", fields[3])))?;
        // negative grades occur in some judgment files; clamp to 0
        qrels.insert(fields[0], fields[2], grade.max(0) as u32);
    }
    Ok(qrels)
}

/// Writes ranked lists as a TREC run file: `qid Q0 doc_id rank score tag`,
/// score with 6 decimal places, queries in the given order.
pub fn write_run<W: Write>(
    mut out: W,
    runs: impl IntoIterator<Item = impl std::borrow::Borrow<RankedList>>,
    run_tag: &str,
) -> Result<()> {
    for run in runs {
        let run = run.borrow();
        for e in &run.entries {
            writeln!(
                out,
                "{} Q0 {} {} {:.6} {}",
                run.qid, e.doc_id, e.rank, e.score, run_tag
            )?;
        }
    }
    Ok(())
}

pub fn write_run_file(
    path: &Path,
    runs: &BTreeMap<String, RankedList>,
    run_tag: &str,
) -> Result<()> {
    let file = fs::File::create(path)?;
    write_run(std::io::BufWriter::new(file), runs.values(), run_tag)
}

/// Reads a TREC run file into per-query ranked lists. Entries are ordered
/// by their stated rank, which must be consecutive from 1; scores must be
/// non-increasing.
pub fn read_run(path: &Path) -> Result<BTreeMap<String, RankedList>> {
    let file = fs::File::open(path)?;
    let mut entries: BTreeMap<String, Vec<RankedEntry>> = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 6 {
            return Err(malformed(
                path,
                i + 1,
                "expected: qid Q0 doc_id rank score tag",
            ));
        }
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| malformed(path, i + 1, format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| malformed(path, i + 1, format!("bad score {:?}", fields[4])))?;
        entries
            .entry(fields[0].to_string())
            .or_default()
            .push(RankedEntry {
                doc_id: fields[2].to_string(),
                score,
                rank,
            });
    }

    let mut runs = BTreeMap::new();
    for (qid, mut list) in entries {
        list.sort_by_key(|e| e.rank);
        let ranked = RankedList {
            qid: qid.clone(),
            entries: list,
        };
        ranked
            .check_invariants()
            .map_err(|reason| malformed(path, 0, format!("run for {qid}: {reason}")))?;
        runs.insert(qid, ranked);
    }
    Ok(runs)
}

/// Writes a TSV of per-query values: `qid<TAB>label<TAB>value`, 6 decimals.
pub fn write_label_tsv<W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = (String, String, f64)>,
) -> Result<()> {
    for (qid, label, value) in rows {
        writeln!(out, "{qid}\t{label}\t{value:.6}")?;
    }
    Ok(())
}

/// Reads a 3-column TSV (`qid<TAB>label<TAB>value`) into per-label maps
/// keyed by qid.
pub fn read_label_tsv(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let file = fs::File::open(path)?;
    let mut by_label: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(malformed(path, i + 1, "expected qid<TAB>label<TAB>value"));
        }
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(path, i + 1, format!("bad value {:?}", fields[2])))?;
        by_label
            .entry(fields[1].to_string())
            .or_default()
            .insert(fields[0].to_string(), value);
    }
    Ok(by_label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn corpus_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "c.tsv", "d1\tthe cat sat\nd2\ta cat ran\n");
        let docs = read_corpus(&path, CorpusFormat::Tsv).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].0, "d1");
        assert_eq!(docs[1].1, "a cat ran");
    }

    #[test]
    fn corpus_tsv_reports_bad_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "c.tsv", "d1\tok\nno-tab-here\n");
        match read_corpus(&path, CorpusFormat::Tsv) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn trec_sgml_directory_parses_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "b.sgml",
            "<DOC><DOCNO> FT-2 </DOCNO><TEXT>second doc</TEXT></DOC>",
        );
        write_file(
            dir.path(),
            "a.sgml",
            "<DOC><DOCNO>FT-1</DOCNO>\n<TEXT>first</TEXT><TEXT>more text</TEXT></DOC>\n\
             <DOC><DOCNO>FT-1b</DOCNO><TEXT>third</TEXT></DOC>",
        );
        let docs = read_corpus(dir.path(), CorpusFormat::TrecSgml).unwrap();
        let ids: Vec<&str> = docs.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["FT-1", "FT-1b", "FT-2"]);
        assert!(docs[0].1.contains("first") && docs[0].1.contains("more text"));
    }

    #[test]
    fn trec_flag_on_tsv_input_names_the_offending_file() {
        let dir = tempfile::tempdir().unwrap();
        let tsv = write_file(dir.path(), "c.tsv", "d1\tplain tsv\n");
        match read_corpus(dir.path(), CorpusFormat::TrecSgml) {
            Err(Error::NotTrecSgml(p)) => assert_eq!(p, tsv),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn topics_tsv_and_trec_formats() {
        let dir = tempfile::tempdir().unwrap();
        let tsv = write_file(
            dir.path(),
            "t.tsv",
            "q1\torganized crime\nq2\tcat stories\n",
        );
        let qs = read_topics(&tsv).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].qid, "q1");
        assert_eq!(qs[0].terms, vec!["organ", "crime"]);

        let trec = write_file(
            dir.path(),
            "t.trec",
            "<top>\n<num> Number: 301 \n<title> International Organized Crime \n\
             <desc> Description:\nignored\n</top>\n\
             <top>\n<num> Number: 302\n<title>cat stories</title>\n</top>\n",
        );
        let qs = read_topics(&trec).unwrap();
        assert_eq!(qs[0].qid, "301");
        assert_eq!(qs[0].terms, vec!["intern", "organ", "crime"]);
        assert_eq!(qs[1].qid, "302");
    }

    #[test]
    fn all_stopword_topic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let tsv = write_file(dir.path(), "t.tsv", "q1\tthe of and\n");
        assert!(matches!(read_topics(&tsv), Err(Error::EmptyQuery(_))));
    }

    #[test]
    fn qrels_parse_and_grade_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "qrels.txt",
            "q1 0 d1 1\nq1 0 d2 0\nq1 0 d3 2\nq2 0 d1 -1\n",
        );
        let qrels = read_qrels(&path).unwrap();
        assert_eq!(qrels.grade("q1", "d3"), 2);
        assert_eq!(qrels.grade("q1", "d2"), 0);
        assert_eq!(qrels.grade("q2", "d1"), 0, "negative grades clamp to 0");
        assert_eq!(qrels.relevant_count("q1"), 2);
    }

    #[test]
    fn run_file_round_trips_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let mut runs = BTreeMap::new();
        runs.insert(
            "q1".to_string(),
            RankedList::from_scored(
                "q1",
                [("dA".to_string(), -5.819093), ("dB".to_string(), -6.25)],
            ),
        );
        runs.insert(
            "q2".to_string(),
            RankedList::from_scored("q2", [("dC".to_string(), 1.5)]),
        );
        let path = dir.path().join("run.txt");
        write_run_file(&path, &runs, "tag1").unwrap();

        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("q1 Q0 dA 1 -5.819093 tag1\n"));

        let parsed = read_run(&path).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed["q1"], runs["q1"]);
        assert_eq!(parsed["q2"], runs["q2"]);

        // re-emit and compare bytes
        let path2 = dir.path().join("run2.txt");
        write_run_file(&path2, &parsed, "tag1").unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn run_file_with_gapped_ranks_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "run.txt",
            "q1 Q0 d1 1 2.0 t\nq1 Q0 d2 3 1.0 t\n",
        );
        assert!(read_run(&path).is_err());
    }

    #[test]
    fn label_tsv_reader_groups_by_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "pred.tsv",
            "q1\tnqc\t0.5\nq2\tnqc\t0.25\nq1\twig\t1.5\n",
        );
        let by_label = read_label_tsv(&path).unwrap();
        assert_eq!(by_label.len(), 2);
        assert_eq!(by_label["nqc"]["q2"], 0.25);
    }
}
