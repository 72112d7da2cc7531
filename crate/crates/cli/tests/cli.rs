//! Black-box tests of the `qpp-workbench` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpp-workbench"))
}

fn synthetic_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn index_reports_bundled_corpus_stats() {
    let out = bin()
        .args(["index", "--corpus"])
        .arg(synthetic_dir().join("corpus.tsv"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("N=1000"), "{}", stdout(&out));
}

#[test]
fn index_rejects_empty_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.tsv");
    fs::write(&empty, "").unwrap();
    let out = bin()
        .args(["index", "--corpus"])
        .arg(&empty)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("empty corpus"), "{}", stderr(&out));
}

#[test]
fn trec_format_flag_on_tsv_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let tsv = tmp.path().join("plain.tsv");
    fs::write(&tsv, "d1\tsome text\n").unwrap();
    let out = bin()
        .args(["index", "--format", "trec", "--corpus"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("plain.tsv"), "{}", stderr(&out));
}

fn tiny_collection(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let corpus = dir.join("corpus.tsv");
    fs::write(
        &corpus,
        "d1\tsolar panels energy grid\nd2\tsolar flares astronomy\nd3\tpower grid maintenance\n",
    )
    .unwrap();
    let topics = dir.join("topics.tsv");
    fs::write(&topics, "t1\tsolar energy\nt2\tpower grid\n").unwrap();
    // t1's only relevant doc ranks second, t2's ranking is perfect, so the
    // two queries get different metric values
    let qrels = dir.join("qrels.txt");
    fs::write(&qrels, "t1 0 d2 1\nt1 0 d1 0\nt2 0 d3 2\nt2 0 d1 1\n").unwrap();
    (corpus, topics, qrels)
}

#[test]
fn search_is_reproducible_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, topics, _) = tiny_collection(tmp.path());
    let run_a = tmp.path().join("a.run");
    let run_b = tmp.path().join("b.run");
    for out_path in [&run_a, &run_b] {
        let out = bin()
            .args([
                "search",
                "--model",
                "lmdir:100",
                "--k",
                "10",
                "--run-tag",
                "t",
            ])
            .arg("--corpus")
            .arg(&corpus)
            .arg("--topics")
            .arg(&topics)
            .arg("--out")
            .arg(out_path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let bytes_a = fs::read(&run_a).unwrap();
    assert_eq!(bytes_a, fs::read(&run_b).unwrap(), "runs differ");

    // lossless round trip through the run-file reader
    let parsed = qpp_core::trec::read_run(&run_a).unwrap();
    let rewritten = tmp.path().join("c.run");
    qpp_core::trec::write_run_file(&rewritten, &parsed, "t").unwrap();
    assert_eq!(bytes_a, fs::read(&rewritten).unwrap());
}

#[test]
fn eval_names_missing_qid() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("r.run");
    fs::write(&run, "tX Q0 d1 1 1.500000 tag\n").unwrap();
    let qrels = tmp.path().join("q.txt");
    fs::write(&qrels, "t1 0 d1 1\n").unwrap();
    let out = bin()
        .args(["eval", "--metric", "ap@10"])
        .arg("--run")
        .arg(&run)
        .arg("--qrels")
        .arg(&qrels)
        .arg("--out")
        .arg(tmp.path().join("eval.tsv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("tX"), "{}", stderr(&out));
}

#[test]
fn eval_then_correlate_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, topics, qrels) = tiny_collection(tmp.path());
    let run = tmp.path().join("r.run");
    let ok = bin()
        .args([
            "search",
            "--model",
            "bm25:0.7,0.3",
            "--k",
            "10",
            "--run-tag",
            "t",
        ])
        .arg("--corpus")
        .arg(&corpus)
        .arg("--topics")
        .arg(&topics)
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", stderr(&ok));

    let eval_tsv = tmp.path().join("eval.tsv");
    let ok = bin()
        .args(["eval", "--metric", "ap@10"])
        .arg("--run")
        .arg(&run)
        .arg("--qrels")
        .arg(&qrels)
        .arg("--out")
        .arg(&eval_tsv)
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", stderr(&ok));

    let corr_tsv = tmp.path().join("corr.tsv");
    let ok = bin()
        .arg("correlate")
        .arg("--predictions")
        .arg(&eval_tsv)
        .arg("--ground-truth")
        .arg(&eval_tsv)
        .arg("--out")
        .arg(&corr_tsv)
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", stderr(&ok));
    let content = fs::read_to_string(&corr_tsv).unwrap();
    let lines: Vec<&str> = content.lines().collect();
    assert_eq!(lines.len(), 3, "{content}");
    for line in lines {
        assert!(line.ends_with("1.0000"), "{line}");
    }
}

#[test]
fn qpp_accepts_an_external_run_file() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, topics, _) = tiny_collection(tmp.path());
    let run = tmp.path().join("external.run");
    // scores from "any engine": plausible LM log-likelihoods
    fs::write(
        &run,
        "t1 Q0 d1 1 -2.100000 x\nt1 Q0 d2 2 -3.400000 x\nt2 Q0 d3 1 -1.900000 x\nt2 Q0 d1 2 -4.000000 x\n",
    )
    .unwrap();
    let pred_tsv = tmp.path().join("pred.tsv");
    let out = bin()
        .args([
            "qpp",
            "--predictor",
            "nqc",
            "--predictor",
            "wig",
            "--model",
            "lmdir:100",
        ])
        .arg("--corpus")
        .arg(&corpus)
        .arg("--topics")
        .arg(&topics)
        .arg("--run")
        .arg(&run)
        .arg("--out")
        .arg(&pred_tsv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let content = fs::read_to_string(&pred_tsv).unwrap();
    assert_eq!(content.lines().count(), 4, "{content}");
    assert!(content.contains("nqc") && content.contains("wig"));
}

#[test]
fn sweep_writes_the_full_report_set() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("reports");
    let out = bin()
        .args(["sweep", "--jobs", "2"])
        .arg("--corpus")
        .arg(synthetic_dir().join("corpus.tsv"))
        .arg("--topics")
        .arg(synthetic_dir().join("topics.tsv"))
        .arg("--qrels")
        .arg(synthetic_dir().join("qrels.txt"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("7 sensitivity tables, 4 contingency tables"));

    let files: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(files.len(), 23, "{files:?}");
    for stem in [
        "sensitivity_avgidf",
        "sensitivity_clarity",
        "sensitivity_wig",
        "sensitivity_nqc",
        "sensitivity_uef_clarity",
        "sensitivity_uef_wig",
        "sensitivity_uef_nqc",
        "contingency_metric_r",
        "contingency_metric_tau",
        "contingency_model_r",
        "contingency_model_tau",
    ] {
        for ext in ["tsv", "md"] {
            assert!(
                files.contains(&format!("{stem}.{ext}")),
                "missing {stem}.{ext}"
            );
        }
    }
    assert!(files.contains(&"outcomes.tsv".to_string()));
}

#[test]
fn sweep_rejects_invalid_config_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"corpus": "nope.tsv", "topics": "also-nope.tsv", "qrels": "gone.txt",
           "models": ["warp:9"], "metrics": ["ap@0"]}"#,
    )
    .unwrap();
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = stderr(&out);
    for needle in ["nope.tsv", "also-nope.tsv", "gone.txt", "warp:9"] {
        assert!(err.contains(needle), "missing {needle} in: {err}");
    }
}
