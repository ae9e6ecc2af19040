use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn hifsig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hifsig")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    let out = hifsig(args);
    out.status.code().expect("exited normally")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn signature_corpus(dir: &Path) -> String {
    let corpus = path(dir, "corpus");
    let args = ["synth", "--preset", "signature", "--seed", "5", "--per-class", "12", "--p", "1600", "--basis-len", "60", "--out", &corpus];
    assert_eq!(code(&args), 0);
    corpus
}

fn learn(corpus: &str, out: &str, extra: &[&str]) -> i32 {
    let mut args = vec!["learn", "--corpus", corpus, "--out", out, "--seed", "3", "--basis-len", "60", "--iterations", "4", "--quiet"];
    args.extend_from_slice(extra);
    code(&args)
}

#[test]
fn configuration_errors_exit_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = path(tmp.path(), "out");
    assert_eq!(code(&["synth", "--preset", "planted", "--out", &out]), 2);
    assert_eq!(code(&["synth", "--preset", "planted", "--seed", "1", "--basis-len", "500", "--p", "100", "--out", &out]), 2);
    assert_eq!(code(&["synth", "--preset", "faultlab", "--seed", "1", "--per-class", "0", "--out", &out]), 2);
    let corpus = signature_corpus(tmp.path());
    assert_eq!(learn(&corpus, &out, &["--basis-len", "24"]), 2);
    assert_eq!(learn(&corpus, &out, &["--basis-len", "501"]), 2);
    assert_eq!(code(&["features", "--corpus", &corpus, "--out", &out]), 2);
    assert!(!Path::new(&out).exists());

    let cfg = path(tmp.path(), "bad.toml");
    fs::write(&cfg, "[train]\nn_basis = 3\n").unwrap();
    assert_eq!(learn(&corpus, &out, &["--config", &cfg]), 2);
    assert!(!Path::new(&out).exists());
}

#[test]
fn data_errors_exit_3() {
    let tmp = TempDir::new().unwrap();
    let corpus = signature_corpus(tmp.path());
    let out = path(tmp.path(), "out");
    let missing = path(tmp.path(), "missing.json");
    assert_eq!(code(&["crossval", "--corpus", &corpus, "--dictionary", &missing, "--out", &out]), 3);
    assert_eq!(learn(&path(tmp.path(), "nowhere"), &out, &[]), 3);
    let broken = path(tmp.path(), "broken.json");
    fs::write(&broken, "{\"version\": 1, \"bases\": [[1.0, ").unwrap();
    assert_eq!(code(&["rank", "--corpus", &corpus, "--dictionary", &broken, "--out", &out]), 3);
}

#[test]
fn starved_code_solver_exits_4() {
    let tmp = TempDir::new().unwrap();
    let corpus = signature_corpus(tmp.path());
    let cfg = path(tmp.path(), "starved.toml");
    fs::write(&cfg, "[train.solver]\nmax_iterations = 1\ntolerance = 1e-15\n").unwrap();
    assert_eq!(learn(&corpus, &path(tmp.path(), "out"), &["--config", &cfg]), 4);
}

#[test]
fn pipeline_outputs_and_reproducibility() {
    let tmp = TempDir::new().unwrap();
    let corpus = signature_corpus(tmp.path());
    assert!(Path::new(&corpus).join("truth.json").exists());

    let sweep = path(tmp.path(), "sweep");
    assert_eq!(learn(&corpus, &sweep, &["--n-bases", "2,3"]), 0);
    for f in ["dictionary_n2.json", "dictionary_n3.json", "history_n2.csv", "history_n3.csv", "summary.csv", "run.json"] {
        assert!(Path::new(&sweep).join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(Path::new(&sweep).join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);

    let a = path(tmp.path(), "a");
    let b = path(tmp.path(), "b");
    assert_eq!(learn(&corpus, &a, &["--n-bases", "3"]), 0);
    assert_eq!(learn(&corpus, &b, &["--n-bases", "3", "--threads", "1"]), 0);
    let read = |dir: &str, f: &str| fs::read(Path::new(dir).join(f)).unwrap();
    assert_eq!(read(&a, "dictionary.json"), read(&b, "dictionary.json"));
    assert_eq!(read(&a, "dictionary.json"), read(&sweep, "dictionary_n3.json"));

    let run: serde_json::Value = serde_json::from_slice(&read(&a, "run.json")).unwrap();
    assert_eq!(run["tool"], "hifsig");
    assert_eq!(run["command"], "learn");
    assert_eq!(run["config"]["train"][0]["n_bases"], 3);
    assert_eq!(run["config"]["train"][0]["seed"], 3);

    let dict = path(tmp.path(), "a/dictionary.json");
    let feats = path(tmp.path(), "features");
    assert_eq!(code(&["features", "--corpus", &corpus, "--dictionary", &dict, "--wavelet", "--out", &feats]), 0);
    let csv = fs::read_to_string(Path::new(&feats).join("features.csv")).unwrap();
    assert!(csv.starts_with("id,basis_1,basis_2,basis_3,wavelet_d1,"));
    assert_eq!(csv.lines().count(), 25);

    let cv1 = path(tmp.path(), "cv1");
    let cv2 = path(tmp.path(), "cv2");
    for out in [&cv1, &cv2] {
        let args = ["crossval", "--corpus", &corpus, "--dictionary", &dict, "--k", "5", "--trees", "15", "--seed", "4", "--out", out];
        assert_eq!(code(&args), 0);
    }
    assert_eq!(read(&cv1, "cv_report.json"), read(&cv2, "cv_report.json"));
    let report: serde_json::Value = serde_json::from_slice(&read(&cv1, "cv_report.json")).unwrap();
    assert_eq!(report["k"], 5);
    assert_eq!(report["folds"].as_array().unwrap().len(), 5);

    let rank = path(tmp.path(), "rank");
    assert_eq!(code(&["rank", "--corpus", &corpus, "--dictionary", &dict, "--out", &rank]), 0);
    let sep: serde_json::Value = serde_json::from_slice(&read(&rank, "separability.json")).unwrap();
    assert_eq!(sep["entries"].as_array().unwrap().len(), 3);

    let cmp = path(tmp.path(), "cmp");
    assert_eq!(code(&["compare", "--dictionary", &dict, "--basis", "4", "--out", &cmp]), 2);
    assert_eq!(code(&["compare", "--dictionary", &dict, "--basis", "0", "--out", &cmp]), 2);
    assert!(!Path::new(&cmp).exists());
    assert_eq!(code(&["compare", "--dictionary", &dict, "--basis", "2", "--level", "3", "--out", &cmp]), 0);
    for f in ["comparison.json", "time.csv", "spectrum.csv", "run.json"] {
        assert!(Path::new(&cmp).join(f).exists(), "{f}");
    }
}
