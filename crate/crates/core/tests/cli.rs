use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use subword_stego::bridge::{MockServer, Responder};
use subword_stego::harness::parse_report;
use subword_stego::ngram::load_model;
use subword_stego::vocab::load_vocab;

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/corpus.txt");

fn stego(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stego"))
        .args(args)
        .output()
        .expect("run stego")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workdir {
    dir: tempfile::TempDir,
}

impl Workdir {
    /// Trains a small vocabulary and model and writes a prompt.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let w = Self { dir };
        let out = stego(&["train-vocab", CORPUS, "--size", "400", "--out", s(&w.path("vocab.json"))]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let out = stego(&[
            "train-lm",
            CORPUS,
            "--vocab",
            s(&w.path("vocab.json")),
            "--order",
            "3",
            "--out",
            s(&w.path("lm.json")),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::write(w.path("prompt.txt"), "The morning train").unwrap();
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn codec_args(&self, method: &str) -> Vec<String> {
        [
            "--vocab",
            s(&self.path("vocab.json")),
            "--lm",
            s(&self.path("lm.json")),
            "--prompt-file",
            s(&self.path("prompt.txt")),
            "--p",
            "1/100",
            "--method",
            method,
        ]
        .iter()
        .map(|a| a.to_string())
        .collect()
    }

    fn run(&self, cmd: &str, method: &str, extra: &[&str]) -> Output {
        let mut args: Vec<String> = vec![cmd.into()];
        args.extend(self.codec_args(method));
        args.extend(extra.iter().map(|a| a.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        stego(&refs)
    }
}

#[test]
fn encode_then_decode_recovers_hex() {
    let w = Workdir::new();
    let trace = w.path("trace.json");
    let out = w.run("encode", "proposed", &["--message-hex", "c0ffee42", "--trace", s(&trace)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(w.path("cover.txt"), &out.stdout).unwrap();
    let steps: serde_json::Value = serde_json::from_slice(&std::fs::read(&trace).unwrap()).unwrap();
    assert!(!steps["steps"].as_array().unwrap().is_empty());

    let cover = w.path("cover.txt");
    let out = w.run("decode", "proposed", &["--cover", s(&cover), "--msg-len-bits", "32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "c0ffee42");
}

#[test]
fn odd_lengths_and_explicit_bit_counts() {
    let w = Workdir::new();
    let out = w.run("encode", "proposed", &["--message-hex", "abc"]);
    assert!(out.status.success());
    std::fs::write(w.path("c1"), &out.stdout).unwrap();
    let out = w.run("decode", "proposed", &["--cover", s(&w.path("c1")), "--msg-len-bits", "12"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "abc");

    let out = w.run("encode", "proposed", &["--message-hex", "ff", "--msg-len-bits", "5"]);
    assert!(out.status.success());
    std::fs::write(w.path("c2"), &out.stdout).unwrap();
    let out = w.run("decode", "proposed", &["--cover", s(&w.path("c2")), "--msg-len-bits", "5"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "f8");
}

#[test]
fn exit_codes() {
    let w = Workdir::new();
    std::fs::write(w.path("junk.txt"), "\u{1}\u{2}\u{3} nothing like a cover").unwrap();
    let out = w.run("decode", "proposed", &["--cover", s(&w.path("junk.txt")), "--msg-len-bits", "64"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let out = w.run("decode", "proposed", &["--cover", s(&w.path("missing.txt")), "--msg-len-bits", "8"]);
    assert_eq!(out.status.code(), Some(3));

    let out = w.run("encode", "proposed", &["--message-hex", "zz"]);
    assert_eq!(out.status.code(), Some(3));

    let out = stego(&["encode", "--vocab", "x.json"]);
    assert_eq!(out.status.code(), Some(3));

    let out = w.run("encode", "proposed", &["--message-hex", "01", "--p", "3/2"]);
    assert_eq!(out.status.code(), Some(3));

    assert_eq!(stego(&["--help"]).status.code(), Some(0));
}

fn write_bench_config(w: &Workdir, trials: usize, seed: u64) -> PathBuf {
    let config = serde_json::json!({
        "vocab": "vocab.json",
        "lm": "lm.json",
        "corpus": CORPUS,
        "trials": trials,
        "seed": seed,
        "msg_len_bits": 64,
        "threshold": "1/100",
        "methods": ["proposed", "unaware"],
        "max_prompt_bytes": 40,
    });
    let path = w.path(&format!("bench-{seed}.json"));
    std::fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn bench_reports_are_identical_across_runs_and_modes() {
    let w = Workdir::new();
    let config = write_bench_config(&w, 80, 31);
    let a = w.path("a.json");
    let b = w.path("b.json");
    let csv = w.path("a.csv");
    let out = stego(&["bench", "--config", s(&config), "--out", s(&a), "--csv", s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = stego(&["bench", "--config", s(&config), "--out", s(&b), "--serial"]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let report = parse_report(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report.config.seed, 31);
    assert_eq!(report.methods[&subword_stego::Method::Proposed].failures, 0);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("method,error_rate_pct,bits_per_token,trials,seed\n"));
    assert!(table.contains("\nproposed,0.0000,"));
}

#[test]
fn bench_rejects_bad_config() {
    let w = Workdir::new();
    std::fs::write(w.path("bad.json"), r#"{"trials": 3}"#).unwrap();
    let out = stego(&["bench", "--config", s(&w.path("bad.json")), "--out", s(&w.path("r.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bridge_flag_matches_local_model() {
    let w = Workdir::new();
    let vocab = load_vocab(w.path("vocab.json")).unwrap();
    let lm = load_model(w.path("lm.json")).unwrap();
    let server = Arc::new(MockServer::new(lm, &vocab, "cli-test"));
    let (addr, _) = server.spawn_tcp().unwrap();

    let local = w.run("encode", "proposed", &["--message-hex", "5eed"]);
    assert!(local.status.success());
    let remote = stego(&[
        "encode",
        "--vocab",
        s(&w.path("vocab.json")),
        "--bridge",
        &addr.to_string(),
        "--prompt-file",
        s(&w.path("prompt.txt")),
        "--message-hex",
        "5eed",
    ]);
    assert!(remote.status.success(), "{}", String::from_utf8_lossy(&remote.stderr));
    assert_eq!(remote.stdout, local.stdout);
}
