use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn pplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pplab"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("spawn pplab")
}

fn ok(args: &[&str]) -> Output {
    let out = pplab(args);
    assert!(
        out.status.success(),
        "pplab {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CON_LINES: [&str; 3] = [
    "the boy is taking a cookie from the jar .",
    "the mother is drying a plate at the sink .",
    "water is running over the sink onto the floor .",
];
const DEM_LINES: [&str; 3] = [
    "the boy is um getting the thing .",
    "the lady is doing the thing there .",
    "the water is going there &uh yes .",
];

fn chat(label: &str, mmse: u8, lines: &[&str]) -> String {
    let mut s = format!(
        "@Begin\n@Languages:\teng\n@Participants:\tPAR Participant\n@ID:\teng|Pitt|PAR|70;|female|{label}||Participant|12|{mmse}|\n"
    );
    for l in lines {
        s.push_str(&format!("*PAR:\t{l}\n"));
    }
    s.push_str("@End\n");
    s
}

/// Four speakers per group, each transcript a rotation of its group's lines.
fn write_chat_dir(root: &Path) -> PathBuf {
    let dir = root.join("chat");
    std::fs::create_dir_all(dir.join("nested")).unwrap();
    for i in 0..4 {
        let mut con = CON_LINES.to_vec();
        con.rotate_left(i % 3);
        let mut dem = DEM_LINES.to_vec();
        dem.rotate_left(i % 3);
        std::fs::write(dir.join(format!("c{i}-0.cha")), chat("Control", 29, &con)).unwrap();
        std::fs::write(dir.join("nested").join(format!("d{i}-0.cha")), chat("ProbableAD", 8 + 4 * i as u8, &dem)).unwrap();
    }
    dir
}

const TINY: [&str; 12] = [
    "--embedding-dim", "6", "--layer-dims", "6", "--batch-size", "2", "--bptt-window", "4",
    "--epochs", "2", "--learning-rate", "1",
];

fn preprocess(root: &Path) -> PathBuf {
    let chat = write_chat_dir(root);
    let corpus = root.join("corpus.jsonl");
    ok(&["preprocess", "--chat-dir", s(&chat), "--out", s(&corpus)]);
    corpus
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn preprocess_writes_corpus_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = preprocess(dir.path());
    let text = std::fs::read_to_string(&corpus).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(!text.contains("\"um\""));
    let meta = read_json(&dir.path().join("corpus.jsonl.meta.json"));
    assert_eq!(meta["meta"]["command"], "preprocess");
    assert_eq!(meta["meta"]["config"]["summary"]["participants"], 8);
}

#[test]
fn preprocess_strict_fails_on_bad_file() {
    let dir = tempfile::tempdir().unwrap();
    let chat = write_chat_dir(dir.path());
    std::fs::write(chat.join("broken-0.cha"), "@Begin\n*PAR without colon\n").unwrap();
    let out = dir.path().join("c.jsonl");
    ok(&["preprocess", "--chat-dir", s(&chat), "--out", s(&out)]);
    let strict = pplab(&["preprocess", "--chat-dir", s(&chat), "--out", s(&out), "--strict"]);
    assert!(!strict.status.success());
}

#[test]
fn train_then_interrogate_from_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = preprocess(dir.path());
    let con = dir.path().join("con.ckpt");
    let dem = dir.path().join("dem.ckpt");
    for (group, path) in [("control", &con), ("dementia", &dem)] {
        let mut args = vec!["train", "--corpus", s(&corpus), "--group", group, "--out", s(path)];
        args.extend(TINY);
        ok(&args);
    }
    let report = read_json(&dir.path().join("con.ckpt.report.json"));
    assert_eq!(report["train"]["epochs_run"], 2);

    let narratives = dir.path().join("narratives");
    std::fs::create_dir(&narratives).unwrap();
    std::fs::write(narratives.join("baseline.txt"), "the mother is drying a plate .\n").unwrap();
    std::fs::write(narratives.join("0.5-1.0.txt"), "the mother is doing a plate .\n").unwrap();
    std::fs::write(narratives.join("1.0-1.5.txt"), "the lady is doing the thing .\n").unwrap();
    let out = dir.path().join("interrogation");
    ok(&[
        "interrogate", "--con", s(&con), "--dem", s(&dem), "--alphas", "0,0.5,1",
        "--narratives", s(&narratives), "--out", s(&out),
    ]);
    let csv = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(csv.starts_with("alpha,band,mean_px_minus_po,n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
    assert!(out.join("perplexity.csv.meta.json").exists());
    let curve = read_json(&out.join("curve.json"));
    assert_eq!(curve["meta"]["inputs"]["con"], s(&con));
}

#[test]
fn corrupt_checkpoint_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, b"PPLMgarbage").unwrap();
    let narratives = dir.path().join("n");
    std::fs::create_dir(&narratives).unwrap();
    std::fs::write(narratives.join("baseline.txt"), "a b c\n").unwrap();
    let out = pplab(&[
        "interrogate", "--con", s(&bad), "--dem", s(&bad), "--narratives", s(&narratives),
        "--out", s(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("checkpoint"));
}

#[test]
fn loocv_writes_reports_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = preprocess(dir.path());
    let run = |out: &Path, jobs: &str| {
        let mut args = vec![
            "--jobs", jobs, "loocv", "--corpus", s(&corpus), "--out", s(out),
            "--repetitions", "2", "--screening-mmse", "12",
        ];
        args.extend(TINY);
        ok(&args);
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&a, "1");
    run(&b, "3");
    for f in ["scores.csv", "summary.csv", "screening_summary.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs between job counts"
        );
    }
    // meta records the job count; everything else must match
    let report = read_json(&a.join("report.json"));
    let other = read_json(&b.join("report.json"));
    for k in ["report", "severity", "screening"] {
        assert_eq!(report[k], other[k], "{k}");
    }
    assert_eq!(report["report"]["repetitions"].as_array().unwrap().len(), 2);
    assert_eq!(report["meta"]["config"]["run"]["seeds"], serde_json::json!([0, 1]));
    // 4 + 4 speakers; dementia MMSE 8, 12, 16, 20 so the floor of 12 keeps 7
    assert_eq!(report["screening"]["subset"]["participants_included"], 7);
    // only the MMSE 8 speaker is at or below the default ceiling of 10
    assert_eq!(report["severity"]["severe_transcripts"], 1);
    let scores = std::fs::read_to_string(a.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 1 + 2 * 8);
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = preprocess(dir.path());
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"lm_config": {"embedding_dim": 6, "layer_dims": [6], "batch_size": 2, "bptt_window": 4, "epochs": 1, "learning_rate": 1.0}, "seeds": [5]}"#,
    )
    .unwrap();
    let out = dir.path().join("r");
    ok(&["loocv", "--corpus", s(&corpus), "--out", s(&out), "--config", s(&cfg), "--epochs", "2"]);
    let report = read_json(&out.join("report.json"));
    let run = &report["meta"]["config"]["run"];
    assert_eq!(run["lm_config"]["epochs"], 2);
    assert_eq!(run["lm_config"]["embedding_dim"], 6);
    assert_eq!(run["seeds"], serde_json::json!([5]));
}

#[test]
fn invalid_alpha_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = preprocess(dir.path());
    let out = pplab(&["loocv", "--corpus", s(&corpus), "--out", s(&dir.path().join("x")), "--alpha", "1.5"]);
    assert!(!out.status.success());
}

#[test]
fn lexfreq_on_narratives_and_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("lex.tsv"), "word\tfreq\nmother\t100\nplate\t10\nthing\t1000\ndrying\t5\ndoing\t800\nlady\t300\nboy\t400\njar\t20\ncookie\t30\ntaking\t200\nwater\t500\nsink\t15\nrunning\t150\nfloor\t120\ngoing\t900\ngetting\t700\n").unwrap();
    std::fs::write(p.join("nouns.txt"), "mother\nplate\nthing\nlady\nboy\njar\ncookie\nwater\nsink\nfloor\n").unwrap();
    std::fs::write(p.join("verbs.txt"), "drying\ndoing\ntaking\nrunning\ngoing\ngetting\n").unwrap();
    let n = p.join("narratives");
    std::fs::create_dir(&n).unwrap();
    std::fs::write(n.join("baseline.txt"), "the mother is drying a plate .\n").unwrap();
    std::fs::write(n.join("0.5-1.0.txt"), "the mother is doing a plate .\n").unwrap();
    std::fs::write(n.join("1.0-1.5.txt"), "the lady is doing the thing .\n").unwrap();
    let out = p.join("lex.json");
    let (lex, nouns, verbs) = (p.join("lex.tsv"), p.join("nouns.txt"), p.join("verbs.txt"));
    let lexargs = ["--lexicon", s(&lex), "--nouns", s(&nouns), "--verbs", s(&verbs)];
    let mut args = vec!["lexfreq", "--narratives", s(&n), "--out", s(&out)];
    args.extend(lexargs);
    ok(&args);
    let v = read_json(&out);
    assert_eq!(v["band_spearman"], 1.0);
    assert_eq!(v["items"].as_array().unwrap().len(), 3);

    let corpus = preprocess(p);
    let out = p.join("lex_corpus.json");
    let mut args = vec!["lexfreq", "--corpus", s(&corpus), "--out", s(&out)];
    args.extend(lexargs);
    ok(&args);
    let v = read_json(&out);
    assert_eq!(v["items"].as_array().unwrap().len(), 8);
    assert!(v["items"][0]["mean_log_frequency"].is_number());
}

#[test]
fn gradcheck_reports_and_enforces_tolerance() {
    let out = ok(&["gradcheck", "--vocab-size", "8", "--embedding-dim", "4", "--layer-dims", "4", "--length", "6"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["report"]["max_relative_error"].as_f64().unwrap() < 1e-4);
    let strict = pplab(&["gradcheck", "--vocab-size", "8", "--embedding-dim", "4", "--layer-dims", "4", "--tolerance", "0"]);
    assert!(!strict.status.success());
}
