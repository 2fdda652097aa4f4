use std::path::Path;

use divkit_cli::{run, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL, EXIT_USAGE};
use serde_json::Value;

fn divkit(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("divkit").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const LINES: &str = "The cat sat on the mat today while rain fell outside.\n\
A dog ran across the quiet park chasing a red ball.\n\
The cat sat on the mat again and watched the window.\n\
Birds sing loudly in the early morning near our old house.\n";

#[test]
fn help_matches_snapshots() {
    for (cmd, file) in [
        (None, "help_root.txt"),
        (Some("metrics"), "help_metrics.txt"),
        (Some("patterns"), "help_patterns.txt"),
        (Some("match"), "help_match.txt"),
        (Some("exact"), "help_exact.txt"),
        (Some("truncate"), "help_truncate.txt"),
        (Some("correlate"), "help_correlate.txt"),
        (Some("serve"), "help_serve.txt"),
    ] {
        let mut args: Vec<&str> = cmd.into_iter().collect();
        args.push("--help");
        let (code, out, _) = divkit(&args);
        assert_eq!(code, EXIT_OK);
        let expected = std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR"))
                .join("tests/snapshots")
                .join(file),
        )
        .unwrap();
        assert_eq!(out, expected, "{file} is stale");
    }
}

#[test]
fn every_metrics_flag_shows_its_default() {
    let (_, out, _) = divkit(&["metrics", "--help"]);
    for flag in [
        "--field",
        "--tagger",
        "--format",
        "--seed",
        "--stub-embed-dim",
        "--workers",
        "--ngd-max-n",
        "--mattr-window",
        "--hdd-sample",
        "--selfrep-n",
        "--rouge-beta",
        "--normalization",
        "--compressor",
        "--level",
        "--pair-budget",
    ] {
        let line = out
            .lines()
            .position(|l| l.contains(flag))
            .unwrap_or_else(|| panic!("{flag} missing"));
        assert!(
            out.lines().nth(line + 1).unwrap().contains("[default:"),
            "{flag} has no default shown"
        );
    }
}

#[test]
fn metrics_json_is_stable_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.txt", LINES);
    let (code, a, _) = divkit(&[
        "metrics",
        &input,
        "--format",
        "json",
        "--stub-embed-dim",
        "8",
    ]);
    assert_eq!(code, EXIT_OK);
    let (_, b, _) = divkit(&[
        "metrics",
        &input,
        "--format",
        "json",
        "--stub-embed-dim",
        "8",
    ]);
    let strip = |s: &str| {
        let mut v: Value = serde_json::from_str(s).unwrap();
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    let v = strip(&a);
    assert_eq!(v["doc_count"], 4);
    assert_eq!(v["scores"].as_object().unwrap().len(), 11);
    assert!(v["skipped"].as_object().unwrap().is_empty());
}

#[test]
fn embeddings_without_provider() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.txt", LINES);
    let (code, out, _) = divkit(&["metrics", &input, "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["scores"].get("hom_embed").is_none());
    assert!(v["skipped"].get("hom_embed").is_none());

    let (code, out, _) = divkit(&[
        "metrics",
        &input,
        "--only",
        "cr,hom_embed",
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_PARTIAL);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["skipped"]["hom_embed"]
        .as_str()
        .unwrap()
        .contains("embedding"));
    assert!(v["scores"]["cr"].is_number());
}

#[test]
fn only_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.txt", LINES);
    let (code, out, _) = divkit(&["metrics", &input, "--only", "cr,ngd", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<&str> = out.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["metric", "avg_length", "cr", "ngd"]);
}

#[test]
fn pair_budget_skips_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.txt", LINES);
    let (code, out, _) = divkit(&[
        "metrics",
        &input,
        "--only",
        "self_bleu",
        "--pair-budget",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_PARTIAL);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["skipped"]["self_bleu"].is_string());
    let (code, out, _) = divkit(&[
        "metrics",
        &input,
        "--only",
        "self_bleu",
        "--pair-budget",
        "2",
        "--force",
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["scores"]["self_bleu"].is_number());
}

#[test]
fn print_config_echoes_parameters() {
    let (code, out, _) = divkit(&[
        "metrics",
        "unused.txt",
        "--print-config",
        "--mattr-window",
        "25",
        "--lowercase",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["metrics"]["mattr_window"], 25);
    assert_eq!(v["metrics"]["lowercase"], true);
    assert_eq!(v["metrics"]["hdd_sample"], 42);
}

#[test]
fn usage_and_fatal_exit_codes() {
    assert_eq!(divkit(&["metrics"]).0, EXIT_USAGE);
    assert_eq!(
        divkit(&["metrics", "x.txt", "--only", "bogus"]).0,
        EXIT_USAGE
    );
    assert_eq!(divkit(&["nonsense"]).0, EXIT_USAGE);
    let (code, _, err) = divkit(&["metrics", "/definitely/not/here.txt"]);
    assert_eq!(code, EXIT_FATAL);
    assert!(err.starts_with("error:"));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.jsonl", "{\"text\": \"ok\"}\nnot json\n");
    let (code, _, err) = divkit(&["metrics", &bad]);
    assert_eq!(code, EXIT_FATAL);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn patterns_then_match_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.txt", LINES);
    let index = dir.path().join("idx.json").to_string_lossy().into_owned();
    let (code, _, _) = divkit(&[
        "patterns",
        &input,
        "-n",
        "3",
        "--min-docs",
        "2",
        "--out",
        &index,
    ]);
    assert_eq!(code, EXIT_OK);
    let idx: Value = serde_json::from_str(&std::fs::read_to_string(&index).unwrap()).unwrap();
    assert_eq!(idx["n"], 3);
    assert!(!idx["patterns"].as_array().unwrap().is_empty());

    let (code, out, _) = divkit(&["match", &input, "--doc", "0", "--index", &index]);
    assert_eq!(code, EXIT_OK);
    let hits: Vec<Value> = serde_json::from_str(&out).unwrap();
    assert!(hits.iter().any(|h| h["text"] == "The cat sat"), "{out}");

    assert_eq!(
        divkit(&["match", &input, "--doc", "9", "--index", &index]).0,
        EXIT_USAGE
    );
}

#[test]
fn n_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.txt", LINES);
    assert_eq!(
        divkit(&["patterns", &input, "-n", "1", "--min-docs", "1"]).0,
        EXIT_OK
    );
    assert_eq!(
        divkit(&["patterns", &input, "-n", "1", "--ui-bounds"]).0,
        EXIT_USAGE
    );
    assert_eq!(divkit(&["patterns", &input, "-n", "11"]).0, EXIT_USAGE);
    assert_eq!(divkit(&["exact", &input, "-n", "0"]).0, EXIT_USAGE);
}

#[test]
fn exact_finds_shared_strings() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.txt", LINES);
    let (code, out, _) = divkit(&["exact", &input, "-n", "5"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let keys: Vec<String> = v["patterns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            p["pattern"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| t.as_str().unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    assert_eq!(keys, ["The cat sat on the", "cat sat on the mat"]);
}

#[test]
fn truncate_writes_equal_length_systems() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.txt",
        "one two three four five six\nalpha beta gamma\n",
    );
    let b = write(
        dir.path(),
        "b.txt",
        "one two three\nalpha beta gamma delta epsilon\n",
    );
    let out_dir = dir.path().join("out");
    let (code, out, _) = divkit(&[
        "truncate",
        "--system",
        &format!("a={a}"),
        "--system",
        &format!("b={b}"),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    let read = |name: &str| -> Vec<String> {
        std::fs::read_to_string(out_dir.join(name))
            .unwrap()
            .lines()
            .map(|l| {
                serde_json::from_str::<Value>(l).unwrap()["text"]
                    .as_str()
                    .unwrap()
                    .to_string()
            })
            .collect()
    };
    assert_eq!(read("a.jsonl"), ["one two three", "alpha beta gamma"]);
    assert_eq!(read("b.jsonl"), ["one two three", "alpha beta gamma"]);

    let c = write(dir.path(), "c.txt", "just one\n");
    let (code, _, err) = divkit(&[
        "truncate",
        "--system",
        &format!("a={a}"),
        "--system",
        &format!("c={c}"),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_FATAL, "{err}");
    assert_eq!(
        divkit(&["truncate", "--system", "nopath", "--out-dir", "x"]).0,
        EXIT_USAGE
    );
}

#[test]
fn correlate_reports_from_metrics_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpora = [
        "a b c d e f g h\ni j k l m n o p\nq r s t u v w x\n",
        "a b c d a b c d\ni j k l i j k l\nq r s t q r s t\n",
        "a a a a a a a a\nb b b b b b b b\nc c c c c c c c\n",
        "a b c d e f a b\nc d e f a b c d\nq r s q r s q r\n",
    ];
    let mut reports = Vec::new();
    for (i, body) in corpora.iter().enumerate() {
        let input = write(dir.path(), &format!("s{i}.txt"), body);
        let (_, out, _) = divkit(&[
            "metrics",
            &input,
            "--only",
            "cr,ngd,mattr",
            "--format",
            "json",
        ]);
        reports.push(write(dir.path(), &format!("s{i}.json"), &out));
    }
    let mut args = vec!["correlate"];
    args.extend(reports.iter().map(String::as_str));
    args.extend(["--format", "json"]);
    let (code, out, err) = divkit(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    let m: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(m["metrics"].as_array().unwrap().len(), 3);

    args.truncate(args.len() - 2);
    args.extend(["--method", "spearman"]);
    let (code, csv, _) = divkit(&args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(csv.lines().count(), 4);

    let (code, _, _) = divkit(&["correlate", &reports[0], "--method", "kendall"]);
    assert_eq!(code, EXIT_USAGE);
}
