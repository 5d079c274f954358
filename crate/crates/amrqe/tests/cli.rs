use std::path::Path;
use std::process::{Command, Output};

const GOLD: &str = "# ::id fig1\n# ::snt There is no asbestos in our products now .\n(a / asbestos :polarity - :time (n / now) :location (t / thing :ARG1-of (p / produce-01 :ARG0 (w / we))))\n\n# ::id two\n# ::snt The boy wants to go .\n(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))\n";

fn amrqe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amrqe")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = amrqe(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn eval_gold_against_itself_is_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("gold.amr"), GOLD).unwrap();
    let out = ok(dir.path(), &["eval", "--pred", "gold.amr", "--gold", "gold.amr", "--summary"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("id\tsystem\tSmatch_P\tSmatch_R\tSmatch_F1"));
    for l in &lines[1..] {
        assert!(l.split('\t').skip(2).all(|v| v == "1.000000"), "{l}");
    }
    assert!(lines[1].starts_with("fig1\tpred\t"));
    assert!(lines[3].starts_with("MEAN\t"));
    let js: serde_json::Value =
        serde_json::from_str(&ok(dir.path(), &["eval", "--pred", "gold.amr", "--gold", "gold.amr", "--format", "json"])).unwrap();
    assert_eq!(js["rows"].as_array().unwrap().len(), 2);
    assert_eq!(js["columns"].as_array().unwrap().len(), 36);
}

#[test]
fn unreadable_prediction_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("gold.amr"), GOLD).unwrap();
    std::fs::write(dir.path().join("pred.amr"), "(a / asbestos\n\n(w / want-01)\n").unwrap();
    let out = amrqe(dir.path(), &["eval", "--pred", "pred.amr", "--gold", "gold.amr"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreadable"));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.split('\t').skip(2).all(|v| v == "0.000000"));
}

#[test]
fn errors_are_single_machine_readable_lines() {
    let dir = tempfile::tempdir().unwrap();
    for (args, kind, code) in [
        (vec!["eval", "--pred", "missing.amr", "--gold", "missing.amr"], "io", 1),
        (vec!["eval", "--unknown"], "usage", 2),
        (vec!["frobnicate"], "usage", 2),
        (vec!["gen", "--out", "g", "--systems", "a:x"], "usage", 1),
    ] {
        let out = amrqe(dir.path(), &args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        let fields: Vec<&str> = err.trim_end().split('\t').collect();
        assert_eq!((fields[0], fields[1]), ("error", kind), "{err}");
    }
    std::fs::write(dir.path().join("m.bin"), b"AMRQEMDL\x09\x00\x00\x00").unwrap();
    std::fs::write(dir.path().join("d.jsonl"), "").unwrap();
    let out = amrqe(dir.path(), &["predict", "--model", "m.bin", "--data", "d.jsonl"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error\tmodel-file\tunsupported model file version 9"), "{err}");
    assert!(ok(dir.path(), &["--help"]).contains("rank-systems"));
}

#[test]
fn data_dir_environment_variable_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("gold.amr"), GOLD).unwrap();
    let elsewhere = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_amrqe"))
        .current_dir(elsewhere.path())
        .env("AMRQE_DATA_DIR", dir.path())
        .args(["eval", "--pred", "gold.amr", "--gold", "gold.amr", "--out", "scores.tsv"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("scores.tsv").is_file());
}

#[test]
fn rank_with_perfect_predictions_reaches_the_upper_bound() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--out", "g", "--sentences", "30", "--seed", "4"]);
    let preds = std::fs::read_to_string(d.join("g/scores.tsv")).unwrap();
    std::fs::write(d.join("perfect.tsv"), preds).unwrap();
    let out = ok(d, &["rank", "--manifest", "g/manifest.tsv", "--predictions", "perfect.tsv", "--gold", "g/gold.amr"]);
    let row = |name: &str| -> Vec<String> {
        out.lines().find(|l| l.starts_with(&format!("{name}\t"))).unwrap().split('\t').skip(1).map(String::from).collect()
    };
    assert_eq!(row("selected")[2], row("upper")[2]);
    let pct: Vec<&str> = out.lines().last().unwrap().split('\t').collect();
    assert_eq!(pct[4], "100.000000", "{out}");
}

#[test]
fn rank_systems_refuses_significance_below_three_systems() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("pairs.tsv"), "system\tpredicted_rank\ttrue_rank\nA\t1\t1\nB\t2\t2\n").unwrap();
    let out = ok(d, &["rank-systems", "--rank-pairs", "pairs.tsv", "--trials", "100"]);
    assert!(out.contains("significance refused"), "{out}");
    assert!(!out.contains("# significance\n"));
}

#[test]
fn commands_do_not_modify_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--out", "g", "--sentences", "12", "--seed", "2"]);
    let before = std::fs::read(d.join("g/manifest.tsv")).unwrap();
    let gold = std::fs::read(d.join("g/gold.amr")).unwrap();
    ok(d, &["prep", "--manifest", "g/manifest.tsv", "--gold", "g/gold.amr", "--vocab-out", "v.json", "--out", "all.jsonl"]);
    assert_eq!(std::fs::read(d.join("g/manifest.tsv")).unwrap(), before);
    assert_eq!(std::fs::read(d.join("g/gold.amr")).unwrap(), gold);
}
