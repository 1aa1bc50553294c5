use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn paydev(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paydev")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small synthetic corpus: `c.jsonl` and `l.csv` in `dir`.
fn synth(dir: &Path, developers: &str) {
    let o = paydev(dir, &["synth", "--seed", "3", "--developers", developers, "--out", "c.jsonl", "--labels", "l.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

const FAST: [&str; 6] = ["--set", "forest.trees=20", "--set", "repeats=2", "--set", "folds=3"];

#[test]
fn ingest_help_shows_the_export_command() {
    let dir = tempfile::tempdir().unwrap();
    let o = paydev(dir.path(), &["ingest", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("git log --all --no-merges --date-order"), "{text}");
    assert!(text.contains("--numstat"));
}

#[test]
fn ingest_pipeline_from_export() {
    let dir = tempfile::tempdir().unwrap();
    let export = "\x1e0123456789abcdef0123456789abcdef01234567\x1fAda\x1fada@example.org\x1f1483347600\x1f2017-01-02 09:00:00 +0100\n\
                  3\t1\tsrc/a.rs\n\n\
                  \x1e89abcdef0123456789abcdef0123456789abcdef\x1fAda L.\x1fada@example.org\x1f1483367400\x1f2017-01-02 14:30:00 +0100\n\
                  -\t-\timg.png\n";
    fs::write(dir.path().join("log.txt"), export).unwrap();
    let o = paydev(dir.path(), &["ingest", "log.txt", "--out", "c.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("seed=1"), "config echo missing");
    let canonical = fs::read_to_string(dir.path().join("c.jsonl")).unwrap();
    assert_eq!(canonical.lines().count(), 2);
    assert!(canonical.contains("\"lines_added\":-1"));

    let o = paydev(dir.path(), &["identities", "c.jsonl", "--out", "ids.json", "--format", "table"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.contains("ada@example.org"), "{report}");

    let o = paydev(dir.path(), &["features", "c.jsonl", "--identities", "ids.json", "--min-commits", "1", "--out", "f.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert!(csv.starts_with("identity,period,days,weeks,timediff,commits,loc_per_commit,"));
    assert!(csv.contains("ada@example.org,0,1,1,0.229167,2,4.000000,"), "{csv}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "30");

    // 1: usage and configuration
    assert_eq!(paydev(d, &["evaluate"]).status.code(), Some(1));
    assert_eq!(paydev(d, &["--set", "bogus=1", "synth", "--labels", "x.csv", "--out", "y"]).status.code(), Some(1));
    // 2: missing file
    assert_eq!(paydev(d, &["evaluate", "--input", "nope.jsonl", "--labels", "l.csv"]).status.code(), Some(2));
    // 3: schema violation
    fs::write(d.join("bad.jsonl"), "{\"sha\": 1}\n").unwrap();
    assert_eq!(paydev(d, &["identities", "bad.jsonl"]).status.code(), Some(3));
    // 5: single-class labels
    let labels = fs::read_to_string(d.join("l.csv")).unwrap().replace(",volunteer,", ",hired,");
    fs::write(d.join("hired.csv"), labels).unwrap();
    let o = paydev(d, &["evaluate", "--input", "c.jsonl", "--labels", "hired.csv"]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    // 6: more folds than the minority class
    let o = paydev(d, &["evaluate", "--input", "c.jsonl", "--labels", "l.csv", "--folds", "16"]);
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
    assert!(!d.join("report.json").exists());
}

#[test]
fn column_mismatch_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "40");
    let mut args = vec!["train", "--input", "c.jsonl", "--labels", "l.csv", "--classifier", "logit", "--out", "m.model"];
    args.extend(FAST);
    let o = paydev(d, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("standardized coefficients"));

    let o = paydev(d, &["features", "c.jsonl", "--mode", "no_volume", "--out", "f12.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = paydev(d, &["predict", "--model", "m.model", "--features", "f12.csv"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(!d.join("p.csv").exists());

    let o = paydev(d, &["predict", "--model", "m.model", "--input", "c.jsonl", "--out", "p.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let predictions = fs::read_to_string(d.join("p.csv")).unwrap();
    assert!(predictions.starts_with("identity,probability,class\n"));
    assert_eq!(predictions.lines().count(), 41);
}

#[test]
fn evaluate_table_and_commits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "30");
    let mut args = vec!["evaluate", "--input", "c.jsonl", "--labels", "l.csv", "--format", "table"];
    args.extend(FAST);
    let o = paydev(d, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    for name in ["logit", "rpart", "randomforest", "allhired", "email", "95%officehours"] {
        assert!(table.contains(name), "{table}");
    }

    let mut args = vec!["commits", "c.jsonl", "--labels", "l.csv", "--out", "commits.json"];
    args.extend(FAST);
    let o = paydev(d, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(d.join("commits.json")).unwrap()).unwrap();
    assert!(json["all"]["results"].as_array().unwrap().iter().any(|r| r["classifier"] == "officehours"));
    assert!(json["held_out"]["config"]["coverage"].as_f64() == Some(0.5));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.conf"), "# experiment\nseed=5\nsynth.developers=4\nsynth.min_commits=120\n").unwrap();
    let o = paydev(d, &["synth", "--config", "run.conf", "--seed", "6", "--out", "c.jsonl", "--labels", "l.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = stderr(&o);
    assert!(echo.contains("seed=6") && echo.contains("synth.developers=4"), "{echo}");
    assert_eq!(fs::read_to_string(d.join("l.csv")).unwrap().lines().count(), 5);
}
