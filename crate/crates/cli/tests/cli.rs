use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

fn trendhmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trendhmm"))
        .args(args)
        .env_remove("TRENDHMM_SEED")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = trendhmm(args);
    assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_byte_identical_for_a_seed() {
    let model = data("models/one_day.json");
    let args = ["generate", "-m", s(&model), "--length", "7", "--seed", "42"];
    let a = ok(&args);
    let b = ok(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(stderr(&a).contains("seed: 42"));
    let doc = json(&a);
    assert_eq!(doc["states"].as_array().unwrap().len(), 7);
    assert_eq!(doc["states"][0], "moderate low");

    let search = [
        "generate",
        "-m",
        s(&model),
        "--seed",
        "9",
        "--trials",
        "5000",
        "--include-start",
    ];
    assert_eq!(ok(&search).stdout, ok(&search).stdout);
}

#[test]
fn seed_comes_from_the_environment_when_absent() {
    let model = data("models/one_day.json");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_trendhmm"))
            .args(["generate", "-m", s(&model)])
            .env("TRENDHMM_SEED", "1234")
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert!(stderr(&a).contains("seed: 1234 (env)"), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 1234);

    let random = ok(&["generate", "-m", s(&model)]);
    assert!(stderr(&random).contains("(random)"));
}

#[test]
fn fitness_on_the_six_candidates() {
    let out = ok(&["fitness", "--paths", s(&data("six_sequences.json"))]);
    let doc = json(&out);
    let sums: Vec<f64> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["compare_sum"].as_f64().unwrap())
        .collect();
    for (got, want) in sums.iter().zip([1.00, 1.29, 1.86, 1.57, 2.14, 2.14]) {
        assert!((got - want).abs() <= 0.01, "{got} vs {want}");
    }
    let divergences = doc["divergences"].as_array().unwrap();
    assert_eq!(divergences.len(), 1);
    assert_eq!(divergences[0]["label"], "4-day");
    assert!(stderr(&out).contains("4-day"));

    let text = stdout(&ok(&[
        "fitness",
        "--paths",
        s(&data("six_sequences.json")),
        "--format",
        "text",
    ]));
    assert!(
        text.contains("4-day             1.57     0.64  *"),
        "{text}"
    );
}

#[test]
fn pipeline_from_prices_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = dir.path().join("labeled.csv");
    let model = dir.path().join("model.json");
    let closes = data("closes_20d.csv");
    ok(&[
        "ingest",
        "-i",
        s(&closes),
        "--closes-only",
        "--k",
        "1",
        "-o",
        s(&labeled),
    ]);
    let csv = std::fs::read_to_string(&labeled).unwrap();
    assert_eq!(csv.lines().count(), 20);
    assert!(csv.starts_with("date,diff,symbol,state\n"));

    let est = json(&ok(&[
        "estimate",
        "-i",
        s(&labeled),
        "--model-out",
        s(&model),
    ]));
    for row in est["joint_table"]["rows"].as_array().unwrap() {
        let sum: f64 = row
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    let via_model = json(&ok(&["stationary", "-m", s(&model)]));
    let direct = json(&ok(&[
        "report",
        "-i",
        s(&closes),
        "--closes-only",
        "--k",
        "1",
    ]));
    assert_eq!(via_model["rows"], direct["rows"]);
    assert_eq!(direct["label"], "1-day");
    assert_eq!(direct["thresholds"].as_array().unwrap().len(), 5);
}

#[test]
fn text_and_json_carry_the_same_numbers() {
    let model = data("models/three_day.json");
    let doc = json(&ok(&["stationary", "-m", s(&model)]));
    let text = stdout(&ok(&["stationary", "-m", s(&model), "--format", "text"]));
    let csv = stdout(&ok(&["stationary", "-m", s(&model), "--format", "csv"]));
    for (row, line) in doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .zip(csv.lines().skip(1))
    {
        let p = row["probability"].as_f64().unwrap();
        assert!(text.contains(&format!("{:.2}%", row["percentage"].as_f64().unwrap())));
        let from_csv: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(p, from_csv);
    }
    assert!(
        text.contains("dominant trend: moderate low (31.25%)"),
        "{text}"
    );
}

#[test]
fn rounded_transcriptions_need_a_tolerance() {
    let model = data("models/two_day.json");
    let strict = trendhmm(&["stationary", "-m", s(&model)]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(stderr(&strict).contains("sums to"));
    ok(&["stationary", "-m", s(&model), "--tolerance", "0.01"]);
}

#[test]
fn exit_codes() {
    let unknown = trendhmm(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(stderr(&unknown).contains("Usage"));
    assert_eq!(trendhmm(&["stationary", "--nope"]).status.code(), Some(1));
    assert_eq!(
        trendhmm(&["stationary", "-m", "/no/such/file.json"])
            .status
            .code(),
        Some(1)
    );
    let help = trendhmm(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in [
        "ingest",
        "estimate",
        "stationary",
        "generate",
        "decode",
        "train",
        "fitness",
        "report",
    ] {
        assert!(stdout(&help).contains(sub));
    }
    // six equal closes give constant differences: nothing to bin
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "5\n5\n5\n5\n5\n5\n").unwrap();
    let out = trendhmm(&["report", "-i", s(&flat), "--closes-only"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    // a symbol outside the alphabet is an input error
    let model = data("models/one_day.json");
    let bad = trendhmm(&["decode", "-m", s(&model), "--symbols", "I,X"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"k": 2, "format": "csv", "binning": "quantile"}"#).unwrap();
    let closes = data("closes_20d.csv");
    let out = ok(&[
        "-v",
        "--config",
        s(&cfg),
        "ingest",
        "-i",
        s(&closes),
        "--closes-only",
    ]);
    let echoed: Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(echoed["k"], 2);
    assert_eq!(echoed["format"], "csv");
    assert_eq!(echoed["binning"]["mode"]["mode"], "quantile");
    assert_eq!(stdout(&out).lines().count(), 19);

    let out = ok(&[
        "--config",
        s(&cfg),
        "ingest",
        "-i",
        s(&closes),
        "--closes-only",
        "--k",
        "3",
        "-v",
    ]);
    let echoed: Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(echoed["k"], 3);
    assert_eq!(stdout(&out).lines().count(), 18);

    std::fs::write(&cfg, r#"{"lag": 2}"#).unwrap();
    let out = trendhmm(&[
        "--config",
        s(&cfg),
        "ingest",
        "-i",
        s(&closes),
        "--closes-only",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn explicit_thresholds() {
    let closes = data("closes_20d.csv");
    let out = ok(&[
        "ingest",
        "-i",
        s(&closes),
        "--closes-only",
        "--binning",
        "explicit",
        "--thresholds=-1.5,-0.5,0,0.5,1.5",
        "--format",
        "json",
    ]);
    let doc = json(&out);
    assert_eq!(doc["thresholds"][0], -1.5);
    // -0.52 falls between -1.5 and -0.5
    assert_eq!(doc["rows"][0]["state"], "low");
    let missing = trendhmm(&[
        "ingest",
        "-i",
        s(&closes),
        "--closes-only",
        "--binning",
        "explicit",
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn decode_and_train() {
    let model = data("models/one_day.json");
    let decoded = json(&ok(&[
        "decode",
        "-m",
        s(&model),
        "--symbols",
        "D I D I D I",
    ]));
    let lp = decoded["log_probability"].as_f64().unwrap();
    let ll = decoded["log_likelihood"].as_f64().unwrap();
    assert!(lp <= ll);
    assert_eq!(decoded["states"].as_array().unwrap().len(), 6);

    let dir = tempfile::tempdir().unwrap();
    let trained_path = dir.path().join("trained.json");
    let trained = json(&ok(&[
        "train",
        "-m",
        s(&model),
        "--symbols",
        "D,I,D,I,D,D,I,I,D,I,D,D",
        "--max-iter",
        "30",
        "--model-out",
        s(&trained_path),
    ]));
    let trace: Vec<f64> = trained["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{trace:?}");
    ok(&["stationary", "-m", s(&trained_path)]);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pi.json");
    let model = data("models/five_day.json");
    let to_stdout = ok(&["stationary", "-m", s(&model)]);
    ok(&["stationary", "-m", s(&model), "-o", s(&path)]);
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}
