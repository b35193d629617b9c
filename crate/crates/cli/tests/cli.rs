use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_causal-span"));
    cmd.env_remove("CAUSAL_SPAN_SEED");
    cmd
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/cue32.jsonl")
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap_or(-1),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn small_model_flags() -> [&'static str; 6] {
    ["--dim", "8", "--buckets", "512", "--width-dim", "4"]
}

const SUNRISE: &str = r#"{"id":"sunrise","tokens":["The","light","in","the","background","is","from","the","sunrise"],"relations":[{"cause":[7,9],"effect":[0,2]}],"source":"demo"}"#;

#[test]
fn convert_char_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    fs::write(
        &input,
        concat!(
            r#"{"id":"a","text":"Floods came after heavy rain.","relations":[{"cause":[18,28],"effect":[0,6]}],"source":"x","char_offsets":true}"#,
            "\n",
            r#"{"id":"b","text":"Nothing here.","relations":[{"cause":[40,44],"effect":[0,3]}],"source":"x","char_offsets":true}"#,
            "\n"
        ),
    )
    .unwrap();
    let output = dir.path().join("out.jsonl");
    let (code, _, err) = run(bin().arg("convert").arg("-i").arg(&input).arg("-o").arg(&output));
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("skipped: 1"), "{err}");
    let text = fs::read_to_string(&output).unwrap();
    assert_eq!(
        text.trim(),
        r#"{"id":"a","tokens":["Floods","came","after","heavy","rain","."],"relations":[{"cause":[3,5],"effect":[0,1]}],"source":"x"}"#
    );
}

#[test]
fn convert_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let (code, _, _) = run(bin().arg("convert").arg("-i").arg(dir.path().join("missing")).arg("-o").arg(&out));
    assert_eq!(code, 2);

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, r#"{"id":"a","text":"x","relations":[],"source":"s","char_offsets":false}"#).unwrap();
    let (code, _, _) = run(bin().arg("convert").arg("-i").arg(&bad).arg("-o").arg(&out));
    assert_eq!(code, 3);

    let (code, _, _) = run(bin().args(["convert", "--bogus"]));
    assert_eq!(code, 3);
}

#[test]
fn stats_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let (code, out, _) = run(bin().arg("stats").arg(&empty).args(["--format", "json"]));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["examples"], 0);
    assert_eq!(v["all"]["percentiles"], serde_json::json!({}));

    // cause lengths 1..5 and effect lengths 6..10
    let corpus = dir.path().join("lengths.jsonl");
    let lines: Vec<String> = (1..=5)
        .map(|k| {
            let n = k + k + 5;
            serde_json::json!({
                "id": format!("l{k}"),
                "tokens": vec!["w"; n],
                "relations": [{"cause": [0, k], "effect": [k, n]}],
                "source": "t"
            })
            .to_string()
        })
        .collect();
    fs::write(&corpus, lines.join("\n")).unwrap();
    let out_dir = dir.path().join("stats");
    let (code, out, _) = run(bin().arg("stats").arg(&corpus).arg("--out-dir").arg(&out_dir));
    assert_eq!(code, 0);
    assert!(out.starts_with("examples: 5\n"), "{out}");
    assert!(out.contains("all_spans: 10 p100=10 p50=5 p90=9 p95=10 p99=10"), "{out}");
    let csv = fs::read_to_string(out_dir.join("all_lengths.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(out_dir.join("stats.json").exists());
}

#[test]
fn split_writes_three_parts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(bin().arg("split").arg(fixture()).arg("--out-dir").arg(dir.path()).args(["--ratios", "0.5,0.25,0.25"]));
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("train: 16 dev: 8 test: 8"), "{err}");
    let count = |n: &str| fs::read_to_string(dir.path().join(n)).unwrap().lines().count();
    assert_eq!((count("train.jsonl"), count("dev.jsonl"), count("test.jsonl")), (16, 8, 8));
    let (code, _, _) = run(bin().arg("split").arg(fixture()).arg("--out-dir").arg(dir.path()).args(["--ratios", "0.9,0.9,0.1"]));
    assert_eq!(code, 3);
}

fn manifest(model: &Path) -> Value {
    let mut p = model.as_os_str().to_owned();
    p.push(".manifest.json");
    serde_json::from_str(&fs::read_to_string(PathBuf::from(p)).unwrap()).unwrap()
}

#[test]
fn train_manifest_resolves_auto_span_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let (code, _, err) = run(bin()
        .args(["train", "--kind", "span", "--epochs", "0"])
        .args(small_model_flags())
        .arg("-c")
        .arg(fixture())
        .arg("-o")
        .arg(&model)
        .env("CAUSAL_SPAN_SEED", "9"));
    assert_eq!(code, 0, "{err}");
    let m = manifest(&model);
    assert_eq!(m["settings"]["max_span"], 3);
    assert_eq!(m["seed"], 9);
    assert_eq!(m["final_loss"], Value::Null);
    assert_eq!(m["examples"], 32);
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(&config, r#"{"kind":"tagger","scheme":"bio","epochs":2,"seed":5,"dim":4,"buckets":128}"#).unwrap();
    let model = dir.path().join("t.json");
    let (code, _, err) = run(bin()
        .arg("train")
        .arg("--config")
        .arg(&config)
        .args(["--epochs", "1"])
        .arg("-c")
        .arg(fixture())
        .arg("-o")
        .arg(&model)
        .env("CAUSAL_SPAN_SEED", "77"));
    assert_eq!(code, 0, "{err}");
    let m = manifest(&model);
    assert_eq!(m["settings"]["kind"], "tagger");
    assert_eq!(m["settings"]["scheme"], "bio");
    assert_eq!(m["settings"]["epochs"], 1);
    assert_eq!(m["seed"], 5, "config seed beats the environment");
    assert_eq!(m["losses"].as_array().unwrap().len(), 1);

    fs::write(&config, r#"{"epochz":2}"#).unwrap();
    let (code, _, _) = run(bin().arg("train").arg("--config").arg(&config).arg("-c").arg(fixture()).arg("-o").arg(&model));
    assert_eq!(code, 3);
}

#[test]
fn predict_keeps_ids_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let (code, _, _) = run(bin()
        .args(["train", "--kind", "span", "--epochs", "0"])
        .args(small_model_flags())
        .arg("-c")
        .arg(fixture())
        .arg("-o")
        .arg(&model));
    assert_eq!(code, 0);
    let preds = dir.path().join("p.jsonl");
    let (code, _, _) = run(bin().arg("predict").arg("-m").arg(&model).arg("-c").arg(fixture()).arg("-o").arg(&preds));
    assert_eq!(code, 0);
    let ids: Vec<String> = fs::read_to_string(&preds)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    let expected: Vec<String> = (1..=32).map(|i| format!("cue{i:02}")).collect();
    assert_eq!(ids, expected);
}

#[test]
fn overfit_tagger_recovers_gold() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("fig.jsonl");
    fs::write(&corpus, SUNRISE).unwrap();
    let model = dir.path().join("t.json");
    let (code, _, _) = run(bin()
        .args(["train", "--kind", "tagger", "--epochs", "60", "--lr", "0.05", "--dim", "8", "--buckets", "256"])
        .arg("-c")
        .arg(&corpus)
        .arg("-o")
        .arg(&model));
    assert_eq!(code, 0);
    let preds = dir.path().join("p.jsonl");
    run(bin().arg("predict").arg("-m").arg(&model).arg("-c").arg(&corpus).arg("-o").arg(&preds));
    let line: Value = serde_json::from_str(fs::read_to_string(&preds).unwrap().trim()).unwrap();
    assert_eq!(line["cause"], serde_json::json!([7, 9]));
    assert_eq!(line["effect"], serde_json::json!([0, 2]));
    assert_eq!(line["relation_score"], Value::Null);
}

#[test]
fn eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    fs::write(
        &gold,
        [
            SUNRISE,
            r#"{"id":"b","tokens":["w","w","w","w","w","w"],"relations":[{"cause":[0,2],"effect":[3,6]}],"source":"t"}"#,
            r#"{"id":"c","tokens":["w","w","w","w","w"],"relations":[{"cause":[3,5],"effect":[0,1]}],"source":"t"}"#,
        ]
        .join("\n"),
    )
    .unwrap();
    let preds = dir.path().join("p.jsonl");
    fs::write(
        &preds,
        concat!(
            r#"{"id":"sunrise","cause":[6,9],"effect":[0,2],"relation_score":0.9}"#,
            "\n",
            r#"{"id":"b","cause":[0,2],"effect":null,"relation_score":null}"#,
            "\n"
        ),
    )
    .unwrap();
    let (code, out, _) = run(bin().arg("eval").arg("--gold").arg(&gold).arg("--predictions").arg(&preds).args(["--format", "json"]));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema_version"], 1);
    let c = &v["counts"]["partial"]["cause"];
    assert_eq!((c["matched"].as_u64(), c["predicted"].as_u64(), c["gold"].as_u64()), (Some(4), Some(5), Some(6)));
    let p = &v["exact"]["pooled"];
    assert!((p["precision"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((p["recall"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let (code, out, _) = run(bin().arg("eval").arg("--gold").arg(&gold).arg("--predictions").arg(&empty));
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.starts_with("pooled") && l.matches("0.00 (0.00)").count() == 3), "{out}");

    let (code, _, _) = run(bin().arg("eval").arg("--gold").arg(&gold).arg("--predictions").arg(&preds).args(["--format", "xml"]));
    assert_eq!(code, 3);

    let stray = dir.path().join("stray.jsonl");
    fs::write(&stray, r#"{"id":"zzz","cause":null,"effect":null}"#).unwrap();
    let (code, _, _) = run(bin().arg("eval").arg("--gold").arg(&gold).arg("--predictions").arg(&stray));
    assert_eq!(code, 3);
}

#[test]
fn gradcheck_exit_codes() {
    let (code, out, _) = run(bin().args(["gradcheck", "--kind", "tagger"]));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("PASS"));
    let (code, _, _) = run(bin().args(["gradcheck", "--kind", "span", "--corrupt"]).args(small_model_flags()));
    assert_eq!(code, 1);
    let (code, _, _) = run(bin().args(["gradcheck", "--kind", "crf"]));
    assert_eq!(code, 3);
}
