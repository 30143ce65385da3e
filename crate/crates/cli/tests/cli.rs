use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_torusforge");

fn example() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/example.json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("torusforge-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_doc(name: &str, doc: &str) -> PathBuf {
    let p = scratch(name).join("input.json");
    fs::write(&p, doc).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("TORUSFORGE_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn analyze_example() {
    let out = run(&["analyze", "--input", example().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["base"]["omega_exact"], "2");
    assert_eq!(v["report"]["base"]["l1_exact"], "-48");
    assert_eq!(v["report"]["base"]["l1"].as_f64(), Some(-48.0));
    assert_eq!(v["report"]["applicable"], true);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"omega\": 2.0000000000000000e0"));
}

#[test]
fn report_embeds_hash_and_version() {
    let bytes = fs::read(example()).unwrap();
    let v = json(&run(&["analyze", "--input", example().to_str().unwrap()]));
    use sha2::Digest;
    let want: String = sha2::Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(v["input_sha256"], want.as_str());
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["tool"], "torusforge");
}

#[test]
fn linear_term_is_an_error() {
    let p = write_doc("linear", r#"{"system":{"P":"x + y*z","Q":"y*z","R":"z^2"}}"#);
    let out = run(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "LinearTermPresent");
    assert_eq!(v["error"]["exit_code"], 1);
}

#[test]
fn schema_violation_is_an_error() {
    let p = write_doc("schema", r#"{"system":{"P":"0","Q":"y*z"}}"#);
    let out = run(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "Schema");
}

#[test]
fn missing_root_is_not_applicable() {
    let p = write_doc(
        "noroot",
        r#"{"system":{"P":"0","Q":"y*z","R":"-x^2 + x*y + z^2"},"perturbation":{"simple":true},"interval":[0.2,0.5]}"#,
    );
    let out = run(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["report"]["applicable"], false);
    assert_eq!(v["report"]["perturbation_error"]["kind"], "NoRootInInterval");
}

#[test]
fn degenerate_sum_is_not_applicable() {
    let p = write_doc("sigma0", r#"{"system":{"P":"x*z","Q":"y*z","R":"x^2 - y^2"}}"#);
    let out = run(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "DegenerateSum");
}

#[test]
fn branch_slope() {
    let out = run(&["branch", "--input", example().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mu1 = json(&out)["report"]["mu1"].as_f64().unwrap();
    assert!((mu1 - 0.75).abs() <= 1e-3, "{mu1}");
}

#[test]
fn melnikov_csv() {
    let out = run(&["melnikov", "--input", example().to_str().unwrap(), "--grid", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>(), ["r", "w", "f1_r", "f1_w", "f1q_r", "f1q_w", "f2_r", "f2_w"]);
    let recs: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), 9);
    for r in &recs {
        let f: Vec<f64> = r.iter().map(|s| s.parse().unwrap()).collect();
        assert!((f[2] - f[4]).abs() < 1e-9 && (f[3] - f[5]).abs() < 1e-9);
    }
}

#[test]
fn simulate_writes_files() {
    let dir = scratch("sim");
    let out = run(&[
        "simulate",
        "--input",
        example().to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["artifacts"], serde_json::json!(["simulate.json", "simulate.csv"]));
    let csv = fs::read_to_string(dir.join("simulate.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,z\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn csv_refused_where_meaningless() {
    let out = run(&["analyze", "--input", example().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_thread_count() {
    let out = Command::new(BIN)
        .args(["analyze", "--input", example().to_str().unwrap()])
        .env("TORUSFORGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = run(&["analyze", "--input", example().to_str().unwrap(), "--eps", "0.04"]);
    let b = run(&["analyze", "--input", example().to_str().unwrap(), "--eps", "0.04"]);
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(BIN)
        .args(["analyze", "--input", example().to_str().unwrap(), "--eps", "0.04"])
        .env("TORUSFORGE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn lift_output_feeds_analyze() {
    let p = write_doc(
        "lift",
        r#"{"system":{"P":"2 + x*z - y^2 + 3*z","Q":"-1 + x*y + 2*z + z^2","R":"3 + x^2 - y*z"},"lift":{"l1_target":"-48"}}"#,
    );
    let dir = scratch("liftout");
    let out = run(&["lift", "--input", p.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: Value = serde_json::from_slice(&fs::read(dir.join("lift.json")).unwrap()).unwrap();
    let cp = &rep["report"]["characteristic_polynomial"];
    let delta = rep["report"]["delta_star"].as_str().unwrap();
    assert_eq!(cp, &serde_json::json!(["0", format!("-{delta}"), "0", "-1"]));
    let lifted = dir.join("lifted.json");
    let an = run(&["analyze", "--input", lifted.to_str().unwrap()]);
    assert_eq!(an.status.code(), Some(0));
    let v = json(&an);
    assert_eq!(v["report"]["base"]["l1_exact"], "-48");
    let om = v["report"]["base"]["omega"].as_f64().unwrap();
    assert!((1.0..4.0).contains(&om));
}
