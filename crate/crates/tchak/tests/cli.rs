use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tchak(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tchak")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("sys.json"), r#"{"family": "chebyshev", "n": 4}"#).unwrap();
    let mut grid = String::from("x,weight\n");
    for i in 0..50 {
        grid.push_str(&format!("{},{}\n", -1.0 + (2 * i + 1) as f64 / 50.0, 0.04));
    }
    std::fs::write(d.join("grid.csv"), grid).unwrap();
    std::fs::write(d.join("fam.csv"), "1,0\n1,1\n").unwrap();
    dir
}

fn read(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn quadrature_writes_rule_with_residual() {
    let dir = setup();
    let o = tchak(dir.path(), &["quadrature", "--system", "sys.json", "--measure", "grid.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let art = read(&dir.path().join("rule.json"));
    assert_eq!(art["kind"], "quadrature");
    assert_eq!(art["status"], "ok");
    let rule = &art["result"]["rule"];
    assert!(rule["residual"].as_f64().unwrap() < 1e-12);
    assert!(rule["weights"].as_array().unwrap().len() <= 4);
    assert!(stderr(&o).contains("seed=0"));
}

#[test]
fn header_row_is_skipped_and_csv_errors_carry_position() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.csv"), "x,w\n0.1,0.5\n0.2,abc\n").unwrap();
    let o = tchak(dir.path(), &["quadrature", "--system", "sys.json", "--measure", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("field 2") && msg.contains("abc"), "{msg}");
}

#[test]
fn json_errors_carry_position() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.json"), "{\n  \"family\": \"monomial\",\n  \"n\": x\n}").unwrap();
    let o = tchak(dir.path(), &["quadrature", "--system", "bad.json", "--measure", "grid.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_family_is_an_error() {
    let dir = setup();
    std::fs::write(dir.path().join("s.json"), r#"{"family": "wavelet", "n": 3}"#).unwrap();
    let o = tchak(dir.path(), &["quadrature", "--system", "s.json", "--measure", "grid.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("wavelet"));
}

#[test]
fn non_scalable_family_exits_2_with_certificate() {
    let dir = setup();
    let o = tchak(dir.path(), &["frame", "scale", "--family", "fam.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let art = read(&dir.path().join("certificate.json"));
    assert_eq!(art["status"], "infeasible");
    assert!(art["result"]["max_witness_value"].as_f64().unwrap() <= 1e-9);
    assert!(art["result"]["target_pairing"].as_f64().unwrap() > 0.0);
}

#[test]
fn odd_exponent_is_rejected() {
    let dir = setup();
    let o = tchak(dir.path(), &["mz", "--p", "3", "--system", "sys.json", "--measure", "grid.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("even"));
}

#[test]
fn tampered_artifact_fails_verification() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(tchak(d, &["quadrature", "--system", "sys.json", "--measure", "grid.csv"]).status.code(), Some(0));
    assert_eq!(tchak(d, &["verify", "--artifact", "rule.json"]).status.code(), Some(0));
    let mut art = read(&d.join("rule.json"));
    let w = art["result"]["rule"]["weights"][0].as_f64().unwrap();
    art["result"]["rule"]["weights"][0] = Value::from(w * (1.0 + 1e-15));
    std::fs::write(d.join("rule.json"), serde_json::to_vec_pretty(&art).unwrap()).unwrap();
    let o = tchak(d, &["verify", "--artifact", "rule.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("differs"), "{}", stderr(&o));
}

#[test]
fn rule_verification_against_another_measure_fails() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(tchak(d, &["quadrature", "--system", "sys.json", "--measure", "grid.csv"]).status.code(), Some(0));
    let ok = tchak(d, &["verify", "--rule", "rule.json", "--system", "sys.json", "--measure", "grid.csv"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    std::fs::write(d.join("other.csv"), "0.0,1.0\n0.5,1.0\n").unwrap();
    let bad = tchak(d, &["verify", "--rule", "rule.json", "--system", "sys.json", "--measure", "other.csv"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn complex_family_cells_parse() {
    let dir = setup();
    let d = dir.path();
    std::fs::write(d.join("cfam.csv"), "1,0\n0,1\n0.5+0.5i,0.5-0.5i\n").unwrap();
    let o = tchak(d, &["frame", "subsample", "--family", "cfam.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let art = read(&d.join("subsample.json"));
    assert!(art["inputs"]["family"][0][0].is_array());
    assert!(art["result"]["operator_change"].as_f64().unwrap() <= 1e-12);
    assert!(art["result"]["ids"].as_array().unwrap().len() <= 4);
}

#[test]
fn widths_tail_writes_plot_data() {
    let dir = setup();
    let d = dir.path();
    let o = tchak(d, &["widths", "tail", "--n", "2,5", "--out", "t.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,achieved,bound,nodes");
    assert_eq!(lines.len(), 3);
}

#[test]
fn invalid_thread_count_is_an_error() {
    let dir = setup();
    let o = Command::new(env!("CARGO_BIN_EXE_tchak"))
        .args(["frame", "scale", "--family", "fam.csv"])
        .env("TCHAK_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("TCHAK_THREADS"));
}

#[test]
fn version_flag_exits_cleanly() {
    let dir = setup();
    let o = tchak(dir.path(), &["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}
