use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use hardy_tree::output::parse_csv_table;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy-tree")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn column(text: &str, table: &str, name: &str) -> Vec<f64> {
    let (cols, rows) = parse_csv_table(text, table).unwrap();
    let j = cols.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[j].parse().unwrap()).collect()
}

fn write_tree(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const UNIT: &str = include_str!("../fixtures/unit_interval.json");

#[test]
fn validate_bundled_fixture() {
    let o = bin(&["validate", "--input", "fixture:binary-depth-3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.starts_with("# version: hardy-tree"));
    assert_eq!(column(&s, "tree", "integral_uv"), [6.0]);
}

#[test]
fn validate_names_edge_with_bad_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let bad = UNIT.replace(r#""v": [{"len": 1.0, "value": 1.0}]"#, r#""v": [{"len": 0.7, "value": 1.0}]"#);
    assert_ne!(bad, UNIT);
    let path = write_tree(dir.path(), "bad.json", &bad);
    let o = bin(&["validate", "--input", &path]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("edge 0"), "{}", stderr(&o));
}

#[test]
fn malformed_json_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tree(dir.path(), "bad.json", "{\"vertices\": [0, 1],\n\"edges\": 7}");
    let o = bin(&["validate", "--input", &path]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_tree(dir.path(), "bad.json", r#"{"vertices": [0], "edges": []}"#);
    let o = bin(&["validate", "--input", &path]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("root"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["nonsense"],
        vec!["validate"],
        vec!["norm", "--input", "fixture:y-tree", "--grid", "16"],
        vec!["norm", "--input", "fixture:y-tree", "--p", "0.5"],
        vec!["scan", "--input", "fixture:y-tree", "--eps-factor", "2"],
        vec!["scan", "--input", "fixture:y-tree", "--svg"],
        vec!["norm", "--input", "fixture:no-such-tree"],
    ] {
        let o = bin(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn domain_errors_exit_3() {
    let o = bin(&["approx", "--input", "fixture:unit-interval", "--p", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("p = 3"));
}

#[test]
fn approx_first_value_is_two_over_pi() {
    let o = bin(&["approx", "--input", "fixture:unit-interval", "--n-max", "1", "--grid", "1024"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = column(&stdout(&o), "spectrum", "a_n");
    assert_eq!(a.len(), 1);
    assert!((a[0] - 2.0 / PI).abs() < 1e-5, "{a:?}");
}

#[test]
fn norm_at_infinity_accepts_inf() {
    let o = bin(&["norm", "--input", "fixture:path-0-4", "--p", "inf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // sup_x ∫_0^x u · sup v = 4
    assert!((column(&stdout(&o), "norm", "norm")[0] - 4.0).abs() < 1e-9);
}

#[test]
fn scan_on_unit_interval_approaches_one_over_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = bin(&[
        "scan",
        "--input",
        "fixture:unit-interval",
        "--eps-start",
        "0.08",
        "--eps-count",
        "4",
        "--n-max",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--svg",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let last_line = text.lines().last().unwrap();
    let (cols, _) = parse_csv_table(&text, "scan").unwrap();
    let cells: Vec<&str> = last_line.split(',').collect();
    let eps: f64 = cells[cols.iter().position(|c| c == "eps").unwrap()].parse().unwrap();
    let eps_n: f64 = cells[cols.iter().position(|c| c == "eps_n").unwrap()].parse().unwrap();
    assert!((eps - 0.01).abs() < 1e-15);
    assert!((eps_n - 1.0 / PI).abs() * PI <= 0.05);
    let svg = std::fs::read_to_string(out.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("stroke-dasharray"));
}

#[test]
fn zero_weight_tree_gives_flat_zero_curve() {
    let dir = tempfile::tempdir().unwrap();
    let zero = UNIT.replace(r#""u": [{"len": 1.0, "value": 1.0}]"#, r#""u": [{"len": 1.0, "value": 0.0}]"#);
    let path = write_tree(dir.path(), "zero.json", &zero);
    let out = dir.path().join("zero.csv");
    let o = bin(&["approx", "--input", &path, "--n-max", "5", "--out", out.to_str().unwrap(), "--svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(column(&text, "spectrum", "n_a_n"), [0.0; 5]);
    let svg = std::fs::read_to_string(out.with_extension("svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 5);

    // every ε is covered by one part and nothing can be packed
    let out = dir.path().join("scan.csv");
    let o = bin(&["scan", "--input", &path, "--eps-count", "3", "--n-max", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(column(&text, "scan", "n_upper"), [1.0; 3]);
    assert_eq!(column(&text, "scan", "m_lower"), [0.0; 3]);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let o = bin(&[
            "partition",
            "--input",
            "fixture:y-tree",
            "--eps-start",
            "0.3",
            "--format",
            "json",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        texts.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let v: serde_json::Value = serde_json::from_slice(&texts[0]).unwrap();
    assert_eq!(v["header"]["seed"], "7");
    assert_eq!(v["tables"][0]["rows"][0]["n_upper"], 4);
}

#[test]
fn sigma_csv_columns() {
    let o = bin(&["sigma", "--input", "fixture:path-0-4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (cols, rows) = parse_csv_table(&stdout(&o), "sigma").unwrap();
    assert_eq!(cols, ["k", "i", "mu", "sigma", "B"]);
    // Z_0 = [1, 2] on (0, 4): μ = 1, σ = 1
    assert!(rows.iter().any(|r| r[0] == "0" && r[3] == "1"));
}

#[test]
fn bounds_pass_on_y_tree() {
    let o = bin(&["bounds", "--input", "fixture:y-tree", "--eps-count", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (cols, rows) = parse_csv_table(&stdout(&o), "bounds").unwrap();
    let ok = cols.iter().position(|c| c == "ok").unwrap();
    assert!(rows.iter().all(|r| r[ok] != "false"));
    assert!(rows.iter().any(|r| r[0] == "interval_inf_e0"));
}
