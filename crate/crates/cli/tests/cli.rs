use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const ZETA_THREE_HALVES: f64 = 2.612375348685488;

fn qj(args: &[&str]) -> Output {
    qj_env(args, &[])
}

fn qj_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qj"));
    cmd.args(args).env_remove("QJ_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn record(o: &Output) -> Vec<(String, String)> {
    stdout(o)
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().to_string(), it.next().unwrap().to_string())
        })
        .collect()
}

fn field(rec: &[(String, String)], key: &str) -> f64 {
    rec.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no field {key}")).1.parse().unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn bose_free_energy_record() {
    let o = qj(&["free-energy", "--stats", "bose", "--beta", "1", "--rho", "0.03", "--alpha", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec = record(&o);
    let rho_c = (4.0 * std::f64::consts::PI).powf(-1.5) * ZETA_THREE_HALVES;
    assert!((field(&rec, "rho_c") / rho_c - 1.0).abs() < 1e-11);
    assert!(field(&rec, "rho") < field(&rec, "rho_c"));
    // Bosons: positive exchange term.
    assert!(field(&rec, "exchange") > 0.0);
    for (_, v) in rec.iter().skip(2) {
        // d.ddddddddddde±x: twelve significant digits.
        let mantissa = v.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 12, "{v}");
    }
}

#[test]
fn zero_coupling_total_is_ideal() {
    let o = qj(&["free-energy", "--beta", "2", "--rho", "0.5", "--alpha", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let rec = record(&o);
    let text = |k: &str| rec.iter().find(|(key, _)| key == k).unwrap().1.clone();
    assert_eq!(text("total"), text("f0"));
}

#[test]
fn condensed_bose_exits_two() {
    let o = qj(&["free-energy", "--stats", "bose", "--rho", "0.06", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rho_c"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn invalid_flags_exit_64() {
    for args in [
        &["free-energy", "--beta", "1", "--rho", "1", "--bogus", "3"][..],
        &["free-energy", "--beta", "1"],
        &["free-energy", "--beta", "-1", "--rho", "1"],
        &["free-energy", "--stats", "anyon", "--beta", "1", "--rho", "1"],
        &["scan", "--beta", "1", "--beta-rho23", "1", "--rho-min", "1", "--rho-max", "2", "--points", "2"],
        &["scan", "--beta", "1", "--rho-min", "1", "--rho-max", "2", "--points", "0"],
        &["verify", "nonsense"],
    ] {
        let o = qj(args);
        assert_eq!(o.status.code(), Some(64), "{args:?}: {}", stderr(&o));
    }
    let o = qj_env(&["fugacity", "--beta", "1", "--rho", "1"], &[("QJ_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn help_exits_zero() {
    let o = qj(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["free-energy", "scan", "verify", "fugacity", "exchange", "decompose"] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
}

#[test]
fn fixed_reduced_temperature_scan_has_constant_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let p = path.to_str().unwrap();
    let o = qj(&["scan", "--beta-rho23", "1", "--rho-min", "1e2", "--rho-max", "1e6", "--points", "9", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let (header, rows) = parse_csv(&text);
    assert_eq!(
        header,
        ["rho", "beta", "z", "f0", "exchange", "total", "f0_over_rho53", "exchange_over_rho43", "status"]
    );
    assert_eq!(rows.len(), 9);
    let col = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    for r in &rows {
        assert_eq!(r[8], "ok");
        let rho = col(r, 0);
        assert!((col(r, 1) * rho.powf(2.0 / 3.0) - 1.0).abs() < 1e-12);
        for i in [6, 7] {
            assert!((col(r, i) / col(&rows[0], i) - 1.0).abs() < 1e-9, "column {i}");
        }
        assert!((col(r, 3) + col(r, 4) - col(r, 5)).abs() <= 1e-14 * col(r, 3).abs());
        assert!(col(r, 4) < 0.0);
    }
    assert_eq!(col(&rows[0], 0), 1e2);
    assert_eq!(col(&rows[8], 0), 1e6);
}

#[test]
fn single_point_scan_matches_free_energy() {
    let fe = qj(&["free-energy", "--beta", "0.7", "--rho", "0.2", "--format", "json"]);
    assert_eq!(fe.status.code(), Some(0));
    let fe: Value = serde_json::from_str(&stdout(&fe)).unwrap();
    let fe = &fe["rows"][0];
    let scan = qj(&["scan", "--beta", "0.7", "--rho-min", "0.2", "--rho-max", "0.2", "--points", "1"]);
    assert_eq!(scan.status.code(), Some(0));
    let (header, rows) = parse_csv(&stdout(&scan));
    assert_eq!(rows.len(), 1);
    for key in ["rho", "beta", "z", "f0", "exchange", "total"] {
        let i = header.iter().position(|h| h == key).unwrap();
        assert_eq!(rows[0][i].parse::<f64>().unwrap(), fe[key].as_f64().unwrap(), "{key}");
    }
}

#[test]
fn json_scan_keys_match_csv_header() {
    let args = ["scan", "--stats", "bose", "--beta", "2", "--rho-min", "1e-3", "--rho-max", "1e-2", "--points", "3"];
    let csv = qj(&args);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let json = qj(&json_args);
    assert_eq!(json.status.code(), Some(0));
    let (header, rows) = parse_csv(&stdout(&csv));
    let doc: Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert!(doc["meta"].is_object());
    let objs = doc["rows"].as_array().unwrap();
    assert_eq!(objs.len(), 3);
    for (obj, row) in objs.iter().zip(&rows) {
        let mut keys: Vec<&String> = obj.as_object().unwrap().keys().collect();
        let mut expected: Vec<&String> = header.iter().collect();
        keys.sort();
        expected.sort();
        assert_eq!(keys, expected);
        assert_eq!(obj["total"].as_f64().unwrap(), row[5].parse::<f64>().unwrap());
    }
}

#[test]
fn bose_guard_rejects_scan_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let p = path.to_str().unwrap();
    // ρ_c(1) ≈ 0.0586 lies inside the grid.
    let o = qj(&["scan", "--stats", "bose", "--beta", "1", "--rho-min", "0.01", "--rho-max", "0.1", "--points", "5", "--out", p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rho_c"));
    assert!(!path.exists());
    // βρ^{2/3} = 1 exceeds ζ(3/2)^{2/3}/4π for every density.
    let o = qj(&["scan", "--stats", "bose", "--beta-rho23", "1", "--rho-min", "1", "--rho-max", "10", "--points", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# state point\nbeta = 0.7\nrho = 0.2\nalpha = 0.5\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = record(&qj(&["--config", c, "free-energy"]));
    let explicit = record(&qj(&["free-energy", "--beta", "0.7", "--rho", "0.2", "--alpha", "0.5"]));
    assert_eq!(from_file, explicit);
    let overridden = record(&qj(&["free-energy", "--config", c, "--alpha", "0.25"]));
    assert_eq!(field(&overridden, "alpha"), 0.25);
    assert_eq!(field(&overridden, "rho"), 0.2);

    std::fs::write(&cfg, "temperature = 3\n").unwrap();
    assert_eq!(qj(&["--config", c, "free-energy"]).status.code(), Some(64));
    assert_eq!(qj(&["--config", "/nonexistent/qj.conf", "free-energy"]).status.code(), Some(64));
}

#[test]
fn fugacity_and_exchange_agree_with_free_energy() {
    let args = ["--stats", "fermi", "--n", "2", "--beta", "1.5", "--rho", "0.4", "--alpha", "0.3"];
    let fe = record(&qj(&[&["free-energy"][..], &args].concat()));
    let fu = record(&qj(&[&["fugacity"][..], &args].concat()));
    let ex = record(&qj(&[&["exchange"][..], &args].concat()));
    assert_eq!(field(&fe, "z"), field(&fu, "z"));
    assert_eq!(field(&fe, "exchange"), field(&ex, "exchange"));
    assert!((field(&fu, "mu") - field(&fu, "ln_z") / 1.5).abs() < 1e-11 * field(&fu, "mu").abs().max(1.0));
    assert!(field(&ex, "route_gap") < 1e-6);
    // Fermions: -(αn/2) I.
    let expected = -0.5 * 0.3 * 2.0 * field(&ex, "integral");
    assert!((field(&ex, "exchange") / expected - 1.0).abs() < 1e-10);
}

#[test]
fn decompose_table_sums_to_coulomb() {
    let o = qj(&["decompose", "--radius", "0.5", "--points", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["s", "short", "long", "coulomb"]);
    assert_eq!(rows.len(), 40);
    for r in &rows {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[1] + v[2] - 1.0 / v[0]).abs() < 1e-12 / v[0]);
        assert!(v[1] >= 0.0 && v[2] >= 0.0);
        if v[0] >= 1.0 {
            assert_eq!(v[1], 0.0);
        }
    }
}

fn verify_report(args: &[&str], env: &[(&str, &str)], out: &Path) -> (Output, String) {
    let mut full = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let o = qj_env(&full, env);
    let text = std::fs::read_to_string(out).unwrap();
    (o, text)
}

#[test]
fn verify_lemmas_and_decomposition_pass() {
    let o = qj(&["verify", "lemmas"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["report"]["violations"], 0);
    assert_eq!(doc["meta"]["suite"], "lemmas");

    let o = qj(&["verify", "decomposition"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks = doc["report"]["checks"].as_array().unwrap();
    let recon = checks.iter().find(|c| c["name"] == "ball reconstruction").unwrap();
    assert_eq!(recon["violations"], 0);
    // Margin is 1e-8 minus the residual.
    assert!(recon["worst_margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn verify_all_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, first) = verify_report(&["verify", "all", "--seed", "42"], &[("QJ_THREADS", "1")], &dir.path().join("a.json"));
    let (b, second) = verify_report(&["verify", "all", "--seed", "42"], &[], &dir.path().join("b.json"));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(first, second);
    let doc: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(doc["report"]["seed"], 42);
    assert_eq!(doc["report"]["violations"], 0);
}
