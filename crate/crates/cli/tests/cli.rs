use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_memxbar");

const MINIMAL: &str = "[crossbar]\nn_rows = 2\nn_cols = 2\nconductance = { uniform = 1e-4 }\n";

const KEYSTONE: &str = r#"
[crossbar]
n_rows = 2
n_cols = 2
conductance = { matrix = [[1e-4, 2e-4], [3e-4, 4e-4]] }
drive = { values = [1.0, 0.5] }
"#;

const SMALL_RC: &str = r#"
[crossbar]
n_rows = 3
n_cols = 2
conductance = { random = { min = 1e-5, max = 1e-4 } }
[parasitics]
r_p = 2.0
c_p = 1e-15
r_t = 50.0
[analysis]
seed = 11
[analysis.sweep]
param = "r_t"
log_space = { start = 1.0, stop = 1e3, points = 4 }
metrics = ["bandwidth", "error_vm", "error_cm", "energy"]
[analysis.montecarlo]
n_samples = 20
g_rel_std = 0.02
"#;

fn memxbar(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Header and rows of a CSV result, skipping the comment preamble.
fn csv_table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    (split(body[0]), body[1..].iter().map(|l| split(l)).collect())
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn minimal_config_applies_defaults() {
    let dir = TempDir::new().unwrap();
    write(&dir, "min.toml", MINIMAL);
    let o = memxbar(dir.path(), &["dotprod", "--config", "min.toml", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json(&o);
    let cfg = &doc["config"];
    assert_eq!(cfg["device"]["g_off"].as_f64(), Some(1e-6));
    assert_eq!(cfg["device"]["g_on"].as_f64(), Some(1e-3));
    assert_eq!(cfg["crossbar"]["mode"], "voltage");
    assert_eq!(cfg["parasitics"]["r_t"].as_f64(), Some(0.0));
    assert_eq!(cfg["analysis"]["seed"].as_u64(), Some(0));
    // default drive 0.1 V on both rows: 2 × 1e-4 S × 0.1 V
    for row in doc["result"]["rows"].as_array().unwrap() {
        let i = row["ideal_a"].as_f64().unwrap();
        assert!((i - 2e-5).abs() < 1e-20, "{i}");
    }
}

#[test]
fn unknown_key_is_named() {
    let dir = TempDir::new().unwrap();
    write(&dir, "typo.toml", &MINIMAL.replace("n_rows", "n_row"));
    let o = memxbar(dir.path(), &["dotprod", "--config", "typo.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_row"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn nested_unknown_key_reports_path() {
    let dir = TempDir::new().unwrap();
    write(&dir, "typo.toml", &format!("{MINIMAL}[analysis.montecarlo]\nn_sample = 5\n"));
    let o = memxbar(dir.path(), &["dotprod", "--config", "typo.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("analysis.montecarlo") && err.contains("n_sample"), "{err}");
}

#[test]
fn parse_error_reports_line_and_column() {
    let dir = TempDir::new().unwrap();
    write(&dir, "bad.toml", "[crossbar]\nn_rows = = 2\n");
    let o = memxbar(dir.path(), &["dotprod", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("column"), "{err}");
}

#[test]
fn device_invariant_is_explained() {
    let dir = TempDir::new().unwrap();
    write(&dir, "dev.toml", &format!("[device]\ng_off = 1e-3\ng_on = 1e-6\n{MINIMAL}"));
    let o = memxbar(dir.path(), &["dotprod", "--config", "dev.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("g_off < g_on"), "{}", stderr(&o));
}

#[test]
fn dotprod_keystone_matches_hand_values() {
    let dir = TempDir::new().unwrap();
    write(&dir, "k.toml", KEYSTONE);
    // I_j = Σ g_ij V_i with V = [1, 0.5]
    let expected = [1e-4 + 0.5 * 3e-4, 2e-4 + 0.5 * 4e-4];
    let o = memxbar(dir.path(), &["dotprod", "--config", "k.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = csv_table(&stdout(&o));
    assert_eq!(head, ["column", "ideal_a", "simulated_a", "rel_diff"]);
    for (row, want) in rows.iter().zip(expected) {
        let ideal: f64 = row[1].parse().unwrap();
        let sim: f64 = row[2].parse().unwrap();
        assert!((ideal - want).abs() <= 1e-12 * want);
        assert!((sim - ideal).abs() <= 1e-9 * ideal, "{sim} vs {ideal}");
    }

    // current mode: each row's current divides in proportion to its conductances
    let o = memxbar(
        dir.path(),
        &["dotprod", "--config", "k.toml", "--set", "crossbar.mode=\"current\"", "--set", "crossbar.drive={values=[1e-6, 2e-6]}"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = csv_table(&stdout(&o));
    let expected = [1e-6 / 3.0 + 2e-6 * 3.0 / 7.0, 2e-6 / 3.0 + 2e-6 * 4.0 / 7.0];
    for (row, want) in rows.iter().zip(expected) {
        let sim: f64 = row[2].parse().unwrap();
        assert!((sim - want).abs() <= 1e-9 * want, "{sim} vs {want}");
    }
}

#[test]
fn presets_match_published_values_exactly() {
    let dir = TempDir::new().unwrap();
    let o = memxbar(dir.path(), &["presets"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = csv_table(&stdout(&o));
    assert_eq!(
        head,
        ["label", "a", "b", "c", "rmse", "unit", "z_in_ohm", "bandwidth_hz", "power_w", "vdd_v"]
    );
    type Row = (&'static str, f64, f64, f64, Option<f64>, &'static str, f64, f64, f64, f64);
    #[rustfmt::skip]
    let table: [Row; 4] = [
        ("vm-1.8", 1.754, -2.13e6, 4.963e-6, Some(0.06422), "volts", 243.0, 50e6, 100.8e-6, 1.8),
        ("cm-1.8", 4.917e-6, -2e6, 2.618e-6, Some(8.506e-9), "amperes", 200.0, 6.25e6, 40.5e-6, 1.8),
        ("cm-1.5", 4.917e-6, -2e6, 2.618e-6, None, "amperes", 126.0, 5.2e6, 33.75e-6, 1.5),
        ("cm-1.0", 4.917e-6, -2e6, 2.618e-6, None, "amperes", 274.0, 10e6, 12.5e-6, 1.0),
    ];
    assert_eq!(rows.len(), 4);
    let num = |s: &String| s.parse::<f64>().unwrap();
    for (row, (label, a, b, c, rmse, unit, z, bw, p, vdd)) in rows.iter().zip(table) {
        assert_eq!(row[0], label);
        assert_eq!([num(&row[1]), num(&row[2]), num(&row[3])], [a, b, c]);
        assert_eq!((!row[4].is_empty()).then(|| num(&row[4])), rmse);
        assert_eq!(row[5], unit);
        assert_eq!([num(&row[6]), num(&row[7]), num(&row[8]), num(&row[9])], [z, bw, p, vdd]);
    }
}

#[test]
fn fit_sigmoid_recovers_planted_parameters() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (4.917e-6, -2e6, 2.618e-6);
    let mut text = String::from("x,y\n");
    for k in 0..200 {
        let x = c + (k as f64 / 199.0 - 0.5) * 8e-6;
        let y = a / (1.0 + (b * (x - c)).exp());
        text.push_str(&format!("{x:.17e},{y:.17e}\n"));
    }
    write(&dir, "samples.csv", &text);
    let o = memxbar(dir.path(), &["fit-sigmoid", "--input", "samples.csv", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json(&o);
    let row = &doc["result"]["rows"][0];
    for (key, truth) in [("a", a), ("b", b), ("c", c)] {
        let got = row[key].as_f64().unwrap();
        assert!(((got - truth) / truth).abs() < 1e-3, "{key}: {got} vs {truth}");
    }
    assert!(row["rmse"].as_f64().unwrap() < 1e-9 * a);
    assert_eq!(doc["result"]["samples"].as_u64(), Some(200));
}

#[test]
fn fit_sigmoid_rejects_garbage_rows() {
    let dir = TempDir::new().unwrap();
    write(&dir, "bad.csv", "x,y\n1,2\n3,oops\n");
    let o = memxbar(dir.path(), &["fit-sigmoid", "--input", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

fn rerun_is_bit_identical(command: &str, ext: &str) {
    let dir = TempDir::new().unwrap();
    write(&dir, "rc.toml", SMALL_RC);
    let first = format!("first.{ext}");
    let second = format!("second.{ext}");
    let o = memxbar(dir.path(), &[command, "--config", "rc.toml", "--format", ext, "--out", &first]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = memxbar(dir.path(), &[command, "--config", &first, "--out", &second]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = fs::read(dir.path().join(&first)).unwrap();
    let b = fs::read(dir.path().join(&second)).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "{command} {ext} re-run differs");
}

#[test]
fn sweep_csv_reruns_bit_identically() {
    rerun_is_bit_identical("sweep", "csv");
}

#[test]
fn montecarlo_json_reruns_bit_identically() {
    rerun_is_bit_identical("montecarlo", "json");
}

#[test]
fn energy_csv_reruns_bit_identically() {
    rerun_is_bit_identical("energy", "csv");
}

#[test]
fn sweep_csv_layout() {
    let dir = TempDir::new().unwrap();
    write(&dir, "rc.toml", SMALL_RC);
    let o = memxbar(dir.path(), &["sweep", "--config", "rc.toml", "--values", "1,10", "--metrics", "error_vm,energy"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = csv_table(&stdout(&o));
    assert_eq!(head, ["r_t_ohm", "error_vm", "energy_j"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "1.0000000000000000e1");
    for r in &rows {
        // 17 significant digits: one leading digit, sixteen after the point
        let mantissa = r[1].split('e').next().unwrap();
        assert_eq!(mantissa.split('.').nth(1).unwrap().len(), 16, "{}", r[1]);
    }
}

#[test]
fn writes_only_to_the_output_path() {
    let dir = TempDir::new().unwrap();
    write(&dir, "rc.toml", SMALL_RC);
    fs::create_dir(dir.path().join("out")).unwrap();
    for cmd in ["dotprod", "sweep", "bandwidth", "energy", "montecarlo", "presets"] {
        let out = format!("out/{cmd}.csv");
        let o = memxbar(dir.path(), &[cmd, "--config", "rc.toml", "--out", &out]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{cmd} wrote to stdout");
    }
    let mut top: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["out", "rc.toml"]);
    assert_eq!(fs::read_dir(dir.path().join("out")).unwrap().count(), 6);
}

#[test]
fn neuron_transfer_uses_preset() {
    let dir = TempDir::new().unwrap();
    let o = memxbar(dir.path(), &["neuron-transfer", "--preset", "cm-1.8", "--currents", "2.618e-6,1e-3,-1e-3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = csv_table(&stdout(&o));
    assert_eq!(head, ["index", "current_a", "output_a"]);
    let y: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(y[0], 4.917e-6 / 2.0);
    assert_eq!(y[1], 4.917e-6);
    assert_eq!(y[2], 0.0);
}

#[test]
fn exit_codes_are_disjoint() {
    let dir = TempDir::new().unwrap();
    write(&dir, "rc.toml", SMALL_RC);
    let code = |args: &[&str]| memxbar(dir.path(), args).status.code();

    assert_eq!(code(&["presets"]), Some(0));
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["--version"]), Some(0));

    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["dotprod", "--config", "missing.toml"]), Some(1));
    assert_eq!(code(&["dotprod"]), Some(1), "no crossbar block");
    assert_eq!(code(&["neuron-transfer", "--preset", "cm-9.9", "--currents", "1e-6"]), Some(1));
    assert_eq!(code(&["dotprod", "--config", "rc.toml", "--set", "parasitics.r_t=-1"]), Some(1));

    // a terminal so large the column nodes float: the factorization breaks down
    let singular = ["dotprod", "--config", "rc.toml", "--set", "crossbar.mode=\"current\"", "--set", "parasitics.r_t=1e308"];
    assert_eq!(code(&singular), Some(2));

    let timeout = [
        "energy",
        "--config",
        "rc.toml",
        "--set",
        "analysis.energy.window={kind=\"settle\", rel=1e-3, max_time=1e-15}",
    ];
    assert_eq!(code(&timeout), Some(3));
}

#[test]
fn shipped_example_config_loads() {
    let example = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let dir = TempDir::new().unwrap();
    let o = memxbar(dir.path(), &["dotprod", "--config", example.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = csv_table(&stdout(&o));
    assert_eq!(rows.len(), 8);
}
