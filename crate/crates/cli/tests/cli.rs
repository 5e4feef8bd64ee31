use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn resonorm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resonorm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn resonorm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const GOLDEN: &str = "1, (1+sqrt5)/2";

#[test]
fn psi_lists_golden_breakpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = resonorm(&["psi", "--omega", GOLDEN, "--qmax", "10"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(text.lines().next(), Some("q,psi,witness"));
    let q: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(q, ["1", "2", "3", "5", "8"]);
    let psi2: f64 = rows[1][1].parse().unwrap();
    assert!((psi2 - (1.5 + 1.25f64.sqrt())).abs() < 1e-14);
    let psi1: f64 = rows[0][1].parse().unwrap();
    assert!((psi1 - (0.5 + 1.25f64.sqrt())).abs() < 1e-14);
}

#[test]
fn psi_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = resonorm(&["psi", "--omega", GOLDEN, "--qmax", "3", "--out", "psi.csv"], dir.path());
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("psi.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn approx_reports_unimodular_basis() {
    let dir = tempfile::tempdir().unwrap();
    let out = resonorm(&["approx", "--omega", GOLDEN, "--Q", "20"], dir.path());
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["det"].as_i64().map(i64::abs), Some(1));
    assert_eq!(doc["vectors"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "omega = \"1, 2\"\nfamily = \"dem\"\n").unwrap();
    let out = resonorm(&["stab", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");

    let out = resonorm(&["split", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = resonorm(&["psi", "--omega", "1, x", "--qmax", "5"], dir.path());
    assert_eq!(out.status.code(), Some(2), "malformed frequency");
}

const SMALL_F: &str = "2 1.0 8 2
1 0 0 0 0.00005 0
-1 0 0 0 0.00005 0
1 -1 1 0 0.00002 0
-1 1 1 0 0.00002 0
0 1 0 1 0.00003 0
0 -1 0 1 0.00003 0
";

#[test]
fn nf_with_zero_steps_returns_the_input() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.poly"), SMALL_F).unwrap();
    let args = ["nf", "--omega", GOLDEN, "--ham", "f.poly", "--k", "4", "--kappa", "0", "--out", "o"];
    let out = resonorm(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    let f = resonorm::TrigPoly::from_text(SMALL_F).unwrap();
    let rem = resonorm::TrigPoly::from_text(&fs::read_to_string(o.join("remainder.poly")).unwrap()).unwrap();
    let terms = |p: &resonorm::TrigPoly| p.terms().map(|(k, a, c)| (k.to_vec(), a.to_vec(), *c)).collect::<Vec<_>>();
    assert_eq!(terms(&rem), terms(&f));
    let ledger = fs::read_to_string(o.join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 1);
}

#[test]
fn nf_threshold_exit_code_and_record_mode() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.poly"), SMALL_F).unwrap();
    let base = ["nf", "--omega", GOLDEN, "--ham", "f.poly", "--k", "4", "--kappa", "2", "--out", "o"];
    let out = resonorm(&base, dir.path());
    assert_eq!(out.status.code(), Some(3));

    let mut args = base.to_vec();
    args.push("--record");
    let out = resonorm(&args, dir.path());
    assert!(out.status.success());
    let o = dir.path().join("o");
    let ledger = fs::read_to_string(o.join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 5);
    assert!(o.join("generator_04.poly").exists());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(o.join("ledger.json")).unwrap()).unwrap();
    assert_eq!(doc["ledger"]["steps"].as_array().unwrap().len(), 4);
}

const SPLIT: &str = "varpi = \"1/4\"
lambda = 0.01
mu = 1e-4
out = \"split\"
[manifold]
fibers = 16
phases = 12
fourier_degree = 4
";

#[test]
fn split_single_writes_meshes_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("split.toml"), SPLIT).unwrap();
    let out = resonorm(&["split", "--config", "split.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("split");
    for f in ["mesh_unstable.csv", "mesh_stable.csv", "s_unstable.csv", "s_stable.csv"] {
        assert!(o.join(f).exists(), "{f}");
    }
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(o.join("splitting.json")).unwrap()).unwrap();
    let t = doc["splitting"]["tangential"].as_f64().unwrap();
    assert!(t.abs() > 1e-5 && t.abs() < 1e-3, "{t}");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = SPLIT.replace("mu = 1e-4", "mode = \"mu-sweep\"\nmus = [1e-4, 1e-3]");
    fs::write(dir.path().join("a.toml"), &sweep).unwrap();
    fs::write(dir.path().join("b.toml"), sweep.replace("out = \"split\"", "out = \"split2\"")).unwrap();
    let serial = resonorm(&["--threads", "1", "split", "--config", "a.toml"], dir.path());
    let parallel = resonorm(&["--threads", "3", "split", "--config", "b.toml"], dir.path());
    assert!(serial.status.success() && parallel.status.success());
    let a = fs::read(dir.path().join("split/mu_sweep.csv")).unwrap();
    let b = fs::read(dir.path().join("split2/mu_sweep.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn check_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = resonorm(&["check", "--criterion", "3", "--criterion", "6", "--json", "c.json"], dir.path());
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("criterion  3 PASS"), "{text}");
    assert!(text.contains("criterion  6 PASS"), "{text}");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 2);
}
