use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use specpol_cli::artifact::{read_point_set, read_points_csv, sha256_hex, Kind, RunManifest, SCHEMA};

fn specpol(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specpol"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("SPECPOL_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = specpol(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn manifest(path: &Path) -> RunManifest {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn constant_first_order_spectrum_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["spec1", "--model", "const:3", "--N", "7", "--assert"]);
    let f = read_point_set(&dir.path().join("spec1_const3_N7.json")).unwrap();
    assert_eq!(f.schema, SCHEMA);
    assert_eq!((f.n, f.kind), (7, Kind::FirstOrder));
    assert_eq!(f.points.len(), 7);
    assert!(f.points.iter().all(|p| (p.re - 3.0).abs() < 1e-12 && p.im == 0.0));
    assert_eq!(f.manifest, "spec1_const3.manifest.json");
}

#[test]
fn constant_second_order_points_collapse() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["spec2", "--model", "const:2", "--N", "5", "--assert"]);
    let f = read_point_set(&dir.path().join("spec2_const2_N5.json")).unwrap();
    assert_eq!(f.kind, Kind::SecondOrder);
    assert_eq!(f.points.len(), 10);
    assert!(f.points.iter().all(|p| (p.z() - specpol::c64::new(2.0, 0.0)).norm() < 1e-6));
}

#[test]
fn manifest_checksums_match_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["spec2", "--model", "A", "--N", "21,22"]);
    let m = manifest(&dir.path().join("spec2_A.manifest.json"));
    assert_eq!(m.n_values, vec![21, 22]);
    assert_eq!(m.artifacts.len(), 4);
    for a in &m.artifacts {
        let bytes = fs::read(dir.path().join(&a.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), a.sha256, "{}", a.path);
    }
}

#[test]
fn csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["spec2", "--model", "B", "--N", "31", "--y", "1/3"]);
    let json = read_point_set(&dir.path().join("spec2_B-y1of3_N31.json")).unwrap();
    let csv = read_points_csv(&dir.path().join("spec2_B-y1of3_N31.csv")).unwrap();
    assert_eq!(json.points, csv);
    let sorted = json
        .points
        .windows(2)
        .all(|w| (w[0].re, w[0].im) <= (w[1].re, w[1].im));
    assert!(sorted);
    assert_eq!(json.enclosures.len(), json.points.len());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["spec2", "--model", "H", "--space", "MxL", "--N", "8,12,16"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    let m = manifest(&a.path().join("spec2_H-MxL.manifest.json"));
    assert_eq!(m.artifacts.len(), 6);
    for art in &m.artifacts {
        let x = fs::read(a.path().join(&art.path)).unwrap();
        let y = fs::read(b.path().join(&art.path)).unwrap();
        assert!(x == y, "{} differs", art.path);
    }
    let mut m2 = manifest(&b.path().join("spec2_H-MxL.manifest.json"));
    m2.wall_time_s = m.wall_time_s;
    assert_eq!(m, m2);
}

#[test]
fn seedless_prints_manifest_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let text = ok(&out, &["--seedless", "spec1", "--model", "A", "--N", "1001"]);
    let m: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!((m.command.as_str(), m.n_values.as_slice()), ("spec1", &[1001][..]));
    assert!(m.artifacts.is_empty());
    assert!(!out.exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| specpol(dir.path(), args).status.code();
    assert_eq!(code(&["spec1", "--model", "H", "--N", "10"]), Some(2));
    assert_eq!(code(&["spec1", "--model", "A", "--N", "10", "--y", "2/4"]), Some(2));
    assert_eq!(code(&["spec2", "--model", "H", "--space", "LxL", "--N", "10"]), Some(2));
    assert_eq!(code(&["spec1", "--model", "A", "--N", "0"]), Some(2));
    assert_eq!(code(&["converge", "--space", "L2xL2", "--N", "8,16", "--assert"]), Some(2));
    assert_eq!(code(&["spec1", "--model", "const:3", "--N", "7", "--tol", "1e-30", "--assert"]), Some(4));
    assert_eq!(code(&["spec1", "--model", "const:3", "--N", "7", "--tol", "1e-30"]), Some(0));
}

#[test]
fn stokes_linear_element_counts() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["spec1", "--model", "H", "--space", "LxL", "--N", "100"]);
    let f = read_point_set(&dir.path().join("spec1_H-LxL_N100.json")).unwrap();
    let low = f.points.iter().filter(|p| p.re <= 1.0).count();
    let high = f.points.iter().filter(|p| p.re >= 2.0).count();
    assert_eq!((low, f.points.len() - low - high, high), (15, 86, 99));
}

#[test]
fn explicit_window() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["spec1", "--model", "A", "--window", "-50:50"]);
    let f = read_point_set(&dir.path().join("spec1_A_W-50_50.json")).unwrap();
    assert_eq!(f.n, 101);
    assert_eq!(f.model.window, Some((-50, 50)));
    let gap: Vec<f64> = f.points.iter().map(|p| p.re).filter(|x| x.abs() < 1.0).collect();
    assert_eq!(gap.len(), 3);
    assert!((gap[0] + 0.9264).abs() < 2e-3);
}

#[test]
fn tables_reproduce_references() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["tables", "--assert"]);
    assert!(text.contains("assert: all checks passed"));
    let csv = fs::read_to_string(dir.path().join("tables_table1.csv")).unwrap();
    assert!(csv.starts_with("N=101,N=401,N=701,N=1001\n"));
    let m = manifest(&dir.path().join("tables.manifest.json"));
    assert_eq!(m.artifacts.len(), 7);
}

#[test]
fn constructions_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["pollute", "--lambda", "-0.5", "--k", "2", "--assert"]);
    ok(dir.path(), &["push", "--epsilon", "0.5", "--R", "10", "--assert"]);
    ok(dir.path(), &["converge", "--space", "LxL", "--N", "16,32,64", "--k", "1", "--assert"]);
    let slopes = fs::read_to_string(dir.path().join("converge_LxL_slopes.csv")).unwrap();
    assert!(slopes.starts_with("branch,k,target,slope,im_slope\n"));
    assert_eq!(slopes.lines().count(), 3);
}

#[test]
fn classify_constant_and_report_note() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["classify", "--model", "const:3", "--N", "7", "--assert"]);
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("classify_const3_N7.json")).unwrap()).unwrap();
    assert!(v["note"].as_str().unwrap().contains("not proven spurious"));
    assert_eq!(v["report"]["entries"].as_array().unwrap().len(), 7);
}
