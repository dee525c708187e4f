//! End-to-end runs of the binary: exit codes, model error collection,
//! format selection, report files.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dualmetric"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn flat_model_all_applicable_pass() {
    let out = bin()
        .args(["--model"])
        .arg(fixture("flat2d.model"))
        .arg("--all")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("christoffel"));
    assert!(!text.contains(" fail "));
}

#[test]
fn unknown_suite_is_usage_error() {
    let out = bin()
        .args(["--model"])
        .arg(fixture("flat2d.model"))
        .args(["--suite", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown suite"));
}

#[test]
fn missing_suite_selection_is_usage_error() {
    let out = bin()
        .args(["--model"])
        .arg(fixture("flat2d.model"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn model_errors_are_collected_not_first_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.model");
    std::fs::write(
        &path,
        r#"
[chart]
names = x, y
domain = -1 1, -1 1

[metric]
g11 = "1"
g22 = "1"
g33 = "1"

[contravariant]
kind = factorized
v = "1", "2", "3"

[nonsense]
key = value
"#,
    )
    .unwrap();
    let out = bin().args(["--model"]).arg(&path).arg("--all").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    // dimension error in the metric, dimension error in v, unknown block:
    // all three reported in one run
    assert!(err.contains("g33"), "{err}");
    assert!(err.contains("3 entries"), "{err}");
    assert!(err.contains("unknown block"), "{err}");
}

#[test]
fn failing_check_yields_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad_adm.model");
    // shift raised with the wrong block makes the assembled pair non-inverse
    std::fs::write(
        &path,
        r#"
[chart]
names = t, x, y, z
domain = -1 1, -1 1, -1 1, -1 1

[metric]
g11 = "-1"
g22 = "1"
g33 = "1"
g44 = "1"

[hydro]
u = "2", "0", "0", "0"
normalized = true
"#,
    )
    .unwrap();
    let out = bin()
        .args(["--model"])
        .arg(&path)
        .args(["--suite", "hydro"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn records_format_and_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.txt");
    let out = bin()
        .args(["--model"])
        .arg(fixture("polar.model"))
        .args(["--suite", "christoffel,ricci", "--format", "records", "--report"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("check=christoffel verdict=pass"));
    let file = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(stdout, file);
}

#[test]
fn report_order_follows_catalog_not_flag_order() {
    let out = bin()
        .args(["--model"])
        .arg(fixture("polar.model"))
        .args(["--suite", "ricci,christoffel", "--format", "records"])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let christoffel = stdout.find("check=christoffel").unwrap();
    let ricci = stdout.find("check=ricci").unwrap();
    assert!(christoffel < ricci);
}

#[test]
fn cubic_fixture_reconstructs() {
    let out = bin()
        .args(["--model"])
        .arg(fixture("cubic4d.model"))
        .args(["--suite", "cubic55", "--format", "records"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("check=cubic55 verdict=pass"), "{stdout}");
}

#[test]
fn nonlinear_map_checks_pass() {
    let out = bin()
        .args(["--model"])
        .arg(fixture("map_product.model"))
        .args(["--suite", "affine-a8,twodim-cases", "--format", "records"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("check=affine-a8 verdict=pass"));
    assert!(stdout.contains("bracket: non-constant"));
}

#[test]
fn adm_fixture_passes() {
    let out = bin()
        .args(["--model"])
        .arg(fixture("adm.model"))
        .args(["--suite", "adm", "--format", "records"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("check=adm verdict=pass"), "{stdout}");
}

#[test]
fn table_flag_writes_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("table.tsv");
    let out = bin()
        .args(["--model"])
        .arg(fixture("polar.model"))
        .args(["--suite", "ricci", "--table"])
        .arg(&table_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let tsv = std::fs::read_to_string(&table_path).unwrap();
    assert!(tsv.starts_with("check\tsample\tvalue\n"));
    assert!(tsv.lines().count() > 100);
}

#[test]
fn halved_convention_flag_changes_outcomes() {
    // the collapse of the general residual needs the plain two-term
    // expansion; the halved convention breaks it, which must surface as a
    // failure rather than silence
    let paper = bin()
        .args(["--model"])
        .arg(fixture("sphere.model"))
        .args(["--suite", "reparam-general"])
        .output()
        .unwrap();
    assert_eq!(paper.status.code(), Some(0), "{paper:?}");
    let halved = bin()
        .args(["--model"])
        .arg(fixture("sphere.model"))
        .args(["--suite", "reparam-general", "--convention", "halved"])
        .output()
        .unwrap();
    assert_eq!(halved.status.code(), Some(1), "{halved:?}");
}
