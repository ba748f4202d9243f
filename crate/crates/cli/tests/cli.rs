use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn finepot(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finepot"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn csv_value(path: &Path, quantity: &str) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let line = text
        .lines()
        .find(|l| l.split(',').nth(1) == Some(quantity))
        .unwrap_or_else(|| panic!("{quantity} missing"));
    line.split(',').nth(2).unwrap().parse().unwrap()
}

#[test]
fn linear_dirichlet_energy_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = finepot(&["solve", "--config", &config("linear1d.toml")], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let energy = csv_value(&dir.path().join("summary.csv"), "energy");
    assert!((energy - 1.0).abs() <= 1e-10, "energy {energy}");
    let solution = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(solution.starts_with("seed,"));
}

#[test]
fn outputs_are_deterministic_and_hashed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = finepot(
            &[
                "solve",
                "--config",
                &config("obstacle2d.toml"),
                "--seed",
                "9",
            ],
            d.path(),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let manifest: toml::Table =
        toml::from_str(&std::fs::read_to_string(a.path().join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["status"].as_str(), Some("ok"));
    assert_eq!(manifest["seed"].as_integer(), Some(9));
    let outputs = manifest["outputs"].as_table().unwrap();
    assert!(!outputs.is_empty());
    for (name, hash) in outputs {
        let bytes = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(
            hex::encode(Sha256::digest(&bytes)),
            hash.as_str().unwrap(),
            "{name}"
        );
        assert_eq!(
            bytes,
            std::fs::read(b.path().join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
}

#[test]
fn invalid_swiss_parameters_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = finepot(
        &["swisscheese", "--config", &config("swiss_invalid.toml")],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("α > n/(n−p)"), "{stderr}");
    let record: toml::Table =
        toml::from_str(&std::fs::read_to_string(dir.path().join("error.toml")).unwrap()).unwrap();
    assert_eq!(record["error"]["command"].as_str(), Some("swisscheese"));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("partial"));
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = finepot(&["capacity"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs --config"));
}

#[test]
fn every_example_config_runs() {
    let cases = [
        ("capacity", "annulus.toml"),
        ("adams", "adams.toml"),
        ("mazya", "mazya.toml"),
        ("wiener", "wiener.toml"),
        ("swisscheese", "swiss.toml"),
        ("fineint", "swiss.toml"),
        ("transmission", "transmission.toml"),
        ("oned", "oned.toml"),
    ];
    for (command, file) in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = finepot(&[command, "--config", &config(file), "--quick"], dir.path());
        assert!(
            out.status.success(),
            "{command}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(dir.path().join("manifest.toml").exists());
    }
}

#[test]
fn transmission_refinement_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = finepot(
        &[
            "transmission",
            "--config",
            &config("transmission.toml"),
            "--refine",
            "3",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("refinement.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "observed_order").unwrap();
    let last = rows.records().last().unwrap().unwrap();
    let order: f64 = last[col].parse().unwrap();
    assert!(order > 1.8, "observed order {order}");
}

#[test]
fn quick_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = finepot(&["suite", "--quick", "--seed", "3"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "{stdout}{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        stdout.lines().filter(|l| l.contains("PASS")).count(),
        12,
        "{stdout}"
    );
    let table = std::fs::read_to_string(dir.path().join("suite.csv")).unwrap();
    assert!(table.starts_with("seed,criterion,passed,quantity,value,reference,tolerance"));
}
