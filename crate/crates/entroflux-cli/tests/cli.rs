use std::path::PathBuf;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn entroflux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entroflux"))
        .args(args)
        .env_remove("ENTROFLUX_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = entroflux(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, body)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("entroflux-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const SMALL_CHAIN: [&str; 4] = ["--n", "4", "--m", "40"];

#[test]
fn equilibrium_chain_has_no_entropy_production() {
    let mut args = vec![
        "chain-sigma",
        "--beta-l",
        "1",
        "--beta-r",
        "1",
        "--t-max",
        "30",
        "--dt",
        "5",
    ];
    args.extend(SMALL_CHAIN);
    let (header, body) = rows(&stdout(&args));
    assert_eq!(header, ["t", "mean_ep", "steady_ref"]);
    assert_eq!(body.len(), 7);
    for r in body {
        assert!(r[1].abs() <= 1e-10);
        assert_eq!(r[2], 0.0);
    }
}

#[test]
fn csv_floats_carry_seventeen_digits() {
    let mut args = vec!["chain-sigma", "--t-max", "4", "--dt", "2"];
    args.extend(SMALL_CHAIN);
    let text = stdout(&args);
    let line = text.lines().nth(2).unwrap();
    for field in line.split(',') {
        let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}

#[test]
fn reruns_are_byte_identical_and_manifests_match() {
    let (a, b) = (scratch("a.csv"), scratch("b.csv"));
    for p in [&a, &b] {
        let mut args = vec![
            "chain-eofalpha",
            "--times",
            "5,10",
            "--points",
            "5",
            "--out",
            p.to_str().unwrap(),
        ];
        args.extend(SMALL_CHAIN);
        stdout(&args);
    }
    let (ba, bb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ba, bb);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scratch("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "chain-eofalpha");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["params"]["command"]["times"], serde_json::json!([5.0, 10.0]));
    let digest: String = Sha256::digest(&ba).iter().map(|x| format!("{x:02x}")).collect();
    assert_eq!(manifest["outputs"][0]["sha256"], digest.as_str());
    assert_eq!(manifest["outputs"][0]["bytes"], ba.len());
}

#[test]
fn eofalpha_vanishes_exactly_at_the_endpoints() {
    let mut args = vec!["chain-eofalpha", "--times", "5,10", "--points", "3"];
    args.extend(SMALL_CHAIN);
    let (header, body) = rows(&stdout(&args));
    assert_eq!(header, ["alpha", "e_t/t@5", "e_t/t@10", "e_closed"]);
    for r in [&body[0], &body[2]] {
        assert!(r[1..].iter().all(|&x| x == 0.0));
    }
    assert!(body[1][1..].iter().all(|&x| x < 0.0));
}

#[test]
fn rate_minimum_sits_at_the_mean_current() {
    let (_, body) = rows(&stdout(&["chain-rate", "--points", "601"]));
    let min = body.iter().min_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    let flux = (5f64.sqrt() - 1.0) / (2.0 * std::f64::consts::PI) * (2.0 - 1.0);
    assert!((min[0] - flux).abs() <= 0.002 + 1e-12, "{} vs {flux}", min[0]);
    let eq_min = body.iter().min_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert!(eq_min[0].abs() < 1e-12);
}

#[test]
fn qsys_verify_passes() {
    let out = entroflux(&["qsys-verify", "--instances", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 15);
}

#[test]
fn alpha_curves_report_domain_and_symmetry() {
    let (header, body) = rows(&stdout(&[
        "ebb-e2plus",
        "--points",
        "11",
        "--alpha-min",
        "0",
        "--alpha-max",
        "1",
    ]));
    assert_eq!(header, ["alpha", "value", "in_domain"]);
    let min = body.iter().min_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert_eq!(min[0], 0.5);
    for i in 0..5 {
        assert!((body[i][1] - body[10 - i][1]).abs() < 1e-9);
        assert_eq!(body[i][2], 1.0);
    }
    let (_, xy) = rows(&stdout(&["xy-eplus", "--points", "5"]));
    assert!((xy[0][1] - xy[4][1]).abs() < 1e-9);
}

#[test]
fn fcs_measures_are_normalized() {
    let (header, body) = rows(&stdout(&["fcs", "--t", "1.5"]));
    assert_eq!(header, ["loc_1", "weight"]);
    let mass: f64 = body.iter().map(|r| r[1]).sum();
    assert!((mass - 1.0).abs() < 1e-10);

    let doc = scratch("small.json");
    std::fs::write(
        &doc,
        r#"{"sample": {"sites": 1}, "leads": [{"beta": 1.0, "M": 2}, {"beta": 2.0, "mu": 0.5, "M": 2}]}"#,
    )
    .unwrap();
    let (_, body) = rows(&stdout(&["fcs", "--model-file", doc.to_str().unwrap()]));
    let mass: f64 = body.iter().map(|r| r[1]).sum();
    assert!((mass - 1.0).abs() < 1e-10);
}

#[test]
fn invalid_flags_exit_with_code_two() {
    for args in [
        vec!["chain-sigma", "--bogus"],
        vec!["chain-sigma", "--n", "10", "--m", "10"],
        vec!["chain-sigma", "--dt", "0"],
        vec!["--model", "xy", "chain-rate"],
        vec!["fcs", "--model-file", "/nonexistent/model.json"],
        vec!["fcs", "--model", "ebb2"],
        vec!["xy-eplus", "--j", "0"],
        vec!["ebb-e2plus", "--points", "1"],
    ] {
        assert_eq!(entroflux(&args).status.code(), Some(2), "{args:?}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_entroflux"))
        .args(["chain-rate", "--points", "3"])
        .env("ENTROFLUX_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_does_not_change_output() {
    let mut args = vec!["chain-eofalpha", "--times", "5", "--points", "4"];
    args.extend(SMALL_CHAIN);
    let capped = Command::new(env!("CARGO_BIN_EXE_entroflux"))
        .args(&args)
        .env("ENTROFLUX_THREADS", "1")
        .output()
        .unwrap();
    assert!(capped.status.success());
    assert_eq!(capped.stdout, stdout(&args).into_bytes());
}
