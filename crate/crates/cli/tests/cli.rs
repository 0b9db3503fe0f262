use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn agmon(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_agmon"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .status()
        .expect("binary runs");
    status.code().expect("exit code")
}

fn report(out: &Path, cmd: &str) -> Value {
    let text = fs::read_to_string(out.join(format!("{cmd}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(agmon("validate", &configs().join("oned.toml"), out, &[]), 0);
    let r = report(out, "validate");
    assert_eq!(r["passed"], true);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r["report"]["form_positivity"]["trials"], 1000);

    let neg = configs().join("negatives");
    assert_eq!(
        agmon("validate", &neg.join("sign_violation.toml"), out, &[]),
        2
    );
    let r = report(out, "validate");
    let sign = r["report"]["hypotheses"]["clauses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "sign")
        .unwrap()
        .clone();
    assert_eq!(sign["passed"], false);

    assert_eq!(agmon("validate", &neg.join("malformed.toml"), out, &[]), 4);
    assert_eq!(
        agmon("validate", &neg.join("does_not_exist.toml"), out, &[]),
        4
    );
    // no [stencil] section
    assert_eq!(
        agmon(
            "validate",
            &configs().join("markov_two_state.toml"),
            out,
            &[]
        ),
        4
    );
}

#[test]
fn distance_one_d_and_coarse_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(agmon("distance", &configs().join("oned.toml"), out, &[]), 0);
    let r = report(out, "distance");
    assert_eq!(r["report"]["three_way"], true);
    assert_eq!(r["report"]["agreement"]["passed"], true);
    assert!(out.join("distance.csv").exists());

    let coarse = configs().join("negatives/coarse_dijkstra.toml");
    assert_eq!(agmon("distance", &coarse, out, &[]), 0);
    let r = report(out, "distance");
    assert_eq!(r["report"]["agreement"]["passed"], false);
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn spectrum_pass_refusal_and_negative_control() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(agmon("spectrum", &configs().join("oned.toml"), out, &[]), 0);
    let r = report(out, "spectrum");
    assert_eq!(r["report"]["certificate"]["smallest_passing_b"], 2.0);
    for f in ["eigenvalues.csv", "weighted_norms.csv", "decay_rows.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let neg = configs().join("negatives");
    assert_eq!(
        agmon("spectrum", &neg.join("zero_potential.toml"), out, &[]),
        2
    );
    assert_eq!(
        agmon("spectrum", &neg.join("inflated_distance.toml"), out, &[]),
        3
    );
    let r = report(out, "spectrum");
    assert_eq!(r["report"]["passed"], false);
}

#[test]
fn spectrum_is_deterministic_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("oned.toml");
    assert_eq!(agmon("spectrum", &cfg, a.path(), &["--seed", "11"]), 0);
    assert_eq!(agmon("spectrum", &cfg, b.path(), &["--seed", "11"]), 0);
    let ra = fs::read(a.path().join("spectrum.json")).unwrap();
    let rb = fs::read(b.path().join("spectrum.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(report(a.path(), "spectrum")["seed"], 11);
}

#[test]
fn markov_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(
        agmon("markov", &configs().join("markov_two_state.toml"), out, &[]),
        0
    );
    let r = report(out, "markov");
    let b = &r["report"]["chains"][0]["bounds"];
    assert!((b["max_eigenvalue"].as_f64().unwrap() - 0.6).abs() < 1e-12);

    assert_eq!(
        agmon(
            "markov",
            &configs().join("markov_metropolis.toml"),
            out,
            &[]
        ),
        0
    );
    let r = report(out, "markov");
    assert_eq!(r["report"]["decay"]["passed"], true);
    for c in r["report"]["chains"].as_array().unwrap() {
        assert!(c["operator"]["ground_residual"].as_f64().unwrap() <= 1e-13);
    }
    assert!(out.join("chain_transitions.csv").exists());

    // a chain supplied as CSV with the measure swapped
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.csv"),
        "row,col,prob\n0,0,0.9\n0,1,0.1\n1,0,0.5\n1,1,0.5\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("mu.csv"),
        "site,mu\n0,0.1666666666666667\n1,0.8333333333333333\n",
    )
    .unwrap();
    let cfg = dir.path().join("chain.toml");
    let text = "name = \"swapped\"\n[domain]\nbounds = [[0.0, 1.0]]\nepsilons = [1.0]\n\
                [markov]\nkind = \"csv\"\ntransitions = \"p.csv\"\nmeasure = \"mu.csv\"\n\
                epsilon = 1.0\nlo = [0]\nhi = [1]\n";
    fs::write(&cfg, text).unwrap();
    assert_eq!(agmon("markov", &cfg, out, &[]), 2);
    // the same chain with μ = (q, p)/(p+q) passes
    fs::write(
        dir.path().join("mu.csv"),
        "site,mu\n0,0.8333333333333333\n1,0.1666666666666667\n",
    )
    .unwrap();
    assert_eq!(agmon("markov", &cfg, out, &[]), 0);
}
