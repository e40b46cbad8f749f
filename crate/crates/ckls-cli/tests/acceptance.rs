//! Acceptance suite, CLI side. Criterion 10: re-running any command from its
//! manifest reproduces byte-identical CSV (and other data) outputs.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ckls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Re-run `dir`'s manifest into a sibling directory and compare every
/// recorded output byte for byte. Returns the compared file names.
fn rerun_and_compare(dir: &Path) -> Vec<String> {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap())
            .unwrap();
    let replay = dir.parent().unwrap().join(format!(
        "{}-replay",
        dir.file_name().unwrap().to_string_lossy()
    ));
    assert_ok(&ckls(&[
        "rerun",
        "--manifest",
        dir.join("manifest.json").to_str().unwrap(),
        "--out",
        replay.to_str().unwrap(),
    ]));
    let mut compared = Vec::new();
    for name in manifest["output_files"].as_array().unwrap() {
        let name = name.as_str().unwrap();
        let original = std::fs::read(dir.join(name)).unwrap();
        let replayed = std::fs::read(replay.join(name)).unwrap();
        assert_eq!(original, replayed, "{name} differs after rerun");
        compared.push(name.to_string());
    }
    compared
}

#[test]
fn criterion_10_manifest_byte_identity() {
    let tmp = TempDir::new().unwrap();
    let mut all: Vec<String> = Vec::new();

    let sim = tmp.path().join("sim");
    assert_ok(&ckls(&[
        "simulate", "--beta1", "0.1", "--beta2", "0.5", "--sigma", "0.03", "--alpha", "0.5",
        "--r0", "1.0", "--T", "5", "--dt", "0.001", "--seed", "42", "--out",
        sim.to_str().unwrap(),
    ]));
    all.extend(rerun_and_compare(&sim));

    let density = tmp.path().join("density");
    assert_ok(&ckls(&[
        "density", "--beta1", "0.1", "--beta2", "0.5", "--sigma", "0.03", "--alpha", "0.5",
        "--grid-min", "0.05", "--grid-max", "0.6", "--points", "500", "--out",
        density.to_str().unwrap(),
    ]));
    all.extend(rerun_and_compare(&density));

    let classify = tmp.path().join("classify");
    assert_ok(&ckls(&[
        "classify", "--drift", "0.1,-0.5", "--diffusion", "0,0.0009", "--alpha", "0.5",
        "--out", classify.to_str().unwrap(),
    ]));
    all.extend(rerun_and_compare(&classify));

    let halflife = tmp.path().join("halflife");
    assert_ok(&ckls(&[
        "halflife", "--beta1", "0.1", "--beta2", "0.5", "--sigma", "0.03", "--r0-grid",
        "0.4,2.0", "--alphas", "0.5,1.0", "--paths", "200", "--seed", "7", "--out",
        halflife.to_str().unwrap(),
    ]));
    all.extend(rerun_and_compare(&halflife));

    let table1 = tmp.path().join("table1");
    assert_ok(&ckls(&[
        "repro", "table1", "--out", table1.to_str().unwrap(), "--seeds", "2",
    ]));
    all.extend(rerun_and_compare(&table1));

    let fig1 = tmp.path().join("fig1");
    assert_ok(&ckls(&["repro", "fig1", "--out", fig1.to_str().unwrap()]));
    all.extend(rerun_and_compare(&fig1));

    let fig2 = tmp.path().join("fig2");
    assert_ok(&ckls(&["repro", "fig2", "--out", fig2.to_str().unwrap()]));
    all.extend(rerun_and_compare(&fig2));

    // estimate with a file output: manifest sits next to the JSON
    let est_dir = tmp.path().join("est");
    assert_ok(&ckls(&[
        "estimate", "--in", sim.join("path.csv").to_str().unwrap(), "--alpha", "0.5",
        "--json-out", est_dir.join("fit.json").to_str().unwrap(),
    ]));
    all.extend(rerun_and_compare(&est_dir));

    println!(
        "criterion 10 manifest-byte-identity: PASS — {} outputs byte-identical after rerun ({})",
        all.len(),
        all.join(", ")
    );
}
