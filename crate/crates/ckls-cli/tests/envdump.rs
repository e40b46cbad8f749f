#[test]
fn dump() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_ckls"))
        .args(["estimate", "--in", "/tmp/fixed_ckls/s/path.csv", "--alpha", "0.5"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    println!("spawned-from-test bits {:x}", v["beta2_hat"].as_f64().unwrap().to_bits());
    println!("bin exe: {}", env!("CARGO_BIN_EXE_ckls"));
}
