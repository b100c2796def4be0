use std::fs;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nodal-lab"))
}

#[test]
fn sweep_writes_all_artifacts_and_fit_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = dir.path().join("lab.conf");
    fs::write(
        &config,
        format!(
            "cutoff = 8\ninitial = sin3\ncoefficients = none\nt_min = 0.001\npoints_per_decade = 3\noutput_dir = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let status = lab().arg("sweep").arg("--config").arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(0));
    for name in ["diagnostics.csv", "nodal.csv", "certificates.csv", "bounds.json", "report.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let nodal = fs::read_to_string(out.join("nodal.csv")).unwrap();
    assert!(nodal.lines().skip(1).all(|l| l.contains(",6.0000000000000000e0,")));

    let fit = lab().arg("fit").arg(out.join("nodal.csv")).args(["--column", "value"]).output().unwrap();
    assert_eq!(fit.status.code(), Some(0), "{}", String::from_utf8_lossy(&fit.stderr));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let status = lab()
        .args(["bound", "--beta", "0.75", "--t-min", "0.01", "--output-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bounds.json")).unwrap()).unwrap();
    assert!(report.to_string().contains("0.75"));
}

#[test]
fn invalid_input_exits_with_two() {
    let out = lab().args(["bound", "--beta", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("β"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "cutoff = 8\nwavelength = 3\n").unwrap();
    let out = lab().arg("synth").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
