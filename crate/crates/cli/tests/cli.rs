use std::path::Path;
use std::process::{Command, Output};

fn linqaoa(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linqaoa"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn linqaoa")
}

fn bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linqaoa"))
        .args(args)
        .output()
        .expect("spawn linqaoa")
}

#[test]
fn gen_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let o = linqaoa(
        &[
            "gen",
            "--kind",
            "maxcut",
            "--n",
            "6",
            "--d-edges",
            "1.0",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let inst = dir.path().join("instance.json");
    assert!(inst.exists());
    assert!(dir.path().join("manifest.json").exists());

    let o = bare(&["solve", inst.to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    // K6 max cut is 9 with 20 optimal assignments
    assert!(stdout.contains("e_min=-9"), "{stdout}");
    assert!(stdout.contains("degeneracy=20"), "{stdout}");
}

#[test]
fn infeasible_density_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = linqaoa(
        &[
            "gen",
            "--kind",
            "random-ising",
            "--n",
            "16",
            "--d-edges",
            "0.1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_instance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = linqaoa(
        &[
            "gen",
            "--kind",
            "random-ising",
            "--n",
            "40",
            "--d-edges",
            "0.5",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let inst = dir.path().join("instance.json");
    let o = bare(&["solve", inst.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_instance_file_exits_one() {
    let o = bare(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn partial_params_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = linqaoa(
        &[
            "transfer",
            "--gamma-slope",
            "0.1",
            "--count",
            "2",
            "--n",
            "6",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}
