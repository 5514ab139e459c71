//! End-to-end acceptance: the experiment runner itself.

use std::process::Command;
use std::time::Instant;

fn absorbtk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_absorbtk"))
}

/// 12. `verify-all` over all builtin instances exits 0, well inside the
///     ten-minute budget.
#[test]
fn criterion_12_verify_all_exits_clean() {
    let out = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let status = absorbtk()
        .args(["verify-all", "--out"])
        .arg(out.path())
        .status()
        .expect("spawn absorbtk");
    let elapsed = started.elapsed();
    let pass = status.success() && elapsed.as_secs() < 600;
    println!(
        "[{}] criterion 12 (verify-all): exit {:?} in {elapsed:.2?}",
        if pass { "PASS" } else { "FAIL" },
        status.code()
    );
    assert!(pass);
    assert!(out.path().join("verify-all.csv").is_file());
    assert!(out.path().join("verify-all.json").is_file());
    let json = std::fs::read_to_string(out.path().join("verify-all.json")).unwrap();
    assert!(json.contains("\"overall_pass\": true"));
}

#[test]
fn unknown_instance_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[experiment]\ninstances = torus\n").unwrap();
    let status = absorbtk()
        .args(["absorb", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn metric_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let status = absorbtk()
        .args([
            "halfline",
            "--tolerance",
            "plus_defect_cap=1e-9",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn decay_on_trivial_derivation_passes_with_zero_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scalar.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\ninstances = scalar\nlevels = 4 8\ndecay_range = 8 32\n",
    )
    .unwrap();
    let status = absorbtk()
        .args(["decay", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let json = std::fs::read_to_string(dir.path().join("decay.json")).unwrap();
    assert!(json.contains("slope_exact_zero"));
}

#[test]
fn absorb_single_level_emits_one_row_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.cfg");
    std::fs::write(&cfg, "[experiment]\ninstances = pauli\nlevels = 4\n").unwrap();
    let status = absorbtk()
        .args(["absorb", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("absorb.csv")).unwrap();
    let data_rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("instance"))
        .collect();
    assert_eq!(data_rows.len(), 1, "exactly one (N, dfct) row: {csv}");
    let dfct: f64 = data_rows[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!(dfct <= 0.25);
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let status = absorbtk()
            .args(["connection", "--seed", "9", "--threads", "1", "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let ca = std::fs::read(a.path().join("connection.csv")).unwrap();
    let cb = std::fs::read(b.path().join("connection.csv")).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn instance_files_round_trip_through_the_runner() {
    // save_instance is exercised as a unit test; here the runner consumes a
    // handwritten file and treats a bad one as a config error
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("tiny.instance");
    std::fs::write(
        &good,
        "\
[algebra]
name = tiny
dim = 1
basis_count = 1
basis 0
1 1
1,0
d0
1 1
0,0
[module]
free_rank = 1
generators = 1
generator 0 slot 0
1 1
0.5,0
",
    )
    .unwrap();
    let cfg = dir.path().join("tiny.cfg");
    std::fs::write(
        &cfg,
        format!(
            "[experiment]\ninstances = file:{}\nlevels = 4 8\n",
            good.display()
        ),
    )
    .unwrap();
    let status = absorbtk()
        .args(["absorb", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // non-Hermitian derivation generator: named invariant, exit 2
    let bad = dir.path().join("bad.instance");
    std::fs::write(
        &bad,
        "\
[algebra]
name = bad
dim = 2
basis_count = 1
basis 0
2 2
1,0 0,0
0,0 1,0
d0
2 2
0,0 1,0
0,0 0,0
[module]
free_rank = 1
generators = 1
generator 0 slot 0
2 2
1,0 0,0
0,0 1,0
",
    )
    .unwrap();
    let cfg_bad = dir.path().join("bad.cfg");
    std::fs::write(
        &cfg_bad,
        format!("[experiment]\ninstances = file:{}\n", bad.display()),
    )
    .unwrap();
    let out = absorbtk()
        .args(["absorb", "--config"])
        .arg(&cfg_bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Hermitian"));
}
