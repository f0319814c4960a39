//! End-to-end checks of the `nessgap` binary: determinism, cache behaviour,
//! subcommand wiring, exit codes.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nessgap"))
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "nessgap-cli-{tag}-{}-{:x}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempdir("determinism");
    let cache = dir.join("cache");
    let run = |out: &str| {
        let out_path = dir.join(out);
        let status = bin()
            .args([
                "sweep",
                "--n-list",
                "3:9:2",
                "--format",
                "csv",
                "--out",
                out_path.to_str().unwrap(),
                "--cache-dir",
                cache.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&out_path).unwrap()
    };
    let first = run("a.csv");
    let second = run("b.csv");
    assert_eq!(first, second, "sweep output differs between runs");
    assert!(!first.is_empty());
    // LF endings only
    assert!(!first.contains(&b'\r'));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn cache_rerun_is_fast_and_identical() {
    let dir = tempdir("cache");
    let cache = dir.join("cache");
    let out1 = dir.join("one.json");
    let out2 = dir.join("two.json");
    // N = 151 goes through the structured solver + two eigensolves; a cache
    // hit replaces all of that with one small JSON read.
    let run = |out: &PathBuf| {
        let t0 = Instant::now();
        let status = bin()
            .args([
                "sweep",
                "--n-list",
                "151",
                "--format",
                "json",
                "--out",
                out.to_str().unwrap(),
                "--cache-dir",
                cache.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        t0.elapsed()
    };
    let cold = run(&out1);
    let warm = run(&out2);
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    assert!(
        warm.as_secs_f64() * 10.0 <= cold.as_secs_f64(),
        "cache hit not >= 10x faster: cold {cold:?}, warm {warm:?}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_error_exits_one() {
    let out = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["model", "--n", "1"]) // n < 2 is invalid
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    // even N beyond the dense cap has no solver
    let out = bin()
        .args(["solve", "--n", "40", "--method", "auto"])
        .current_dir(tempdir("exit2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_lemmas_passes_and_prints_table() {
    let out = bin().args(["verify-lemmas", "--n", "9"]).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("6.5.x_from_y_z"));
    assert!(text.contains("pass"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn model_solve_gap_roundtrip() {
    let dir = tempdir("model");
    let status = bin()
        .args(["model", "--n", "4", "--out", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let b = nessgap_core::io::read_matrix_csv(&dir.join("B.csv")).unwrap();
    assert_eq!(b.rows(), 4);
    assert_eq!(b[(0, 0)], 2.0);
    let m = nessgap_core::io::read_matrix_csv(&dir.join("M.csv")).unwrap();
    assert_eq!(m.rows(), 8);

    let status = bin()
        .args([
            "solve",
            "--n",
            "4",
            "--method",
            "dense",
            "--out",
            dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let bsol = nessgap_core::io::read_matrix_csv(&dir.join("b.csv")).unwrap();
    assert_eq!(bsol.rows(), 8);
    let sidecar = std::fs::read_to_string(dir.join("b.json")).unwrap();
    assert!(sidecar.contains("\"method\": \"dense_kron\""));
    assert!(sidecar.contains("residual_fro"));

    let gap_out = dir.join("gap.json");
    let status = bin()
        .args(["gap", "--n", "4", "--out", gap_out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&gap_out).unwrap();
    assert!(text.contains("\"rho\""));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn figure2_emits_expected_grid() {
    let out = bin().args(["figure2", "--max-n", "60"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,rho,rho_n3");
    assert_eq!(lines.len(), 4); // header + N = 20, 40, 60
    assert!(lines[1].starts_with("20,"));
}

#[test]
fn simulate_smoke_with_dump() {
    let dir = tempdir("simulate");
    let dump = dir.join("traj.bin");
    let out_json = dir.join("sim.json");
    let status = bin()
        .args([
            "simulate",
            "--n",
            "3",
            "--dt",
            "1e-2",
            "--steps",
            "2000",
            "--burn-in",
            "500",
            "--trajectories",
            "2",
            "--seed",
            "7",
            "--out",
            out_json.to_str().unwrap(),
            "--dump-trajectory",
            dump.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let bytes = std::fs::read(&dump).unwrap();
    // header: u64 + f64 + u64, then steps * 2N f64
    assert_eq!(bytes.len(), 24 + 2000 * 6 * 8);
    assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 3);
    assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1e-2);
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2000);
    let text = std::fs::read_to_string(&out_json).unwrap();
    assert!(text.contains("sample_count"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn env_var_controls_cache_location() {
    let dir = tempdir("envcache");
    let cache = dir.join("from-env");
    let status = bin()
        .args(["sweep", "--n-list", "3", "--format", "csv", "--out"])
        .arg(dir.join("out.csv"))
        .env("NESSGAP_CACHE_DIR", cache.to_str().unwrap())
        .status()
        .unwrap();
    assert!(status.success());
    let entries = std::fs::read_dir(&cache).unwrap().count();
    assert_eq!(entries, 1, "cache file not written under NESSGAP_CACHE_DIR");
    std::fs::remove_dir_all(&dir).ok();
}
