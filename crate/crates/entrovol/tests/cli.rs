//! Black-box tests of the compiled binary: flag surface, staged runs,
//! the output-directory override, and error reporting.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_entrovol"));
    // keep the suite independent of the caller's environment
    cmd.env_remove("ENTROVOL_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn entrovol")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Deterministic FRED-layout CSV: consecutive dates, strictly positive
/// prices on a sinusoid, one missing marker and one negative settlement.
fn sample_csv(n: usize) -> String {
    let mut out = String::from("observation_date,TESTSERIES\n");
    let mut date = chrono::NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
    for i in 0..n {
        if i == 40 {
            out.push_str(&format!("{date},.\n"));
        } else if i == 90 && n > 90 {
            out.push_str(&format!("{date},-12.00\n"));
        } else {
            let price = 55.0 + 6.0 * (i as f64 / 9.0).sin() + 1.5 * (i as f64 / 2.3).cos();
            out.push_str(&format!("{date},{price:.2}\n"));
        }
        date = date.succ_opt().unwrap();
    }
    out
}

fn write_sample(dir: &Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("input.csv");
    std::fs::write(&path, sample_csv(n)).unwrap();
    path
}

#[test]
fn help_lists_every_flag_with_its_default() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for needle in [
        "--input",
        "[default: data/DCOILWTICO.csv]",
        "--out",
        "--width",
        "[default: 252]",
        "--step",
        "--m",
        "--r-mode",
        "[default: rel]",
        "--r",
        "[default: 0.2]",
        "--order",
        "[default: 4,1,3]",
        "--auto-order",
        "--horizon",
        "[default: 300]",
        "--ratio",
        "[default: 0.8]",
        "--svr-c",
        "--svr-eps",
        "[default: 0.1]",
        "--svr-gamma",
        "--knn-k",
        "[default: 5]",
        "--seed",
        "[default: 2023]",
        "ingest",
        "rolling",
        "diagnose",
        "arimax",
        "ml",
        "all",
    ] {
        assert!(text.contains(needle), "--help output is missing {needle:?}:\n{text}");
    }
}

#[test]
fn unknown_flag_is_rejected() {
    let out = run(&["ingest", "--frobnicate"]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("--frobnicate"));
}

#[test]
fn staged_run_produces_artifacts_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), 200);
    let outdir = dir.path().join("out");
    let input_s = input.to_str().unwrap();
    let out_s = outdir.to_str().unwrap();

    let ingest = run(&["ingest", "--input", input_s, "--out", out_s]);
    assert!(ingest.status.success(), "ingest failed: {}", stderr_of(&ingest));
    assert!(outdir.join("prices_clean.csv").exists());
    assert!(outdir.join("cleaning_report.json").exists());

    let rolling =
        run(&["rolling", "--input", input_s, "--out", out_s, "--width", "30"]);
    assert!(rolling.status.success(), "rolling failed: {}", stderr_of(&rolling));
    for f in ["returns.csv", "ts_std.csv", "ts_sampen.csv", "rolling_report.json"] {
        assert!(outdir.join(f).exists(), "missing {f}");
    }

    let diagnose =
        run(&["diagnose", "--input", input_s, "--out", out_s, "--width", "30"]);
    assert!(diagnose.status.success(), "diagnose failed: {}", stderr_of(&diagnose));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("diagnostics.json")).unwrap())
            .unwrap();
    assert_eq!(diag["schema_version"], 1);
    assert!(diag["pearson_r"].is_number());

    // rerunning a stage rewrites the same bytes
    let first = std::fs::read(outdir.join("prices_clean.csv")).unwrap();
    let again = run(&["ingest", "--input", input_s, "--out", out_s]);
    assert!(again.status.success());
    let second = std::fs::read(outdir.join("prices_clean.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn env_var_overrides_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), 60);
    let flag_dir = dir.path().join("by_flag");
    let env_dir = dir.path().join("by_env");

    let out = bin()
        .args(["ingest", "--input", input.to_str().unwrap()])
        .args(["--out", flag_dir.to_str().unwrap()])
        .env("ENTROVOL_OUT", env_dir.to_str().unwrap())
        .output()
        .expect("spawn entrovol");
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(env_dir.join("prices_clean.csv").exists());
    assert!(!flag_dir.exists());
}

#[test]
fn malformed_row_fails_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "observation_date,TESTSERIES\n2021-01-04,50.0\n2021-01-05,fifty\n",
    )
    .unwrap();
    let out = run(&["ingest", "--input", path.to_str().unwrap(), "--out",
        dir.path().join("out").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr_of(&out);
    assert!(err.contains("line 3"), "stderr does not name the line: {err}");
}

#[test]
fn window_wider_than_series_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), 50);
    let out_s = dir.path().join("out");
    let ok = run(&["ingest", "--input", input.to_str().unwrap(), "--out",
        out_s.to_str().unwrap()]);
    assert!(ok.status.success());

    let out = run(&["rolling", "--input", input.to_str().unwrap(), "--out",
        out_s.to_str().unwrap(), "--width", "252"]);
    assert!(!out.status.success());
    let err = stderr_of(&out);
    assert!(
        err.contains("exceeds series length"),
        "stderr does not explain the width problem: {err}"
    );
}

#[test]
fn missing_input_file_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ingest", "--input", dir.path().join("nope.csv").to_str().unwrap(),
        "--out", dir.path().join("out").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).starts_with("error:"));
}
