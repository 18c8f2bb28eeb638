use std::path::Path;
use std::process::{Command, Output};

use rectri::bench::{ratio_report, read_csv, run_sweep, write_csv, BenchConfig, BenchError, BenchRecord, MMode};
use rectri::{Backend, Diag, OpKind, Side, Trans, TriangularSpec, Uplo};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .output()
        .expect("bench binary runs")
}

fn spec() -> TriangularSpec {
    TriangularSpec::new(Side::Left, Uplo::Lower, Trans::NoTrans, Diag::NonUnit)
}

fn timed(variant: &str, n: usize, median: f64) -> BenchRecord {
    BenchRecord {
        op: "trmm".into(),
        variant: variant.into(),
        n,
        m: 256,
        threshold: 256,
        backend: "par".into(),
        elem: "f32".into(),
        median_time_s: median,
        min_time_s: median,
        gflops: 0.0,
    }
}

#[test]
fn single_size_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let mut config = BenchConfig::new(OpKind::Trmm, spec(), vec![2]);
    config.reps = 3;
    config.out = Some(out.clone());
    run_sweep(&config).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "op,variant,n,m,threshold,backend,elem,median_time_s,min_time_s,gflops"
    );
    assert_eq!(lines[1].split(',').count(), 10);
    assert!(lines[1].starts_with("trmm,left-lower-n-nonunit,2,256,256,par,f64,"));
}

#[test]
fn m_modes_set_the_width() {
    let mut config = BenchConfig::new(OpKind::Trsm, spec(), vec![512]);
    config.reps = 1;
    config.warmup = 0;
    config.backend = Backend::sequential();
    assert_eq!(run_sweep(&config).unwrap()[0].m, 256);
    config.m_mode = MMode::Square;
    assert_eq!(run_sweep(&config).unwrap()[0].m, 512);
}

#[test]
fn ratio_examples() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.csv");
    let cand = dir.path().join("cand.csv");
    write_csv(&base, &[timed("v", 1, 2.0), timed("v", 2, 1.0), timed("v", 3, 1.0)]).unwrap();
    write_csv(&cand, &[timed("v", 1, 1.0), timed("v", 2, 1.0), timed("v", 3, 2.0)]).unwrap();
    let report = ratio_report(&base, &cand, None).unwrap();
    let ratios: Vec<f64> = report.iter().map(|r| r.ratio_percent).collect();
    assert_eq!(ratios, vec![200.0, 100.0, 50.0]);
}

#[test]
fn cli_sweep_then_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let ratio = dir.path().join("ratio.csv");
    let s = sweep.to_str().unwrap();
    let out = bench(&[
        "sweep",
        "--op",
        "trmm",
        "--side",
        "right",
        "--uplo",
        "upper",
        "--trans",
        "t",
        "--diag",
        "unit",
        "--alpha",
        "-0.5",
        "--sizes",
        "3,17",
        "--m",
        "square",
        "--threshold",
        "4",
        "--backend",
        "par",
        "--reps",
        "2",
        "--warmup",
        "1",
        "--elem",
        "f32",
        "--out",
        s,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_csv(&sweep).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[1].variant, "right-upper-t-unit");
    assert_eq!((records[1].n, records[1].m, records[1].threshold), (17, 17, 4));
    assert_eq!(records[1].elem, "f32");

    let out = bench(&[
        "ratio",
        "--baseline",
        s,
        "--candidate",
        s,
        "--out",
        ratio.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&ratio).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("op,variant,n,m,baseline_s,candidate_s,ratio_percent")
    );
    assert!(lines.all(|l| l.ends_with(",100.0")));
}

#[test]
fn cli_stdout_when_no_out_path() {
    let out = bench(&[
        "sweep",
        "--op",
        "trsm",
        "--sizes",
        "4",
        "--m",
        "fixed:2",
        "--reps",
        "1",
        "--backend",
        "seq",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("op,variant,n,m,threshold,backend,elem,median_time_s,min_time_s,gflops\n"));
}

#[test]
fn cli_exit_codes() {
    // Usage errors.
    assert_eq!(bench(&["sweep", "--op", "gemm", "--sizes", "4"]).status.code(), Some(2));
    assert_eq!(
        bench(&["sweep", "--op", "trsm", "--sizes", "4", "--m", "wide"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bench(&["sweep", "--op", "trsm", "--sizes", "4", "--reps", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bench(&["sweep", "--op", "trsm", "--sizes", "4", "--threshold", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bench(&["frobnicate"]).status.code(), Some(2));

    // Unwritable output.
    let out = bench(&[
        "sweep",
        "--op",
        "trsm",
        "--sizes",
        "4",
        "--m",
        "fixed:1",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Residual gate.
    let out = bench(&[
        "sweep",
        "--op",
        "trmm",
        "--sizes",
        "4",
        "--m",
        "fixed:2",
        "--reps",
        "1",
        "--inject-fault",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("residual check failed"));
}

#[test]
fn join_error_names_missing_keys() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.csv");
    let cand = dir.path().join("cand.csv");
    write_csv(&base, &[timed("v", 1, 1.0), timed("v", 64, 1.0)]).unwrap();
    write_csv(&cand, &[timed("v", 1, 1.0)]).unwrap();
    let err = ratio_report(&base, &cand, None).unwrap_err();
    assert!(matches!(err, BenchError::Join { .. }));
    assert!(err.to_string().contains("trmm/v/n=64/m=256"));

    let out = bench(&[
        "ratio",
        "--baseline",
        base.to_str().unwrap(),
        "--candidate",
        cand.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n=64"));
}

#[test]
fn wrong_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "op,variant,n,m,time\ntrmm,v,1,1,1.0\n").unwrap();
    assert!(read_csv(Path::new(&path)).is_err());
}

#[test]
fn crossover_lists_every_pair() {
    let out = bench(&[
        "crossover",
        "--op",
        "trsm",
        "--sizes",
        "8,16",
        "--m",
        "fixed:3",
        "--thresholds",
        "1,16",
        "--reps",
        "1",
        "--warmup",
        "0",
        "--backend",
        "seq",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,threshold,median_time_s");
    let pairs: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expected: Vec<(String, String)> = [("8", "1"), ("8", "16"), ("16", "1"), ("16", "16")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    assert_eq!(pairs, expected);
}
