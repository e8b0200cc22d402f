use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use sitrace::cli::{Format, RunConfig};

fn sitrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sitrace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    sitrace(args).status.code().expect("exit code")
}

#[test]
fn exit_codes_follow_verdicts() {
    assert_eq!(code(&["analyze", "--system", "shannon-scaling", "--grid", "64"]), 0);
    assert_eq!(code(&["analyze", "--system", "bspline:2", "--grid", "64"]), 3);
    assert_eq!(
        code(&["analyze", "--system", "bspline:2", "--grid", "64", "--quasi-orthogonalize"]),
        0
    );
    assert_eq!(code(&["verify", "wavelet", "--system", "shannon-wavelet", "--dilation", "2", "--grid", "64"]), 0);
    assert_eq!(code(&["verify", "wavelet", "--system", "shannon-scaling", "--dilation", "2", "--grid", "64"]), 1);
    assert_eq!(code(&["verify", "ntf", "--system", "bspline:2", "--grid", "64"]), 1);
    assert_eq!(
        code(&["verify", "mra", "--wavelet", "haar-wavelet", "--scaling", "haar-scaling", "--grid", "64"]),
        0
    );
    assert_eq!(code(&["catalog"]), 0);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["analyze", "--system", "no-such-system"]), 2);
    let out = sitrace(&["analyze", "--system", "shannon-scaling", "--grid", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerics.grid"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    fs::write(&path, "[tolerance]\nidentity = 3\n").unwrap();
    let out = sitrace(&["--config", path.to_str().unwrap(), "analyze", "--system", "shannon-scaling"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerance.identity"));
}

#[test]
fn analyze_writes_unit_dimension_profile() {
    let out = sitrace(&["analyze", "--system", "shannon-scaling", "--grid", "1024", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi_1,value,error_bar"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1024);
    for r in rows {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 1.0);
    }
}

fn assert_csv_round_trips(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let width = header.split(',').count();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), width, "{line}");
        for c in cols {
            if let Ok(v) = c.parse::<f64>() {
                // shortest round-trip text reparses to the same bits and
                // agrees with a 17 significant digit rendering
                assert_eq!(format!("{v:?}").parse::<f64>().unwrap().to_bits(), v.to_bits());
                if v.is_finite() {
                    assert_eq!(format!("{v:.16e}").parse::<f64>().unwrap(), v);
                }
            }
        }
    }
}

#[test]
fn csv_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "analyze",
        "--system",
        "meyer-scaling",
        "--grid",
        "128",
        "--window",
        "16",
        "--operator",
        "random:2",
        "--out",
        out,
    ];
    assert_eq!(code(&args), 0);
    let args = ["verify", "wavelet", "--system", "haar-wavelet", "--grid", "64", "--out", out];
    assert_eq!(code(&args), 0);
    let mut seen = 0;
    for entry in fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            assert_csv_round_trips(&p);
            seen += 1;
        }
    }
    assert!(seen >= 3, "only {seen} csv files");
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, "[system]\nsystem = haar-wavelet\ndilation = 2\n\n[numerics]\ngrid = 64\n").unwrap();
    let a = sitrace(&["--config", path.to_str().unwrap(), "verify", "wavelet"]);
    let b = sitrace(&["verify", "wavelet", "--system", "haar-wavelet", "--dilation", "2", "--grid", "64"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

fn selector() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9:,()+-]{0,24}"
}

prop_compose! {
    fn config()(
        system in proptest::option::of(selector()),
        wavelet in proptest::option::of(selector()),
        scaling in proptest::option::of(selector()),
        dilation in prop_oneof![
            Just(vec![2]),
            Just(vec![3]),
            Just(vec![2, 0, 0, 2]),
            Just(vec![1, 1, 1, -1]),
            Just(vec![2, 1, 0, 2]),
        ],
        pieces in proptest::collection::vec("-?[0-9]\\.[0-9]{1,3} [0-9]\\.[0-9] \\| [0-9]", 0..3),
        flags in (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()),
        perturb in 0.0f64..1.0,
        grid in 1usize..100_000,
        window in 1usize..4096,
        depth in 1usize..200,
        s_range in 1usize..64,
        seed in any::<u64>(),
        tol in 1e-15f64..0.5,
        rank_tol in 1e-15f64..0.5,
        tail_tol in 1e-15f64..0.5,
        mode in prop_oneof![Just("projection"), Just("delta")],
        out in proptest::option::of("[a-z]{1,8}(/[a-z0-9_]{1,8}){0,2}"),
    ) -> RunConfig {
        RunConfig {
            system,
            wavelet,
            scaling,
            dilation,
            pieces,
            semiorthogonal: flags.0,
            quasi_orthogonalize: flags.1,
            unchecked: flags.2,
            perturb,
            operator: None,
            grid,
            window,
            depth,
            s_range,
            seed,
            tol,
            rank_tol,
            tail_tol,
            ntf_mode: mode.into(),
            out: out.map(Into::into),
            format: if flags.3 { Format::Csv } else { Format::Json },
            timing: flags.3,
        }
    }
}

proptest! {
    #[test]
    fn config_text_round_trips(c in config()) {
        let text = c.to_text();
        prop_assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }
}
