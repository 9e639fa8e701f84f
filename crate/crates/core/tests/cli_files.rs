//! End-to-end checks of the command-line driver: schemas, determinism, and
//! exit codes.

use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qfi-quench"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {path:?}: {e}"))
}

#[test]
fn scan_is_deterministic_and_schema_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let status = binary()
            .args([
                "scan", "--L", "2", "--U-grid", "0,4", "--T-grid", "0.4,0.8",
                "--dt", "0.05", "--jobs", "2",
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = read(&out1.join("scan.csv"));
    let b = read(&out2.join("scan.csv"));
    assert_eq!(a, b, "identical configs must emit byte-identical tables");
    let mut lines = a.lines();
    assert_eq!(lines.next().unwrap(), "# schema=qfi-quench/scan.v1");
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "U_over_J,T_over_J,fq_plus,fq_minus,fq_max,fq_exact,depth,fq_density_per_site,fq_density_per_mode"
    );
    assert_eq!(lines.count(), 4, "2x2 grid rows");
    // metadata sidecar parses and echoes the config
    let meta: serde_json::Value =
        serde_json::from_str(&read(&out1.join("scan.meta.json"))).unwrap();
    assert_eq!(meta["schema"], "qfi-quench/scan.meta.v1");
    assert_eq!(meta["config"]["params"]["sites"], 2);
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn serial_and_parallel_scans_agree() {
    let dir = tempfile::tempdir().unwrap();
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    for (out, jobs) in [(&serial, "1"), (&parallel, "2")] {
        let status = binary()
            .args([
                "scan", "--L", "2", "--U-grid", "-4,0,4", "--T-grid", "0.4",
                "--dt", "0.05", "--jobs", jobs,
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(read(&serial.join("scan.csv")), read(&parallel.join("scan.csv")));
}

#[test]
fn scan_protocol_tracks_exact_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let status = binary()
        .args(["scan", "--L", "4", "--U-grid", "4", "--T-grid", "0.4", "--dt", "0.02"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = read(&out.join("scan.csv"));
    let row = body.lines().nth(2).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    let fq_max: f64 = cols[4].parse().unwrap();
    let fq_exact: f64 = cols[5].parse().unwrap();
    assert!((fq_max - fq_exact).abs() <= 1e-2 * fq_exact);
    let depth: usize = cols[6].parse().unwrap();
    assert!(depth >= 2, "L=4, U=4, T=0.4 certifies some entanglement");
}

#[test]
fn trace_emits_four_series_files_on_matching_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let status = binary()
        .args([
            "trace", "--L", "2", "--U", "4", "--T-grid", "0.4,0.8", "--dt", "0.05",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let xi = read(&out.join("trace_xi.csv"));
    let kappa = read(&out.join("trace_kappa.csv"));
    let fq = read(&out.join("trace_fq_cutoff.csv"));
    let resid = read(&out.join("trace_residual.csv"));
    for (text, schema) in [
        (&xi, "trace-xi"),
        (&kappa, "trace-kappa"),
        (&fq, "trace-fq"),
        (&resid, "trace-residual"),
    ] {
        assert!(text.starts_with(&format!("# schema=qfi-quench/{schema}.v1\n")));
        assert_eq!(text.lines().nth(1).unwrap(), "t,T0.4,T0.8");
    }
    // xi and kappa share the fine grid; the cutoff series live on every
    // other point
    assert_eq!(xi.lines().count(), kappa.lines().count());
    assert_eq!(fq.lines().count(), resid.lines().count());
    // grid honors pi T t_max >= 14 for the smallest temperature
    let rows = xi.lines().count() - 2;
    let t_max = 0.05 * (rows - 1) as f64;
    assert!(std::f64::consts::PI * 0.4 * t_max >= 14.0 - 1e-9);
}

#[test]
fn qscan_reports_errors_and_dedups() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    let output = binary()
        .args([
            "qscan", "--L", "2", "--U", "4", "--T", "0.4", "--dt", "0.05",
            "--q-grid", "1e-3,1e-2,1e-2,1e-1",
        ])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(
        String::from_utf8_lossy(&output.stderr).contains("duplicate"),
        "duplicates are removed with a warning"
    );
    let body = read(&out.join("qscan.csv"));
    assert_eq!(body.lines().count(), 2 + 3, "three unique amplitudes");
    let meta: serde_json::Value = serde_json::from_str(&read(&out.join("qscan.meta.json"))).unwrap();
    assert!(meta["loglog_slope_symmetrized"].as_f64().is_some());
}

#[test]
fn bounds_table_with_brute_force_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let status = binary()
        .args(["bounds", "--L", "3", "--N", "3", "--brute-force"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = read(&out.join("bounds.csv"));
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "# schema=qfi-quench/bounds.v1");
    let header = lines.next().unwrap();
    assert!(header.starts_with("k,generic_bound,"));
    assert!(header.ends_with("brute_force_generic,brute_force_fixed_n"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 6, "k covers 1..=|M| for |M| = 6");
    for row in &rows {
        let generic: f64 = row[1].parse().unwrap();
        let fixed: f64 = row[3].parse().unwrap();
        let brute_g: f64 = row[row.len() - 2].parse().unwrap();
        let brute_f: f64 = row[row.len() - 1].parse().unwrap();
        assert!((generic - brute_g).abs() <= 1e-12 * generic.max(1.0));
        assert!((fixed - brute_f).abs() <= 1e-12 * fixed.max(1.0));
    }
}

#[test]
fn config_file_defaults_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "[scan]\nu_grid = \"0\"\nt_grid = \"0.4\"\ndt = 0.05\nsites = 2\n",
    )
    .unwrap();
    let out = dir.path().join("from-file");
    let status = binary()
        .arg("--config")
        .arg(&cfg_path)
        .args(["scan"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&read(&out.join("scan.meta.json"))).unwrap();
    assert_eq!(meta["config"]["params"]["sites"], 2);
    assert_eq!(meta["config"]["params"]["dt"], 0.05);
    // a flag overrides the file value
    let out2 = dir.path().join("override");
    let status = binary()
        .arg("--config")
        .arg(&cfg_path)
        .args(["scan", "--dt", "0.04"])
        .arg("--out")
        .arg(&out2)
        .status()
        .unwrap();
    assert!(status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&read(&out2.join("scan.meta.json"))).unwrap();
    assert_eq!(meta["config"]["params"]["dt"], 0.04);
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["scan", "--L", "2", "--U-grid", "", "--T-grid", "0.4"],
        vec!["scan", "--L", "2", "--U-grid", "1", "--T-grid", "-0.4"],
        vec!["scan", "--L", "2", "--U-grid", "1", "--T-grid", "0.4", "--dt", "0.5"],
        vec!["scan", "--L", "2", "--U-grid", "1", "--T-grid", "0.4", "--q", "0"],
        vec!["scan", "--L", "2", "--boundary", "twisted"],
        vec!["trace", "--L", "2", "--T-grid", ""],
        vec!["bounds", "--L", "5", "--brute-force"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let status = binary()
            .args(&args)
            .arg("--out")
            .arg(dir.path().join("o"))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(2), "args {args:?}");
    }
}
