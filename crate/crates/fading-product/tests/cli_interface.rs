//! End-to-end checks of the command-line surface: file formats, exit codes,
//! determinism, and the figure emitter.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fading-product"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

const MODEL: &[&str] = &[
    "--kappa1", "1.1", "--mu1", "1.2", "--alpha2", "2", "--mu2", "1.3",
];

#[test]
fn pdf_csv_has_the_documented_header_and_is_deterministic() {
    let mut args = vec!["pdf"];
    args.extend_from_slice(MODEL);
    args.extend_from_slice(&["--start", "0.2", "--stop", "2.0", "--count", "7"]);
    let a = run_ok(&args);
    let b = run_ok(&args);
    assert_eq!(a, b, "same spec must render byte-identical output");

    let mut lines = a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "abscissa,value,method,terms_used,perturbed,trunc_est"
    );
    assert_eq!(lines.count(), 7);
    for line in a.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert!(fields[1].parse::<f64>().unwrap() > 0.0);
        assert_eq!(fields[2], "series");
    }
}

#[test]
fn csv_and_json_encode_identical_numbers() {
    let mut args = vec!["cdf"];
    args.extend_from_slice(MODEL);
    args.extend_from_slice(&["--start", "0.25", "--stop", "1.75", "--count", "5"]);
    let csv = run_ok(&args);

    let mut jargs = args.clone();
    jargs.extend_from_slice(&["--format", "json"]);
    let json = run_ok(&jargs);
    let doc: serde_json::Value = serde_json::from_str(&json).expect("valid json");
    let rows = doc["rows"].as_array().expect("rows array");
    assert_eq!(doc["spec"]["command"], "cdf");

    let csv_rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), csv_rows.len());
    for (j, c) in rows.iter().zip(&csv_rows) {
        // shortest-roundtrip rendering on both sides: bit-identical values
        let csv_value: f64 = c[1].parse().unwrap();
        let json_value = j["value"].as_f64().unwrap();
        assert_eq!(csv_value.to_bits(), json_value.to_bits());
        let csv_abscissa: f64 = c[0].parse().unwrap();
        assert_eq!(csv_abscissa.to_bits(), j["abscissa"].as_f64().unwrap().to_bits());
    }
}

#[test]
fn invalid_specs_exit_with_code_2() {
    for args in [
        vec!["pdf", "--kappa1", "1.0"], // missing parameters
        {
            let mut a = vec!["pdf"];
            a.extend_from_slice(MODEL);
            a.extend_from_slice(&["--count", "1"]);
            a
        },
        {
            let mut a = vec!["ecc"];
            a.extend_from_slice(MODEL);
            a.extend_from_slice(&["--split", "2.0"]);
            a
        },
        {
            let mut a = vec!["pdf"];
            a.extend_from_slice(MODEL);
            a.extend_from_slice(&["--method", "monte-carlo"]);
            a
        },
    ] {
        let out = bin().args(&args).output().expect("binary runs");
        assert_eq!(
            out.status.code(),
            Some(2),
            "expected exit 2 for {args:?}, stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn numerical_failure_exits_with_code_3_and_names_the_point() {
    // a two-term hypergeometric budget cannot converge at this argument
    let out = bin()
        .args([
            "pdf", "--kappa1", "1.1", "--mu1", "1.2", "--alpha2", "10", "--mu2", "2.7",
            "--start", "3.5", "--stop", "4.0", "--count", "2", "--pfq-term-limit", "2",
        ])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error"), "stderr should describe the failure: {err}");
}

#[test]
fn ecc_grid_is_in_db_and_increasing() {
    let mut args = vec!["ecc"];
    args.extend_from_slice(MODEL);
    args.extend_from_slice(&[
        "--start", "-5", "--stop", "15", "--count", "5", "--method", "quadrature",
    ]);
    let csv = run_ok(&args);
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 5);
    for w in values.windows(2) {
        assert!(w[1] > w[0], "capacity must increase along the dB grid");
    }
}

#[test]
fn figure_emitter_writes_curves_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fig3");
    let output = bin()
        .args(["figure", "3", "--out-dir", out_dir.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert!(output.status.success());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["figure"], 3);
    assert_eq!(manifest["kind"], "cdf");
    let curves = manifest["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 3);
    let alphas: Vec<f64> = curves.iter().map(|c| c["alpha2"].as_f64().unwrap()).collect();
    assert_eq!(alphas, vec![2.0, 6.0, 10.0]);

    for c in curves {
        let path = out_dir.join(c["file"].as_str().unwrap());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("abscissa,value,method,terms_used,perturbed,trunc_est"));
        let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
        // CDF curves end near one
        assert!(last[1].parse::<f64>().unwrap() > 0.9);
    }
}

#[test]
fn figure_parameters_can_be_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fig3");
    let output = bin()
        .args([
            "figure", "3", "--out-dir", out_dir.to_str().unwrap(), "--mu1", "2.0",
        ])
        .output()
        .expect("binary runs");
    assert!(output.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    for c in manifest["curves"].as_array().unwrap() {
        assert_eq!(c["mu1"].as_f64().unwrap(), 2.0);
    }
}

#[test]
fn seed_resolution_order_env_then_flag() {
    let mut args = vec!["pdf"];
    args.extend_from_slice(MODEL);
    args.extend_from_slice(&["--count", "2", "--format", "json"]);

    let out = bin()
        .args(&args)
        .env("FADING_PRODUCT_SEED", "424242")
        .output()
        .expect("binary runs");
    let doc: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(doc["spec"]["seed"], 424242);

    let mut flag_args = args.clone();
    flag_args.extend_from_slice(&["--seed", "7"]);
    let out = bin()
        .args(&flag_args)
        .env("FADING_PRODUCT_SEED", "424242")
        .output()
        .expect("binary runs");
    let doc: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(doc["spec"]["seed"], 7, "--seed overrides the environment");
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "kappa1 = 0.7\nmu1 = 1.1\nalpha2 = 2\nmu2 = 0.9\nstart = 0.5\nstop = 1.5\ncount = 3\n",
    )
    .unwrap();
    let out_file = dir.path().join("curve.csv");
    run_ok(&[
        "pdf",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_file.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out_file).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("0.5,"));
}
