//! End-to-end tests of the lyapunov-lab binary: subcommands, config-file
//! handling, exit codes, and file-level determinism.

use std::fs;
use std::process::Command;

use lyapunov_lab::emit::read_csv;
use lyapunov_lab::sweep::ResultRow;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lyapunov-lab"))
}

fn parse_stdout_csv(stdout: &[u8]) -> Vec<ResultRow> {
    read_csv(stdout).expect("stdout should be a valid result CSV")
}

#[test]
fn asymptotic_emits_closed_form_values() {
    let out = bin()
        .args(["asymptotic", "--d", "4", "--epsilon", "0.1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows = parse_stdout_csv(&out.stdout);
    assert_eq!(rows.len(), 4);
    let want = [0.01, 0.0, -0.01, -0.02];
    for (row, want) in rows.iter().zip(want) {
        assert!((row.lambda_hat - want).abs() < 1e-15);
        assert_eq!(row.std_err, 0.0);
        assert_eq!(row.estimator.name(), "asymptotic");
    }
}

#[test]
fn sweep_d1_exact_matches_oracle_and_asymptotic_is_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    let output = dir.path().join("out.csv");
    fs::write(
        &config,
        format!(
            r#"{{"dims":[1],"epsilons":[0.1],"estimators":["exact","asymptotic"],
                "n_samples":200000,"master_seed":42,"output_path":{:?}}}"#,
            output.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(fs::File::open(&output).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    let exact = rows.iter().find(|r| r.estimator.name() == "exact").unwrap();
    let asym = rows
        .iter()
        .find(|r| r.estimator.name() == "asymptotic")
        .unwrap();
    // E log|1 + 0.1 N| by independent quadrature
    let oracle = -0.005077641677765443;
    assert!(
        (exact.lambda_hat - oracle).abs() < 3.0 * exact.std_err,
        "exact={} oracle={oracle}",
        exact.lambda_hat
    );
    assert_eq!(asym.lambda_hat, -0.005000000000000001f64 * 1.0);
    assert!((asym.lambda_hat + 0.005).abs() < 1e-15);
}

#[test]
fn same_seed_sweeps_are_identical_up_to_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    fs::write(
        &config,
        r#"{"dims":[2],"epsilons":[0.1],"estimators":["exact","sigma"],
            "n_samples":5000,"n_steps":2000,"master_seed":7,"workers":2}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = bin()
            .args(["sweep", "--config", config.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success());
        let mut rows = parse_stdout_csv(&out.stdout);
        for r in &mut rows {
            r.wall_time_seconds = 0.0;
        }
        let mut buf = Vec::new();
        lyapunov_lab::emit::write_csv(&rows, &mut buf).unwrap();
        outputs.push(buf);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn json_format_emits_matching_values() {
    let out = bin()
        .args(["asymptotic", "--d", "2", "--epsilon", "0.1", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["estimator"], "asymptotic");
    assert_eq!(rows[0]["lambda_hat"].as_f64().unwrap(), 0.0);
    assert_eq!(rows[1]["lambda_hat"].as_f64().unwrap(), -0.010000000000000002);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(
        &config,
        r#"{"dims":[2],"epsilons":[-0.1],"estimators":["exact"]}"#,
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilons"));

    // missing required argument set
    let out = bin().args(["estimate-exact"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_2() {
    let out = bin()
        .args([
            "asymptotic",
            "--d",
            "2",
            "--epsilon",
            "0.1",
            "--output",
            "/nonexistent-dir/results.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn all_cells_failed_exits_3_with_error_rows() {
    // approx at eps=0.3, d=3 violates its standing hypothesis at run time:
    // accepted at parse time, the row records the error
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    let output = dir.path().join("out.csv");
    fs::write(
        &config,
        format!(
            r#"{{"dims":[3],"epsilons":[0.3],"estimators":["approx"],
                "n_samples":1000,"master_seed":1,"output_path":{:?}}}"#,
            output.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let rows = read_csv(fs::File::open(&output).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.lambda_hat.is_nan() && r.n_units == 0));
}

#[test]
fn single_estimator_failure_exits_3() {
    let out = bin()
        .args([
            "estimate-approx",
            "--d",
            "3",
            "--epsilon",
            "0.3",
            "--samples",
            "100",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps*|ln eps|"));
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(
        &config,
        r#"{"dims":[4],"epsilons":[0.2],"estimators":["asymptotic"],"master_seed":9}"#,
    )
    .unwrap();
    let out = bin()
        .args([
            "asymptotic",
            "--config",
            config.to_str().unwrap(),
            "--epsilon",
            "0.1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows = parse_stdout_csv(&out.stdout);
    assert_eq!(rows.len(), 4);
    assert!((rows[0].epsilon - 0.1).abs() < 1e-15, "flag should win");
    assert_eq!(rows[0].master_seed, 9, "file value should survive");
}

#[test]
fn residual_table_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    let sweep_out = dir.path().join("sweep.csv");
    fs::write(
        &config,
        format!(
            r#"{{"dims":[2],"epsilons":[0.1,0.05],"estimators":["exact","asymptotic"],
                "n_samples":20000,"master_seed":3,"output_path":{:?}}}"#,
            sweep_out.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .args(["residual-table", sweep_out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,epsilon,k,residual,std_err,bound");
    // 2 dims rows x 2 epsilons x k<=2 = 4 residual rows
    assert_eq!(lines.count(), 4);
}

#[test]
fn sigma_and_theta_check_smoke() {
    let out = bin()
        .args([
            "sigma-check",
            "--d",
            "2",
            "--epsilon",
            "0.2",
            "--steps",
            "4",
            "--samples",
            "2000",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("svd chain"), "{text}");
    assert!(text.contains("raw control"), "{text}");

    let out = bin()
        .args([
            "theta-check",
            "--d",
            "2",
            "--epsilon",
            "0.1",
            "--samples",
            "5000",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("satisfied: true"), "{text}");
}

#[test]
fn conjecture_smoke_haar_base() {
    let out = bin()
        .args([
            "conjecture",
            "--d",
            "2",
            "--epsilon-grid",
            "0.1",
            "--steps",
            "20000",
            "--samples",
            "20000",
            "--seed",
            "11",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epsilon,j,test_gap,test_se,baseline_gap,baseline_se,diff,combined_se,verdict"
    );
    let row = lines.next().unwrap();
    assert!(
        row.ends_with("consistent-with-conjecture") || row.ends_with("inconclusive"),
        "{row}"
    );
}

#[test]
fn norm_violating_conjecture_base_fails() {
    let out = bin()
        .args([
            "conjecture",
            "--d",
            "2",
            "--epsilon-grid",
            "0.05",
            "--base",
            "diag=1.5,0.5",
            "--steps",
            "1000",
            "--samples",
            "1000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm"));
}
