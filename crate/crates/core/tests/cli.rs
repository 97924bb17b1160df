//! Black-box tests of the `popinfo` binary: output schema, determinism,
//! overrides and error reporting.

use std::path::Path;
use std::process::{Command, Output};

fn popinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popinfo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = popinfo(args);
    assert!(
        out.status.success(),
        "popinfo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_emits_expected_csv_schema() {
    let csv = stdout(&["run", "fig1", "--n", "1,2", "--jmax", "2000", "--imax", "5"]);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,I_MC_nats,I_MC_bits,I_std_nats,\
         I_e_nats,I_e_bits,DI_I_e,I_d_nats,I_d_bits,DI_I_d,I_D_nats,I_D_bits,DI_I_D"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1,"));
    assert!(rows[1].starts_with("2,"));
    for row in rows {
        for cell in row.split(',') {
            assert!(!cell.is_empty());
            assert!(cell.parse::<f64>().unwrap().is_finite());
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["run", "fig2", "--n", "1,3", "--jmax", "3000", "--imax", "8"];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn seed_override_changes_mc_but_not_metrics() {
    let a = stdout(&["run", "fig1", "--n", "2", "--jmax", "3000", "--imax", "8", "--seed", "1"]);
    let b = stdout(&["run", "fig1", "--n", "2", "--jmax", "3000", "--imax", "8", "--seed", "2"]);
    assert_ne!(a, b);
    let field = |text: &str, idx: usize| -> String {
        text.lines().nth(1).unwrap().split(',').nth(idx).unwrap().to_string()
    };
    assert_ne!(field(&a, 1), field(&b, 1)); // I_MC_nats differs
    assert_eq!(field(&a, 4), field(&b, 4)); // I_e_nats does not
}

#[test]
fn metrics_subcommand_has_no_mc_columns() {
    let csv = stdout(&["metrics", "fig1", "--n", "1"]);
    assert_eq!(
        csv.lines().next().unwrap(),
        "N,I_e_nats,I_e_bits,I_d_nats,I_d_bits,I_D_nats,I_D_bits"
    );
}

#[test]
fn out_flag_writes_csv_and_json_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("result.csv");
    let out = popinfo(&[
        "metrics",
        "fig1",
        "--n",
        "1",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("N,"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["config"]["name"], "fig1");
    assert_eq!(sidecar["seed"], 20260823);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("tiny.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "name": "tiny",
            "model": { "heaviside": { "t": 10.0, "a": 5.0 } },
            "stimulus": { "points": { "range": { "m": 5, "t": 10.0 } }, "prior": "uniform" },
            "n_sweep": [1, 2],
            "metrics": ["I_e", "I_u", "H_X", { "I_beta_alpha": { "beta": 0.5, "alpha": 1.0 } }],
            "mc": { "j_max": 100, "i_max": 2 },
            "seed": 7
        }"#,
    )
    .unwrap();
    let csv = stdout(&["metrics", cfg_path.to_str().unwrap()]);
    assert_eq!(
        csv.lines().next().unwrap(),
        "N,I_e_nats,I_e_bits,I_u_nats,I_u_bits,H_X_nats,H_X_bits,\
         I_beta_alpha(0.5,1)_nats,I_beta_alpha(0.5,1)_bits"
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "name": "bad",
            "model": { "heaviside": { "t": 10.0, "a": 5.0 } },
            "stimulus": { "points": { "range": { "m": 5, "t": 10.0 } }, "prior": "uniform" },
            "n_sweep": [1],
            "metrics": [],
            "mc": { "j_max": 100, "i_max": 2 },
            "seed": 7,
            "surprise": true
        }"#,
    )
    .unwrap();
    let out = popinfo(&["metrics", cfg_path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("surprise"));
}

#[test]
fn oracle_subcommand_reports_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("tiny.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "name": "tiny",
            "model": { "heaviside": { "t": 10.0, "a": 3.0 } },
            "stimulus": { "points": { "range": { "m": 4, "t": 10.0 } }, "prior": "uniform" },
            "n_sweep": [1, 2],
            "metrics": [],
            "mc": { "j_max": 100, "i_max": 2 },
            "seed": 7
        }"#,
    )
    .unwrap();
    let csv = stdout(&["oracle", cfg_path.to_str().unwrap()]);
    assert_eq!(csv.lines().next().unwrap(), "N,I_exact_nats,I_exact_bits,neglected_tail");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn oracle_refuses_oversized_instances() {
    let out = popinfo(&["oracle", "fig1"]);
    assert!(!out.status.success());
}

#[test]
fn divergence_subcommand_dumps_square_matrix() {
    let csv = stdout(&["divergence", "fig1", "--pop-size", "2", "--kind", "kl"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 21);
    for row in &rows {
        assert_eq!(row.split(',').count(), 21);
    }
    // step tunings produce one-sided infinite divergences
    assert!(csv.contains("inf"));
    // diagonal is zero
    assert_eq!(rows[0].split(',').next().unwrap(), "0");

    let out = popinfo(&["divergence", "fig1", "--pop-size", "2", "--kind", "chernoff"]);
    assert!(!out.status.success(), "chernoff kind requires --beta");
    let csv = stdout(&[
        "divergence", "fig1", "--pop-size", "2", "--kind", "chernoff", "--beta", "0.5",
    ]);
    assert!(!csv.contains("inf"));
}

#[test]
fn n_subset_must_come_from_the_sweep() {
    let out = popinfo(&["metrics", "fig1", "--n", "5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in the config sweep"));
}

#[test]
fn unknown_preset_is_a_clean_error() {
    let out = popinfo(&["run", "fig99"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig99"), "stderr: {err}");
    assert!(Path::new("fig99").exists() == false);
}
