//! Black-box tests of the `randcast` binary: artifacts, exit codes and
//! output structure.

use std::path::{Path, PathBuf};
use std::process::Output;

fn randcast(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_randcast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const FORECAST_CONFIG: &str = r#"{
  "version": 1,
  "data": { "synth": { "days": 730, "noise_sd": 0.02 } },
  "test_start": "2013-06-15",
  "test_end": "2013-06-28",
  "model": { "kind": "randomized-params", "parameter": 70.0, "members": 10, "hidden_nodes": 40 },
  "seed": 21
}"#;

const NAIVE_CONFIG: &str = r#"{
  "version": 1,
  "data": { "synth": { "days": 730, "noise_sd": 0.02 } },
  "test_start": "2013-06-15",
  "test_end": "2013-06-28",
  "model": { "kind": "naive" },
  "seed": 21
}"#;

#[test]
fn forecast_writes_all_artifacts_and_echoes_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.json", FORECAST_CONFIG);
    let out = dir.path().join("run");
    let result = randcast(&[
        "forecast",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    for artifact in ["forecast.csv", "metrics.json", "manifest.json"] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["base_seed"], 21);
    assert_eq!(manifest["config"]["seed"], 21);
    assert_eq!(manifest["day_seed_stride"], 1_000_003);
    assert_eq!(manifest["forecast_days"], 14);
    assert!(manifest["config_sha256"].as_str().unwrap().len() == 64);

    let forecast = std::fs::read_to_string(out.join("forecast.csv")).unwrap();
    let mut lines = forecast.lines();
    assert_eq!(lines.next(), Some("date,hour,actual,forecast"));
    assert_eq!(lines.count(), 14 * 24);
}

#[test]
fn out_of_domain_parameter_exits_1_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        &FORECAST_CONFIG.replace(
            r#""kind": "randomized-params", "parameter": 70.0"#,
            r#""kind": "training-subsets", "parameter": 1.5"#,
        ),
    );
    let out = dir.path().join("run");
    let result = randcast(&[
        "forecast",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("eta"), "stderr was: {stderr}");
}

#[test]
fn unknown_config_keys_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        &FORECAST_CONFIG.replace("\"hidden_nodes\"", "\"hiden_nodes\""),
    );
    let result = randcast(&[
        "forecast",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("unknown field"), "stderr was: {stderr}");
}

#[test]
fn missing_data_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        r#"{
  "version": 1,
  "data": { "csv": { "path": "/nonexistent/load.csv" } },
  "test_start": "2013-06-15",
  "test_end": "2013-06-18",
  "model": { "kind": "naive" },
  "seed": 1
}"#,
    );
    let result = randcast(&[
        "forecast",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn sweep_emits_one_row_per_grid_cell() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        r#"{
  "version": 1,
  "data": { "synth": { "days": 200, "noise_sd": 0.02 } },
  "test_start": "2012-06-20",
  "test_end": "2012-06-26",
  "model": { "kind": "node-pruning", "parameter": 0.5, "members": 4, "hidden_nodes": 16 },
  "seed": 3,
  "sweep": { "parameter_values": [0.25, 0.75], "hidden_nodes_values": [8, 16] }
}"#,
    );
    let out = dir.path().join("sweep");
    let result = randcast(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "strategy,parameter,hidden_nodes,members,mape,diversity,forecast_days"
    );
    assert_eq!(lines.len(), 1 + 4, "2x2 grid must give 4 rows");
    assert!(lines[1..].iter().all(|l| l.starts_with("node-pruning,")));
}

#[test]
fn compare_is_degenerate_on_the_diagonal_and_complementary_off_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.json", FORECAST_CONFIG);
    let naive_config = write_config(dir.path(), "naive.json", NAIVE_CONFIG);

    for (cfg, out) in [
        (&config, "e1"),
        (&naive_config, "naive"),
        (&config, "e1b"),
    ] {
        let mut args = vec![
            "forecast",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
        ];
        let out_path = dir.path().join(out);
        let out_str = out_path.to_str().unwrap().to_string();
        args.push(&out_str);
        let extra;
        if out == "e1b" {
            extra = ["--seed", "99"];
            args.extend_from_slice(&extra);
        }
        let result = randcast(&args);
        assert!(result.status.success(), "{result:?}");
    }

    let cmp = dir.path().join("cmp");
    let result = randcast(&[
        "compare",
        dir.path().join("e1").to_str().unwrap(),
        dir.path().join("naive").to_str().unwrap(),
        dir.path().join("e1b").to_str().unwrap(),
        "--out",
        cmp.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");

    let table = std::fs::read_to_string(cmp.join("gw_pvalues.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4, "header plus 3x3 matrix");
    assert_eq!(lines[0], "model,e1,naive,e1b");
    let cell = |r: usize, c: usize| -> f64 {
        lines[r + 1].split(',').nth(c + 1).unwrap().parse().unwrap()
    };
    for i in 0..3 {
        assert_eq!(cell(i, i), 1.0, "diagonal must be degenerate");
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let sum = cell(i, j) + cell(j, i);
            assert!((sum - 1.0).abs() < 1e-5, "p({i},{j}) + p({j},{i}) = {sum}");
        }
    }
    // The ensemble runs beat the naive baseline decisively on this data.
    assert!(cell(1, 0) < 0.05, "naive row / ensemble column: {}", cell(1, 0));

    let metrics = std::fs::read_to_string(cmp.join("metrics_table.csv")).unwrap();
    assert!(metrics.starts_with("metric,e1,naive,e1b"));
    assert_eq!(metrics.lines().count(), 6, "five metric rows");
}

#[test]
fn compare_rejects_mismatched_windows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.json", NAIVE_CONFIG);
    let shifted = write_config(
        dir.path(),
        "shifted.json",
        &NAIVE_CONFIG.replace("2013-06-28", "2013-06-27"),
    );
    for (cfg, out) in [(&config, "a"), (&shifted, "b")] {
        let result = randcast(&[
            "forecast",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join(out).to_str().unwrap(),
        ]);
        assert!(result.status.success());
    }
    let result = randcast(&[
        "compare",
        dir.path().join("a").to_str().unwrap(),
        dir.path().join("b").to_str().unwrap(),
        "--out",
        dir.path().join("cmp").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("window mismatch"), "stderr was: {stderr}");
}

#[test]
fn synth_output_round_trips_through_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let synth_config = write_config(
        dir.path(),
        "synth.json",
        r#"{
  "version": 1,
  "data": { "synth": { "days": 200, "noise_sd": 0.02 } },
  "test_start": "2012-06-20",
  "test_end": "2012-06-26",
  "model": { "kind": "naive" },
  "seed": 21
}"#,
    );
    let synth_out = dir.path().join("data");
    let result = randcast(&[
        "synth",
        "--config",
        synth_config.to_str().unwrap(),
        "--out",
        synth_out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let csv_path = synth_out.join("synth.csv");
    assert!(csv_path.exists());

    let forecast_config = write_config(
        dir.path(),
        "fc.json",
        &format!(
            r#"{{
  "version": 1,
  "data": {{ "csv": {{ "path": "{}" }} }},
  "test_start": "2012-06-20",
  "test_end": "2012-06-26",
  "model": {{ "kind": "naive" }},
  "seed": 21
}}"#,
            csv_path.display()
        ),
    );
    let run = dir.path().join("run");
    let result = randcast(&[
        "forecast",
        "--config",
        forecast_config.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let forecast = std::fs::read_to_string(run.join("forecast.csv")).unwrap();
    assert_eq!(forecast.lines().count(), 1 + 7 * 24);
}

#[test]
fn refuses_to_overwrite_without_force_then_obeys_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        r#"{
  "version": 1,
  "data": { "synth": { "days": 200, "noise_sd": 0.02 } },
  "test_start": "2012-06-20",
  "test_end": "2012-06-26",
  "model": { "kind": "naive" },
  "seed": 4
}"#,
    );
    let out = dir.path().join("run");
    let args = [
        "forecast",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    assert!(randcast(&args).status.success());
    let second = randcast(&args);
    assert_eq!(second.status.code(), Some(1));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(randcast(&forced).status.success());
}
