//! End-to-end checks of the binary: exit codes, output bytes, sweeps.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run_config(dir: &Path, config: &str) -> (Output, PathBuf) {
    let config_path = dir.join("config.json");
    let output_path = dir.join("result");
    let text = config.replace("OUTPUT", output_path.to_str().unwrap());
    std::fs::write(&config_path, text).unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_chiralosc"))
        .arg(&config_path)
        .output()
        .unwrap();
    (output, output_path)
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process exited")
}

#[test]
fn evolve_writes_cosine_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (output, result) = run_config(
        dir.path(),
        r#"{
          "doublet": {"m": 0, "delta": 1, "epsilon": 0, "theta_max": 1},
          "levels": [],
          "invariance": "T",
          "command": "evolve",
          "time": {"t_max": 6.283185307179586, "steps": 5},
          "output": "OUTPUT"
        }"#,
    );
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let body = std::fs::read_to_string(result).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("t,p_l,p_r,theta_ratio"));
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[3] - (2.0 * cells[0]).cos()).abs() < 1e-12);
    }
}

#[test]
fn runs_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
      "doublet": {"m": 0.3, "delta": 0.7, "epsilon": 0.2, "theta_max": 1.5},
      "levels": [{"energy": 5, "g_L": [0.2, 0.1], "g_R": [-0.1, 0.05]}],
      "invariance": "General",
      "command": "evolve",
      "time": {"t_max": 12.0, "steps": 257},
      "output": "OUTPUT"
    }"#;
    let (first_run, first_path) = run_config(dir.path(), config);
    assert_eq!(code(&first_run), 0);
    let first = std::fs::read(&first_path).unwrap();

    let dir2 = tempfile::tempdir().unwrap();
    let (second_run, second_path) = run_config(dir2.path(), config);
    assert_eq!(code(&second_run), 0);
    let second = std::fs::read(&second_path).unwrap();
    assert_eq!(first, second);
}

#[test]
fn sweep_blocks_match_standalone_runs_bytewise() {
    let dir = tempfile::tempdir().unwrap();
    let (output, result) = run_config(
        dir.path(),
        r#"{
          "doublet": {"m": 0, "delta": 1, "epsilon": 0, "theta_max": 1},
          "levels": [],
          "invariance": "T",
          "command": "sweep",
          "time": {"t_max": 3.141592653589793, "steps": 5},
          "sweep": {"path": "doublet.epsilon", "values": [0.0, 1.0, 2.0], "command": "evolve"},
          "output": "OUTPUT"
        }"#,
    );
    assert_eq!(code(&output), 0);
    let swept = std::fs::read(result).unwrap();

    let mut collected = Vec::new();
    for eps in [0.0, 1.0, 2.0] {
        let dir = tempfile::tempdir().unwrap();
        let (output, result) = run_config(
            dir.path(),
            &format!(
                r#"{{
                  "doublet": {{"m": 0, "delta": 1, "epsilon": {eps}, "theta_max": 1}},
                  "levels": [],
                  "invariance": "T",
                  "command": "evolve",
                  "time": {{"t_max": 3.141592653589793, "steps": 5}},
                  "output": "OUTPUT"
                }}"#
            ),
        );
        assert_eq!(code(&output), 0);
        collected.extend_from_slice(&std::fs::read(result).unwrap());
    }
    assert_eq!(swept, collected);

    // the epsilon = 0 block oscillates at full depth: the grid includes
    // t = pi/2 where theta = cos(2t) = -1
    let text = String::from_utf8(swept).unwrap();
    let first_block: Vec<&str> = text.lines().take(6).collect();
    let min_theta = first_block[1..=5]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((min_theta - (-1.0)).abs() < 1e-9);
}

#[test]
fn empty_sweep_writes_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let (output, result) = run_config(
        dir.path(),
        r#"{
          "doublet": {"m": 0, "delta": 1, "epsilon": 0, "theta_max": 1},
          "levels": [],
          "invariance": "T",
          "command": "sweep",
          "sweep": {"path": "doublet.epsilon", "values": [], "command": "spectrum"},
          "output": "OUTPUT"
        }"#,
    );
    assert_eq!(code(&output), 0);
    assert_eq!(std::fs::read(result).unwrap(), Vec::<u8>::new());
}

#[test]
fn compare_sweep_over_coupling_scale_shows_quartic_gain() {
    let dir = tempfile::tempdir().unwrap();
    let (output, result) = run_config(
        dir.path(),
        r#"{
          "doublet": {"m": 0, "delta": 1, "epsilon": 0, "theta_max": 1},
          "levels": [
            {"energy": 3.0, "g_L": [0.6, 0], "g_R": [0.4, 0]},
            {"energy": -9.4, "g_L": [-0.07, -0.17], "g_R": [0.04, 0.12]},
            {"energy": -6.4, "g_L": [-0.09, -0.1], "g_R": [0.12, 0.17]},
            {"energy": 7.9, "g_L": [0.12, -0.11], "g_R": [-0.11, 0.05]},
            {"energy": 11.3, "g_L": [0.04, -0.01], "g_R": [0.05, -0.08]}
          ],
          "invariance": "General",
          "command": "sweep",
          "time": {"t_max": 5.0, "steps": 501},
          "sweep": {"path": "coupling_scale", "values": [0.2, 0.1, 0.05], "command": "compare"},
          "output": "OUTPUT"
        }"#,
    );
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(result).unwrap();
    // the sweep output is a stream of three concatenated JSON documents
    let docs: Vec<serde_json::Value> = serde_json::Deserializer::from_str(&text)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(docs.len(), 3);
    let err = |doc: &serde_json::Value| {
        doc["max_abs_error_pl"]
            .as_f64()
            .unwrap()
            .max(doc["max_abs_error_pr"].as_f64().unwrap())
    };
    assert!(err(&docs[0]) / err(&docs[1]) >= 4.0);
    assert!(err(&docs[1]) / err(&docs[2]) >= 4.0);
}

#[test]
fn exit_codes_classify_failures() {
    let cases = [
        // malformed JSON
        ("{not json", 1),
        // schema violation: missing delta
        (
            r#"{
              "doublet": {"m": 0, "epsilon": 0, "theta_max": 1},
              "levels": [], "invariance": "T", "command": "reduce", "output": "OUTPUT"
            }"#,
            1,
        ),
        // invalid model: negative theta_max
        (
            r#"{
              "doublet": {"m": 0, "delta": 1, "epsilon": 0, "theta_max": -2},
              "levels": [], "invariance": "T", "command": "reduce", "output": "OUTPUT"
            }"#,
            2,
        ),
        // invariance precondition: CPT with unequal diagonal
        (
            r#"{
              "doublet": {"m": 0, "delta": 1, "epsilon": 0.5, "theta_max": 1},
              "levels": [], "invariance": "CPT", "command": "spectrum", "output": "OUTPUT"
            }"#,
            3,
        ),
        // degenerate level without broadening
        (
            r#"{
              "doublet": {"m": 4, "delta": 0.1, "epsilon": 0, "theta_max": 1},
              "levels": [{"energy": 4, "g_L": [0.2, 0], "g_R": [0, 0]}],
              "invariance": "General", "command": "reduce", "output": "OUTPUT"
            }"#,
            4,
        ),
    ];
    for (config, expected) in cases {
        let dir = tempfile::tempdir().unwrap();
        let (output, _) = run_config(dir.path(), config);
        assert_eq!(
            code(&output),
            expected,
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert!(!output.stderr.is_empty());
    }
}

#[test]
fn io_failures_have_their_own_exit_code() {
    // unreadable config
    let status = Command::new(env!("CARGO_BIN_EXE_chiralosc"))
        .arg("/nonexistent/config.json")
        .output()
        .unwrap();
    assert_eq!(code(&status), 5);

    // unwritable output
    let dir = tempfile::tempdir().unwrap();
    let (output, _) = run_config(
        dir.path(),
        r#"{
          "doublet": {"m": 0, "delta": 1, "epsilon": 0, "theta_max": 1},
          "levels": [],
          "invariance": "T",
          "command": "reduce",
          "output": "/nonexistent/dir/OUTPUT"
        }"#,
    );
    assert_eq!(code(&output), 5);
}

#[test]
fn usage_error_without_arguments() {
    let output = Command::new(env!("CARGO_BIN_EXE_chiralosc")).output().unwrap();
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("usage"));
}

#[test]
fn kaon_standard_zero_decay_oscillates() {
    let dir = tempfile::tempdir().unwrap();
    let (output, result) = run_config(
        dir.path(),
        r#"{
          "doublet": {"m": 0, "delta": 1, "epsilon": 0, "theta_max": 1},
          "levels": [],
          "invariance": "T",
          "command": "kaon",
          "time": {"t_max": 6.283185307179586, "steps": 41},
          "kaon": {"m1": 0.0, "m2": 1.0, "gamma1": 0.0, "gamma2": 0.0, "mode": "Standard"},
          "output": "OUTPUT"
        }"#,
    );
    assert_eq!(code(&output), 0);
    let body = std::fs::read_to_string(result).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("t,p_kbar"));
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let expected = (cells[0] / 2.0).sin().powi(2);
        assert!((cells[1] - expected).abs() < 1e-12);
    }
}
