//! End-to-end checks of the `bandits` binary: subcommands, exit codes, and
//! file emission.

use std::process::Command;

fn bandits() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bandits"))
}

#[test]
fn run_subcommand_reports_success() {
    let out = bandits()
        .args(["run", "--algo", "lve", "--eps", "0.3", "--delta", "0.2", "--seed", "4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["algorithm"], "lve");
    assert!(report["samples_used"].as_u64().unwrap() > 0);
}

#[test]
fn unknown_algorithm_exits_with_config_error() {
    let out = bandits().args(["run", "--algo", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_is_reproducible() {
    let dir = std::env::temp_dir().join(format!("bandits-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("sweep.json");
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "algorithm": "lve",
            "family": {"family": "multiclass", "x_size": 4, "a_size": 4, "pi_size": 6},
            "eps_grid": [0.3],
            "delta": 0.2,
            "seeds": [1, 2, 3],
            "budget_scale": 0.1
        })
        .to_string(),
    )
    .unwrap();
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    for (out, workers) in [(&out_a, "1"), (&out_b, "4")] {
        let status = bandits()
            .args([
                "sweep",
                "--config",
                cfg_path.to_str().unwrap(),
                "--seed",
                "9",
                "--workers",
                workers,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "sweep output depends on worker count");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("algorithm,s,A_size,K,m,Pi_size,eps,delta,seed"));
    assert_eq!(text.lines().count(), 4);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_all_lemmas_quick_passes() {
    let out = bandits().args(["check-all-lemmas", "--quick", "--seed", "1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("harmonic-sum"));
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn dec_subcommand_passes_on_small_sweep() {
    let out = bandits().args(["dec", "--classes", "4", "--seed", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert!(!text.contains("FAIL"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = bandits()
        .args(["sweep", "--config", "/nonexistent.json", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
