use std::fs;
use std::process::Command;

use wib_cli::runner::{execute, CSV_HEADER, CSV_HEADER_GAIN};
use wib_cli::RunConfig;
use wib_cli::{parse_config, ConfigError};

const BASE: &str = "
[instance]
means = [[2, 1], [0, 1.5], [-1, 0]]
variances = [1, 2, 0.5]

[run]
T = 200
replications = 4
seed = 11
policies = [wts, ts_unknown, ts_known, oracle, uniform]
mc_samples = 64
thin = 9
";

fn config(extra: &str) -> RunConfig {
    parse_config(&format!("{BASE}{extra}")).unwrap()
}

fn csv(cfg: &RunConfig) -> String {
    let mut buf = Vec::new();
    execute(cfg).unwrap().write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn same_config_gives_identical_bytes_regardless_of_workers() {
    let serial = config("");
    let mut parallel = serial.clone();
    parallel.workers = 3;
    let a = csv(&serial);
    assert_eq!(a, csv(&serial));
    assert_eq!(a, csv(&parallel));
}

#[test]
fn rows_are_sorted_and_cumulative_is_monotone() {
    let text = csv(&config(""));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let order = ["wts", "ts_unknown", "ts_known", "oracle", "uniform"];
    let mut prev: Option<(usize, u64, u64, f64)> = None;
    let mut count = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 5);
        let key = (
            order.iter().position(|p| *p == f[0]).unwrap(),
            f[1].parse::<u64>().unwrap(),
            f[2].parse::<u64>().unwrap(),
            f[4].parse::<f64>().unwrap(),
        );
        if let Some(p) = prev {
            assert!((p.0, p.1, p.2) < (key.0, key.1, key.2), "{line}");
            if (p.0, p.1) == (key.0, key.1) {
                assert!(key.3 >= p.3);
            }
        }
        prev = Some(key);
        count += 1;
    }
    // t ∈ {9, 18, …, 198, 200} per run
    assert_eq!(count, 5 * 4 * 23);
}

#[test]
fn thinning_keeps_cumulative_regret_exact() {
    let mut dense = config("");
    dense.thin = 1;
    dense.policies.truncate(1);
    let mut sparse = dense.clone();
    sparse.thin = 50;
    let pick = |text: String| -> Vec<String> {
        text.lines()
            .filter(|l| {
                l.split(',')
                    .nth(2)
                    .is_some_and(|t| t == "200" || t == "100")
            })
            .map(String::from)
            .collect()
    };
    let (a, b) = (pick(csv(&dense)), pick(csv(&sparse)));
    assert_eq!(a.len(), 8);
    assert_eq!(a, b);
}

#[test]
fn adding_replications_keeps_existing_ones() {
    let small = csv(&config(""));
    let mut cfg = config("");
    cfg.replications = 8;
    let large = csv(&cfg);
    let keep = |text: &str| -> Vec<String> {
        text.lines()
            .skip(1)
            .filter(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap() < 4)
            .map(String::from)
            .collect()
    };
    assert_eq!(keep(&small), keep(&large));
    assert!(large.lines().count() > small.lines().count());
}

#[test]
fn seed_changes_traces() {
    let a = csv(&config(""));
    let mut cfg = config("");
    cfg.base_seed += 1;
    assert_ne!(a, csv(&cfg));
}

#[test]
fn oracle_regret_column_is_zero() {
    let mut cfg = config("");
    cfg.policies = vec![wib_core::PolicyKind::Oracle];
    let text = csv(&cfg);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn floats_round_trip() {
    let text = csv(&config(""));
    for line in text.lines().skip(1).take(50) {
        let field = line.split(',').nth(4).unwrap();
        let x: f64 = field.parse().unwrap();
        assert_eq!(format!("{x:.16e}"), field);
    }
}

#[test]
fn gain_mode_adds_estimate_columns() {
    let cfg = parse_config(
        "[run]\nmode = gain\nT = 100\nthin = 50\npolicies = [wts, oracle]\nmc_samples = 64\n\
         [gain]\ng_coeffs = [0.3, 0.8, 0.2]\nh_coeffs = [0.5]\nK = 6\n",
    )
    .unwrap();
    let out = execute(&cfg).unwrap();
    let peak = out.peak_gain.unwrap();
    let mut buf = Vec::new();
    out.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER_GAIN));
    let oracle_final = text.lines().rfind(|l| l.starts_with("oracle,")).unwrap();
    let f: Vec<&str> = oracle_final.split(',').collect();
    let beta: f64 = f[5].parse().unwrap();
    assert_eq!(f[6], out.results[1].gain.unwrap().k_hat.to_string());
    // σ = 0.5, z = 100: standard error ≈ 0.035
    assert!((beta - peak).abs() < 0.2, "{beta} vs {peak}");
}

#[test]
fn errors_carry_context() {
    match parse_config("[run]\nT = 10\n[instance]\nmeans = [[1, 0], [0, 1]]\nvariances = [1, 1]\n")
    {
        Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "instance"),
        other => panic!("{other:?}"),
    }
    let err = parse_config("[run]\nreplications = 0\n").unwrap_err();
    assert!(
        matches!(err, ConfigError::Validation { ref field, .. } if field == "run.replications")
    );
    let err = parse_config("[run]\nthin = 0\n").unwrap_err();
    assert!(matches!(err, ConfigError::Validation { ref field, .. } if field == "run.thin"));
    let err = parse_config("[run]\nmc_samples = 0\n").unwrap_err();
    assert!(matches!(err, ConfigError::Validation { ref field, .. } if field == "run.mc_samples"));
}

#[test]
fn binary_writes_csv_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let conf = dir.join("run.conf");
    fs::write(&conf, BASE).unwrap();
    let out = dir.join("nested/trace.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_wib"))
        .args(["simulate", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "3", "--workers", "2"])
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(
        stdout.contains("wts") && stdout.contains("mean_regret"),
        "{stdout}"
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["config"]["base_seed"], 3);
    assert_eq!(json["config"]["T"], 200);
    assert!(json["bound_constants"]["spreading_known"].as_f64().unwrap() > 0.0);
    assert!(json["horizon_summary"]["oracle"]["mean"].as_f64().unwrap() == 0.0);
    assert!(json["started_at"].is_string() && json["elapsed_s"].is_number());

    // the seed override reaches the streams
    let mut cfg = config("");
    cfg.base_seed = 3;
    assert_eq!(text, csv(&cfg));

    let bad = dir.join("bad.conf");
    fs::write(&bad, "[run]\nvarience = 2\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_wib"))
        .args(["simulate", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("run.varience"));
}

#[test]
fn verify_hook_makes_the_suite_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let conf = dir.join("verify.conf");
    // small sample sizes; a doubled variance is still caught
    fs::write(&conf, "[verify]\nvariance_misspec = 2.0\nscale = 0.3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wib"))
        .args(["verify", "--config"])
        .arg(&conf)
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(!out.status.success(), "{stdout}");
    let failed: Vec<&str> = stdout.lines().filter(|l| l.starts_with("[FAIL]")).collect();
    assert_eq!(failed.len(), 1, "{stdout}");
    assert!(failed[0].contains("chi2"), "{stdout}");
}
