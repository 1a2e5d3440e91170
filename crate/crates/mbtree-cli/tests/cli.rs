use std::process::{Command, Output};

fn mbtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbtree")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = mbtree(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_code(args: &[&str]) -> (i32, serde_json::Value) {
    let out = mbtree(args);
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).expect("json error record");
    (out.status.code().unwrap(), rec)
}

#[test]
fn beta_splitting_minus_one_at_four() {
    let text = stdout(&["pmf", "--model", "beta-splitting", "--beta=-1", "--n", "4"]);
    let rows: Vec<(String, f64)> = text
        .lines()
        .filter(|l| l.starts_with("4,"))
        .map(|l| {
            let (lam, p) = l[2..].rsplit_once(',').unwrap();
            (lam.trim_matches('"').to_string(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    let get = |k: &str| rows.iter().find(|(l, _)| l == k).unwrap().1;
    assert!((get("3,1") - 8.0 / 11.0).abs() < 1e-12);
    assert!((get("2,2") - 3.0 / 11.0).abs() < 1e-12);
    assert!(text.starts_with("# mbtree pmf "));
}

#[test]
fn output_is_a_function_of_the_seed() {
    let a = stdout(&["sample", "--model", "ford", "--alpha", "0.3", "--n", "40", "--reps", "20", "--seed", "5"]);
    let b = stdout(&["sample", "--model", "ford", "--alpha", "0.3", "--n", "40", "--reps", "20", "--seed", "5", "--workers", "1"]);
    let c = stdout(&["sample", "--model", "ford", "--alpha", "0.3", "--n", "40", "--reps", "20", "--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 21);
}

#[test]
fn json_trees_have_the_requested_size() {
    let text = stdout(&["grow", "--model", "remy", "--n", "7", "--reps", "3", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let trees = doc["trees"].as_array().unwrap();
    assert_eq!(trees.len(), 3);
    assert!(trees.iter().all(|t| t["leaves"] == 7 && t["vertices"] == 13));
    assert_eq!(doc["run"]["model"], "remy");
}

#[test]
fn infinite_balls_and_volume() {
    let balls = stdout(&["sample", "--model", "kesten-poisson", "--radius", "3", "--infinite", "--reps", "4"]);
    assert_eq!(balls.lines().count(), 5);
    let vol = stdout(&["volume", "--model", "ford", "--alpha", "1", "--rmax", "10", "--reps", "30"]);
    let trailer = vol.lines().last().unwrap();
    let slope: f64 = trailer.split("slope=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    // the comb: V(R) = 2R + 1
    assert!((slope - 1.0).abs() < 1e-9, "{trailer}");
    assert!(vol.contains("\n10,21.0,0.0,21.0\n"));
}

#[test]
fn converge_local_table() {
    let text = stdout(&["converge-local", "--model", "cayley-cut", "--lambda", "1", "--grid", "100,1000,10000"]);
    assert!(text.contains("# monotone=true"));
    let last = text.lines().find(|l| l.starts_with("10000,")).unwrap();
    let diff: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!(diff < 0.01 * (-1.0f64).exp());
}

#[test]
fn ghp_of_two_small_trees() {
    let text = stdout(&["ghp", "--x", "((()))", "--y", "(()())", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((doc["exact"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(doc["lower"].as_f64().unwrap() <= 0.5 + 1e-12);
}

#[test]
fn validate_passes() {
    let text = stdout(&["validate", "--suite", "pmf"]);
    assert!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).all(|l| l.starts_with("PASS")), "{text}");
    let text = stdout(&["validate", "--suite", "ghp", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["pass"], true);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = std::env::temp_dir().join(format!("mbtree-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "# ford at alpha 1/2\nmodel = ford\nalpha = 0.5\nseed = 11\n").unwrap();
    let from_file = stdout(&["--config", cfg.to_str().unwrap(), "sample", "--n", "12", "--reps", "3"]);
    let explicit = stdout(&["sample", "--model", "ford", "--alpha", "0.5", "--seed", "11", "--n", "12", "--reps", "3"]);
    assert_eq!(from_file, explicit);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn errors_are_json_with_exit_codes() {
    let (code, rec) = error_code(&["pmf", "--model", "nope", "--n", "3"]);
    assert_eq!((code, rec["error"]["kind"].as_str()), (3, Some("unknown_model")));
    let (code, _) = error_code(&["pmf", "--model", "ford", "--alpha", "2", "--n", "3"]);
    assert_eq!(code, 4);
    let (code, _) = error_code(&["pmf", "--model", "gw-binary", "--n", "4"]);
    assert_eq!(code, 5);
    let (code, rec) = error_code(&["pmf", "--n", "3", "--bogus"]);
    assert_eq!((code, rec["error"]["kind"].as_str()), (2, Some("parse")));
    let (code, _) = error_code(&["ghp", "--x", "(()", "--y", "()"]);
    assert_eq!(code, 2);
}
