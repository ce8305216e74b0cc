use std::process::Command;

fn sgeo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sgeo"))
}

#[test]
fn run_writes_csv_to_stdout() {
    let out = sgeo()
        .args([
            "run",
            "--functions",
            "branin",
            "--seeds",
            "2",
            "--algos",
            "sgeo,random_search",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "function,seed,algorithm,phi_found,success,value_calls,gradient_calls,wall_time_s,runs_executed"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("branin,0,sgeo,"));
    assert!(lines[2].starts_with("branin,0,random_search,"));
}

#[test]
fn run_writes_json_with_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let status = sgeo()
        .args([
            "run",
            "--functions",
            "two-bump",
            "--seeds",
            "1",
            "--no-jump",
            "--format",
            "json",
            "--workers",
            "2",
            "--seed-base",
            "9",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["config"]["seed_base"], 9);
    assert_eq!(doc["config"]["ablation"]["no_jump"], true);
    assert_eq!(doc["records"][0]["seed"], 9);
    assert_eq!(doc["records"][0]["algorithm"], "sgeo");
}

#[test]
fn configuration_errors_exit_with_2() {
    for args in [
        vec!["run", "--functions", "nope"],
        vec!["run", "--functions", "branin", "--seeds", "0"],
        vec!["run", "--functions", "branin", "--algos", "simplex"],
        vec!["run", "--bogus"],
        vec!["trace", "--function", "nope"],
    ] {
        let status = sgeo().args(&args).output().unwrap().status;
        assert_eq!(status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn trace_and_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let status = sgeo()
        .args([
            "trace",
            "--function",
            "six-hump-camel",
            "--seed",
            "3",
            "--mode",
            "sgeo",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("branch,t,x_1,x_2,phi,dt\nrun1/forward,1,"));

    let out = sgeo()
        .args(["trace", "--function", "branin"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().filter(|l| l.starts_with("forward,")).count(),
        25
    );

    let out = sgeo().arg("list").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rastrigin-12") && text.contains("two-bump"));
}
