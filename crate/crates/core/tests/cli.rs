use std::process::Command;

fn ietidp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ietidp")).args(args).output().expect("binary runs")
}

#[test]
fn builtin_run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let out = ietidp(&[
        "--builtin", "tdomain", "--degree", "1,2", "--refine", "1", "--check-oracle",
        "--csv", csv.to_str().unwrap(), "--json", json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "domain,p,r,K,dofs,multipliers,it,kappa,lambda_bound,kappa_over_bound");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("tdomain,1,1,5,"));
    let reports: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["oracle_error"].as_f64().unwrap() <= 1e-6));
    assert!(reports.iter().all(|r| r["kappa"].as_f64().unwrap() >= 1.0));
}

#[test]
fn config_file_domain() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lshape.json");
    std::fs::write(
        &path,
        r#"{
            "patches": [
                { "geometry": { "rectangle": [0, 0, 1, 1] }, "dirichlet": ["west", "south"] },
                { "geometry": { "rectangle": [1, 0, 2, 1] }, "dirichlet": ["east", "south", "north"], "alpha": 100 },
                { "geometry": { "rectangle": [0, 1, 1, 2] }, "dirichlet": ["west", "north", "east"] }
            ],
            "interfaces": [
                { "k": 0, "side_k": "east", "range_k": [0, 1], "l": 1, "side_l": "west", "range_l": [0, 1] },
                { "k": 0, "side_k": "north", "range_k": [0, 1], "l": 2, "side_l": "south", "range_l": [0, 1] }
            ],
            "jump_patches": [1]
        }"#,
    )
    .unwrap();
    let out = ietidp(&["--config", path.to_str().unwrap(), "--refine", "2", "--jumps", "-2,0,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("lshape_j-2,2,2,3,"));
    assert!(stdout.contains("kappa max/min"));
}

#[test]
fn studies_print_summaries() {
    let out = ietidp(&["--builtin", "grid", "2", "--growth", "--refine", "1,2,3,4", "--degree", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("spread"));

    let out = ietidp(&["--builtin", "slider", "2", "0.3", "--slides", "0.25,0.5", "--refine", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("slider2_0.5,2,1,"));

    let out = ietidp(&["--builtin", "grid", "2", "--manufactured", "--degree", "1", "--refine", "1,2"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("domain,p,r,h,l2,h1,max_jump,it"));
    assert!(stdout.contains("L2 rate"));
}

#[test]
fn single_worker_output_is_reproducible() {
    let args = ["--builtin", "slider", "3", "0.3", "--refine", "1,2", "--single-worker"];
    assert_eq!(ietidp(&args).stdout, ietidp(&args).stdout);
}

#[test]
fn configuration_errors_exit_with_2() {
    for args in [
        vec!["--builtin", "moon"],
        vec!["--builtin", "tdomain", "--tol", "1.5"],
        vec!["--builtin", "tdomain", "--delta", "0"],
        vec!["--builtin", "tdomain", "--growth", "--refine", "1,2"],
        vec!["--builtin", "tdomain", "--slides", "0.5"],
        vec!["--config", "/nonexistent/domain.json"],
        vec!["--degree", "2"],
    ] {
        let out = ietidp(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn numerical_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("floating.json");
    // two patches without any Dirichlet side: the local problems stay singular
    std::fs::write(
        &path,
        r#"{
            "patches": [
                { "geometry": { "rectangle": [0, 0, 1, 1] } },
                { "geometry": { "rectangle": [1, 0, 2, 1] } }
            ],
            "interfaces": [
                { "k": 0, "side_k": "east", "range_k": [0, 1], "l": 1, "side_l": "west", "range_l": [0, 1] }
            ]
        }"#,
    )
    .unwrap();
    let csv = dir.path().join("partial.csv");
    let out = ietidp(&["--config", path.to_str().unwrap(), "--refine", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1);
}
