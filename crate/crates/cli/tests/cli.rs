use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_penrose-lab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn curvature_of_schwarzschild_is_scalar_flat() {
    let o = run(&[
        "curvature",
        "--graph",
        "schwarzschild(3,1)",
        "--set",
        "sample.r_min=2.1",
        "--set",
        "sample.r_max=10",
        "--set",
        "sample.count=100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = csv_column(&stdout(&o), "scalar_curvature");
    assert_eq!(r.len(), 100);
    assert!(r.iter().all(|v| v.abs() <= 1e-9));
}

#[test]
fn curvature_of_plane_vanishes() {
    let o = run(&["curvature", "--graph", "plane", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for col in ["grad_norm", "mean_curvature", "scalar_curvature", "min_eig_e"] {
        assert!(csv_column(&text, col).iter().all(|v| *v == 0.0), "{col}");
    }
}

#[test]
fn unknown_graph_exits_two_and_names_it() {
    let o = run(&["curvature", "--graph", "wormhole(3)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wormhole(3)"));
}

#[test]
fn dimension_mismatch_is_rejected() {
    let o = run(&["mass", "--graph", "schwarzschild(3,1)", "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn penrose_equality_on_schwarzschild() {
    let o = run(&["penrose", "--graph", "schwarzschild", "--n", "3", "--m", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["mass"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    assert!((v["bound"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    assert_eq!(v["equality"], true);
}

#[test]
fn penrose_strict_on_prescribed_graph() {
    let o = run(&["penrose", "--graph", "prescribed-radial(3,2,-5,3,1000)", "--radii", "100,200,400", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["slack"].as_f64().unwrap() > 0.0);
}

#[test]
fn radii_inside_the_boundary_exit_two() {
    let o = run(&["penrose", "--graph", "schwarzschild(3,1)", "--radii", "0.5,1,1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_convergent_mass_exits_three_with_table() {
    let o = run(&["mass", "--graph", "paraboloid", "--radii", "1,2,4,8", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(csv_column(&stdout(&o), "radius"), vec![1.0, 2.0, 4.0, 8.0]);
}

#[test]
fn suites_pass_and_unknown_suite_exits_two() {
    for id in ["identities", "hhr", "slide"] {
        let o = run(&["suite", id, "--seed", "42"]);
        assert_eq!(o.status.code(), Some(0), "{id}: {}", stdout(&o));
    }
    assert_eq!(run(&["suite", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["suite", "identities", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn wrong_decay_order_fails_with_exponents() {
    let o = run(&["suite", "decay", "--set", "suite.decay_q=3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
    let failed: Vec<&serde_json::Value> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["witnesses"][0]["gradient_exponent"].is_number()));
}

#[test]
fn suite_reports_are_byte_identical() {
    let args = ["suite", "hhr", "--seed", "5", "--format", "json"];
    let a = run_with_env(&args, &[("PENROSE_LAB_THREADS", "3")]);
    let b = run_with_env(&args, &[("PENROSE_LAB_THREADS", "3")]);
    let c = run_with_env(&args, &[("PENROSE_LAB_THREADS", "1")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(run_with_env(&args, &[("PENROSE_LAB_THREADS", "zero")]).status.code(), Some(2));
}

#[test]
fn config_file_with_flag_and_set_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("profile.csv");
    std::fs::write(
        &cfg,
        "# prescribed profile\nn = 3\nradial.source = power(-5, 3)\nradial.c1 = 2\nradial.r_end = 60\nformat = text\n",
    )
    .unwrap();
    let o = run(&[
        "radial",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--set",
        "radial.step=0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("r,h,dh,d2h,y\n"));
    let r = csv_column(&text, "r");
    assert_eq!(r[0], 3.0);
    assert_eq!(*r.last().unwrap(), 60.0);

    std::fs::write(&cfg, "graph.colour = red\n").unwrap();
    assert_eq!(run(&["mass", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn slide_plane_under_schwarzschild_touches_the_window_edge() {
    let o = run(&[
        "slide",
        "--graph",
        "plane",
        "--set",
        "slide.reference=schwarzschild(3,1)",
        "--set",
        "sample.r_min=2.1",
        "--set",
        "sample.r_max=50",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let expected = -(8.0_f64 * 0.1).sqrt();
    assert!((v["result"]["lambda_star"].as_f64().unwrap() - expected).abs() < 1e-8);
    assert_eq!(v["result"]["window_edge"], true);
}
