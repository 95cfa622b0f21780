use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conelike"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_benchmark_passes_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let surface = dir.path().join("surface.csv");
    let obj = dir.path().join("mesh.obj");
    let report = dir.path().join("report.txt");
    fs::write(
        &cfg,
        format!(
            "mode=solve\nH=1\nA=-0.25\nn=32\nv_max=0.4\nsurface={}\nobj={}\nreport={}\n",
            s(&surface),
            s(&obj),
            s(&report)
        ),
    )
    .unwrap();
    let out = run(&["solve", "--config", s(&cfg)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.ends_with("verdict: pass\n"), "{text}");
    assert!(text.contains("checks.failed: 0"));
    assert!(!text.contains("FAIL"));
    let csv = fs::read_to_string(&surface).unwrap();
    assert!(csv.starts_with("u,v,x,y,z\n"));
    // 401 levels of 32 nodes plus the header
    assert_eq!(csv.lines().count(), 1 + 32 * 401);
    assert!(obj.exists());
}

#[test]
fn tampered_surface_fails_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let surface = dir.path().join("surface.csv");
    let out = run(&[
        "export",
        "--A",
        "-0.25",
        "--n",
        "32",
        "--v_max",
        "0.2",
        "--surface",
        s(&surface),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let clean = run(&["check", "--input", s(&surface)]);
    assert_eq!(
        clean.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&clean.stdout)
    );

    let text = fs::read_to_string(&surface).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[32 * 50 + 3].split(',').map(String::from).collect();
    let x: f64 = fields[2].parse().unwrap();
    fields[2] = format!("{:.16e}", x + 1e-4);
    lines[32 * 50 + 3] = fields.join(",");
    let tampered = dir.path().join("tampered.csv");
    fs::write(&tampered, lines.join("\n") + "\n").unwrap();

    let out = run(&["check", "--input", s(&tampered)]);
    assert_eq!(out.status.code(), Some(2));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("check.conformality: FAIL"));
    assert!(report.ends_with("verdict: fail\n"));
}

#[test]
fn malformed_config_exits_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let surface = dir.path().join("never.csv");
    fs::write(&cfg, format!("A=-0.25\nn=63\nsurface={}\n", s(&surface))).unwrap();
    let out = run(&["solve", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error.code: E_CONFIG"), "{err}");
    assert!(err.contains("line 2"), "{err}");
    assert!(!surface.exists());

    fs::write(&cfg, "A=-0.25\nbogus=1\n").unwrap();
    assert_eq!(run(&["solve", "--config", s(&cfg)]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--A", ""]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--H", "1"]).status.code(), Some(1));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "A=0.25\nn=63\nv_max=0.05\n").unwrap();
    let out = run(&["solve", "--config", s(&cfg), "--n", "16"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("config.n: 16\n"));
}

#[test]
fn truncated_march_fails_the_checks() {
    // A = 1/4 leaves the residual budget long before v = 4
    let out = run(&[
        "solve", "--A", "0.25", "--n", "8", "--v_max", "4", "--dv", "1e-2",
    ]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(2), "{report}");
    assert!(report.contains("solver.status: residual-budget"));
    assert!(report.contains("check.solver.completed: FAIL"));
}

#[test]
fn solver_failure_exits_one() {
    let out = run(&[
        "solve",
        "--A",
        "0.25",
        "--n",
        "8",
        "--v_max",
        "1",
        "--dv",
        "0.5",
        "--residual_budget",
        "1e-30",
    ]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(1), "{report}");
    assert!(report.contains("error.code: E_SOLVER"));
    assert!(report.ends_with("verdict: error\n"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for tag in ["a", "b"] {
        let surface = dir.path().join(format!("{tag}.csv"));
        let obj = dir.path().join(format!("{tag}.obj"));
        let profile = dir.path().join(format!("{tag}.profile.csv"));
        let graph = dir.path().join(format!("{tag}.graph.csv"));
        let report = dir.path().join(format!("{tag}.report"));
        let out = run(&[
            "radial",
            "--A",
            "0.25",
            "--n",
            "16",
            "--v_max",
            "0.2",
            "--surface",
            s(&surface),
            "--obj",
            s(&obj),
            "--profile",
            s(&profile),
            "--graph",
            s(&graph),
            "--report",
            s(&report),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            fs::read_to_string(&report).unwrap_or_default()
        );
        texts.push(
            [surface, obj, profile, graph, report]
                .iter()
                .map(|p| fs::read(p).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(texts[0], texts[1]);
    let profile = String::from_utf8(texts[0][2].clone()).unwrap();
    assert!(profile.starts_with("v,f,h\n"));
    assert_eq!(profile.lines().count(), 1 + 201);
}

#[test]
fn obj_topology() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("m.obj");
    let out = run(&[
        "export",
        "--A",
        "-0.25",
        "--n",
        "8",
        "--v_max",
        "0.02",
        "--dv",
        "0.01",
        "--obj",
        s(&obj),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 24);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 16);
}

#[test]
fn extract_recovers_the_height_function() {
    let dir = tempfile::tempdir().unwrap();
    let surface = dir.path().join("s.csv");
    let curve = dir.path().join("c.csv");
    let out = run(&[
        "export",
        "--A",
        "0.25",
        "--A_cos",
        "0.1",
        "--n",
        "32",
        "--v_max",
        "0.1",
        "--surface",
        s(&surface),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["extract", "--input", s(&surface), "--curve", s(&curve)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = fs::read_to_string(&curve).unwrap();
    let mut worst = 0.0f64;
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        worst = worst.max((f[4] - (0.25 + 0.1 * f[0].cos())).abs());
    }
    assert!(worst < 1e-3, "{worst:e}");
    assert_eq!(text.lines().count(), 33);
}

#[test]
fn missing_input_is_an_io_error() {
    let out = run(&["check", "--input", "/nonexistent/surface.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("error.code: E_IO"));
}
