//! End-to-end tests driving the `qg` binary on generated graph families.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn qg(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qg"));
    cmd.args(args);
    cmd
}

fn run(args: &[&str]) -> Output {
    qg(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn assert_exit(out: &Output, code: i32, ctx: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{ctx}: expected exit {code}, got {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout_of(out),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn gen_to_file(dir: &std::path::Path, name: &str, args: &[&str]) -> String {
    let out = run(args);
    assert_exit(&out, 0, "gen");
    let path = dir.join(name);
    std::fs::write(&path, out.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn every_generated_family_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &[&str])] = &[
        ("path", &["gen", "path", "--n", "6"]),
        ("star", &["gen", "star", "--n", "5"]),
        ("tree", &["gen", "tree", "--branching", "2", "--depth", "4"]),
        ("pchain", &["gen", "parallel-chain", "--n", "3"]),
        ("ladder", &["gen", "ladder", "--n", "4"]),
    ];
    for (name, args) in cases {
        let path = gen_to_file(dir.path(), name, args);
        let out = run(&["validate", "--graph", &path]);
        assert_exit(&out, 0, &format!("validate {name}"));
        assert!(stdout_of(&out).contains("verdict:          PASS"));
    }
}

#[test]
fn validate_reads_the_graph_from_stdin() {
    let gen = run(&["gen", "path", "--n", "4"]);
    assert_exit(&gen, 0, "gen");
    let mut child = qg(&["validate", "--graph", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&gen.stdout)
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_exit(&out, 0, "validate via stdin");
}

#[test]
fn distance_reports_the_parallel_edge_peak_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let graph = gen_to_file(dir.path(), "pc", &["gen", "parallel-chain", "--n", "1"]);
    let csv1 = dir.path().join("d1.csv");
    let csv2 = dir.path().join("d2.csv");
    let out = run(&["distance", "--graph", &graph, "--out", csv1.to_str().unwrap()]);
    assert_exit(&out, 0, "distance");
    let out2 = run(&["distance", "--graph", &graph, "--out", csv2.to_str().unwrap()]);
    assert_exit(&out2, 0, "distance again");
    let b1 = std::fs::read(&csv1).unwrap();
    let b2 = std::fs::read(&csv2).unwrap();
    assert_eq!(b1, b2, "identical invocations must produce identical bytes");
    let text = String::from_utf8(b1).unwrap();
    assert!(text.starts_with("kind,id,case,q,d_i,d_j,dist\n"));
    // the long edge of the two-edge cycle carries an interior farthest point
    assert!(text.contains(",peak,2,"), "csv:\n{text}");
}

#[test]
fn growth_check_exit_codes_follow_the_verdict() {
    // subcritical constant-potential growth on the line: holds (exit 0)
    let out = run(&[
        "growth-check", "--family", "path", "--V", "const", "--sigma", "2",
        "--R0", "2", "--Rmax", "16", "--Rsteps", "4",
    ]);
    assert_exit(&out, 0, "growth path const");
    assert!(stdout_of(&out).contains("HOLDS"));

    // exponential volume on the binary tree: fails (exit 1); the
    // truncation depth must cover the outermost annulus (2 Rmax)
    let out = run(&[
        "growth-check", "--family", "tree", "--size", "9", "--V", "const",
        "--sigma", "2", "--R0", "2", "--Rmax", "4", "--Rsteps", "2",
    ]);
    assert_exit(&out, 1, "growth tree const");
    assert!(stdout_of(&out).contains("FAILS"));

    // a steep power-law potential flips the verdict on the line
    let out = run(&[
        "growth-check", "--family", "path", "--V", "powerlaw:1.5", "--sigma", "2",
        "--R0", "2", "--Rmax", "32", "--Rsteps", "5",
    ]);
    assert_exit(&out, 1, "growth path powerlaw:1.5");
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let out = run(&["--definitely-not-a-flag", "gen", "path"]);
    assert_exit(&out, 2, "unknown flag");

    let out = run(&["validate", "--graph", "/nonexistent/graph.txt"]);
    assert_exit(&out, 2, "missing graph file");

    let out = run(&[
        "growth-check", "--family", "path", "--V", "cubic", "--sigma", "2",
        "--R0", "2", "--Rmax", "4", "--Rsteps", "2",
    ]);
    assert_exit(&out, 2, "unknown potential grammar");
}

#[test]
fn mollify_check_passes_for_all_bridges() {
    let dir = tempfile::tempdir().unwrap();
    let graph = gen_to_file(dir.path(), "pc", &["gen", "parallel-chain", "--n", "2"]);
    for bridge in ["quintic", "bump", "tau"] {
        let out = run(&["mollify-check", "--graph", &graph, "--bridge", bridge]);
        assert_exit(&out, 0, &format!("mollify-check {bridge}"));
    }
}

#[test]
fn ibp_and_testfn_checks_pass_on_a_generated_path() {
    let dir = tempfile::tempdir().unwrap();
    let graph = gen_to_file(dir.path(), "p8", &["gen", "path", "--n", "8"]);
    let out = run(&["ibp-check", "--graph", &graph, "--R", "2", "--mode", "compact"]);
    assert_exit(&out, 0, "ibp compact");
    let out = run(&[
        "ibp-check", "--graph", &graph, "--R", "2", "--mode", "weighted", "--delta", "0.75",
    ]);
    assert_exit(&out, 0, "ibp weighted");
    let out = run(&["testfn-check", "--graph", &graph, "--R", "2", "--grid", "128"]);
    assert_exit(&out, 0, "testfn-check");
}

#[test]
fn solve_emits_a_reusable_function_table() {
    let dir = tempfile::tempdir().unwrap();
    let graph = gen_to_file(dir.path(), "p6", &["gen", "path", "--n", "6"]);
    let table = dir.path().join("u.csv");
    let out = run(&[
        "solve", "--graph", &graph, "--R", "20", "--sigma", "2", "--V", "const",
        "--bv", "1", "--cap", "v6", "--n-per-edge", "8",
        "--out", table.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "solve");
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.contains("v:v6,1"), "capped vertex holds the boundary value");

    // the absorption solution bends upward along edges, so it must NOT
    // certify as a (source-sign, concave) supersolution
    let out = run(&[
        "certify", "--graph", &graph, "--table", table.to_str().unwrap(),
        "--sigma", "2", "--V", "const", "--cap", "v6", "--n-per-edge", "8",
    ]);
    assert_exit(&out, 1, "absorption solve is not a supersolution");

    // determinism across worker counts
    let table2 = dir.path().join("u2.csv");
    let out = qg(&[
        "solve", "--graph", &graph, "--R", "20", "--sigma", "2", "--V", "const",
        "--bv", "1", "--cap", "v6", "--n-per-edge", "8",
        "--out", table2.to_str().unwrap(),
    ])
    .env("QG_THREADS", "3")
    .output()
    .unwrap();
    assert_exit(&out, 0, "solve with capped workers");
    assert_eq!(
        std::fs::read(&table).unwrap(),
        std::fs::read(&table2).unwrap(),
        "solve tables must be byte-identical across thread counts"
    );
}

#[test]
fn certify_accepts_a_concave_cosine_table() {
    let dir = tempfile::tempdir().unwrap();
    let graph = gen_to_file(dir.path(), "p1", &["gen", "path", "--n", "1"]);
    let mut table = String::from("v:v0,0.25\nv:v1,0\n");
    for k in 1..16 {
        let x = k as f64 / 16.0;
        let u = 0.25 * (std::f64::consts::PI * x / 2.0).cos();
        table.push_str(&format!("e:e1:{x},{u}\n"));
    }
    let path = dir.path().join("cos.csv");
    std::fs::write(&path, table).unwrap();
    let out = run(&[
        "certify", "--graph", &graph, "--table", path.to_str().unwrap(),
        "--sigma", "2", "--V", "const", "--cap", "v0,v1",
        "--n-per-edge", "16", "--tol", "1e-3",
    ]);
    assert_exit(&out, 0, "cosine profile certifies");
    assert!(stdout_of(&out).contains("PASS"));
}

#[test]
fn probe_sweeps_radii_and_reports_json() {
    let out = run(&[
        "probe", "--family", "path", "--V", "const", "--sigma", "2", "--bv", "1",
        "--radii", "4,8", "--n-per-edge", "8", "--json",
    ]);
    assert_exit(&out, 0, "probe path");
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row["error"].is_null());
        assert!(row["residual"].as_f64().unwrap() < 1e-9);
    }
    // larger ball, smaller core value: the blow-up barrier squeezes out
    assert!(rows[1]["core_sup"].as_f64().unwrap() < rows[0]["core_sup"].as_f64().unwrap());
}

#[test]
fn chain_check_runs_both_modes_on_the_zero_function() {
    let dir = tempfile::tempdir().unwrap();
    let graph = gen_to_file(dir.path(), "p8", &["gen", "path", "--n", "8"]);
    let mut table = String::new();
    for v in 0..=8 {
        table.push_str(&format!("v:v{v},0\n"));
    }
    let path = dir.path().join("zero.csv");
    std::fs::write(&path, table).unwrap();
    for mode in ["compact", "weighted"] {
        let csv = dir.path().join(format!("chain-{mode}.csv"));
        let out = run(&[
            "chain-check", "--graph", &graph, "--table", path.to_str().unwrap(),
            "--mode", mode, "--sigma", "2", "--R", "2",
            "--out", csv.to_str().unwrap(),
        ]);
        assert_exit(&out, 0, &format!("chain-check {mode}"));
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("line,lhs,rhs,slack,pass\n"));
        assert!(text.lines().skip(1).all(|l| l.ends_with(",true")), "csv:\n{text}");
    }
}

#[test]
fn json_flags_emit_parseable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let graph = gen_to_file(dir.path(), "p4", &["gen", "path", "--n", "4"]);
    let out = run(&["validate", "--graph", &graph, "--json"]);
    assert_exit(&out, 0, "validate --json");
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["connected"], serde_json::Value::Bool(true));

    let out = run(&["mollify-check", "--graph", &graph, "--bridge", "quintic", "--json"]);
    assert_exit(&out, 0, "mollify-check --json");
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["pass"], serde_json::Value::Bool(true));

    let out = run(&[
        "growth-check", "--family", "path", "--V", "const", "--sigma", "2",
        "--R0", "2", "--Rmax", "8", "--Rsteps", "3", "--json",
    ]);
    assert_exit(&out, 0, "growth-check --json");
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["holds"], serde_json::Value::Bool(true));
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}
