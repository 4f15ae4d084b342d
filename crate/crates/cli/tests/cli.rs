use std::fs;
use std::process::{Command, Output};

fn steiner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steiner")).args(args).output().unwrap()
}

#[test]
fn enumerate_lists_systems() {
    let out = steiner(&["enumerate", "--n", "5", "--r", "3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 15);
}

#[test]
fn hitting_times_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ht.jsonl");
    let out = steiner(&[
        "hitting-times", "--n", "3", "--r", "3", "--trials", "4", "--omega", "5", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 4);
    for suffix in [".report.json", ".summary.csv", ".table.txt"] {
        assert!(dir.path().join(format!("ht.jsonl{suffix}")).exists());
    }
}

#[test]
fn csv_format_has_header() {
    let out = steiner(&["simulate", "--n", "12", "--r", "3", "--trials", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("accepted,draws_total,error,rejections,saturated,seed,tau_c,tau_o,trial\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn failing_verdict_exits_one() {
    let out = steiner(&[
        "hitting-times", "--n", "40", "--r", "3", "--trials", "20", "--omega", "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[FAIL] fraction_in_window"));
}

#[test]
fn bad_configuration_exits_two() {
    assert_eq!(steiner(&["simulate", "--n", "2", "--r", "3"]).status.code(), Some(2));
    assert_eq!(steiner(&["validate-count", "--n", "10", "--r", "3"]).status.code(), Some(2));
    assert_eq!(steiner(&["simulate", "--r", "3"]).status.code(), Some(2));
    assert_eq!(steiner(&["simulate", "--n", "9", "--r", "3", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    fs::write(&path, "kind = simulate\nn = 15\nr = 3\nell = 2\ntrials = 2\nseed = 9\n").unwrap();
    let p = path.to_str().unwrap();
    let a = steiner(&["simulate", "--config", p]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(String::from_utf8(a.stdout.clone()).unwrap().lines().count(), 2);
    let b = steiner(&["simulate", "--config", p, "--trials", "5"]);
    let text = String::from_utf8(b.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with(&String::from_utf8(a.stdout).unwrap()));
    assert_eq!(steiner(&["hitting-times", "--config", p]).status.code(), Some(2));
}

#[test]
fn output_independent_of_threads() {
    let run = |threads: &str| {
        steiner(&["isolated-dist", "--n", "200", "--r", "3", "--trials", "40", "--threads", threads]).stdout
    };
    let one = run("1");
    assert_eq!(run("4"), one);
    assert_eq!(run("8"), one);
}

#[test]
fn edge_list_export_and_census_import() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("sys.txt");
    let e = edges.to_str().unwrap();
    let out = steiner(&["simulate", "--n", "9", "--r", "3", "--trials", "1", "--m", "4", "--edges", e]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&edges).unwrap();
    assert!(text.starts_with("9 3 2 4\n"));
    assert_eq!(text.lines().count(), 5);

    let census = steiner(&["switching-census", "--input", e]);
    assert_eq!(census.status.code(), Some(0));
    let record = String::from_utf8(census.stdout).unwrap();
    assert!(record.contains("\"partial_steiner\":true"));
    assert!(record.contains("\"class\":0"));

    let cluster = dir.path().join("cluster.txt");
    fs::write(&cluster, "8 3 2 2\n1 2 3\n1 2 4\n").unwrap();
    let out = steiner(&["switching-census", "--input", cluster.to_str().unwrap()]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"class\":1"));

    assert_eq!(steiner(&["hitting-times", "--input", e]).status.code(), Some(2));
}

#[test]
fn enumerate_exports_every_system() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("all.txt");
    let out = steiner(&["enumerate", "--n", "5", "--r", "3", "--m", "2", "--edges", edges.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&edges).unwrap();
    assert_eq!(text.matches("5 3 2 2\n").count(), 15);
}
