use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_energy-pomdp")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tiger_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["bench", "tiger", "--out", "tiger.pomdp"]).status.success());
    let o = run(dir.path(), &["check", "tiger.pomdp", "--out", "allowed.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().last(), Some("feasible"));
    let allowed = std::fs::read_to_string(dir.path().join("allowed.txt")).unwrap();
    assert!(allowed.starts_with("# energy-pomdp"));
    assert!(allowed.lines().any(|l| l.contains("listen")));
}

#[test]
fn corridor_without_reload_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["bench", "corridor", "--len", "5", "--cap", "3", "--out", "c.pomdp"]).status.success());
    let o = run(dir.path(), &["check", "c.pomdp"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().last(), Some("infeasible"));

    // The same corridor with a reload cell is fine.
    run(dir.path(), &["bench", "corridor", "--len", "5", "--cap", "3", "--reload-at", "2", "--out", "r.pomdp"]);
    assert_eq!(run(dir.path(), &["check", "r.pomdp"]).status.code(), Some(0));
    // Solving an infeasible model also exits 1.
    assert_eq!(run(dir.path(), &["solve", "c.pomdp"]).status.code(), Some(1));
}

#[test]
fn input_errors_name_the_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.pomdp"), "states: 2\nactions: 1\nobservations: 1\nT: a0 : 0 : 7 1\n").unwrap();
    let o = run(dir.path(), &["check", "bad.pomdp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("bad.pomdp:4:"), "{}", stderr(&o));

    let o = run(dir.path(), &["check", "missing.pomdp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("missing.pomdp: "));

    run(dir.path(), &["bench", "tiger", "--out", "tiger.pomdp"]);
    std::fs::write(dir.path().join("t.table"), "# precision=20 capacity=3 states=9\n1 2 : 0.5\n").unwrap();
    let o = run(dir.path(), &["learn", "tiger.pomdp", "--table", "t.table"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("t.table:2: "), "{}", stderr(&o));
}

#[test]
fn hallway_pipeline_fills_every_policy_column() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(d, &["bench", "hallway", "--layout", "6x6", "--out", "h.pomdp"]).status.success());
    let o = run(d, &["solve", "h.pomdp", "--seed", "3", "--out", "h.table", "--trace", "trace.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(
        d,
        &[
            "learn",
            "h.pomdp",
            "--table",
            "h.table",
            "--seed",
            "3",
            "--out",
            "h.tree",
            "--dot",
            "h.dot",
            "--emit-data",
            "h.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(d.join("h.dot")).unwrap().contains("digraph"));

    // Learning again from the emitted training set gives the same tree.
    let o = run(d, &["learn", "h.pomdp", "--data", "h.csv", "--out", "again.tree"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let last = |p: &str| std::fs::read_to_string(d.join(p)).unwrap().lines().last().unwrap().to_string();
    assert_eq!(last("h.tree"), last("again.tree"));

    let args = [
        "eval",
        "h.pomdp",
        "--table",
        "h.table",
        "--tree-file",
        "h.tree",
        "--sims",
        "2000",
        "--seed",
        "3",
        "--csv",
        "r.csv",
    ];
    let o = run(d, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("seed=3"));
    for policy in ["sigma_all", "rtdp", "dt"] {
        let row = report.lines().find(|l| l.starts_with(policy)).unwrap_or_else(|| panic!("no {policy} row"));
        let val = row.split_whitespace().nth(2).unwrap().trim_start_matches('~');
        assert!(val.parse::<f64>().unwrap() > 0.0, "{row}");
    }
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();

    // Same seed, same bytes, regardless of thread count.
    let o2 = Command::new(env!("CARGO_BIN_EXE_energy-pomdp"))
        .current_dir(d)
        .env("ENERGY_POMDP_THREADS", "1")
        .args(&args[..args.len() - 1])
        .arg("r2.csv")
        .output()
        .unwrap();
    assert_eq!(stdout(&o2), report);
    assert_eq!(std::fs::read_to_string(d.join("r2.csv")).unwrap(), csv);
}
