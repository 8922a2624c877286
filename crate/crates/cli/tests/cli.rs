use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiperturb")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn design_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("t5.tsv");
    std::fs::write(&graph, "0\t1\n0\t2\n1\t3\n1\t4\n").unwrap();
    let batch = dir.path().join("batch.txt");
    let out = run(&["design", "--graph", path(&graph), "--algo", "greedy1", "--m", "2", "--q", "1", "--out", path(&batch)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["eval", "--graph", path(&graph), "--batch", path(&batch)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("edges_oriented_fraction\t1\n"), "{text}");
}

#[test]
fn dream_style_names() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("net.tsv");
    std::fs::write(&graph, "G1\tG2\t1\nG1\tG3\t1\nG2\tG3\t0\n").unwrap();
    let out = run(&["gen", "--graph", path(&graph)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0\t1\n0\t2\n");
}

#[test]
fn sweep_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str, threads: &str| {
        run(&[
            "sweep", "--graph", "er:10:0.3", "--algo", "rand,greedy1,dgc,ssg_b", "--m", "1,2", "--q", "2", "--repeats", "6",
            "--seed", "11", "--reproducible", "--threads", threads, "--formats", "csv", "--out", out,
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(args(path(&a), "1").status.success());
    assert!(args(path(&b), "4").status.success());
    let (x, y) = (std::fs::read(a.join("results.csv")).unwrap(), std::fs::read(b.join("results.csv")).unwrap());
    assert_eq!(x, y);
    assert_eq!(String::from_utf8(x).unwrap().lines().count(), 1 + 4 * 2 * 6);
}

#[test]
fn loop_writes_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["loop", "--graph", "tree:7", "--algo", "rand,ssg_a", "--repeats", "3", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.ends_with("fully_oriented=true")));
    assert!(dir.path().join("rounds.csv").exists());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "[graph]\nkind = \"star_forest\"\nsizes = [4, 3]\n\n[experiment]\nalgorithms = [\"ssg_b\"]\nm = 1\nq = 2\nrepeats = 2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", "--config", path(&cfg), "--repeats", "3", "--out", path(&out_dir), "--formats", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.starts_with("ssg_b,1,2,")));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["sweep", "--graph", "tree:5", "--q", "9"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--graph", "er:5"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--graph", "tree:5", "--metric", "f_mi"]).status.code(), Some(1));
    assert_eq!(run(&["design"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("cyclic.tsv");
    std::fs::write(&graph, "a\tb\nb\ta\n").unwrap();
    assert_eq!(run(&["gen", "--graph", path(&graph)]).status.code(), Some(1));
    let g = dir.path().join("g.tsv");
    std::fs::write(&g, "0\t1\n").unwrap();
    let missing = dir.path().join("nope.txt");
    assert_eq!(run(&["eval", "--graph", path(&g), "--batch", path(&missing)]).status.code(), Some(1));
    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    let out = run(&["sweep", "--graph", "tree:5", "--out", path(&blocked.join("sub"))]);
    assert_eq!(out.status.code(), Some(2));
}
