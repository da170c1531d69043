use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn substruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_substruct"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const C6: &str = "graph 6\nedge 1 2\nedge 2 3\nedge 3 4\nedge 4 5\nedge 5 6\nedge 6 1\n";
const TWO_C3: &str = "graph 6\nedge 1 2\nedge 2 3\nedge 3 1\nedge 4 5\nedge 5 6\nedge 6 4\n";

#[test]
fn generate_label_and_train() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("er");
    let out = substruct(&["--seed", "3", "gen", "--family", "er", "--count", "60", "--out", p(&ds)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["graphs.jsonl", "meta.json", "splits.json"] {
        assert!(ds.join(f).exists(), "missing {f}");
    }
    assert_eq!(fs::read_to_string(ds.join("graphs.jsonl")).unwrap().lines().count(), 60);

    let out = substruct(&["label", "--dataset", p(&ds), "--task", "triangle"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let labels = fs::read_to_string(ds.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 61);

    let model = dir.path().join("model.json");
    let metrics = dir.path().join("metrics.csv");
    let outs = format!("{},{}", p(&model), p(&metrics));
    let out = substruct(&[
        "--seed", "1", "train", "--dataset", p(&ds), "--task", "triangle", "--epochs", "3", "--H",
        "4", "--out", &outs,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(model).unwrap()).unwrap();
    assert!(model.is_object());
    assert_eq!(fs::read_to_string(metrics).unwrap().lines().count(), 4);
}

#[test]
fn generation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, seed: &str| {
        let d = dir.path().join(name);
        let out = substruct(&["--seed", seed, "gen", "--family", "rr", "--count", "12", "--out", p(&d)]);
        assert_eq!(code(&out), 0);
        fs::read_to_string(d.join("graphs.jsonl")).unwrap()
    };
    assert_eq!(read("a", "5"), read("b", "5"));
    assert_ne!(read("a2", "5"), read("c", "6"));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = substruct(&["gen", "--family", "er", "--count", "5", "--out", p(&dir.path().join("x"))]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&substruct(&["verify", "mpnn-blind"])), 2);
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(code(&substruct(&["verify", "no-such-check"])), 2);
    assert_eq!(code(&substruct(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "graph 2\nedge 1 3\n").unwrap();
    let out = substruct(&["count", "--graphs", p(&g), "--pattern", "builtin:triangle", "--mode", "matching"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn count_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, format!("{C6}{TWO_C3}")).unwrap();
    let out = substruct(&["count", "--graphs", p(&g), "--pattern", "builtin:triangle", "--mode", "matching"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "graph_id,count\n0,0\n1,2\n");
    let out = substruct(&["count", "--graphs", p(&g), "--pattern", "builtin:path:3", "--mode", "containment"]);
    assert_eq!(stdout(&out), "graph_id,count\n0,6\n1,6\n");
}

#[test]
fn pattern_size_limit_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, C6).unwrap();
    let out = substruct(&["count", "--graphs", p(&g), "--pattern", "builtin:clique:9", "--mode", "containment"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn wl_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    fs::write(&a, C6).unwrap();
    fs::write(&b, TWO_C3).unwrap();
    let run = |k: &str| substruct(&["wl", "--g1", p(&a), "--g2", p(&b), "--k", k]);
    let two = run("2");
    assert_eq!(code(&two), 0);
    assert!(stdout(&two).to_lowercase().contains("indistinguishable"));
    let three = run("3");
    assert_eq!(code(&three), 0);
    assert!(!stdout(&three).to_lowercase().contains("indistinguishable"));
}

#[test]
fn counterexample_verification() {
    let out = substruct(&["counterexample", "--construction", "doubled", "--pattern", "builtin:triangle", "--verify"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = substruct(&["counterexample", "--construction", "path", "--k", "2", "--T", "1", "--m", "6", "--verify"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("v.json");
    let out = substruct(&["verify", "path-pairs", "--out", p(&v)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = substruct(&["report", p(&v)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("id,kind,pass"));
    assert!(lines.next().unwrap().starts_with("path-pairs,"));

    let out = substruct(&["report", p(&v), p(&v)]);
    assert_eq!(code(&out), 2);
    let out = substruct(&["report"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 1);
}
