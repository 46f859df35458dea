use std::path::Path;
use std::process::{Command, Output};

fn triplead(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triplead")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = triplead(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY: &str = "seed = 5

[attr]
hidden = 8
attn_hidden = 4
scales = 2

[struct]
hidden = 8
k = 4

[mix]
hidden = 8

[train]
pretrain_epochs = 3
attr_epochs = 3
struct_epochs = 3
mix_epochs = 3
";

fn make_graph(dir: &Path) -> Vec<String> {
    let g = dir.join("g");
    ok(&[
        "inject", "--synthetic", "--nodes", "60", "--features", "5", "--seed", "3", "--cliques", "1",
        "--clique-size", "5", "--attr-anomalies", "4", "--mixed", "2", "--pool", "10", "--out-dir", p(&g),
    ]);
    ["edges.txt", "attrs.csv", "labels.txt"]
        .iter()
        .zip(["--edges", "--attrs", "--labels"])
        .flat_map(|(f, flag)| [flag.to_string(), p(&g.join(f)).to_string()])
        .collect()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(triplead(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(triplead(&["train", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(triplead(&[]).status.code(), Some(2));
    assert_eq!(triplead(&["gradcheck", "extra"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = triplead(&["train", "--edges", p(&missing), "--attrs", p(&missing), "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn gradcheck_succeeds() {
    let text = ok(&["gradcheck"]);
    assert!(text.lines().filter(|l| l.starts_with("ok")).count() >= 9, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn train_score_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = make_graph(dir.path());
    let g: Vec<&str> = graph.iter().map(String::as_str).collect();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();

    let run = dir.path().join("run");
    ok(&[&["train", "--config", p(&cfg), "--out-dir", p(&run)], &g[..]].concat());
    for name in ["phase1-struct.ckpt", "phase2-attr.ckpt", "phase3-struct.ckpt", "phase4-mix.ckpt", "manifest.json"] {
        assert!(run.join(name).exists(), "{name}");
    }

    let scores = dir.path().join("scores.csv");
    let report = dir.path().join("report.json");
    ok(&[&["score", "--run", p(&run), "--out", p(&scores), "--report", p(&report)], &g[..]].concat());
    let csv = std::fs::read_to_string(&scores).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "id,as_attr,as_str,as_mix,as_combined,rank,label");
    assert_eq!(csv.lines().count(), 61);

    // same config and seed reproduce the files byte for byte
    let run2 = dir.path().join("run2");
    let scores2 = dir.path().join("scores2.csv");
    let report2 = dir.path().join("report2.json");
    ok(&[&["train", "--config", p(&cfg), "--out-dir", p(&run2)], &g[..]].concat());
    ok(&[&["score", "--run", p(&run2), "--out", p(&scores2), "--report", p(&report2)], &g[..]].concat());
    assert_eq!(std::fs::read(&scores).unwrap(), std::fs::read(&scores2).unwrap());
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(&report2).unwrap());
    for name in ["phase1-struct.ckpt", "phase4-mix.ckpt"] {
        assert_eq!(std::fs::read(run.join(name)).unwrap(), std::fs::read(run2.join(name)).unwrap());
    }

    let json: serde_json::Value = serde_json::from_str(&ok(&["eval", "--scores", p(&scores)])).unwrap();
    let auc = json["metrics"]["auc_roc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
}

#[test]
fn eval_of_perfect_scores_reports_one() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("s.csv");
    let mut text = String::from("id,as_attr,as_str,as_mix,as_combined,rank,label\n");
    for (i, label) in [0, 1, 0, 2, 0, 3].iter().enumerate() {
        let s = if *label > 0 { 1.0 } else { 0.0 };
        text += &format!("{i},{s},{s},{s},{s},{},{label}\n", i + 1);
    }
    std::fs::write(&scores, text).unwrap();
    let out = dir.path().join("r.json");
    ok(&["eval", "--scores", p(&scores), "--out", p(&out)]);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["metrics"]["auc_roc"], 1.0);
    assert_eq!(json["metrics"]["auc_pr"], 1.0);
}

#[test]
fn curvature_stats_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let graph = make_graph(dir.path());
    let g: Vec<&str> = graph.iter().map(String::as_str).collect();
    let out = dir.path().join("curv");
    ok(&[&["curvature-stats", "--bins", "10", "--out-dir", p(&out)], &g[..]].concat());
    let edges = std::fs::read_to_string(out.join("edges.csv")).unwrap();
    assert!(edges.starts_with("i,j,kappa_raw,kappa_norm,edge_class\n"));
    assert!(edges.lines().skip(1).all(|l| ["nn", "na", "aa"].contains(&l.rsplit(',').next().unwrap())));
    let hist = std::fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("bin_lo,bin_hi,count_nn,count_na\n"));
    assert_eq!(hist.lines().count(), 11);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("histogram.json")).unwrap()).unwrap();
    assert_eq!(json["bins"].as_array().unwrap().len(), 10);

    let unlabeled = triplead(&["curvature-stats", "--edges", &g[1], "--attrs", &g[3], "--out-dir", p(&out)]);
    assert_eq!(unlabeled.status.code(), Some(1));
}

#[test]
fn sweep_runs_one_cell_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let graph = make_graph(dir.path());
    let g: Vec<&str> = graph.iter().map(String::as_str).collect();
    let cfg = dir.path().join("sweep.toml");
    let text = TINY.replace("seed = 5\n", "seed = 5\n\n[sweep]\n\"distill.margin\" = [0.1, 0.5]\n\"struct.k\" = [2, 3, 4]\n");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("sweep");
    ok(&[&["sweep", "--config", p(&cfg), "--out-dir", p(&out)], &g[..]].concat());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 6);
    for k in 0..6 {
        assert!(out.join(format!("cell-{k:03}")).join("report.json").exists());
    }
}

#[test]
fn unified_mode_writes_single_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let graph = make_graph(dir.path());
    let g: Vec<&str> = graph.iter().map(String::as_str).collect();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let run = dir.path().join("run");
    ok(&[&["train", "--unified", "--config", p(&cfg), "--out-dir", p(&run)], &g[..]].concat());
    assert!(run.join("unified.ckpt").exists());
    let scores = dir.path().join("s.csv");
    ok(&[&["score", "--run", p(&run), "--out", p(&scores)], &g[..]].concat());
}
