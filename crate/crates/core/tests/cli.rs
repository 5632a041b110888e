use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pbdfs::bench::{read_csv, EvalRow, InstanceRow, ReportRow, SolutionFile};
use pbdfs::predictor::average_precision;

const CONFIG: &str = r#"
problem = "misp"
seed = 3
termination = "first_feasible"
methods = ["pbdfs-gcn", "pbdfs-lr", "pbdfs-oracle", "dfs", "rounding"]

[counts]
train = 6
test = 3

[train_size]
min_n = 12
max_n = 18

[sizes]
small = { n = 20 }
medium = { n = 25 }
large = { n = 30 }

[training]
epochs = 3
layers = 3
hidden = 8
"#;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("cfg.toml"), CONFIG).unwrap();
        Workspace { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_pbdfs"))
            .current_dir(self.dir.path())
            .env("RUST_LOG", "warn")
            .args(["--config", "cfg.toml", "--data", "data"])
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "pbdfs {args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn usage_and_config_errors_exit_2() {
    let ws = Workspace::new();
    let bad_problem = Command::new(env!("CARGO_BIN_EXE_pbdfs"))
        .args(["--problem", "tsp", "gen"])
        .output()
        .unwrap();
    assert_eq!(bad_problem.status.code(), Some(2));
    fs::write(ws.path("bad.toml"), "problem = \"misp\"\nunknown_key = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pbdfs"))
        .current_dir(ws.dir.path())
        .args(["--config", "bad.toml", "gen"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));
}

#[test]
fn runtime_errors_exit_1() {
    let ws = Workspace::new();
    // No instances at all.
    let out = ws.run(&["train"]);
    assert_eq!(out.status.code(), Some(1));
    // Test split only, still nothing to train on.
    ws.ok(&["gen", "--scale", "small"]);
    assert_eq!(ws.run(&["train"]).status.code(), Some(1));
    // No model yet.
    assert_eq!(ws.run(&["predict"]).status.code(), Some(1));
    // No heuristic results yet.
    assert_eq!(ws.run(&["report"]).status.code(), Some(1));
}

#[test]
fn gen_is_deterministic() {
    let a = Workspace::new();
    let b = Workspace::new();
    a.ok(&["gen"]);
    b.ok(&["gen"]);
    let files = files_under(&a.path("data"));
    assert_eq!(files, files_under(&b.path("data")));
    // train + 3 test splits, instance plus metadata each.
    assert_eq!(files.len(), 2 * (6 + 3 * 3));
    for f in files {
        assert_eq!(
            fs::read(a.path("data").join(&f)).unwrap(),
            fs::read(b.path("data").join(&f)).unwrap(),
            "{} differs",
            f.display()
        );
    }
    let other_seed = Workspace::new();
    other_seed.ok(&["--seed", "4", "gen", "--scale", "small"]);
    let names: Vec<_> = files_under(&other_seed.path("data/misp/small"));
    assert!(!names.iter().any(|n| a.path("data/misp/small").join(n).exists()));
}

#[test]
fn label_skips_existing_and_respects_limits() {
    let ws = Workspace::new();
    ws.ok(&["gen", "--scale", "small"]);
    let out = ws.ok(&["label", "--scale", "small", "--node-limit", "1"]);
    assert!(out.contains("labeled 0"), "{out}");
    let sol_path = ws.path("data/misp/small").join(
        files_under(&ws.path("data/misp/small"))
            .into_iter()
            .find(|p| p.to_string_lossy().ends_with(".sol.json"))
            .unwrap(),
    );
    let sol: SolutionFile = serde_json::from_str(&fs::read_to_string(&sol_path).unwrap()).unwrap();
    assert!(!sol.proved_optimal);
    assert!(!sol.is_label());
    let out = ws.ok(&["label", "--scale", "small"]);
    assert!(out.contains("skipped 3"), "{out}");
}

#[test]
fn full_pipeline() {
    let ws = Workspace::new();
    ws.ok(&["gen"]);
    let out = ws.ok(&["label"]);
    assert!(out.contains("labeled 9"), "{out}");
    let out = ws.ok(&["train"]);
    assert!(out.contains("trained on 6 instances"), "{out}");
    ws.ok(&["--model", "lr", "train", "--epochs", "0"]);
    assert!(ws.path("data/misp/models/gcn.json").exists());
    let log = fs::read_to_string(ws.path("data/misp/results/train_gcn.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 3);

    let out = ws.ok(&["predict", "--scale", "small"]);
    assert!(out.contains("wrote 3 probability files"), "{out}");
    for f in files_under(&ws.path("data/misp/small")) {
        let name = f.to_string_lossy().into_owned();
        if let Some(seed) = name.strip_suffix(".gcn.prob.json") {
            let p: Vec<f64> =
                serde_json::from_str(&fs::read_to_string(ws.path("data/misp/small").join(&f)).unwrap()).unwrap();
            assert_eq!(p.len(), 20, "instance {seed}");
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    // The untrained LR model predicts 0.5 everywhere.
    ws.ok(&["--model", "lr", "eval-ml", "--scale", "small"]);
    let rows: Vec<EvalRow> = read_csv(&ws.path("data/misp/results/eval_lr_small.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r.instance != "mean") {
        let sol: SolutionFile = serde_json::from_str(
            &fs::read_to_string(ws.path(&format!("data/misp/small/{}.sol.json", r.instance))).unwrap(),
        )
        .unwrap();
        let y: Vec<f64> = sol.values.iter().map(|&b| b as f64).collect();
        assert_eq!(r.ap, average_precision(&vec![0.5; y.len()], &y).unwrap());
        assert_eq!(r.prevalence, y.iter().sum::<f64>() / y.len() as f64);
    }

    let out = ws.ok(&["heuristic", "--scale", "small"]);
    assert!(out.contains("ran 15 heuristic instances"), "{out}");
    let oracle: Vec<InstanceRow> = read_csv(&ws.path("data/misp/results/heuristic/small/pbdfs-oracle.csv")).unwrap();
    for r in &oracle {
        assert_eq!(r.best_objective, r.optimum);
        assert_eq!(r.backtracks, 0);
    }
    let report: Vec<ReportRow> = read_csv(&ws.path("data/misp/results/report_small.csv")).unwrap();
    assert_eq!(report.len(), 5);
    let again = ws.ok(&["report", "--scale", "small"]);
    assert!(again.lines().count() == 6, "{again}");
    assert!(ws.path("data/misp/results/heuristic/small/dfs").is_dir());
}
