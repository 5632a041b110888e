//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbdfs::bench::{
    cmd_gen, cmd_heuristic, cmd_label, cmd_report, cmd_train, generate_instance, read_csv, Dataset,
    ExperimentConfig, InstanceRow, Method, Problem, Scale,
};
use pbdfs::features::FeatureMatrix;
use pbdfs::generate::{formulate_dsp, formulate_misp, formulate_vcp, gen_cap, gen_graph, UGraph};
use pbdfs::linkage::{build_linkage_graph, normalized_laplacian};
use pbdfs::lp::lp_relax;
use pbdfs::oracle::{
    average_precision_sweep, brute_force, finite_difference_gradients, gcn_loss_dense, lp_vertex_enumeration,
};
use pbdfs::predictor::{
    average_precision, cross_entropy, prevalence, train_gcn, GcnModel, Model, TrainConfig, TrainExample,
};
use pbdfs::search::{baseline_dfs, Event, ExactLimits};
use pbdfs::{pb_dfs, solve_exact, Assignment, MipInstance, ProbabilityVector, ScoreVariant, Sense, Termination};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
enum Family {
    Misp,
    Dsp,
    Vcp,
    Cap,
}

const FAMILIES: [Family; 4] = [Family::Misp, Family::Dsp, Family::Vcp, Family::Cap];

/// Random instance of a family with at most `max_vars` variables.
fn small_instance(family: Family, max_vars: usize, seed: u64) -> MipInstance {
    let mut r = rng(seed);
    match family {
        Family::Cap => {
            let bids = r.random_range(4..=max_vars);
            let items = r.random_range(3..=bids.min(10));
            gen_cap(items, bids, seed).unwrap()
        }
        graph => {
            let n = r.random_range(4..=max_vars);
            let g = gen_graph(n, r.random_range(2..=5), seed).unwrap();
            match graph {
                Family::Misp => formulate_misp(&g),
                Family::Dsp => formulate_dsp(&g),
                _ => formulate_vcp(&g),
            }
        }
    }
}

/// 200 instances, 50 per family, at most 16 variables.
fn oracle_corpus() -> Vec<(Family, MipInstance)> {
    FAMILIES
        .iter()
        .flat_map(|&f| (0..50).map(move |i| (f, small_instance(f, 16, 1_000 + i))))
        .collect()
}

fn criterion_1(corpus: &[(Family, MipInstance)]) -> Verdict {
    let clock = Instant::now();
    let mut mismatches = Vec::new();
    let mut unproven = 0;
    for (f, inst) in corpus {
        let exact = solve_exact(inst, ExactLimits::default()).unwrap();
        let oracle = brute_force(inst).map(|(_, v)| v);
        if !exact.proved_optimal {
            unproven += 1;
        }
        // Integer data: objectives are exact in floating point.
        if exact.objective != oracle {
            mismatches.push(format!("{f:?} {}: {:?} vs {:?}", inst.name, exact.objective, oracle));
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let max_n = corpus.iter().map(|(_, i)| i.nvars).max().unwrap();
    verdict(
        mismatches.is_empty() && unproven == 0 && secs < 120.0,
        format!(
            "{}/{} exact matches, {unproven} unproven, max n {max_n}, {secs:.1} s{}",
            corpus.len() - mismatches.len(),
            corpus.len(),
            mismatches.first().map(|m| format!("; first mismatch {m}")).unwrap_or_default()
        ),
    )
}

fn criterion_2(corpus: &[(Family, MipInstance)]) -> Verdict {
    let mut ok = 0;
    let mut same_point = 0;
    let mut feasible = 0;
    let mut failures = Vec::new();
    for (f, inst) in corpus {
        let Some((opt, value)) = brute_force(inst) else { continue };
        feasible += 1;
        let p = ProbabilityVector(opt.to_values().unwrap());
        let out = pb_dfs(inst, &p, ScoreVariant::MaxP1mp, Termination::FirstFeasible).unwrap();
        let got = out.incumbent.as_ref().map(|i| i.objective);
        if got == Some(value) && out.stats.backtracks == 0 {
            ok += 1;
            if out.incumbent.unwrap().solution == opt {
                same_point += 1;
            }
        } else {
            failures.push(format!("{f:?}: {got:?} vs {value}, {} backtracks", out.stats.backtracks));
        }
    }
    verdict(
        ok == feasible && feasible > 0,
        format!(
            "{ok}/{feasible} optimal with 0 backtracks ({same_point} returned the oracle point itself){}",
            failures.first().map(|m| format!("; first failure {m}")).unwrap_or_default()
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut r = rng(3);
    let mut same = 0;
    let mut edges = 0;
    for i in 0..50 {
        let n = r.random_range(2..=100);
        let g = gen_graph(n, r.random_range(1..=8), 3_000 + i).unwrap();
        let linkage: BTreeSet<(usize, usize)> = build_linkage_graph(&formulate_misp(&g)).edges().collect();
        edges += g.nedges();
        if linkage == g.edges {
            same += 1;
        }
    }
    verdict(same == 50, format!("{same}/50 edge sets identical ({edges} edges in total)"))
}

fn random_example(r: &mut ChaCha8Rng) -> (TrainExample, usize, usize) {
    let n = r.random_range(2..=5);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut edges: Vec<(usize, usize)> = pairs.iter().copied().filter(|_| r.random_bool(0.5)).collect();
    if edges.is_empty() {
        edges.push(pairs[0]);
    }
    let g = UGraph::new(n, edges).unwrap();
    let lap = normalized_laplacian(&build_linkage_graph(&formulate_vcp(&g)));
    let nfeat = r.random_range(1..=4);
    let values = Array2::from_shape_simple_fn((n, nfeat), || r.random_range(-1.0..1.0));
    let features = FeatureMatrix {
        names: (0..nfeat).map(|k| format!("f{k}")).collect(),
        values,
    };
    let labels = (0..n).map(|_| r.random_range(0..2) as f64).collect();
    let layers = r.random_range(1..=3);
    let hidden = r.random_range(1..=4);
    (TrainExample::new(lap, features, labels).unwrap(), layers, hidden)
}

fn criterion_4() -> Verdict {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let mut ok = 0;
    for i in 0..20 {
        let (ex, layers, hidden) = random_example(&mut r);
        let model = GcnModel::new(ex.features.nfeat(), hidden, layers, 400 + i).unwrap();
        let (_, grads) = model.gradients(&ex).unwrap();
        let lap = ex.laplacian.to_dense();
        let fd = finite_difference_gradients(&model.weights, 1e-5, |w| {
            gcn_loss_dense(w, &lap, &ex.features.values, &ex.labels)
        });
        // Per weight; the floor keeps exact zeros (dead units) comparable.
        let rel = grads
            .iter()
            .flatten()
            .zip(fd.iter().flatten())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-8))
            .fold(0.0, f64::max);
        worst = worst.max(rel);
        if rel < 1e-4 {
            ok += 1;
        }
    }
    verdict(ok == 20, format!("{ok}/20 with every weight below 1e-4, worst relative error {worst:.2e}"))
}

fn criterion_5() -> Verdict {
    let ln2 = cross_entropy(&[0.5, 0.5], &[1.0, 0.0]);
    // -ln(0.9), printed to six places as 0.105361.
    let ce09 = cross_entropy(&[0.9, 0.1], &[1.0, 0.0]);
    let hand_ok = (ln2 - std::f64::consts::LN_2).abs() < 1e-9 && (ce09 - 0.105_360_515_657_826_3).abs() < 1e-9;
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(1..=12);
        let p: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| r.random_range(0..2) as f64).collect();
        y[r.random_range(0..n)] = 1.0;
        let expected = average_precision_sweep(&p, &y).unwrap();
        worst = worst.max((average_precision(&p, &y).unwrap() - expected).abs());
    }
    verdict(
        hand_ok && worst < 1e-9,
        format!("CE {ln2:.9} and {ce09:.9}; AP worst deviation {worst:.1e} over 100 vectors"),
    )
}

fn criterion_6() -> Verdict {
    let triangle = UGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let c5 = UGraph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
    let cases = [(formulate_vcp(&triangle), 1.5), (formulate_misp(&c5), 2.5)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (inst, expected) in cases {
        let lp = lp_relax(&inst, &Assignment::free(inst.nvars)).unwrap();
        let oracle = lp_vertex_enumeration(&inst).unwrap();
        pass &= lp.is_optimal() && (lp.objective - expected).abs() < 1e-6 && (oracle - expected).abs() < 1e-6;
        parts.push(format!("simplex {:.6} / enumeration {oracle:.6} (expected {expected})", lp.objective));
    }
    verdict(pass, parts.join("; "))
}

fn misp_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        problem: Problem::Misp,
        seed,
        workers: 1,
        ..Default::default()
    }
}

fn labeled(inst: &MipInstance) -> Option<TrainExample> {
    let r = solve_exact(inst, ExactLimits::default()).unwrap();
    assert!(r.proved_optimal);
    TrainExample::from_instance(inst, &r.solution?.to_bits().unwrap()).ok()
}

fn criterion_7() -> (Verdict, Model) {
    let clock = Instant::now();
    let config = misp_config(7);
    let instances: Vec<MipInstance> = (0..120)
        .map(|i| generate_instance(&config, Scale::Train, i).unwrap().0)
        .collect();
    let examples: Vec<TrainExample> = instances.iter().map(|i| labeled(i).unwrap()).collect();
    let (train, test) = examples.split_at(100);
    let (gcn, _) = train_gcn(train, &TrainConfig::default()).unwrap();
    let mut ap = 0.0;
    let mut prev = 0.0;
    for ex in test {
        let p = gcn.forward(&ex.laplacian, &ex.features).unwrap().0;
        ap += average_precision(&p.0, &ex.labels).unwrap();
        prev += prevalence(&ex.labels);
    }
    ap /= test.len() as f64;
    prev /= test.len() as f64;
    let secs = clock.elapsed().as_secs_f64();
    let v = verdict(
        ap - prev >= 0.10 && secs < 600.0,
        format!(
            "mean AP {ap:.4} vs prevalence {prev:.4} (margin {:.4}) on 20 held-out, {secs:.1} s",
            ap - prev
        ),
    );
    (v, Model::Gcn(gcn))
}

fn criterion_8(model: &Model) -> Verdict {
    let config = misp_config(8);
    let mut wins = 0;
    let mut slowest = 0.0f64;
    let mut missing = 0;
    for i in 0..30 {
        let (inst, _) = generate_instance(&config, Scale::Small, i).unwrap();
        assert_eq!(inst.nvars, 200);
        let clock = Instant::now();
        let p = model.predict_instance(&inst).unwrap();
        let predict_s = clock.elapsed().as_secs_f64();
        let gcn = pb_dfs(&inst, &p, ScoreVariant::MaxP1mp, Termination::FirstFeasible).unwrap();
        let dfs = baseline_dfs(&inst, Termination::FirstFeasible).unwrap();
        match (&gcn.incumbent, &dfs.incumbent) {
            (Some(g), Some(d)) => {
                if g.objective >= d.objective {
                    wins += 1;
                }
                slowest = slowest.max(g.found_at + predict_s);
            }
            (Some(g), None) => {
                wins += 1;
                slowest = slowest.max(g.found_at + predict_s);
            }
            (None, _) => missing += 1,
        }
    }
    let share = wins as f64 / 30.0;
    verdict(
        share >= 0.70 && missing == 0 && slowest < 20.0,
        format!(
            "pbdfs-gcn >= dfs on {wins}/30 ({:.0}%), slowest best time {slowest:.3} s, {missing} without a solution",
            share * 100.0
        ),
    )
}

/// Trajectory rules checked without the library's own validator.
fn trajectory_ok(out: &pbdfs::search::SearchOutcome, inst: &MipInstance) -> Result<usize, String> {
    let pts = &out.trajectory.points;
    for w in pts.windows(2) {
        if w[1].time_s < w[0].time_s {
            return Err("time decreases".into());
        }
    }
    let inc: Vec<_> = pts.iter().filter(|p| p.event == Event::Incumbent).collect();
    for w in inc.windows(2) {
        let better = match inst.sense {
            Sense::Minimize => w[1].objective < w[0].objective,
            Sense::Maximize => w[1].objective > w[0].objective,
        };
        if !better {
            return Err(format!("{} does not improve on {}", w[1].objective, w[0].objective));
        }
    }
    if let Some(last) = inc.last() {
        let end = pts.last().unwrap();
        if end.event != Event::End || end.objective != last.objective {
            return Err("missing or wrong end row".into());
        }
    }
    if out.history.len() != inc.len() {
        return Err("history and trajectory disagree".into());
    }
    for (h, p) in out.history.iter().zip(&inc) {
        let (feasible, violated) = inst.check_feasible(&h.solution).map_err(|e| e.to_string())?;
        if !feasible {
            return Err(format!("incumbent violates rows {violated:?}"));
        }
        let value: f64 = h.solution.to_values().unwrap().iter().zip(&inst.obj).map(|(x, c)| x * c).sum();
        if (value - p.objective).abs() > 1e-9 {
            return Err("recorded objective differs from the solution's".into());
        }
    }
    Ok(inc.len())
}

fn criterion_9() -> Verdict {
    let variants = [ScoreVariant::MaxP1mp, ScoreVariant::P, ScoreVariant::OneMinusP];
    let mut runs = 0;
    let mut incumbents = 0;
    let mut failures = Vec::new();
    let mut r = rng(9);
    for family in FAMILIES {
        for variant in variants {
            for k in 0..17 {
                let inst = small_instance(family, 30, r.next_u64());
                let p: Vec<f64> = (0..inst.nvars).map(|_| r.random_range(0.0..=1.0)).collect();
                let term = if k % 4 == 3 { Termination::NodeLimit(15) } else { Termination::None };
                let out = pb_dfs(&inst, &ProbabilityVector(p), variant, term).unwrap();
                runs += 1;
                match trajectory_ok(&out, &inst) {
                    Ok(n) => incumbents += n,
                    Err(e) => failures.push(format!("{family:?}/{variant}: {e}")),
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{}/{runs} runs clean, {incumbents} incumbents checked{}",
            runs - failures.len(),
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    )
}

fn pipeline(root: &Path) -> Vec<InstanceRow> {
    let text = r#"
        problem = "misp"
        seed = 10
        termination = "first_feasible"
        workers = 2
        [counts]
        train = 12
        test = 4
        [train_size]
        min_n = 15
        max_n = 30
        [sizes]
        small = { n = 40 }
        medium = { n = 50 }
        large = { n = 60 }
        [training]
        epochs = 10
        layers = 6
        hidden = 16
    "#;
    let config: ExperimentConfig = toml::from_str(text).unwrap();
    let data = Dataset::new(root);
    let all = [Scale::Train, Scale::Small, Scale::Medium, Scale::Large];
    cmd_gen(&config, &data, &all).unwrap();
    cmd_label(&config, &data, &all).unwrap();
    cmd_train(&config, &data).unwrap();
    let lr = ExperimentConfig {
        model: pbdfs::predictor::ModelKind::Lr,
        ..config.clone()
    };
    cmd_train(&lr, &data).unwrap();
    cmd_heuristic(&config, &data, &Scale::TEST, &Method::ALL).unwrap();
    let mut rows = Vec::new();
    for scale in Scale::TEST {
        for method in Method::ALL {
            rows.extend(read_csv::<InstanceRow>(&pbdfs::bench::instance_rows_path(&data, Problem::Misp, scale, method)).unwrap());
        }
    }
    let report = cmd_report(&config, &data, &Scale::TEST, &Method::ALL).unwrap();
    assert!(!report.is_empty());
    rows
}

fn files(root: &Path, keep: impl Fn(&str) -> bool) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            if keep(&rel) {
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let rows_a = pipeline(a.path());
    let rows_b = pipeline(b.path());
    let is_instance = |p: &str| !p.contains("results") && !p.contains("models") && p.ends_with(".json");
    let is_model = |p: &str| p.contains("models");
    let inst_a = files(a.path(), is_instance);
    let same_instances = inst_a == files(b.path(), is_instance);
    let models_a = files(a.path(), is_model);
    let same_models = models_a == files(b.path(), is_model);
    let non_timing = |rows: &[InstanceRow]| -> Vec<_> {
        rows.iter()
            .map(|r| {
                (
                    r.method.clone(),
                    r.scale.clone(),
                    r.seed,
                    r.first_objective,
                    r.best_objective,
                    r.nodes,
                    r.backtracks,
                    r.optimum,
                )
            })
            .collect()
    };
    let same_rows = non_timing(&rows_a) == non_timing(&rows_b);
    let report = |root: &Path| -> Vec<_> {
        Scale::TEST
            .iter()
            .flat_map(|s| {
                read_csv::<pbdfs::bench::ReportRow>(&root.join(format!("misp/results/report_{s}.csv"))).unwrap()
            })
            .map(|r| format!("{:?}", r.non_timing()))
            .collect()
    };
    let same_report = report(a.path()) == report(b.path());
    verdict(
        same_instances && same_models && same_rows && same_report,
        format!(
            "{} instance/label files {}, {} model files {}, {} per-instance rows {}, report {}",
            inst_a.len(),
            if same_instances { "identical" } else { "differ" },
            models_a.len(),
            if same_models { "identical" } else { "differ" },
            rows_a.len(),
            if same_rows { "identical" } else { "differ" },
            if same_report { "identical" } else { "differs" },
        ),
    )
}

fn main() -> ExitCode {
    // Timed criteria are stated for a single thread.
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().unwrap();
    let mut results = Vec::new();
    let mut record = |id: usize, name: &str, v: Verdict| {
        println!("criterion {id:>2} {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, v.pass));
    };
    let corpus = oracle_corpus();
    record(1, "exact solver vs brute force", criterion_1(&corpus));
    record(2, "oracle-guided search", criterion_2(&corpus));
    record(3, "linkage graph identity", criterion_3());
    record(4, "GCN gradient check", criterion_4());
    record(5, "cross-entropy and AP oracles", criterion_5());
    record(6, "LP relaxation spot checks", criterion_6());
    let (v7, model) = criterion_7();
    record(7, "learning signal", v7);
    record(8, "heuristic trend", criterion_8(&model));
    record(9, "trajectory integrity", criterion_9());
    record(10, "determinism", criterion_10());
    let failed: Vec<usize> = results.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
