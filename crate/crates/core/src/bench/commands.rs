use std::time::Instant;

use log::{info, warn};
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::config::{ExperimentConfig, Method, Problem, Scale};
use crate::bench::dataset::{Dataset, InstanceMeta, SolutionFile};
use crate::bench::report::{aggregate, ms, read_csv, write_csv, InstanceRow, ReportRow};
use crate::error::{Error, Result};
use crate::generate::{formulate_dsp, formulate_misp, formulate_vcp, gen_cap, gen_graph, rng};
use crate::io;
use crate::mip::MipInstance;
use crate::predictor::{
    average_precision, prevalence, train_gcn, train_logreg, Model, ModelKind, ProbabilityVector, TrainExample,
    TrainLog,
};
use crate::search::{
    baseline_dfs, lp_rounding, pb_dfs, solve_exact, ExactLimits, SearchOutcome, SearchStats, Trajectory,
};

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// Builds the `i`-th instance of a split with its metadata.
pub fn generate_instance(config: &ExperimentConfig, scale: Scale, i: usize) -> Result<(MipInstance, InstanceMeta)> {
    let seed = config.instance_seed(scale, i);
    let (n, affinity, bids) = match config.sizes().get(scale) {
        Some(size) => (size.n, size.affinity, size.bids),
        None => {
            let range = config.train_size();
            let n = rng(seed ^ 0x0517_e000).random_range(range.min_n..=range.max_n);
            (n, range.affinity, range.bids)
        }
    };
    let problem = config.problem;
    let mut inst = match problem {
        Problem::Misp => formulate_misp(&gen_graph(n, affinity, seed)?),
        Problem::Dsp => formulate_dsp(&gen_graph(n, affinity, seed)?),
        Problem::Vcp => formulate_vcp(&gen_graph(n, affinity, seed)?),
        Problem::Cap => gen_cap(n, bids, seed)?,
    };
    inst.name = format!("{problem}-{scale}-{seed}");
    let meta = InstanceMeta {
        generator: if problem.is_graph() { "erdos_renyi" } else { "arbitrary_relationship" }.into(),
        problem,
        scale,
        seed,
        n,
        affinity: problem.is_graph().then_some(affinity),
        bids: (!problem.is_graph()).then_some(bids),
    };
    Ok((inst, meta))
}

/// Writes every instance of the requested splits. Returns the file count.
pub fn cmd_gen(config: &ExperimentConfig, data: &Dataset, scales: &[Scale]) -> Result<usize> {
    let mut written = 0;
    for &scale in scales {
        for i in 0..config.count(scale) {
            let (inst, meta) = generate_instance(config, scale, i)?;
            inst.write(&data.instance_path(config.problem, scale, meta.seed))?;
            io::write_json(&data.meta_path(config.problem, scale, meta.seed), &meta)?;
            written += 1;
        }
        info!("generated {} {} {scale} instances", config.count(scale), config.problem);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSummary {
    pub labeled: usize,
    pub skipped: usize,
    /// Stopped by a limit; written but not usable for training.
    pub unproven: usize,
}

pub fn cmd_label(config: &ExperimentConfig, data: &Dataset, scales: &[Scale]) -> Result<LabelSummary> {
    let limits = ExactLimits {
        node_limit: config.label.node_limit,
        time_limit: config.label.time_limit,
    };
    let problem = config.problem;
    let mut summary = LabelSummary::default();
    let pool = pool(config.workers)?;
    for &scale in scales {
        let seeds = data.seeds(problem, scale)?;
        let outcomes: Vec<Result<Option<bool>>> = pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| {
                    let path = data.solution_path(problem, scale, seed);
                    if path.exists() {
                        info!("skipping {}: already labeled", path.display());
                        return Ok(None);
                    }
                    let inst = MipInstance::read(&data.instance_path(problem, scale, seed))?;
                    let r = solve_exact(&inst, limits)?;
                    let file = SolutionFile {
                        objective: r.objective,
                        values: match &r.solution {
                            Some(s) => s.to_bits()?,
                            None => Vec::new(),
                        },
                        proved_optimal: r.proved_optimal,
                    };
                    if !r.proved_optimal {
                        warn!("{}: limit reached before optimality was proven", inst.name);
                    }
                    io::write_json(&path, &file)?;
                    Ok(Some(r.proved_optimal))
                })
                .collect()
        });
        for o in outcomes {
            match o? {
                None => summary.skipped += 1,
                Some(true) => summary.labeled += 1,
                Some(false) => summary.unproven += 1,
            }
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub examples: usize,
    pub excluded: usize,
    pub log: TrainLog,
}

#[derive(Serialize)]
struct EpochRow {
    epoch: usize,
    loss: f64,
    validation_loss: Option<f64>,
}

/// Trains the configured model on every proven label of the training split.
pub fn cmd_train(config: &ExperimentConfig, data: &Dataset) -> Result<TrainSummary> {
    let problem = config.problem;
    let seeds = data.seeds(problem, Scale::Train)?;
    if seeds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pool = pool(config.workers)?;
    let loaded: Vec<Result<Option<TrainExample>>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let sol = data.read_solution(problem, Scale::Train, seed)?;
                if !sol.is_label() {
                    return Ok(None);
                }
                let inst = MipInstance::read(&data.instance_path(problem, Scale::Train, seed))?;
                TrainExample::from_instance(&inst, &sol.values).map(Some)
            })
            .collect()
    });
    let mut examples = Vec::new();
    for l in loaded {
        examples.extend(l?);
    }
    let excluded = seeds.len() - examples.len();
    if excluded > 0 {
        warn!("{excluded} training instances lack a proven label and are excluded");
    }
    let training = &config.training;
    let (model, log) = match config.model {
        ModelKind::Gcn => {
            let (m, log) = train_gcn(&examples, training)?;
            (Model::Gcn(m), log)
        }
        ModelKind::Lr => {
            let (m, log) = train_logreg(&examples, training)?;
            (Model::Lr(m), log)
        }
    };
    model.save(&data.model_path(problem, config.model))?;
    let rows: Vec<EpochRow> = log
        .epoch_loss
        .iter()
        .enumerate()
        .map(|(epoch, &loss)| EpochRow {
            epoch,
            loss,
            validation_loss: log.validation_loss.get(epoch).copied(),
        })
        .collect();
    let kind = model_token(config.model);
    write_csv(&data.results_dir(problem).join(format!("train_{kind}.csv")), &rows)?;
    Ok(TrainSummary {
        examples: examples.len(),
        excluded,
        log,
    })
}

fn model_token(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Gcn => "gcn",
        ModelKind::Lr => "lr",
    }
}

/// Writes a probability file next to every instance. Returns the count.
pub fn cmd_predict(config: &ExperimentConfig, data: &Dataset, scales: &[Scale]) -> Result<usize> {
    let problem = config.problem;
    let model = Model::load(&data.model_path(problem, config.model))?;
    let mut written = 0;
    for &scale in scales {
        for seed in data.seeds(problem, scale)? {
            let inst = MipInstance::read(&data.instance_path(problem, scale, seed))?;
            let p = model.predict_instance(&inst)?;
            p.write(&data.prob_path(problem, scale, seed, config.model))?;
            written += 1;
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Instance seed, or `mean` for the summary row.
    pub instance: String,
    pub nvars: usize,
    pub ap: f64,
    pub prevalence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub scale: Scale,
    pub instances: usize,
    pub mean_ap: f64,
    pub mean_prevalence: f64,
}

/// Per-instance AP of the configured model against the exact labels, plus a
/// mean row, one CSV per split.
pub fn cmd_eval_ml(config: &ExperimentConfig, data: &Dataset, scales: &[Scale]) -> Result<Vec<EvalSummary>> {
    let problem = config.problem;
    let model = Model::load(&data.model_path(problem, config.model))?;
    let mut summaries = Vec::new();
    for &scale in scales {
        let mut rows = Vec::new();
        for seed in data.seeds(problem, scale)? {
            let sol = data.read_solution(problem, scale, seed)?;
            if sol.objective.is_none() {
                warn!("{problem}/{scale}/{seed}: no solution, skipped");
                continue;
            }
            let labels: Vec<f64> = sol.values.iter().map(|&b| b as f64).collect();
            if !labels.iter().any(|&y| y > 0.5) {
                warn!("{problem}/{scale}/{seed}: no positive labels, skipped");
                continue;
            }
            let inst = MipInstance::read(&data.instance_path(problem, scale, seed))?;
            let p = model.predict_instance(&inst)?;
            rows.push(EvalRow {
                instance: seed.to_string(),
                nvars: inst.nvars,
                ap: average_precision(&p.0, &labels)?,
                prevalence: prevalence(&labels),
            });
        }
        if rows.is_empty() {
            continue;
        }
        let k = rows.len() as f64;
        let summary = EvalSummary {
            scale,
            instances: rows.len(),
            mean_ap: rows.iter().map(|r| r.ap).sum::<f64>() / k,
            mean_prevalence: rows.iter().map(|r| r.prevalence).sum::<f64>() / k,
        };
        rows.push(EvalRow {
            instance: "mean".into(),
            nvars: (rows.iter().map(|r| r.nvars).sum::<usize>() as f64 / k).round() as usize,
            ap: summary.mean_ap,
            prevalence: summary.mean_prevalence,
        });
        let kind = model_token(config.model);
        write_csv(&data.results_dir(problem).join(format!("eval_{kind}_{scale}.csv")), &rows)?;
        summaries.push(summary);
    }
    Ok(summaries)
}

fn heuristic_dir(data: &Dataset, problem: Problem, scale: Scale) -> std::path::PathBuf {
    data.results_dir(problem).join("heuristic").join(scale.to_string())
}

/// Per-instance CSV written by `cmd_heuristic` for one method and split.
pub fn instance_rows_path(data: &Dataset, problem: Problem, scale: Scale, method: Method) -> std::path::PathBuf {
    heuristic_dir(data, problem, scale).join(format!("{method}.csv"))
}

/// Runs one method on one instance; `prediction_time` is charged to every
/// reported time.
fn run_method(
    config: &ExperimentConfig,
    inst: &MipInstance,
    method: Method,
    probs: Option<&ProbabilityVector>,
) -> Result<SearchOutcome> {
    match method {
        Method::Dfs => baseline_dfs(inst, config.termination),
        Method::Rounding => {
            let clock = Instant::now();
            let inc = lp_rounding(inst)?;
            let mut trajectory = Trajectory::default();
            if let Some(i) = &inc {
                trajectory.push_incumbent(i.found_at, i.objective);
            }
            let elapsed = clock.elapsed().as_secs_f64();
            trajectory.close(elapsed);
            Ok(SearchOutcome {
                history: inc.iter().cloned().collect(),
                incumbent: inc,
                trajectory,
                stats: SearchStats {
                    nodes: 1,
                    lp_solves: 1,
                    wall_time_s: elapsed,
                    ..SearchStats::default()
                },
            })
        }
        _ => pb_dfs(
            inst,
            probs.expect("model-driven methods carry probabilities"),
            config.score,
            config.termination,
        ),
    }
}

/// Runs each method on every instance of each split, writing trajectories,
/// stats and a per-instance CSV per (split, method).
pub fn cmd_heuristic(
    config: &ExperimentConfig,
    data: &Dataset,
    scales: &[Scale],
    methods: &[Method],
) -> Result<Vec<InstanceRow>> {
    let problem = config.problem;
    let pool = pool(config.workers)?;
    let mut all = Vec::new();
    for &method in methods {
        let model = match method.model() {
            Some(kind) => Some(Model::load(&data.model_path(problem, kind))?),
            None => None,
        };
        for &scale in scales {
            let seeds = data.seeds(problem, scale)?;
            let dir = heuristic_dir(data, problem, scale).join(method.to_string());
            let rows: Vec<Result<InstanceRow>> = pool.install(|| {
                seeds
                    .par_iter()
                    .map(|&seed| {
                        let inst = MipInstance::read(&data.instance_path(problem, scale, seed))?;
                        let sol_path = data.solution_path(problem, scale, seed);
                        let sol: Option<SolutionFile> = if sol_path.exists() {
                            Some(io::read_json(&sol_path)?)
                        } else {
                            None
                        };
                        let clock = Instant::now();
                        let probs = match (&model, method) {
                            (Some(m), _) => Some(m.predict_instance(&inst)?),
                            (None, Method::PbdfsOracle) => {
                                let s = sol
                                    .as_ref()
                                    .and_then(SolutionFile::assignment)
                                    .ok_or_else(|| Error::Missing(sol_path.clone()))?;
                                Some(ProbabilityVector(s.to_values()?))
                            }
                            _ => None,
                        };
                        let prediction_time = if model.is_some() { clock.elapsed().as_secs_f64() } else { 0.0 };
                        let out = run_method(config, &inst, method, probs.as_ref())?;
                        let total = clock.elapsed().as_secs_f64();
                        out.trajectory.write_csv(&dir.join(format!("{seed}.traj.csv")))?;
                        io::write_json(&dir.join(format!("{seed}.stats.json")), &out.stats_file())?;
                        let first = out.trajectory.incumbents().next().copied();
                        Ok(InstanceRow {
                            method: method.to_string(),
                            scale: scale.to_string(),
                            seed,
                            nvars: inst.nvars,
                            first_objective: first.map(|p| p.objective),
                            first_time_s: first.map(|p| ms(p.time_s + prediction_time)),
                            best_objective: out.incumbent.as_ref().map(|i| i.objective),
                            best_time_s: out.incumbent.as_ref().map(|i| ms(i.found_at + prediction_time)),
                            prediction_time_s: ms(prediction_time),
                            total_time_s: ms(total),
                            nodes: out.stats.nodes,
                            backtracks: out.stats.backtracks,
                            calls: 1,
                            optimum: sol.filter(SolutionFile::is_label).and_then(|s| s.objective),
                        })
                    })
                    .collect()
            });
            let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
            if rows.is_empty() {
                continue;
            }
            write_csv(&instance_rows_path(data, problem, scale, method), &rows)?;
            info!("{method} on {problem}/{scale}: {} instances", rows.len());
            all.extend(rows);
        }
    }
    Ok(all)
}

/// Aggregates the per-instance CSVs of each split into `report_{scale}.csv`.
pub fn cmd_report(
    config: &ExperimentConfig,
    data: &Dataset,
    scales: &[Scale],
    methods: &[Method],
) -> Result<Vec<ReportRow>> {
    let problem = config.problem;
    let mut report = Vec::new();
    for &scale in scales {
        let mut rows = Vec::new();
        for &method in methods {
            let path = instance_rows_path(data, problem, scale, method);
            if !path.exists() {
                continue;
            }
            let instances: Vec<InstanceRow> = read_csv(&path)?;
            if !instances.is_empty() {
                rows.push(aggregate(&instances)?);
            }
        }
        if rows.is_empty() {
            continue;
        }
        write_csv(&data.results_dir(problem).join(format!("report_{scale}.csv")), &rows)?;
        report.extend(rows);
    }
    if report.is_empty() {
        return Err(Error::Missing(data.results_dir(problem).join("heuristic")));
    }
    Ok(report)
}
