use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use pbdfs::bench::{
    cmd_eval_ml, cmd_gen, cmd_heuristic, cmd_label, cmd_predict, cmd_report, cmd_train, Dataset, ExperimentConfig,
    Method, Problem, Scale,
};
use pbdfs::predictor::ModelKind;
use pbdfs::search::{ScoreVariant, Termination};

#[derive(Parser)]
#[command(name = "pbdfs", version, about = "Learned primal heuristics for binary MIPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment config, TOML or JSON (by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset root directory.
    #[arg(long, global = true, default_value = "data")]
    data: PathBuf,
    #[arg(long, global = true, value_enum)]
    problem: Option<Problem>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Splits to process, e.g. `--scale train --scale small`.
    #[arg(long = "scale", global = true, value_enum)]
    scales: Vec<Scale>,
    #[arg(long, global = true, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long, global = true)]
    train_count: Option<usize>,
    #[arg(long, global = true)]
    test_count: Option<usize>,
    /// Worker threads for per-instance work; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances and metadata.
    Gen,
    /// Solve instances exactly and write solution files (train and small
    /// splits unless `--scale` is given).
    Label {
        #[arg(long)]
        node_limit: Option<usize>,
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Train the configured model on the labeled training split.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        layers: Option<usize>,
    },
    /// Write per-instance probability files.
    Predict,
    /// Per-instance average precision against the labels.
    EvalMl,
    /// Run primal heuristics and write trajectories.
    Heuristic {
        #[arg(long = "method", value_parser = parse_method)]
        methods: Vec<Method>,
        /// `first_feasible`, `time:<s>`, `nodes:<n>` or `none`.
        #[arg(long, value_parser = parse_termination)]
        termination: Option<Termination>,
        /// `max_p_1mp`, `p` or `one_minus_p`.
        #[arg(long, value_parser = parse_score)]
        score: Option<ScoreVariant>,
    },
    /// Aggregate per-instance heuristic results.
    Report {
        #[arg(long = "method", value_parser = parse_method)]
        methods: Vec<Method>,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s {
        "gcn" => Ok(ModelKind::Gcn),
        "lr" => Ok(ModelKind::Lr),
        _ => Err(format!("unknown model {s:?} (expected gcn or lr)")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: pbdfs::Error| e.to_string())
}

fn parse_termination(s: &str) -> Result<Termination, String> {
    s.parse().map_err(|e: pbdfs::Error| e.to_string())
}

fn parse_score(s: &str) -> Result<ScoreVariant, String> {
    s.parse().map_err(|e: pbdfs::Error| e.to_string())
}

/// Config file plus command-line overrides.
fn resolve(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let c = &cli.common;
    let mut config = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = c.problem {
        config.problem = p;
    }
    if let Some(s) = c.seed {
        config.seed = s;
    }
    if let Some(m) = c.model {
        config.model = m;
    }
    if let Some(n) = c.train_count {
        config.counts.train = n;
    }
    if let Some(n) = c.test_count {
        config.counts.test = n;
    }
    if let Some(w) = c.workers {
        config.workers = w;
    }
    match &cli.command {
        Command::Label { node_limit, time_limit } => {
            config.label.node_limit = node_limit.or(config.label.node_limit);
            config.label.time_limit = time_limit.or(config.label.time_limit);
        }
        Command::Train {
            epochs,
            learning_rate,
            layers,
        } => {
            config.training.epochs = epochs.unwrap_or(config.training.epochs);
            config.training.learning_rate = learning_rate.unwrap_or(config.training.learning_rate);
            config.training.layers = layers.unwrap_or(config.training.layers);
        }
        Command::Heuristic {
            methods,
            termination,
            score,
        } => {
            if !methods.is_empty() {
                config.methods = methods.clone();
            }
            config.termination = termination.unwrap_or(config.termination);
            config.score = score.unwrap_or(config.score);
        }
        Command::Report { methods } if !methods.is_empty() => config.methods = methods.clone(),
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

fn scales(cli: &Cli, default: &[Scale]) -> Vec<Scale> {
    if cli.common.scales.is_empty() {
        default.to_vec()
    } else {
        cli.common.scales.clone()
    }
}

fn run(cli: &Cli, config: &ExperimentConfig) -> anyhow::Result<()> {
    let data = Dataset::new(&cli.common.data);
    let all = [Scale::Train, Scale::Small, Scale::Medium, Scale::Large];
    match &cli.command {
        Command::Gen => {
            let n = cmd_gen(config, &data, &scales(cli, &all))?;
            println!("wrote {n} instances under {}", data.root.display());
        }
        Command::Label { .. } => {
            let s = cmd_label(config, &data, &scales(cli, &[Scale::Train, Scale::Small]))?;
            println!(
                "labeled {}, skipped {} already labeled, {} unproven",
                s.labeled, s.skipped, s.unproven
            );
        }
        Command::Train { .. } => {
            let s = cmd_train(config, &data)?;
            println!(
                "trained on {} instances ({} excluded); final epoch loss {:.6}",
                s.examples,
                s.excluded,
                s.log.epoch_loss.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Predict => {
            let n = cmd_predict(config, &data, &scales(cli, &Scale::TEST))?;
            println!("wrote {n} probability files");
        }
        Command::EvalMl => {
            for s in cmd_eval_ml(config, &data, &scales(cli, &Scale::TEST))? {
                println!(
                    "{}: mean AP {:.4} over {} instances (prevalence {:.4})",
                    s.scale, s.mean_ap, s.instances, s.mean_prevalence
                );
            }
        }
        Command::Heuristic { .. } => {
            let rows = cmd_heuristic(config, &data, &scales(cli, &Scale::TEST), &config.methods)?;
            println!("ran {} heuristic instances", rows.len());
            let report = cmd_report(config, &data, &scales(cli, &Scale::TEST), &config.methods)?;
            print_report(&report);
        }
        Command::Report { .. } => {
            print_report(&cmd_report(config, &data, &scales(cli, &Scale::TEST), &config.methods)?);
        }
    }
    Ok(())
}

fn print_report(rows: &[pbdfs::bench::ReportRow]) {
    println!("scale,method,instances,best_objective,best_time_s,n_no_feasible,calls,total_time_s");
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.3}"));
    for r in rows {
        println!(
            "{},{},{},{},{},{},{},{:.3}",
            r.scale,
            r.method,
            r.instances,
            opt(r.best_objective),
            opt(r.best_time_s),
            r.n_no_feasible,
            r.calls,
            r.total_time_s
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let config = match resolve(&cli).context("invalid configuration") {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
