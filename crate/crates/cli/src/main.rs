//! Command-line interface: personality scoring, training, prediction,
//! cross-validated experiments and synthetic data generation.
//!
//! Exit codes: 0 on success, 1 on validation/usage errors, 2 on runtime or
//! training errors. Diagnostics go to stderr; data goes to files.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use slp::error::{Error, Result};
use slp::eval::{
    personality_group_ablation, sensitivity_grid, sweep_training_fraction, AblationOutcome,
};
use slp::feedback::{load_opinions, load_ratings};
use slp::graph::load_signed_graph;
use slp::model::{load_model, save_model};
use slp::personality::{scores_from_opinions, scores_from_ratings, ScenarioConfig};
use slp::scores::{load_scores, save_scores, PersonalityScores};
use slp::synth::generate;
use slp::train::{train, train_mf_baseline};
use slp::{Hyper, Margins, Scores};

use config::{synth_config_from_file, RunConfig};

#[derive(Parser)]
#[command(
    name = "slp",
    version,
    about = "Signed link prediction with personality-regularized matrix factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-user optimism/pessimism scores from feedback data.
    Personality {
        /// Feedback kind: item ratings or user-to-user opinion counts.
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// Ratings TSV (user, item, rating) or opinions TSV
        /// (src, dst, pos_count, neg_count).
        #[arg(long)]
        input: PathBuf,
        /// Rating threshold separating low from high (ratings scenario).
        #[arg(long, default_value_t = 3)]
        r_th: u8,
        /// Output scores TSV (user, optimism, pessimism).
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a model and write a checkpoint.
    Train {
        /// Signed graph TSV (src, dst, sign).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Personality scores TSV.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// key=value run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output model checkpoint.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ignore personality information (plain factorization).
        #[arg(long)]
        baseline_mf: bool,
    },
    /// Score user pairs with a trained model.
    Predict {
        /// Model checkpoint written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Pairs TSV (src, dst), one pair per line.
        #[arg(long)]
        pairs: PathBuf,
        /// Output TSV (src, dst, score, sign).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a cross-validated experiment and write its CSV table.
    Evaluate {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        /// Which experiment to run.
        #[arg(long, value_enum)]
        experiment: Experiment,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for fold-level parallelism (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Generate a synthetic signed network with planted personalities.
    Synth {
        /// key=value generator configuration.
        #[arg(long)]
        config: PathBuf,
        /// Prefix for the emitted `.graph.tsv`, `.ratings.tsv`,
        /// `.scores.tsv` files.
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Ratings,
    Opinions,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Sweep,
    Ablation,
    Sensitivity,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let kind = err.kind();
            if kind == ErrorKind::DisplayHelp || kind == ErrorKind::DisplayVersion {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Parse { .. } | Error::Validation(_) => ExitCode::from(1),
                Error::Train { .. } | Error::Io(_) => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Personality {
            scenario,
            input,
            r_th,
            output,
        } => personality_command(scenario, &input, r_th, &output),
        Command::Train {
            graph,
            scores,
            config,
            out,
            baseline_mf,
        } => train_command(graph, scores, &config, out, baseline_mf),
        Command::Predict { model, pairs, out } => predict_command(&model, &pairs, &out),
        Command::Evaluate {
            graph,
            scores,
            config,
            experiment,
            out,
            jobs,
        } => evaluate_command(graph, scores, &config, experiment, out, jobs),
        Command::Synth { config, out_prefix } => synth_command(&config, &out_prefix),
    }
}

fn personality_command(
    scenario: Scenario,
    input: &Path,
    r_th: u8,
    output: &Path,
) -> Result<()> {
    let scores: Scores = match scenario {
        Scenario::Ratings => {
            let table = load_ratings(input)?;
            let cfg = ScenarioConfig {
                r_th,
                ..ScenarioConfig::default()
            };
            scores_from_ratings(&table, &cfg)?
        }
        Scenario::Opinions => {
            let load = load_opinions(input)?;
            if load.self_pairs_dropped > 0 {
                eprintln!("warning: dropped {} self-pair lines", load.self_pairs_dropped);
            }
            scores_from_opinions(&load.opinions)?
        }
    };
    save_scores(&scores, output)?;
    eprintln!("wrote scores for {} users to {}", scores.n(), output.display());
    Ok(())
}

/// Resolve a path from flag or config, in that order.
fn resolve(
    flag: Option<PathBuf>,
    fallback: &Option<PathBuf>,
    what: &str,
) -> Result<PathBuf> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| Error::validation(format!("missing {what}: pass the flag or set it in the config")))
}

fn load_inputs(
    graph_path: &Path,
    scores_path: &Path,
) -> Result<(slp::graph::SignedGraph, Scores)> {
    let load = load_signed_graph(graph_path, None)?;
    if load.self_edges_dropped > 0 {
        eprintln!("warning: dropped {} self-edge lines", load.self_edges_dropped);
    }
    let graph = load.graph;
    let scores = load_scores::<f64>(scores_path)?;
    // Users past the end of the scores file carry zero scores.
    let scores = if scores.n() < graph.n() {
        let mut o = scores.optimism().to_vec();
        let mut p = scores.pessimism().to_vec();
        o.resize(graph.n(), 0.0);
        p.resize(graph.n(), 0.0);
        PersonalityScores::new(o, p)?
    } else if scores.n() > graph.n() {
        return Err(Error::validation(format!(
            "scores cover {} users but the graph has only {}",
            scores.n(),
            graph.n()
        )));
    } else {
        scores
    };
    Ok((graph, scores))
}

fn train_command(
    graph: Option<PathBuf>,
    scores: Option<PathBuf>,
    config_path: &Path,
    out: Option<PathBuf>,
    baseline_mf: bool,
) -> Result<()> {
    let cfg = RunConfig::from_file(config_path)?;
    let graph_path = resolve(graph, &cfg.graph, "graph file")?;
    let scores_path = resolve(scores, &cfg.scores, "scores file")?;
    let out_path = resolve(out, &cfg.output, "output path")?;
    let (graph, scores) = load_inputs(&graph_path, &scores_path)?;

    let hyper: Hyper = cfg.hyper;
    let rule: Margins = cfg.rule;
    let (model, report) = if baseline_mf {
        train_mf_baseline(&graph, &hyper)?
    } else {
        train(&graph, &scores, &hyper, &rule)?
    };
    save_model(&model, &out_path)?;
    eprintln!(
        "trained {} users x {} factors: {} iterations, converged = {}, final objective {:.6}, active pairs {:?}",
        model.n(),
        model.d(),
        report.iterations,
        report.converged,
        report.objective_trace.last().unwrap(),
        report.final_active_counts
    );
    Ok(())
}

fn predict_command(model_path: &Path, pairs_path: &Path, out: &Path) -> Result<()> {
    let model = load_model::<f64>(model_path)?;
    let text = fs::read_to_string(pairs_path)?;

    let mut output = String::from("src\tdst\tscore\tsign\n");
    let mut bad_rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            eprintln!("{}:{lineno}: expected 2 fields, found {}", pairs_path.display(), fields.len());
            bad_rows += 1;
            continue;
        }
        let parsed: (std::result::Result<usize, _>, std::result::Result<usize, _>) =
            (fields[0].parse(), fields[1].parse());
        let (Ok(src), Ok(dst)) = parsed else {
            eprintln!("{}:{lineno}: indices are not integers", pairs_path.display());
            bad_rows += 1;
            continue;
        };
        match model.predict_pair(src, dst) {
            Ok(score) => {
                let sign = match score.partial_cmp(&0.0).unwrap() {
                    std::cmp::Ordering::Greater => 1,
                    std::cmp::Ordering::Less => -1,
                    std::cmp::Ordering::Equal => 0,
                };
                output.push_str(&format!("{src}\t{dst}\t{score}\t{sign}\n"));
            }
            Err(err) => {
                eprintln!("{}:{lineno}: {err}", pairs_path.display());
                bad_rows += 1;
            }
        }
    }
    fs::write(out, output)?;
    if bad_rows > 0 {
        return Err(Error::validation(format!(
            "{bad_rows} pair rows were invalid (valid rows were still written)"
        )));
    }
    Ok(())
}

fn evaluate_command(
    graph: Option<PathBuf>,
    scores: Option<PathBuf>,
    config_path: &Path,
    experiment: Experiment,
    out: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<()> {
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(Error::validation("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::validation(format!("cannot configure {jobs} workers: {e}")))?;
    }
    let cfg = RunConfig::from_file(config_path)?;
    let graph_path = resolve(graph, &cfg.graph, "graph file")?;
    let scores_path = resolve(scores, &cfg.scores, "scores file")?;
    let out_path = resolve(out, &cfg.output, "output path")?;
    let (graph, scores) = load_inputs(&graph_path, &scores_path)?;

    let csv = match experiment {
        Experiment::Sweep => {
            let table = sweep_training_fraction(
                &graph,
                &scores,
                &cfg.hyper,
                &cfg.rule,
                &cfg.plan,
                &cfg.fractions,
            )?;
            table.to_csv()
        }
        Experiment::Ablation => {
            match personality_group_ablation(&graph, &scores, &cfg.hyper, &cfg.rule, &cfg.plan)? {
                AblationOutcome::Completed(table) => {
                    eprintln!(
                        "clusters: {} strong users, {} indifferent",
                        table.strong_users, table.indifferent_users
                    );
                    table.to_csv()
                }
                AblationOutcome::Skipped { reason } => {
                    eprintln!("ablation skipped: {reason}");
                    String::from("group,fold,auc\n")
                }
            }
        }
        Experiment::Sensitivity => {
            let grid: Vec<(f64, f64)> = cfg
                .grid_alphas
                .iter()
                .flat_map(|&a| cfg.grid_betas.iter().map(move |&b| (a, b)))
                .collect();
            let table =
                sensitivity_grid(&graph, &scores, &cfg.hyper, &cfg.rule, &cfg.plan, &grid)?;
            table.to_csv()
        }
    };
    fs::write(&out_path, csv)?;
    eprintln!("wrote results to {}", out_path.display());
    Ok(())
}

fn synth_command(config_path: &Path, out_prefix: &Path) -> Result<()> {
    let cfg = synth_config_from_file(config_path)?;
    let data = generate(&cfg)?;

    let with_suffix = |suffix: &str| -> PathBuf {
        let mut name = out_prefix.file_name().unwrap_or_default().to_os_string();
        name.push(suffix);
        out_prefix.with_file_name(name)
    };
    let graph_path = with_suffix(".graph.tsv");
    let ratings_path = with_suffix(".ratings.tsv");
    let scores_path = with_suffix(".scores.tsv");
    slp::graph::save_signed_graph(&data.graph, &graph_path)?;
    slp::feedback::save_ratings(&data.ratings, &ratings_path)?;
    save_scores(&data.truth, &scores_path)?;
    eprintln!(
        "generated {} users, {} links ({} positive), {} ratings",
        data.graph.n(),
        data.graph.edge_count(),
        data.graph.positive_count(),
        data.ratings.rating_count()
    );
    eprintln!(
        "wrote {}, {}, {}",
        graph_path.display(),
        ratings_path.display(),
        scores_path.display()
    );
    Ok(())
}
