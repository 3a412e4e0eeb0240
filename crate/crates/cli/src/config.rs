//! Plain-text `key=value` run configuration.
//!
//! One assignment per line; blank lines and `#` comments are ignored;
//! later assignments win. Unknown keys are rejected so typos surface
//! instead of silently falling back to defaults.

use std::fs;
use std::path::{Path, PathBuf};

use slp::error::{Error, Result};
use slp::eval::SplitPlan;
use slp::model::{Hyperparams, MarginRule};
use slp::synth::SynthConfig;

/// Everything the train/evaluate subcommands need besides input files.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub hyper: Hyperparams<f64>,
    pub rule: MarginRule<f64>,
    pub plan: SplitPlan,
    /// Training fractions visited by the sweep experiment.
    pub fractions: Vec<u32>,
    /// Penalty weights spanning the sensitivity grid (cross product).
    pub grid_alphas: Vec<f64>,
    pub grid_betas: Vec<f64>,
    /// Optional default paths; command-line flags take precedence.
    pub graph: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hyper: Hyperparams::default(),
            rule: MarginRule::default(),
            plan: SplitPlan::default(),
            fractions: vec![50, 60, 70, 80, 90, 100],
            grid_alphas: vec![0.0, 0.1, 10.0, 80.0, 100.0],
            grid_betas: vec![0.0, 0.1, 10.0, 80.0, 100.0],
            graph: None,
            scores: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut gamma_rule: Vec<(usize, f64)> = vec![(1500, 15.0), (200, 10.0)];
        let mut delta_rule: Vec<(usize, f64)> = vec![(500, 15.0), (150, 10.0)];
        let mut default_margin = 5.0;

        for (key, value) in assignments(text)? {
            match key.as_str() {
                "lambda1" => cfg.hyper.lambda1 = number(&key, &value)?,
                "lambda2" => cfg.hyper.lambda2 = number(&key, &value)?,
                "alpha" => cfg.hyper.alpha = number(&key, &value)?,
                "beta" => cfg.hyper.beta = number(&key, &value)?,
                "d" => cfg.hyper.d = integer(&key, &value)?,
                "t_o" => cfg.hyper.t_o = number(&key, &value)?,
                "t_p" => cfg.hyper.t_p = number(&key, &value)?,
                "lr_u" => cfg.hyper.lr_u = number(&key, &value)?,
                "lr_v" => cfg.hyper.lr_v = number(&key, &value)?,
                "max_iter" => cfg.hyper.max_iter = integer(&key, &value)?,
                "tol" => cfg.hyper.tol = number(&key, &value)?,
                "seed" => cfg.hyper.seed = integer(&key, &value)?,
                "backtracking" => cfg.hyper.backtracking = boolean(&key, &value)?,
                "gamma_rule" => gamma_rule = margin_list(&key, &value)?,
                "delta_rule" => delta_rule = margin_list(&key, &value)?,
                "default_margin" => default_margin = number(&key, &value)?,
                "folds" => cfg.plan.folds = integer(&key, &value)?,
                "train_fraction" => cfg.plan.train_fraction = integer(&key, &value)?,
                "split_seed" => cfg.plan.seed = integer(&key, &value)?,
                "fractions" => cfg.fractions = int_list(&key, &value)?,
                "grid_alphas" => cfg.grid_alphas = number_list(&key, &value)?,
                "grid_betas" => cfg.grid_betas = number_list(&key, &value)?,
                "graph" => cfg.graph = Some(PathBuf::from(value)),
                "scores" => cfg.scores = Some(PathBuf::from(value)),
                "output" => cfg.output = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::validation(format!("unknown config key `{other}`")))
                }
            }
        }

        cfg.rule = MarginRule::new(gamma_rule, delta_rule, default_margin)?;
        cfg.hyper.validate()?;
        cfg.plan.validate()?;
        for &x in &cfg.fractions {
            if !(1..=100).contains(&x) {
                return Err(Error::validation(format!(
                    "training fraction {x} must lie in 1..=100"
                )));
            }
        }
        Ok(cfg)
    }
}

/// Synthetic-generator configuration in the same `key=value` format.
pub fn synth_config_from_file(path: &Path) -> Result<SynthConfig> {
    let text = fs::read_to_string(path)?;
    parse_synth_config(&text)
}

pub fn parse_synth_config(text: &str) -> Result<SynthConfig> {
    let mut cfg = SynthConfig::default();
    for (key, value) in assignments(text)? {
        match key.as_str() {
            "n" => cfg.n = integer(&key, &value)?,
            "frac_strong" => cfg.frac_strong = number(&key, &value)?,
            "edge_density" => cfg.edge_density = number(&key, &value)?,
            "pos_boost" => cfg.pos_boost = number(&key, &value)?,
            "neg_boost" => cfg.neg_boost = number(&key, &value)?,
            "d_true" => cfg.d_true = integer(&key, &value)?,
            "noise" => cfg.noise = number(&key, &value)?,
            "seed" => cfg.seed = integer(&key, &value)?,
            other => return Err(Error::validation(format!("unknown config key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn assignments(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::validation(format!(
                "config line {}: expected key=value, found `{line}`",
                lineno + 1
            )));
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::validation(format!("config key `{key}`: `{value}` is not a number")))
}

fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::validation(format!("config key `{key}`: `{value}` is not an integer"))
    })
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::validation(format!(
            "config key `{key}`: `{value}` is not a boolean"
        ))),
    }
}

fn number_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| number(key, v.trim())).collect()
}

fn int_list(key: &str, value: &str) -> Result<Vec<u32>> {
    value.split(',').map(|v| integer(key, v.trim())).collect()
}

/// `cutoff:margin` pairs separated by commas, cutoffs descending.
fn margin_list(key: &str, value: &str) -> Result<Vec<(usize, f64)>> {
    value
        .split(',')
        .map(|pair| {
            let Some((cutoff, margin)) = pair.trim().split_once(':') else {
                return Err(Error::validation(format!(
                    "config key `{key}`: `{pair}` is not cutoff:margin"
                )));
            };
            Ok((integer(key, cutoff.trim())?, number(key, margin.trim())?))
        })
        .collect()
}
