//! Run settings merged from defaults, an optional `key = value` config
//! file, and command-line flags (flags win). Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::PathBuf;

use counterfact::error::{Error, Result};
use counterfact::model::{HiddenActivation, TrainConfig};
use counterfact::pipeline::Method;
use counterfact::solver::{SolverConfig, TargetDistKind};
use counterfact::sparsity::{SparsityConfig, TieBreak, ZeroHandling};
use counterfact::synth::SynthConfig;

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "COUNTERFACT_CONFIG";

#[derive(Debug, Clone)]
pub struct Settings {
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub scale: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub rating_column: String,
    pub method: Method,
    pub target: Option<usize>,
    pub target_dist: TargetDistKind,
    pub seed: u64,
    pub workers: usize,
    pub ratings: Option<String>,
    pub lambda: f64,
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub k: usize,
    pub lambda_ladder: Vec<f64>,
    pub zero_handling: ZeroHandling,
    pub tie_break: TieBreak,
    pub nonzero_tol: f64,
    pub hidden_layer_sizes: Vec<usize>,
    pub hidden_activation: HiddenActivation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_weight_decay: f64,
    pub n_points: usize,
    pub variance: f64,
    pub mean_magnitude: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let solver = SolverConfig::default();
        let sparsity = SparsityConfig::default();
        let train = TrainConfig::default();
        let synth = SynthConfig::default();
        Self {
            data: None,
            model: None,
            mask: None,
            scale: None,
            out: None,
            out_dir: None,
            rating_column: "rating".to_string(),
            method: Method::Sparsity,
            target: None,
            target_dist: TargetDistKind::OneHot,
            seed: 0,
            workers: 0,
            ratings: None,
            lambda: solver.lambda,
            step_size: solver.step_size,
            max_iters: solver.max_iters,
            grad_tol: solver.grad_tol,
            k: sparsity.k,
            lambda_ladder: sparsity.lambda_ladder,
            zero_handling: sparsity.zero_handling,
            tie_break: sparsity.tie_break,
            nonzero_tol: sparsity.nonzero_tol,
            hidden_layer_sizes: train.hidden_layer_sizes,
            hidden_activation: HiddenActivation::Relu,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            batch_size: train.batch_size,
            l2_weight_decay: train.l2_weight_decay,
            n_points: synth.n_points,
            variance: synth.variance,
            mean_magnitude: synth.mean_magnitude,
        }
    }
}

fn bad_value(key: &str, value: &str, want: &str) -> Error {
    Error::InvalidInput(format!(
        "config key '{key}': cannot parse '{value}' as {want}"
    ))
}

pub fn parse_list_f64(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad_value(key, s.trim(), "a number"))
        })
        .collect()
}

fn parse_list_usize(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| bad_value(key, s.trim(), "an integer"))
        })
        .collect()
}

impl Settings {
    /// Applies one `key = value` pair; rejects unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 =
            |v: &str| -> Result<f64> { v.parse().map_err(|_| bad_value(key, v, "a number")) };
        let parse_usize =
            |v: &str| -> Result<usize> { v.parse().map_err(|_| bad_value(key, v, "an integer")) };
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "model" => self.model = Some(PathBuf::from(value)),
            "mask" => self.mask = Some(PathBuf::from(value)),
            "scale" => self.scale = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "rating_column" => self.rating_column = value.to_string(),
            "method" => self.method = value.parse()?,
            "target" => self.target = Some(parse_usize(value)?),
            "target_dist" => self.target_dist = value.parse()?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "an integer"))?
            }
            "workers" => self.workers = parse_usize(value)?,
            "ratings" => self.ratings = Some(value.to_string()),
            "lambda" => self.lambda = parse_f64(value)?,
            "step_size" => self.step_size = parse_f64(value)?,
            "max_iters" => self.max_iters = parse_usize(value)?,
            "grad_tol" => self.grad_tol = parse_f64(value)?,
            "k" => self.k = parse_usize(value)?,
            "lambda_ladder" => self.lambda_ladder = parse_list_f64(key, value)?,
            "zero_handling" => self.zero_handling = value.parse()?,
            "tie_break" => self.tie_break = value.parse()?,
            "nonzero_tol" => self.nonzero_tol = parse_f64(value)?,
            "hidden_layer_sizes" => self.hidden_layer_sizes = parse_list_usize(key, value)?,
            "hidden_activation" => self.hidden_activation = value.parse()?,
            "learning_rate" => self.learning_rate = parse_f64(value)?,
            "epochs" => self.epochs = parse_usize(value)?,
            "batch_size" => self.batch_size = parse_usize(value)?,
            "l2_weight_decay" => self.l2_weight_decay = parse_f64(value)?,
            "n_points" => self.n_points = parse_usize(value)?,
            "variance" => self.variance = parse_f64(value)?,
            "mean_magnitude" => self.mean_magnitude = parse_f64(value)?,
            other => return Err(Error::InvalidInput(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a flat config file: `key = value` lines, `#` comments.
    pub fn apply_file(&mut self, path: &std::path::Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidInput(format!(
                    "{}:{}: expected 'key = value', got '{line}'",
                    path.display(),
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim()).map_err(|e| {
                Error::InvalidInput(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            step_size: self.step_size,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            seed: self.seed,
        }
    }

    pub fn sparsity_config(&self) -> SparsityConfig {
        SparsityConfig {
            k: self.k,
            lambda_ladder: self.lambda_ladder.clone(),
            zero_handling: self.zero_handling,
            tie_break: self.tie_break,
            nonzero_tol: self.nonzero_tol,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden_layer_sizes: self.hidden_layer_sizes.clone(),
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            l2_weight_decay: self.l2_weight_decay,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            n_points: self.n_points,
            variance: self.variance,
            mean_magnitude: self.mean_magnitude,
            seed: self.seed,
        }
    }

    /// Parses the batch rating filter: comma-separated ordinals or symbols
    /// of the active scale.
    pub fn rating_filter(
        &self,
        scale: &counterfact::ingest::RatingScale,
    ) -> Result<Option<BTreeSet<usize>>> {
        let Some(spec) = &self.ratings else {
            return Ok(None);
        };
        let mut set = BTreeSet::new();
        for part in spec.split(',') {
            let part = part.trim();
            match part.parse::<usize>() {
                Ok(ord) => {
                    set.insert(ord);
                }
                Err(_) => {
                    set.insert(scale.to_ordinal(part)?);
                }
            }
        }
        Ok(Some(set))
    }
}
