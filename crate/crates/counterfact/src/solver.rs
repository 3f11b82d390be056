//! Masked, L1-penalized minimization over the input perturbation.
//!
//! The objective is `lambda * CE(F(x + w .* delta), Y') + ||delta||_1`.
//! [`solve_gd`] handles the nonsmooth L1 term proximally (soft threshold),
//! which yields exact zeros — the downstream L0 counting depends on that.
//! [`solve_subgradient`] is the dense baseline: plain gradient descent with
//! an L1 subgradient, which touches every modifiable coordinate and never
//! lands exactly on zero.

use crate::error::{Error, Result};
use crate::model::{
    cross_entropy, forward_probs, input_gradient, predict_class, MlpModel, ProbVector,
};

/// How the ideal output distribution Y' is built from the target ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetDistKind {
    /// Point mass at the target ordinal.
    #[default]
    OneHot,
    /// Uniform mass over every ordinal at least as good as the target.
    SpreadBetter,
}

impl std::str::FromStr for TargetDistKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_hot" => Ok(TargetDistKind::OneHot),
            "spread_better" => Ok(TargetDistKind::SpreadBetter),
            other => Err(Error::InvalidInput(format!(
                "unknown target distribution '{other}' (expected one_hot or spread_better)"
            ))),
        }
    }
}

/// One counterfactual query: input, mask, target ordinal, and model.
/// Feature values are in standardized units.
#[derive(Debug, Clone)]
pub struct CfProblem<'a> {
    model: &'a MlpModel,
    x: Vec<f64>,
    w: Vec<f64>,
    target_ordinal: usize,
    target_dist: ProbVector,
    initial_ordinal: usize,
}

impl<'a> CfProblem<'a> {
    /// Validates and builds a query. The target must be a strict improvement
    /// on the model's current prediction for `x`.
    pub fn new(
        model: &'a MlpModel,
        x: Vec<f64>,
        w: Vec<f64>,
        target_ordinal: usize,
        dist_kind: TargetDistKind,
    ) -> Result<Self> {
        if x.len() != model.n_features() || w.len() != model.n_features() {
            return Err(Error::Contract(format!(
                "x has {} and w has {} entries, model expects {}",
                x.len(),
                w.len(),
                model.n_features()
            )));
        }
        if w.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Contract("mask entries must be 0 or 1".into()));
        }
        let initial_ordinal = predict_class(model, &x)?;
        if target_ordinal == 0 || target_ordinal >= initial_ordinal {
            return Err(Error::Contract(format!(
                "target ordinal {target_ordinal} is not a strict improvement on predicted {initial_ordinal}"
            )));
        }
        let target_dist = match dist_kind {
            TargetDistKind::OneHot => ProbVector::one_hot(model.n_classes(), target_ordinal)?,
            TargetDistKind::SpreadBetter => {
                ProbVector::spread_better(model.n_classes(), target_ordinal)?
            }
        };
        Ok(Self {
            model,
            x,
            w,
            target_ordinal,
            target_dist,
            initial_ordinal,
        })
    }

    pub fn model(&self) -> &MlpModel {
        self.model
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn target_ordinal(&self) -> usize {
        self.target_ordinal
    }

    pub fn target_dist(&self) -> &ProbVector {
        &self.target_dist
    }

    /// The model's prediction for the unperturbed input.
    pub fn initial_ordinal(&self) -> usize {
        self.initial_ordinal
    }

    pub fn is_fully_masked(&self) -> bool {
        self.w.iter().all(|&v| v == 0.0)
    }

    /// `x + w .* delta`.
    pub fn perturbed(&self, delta: &[f64]) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.w)
            .zip(delta)
            .map(|((x, w), d)| x + w * d)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Reserved for stochastic variants; both solvers here are deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 50.0,
            step_size: 0.01,
            max_iters: 2000,
            grad_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }
}

/// The dense solution a sparsity pass starts from.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    pub delta: Vec<f64>,
    pub iterations_used: usize,
    pub final_objective: f64,
    /// Objective value at the start and after each accepted iteration;
    /// non-increasing for [`solve_gd`].
    pub objective_trace: Vec<f64>,
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// `lambda * CE(F(x + w .* delta), Y') + ||delta||_1`. The cross-entropy dot
/// product already sums over classes; the problem is single-instance.
pub fn objective(problem: &CfProblem, delta: &[f64], lambda: f64) -> Result<f64> {
    if delta.len() != problem.x.len() {
        return Err(Error::Contract(format!(
            "delta has {} entries, expected {}",
            delta.len(),
            problem.x.len()
        )));
    }
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("delta contains a non-finite value".into()));
    }
    let probs = forward_probs(problem.model, &problem.perturbed(delta))?;
    Ok(lambda * cross_entropy(&probs, &problem.target_dist)? + l1_norm(delta))
}

/// Soft-threshold (shrinkage) operator: the proximal map of `t * ||.||_1`.
pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// Proximal gradient descent from `delta = 0`.
///
/// Each iteration takes a gradient step on the smooth term (the gradient is
/// masked by `w` first) and applies the soft threshold; coordinates with
/// `w_i = 0` stay exactly zero. A step that would increase the objective is
/// rejected and the solve stops there, so the recorded trace is
/// non-increasing. Also stops at an exact fixed point, when the masked
/// smooth-gradient norm plus the proximal movement drops below `grad_tol`,
/// or at `max_iters`.
pub fn solve_gd(problem: &CfProblem, config: &SolverConfig) -> Result<DenseSolution> {
    config.validate()?;
    let n = problem.x.len();
    let mut delta = vec![0.0; n];
    let mut obj = objective(problem, &delta, config.lambda)?;
    if !obj.is_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            step_size: config.step_size,
        });
    }
    let mut trace = vec![obj];
    let mut iterations_used = 0;

    for iter in 1..=config.max_iters {
        let grad = input_gradient(
            problem.model,
            &problem.perturbed(&delta),
            &problem.target_dist,
        )?;
        let mut grad_norm_sq = 0.0;
        let mut candidate = vec![0.0; n];
        for i in 0..n {
            if problem.w[i] == 0.0 {
                continue; // pinned at exactly zero
            }
            let g = config.lambda * grad[i];
            grad_norm_sq += g * g;
            candidate[i] = soft_threshold(delta[i] - config.step_size * g, config.step_size);
        }
        let movement = {
            let mut acc = 0.0;
            for i in 0..n {
                let d = candidate[i] - delta[i];
                acc += d * d;
            }
            acc.sqrt()
        };
        if movement == 0.0 {
            break; // exact proximal fixed point
        }
        if candidate.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: iter,
                step_size: config.step_size,
            });
        }
        let cand_obj = objective(problem, &candidate, config.lambda)?;
        if !cand_obj.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                step_size: config.step_size,
            });
        }
        if cand_obj > obj {
            break; // step rejected
        }
        delta = candidate;
        obj = cand_obj;
        trace.push(obj);
        iterations_used = iter;
        if grad_norm_sq.sqrt() + movement < config.grad_tol {
            break;
        }
    }

    Ok(DenseSolution {
        delta,
        iterations_used,
        final_objective: obj,
        objective_trace: trace,
    })
}

/// Dense baseline: plain gradient descent on the same objective with an L1
/// subgradient (`sign(delta)`, zero at the origin), run for the full budget.
/// Returns the best-objective iterate; `iterations_used` is its index.
pub fn solve_subgradient(problem: &CfProblem, config: &SolverConfig) -> Result<DenseSolution> {
    config.validate()?;
    let n = problem.x.len();
    let mut delta = vec![0.0; n];
    let obj0 = objective(problem, &delta, config.lambda)?;
    if !obj0.is_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            step_size: config.step_size,
        });
    }
    let mut trace = vec![obj0];
    let mut best_delta = delta.clone();
    let mut best_obj = obj0;
    let mut best_iter = 0;

    for iter in 1..=config.max_iters {
        let grad = input_gradient(
            problem.model,
            &problem.perturbed(&delta),
            &problem.target_dist,
        )?;
        for i in 0..n {
            if problem.w[i] == 0.0 {
                continue;
            }
            let sub = config.lambda * grad[i] + sign(delta[i]);
            delta[i] -= config.step_size * sub;
        }
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: iter,
                step_size: config.step_size,
            });
        }
        let obj = objective(problem, &delta, config.lambda)?;
        if !obj.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                step_size: config.step_size,
            });
        }
        trace.push(obj);
        if obj < best_obj {
            best_obj = obj;
            best_delta.copy_from_slice(&delta);
            best_iter = iter;
        }
    }

    Ok(DenseSolution {
        delta: best_delta,
        iterations_used: best_iter,
        final_objective: best_obj,
        objective_trace: trace,
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
