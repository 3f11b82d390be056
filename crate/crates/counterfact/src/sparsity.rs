//! The sparsity pass over the dense solution: rank coordinates by relative
//! change, build nested sparse candidates, test each against the classifier,
//! escalate the cross-entropy weight through a ladder, and pick the final
//! sparse counterfactual.

use crate::error::{Error, Result};
use crate::eval::norms;
use crate::model::{argmax_class, forward_probs, ProbVector};
use crate::solver::{objective, solve_gd, CfProblem, SolverConfig};

/// What a zero original value does to the relative-change ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroHandling {
    /// Cap the ratio at 1 where `x_i = 0` (the printed algorithm).
    #[default]
    CeilingOne,
    /// Drop zero-valued features from the ranking entirely (the match-rate
    /// variant used on statement data).
    IgnoreZero,
}

impl std::str::FromStr for ZeroHandling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ceiling_one" => Ok(ZeroHandling::CeilingOne),
            "ignore_zero" => Ok(ZeroHandling::IgnoreZero),
            other => Err(Error::InvalidInput(format!(
                "unknown zero handling '{other}' (expected ceiling_one or ignore_zero)"
            ))),
        }
    }
}

/// How to pick among multiple qualifying candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Smallest l0, then smallest objective, then lowest sparsity level.
    #[default]
    FewestNonzeros,
    /// Smallest objective, then smallest l0, then lowest sparsity level.
    MinObjective,
}

impl std::str::FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fewest_nonzeros" => Ok(TieBreak::FewestNonzeros),
            "min_objective" => Ok(TieBreak::MinObjective),
            other => Err(Error::InvalidInput(format!(
                "unknown tie break '{other}' (expected fewest_nonzeros or min_objective)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityConfig {
    /// Number of nested candidates per round.
    pub k: usize,
    /// Strictly increasing cross-entropy weights, tried in order.
    pub lambda_ladder: Vec<f64>,
    pub zero_handling: ZeroHandling,
    pub tie_break: TieBreak,
    /// L0 counting tolerance in standardized units; the proximal solver
    /// yields exact zeros, so this only guards float noise.
    pub nonzero_tol: f64,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        Self {
            k: 10,
            lambda_ladder: vec![
                0.1, 5.0, 10.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 10000.0, 100000.0,
            ],
            zero_handling: ZeroHandling::CeilingOne,
            tie_break: TieBreak::FewestNonzeros,
            nonzero_tol: 1e-8,
        }
    }
}

impl SparsityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if self.lambda_ladder.is_empty() {
            return Err(Error::InvalidInput("lambda ladder is empty".into()));
        }
        for pair in self.lambda_ladder.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidInput(
                    "lambda ladder must be strictly increasing".into(),
                ));
            }
        }
        if self
            .lambda_ladder
            .iter()
            .any(|l| !(l.is_finite() && *l > 0.0))
        {
            return Err(Error::InvalidInput(
                "lambda ladder entries must be positive and finite".into(),
            ));
        }
        if !(self.nonzero_tol.is_finite() && self.nonzero_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "nonzero_tol must be positive, got {}",
                self.nonzero_tol
            )));
        }
        Ok(())
    }
}

/// One sparse candidate and its evaluation against the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution {
    pub delta: Vec<f64>,
    /// How many top-ranked coordinates this candidate keeps.
    pub sparsity_level: usize,
    pub l0: usize,
    pub l1: f64,
    pub l2: f64,
    pub qualifies: bool,
    pub predicted_ordinal: usize,
    pub output_probs: ProbVector,
    pub objective_value: f64,
}

/// Per-round diagnostics of the escalation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub lambda: f64,
    pub solver_iterations: usize,
    pub dense_objective: f64,
    pub dense_l0: usize,
    pub qualifying_count: usize,
    /// True when k exceeded the strictly positive ranking entries and the
    /// trailing candidates repeat the last distinct support.
    pub support_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SparsityOutcome {
    Solved {
        chosen: CandidateSolution,
        qualifying: Vec<CandidateSolution>,
    },
    NoSolution {
        rounds_used: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityResult {
    pub outcome: SparsityOutcome,
    /// The stopping lambda: first qualifying rung, or the last rung tried.
    pub lambda_used: f64,
    pub trace: Vec<RoundSummary>,
}

impl SparsityResult {
    pub fn solved(&self) -> Option<&CandidateSolution> {
        match &self.outcome {
            SparsityOutcome::Solved { chosen, .. } => Some(chosen),
            SparsityOutcome::NoSolution { .. } => None,
        }
    }
}

/// Magnitude of change relative to the original vector, the ranking signal.
///
/// Coordinates with `delta_i = 0` rank 0 under both variants; a zero
/// original value yields 1 under `CeilingOne` and 0 under `IgnoreZero`.
pub fn relative_change(delta: &[f64], x: &[f64], zero_handling: ZeroHandling) -> Result<Vec<f64>> {
    if delta.len() != x.len() {
        return Err(Error::Contract(format!(
            "delta has {} entries, x has {}",
            delta.len(),
            x.len()
        )));
    }
    Ok(delta
        .iter()
        .zip(x)
        .map(|(&d, &xi)| {
            if d == 0.0 {
                0.0
            } else if xi != 0.0 {
                (d / xi).abs()
            } else {
                match zero_handling {
                    ZeroHandling::CeilingOne => 1.0,
                    ZeroHandling::IgnoreZero => 0.0,
                }
            }
        })
        .collect())
}

/// Builds the k nested candidates: candidate i keeps `delta`'s values at the
/// i largest ratios (ties to the lower index), zeros elsewhere. When fewer
/// than k ratios are strictly positive, the remaining candidates repeat the
/// last distinct support; the flag reports that.
pub fn build_candidates(delta: &[f64], ratios: &[f64], k: usize) -> (Vec<Vec<f64>>, bool) {
    assert_eq!(delta.len(), ratios.len(), "delta and ratios must align");
    assert!(k >= 1, "k must be >= 1");
    let mut order: Vec<usize> = (0..ratios.len()).filter(|&i| ratios[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        ratios[b]
            .partial_cmp(&ratios[a])
            .expect("ratios are never NaN")
            .then(a.cmp(&b))
    });
    let support_exhausted = k > order.len();
    let mut candidates = Vec::with_capacity(k);
    for i in 1..=k {
        let keep = order.len().min(i);
        let mut cand = vec![0.0; delta.len()];
        for &idx in &order[..keep] {
            cand[idx] = delta[idx];
        }
        candidates.push(cand);
    }
    (candidates, support_exhausted)
}

/// Picks the final candidate from a non-empty qualifying list.
pub fn select_final(
    qualifying: &[CandidateSolution],
    policy: TieBreak,
) -> Result<CandidateSolution> {
    if qualifying.is_empty() {
        return Err(Error::Contract(
            "select_final needs at least one qualifying candidate".into(),
        ));
    }
    let best = qualifying
        .iter()
        .min_by(|a, b| match policy {
            TieBreak::FewestNonzeros => {
                a.l0.cmp(&b.l0)
                    .then(
                        a.objective_value
                            .partial_cmp(&b.objective_value)
                            .expect("objectives are finite"),
                    )
                    .then(a.sparsity_level.cmp(&b.sparsity_level))
            }
            TieBreak::MinObjective => a
                .objective_value
                .partial_cmp(&b.objective_value)
                .expect("objectives are finite")
                .then(a.l0.cmp(&b.l0))
                .then(a.sparsity_level.cmp(&b.sparsity_level)),
        })
        .expect("non-empty list");
    Ok(best.clone())
}

/// The full escalation loop: for each ladder rung solve the dense problem,
/// rank, build candidates, and stop at the first rung with a qualifying
/// candidate. A fully masked problem short-circuits after one round.
pub fn run_sparsity(
    problem: &CfProblem,
    solver_cfg: &SolverConfig,
    sp_cfg: &SparsityConfig,
) -> Result<SparsityResult> {
    sp_cfg.validate()?;
    let mut trace: Vec<RoundSummary> = Vec::with_capacity(sp_cfg.lambda_ladder.len());

    for &lambda in &sp_cfg.lambda_ladder {
        let cfg = solver_cfg.with_lambda(lambda);
        let dense = solve_gd(problem, &cfg)?;
        let ratios = relative_change(&dense.delta, problem.x(), sp_cfg.zero_handling)?;
        let (candidate_deltas, support_exhausted) =
            build_candidates(&dense.delta, &ratios, sp_cfg.k);

        let mut qualifying = Vec::new();
        for (idx, cand_delta) in candidate_deltas.iter().enumerate() {
            let probs = forward_probs(problem.model(), &problem.perturbed(cand_delta))?;
            let predicted = argmax_class(probs.probs());
            let qualifies = predicted <= problem.target_ordinal();
            if !qualifies {
                continue;
            }
            let (l0, l1, l2) = norms(cand_delta, sp_cfg.nonzero_tol);
            qualifying.push(CandidateSolution {
                delta: cand_delta.clone(),
                sparsity_level: idx + 1,
                l0,
                l1,
                l2,
                qualifies,
                predicted_ordinal: predicted,
                objective_value: objective(problem, cand_delta, lambda)?,
                output_probs: probs,
            });
        }

        let (dense_l0, _, _) = norms(&dense.delta, sp_cfg.nonzero_tol);
        trace.push(RoundSummary {
            lambda,
            solver_iterations: dense.iterations_used,
            dense_objective: dense.final_objective,
            dense_l0,
            qualifying_count: qualifying.len(),
            support_exhausted,
        });

        if !qualifying.is_empty() {
            let chosen = select_final(&qualifying, sp_cfg.tie_break)?;
            return Ok(SparsityResult {
                outcome: SparsityOutcome::Solved { chosen, qualifying },
                lambda_used: lambda,
                trace,
            });
        }

        if problem.is_fully_masked() {
            // No rung can ever move a fully masked problem.
            return Ok(SparsityResult {
                outcome: SparsityOutcome::NoSolution { rounds_used: 1 },
                lambda_used: lambda,
                trace,
            });
        }
    }

    Ok(SparsityResult {
        outcome: SparsityOutcome::NoSolution {
            rounds_used: sp_cfg.lambda_ladder.len(),
        },
        lambda_used: *sp_cfg.lambda_ladder.last().expect("validated non-empty"),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{predict_class, HiddenActivation, Layer, MlpModel};
    use crate::solver::TargetDistKind;

    #[test]
    fn relative_change_examples() {
        let delta = [1.0, 3.0, 0.0];
        let x = [2.0, 0.0, 4.0];
        assert_eq!(
            relative_change(&delta, &x, ZeroHandling::CeilingOne).unwrap(),
            vec![0.5, 1.0, 0.0]
        );
        assert_eq!(
            relative_change(&delta, &x, ZeroHandling::IgnoreZero).unwrap(),
            vec![0.5, 0.0, 0.0]
        );
        let zero = [0.0, 0.0, 0.0];
        assert_eq!(
            relative_change(&zero, &x, ZeroHandling::CeilingOne).unwrap(),
            vec![0.0; 3]
        );
        assert_eq!(
            relative_change(&zero, &x, ZeroHandling::IgnoreZero).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn candidates_keep_top_ranked_coordinates() {
        // The class-4 sample point: ratios are maximal at coordinate 1.
        let delta = [-0.767, -0.554, 0.018, -0.010, -0.012];
        let x = [0.6019, -0.4742, 0.0827, -0.0595, 0.0588];
        let ratios = relative_change(&delta, &x, ZeroHandling::CeilingOne).unwrap();
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2]);
        let (cands, exhausted) = build_candidates(&delta, &ratios, 1);
        assert!(!exhausted);
        assert_eq!(cands[0], vec![-0.767, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn candidate_ties_break_toward_lower_index() {
        let delta = [0.0, 2.0, 2.0];
        let x = [1.0, 1.0, 1.0];
        let ratios = relative_change(&delta, &x, ZeroHandling::CeilingOne).unwrap();
        let (cands, _) = build_candidates(&delta, &ratios, 1);
        assert_eq!(cands[0], vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn full_support_candidate_equals_delta() {
        let delta = [0.5, 0.0, -1.0, 0.25];
        let x = [1.0, 1.0, 1.0, 1.0];
        let ratios = relative_change(&delta, &x, ZeroHandling::CeilingOne).unwrap();
        let (cands, exhausted) = build_candidates(&delta, &ratios, 4);
        assert!(exhausted); // only 3 strictly positive ratios
        assert_eq!(cands[3], delta.to_vec());
        assert_eq!(cands[2], delta.to_vec()); // candidate 3 already holds the support
    }

    #[test]
    fn candidate_supports_are_nested() {
        let delta = [0.3, -0.7, 0.0, 0.1, -0.2, 0.05];
        let x = [1.0, 2.0, 3.0, 0.5, -0.25, 0.0];
        let ratios = relative_change(&delta, &x, ZeroHandling::CeilingOne).unwrap();
        let (cands, _) = build_candidates(&delta, &ratios, 6);
        for pair in cands.windows(2) {
            for (narrow, wide) in pair[0].iter().zip(&pair[1]) {
                if *narrow != 0.0 {
                    assert_eq!(narrow, wide, "support must be nested");
                }
            }
        }
        for (level, cand) in cands.iter().enumerate() {
            let l0 = cand.iter().filter(|v| **v != 0.0).count();
            assert!(l0 <= level + 1);
        }
    }

    fn candidate(l0: usize, objective: f64, level: usize) -> CandidateSolution {
        CandidateSolution {
            delta: vec![0.0],
            sparsity_level: level,
            l0,
            l1: 0.0,
            l2: 0.0,
            qualifies: true,
            predicted_ordinal: 1,
            output_probs: ProbVector::one_hot(2, 1).unwrap(),
            objective_value: objective,
        }
    }

    #[test]
    fn select_final_policies() {
        let single = [candidate(2, 5.0, 2)];
        assert_eq!(
            select_final(&single, TieBreak::FewestNonzeros).unwrap(),
            single[0]
        );

        let pair = [candidate(2, 5.0, 2), candidate(3, 4.0, 3)];
        let few = select_final(&pair, TieBreak::FewestNonzeros).unwrap();
        assert_eq!(few.l0, 2);
        let min_obj = select_final(&pair, TieBreak::MinObjective).unwrap();
        assert_eq!(min_obj.l0, 3);

        // Brute-force comparator over a larger list.
        let list = [
            candidate(3, 2.0, 4),
            candidate(1, 9.0, 1),
            candidate(1, 8.0, 2),
            candidate(2, 1.0, 3),
        ];
        let brute_few = list
            .iter()
            .min_by(|a, b| {
                (a.l0, a.objective_value, a.sparsity_level)
                    .partial_cmp(&(b.l0, b.objective_value, b.sparsity_level))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(
            select_final(&list, TieBreak::FewestNonzeros).unwrap(),
            *brute_few
        );
        let brute_obj = list
            .iter()
            .min_by(|a, b| {
                (a.objective_value, a.l0, a.sparsity_level)
                    .partial_cmp(&(b.objective_value, b.l0, b.sparsity_level))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(
            select_final(&list, TieBreak::MinObjective).unwrap(),
            *brute_obj
        );

        assert!(select_final(&[], TieBreak::FewestNonzeros).is_err());
    }

    /// Two-class model whose logit difference is `slope * x1`; prediction
    /// flips to class 1 once x1 + delta1 >= 0.
    fn slope_model(slope: f64) -> MlpModel {
        let half = slope / 2.0;
        MlpModel::new(
            vec![Layer::new(2, vec![half, 0.0, -half, 0.0], vec![0.0, 0.0]).unwrap()],
            HiddenActivation::Relu,
        )
        .unwrap()
    }

    #[test]
    fn fully_masked_problem_short_circuits() {
        let model = slope_model(1.0);
        let problem = CfProblem::new(
            &model,
            vec![-1.0, 0.5],
            vec![0.0, 0.0],
            1,
            TargetDistKind::OneHot,
        )
        .unwrap();
        let result = run_sparsity(
            &problem,
            &SolverConfig::default(),
            &SparsityConfig::default(),
        )
        .unwrap();
        assert_eq!(
            result.outcome,
            SparsityOutcome::NoSolution { rounds_used: 1 }
        );
        assert_eq!(result.trace.len(), 1);
    }

    #[test]
    fn ladder_stops_at_first_qualifying_rung() {
        // Logit slope 0.05: the proximal threshold is only beaten once
        // lambda * slope * (1 - p1) > 1, which first happens at lambda = 50.
        let model = slope_model(0.05);
        let problem = CfProblem::new(
            &model,
            vec![-1.0, 0.5],
            vec![1.0, 1.0],
            1,
            TargetDistKind::OneHot,
        )
        .unwrap();
        let sp_cfg = SparsityConfig {
            lambda_ladder: vec![0.1, 5.0, 10.0, 50.0],
            ..SparsityConfig::default()
        };
        let solver_cfg = SolverConfig::default();
        let result = run_sparsity(&problem, &solver_cfg, &sp_cfg).unwrap();
        assert_eq!(result.lambda_used, 50.0);
        assert_eq!(result.trace.len(), 4);
        let chosen = result.solved().expect("should solve at lambda 50");
        assert!(chosen.qualifies);
        assert_eq!(chosen.l0, 1);

        // Brute force: no earlier rung produces any qualifying candidate.
        for &lambda in &[0.1, 5.0, 10.0] {
            let dense = solve_gd(&problem, &solver_cfg.with_lambda(lambda)).unwrap();
            let ratios =
                relative_change(&dense.delta, problem.x(), ZeroHandling::CeilingOne).unwrap();
            let (cands, _) = build_candidates(&dense.delta, &ratios, sp_cfg.k);
            for cand in &cands {
                let predicted = predict_class(&model, &problem.perturbed(cand)).unwrap();
                assert!(predicted > 1, "lambda {lambda} should not qualify");
            }
        }
    }

    #[test]
    fn exhausted_ladder_reports_no_solution() {
        let model = slope_model(0.05);
        let problem = CfProblem::new(
            &model,
            vec![-1.0, 0.5],
            vec![1.0, 1.0],
            1,
            TargetDistKind::OneHot,
        )
        .unwrap();
        let sp_cfg = SparsityConfig {
            lambda_ladder: vec![0.1, 5.0, 10.0],
            ..SparsityConfig::default()
        };
        let result = run_sparsity(&problem, &SolverConfig::default(), &sp_cfg).unwrap();
        assert_eq!(
            result.outcome,
            SparsityOutcome::NoSolution { rounds_used: 3 }
        );
        assert_eq!(result.lambda_used, 10.0);
        assert_eq!(result.trace.len(), 3);
    }

    #[test]
    fn solved_results_requalify_on_reevaluation() {
        let model = slope_model(8.0);
        let problem = CfProblem::new(
            &model,
            vec![-1.2, 0.4],
            vec![1.0, 1.0],
            1,
            TargetDistKind::OneHot,
        )
        .unwrap();
        let result = run_sparsity(
            &problem,
            &SolverConfig::default(),
            &SparsityConfig::default(),
        )
        .unwrap();
        let chosen = result.solved().expect("steep model solves");
        let predicted = predict_class(&model, &problem.perturbed(&chosen.delta)).unwrap();
        assert!(predicted <= problem.target_ordinal());
        // Sparsity dominance against the same round's dense solution.
        let dense = solve_gd(
            &problem,
            &SolverConfig::default().with_lambda(result.lambda_used),
        )
        .unwrap();
        let dense_l0 = dense.delta.iter().filter(|v| v.abs() > 1e-8).count();
        assert!(chosen.l0 <= dense_l0);
        // Mask respect comes along for free here: nothing is masked, but the
        // support must still sit inside the dense support.
        for (c, d) in chosen.delta.iter().zip(&dense.delta) {
            if *c != 0.0 {
                assert_eq!(c, d);
            }
        }
    }
}
