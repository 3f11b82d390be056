//! Ties the pieces together: builds one counterfactual problem per data row
//! (standardize, mask, pick the target), runs the chosen method over a
//! batch with a worker pool, and reads/writes the result export.
//!
//! Export schema (CSV, one record per problem):
//! `row_id,entity_id,period,outcome,lambda_used,sparsity_level,l0,l1,l2,
//! changed_feature_names,delta_original_units,predicted_before,predicted_after`
//! where the two list columns are `;`-joined and aligned with each other,
//! norms are in original units, and `sparsity_level` is empty for the dense
//! gradient-descent method.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{norms, OutcomeRow};
use crate::ingest::{MaskSpec, TabularDataset};
use crate::model::{predict_class, ModelBundle};
use crate::solver::{solve_subgradient, CfProblem, SolverConfig, TargetDistKind};
use crate::sparsity::{run_sparsity, SparsityConfig, SparsityOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense gradient-descent baseline (subgradient handling of the L1 term).
    Gd,
    /// The sparsity pass over the proximal dense solution.
    #[default]
    Sparsity,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Method::Gd),
            "sparsity" => Ok(Method::Sparsity),
            other => Err(Error::InvalidInput(format!(
                "unknown method '{other}' (expected gd or sparsity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub method: Method,
    /// Dataset ratings to include; `None` runs every row.
    pub rating_filter: Option<BTreeSet<usize>>,
    /// Explicit target ordinal; default is one notch above the prediction.
    pub target_override: Option<usize>,
    pub target_dist: TargetDistKind,
    /// Worker threads for the batch; 0 uses the rayon default.
    pub workers: usize,
    pub solver: SolverConfig,
    pub sparsity: SparsityConfig,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            method: Method::Sparsity,
            rating_filter: None,
            target_override: None,
            target_dist: TargetDistKind::OneHot,
            workers: 0,
            solver: SolverConfig::default(),
            sparsity: SparsityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Solved,
    NoSolution,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Solved => write!(f, "solved"),
            Outcome::NoSolution => write!(f, "no_solution"),
        }
    }
}

/// One row of the result export.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub row_id: usize,
    pub entity_id: Option<String>,
    pub period: Option<String>,
    pub outcome: Outcome,
    pub lambda_used: f64,
    /// Sparsity level of the chosen candidate; absent for the gd method.
    pub sparsity_level: Option<usize>,
    pub l0: usize,
    /// L1 of the chosen delta in original units.
    pub l1: f64,
    /// L2 of the chosen delta in original units.
    pub l2: f64,
    pub changed_feature_names: Vec<String>,
    /// Original-unit deltas aligned with `changed_feature_names`.
    pub delta_original_units: Vec<f64>,
    pub predicted_before: usize,
    pub predicted_after: usize,
}

impl ResultRecord {
    pub fn outcome_row(&self) -> OutcomeRow {
        OutcomeRow {
            original_ordinal: self.predicted_before,
            solved: self.outcome == Outcome::Solved,
            lambda_used: self.lambda_used,
            l0: self.l0,
            l2: self.l2,
        }
    }
}

/// A solved (or exhausted) row plus the output distribution at the chosen
/// counterfactual, for the single-row explain path.
#[derive(Debug, Clone, PartialEq)]
pub struct RowRun {
    pub record: ResultRecord,
    pub output_probs: Option<Vec<f64>>,
}

enum Disposition {
    Ran(Box<RowRun>),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub records: Vec<ResultRecord>,
    /// (row_id, reason) for rows passed over with a notice.
    pub skipped: Vec<(usize, String)>,
}

fn solve_one(
    bundle: &ModelBundle,
    mask: &MaskSpec,
    cfg: &BatchConfig,
    row_id: usize,
    entity_id: Option<&str>,
    period: Option<&str>,
    raw_row: &[f64],
) -> Result<Disposition> {
    let x = bundle.scaler.apply_row(raw_row)?;
    let predicted = predict_class(&bundle.model, &x)?;
    if predicted == 1 {
        return Ok(Disposition::Skipped(
            "already at the best rating".to_string(),
        ));
    }
    let target = cfg.target_override.unwrap_or(predicted - 1);
    if target >= predicted {
        return Ok(Disposition::Skipped(format!(
            "target {target} is not an improvement on predicted {predicted}"
        )));
    }
    let problem = CfProblem::new(&bundle.model, x, mask.w.clone(), target, cfg.target_dist)?;

    let base = ResultRecord {
        row_id,
        entity_id: entity_id.map(|s| s.to_string()),
        period: period.map(|s| s.to_string()),
        outcome: Outcome::NoSolution,
        lambda_used: *cfg.sparsity.lambda_ladder.last().expect("validated ladder"),
        sparsity_level: None,
        l0: 0,
        l1: 0.0,
        l2: 0.0,
        changed_feature_names: Vec::new(),
        delta_original_units: Vec::new(),
        predicted_before: predicted,
        predicted_after: predicted,
    };

    let run = match cfg.method {
        Method::Sparsity => {
            let result = run_sparsity(&problem, &cfg.solver, &cfg.sparsity)?;
            match result.outcome {
                SparsityOutcome::Solved { chosen, .. } => {
                    let (names, deltas) =
                        changed_in_original_units(bundle, &chosen.delta, cfg.sparsity.nonzero_tol)?;
                    let (_, l1, l2) = sparse_norms(&deltas);
                    RowRun {
                        record: ResultRecord {
                            outcome: Outcome::Solved,
                            lambda_used: result.lambda_used,
                            sparsity_level: Some(chosen.sparsity_level),
                            l0: chosen.l0,
                            l1,
                            l2,
                            changed_feature_names: names,
                            delta_original_units: deltas,
                            predicted_after: chosen.predicted_ordinal,
                            ..base
                        },
                        output_probs: Some(chosen.output_probs.probs().to_vec()),
                    }
                }
                SparsityOutcome::NoSolution { .. } => RowRun {
                    record: ResultRecord {
                        lambda_used: result.lambda_used,
                        ..base
                    },
                    output_probs: None,
                },
            }
        }
        Method::Gd => {
            let mut solved = None;
            let mut last_lambda = base.lambda_used;
            for &lambda in &cfg.sparsity.lambda_ladder {
                last_lambda = lambda;
                let dense = solve_subgradient(&problem, &cfg.solver.with_lambda(lambda))?;
                let perturbed = problem.perturbed(&dense.delta);
                let after = predict_class(&bundle.model, &perturbed)?;
                if after <= target {
                    solved = Some((lambda, dense, after));
                    break;
                }
            }
            match solved {
                Some((lambda, dense, after)) => {
                    let (names, deltas) =
                        changed_in_original_units(bundle, &dense.delta, cfg.sparsity.nonzero_tol)?;
                    let (l0, _, _) = norms(&dense.delta, cfg.sparsity.nonzero_tol);
                    let (_, l1, l2) = sparse_norms(&deltas);
                    let probs = crate::model::forward_probs(
                        &bundle.model,
                        &problem.perturbed(&dense.delta),
                    )?;
                    RowRun {
                        record: ResultRecord {
                            outcome: Outcome::Solved,
                            lambda_used: lambda,
                            sparsity_level: None,
                            l0,
                            l1,
                            l2,
                            changed_feature_names: names,
                            delta_original_units: deltas,
                            predicted_after: after,
                            ..base
                        },
                        output_probs: Some(probs.probs().to_vec()),
                    }
                }
                None => RowRun {
                    record: ResultRecord {
                        lambda_used: last_lambda,
                        ..base
                    },
                    output_probs: None,
                },
            }
        }
    };
    Ok(Disposition::Ran(Box::new(run)))
}

/// Names and original-unit values of the coordinates the delta touches.
fn changed_in_original_units(
    bundle: &ModelBundle,
    delta_std: &[f64],
    tol: f64,
) -> Result<(Vec<String>, Vec<f64>)> {
    let delta_orig = bundle.scaler.invert_delta(delta_std)?;
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (i, d) in delta_std.iter().enumerate() {
        if d.abs() > tol {
            names.push(bundle.feature_names[i].clone());
            values.push(delta_orig[i]);
        }
    }
    Ok((names, values))
}

fn sparse_norms(values: &[f64]) -> (usize, f64, f64) {
    let l1 = values.iter().map(|v| v.abs()).sum();
    let l2 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    (values.len(), l1, l2)
}

/// Runs the configured method over every data row passing the rating
/// filter. Rows are processed in parallel but reported in input order, so
/// identical inputs give identical outputs regardless of worker count.
pub fn run_batch(
    bundle: &ModelBundle,
    data: &TabularDataset,
    mask: &MaskSpec,
    cfg: &BatchConfig,
) -> Result<BatchOutput> {
    cfg.solver.validate()?;
    cfg.sparsity.validate()?;
    if data.n_features() != bundle.model.n_features() {
        return Err(Error::Contract(format!(
            "data has {} features, model expects {}",
            data.n_features(),
            bundle.model.n_features()
        )));
    }
    if mask.w.len() != data.n_features() {
        return Err(Error::Contract(format!(
            "mask has {} entries, data has {} features",
            mask.w.len(),
            data.n_features()
        )));
    }

    let rows: Vec<usize> = (0..data.n_rows())
        .filter(|&i| {
            cfg.rating_filter
                .as_ref()
                .map(|f| f.contains(&data.ratings[i]))
                .unwrap_or(true)
        })
        .collect();

    let solve = |&i: &usize| -> Result<(usize, Disposition)> {
        let disposition = solve_one(
            bundle,
            mask,
            cfg,
            i,
            data.entity_ids.as_ref().map(|v| v[i].as_str()),
            data.periods.as_ref().map(|v| v[i].as_str()),
            &data.rows[i],
        )?;
        Ok((i, disposition))
    };

    let results: Vec<(usize, Disposition)> = if cfg.workers == 1 {
        rows.iter().map(solve).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
        pool.install(|| rows.par_iter().map(solve).collect::<Result<_>>())?
    };

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, disposition) in results {
        match disposition {
            Disposition::Ran(run) => records.push(run.record),
            Disposition::Skipped(reason) => skipped.push((i, reason)),
        }
    }
    Ok(BatchOutput { records, skipped })
}

/// Solves a single row (the explain path). Rows the batch would skip are
/// reported as invalid-input errors naming the row.
pub fn explain_row(
    bundle: &ModelBundle,
    data: &TabularDataset,
    mask: &MaskSpec,
    cfg: &BatchConfig,
    row_id: usize,
) -> Result<RowRun> {
    if row_id >= data.n_rows() {
        return Err(Error::InvalidInput(format!(
            "row {row_id} out of range; data has {} rows",
            data.n_rows()
        )));
    }
    match solve_one(
        bundle,
        mask,
        cfg,
        row_id,
        data.entity_ids.as_ref().map(|v| v[row_id].as_str()),
        data.periods.as_ref().map(|v| v[row_id].as_str()),
        &data.rows[row_id],
    )? {
        Disposition::Ran(run) => Ok(*run),
        Disposition::Skipped(reason) => Err(Error::InvalidInput(format!("row {row_id}: {reason}"))),
    }
}

/// Finds a row by entity and period.
pub fn find_row(data: &TabularDataset, entity: &str, period: &str) -> Result<usize> {
    let (ids, periods) = match (&data.entity_ids, &data.periods) {
        (Some(ids), Some(periods)) => (ids, periods),
        _ => {
            return Err(Error::InvalidInput(
                "data has no entity_id/period columns".into(),
            ))
        }
    };
    ids.iter()
        .zip(periods)
        .position(|(i, p)| i == entity && p == period)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "no row with entity_id '{entity}' and period '{period}'"
            ))
        })
}

// ---------------------------------------------------------------------------
// Result export
// ---------------------------------------------------------------------------

const EXPORT_HEADER: &str = "row_id,entity_id,period,outcome,lambda_used,sparsity_level,l0,l1,l2,changed_feature_names,delta_original_units,predicted_before,predicted_after";

pub fn write_results(records: &[ResultRecord], path: &Path) -> Result<()> {
    let path_str = path.display().to_string();
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("writing {path_str}: {e}"));
    let mut writer = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("writing {path_str}: {e}")))?;
    writer
        .write_record(EXPORT_HEADER.split(','))
        .map_err(csv_err)?;
    for r in records {
        writer
            .write_record([
                r.row_id.to_string(),
                r.entity_id.clone().unwrap_or_default(),
                r.period.clone().unwrap_or_default(),
                r.outcome.to_string(),
                r.lambda_used.to_string(),
                r.sparsity_level.map(|l| l.to_string()).unwrap_or_default(),
                r.l0.to_string(),
                r.l1.to_string(),
                r.l2.to_string(),
                r.changed_feature_names.join(";"),
                r.delta_original_units
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                r.predicted_before.to_string(),
                r.predicted_after.to_string(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path_str, e))?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Schema {
            path: path_str.clone(),
            message: e.to_string(),
        })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema {
            path: path_str.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if header.join(",") != EXPORT_HEADER {
        return Err(Error::Schema {
            path: path_str,
            message: "missing or unexpected result export header".into(),
        });
    }
    let mut records = Vec::new();
    for (lineno, record) in reader.records().enumerate() {
        let row_no = lineno + 1;
        let record = record.map_err(|e| Error::Schema {
            path: path_str.clone(),
            message: format!("row {row_no}: {e}"),
        })?;
        let cells: Vec<&str> = record.iter().collect();
        if cells.len() != 13 {
            return Err(Error::Schema {
                path: path_str,
                message: format!("row {row_no} has {} cells, expected 13", cells.len()),
            });
        }
        let parse_usize = |idx: usize| -> Result<usize> {
            cells[idx].parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                row: row_no,
                column: idx + 1,
                message: format!("cannot parse '{}' as an integer", cells[idx]),
            })
        };
        let parse_f64 = |idx: usize| -> Result<f64> {
            cells[idx].parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                row: row_no,
                column: idx + 1,
                message: format!("cannot parse '{}' as a number", cells[idx]),
            })
        };
        let outcome = match cells[3] {
            "solved" => Outcome::Solved,
            "no_solution" => Outcome::NoSolution,
            other => {
                return Err(Error::Parse {
                    path: path_str,
                    row: row_no,
                    column: 4,
                    message: format!("unknown outcome '{other}'"),
                })
            }
        };
        let changed_feature_names: Vec<String> = if cells[9].is_empty() {
            Vec::new()
        } else {
            cells[9].split(';').map(|s| s.to_string()).collect()
        };
        let delta_original_units: Vec<f64> = if cells[10].is_empty() {
            Vec::new()
        } else {
            cells[10]
                .split(';')
                .map(|s| {
                    s.parse().map_err(|_| Error::Parse {
                        path: path_str.clone(),
                        row: row_no,
                        column: 11,
                        message: format!("cannot parse '{s}' as a number"),
                    })
                })
                .collect::<Result<_>>()?
        };
        if changed_feature_names.len() != delta_original_units.len() {
            return Err(Error::Schema {
                path: path_str,
                message: format!(
                    "row {row_no}: {} changed names but {} delta values",
                    changed_feature_names.len(),
                    delta_original_units.len()
                ),
            });
        }
        records.push(ResultRecord {
            row_id: parse_usize(0)?,
            entity_id: (!cells[1].is_empty()).then(|| cells[1].to_string()),
            period: (!cells[2].is_empty()).then(|| cells[2].to_string()),
            outcome,
            lambda_used: parse_f64(4)?,
            sparsity_level: if cells[5].is_empty() {
                None
            } else {
                Some(parse_usize(5)?)
            },
            l0: parse_usize(6)?,
            l1: parse_f64(7)?,
            l2: parse_f64(8)?,
            changed_feature_names,
            delta_original_units,
            predicted_before: parse_usize(11)?,
            predicted_after: parse_usize(12)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_mask, fit_scaler, RatingScale};
    use crate::model::{train, HiddenActivation, TrainConfig};
    use crate::synth::{generate_dataset, SynthConfig};

    fn synthetic_bundle(seed: u64) -> (ModelBundle, TabularDataset) {
        let data = generate_dataset(&SynthConfig {
            n_points: 1200,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let scaler = fit_scaler(&data.rows).unwrap();
        let standardized = scaler.apply(&data.rows).unwrap();
        let model = train(
            &TrainConfig {
                hidden_layer_sizes: vec![16, 16],
                epochs: 15,
                seed,
                ..TrainConfig::default()
            },
            &standardized,
            &data.ratings,
            HiddenActivation::Relu,
        )
        .unwrap();
        (
            ModelBundle {
                model,
                feature_names: data.feature_names.clone(),
                scaler,
                rating_scale: RatingScale::default_sp(),
            },
            data,
        )
    }

    #[test]
    fn batch_solves_most_class_4_rows_and_is_order_deterministic() {
        let (bundle, data) = synthetic_bundle(21);
        let mask = build_mask(&data.feature_names, &Default::default());
        let cfg = BatchConfig {
            rating_filter: Some([4].into_iter().collect()),
            solver: SolverConfig {
                max_iters: 400,
                ..SolverConfig::default()
            },
            ..BatchConfig::default()
        };
        let out = run_batch(&bundle, &data, &mask, &cfg).unwrap();
        assert!(!out.records.is_empty());
        let solved = out
            .records
            .iter()
            .filter(|r| r.outcome == Outcome::Solved)
            .count();
        assert!(
            solved * 10 >= out.records.len() * 8,
            "solved {solved} of {}",
            out.records.len()
        );
        // Row ids strictly increasing = input order.
        assert!(out.records.windows(2).all(|w| w[0].row_id < w[1].row_id));

        // Worker count must not change the result.
        let single = run_batch(
            &bundle,
            &data,
            &mask,
            &BatchConfig {
                workers: 1,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(out, single);
    }

    #[test]
    fn gd_method_touches_every_modifiable_coordinate() {
        let (bundle, data) = synthetic_bundle(22);
        let mask = build_mask(&data.feature_names, &Default::default());
        let cfg = BatchConfig {
            method: Method::Gd,
            rating_filter: Some([3].into_iter().collect()),
            solver: SolverConfig {
                max_iters: 400,
                ..SolverConfig::default()
            },
            ..BatchConfig::default()
        };
        let out = run_batch(&bundle, &data, &mask, &cfg).unwrap();
        let solved: Vec<_> = out
            .records
            .iter()
            .filter(|r| r.outcome == Outcome::Solved)
            .collect();
        assert!(!solved.is_empty());
        for r in &solved {
            assert_eq!(r.l0, 5, "gd row {} touched {} coords", r.row_id, r.l0);
            assert!(r.sparsity_level.is_none());
        }
    }

    #[test]
    fn export_round_trips() {
        let (bundle, data) = synthetic_bundle(23);
        let mask = build_mask(&data.feature_names, &Default::default());
        let cfg = BatchConfig {
            rating_filter: Some([2, 4].into_iter().collect()),
            solver: SolverConfig {
                max_iters: 300,
                ..SolverConfig::default()
            },
            ..BatchConfig::default()
        };
        let out = run_batch(&bundle, &data, &mask, &cfg).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_results(&out.records, f.path()).unwrap();
        let back = read_results(f.path()).unwrap();
        assert_eq!(out.records, back);
    }

    #[test]
    fn export_quotes_awkward_entity_ids() {
        let record = ResultRecord {
            row_id: 0,
            entity_id: Some("Acme, Inc.".into()),
            period: Some("2013Q1".into()),
            outcome: Outcome::Solved,
            lambda_used: 50.0,
            sparsity_level: Some(1),
            l0: 1,
            l1: 0.5,
            l2: 0.5,
            changed_feature_names: vec!["a".into()],
            delta_original_units: vec![-0.5],
            predicted_before: 4,
            predicted_after: 3,
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        write_results(std::slice::from_ref(&record), f.path()).unwrap();
        let back = read_results(f.path()).unwrap();
        assert_eq!(back, vec![record]);
    }

    #[test]
    fn explain_reports_skips_as_errors() {
        let (bundle, data) = synthetic_bundle(24);
        let mask = build_mask(&data.feature_names, &Default::default());
        let cfg = BatchConfig::default();
        // Find a row predicted at the best rating.
        let best_row = (0..data.n_rows())
            .find(|&i| {
                let x = bundle.scaler.apply_row(&data.rows[i]).unwrap();
                predict_class(&bundle.model, &x).unwrap() == 1
            })
            .expect("some row predicts class 1");
        assert!(matches!(
            explain_row(&bundle, &data, &mask, &cfg, best_row),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            explain_row(&bundle, &data, &mask, &cfg, data.n_rows()),
            Err(Error::InvalidInput(_))
        ));
    }
}
