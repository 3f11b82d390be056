//! Batch report generation: the method-comparison table with matched-pairs
//! tests, the realized-change comparison, effort by rating, and the lambda
//! escalation table, each emitted as CSV plus one plain-text summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{
    effort_by_rating, lambda_table, match_rate, paired_t_one_sided, real_change_stats, Alternative,
    EffortRow, LambdaTable, RealChangeStats, TTestResult,
};
use crate::ingest::{MaskSpec, RatingScale, TabularDataset};
use crate::pipeline::{Outcome, ResultRecord};

/// Matched-pairs comparison of the two methods for one transition
/// (rows grouped by predicted-before ordinal). Tests are one-sided on
/// GD - sparsity with alternative "greater"; `None` when the sample is too
/// small or degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStats {
    pub from_ordinal: usize,
    pub to_ordinal: usize,
    pub n_pairs: usize,
    pub l2_sparsity_mean: f64,
    pub l2_gd_mean: f64,
    pub l2_test: Option<TTestResult>,
    pub l0_sparsity_mean: f64,
    pub l0_gd_mean: f64,
    pub l0_test: Option<TTestResult>,
}

/// Pairs solved rows by row_id and compares the methods per transition.
pub fn method_comparison(gd: &[ResultRecord], sparsity: &[ResultRecord]) -> Vec<TransitionStats> {
    let gd_by_row: BTreeMap<usize, &ResultRecord> = gd
        .iter()
        .filter(|r| r.outcome == Outcome::Solved)
        .map(|r| (r.row_id, r))
        .collect();
    let mut groups: BTreeMap<usize, Vec<(&ResultRecord, &ResultRecord)>> = BTreeMap::new();
    for sp in sparsity.iter().filter(|r| r.outcome == Outcome::Solved) {
        if let Some(gd_rec) = gd_by_row.get(&sp.row_id) {
            groups
                .entry(sp.predicted_before)
                .or_default()
                .push((gd_rec, sp));
        }
    }
    let mut out = Vec::new();
    for (from, pairs) in groups {
        let n = pairs.len() as f64;
        let gd_l2: Vec<f64> = pairs.iter().map(|(g, _)| g.l2).collect();
        let sp_l2: Vec<f64> = pairs.iter().map(|(_, s)| s.l2).collect();
        let gd_l0: Vec<f64> = pairs.iter().map(|(g, _)| g.l0 as f64).collect();
        let sp_l0: Vec<f64> = pairs.iter().map(|(_, s)| s.l0 as f64).collect();
        out.push(TransitionStats {
            from_ordinal: from,
            to_ordinal: from - 1,
            n_pairs: pairs.len(),
            l2_sparsity_mean: sp_l2.iter().sum::<f64>() / n,
            l2_gd_mean: gd_l2.iter().sum::<f64>() / n,
            l2_test: paired_t_one_sided(&gd_l2, &sp_l2, Alternative::Greater).ok(),
            l0_sparsity_mean: sp_l0.iter().sum::<f64>() / n,
            l0_gd_mean: gd_l0.iter().sum::<f64>() / n,
            l0_test: paired_t_one_sided(&gd_l0, &sp_l0, Alternative::Greater).ok(),
        });
    }
    out
}

/// Aggregate comparison against realized quarter-over-quarter changes.
#[derive(Debug, Clone, PartialEq)]
pub struct RealComparison {
    /// Rating-improved entities with two quarters and a solved
    /// before-quarter record.
    pub n_entities: usize,
    pub real_l0_mean: f64,
    pub real_l0_relevant_mean: f64,
    pub real_l2_mean: f64,
    pub real_l2_relevant_mean: f64,
    /// Absent when no gradient-descent export was supplied.
    pub gd_l0_mean: Option<f64>,
    pub gd_l2_mean: Option<f64>,
    pub sparsity_l0_mean: f64,
    pub sparsity_l2_mean: f64,
    /// Mean of per-entity match rates; absent when no entity had a
    /// non-empty suggestion set.
    pub match_rate_mean: Option<f64>,
}

/// Computes the realized-change comparison over a two-quarter panel,
/// restricted to entities whose rating actually improved in the second
/// quarter. Quarters within an entity are ordered by period string (periods
/// must sort chronologically); records are matched on the before quarter.
pub fn real_comparison(
    panel: &TabularDataset,
    mask: &MaskSpec,
    gd: Option<&[ResultRecord]>,
    sparsity: &[ResultRecord],
) -> Result<RealComparison> {
    let (ids, periods) = match (&panel.entity_ids, &panel.periods) {
        (Some(ids), Some(periods)) => (ids, periods),
        _ => {
            return Err(Error::InvalidInput(
                "real-change comparison needs entity_id and period columns".into(),
            ))
        }
    };
    let mut by_entity: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        by_entity.entry(id).or_default().push(i);
    }

    let index_records = |records: &'_ [ResultRecord]| -> BTreeMap<(String, String), ResultRecord> {
        records
            .iter()
            .filter(|r| r.outcome == Outcome::Solved)
            .filter_map(|r| match (&r.entity_id, &r.period) {
                (Some(e), Some(p)) => Some(((e.clone(), p.clone()), r.clone())),
                _ => None,
            })
            .collect()
    };
    let gd_idx = gd.map(index_records);
    let sp_idx = index_records(sparsity);

    let mut n = 0usize;
    let mut real = Vec::<RealChangeStats>::new();
    let mut gd_norms = Vec::<(usize, f64)>::new();
    let mut sp_norms = Vec::<(usize, f64)>::new();
    let mut rates = Vec::<f64>::new();

    for (entity, mut rows) in by_entity {
        if rows.len() < 2 {
            continue;
        }
        rows.sort_by(|&a, &b| periods[a].cmp(&periods[b]));
        let before = rows[0];
        let after = *rows.last().unwrap();
        // Only quarters where the rating went up (ordinal went down).
        if panel.ratings[after] >= panel.ratings[before] {
            continue;
        }
        let key = (entity.to_string(), periods[before].clone());
        let Some(sp_rec) = sp_idx.get(&key) else {
            continue;
        };
        if let Some(gd_idx) = &gd_idx {
            // Keep the entity sets identical for the two methods.
            let Some(gd_rec) = gd_idx.get(&key) else {
                continue;
            };
            gd_norms.push((gd_rec.l0, gd_rec.l2));
        }
        n += 1;
        real.push(real_change_stats(
            &panel.rows[before],
            &panel.rows[after],
            &mask.w,
        )?);
        sp_norms.push((sp_rec.l0, sp_rec.l2));

        if !sp_rec.changed_feature_names.is_empty() {
            let suggested: BTreeSet<String> =
                sp_rec.changed_feature_names.iter().cloned().collect();
            let realized: BTreeSet<String> = panel
                .feature_names
                .iter()
                .enumerate()
                .filter(|(i, _)| panel.rows[after][*i] != panel.rows[before][*i])
                .map(|(_, name)| name.clone())
                .collect();
            rates.push(match_rate(&suggested, &realized)?);
        }
    }

    if n == 0 {
        return Err(Error::InvalidInput(
            "no entity improved its rating across two quarters with a solved before-quarter record"
                .into(),
        ));
    }
    let nf = n as f64;
    Ok(RealComparison {
        n_entities: n,
        real_l0_mean: real.iter().map(|s| s.l0_full as f64).sum::<f64>() / nf,
        real_l0_relevant_mean: real.iter().map(|s| s.l0_relevant as f64).sum::<f64>() / nf,
        real_l2_mean: real.iter().map(|s| s.l2_full).sum::<f64>() / nf,
        real_l2_relevant_mean: real.iter().map(|s| s.l2_relevant).sum::<f64>() / nf,
        gd_l0_mean: (!gd_norms.is_empty())
            .then(|| gd_norms.iter().map(|(l0, _)| *l0 as f64).sum::<f64>() / nf),
        gd_l2_mean: (!gd_norms.is_empty())
            .then(|| gd_norms.iter().map(|(_, l2)| *l2).sum::<f64>() / nf),
        sparsity_l0_mean: sp_norms.iter().map(|(l0, _)| *l0 as f64).sum::<f64>() / nf,
        sparsity_l2_mean: sp_norms.iter().map(|(_, l2)| l2).sum::<f64>() / nf,
        match_rate_mean: if rates.is_empty() {
            None
        } else {
            Some(rates.iter().sum::<f64>() / rates.len() as f64)
        },
    })
}

/// Everything a batch run aggregates into.
#[derive(Debug, Clone, PartialEq)]
pub struct EffortReport {
    pub transitions: Vec<TransitionStats>,
    pub real_comparison: Option<RealComparison>,
    pub effort_rows: Vec<EffortRow>,
    pub lambda: LambdaTable,
}

/// Builds the full report. `gd` enables the method comparison; `panel`
/// (with its mask) enables the realized-change comparison.
pub fn build_report(
    sparsity: &[ResultRecord],
    gd: Option<&[ResultRecord]>,
    panel: Option<(&TabularDataset, &MaskSpec)>,
    ladder: &[f64],
) -> Result<EffortReport> {
    let outcome_rows: Vec<_> = sparsity.iter().map(|r| r.outcome_row()).collect();
    let effort_rows = effort_by_rating(&outcome_rows);
    let lambda = lambda_table(&outcome_rows, ladder)?;

    let solved_total = sparsity
        .iter()
        .filter(|r| r.outcome == Outcome::Solved)
        .count();
    if lambda.total() != solved_total {
        return Err(Error::DataIntegrity(format!(
            "lambda table totals {} but {} rows are solved",
            lambda.total(),
            solved_total
        )));
    }

    let transitions = gd
        .map(|g| method_comparison(g, sparsity))
        .unwrap_or_default();
    let real = match panel {
        Some((data, mask)) => Some(real_comparison(data, mask, gd, sparsity)?),
        None => None,
    };
    Ok(EffortReport {
        transitions,
        real_comparison: real,
        effort_rows,
        lambda,
    })
}

fn symbol_or_empty(scale: Option<&RatingScale>, ordinal: usize) -> String {
    scale
        .and_then(|s| s.to_symbol(ordinal).ok())
        .unwrap_or_default()
        .to_string()
}

fn fmt_test(t: &Option<TTestResult>) -> String {
    match t {
        Some(r) => format!("{:.5},{:.5},{:.4},{:.6e}", r.mean_diff, r.se, r.t, r.p),
        None => ",,,".to_string(),
    }
}

/// Writes `method_comparison.csv`, `real_comparison.csv`,
/// `effort_by_rating.csv`, `lambda_table.csv`, and `summary.txt` into
/// `out_dir`, returning the paths written. Output is byte-deterministic.
pub fn write_report(
    report: &EffortReport,
    scale: Option<&RatingScale>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut written = Vec::new();
    let save = |name: &str, content: String| -> Result<PathBuf> {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    };

    // Method comparison (matched pairs, one-sided GD - sparsity).
    let mut t2 = String::from(
        "from,to,n_pairs,l2_sparsity,l2_gd,l2_diff_mean,l2_diff_se,l2_t,l2_p_one_sided,l0_sparsity,l0_gd,l0_diff_mean,l0_diff_se,l0_t,l0_p_one_sided\n",
    );
    for row in &report.transitions {
        writeln!(
            t2,
            "{},{},{},{:.5},{:.5},{},{:.5},{:.5},{}",
            row.from_ordinal,
            row.to_ordinal,
            row.n_pairs,
            row.l2_sparsity_mean,
            row.l2_gd_mean,
            fmt_test(&row.l2_test),
            row.l0_sparsity_mean,
            row.l0_gd_mean,
            fmt_test(&row.l0_test),
        )
        .expect("write to string");
    }
    written.push(save("method_comparison.csv", t2)?);

    // Realized-change comparison.
    let mut t4 = String::from("metric,real_change,real_change_relevant,gd,sparsity,match_rate\n");
    if let Some(rc) = &report.real_comparison {
        let rate = rc
            .match_rate_mean
            .map(|r| format!("{:.4}", r))
            .unwrap_or_default();
        let fmt_opt = |v: Option<f64>| v.map(|m| format!("{m:.2}")).unwrap_or_default();
        writeln!(
            t4,
            "L0,{:.2},{:.2},{},{:.2},{}",
            rc.real_l0_mean,
            rc.real_l0_relevant_mean,
            fmt_opt(rc.gd_l0_mean),
            rc.sparsity_l0_mean,
            rate
        )
        .expect("write to string");
        writeln!(
            t4,
            "L2,{:.2},{:.2},{},{:.2},",
            rc.real_l2_mean,
            rc.real_l2_relevant_mean,
            fmt_opt(rc.gd_l2_mean),
            rc.sparsity_l2_mean
        )
        .expect("write to string");
    }
    written.push(save("real_comparison.csv", t4)?);

    // Effort by rating.
    let mut t7 = String::from(
        "original_rating,original_symbol,next_rating,next_symbol,mean_l2,mean_l0,count,unsolved\n",
    );
    for row in &report.effort_rows {
        writeln!(
            t7,
            "{},{},{},{},{:.4},{:.4},{},{}",
            row.original_ordinal,
            symbol_or_empty(scale, row.original_ordinal),
            row.next_ordinal,
            symbol_or_empty(scale, row.next_ordinal),
            row.mean_l2,
            row.mean_l0,
            row.count,
            row.unsolved,
        )
        .expect("write to string");
    }
    written.push(save("effort_by_rating.csv", t7)?);

    // Lambda escalation counts.
    let mut t8 = String::from("lambda");
    for rating in &report.lambda.ratings {
        write!(t8, ",rating_{rating}").expect("write to string");
    }
    t8.push('\n');
    for (rung, counts) in report.lambda.ladder.iter().zip(&report.lambda.counts) {
        write!(t8, "{rung}").expect("write to string");
        for c in counts {
            write!(t8, ",{c}").expect("write to string");
        }
        t8.push('\n');
    }
    written.push(save("lambda_table.csv", t8)?);

    written.push(save("summary.txt", render_summary(report, scale))?);
    Ok(written)
}

fn render_summary(report: &EffortReport, scale: Option<&RatingScale>) -> String {
    let mut s = String::new();
    s.push_str("Batch report\n");
    s.push_str("============\n");
    s.push_str("Averages are per company-quarter. Parenthesized values are\n");
    s.push_str("standard errors of the mean difference.\n\n");

    if !report.transitions.is_empty() {
        s.push_str("Method comparison (matched pairs, one-sided GD - sparsity)\n");
        for t in &report.transitions {
            writeln!(
                s,
                "  {} -> {} (n={}): L0 sparsity {:.5} vs GD {:.5}{}; L2 sparsity {:.5} vs GD {:.5}{}",
                t.from_ordinal,
                t.to_ordinal,
                t.n_pairs,
                t.l0_sparsity_mean,
                t.l0_gd_mean,
                t.l0_test
                    .as_ref()
                    .map(|r| format!(", diff {:.5} ({:.5}), p = {:.3e}", r.mean_diff, r.se, r.p))
                    .unwrap_or_default(),
                t.l2_sparsity_mean,
                t.l2_gd_mean,
                t.l2_test
                    .as_ref()
                    .map(|r| format!(", diff {:.5} ({:.5}), p = {:.3e}", r.mean_diff, r.se, r.p))
                    .unwrap_or_default(),
            )
            .expect("write to string");
        }
        s.push('\n');
    }

    if let Some(rc) = &report.real_comparison {
        s.push_str("Realized-change comparison\n");
        writeln!(s, "  entities: {}", rc.n_entities).expect("write to string");
        let gd_part = |v: Option<f64>| v.map(|m| format!("GD {m:.2}, ")).unwrap_or_default();
        writeln!(
            s,
            "  L0: real {:.2}, real relevant {:.2}, {}sparsity {:.2}",
            rc.real_l0_mean,
            rc.real_l0_relevant_mean,
            gd_part(rc.gd_l0_mean),
            rc.sparsity_l0_mean
        )
        .expect("write to string");
        writeln!(
            s,
            "  L2: real {:.2}, real relevant {:.2}, {}sparsity {:.2}",
            rc.real_l2_mean,
            rc.real_l2_relevant_mean,
            gd_part(rc.gd_l2_mean),
            rc.sparsity_l2_mean
        )
        .expect("write to string");
        match rc.match_rate_mean {
            Some(r) => writeln!(s, "  match rate: {:.2}%", 100.0 * r).expect("write to string"),
            None => s.push_str("  match rate: undefined (no suggestions)\n"),
        }
        s.push('\n');
    }

    if !report.effort_rows.is_empty() {
        s.push_str("Effort to improve one notch, by original rating\n");
        for row in &report.effort_rows {
            let sym = symbol_or_empty(scale, row.original_ordinal);
            let label = if sym.is_empty() {
                format!("{}", row.original_ordinal)
            } else {
                format!("{} ({sym})", row.original_ordinal)
            };
            writeln!(
                s,
                "  {label}: mean L2 {:.4}, mean L0 {:.4}, solved {}, unsolved {}",
                row.mean_l2, row.mean_l0, row.count, row.unsolved
            )
            .expect("write to string");
        }
        s.push('\n');
    }

    s.push_str("Solved counts by lambda rung\n");
    for (rung, total) in report.lambda.ladder.iter().zip(report.lambda.rung_totals()) {
        writeln!(s, "  lambda {rung}: {total}").expect("write to string");
    }
    s
}
