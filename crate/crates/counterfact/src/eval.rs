//! Effort norms, matched-pairs one-sided t-tests, match rates against
//! realized changes, and the batch aggregations (effort by rating, lambda
//! escalation counts).

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::stats::student_t_survival;

/// (l0, l1, l2) of a vector; l0 counts entries with `|v_i| > eps`.
pub fn norms(v: &[f64], eps: f64) -> (usize, f64, f64) {
    let l0 = v.iter().filter(|x| x.abs() > eps).count();
    let l1 = v.iter().map(|x| x.abs()).sum();
    let l2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (l0, l1, l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// H_a: mean(a - b) < 0.
    Less,
    /// H_a: mean(a - b) > 0.
    Greater,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub p: f64,
    pub mean_diff: f64,
    /// Standard error of the mean difference (sd / sqrt(n)).
    pub se: f64,
    pub n: usize,
}

/// Matched-pairs one-sided t-test on `d = a - b` with sample standard
/// deviation (n-1 denominator) and n-1 degrees of freedom.
pub fn paired_t_one_sided(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "paired samples have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let ss: f64 = d.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n as f64 - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(Error::DegenerateSample(
            "all paired differences are identical; the t statistic is undefined".into(),
        ));
    }
    let se = sd / (n as f64).sqrt();
    let t = mean / se;
    let df = (n - 1) as f64;
    let p = match alternative {
        Alternative::Greater => student_t_survival(t, df),
        Alternative::Less => student_t_survival(-t, df),
    };
    Ok(TTestResult {
        t,
        p,
        mean_diff: mean,
        se,
        n,
    })
}

/// Fraction of suggested features that actually changed.
pub fn match_rate(
    suggested: &BTreeSet<String>,
    realized_changed: &BTreeSet<String>,
) -> Result<f64> {
    if suggested.is_empty() {
        return Err(Error::UndefinedRate(
            "no suggested features; match rate is undefined".into(),
        ));
    }
    let hits = suggested.intersection(realized_changed).count();
    Ok(hits as f64 / suggested.len() as f64)
}

/// Realized quarter-over-quarter change statistics, in original units.
/// L0 uses exact inequality on raw values; the `relevant` variants restrict
/// to coordinates with `w_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealChangeStats {
    pub l0_full: usize,
    pub l0_relevant: usize,
    pub l2_full: f64,
    pub l2_relevant: f64,
}

pub fn real_change_stats(x_before: &[f64], x_after: &[f64], w: &[f64]) -> Result<RealChangeStats> {
    if x_before.len() != x_after.len() || x_before.len() != w.len() {
        return Err(Error::Contract(format!(
            "rows and mask have lengths {}, {}, {}",
            x_before.len(),
            x_after.len(),
            w.len()
        )));
    }
    let mut l0_full = 0;
    let mut l0_relevant = 0;
    let mut sq_full = 0.0;
    let mut sq_relevant = 0.0;
    for i in 0..w.len() {
        let d = x_after[i] - x_before[i];
        if d != 0.0 {
            l0_full += 1;
            if w[i] == 1.0 {
                l0_relevant += 1;
            }
        }
        sq_full += d * d;
        if w[i] == 1.0 {
            sq_relevant += d * d;
        }
    }
    Ok(RealChangeStats {
        l0_full,
        l0_relevant,
        l2_full: sq_full.sqrt(),
        l2_relevant: sq_relevant.sqrt(),
    })
}

/// One batch row as the aggregations see it: the original (pre-change)
/// ordinal, whether the sparsity run solved, and the chosen candidate's
/// effort norms in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    pub original_ordinal: usize,
    pub solved: bool,
    pub lambda_used: f64,
    pub l0: usize,
    pub l2: f64,
}

/// One row of the effort-by-rating table.
#[derive(Debug, Clone, PartialEq)]
pub struct EffortRow {
    pub original_ordinal: usize,
    pub next_ordinal: usize,
    pub mean_l2: f64,
    pub mean_l0: f64,
    /// Solved results in this bucket (the means run over these).
    pub count: usize,
    /// NoSolution results in this bucket, excluded from the means.
    pub unsolved: usize,
}

/// Mean effort grouped by original rating, best grade first. NoSolution
/// rows are excluded from the means and reported in `unsolved`.
pub fn effort_by_rating(rows: &[OutcomeRow]) -> Vec<EffortRow> {
    let ordinals: BTreeSet<usize> = rows.iter().map(|r| r.original_ordinal).collect();
    let mut out = Vec::new();
    for ordinal in ordinals {
        let bucket: Vec<&OutcomeRow> = rows
            .iter()
            .filter(|r| r.original_ordinal == ordinal)
            .collect();
        let solved: Vec<&&OutcomeRow> = bucket.iter().filter(|r| r.solved).collect();
        let count = solved.len();
        let (mean_l2, mean_l0) = if count > 0 {
            (
                solved.iter().map(|r| r.l2).sum::<f64>() / count as f64,
                solved.iter().map(|r| r.l0 as f64).sum::<f64>() / count as f64,
            )
        } else {
            (0.0, 0.0)
        };
        out.push(EffortRow {
            original_ordinal: ordinal,
            next_ordinal: ordinal.saturating_sub(1).max(1),
            mean_l2,
            mean_l0,
            count,
            unsolved: bucket.len() - count,
        });
    }
    out
}

/// Counts of solved rows by (lambda rung, original rating).
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    pub ladder: Vec<f64>,
    /// Distinct original ordinals present in the batch, ascending.
    pub ratings: Vec<usize>,
    /// `counts[rung_index][rating_index]`
    pub counts: Vec<Vec<usize>>,
}

impl LambdaTable {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Solved count per lambda rung.
    pub fn rung_totals(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Solved count per original rating.
    pub fn rating_totals(&self) -> Vec<usize> {
        let mut sums = vec![0; self.ratings.len()];
        for row in &self.counts {
            for (s, c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }
}

/// Builds the lambda escalation table. Every solved row's `lambda_used`
/// must be a ladder rung.
pub fn lambda_table(rows: &[OutcomeRow], ladder: &[f64]) -> Result<LambdaTable> {
    let ratings: Vec<usize> = rows
        .iter()
        .map(|r| r.original_ordinal)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut counts = vec![vec![0usize; ratings.len()]; ladder.len()];
    for row in rows.iter().filter(|r| r.solved) {
        let rung = ladder
            .iter()
            .position(|&l| l == row.lambda_used)
            .ok_or_else(|| {
                Error::DataIntegrity(format!(
                    "lambda_used {} is not on the configured ladder",
                    row.lambda_used
                ))
            })?;
        let rating_idx = ratings
            .iter()
            .position(|&r| r == row.original_ordinal)
            .expect("rating collected above");
        counts[rung][rating_idx] += 1;
    }
    Ok(LambdaTable {
        ladder: ladder.to_vec(),
        ratings,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ln_gamma;

    #[test]
    fn norms_examples() {
        assert_eq!(norms(&[0.0, 0.0], 1e-8), (0, 0.0, 0.0));
        let (l0, l1, l2) = norms(&[3.0, 4.0, 0.0], 1e-8);
        assert_eq!(l0, 2);
        assert_eq!(l1, 7.0);
        assert_eq!(l2, 5.0);
        // Values at the tolerance do not count toward l0.
        assert_eq!(norms(&[1e-8, 2e-8], 1e-8).0, 1);
    }

    #[test]
    fn norms_consistency_at_exact_zero() {
        let v = [0.0, 0.0, 0.0];
        let (l0, l1, l2) = norms(&v, 1e-8);
        assert!(l0 == 0 && l1 == 0.0 && l2 == 0.0);
        let v = [0.0, 5e-9, 0.0];
        let (l0, l1, _) = norms(&v, 1e-8);
        assert_eq!(l0, 0);
        assert!(l1 <= 3.0 * 1e-8);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let a = [1.0, 2.0, 3.0];
        assert!(matches!(
            paired_t_one_sided(&a, &a, Alternative::Greater),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            paired_t_one_sided(&[1.0], &[0.0], Alternative::Greater),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn hand_checked_t_statistic() {
        // d = (1, 2, 3): mean 2, sd 1, t = 2*sqrt(3), df = 2.
        let a = [2.0, 4.0, 6.0];
        let b = [1.0, 2.0, 3.0];
        let r = paired_t_one_sided(&a, &b, Alternative::Greater).unwrap();
        let t_want = 2.0 * 3.0_f64.sqrt();
        assert!((r.t - t_want).abs() < 1e-12);
        assert_eq!(r.n, 3);
        assert!((r.mean_diff - 2.0).abs() < 1e-12);
        // df = 2 closed form: P(T >= t) = 0.5 * (1 - t / sqrt(2 + t^2)).
        let p_want = 0.5 * (1.0 - t_want / (2.0 + t_want * t_want).sqrt());
        assert!((r.p - p_want).abs() < 1e-12);
        assert!((r.p - 0.0371).abs() < 1e-4);
    }

    #[test]
    fn tail_complement_and_sign_equivariance() {
        let a = [2.0, 4.4, 6.0, 1.0];
        let b = [1.0, 2.0, 3.5, 2.5];
        let g = paired_t_one_sided(&a, &b, Alternative::Greater).unwrap();
        let l = paired_t_one_sided(&a, &b, Alternative::Less).unwrap();
        assert_eq!(g.p + l.p, 1.0);
        let swapped = paired_t_one_sided(&b, &a, Alternative::Less).unwrap();
        assert_eq!(swapped.t, -g.t);
        assert_eq!(swapped.p, g.p);
    }

    /// Adaptive Simpson quadrature, an implementation-independent check on
    /// the incomplete-beta tail.
    fn simpson(a: f64, b: f64, fa: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, fm, flm);
        let right = simpson(m, b, fm, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        adaptive(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1)
            + adaptive(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1)
    }

    fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = simpson(a, b, fa, fb, fm);
        adaptive(f, a, b, fa, fb, fm, whole, tol, 60)
    }

    #[test]
    fn t_tail_matches_numerical_integration() {
        for &df in &[2.0, 5.0, 30.0] {
            let density = move |t: f64| {
                let c = (ln_gamma((df + 1.0) / 2.0)
                    - ln_gamma(df / 2.0)
                    - 0.5 * (df * std::f64::consts::PI).ln())
                .exp();
                c * (1.0 + t * t / df).powf(-(df + 1.0) / 2.0)
            };
            for &t in &[0.5, 1.3, 2.0, 3.4641016151377544] {
                // Split at the point of interest; far tail cut where the
                // density is numerically negligible even for df = 2.
                let upper = 3.0e4;
                let tail = integrate(&density, t, upper, 1e-10);
                let got = student_t_survival(t, df);
                assert!(
                    (got - tail).abs() < 1e-6,
                    "df {df}, t {t}: betainc {got} vs quadrature {tail}"
                );
            }
        }
    }

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn match_rate_examples() {
        let suggested = set(&["a", "b", "c", "d"]);
        let realized = set(&["a", "b", "x", "y"]);
        assert_eq!(match_rate(&suggested, &realized).unwrap(), 0.5);

        let small = set(&["a", "b"]);
        assert_eq!(match_rate(&small, &realized).unwrap(), 1.0);

        assert!(matches!(
            match_rate(&BTreeSet::new(), &realized),
            Err(Error::UndefinedRate(_))
        ));
    }

    #[test]
    fn match_rate_fixture_aggregate_is_hand_counted() {
        // Row 1: 2 of 2 suggested changed; row 2: 1 of 2. Mean = 0.75.
        let rows = [
            (set(&["a", "b"]), set(&["a", "b", "c"])),
            (set(&["a", "d"]), set(&["a"])),
        ];
        let mean: f64 = rows
            .iter()
            .map(|(s, r)| match_rate(s, r).unwrap())
            .sum::<f64>()
            / rows.len() as f64;
        assert_eq!(mean, 0.75);
    }

    #[test]
    fn real_change_examples() {
        let w = [1.0, 1.0, 0.0];
        let same = real_change_stats(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &w).unwrap();
        assert_eq!(
            same,
            RealChangeStats {
                l0_full: 0,
                l0_relevant: 0,
                l2_full: 0.0,
                l2_relevant: 0.0
            }
        );

        // Change only on the masked coordinate.
        let masked_only = real_change_stats(&[1.0, 2.0, 3.0], &[1.0, 2.0, 7.0], &w).unwrap();
        assert_eq!(masked_only.l0_full, 1);
        assert_eq!(masked_only.l0_relevant, 0);
        assert_eq!(masked_only.l2_full, 4.0);
        assert_eq!(masked_only.l2_relevant, 0.0);

        // 6-feature fixture, hand arithmetic.
        let before = [10.0, 5.0, 0.0, 2.0, -1.0, 100.0];
        let after = [13.0, 5.0, 4.0, 2.0, -1.0, 88.0];
        let w = [1.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let s = real_change_stats(&before, &after, &w).unwrap();
        assert_eq!(s.l0_full, 3); // coords 1, 3, 6
        assert_eq!(s.l0_relevant, 1); // coord 1 only
        assert_eq!(s.l2_full, (9.0_f64 + 16.0 + 144.0).sqrt());
        assert_eq!(s.l2_relevant, 3.0);
    }

    fn row(ordinal: usize, solved: bool, lambda: f64, l0: usize, l2: f64) -> OutcomeRow {
        OutcomeRow {
            original_ordinal: ordinal,
            solved,
            lambda_used: lambda,
            l0,
            l2,
        }
    }

    #[test]
    fn effort_table_examples() {
        assert!(effort_by_rating(&[]).is_empty());

        let rows = [
            row(3, true, 50.0, 2, 1.0),
            row(3, true, 50.0, 3, 2.0),
            row(3, true, 100.0, 4, 3.0),
        ];
        let table = effort_by_rating(&rows);
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].mean_l0, 3.0);
        assert_eq!(table[0].count, 3);
        assert_eq!(table[0].unsolved, 0);
        assert_eq!(table[0].next_ordinal, 2);

        let mixed = [
            row(2, true, 50.0, 2, 1.0),
            row(2, false, 0.0, 0, 0.0),
            row(2, true, 50.0, 4, 3.0),
        ];
        let table = effort_by_rating(&mixed);
        assert_eq!(table[0].count, 2);
        assert_eq!(table[0].unsolved, 1);
        assert_eq!(table[0].mean_l0, 3.0);
        assert_eq!(table[0].mean_l2, 2.0);
    }

    #[test]
    fn lambda_table_examples() {
        let ladder = [0.1, 5.0, 10.0, 50.0, 100.0];
        let empty = lambda_table(&[], &ladder).unwrap();
        assert_eq!(empty.total(), 0);

        let rows = [
            row(4, true, 50.0, 1, 1.0),
            row(4, true, 50.0, 1, 1.0),
            row(4, true, 50.0, 2, 1.0),
            row(4, true, 100.0, 1, 1.0),
            row(4, true, 100.0, 1, 1.0),
        ];
        let table = lambda_table(&rows, &ladder).unwrap();
        assert_eq!(table.ratings, vec![4]);
        assert_eq!(table.counts[3][0], 3);
        assert_eq!(table.counts[4][0], 2);
        assert_eq!(table.total(), 5);
        assert_eq!(table.rung_totals(), vec![0, 0, 0, 3, 2]);
        assert_eq!(table.rating_totals(), vec![5]);

        let off = [row(4, true, 77.0, 1, 1.0)];
        assert!(matches!(
            lambda_table(&off, &ladder),
            Err(Error::DataIntegrity(_))
        ));
    }

    #[test]
    fn lambda_totals_match_effort_totals() {
        let rows = [
            row(2, true, 5.0, 1, 0.5),
            row(2, false, 0.0, 0, 0.0),
            row(3, true, 10.0, 2, 1.5),
            row(4, true, 5.0, 1, 0.25),
            row(4, true, 50.0, 3, 2.0),
        ];
        let ladder = [0.1, 5.0, 10.0, 50.0];
        let table = lambda_table(&rows, &ladder).unwrap();
        let solved_total: usize = effort_by_rating(&rows).iter().map(|r| r.count).sum();
        assert_eq!(table.total(), solved_total);
    }
}
