//! Packaged synthetic fixtures: per-sector feature/immutable name lists and
//! a deterministic "statement-like" two-quarter panel generator.
//!
//! Real statement data is proprietary, so these stand in for it: the name
//! lists reproduce the per-sector modifiable counts (86 financial, 87
//! healthcare, 87 IT), and the panel generator produces a 300-feature,
//! two-quarter dataset whose ratings are driven by a handful of modifiable
//! features.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::TabularDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Financial,
    Healthcare,
    It,
}

impl Sector {
    fn features_text(self) -> &'static str {
        match self {
            Sector::Financial => include_str!("../fixtures/financial_features.txt"),
            Sector::Healthcare => include_str!("../fixtures/healthcare_features.txt"),
            Sector::It => include_str!("../fixtures/it_features.txt"),
        }
    }

    fn immutable_text(self) -> &'static str {
        match self {
            Sector::Financial => include_str!("../fixtures/financial_immutable.txt"),
            Sector::Healthcare => include_str!("../fixtures/healthcare_immutable.txt"),
            Sector::It => include_str!("../fixtures/it_immutable.txt"),
        }
    }
}

fn parse_ordered(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect()
}

/// The sector's reported statement variables, in file order.
pub fn sector_feature_names(sector: Sector) -> Vec<String> {
    parse_ordered(sector.features_text())
}

/// The sector's not-feasibly-changeable variables.
pub fn sector_immutable_names(sector: Sector) -> BTreeSet<String> {
    parse_ordered(sector.immutable_text()).into_iter().collect()
}

// ---------------------------------------------------------------------------
// Statement-like two-quarter panel
// ---------------------------------------------------------------------------

pub const STATEMENT_FEATURES: usize = 300;
pub const STATEMENT_MODIFIABLE: usize = 86;
const STATEMENT_DRIVERS: usize = 8;
const DRIVER_COEFFS: [f64; STATEMENT_DRIVERS] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];
const STATEMENT_RATINGS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct StatementConfig {
    pub n_entities: usize,
    pub seed: u64,
    /// Probability that a modifiable feature changes between the quarters.
    /// Statements churn roughly two thirds of their operating variables.
    pub modifiable_change_prob: f64,
    /// Probability that an immutable feature changes between the quarters.
    pub immutable_change_prob: f64,
}

impl Default for StatementConfig {
    fn default() -> Self {
        Self {
            n_entities: 200,
            seed: 17,
            modifiable_change_prob: 0.65,
            immutable_change_prob: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatementPanel {
    /// Two rows per entity (periods 2019Q1 and 2019Q2), 300 features.
    pub data: TabularDataset,
    pub immutable: BTreeSet<String>,
}

fn statement_feature_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=STATEMENT_FEATURES - STATEMENT_MODIFIABLE)
        .map(|i| format!("stmt_fixed_{i:03}"))
        .collect();
    names.extend((1..=STATEMENT_MODIFIABLE).map(|i| format!("stmt_oper_{i:03}")));
    names
}

/// Rating 1 (best) .. 6 (worst) from the latent driver score.
fn bucket(score: f64) -> usize {
    // Thresholds at +-0.9 and +-1.8 score standard deviations.
    let sigma = DRIVER_COEFFS.iter().map(|c| c * c).sum::<f64>().sqrt();
    let z = score / sigma;
    if z > 1.8 {
        1
    } else if z > 0.9 {
        2
    } else if z > 0.0 {
        3
    } else if z > -0.9 {
        4
    } else if z > -1.8 {
        5
    } else {
        6
    }
}

/// Deterministic 300-feature two-quarter panel. Ratings are a thresholded
/// linear score of the first 8 modifiable features; features carry mixed
/// magnitudes (1 to 1e4) so the standardization path does real work.
pub fn statement_panel(config: &StatementConfig) -> Result<StatementPanel> {
    if config.n_entities < STATEMENT_RATINGS {
        return Err(Error::InvalidInput(format!(
            "need at least {STATEMENT_RATINGS} entities, got {}",
            config.n_entities
        )));
    }
    for (name, p) in [
        ("modifiable_change_prob", config.modifiable_change_prob),
        ("immutable_change_prob", config.immutable_change_prob),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "{name} must be in [0, 1], got {p}"
            )));
        }
    }
    let names = statement_feature_names();
    let immutable: BTreeSet<String> = names
        .iter()
        .filter(|n| n.starts_with("stmt_fixed_"))
        .cloned()
        .collect();
    let driver_idx: Vec<usize> = (0..STATEMENT_DRIVERS)
        .map(|d| {
            names
                .iter()
                .position(|n| *n == format!("stmt_oper_{:03}", d + 1))
                .expect("driver name exists")
        })
        .collect();
    let scales: Vec<f64> = (0..STATEMENT_FEATURES)
        .map(|j| 10f64.powi((j % 5) as i32))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let drift = Normal::new(0.0, 0.5).expect("valid normal");

    let mut rows = Vec::with_capacity(config.n_entities * 2);
    let mut ratings = Vec::with_capacity(config.n_entities * 2);
    let mut entity_ids = Vec::with_capacity(config.n_entities * 2);
    let mut periods = Vec::with_capacity(config.n_entities * 2);

    for e in 0..config.n_entities {
        let latent_q1: Vec<f64> = (0..STATEMENT_FEATURES)
            .map(|_| unit.sample(&mut rng))
            .collect();
        let latent_q2: Vec<f64> = latent_q1
            .iter()
            .zip(&names)
            .map(|(z, name)| {
                let p = if immutable.contains(name) {
                    config.immutable_change_prob
                } else {
                    config.modifiable_change_prob
                };
                if rng.gen_bool(p) {
                    z + drift.sample(&mut rng)
                } else {
                    *z
                }
            })
            .collect();
        let score = |latent: &[f64]| -> f64 {
            driver_idx
                .iter()
                .zip(DRIVER_COEFFS)
                .map(|(&j, c)| c * latent[j])
                .sum()
        };
        let id = format!("C{:04}", e + 1);
        for (period, latent) in [("2019Q1", &latent_q1), ("2019Q2", &latent_q2)] {
            rows.push(
                latent
                    .iter()
                    .zip(&scales)
                    .map(|(z, s)| z * s)
                    .collect::<Vec<f64>>(),
            );
            ratings.push(bucket(score(latent)));
            entity_ids.push(id.clone());
            periods.push(period.to_string());
        }
    }

    // Training needs every ordinal present; the default seed satisfies this.
    let max_rating = *ratings.iter().max().unwrap();
    for r in 1..=max_rating {
        if !ratings.contains(&r) {
            return Err(Error::InvalidInput(format!(
                "statement panel seed {} produced no rating-{r} rows; pick another seed",
                config.seed
            )));
        }
    }

    Ok(StatementPanel {
        data: TabularDataset {
            feature_names: names,
            rows,
            ratings,
            entity_ids: Some(entity_ids),
            periods: Some(periods),
            symbolic_ratings: false,
        },
        immutable,
    })
}
