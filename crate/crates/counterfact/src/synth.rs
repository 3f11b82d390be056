//! Seeded generator for the 5-dimensional four-cluster benchmark.
//!
//! Coordinates 1 and 2 are each a half-half mixture of normals centered at
//! +/-`mean_magnitude`; coordinates 3..5 are pure noise centered at zero.
//! The label (1 best .. 4 worst) is a function of the two drawn component
//! signs only, counterclockwise from the first quadrant:
//! (+,+) -> 1, (-,+) -> 2, (-,-) -> 3, (+,-) -> 4.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::TabularDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_points: usize,
    /// Variance (sigma^2) of every coordinate.
    pub variance: f64,
    pub mean_magnitude: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_points: 4000,
            variance: 0.3,
            mean_magnitude: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_points < 4 {
            return Err(Error::InvalidInput(format!(
                "n_points must be at least 4, got {}",
                self.n_points
            )));
        }
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if !(self.mean_magnitude.is_finite() && self.mean_magnitude > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mean_magnitude must be positive, got {}",
                self.mean_magnitude
            )));
        }
        Ok(())
    }
}

/// Label from the drawn component signs, independent of the realized noise.
pub fn label_from_signs(s1: bool, s2: bool) -> usize {
    match (s1, s2) {
        (true, true) => 1,
        (false, true) => 2,
        (false, false) => 3,
        (true, false) => 4,
    }
}

/// Rows, labels, and the component signs behind each label.
pub type SignedSample = (Vec<Vec<f64>>, Vec<usize>, Vec<(bool, bool)>);

/// Generates the dataset together with the per-point component signs
/// (`true` meaning the positive mixture component).
pub fn generate_with_signs(config: &SynthConfig) -> Result<SignedSample> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sigma = config.variance.sqrt();
    let noise = Normal::new(0.0, sigma).expect("valid normal");

    let mut rows = Vec::with_capacity(config.n_points);
    let mut labels = Vec::with_capacity(config.n_points);
    let mut signs = Vec::with_capacity(config.n_points);
    for _ in 0..config.n_points {
        let s1 = rng.gen_bool(0.5);
        let s2 = rng.gen_bool(0.5);
        let m1 = if s1 {
            config.mean_magnitude
        } else {
            -config.mean_magnitude
        };
        let m2 = if s2 {
            config.mean_magnitude
        } else {
            -config.mean_magnitude
        };
        let row = vec![
            m1 + noise.sample(&mut rng),
            m2 + noise.sample(&mut rng),
            noise.sample(&mut rng),
            noise.sample(&mut rng),
            noise.sample(&mut rng),
        ];
        rows.push(row);
        labels.push(label_from_signs(s1, s2));
        signs.push((s1, s2));
    }
    Ok((rows, labels, signs))
}

/// Generates the feature matrix (n x 5) and rating labels 1..4.
/// Deterministic for a fixed seed.
pub fn generate(config: &SynthConfig) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let (rows, labels, _) = generate_with_signs(config)?;
    Ok((rows, labels))
}

/// Wraps the generated matrix in the standard tabular form with feature
/// names x1..x5 and ordinal ratings.
pub fn generate_dataset(config: &SynthConfig) -> Result<TabularDataset> {
    let (rows, labels) = generate(config)?;
    Ok(TabularDataset {
        feature_names: (1..=5).map(|i| format!("x{i}")).collect(),
        rows,
        ratings: labels,
        entity_ids: None,
        periods: None,
        symbolic_ratings: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SynthConfig {
            n_points: 500,
            seed: 9,
            ..SynthConfig::default()
        };
        let (a, la) = generate(&cfg).unwrap();
        let (b, lb) = generate(&cfg).unwrap();
        assert_eq!(la, lb);
        for (ra, rb) in a.iter().zip(&b) {
            let bits_a: Vec<u64> = ra.iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = rb.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn labels_follow_signs_not_noise() {
        let cfg = SynthConfig {
            n_points: 2000,
            seed: 3,
            ..SynthConfig::default()
        };
        let (_, labels, signs) = generate_with_signs(&cfg).unwrap();
        for (&label, &(s1, s2)) in labels.iter().zip(&signs) {
            assert_eq!(label, label_from_signs(s1, s2));
        }
    }

    #[test]
    fn label_frequencies_are_balanced() {
        let cfg = SynthConfig {
            n_points: 100_000,
            seed: 11,
            ..SynthConfig::default()
        };
        let (_, labels) = generate(&cfg).unwrap();
        for class in 1..=4 {
            let freq = labels.iter().filter(|&&l| l == class).count() as f64 / 100_000.0;
            assert!((freq - 0.25).abs() < 0.01, "class {class} frequency {freq}");
        }
    }

    #[test]
    fn first_coordinate_moments_match_the_mixture() {
        let cfg = SynthConfig {
            n_points: 100_000,
            seed: 11,
            ..SynthConfig::default()
        };
        let (rows, labels) = generate(&cfg).unwrap();
        // Over label-1 points x1 is Normal(+1, 0.3).
        let ones: Vec<f64> = rows
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == 1)
            .map(|(r, _)| r[0])
            .collect();
        let n = ones.len() as f64;
        let mean = ones.iter().sum::<f64>() / n;
        let var = ones.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!((var - 0.3).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn noise_coordinates_are_uncorrelated_with_labels() {
        let cfg = SynthConfig {
            n_points: 100_000,
            seed: 5,
            ..SynthConfig::default()
        };
        let (rows, labels) = generate(&cfg).unwrap();
        let n = rows.len() as f64;
        for coord in 2..5 {
            let xs: Vec<f64> = rows.iter().map(|r| r[coord]).collect();
            let mean_x = xs.iter().sum::<f64>() / n;
            let sd_x = (xs.iter().map(|v| (v - mean_x) * (v - mean_x)).sum::<f64>() / n).sqrt();
            for class in 1..=4 {
                let ys: Vec<f64> = labels
                    .iter()
                    .map(|&l| if l == class { 1.0 } else { 0.0 })
                    .collect();
                let mean_y = ys.iter().sum::<f64>() / n;
                let sd_y = (ys.iter().map(|v| (v - mean_y) * (v - mean_y)).sum::<f64>() / n).sqrt();
                let cov = xs
                    .iter()
                    .zip(&ys)
                    .map(|(x, y)| (x - mean_x) * (y - mean_y))
                    .sum::<f64>()
                    / n;
                let corr = cov / (sd_x * sd_y);
                assert!(
                    corr.abs() < 0.02,
                    "coord {coord} class {class}: correlation {corr}"
                );
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = SynthConfig {
            n_points: 3,
            ..SynthConfig::default()
        };
        assert!(generate(&bad).is_err());
        let bad = SynthConfig {
            variance: 0.0,
            ..SynthConfig::default()
        };
        assert!(generate(&bad).is_err());
    }
}
