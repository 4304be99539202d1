//! Planted-support synthetic classification data.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

const MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub features: usize,
    pub samples: usize,
    pub classes: usize,
    pub support_size: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Ground-truth scoring model: labels are `argmax(Wᵀx + σ·noise)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    /// `d x C`, nonzero exactly on the planted rows.
    pub weights: DMatrix<f64>,
    pub support: Vec<usize>,
    pub noise_sigma: f64,
}

fn argmax(col: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (c, v) in col.enumerate() {
        if v > best.0 {
            best = (v, c);
        }
    }
    best.1
}

impl PlantedModel {
    pub fn classes(&self) -> usize {
        self.weights.ncols()
    }

    /// Draws `n` labelled samples. With an empty support the labels are
    /// uniform and independent of the features.
    pub fn draw(&self, n: usize, rng: &mut impl Rng) -> (DMatrix<f64>, Vec<usize>) {
        let d = self.weights.nrows();
        let c = self.classes();
        let x = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let labels = if self.support.is_empty() {
            (0..n).map(|_| rng.random_range(0..c)).collect()
        } else {
            let scores = self.weights.tr_mul(&x);
            scores
                .column_iter()
                .map(|col| {
                    let noisy: Vec<f64> = col
                        .iter()
                        .map(|s| s + self.noise_sigma * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    argmax(noisy.into_iter())
                })
                .collect()
        };
        (x, labels)
    }

    /// Noise-free labels `argmax(Wᵀx)`, the Bayes rule for this model.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        self.weights
            .tr_mul(x)
            .column_iter()
            .map(|col| argmax(col.iter().copied()))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub model: PlantedModel,
}

impl SyntheticData {
    pub fn support(&self) -> &[usize] {
        &self.model.support
    }
}

/// Draws a planted model and a dataset from it.
///
/// Planted rows are standard-normal vectors projected to zero sum across
/// classes and scaled to unit norm. Draws are repeated until every class
/// occurs at least once.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let SyntheticSpec {
        features: d,
        samples: n,
        classes: c,
        support_size: s,
        noise_sigma,
        seed,
    } = *spec;
    if d == 0 {
        return Err(Error::Parameter("need at least one feature".into()));
    }
    if c < 2 {
        return Err(Error::Parameter("need at least two classes".into()));
    }
    if s > d {
        return Err(Error::Parameter(format!(
            "support size {s} exceeds d = {d}"
        )));
    }
    if n < 4 * c {
        return Err(Error::Parameter(format!(
            "need N >= 4C = {}, got {n}",
            4 * c
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Parameter(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = sample(&mut rng, d, s).into_vec();
    support.sort_unstable();
    let mut weights = DMatrix::zeros(d, c);
    for &i in &support {
        loop {
            let mut row: Vec<f64> = (0..c).map(|_| rng.sample(StandardNormal)).collect();
            let mean = row.iter().sum::<f64>() / c as f64;
            row.iter_mut().for_each(|v| *v -= mean);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for (k, v) in row.into_iter().enumerate() {
                    weights[(i, k)] = v / norm;
                }
                break;
            }
        }
    }
    let model = PlantedModel {
        weights,
        support,
        noise_sigma,
    };
    for _ in 0..MAX_DRAWS {
        let (x, labels) = model.draw(n, &mut rng);
        let mut seen = vec![false; c];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&b| b) {
            let dataset = Dataset::new(x, labels, c)?;
            return Ok(SyntheticData { dataset, model });
        }
    }
    Err(Error::DegenerateDataset(format!(
        "could not draw every class within {MAX_DRAWS} attempts"
    )))
}
