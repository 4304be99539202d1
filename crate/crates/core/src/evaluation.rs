//! Classifier-based evaluation of selected feature sets.
//!
//! Selected features are scored by the test accuracy of a k-nearest-neighbour
//! vote and a multinomial logistic (softmax) model trained on the restricted
//! training data, averaged over repeated stratified splits.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{l21_lambda_max, l21_solve};
use crate::data::{center, stratified_split_indices, Dataset, Standardizer};
use crate::error::{shape_error, Error, Result};
use crate::objective::row_norms;
use crate::solver::{
    resolve_config, select_by_count, solve, Algorithm, RegularizationPath, SolverConfig,
};

/// Rows of `x` at `support`, in ascending index order.
pub fn restrict_features(x: &DMatrix<f64>, support: &[usize]) -> Result<DMatrix<f64>> {
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Parameter(
            "duplicate feature index in support".into(),
        ));
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= x.nrows()) {
        return Err(Error::Parameter(format!(
            "feature index {bad} out of range for {} features",
            x.nrows()
        )));
    }
    Ok(x.select_rows(&sorted))
}

/// Euclidean k-nearest-neighbour majority vote for every column of `test_x`.
///
/// Neighbours at equal distance are taken in training order. Vote ties go to
/// the class with the largest summed inverse distance, then to the smallest
/// class index.
pub fn knn_predict(
    train_x: &DMatrix<f64>,
    train_labels: &[usize],
    test_x: &DMatrix<f64>,
    k: usize,
) -> Result<Vec<usize>> {
    let n_train = train_x.ncols();
    if k == 0 || k > n_train {
        return Err(Error::Parameter(format!(
            "k = {k} must lie in 1..={n_train}"
        )));
    }
    if train_labels.len() != n_train {
        return Err(shape_error(
            "knn labels",
            (n_train, 1),
            (train_labels.len(), 1),
        ));
    }
    if test_x.nrows() != train_x.nrows() {
        return Err(shape_error(
            "knn train vs test",
            train_x.shape(),
            test_x.shape(),
        ));
    }
    let classes = train_labels.iter().max().map_or(0, |m| m + 1);
    let mut predictions = Vec::with_capacity(test_x.ncols());
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n_train);
    for query in test_x.column_iter() {
        dist.clear();
        dist.extend(
            train_x
                .column_iter()
                .enumerate()
                .map(|(j, col)| ((col - query).norm_squared(), j)),
        );
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; classes];
        let mut weight = vec![0.0f64; classes];
        for &(d2, j) in &dist[..k] {
            let c = train_labels[j];
            votes[c] += 1;
            weight[c] += 1.0 / d2.sqrt();
        }
        let mut best = 0;
        for c in 1..classes {
            if votes[c] > votes[best] || (votes[c] == votes[best] && weight[c] > weight[best]) {
                best = c;
            }
        }
        predictions.push(best);
    }
    Ok(predictions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxConfig {
    /// Ridge coefficient on the weights (not the bias).
    pub ridge: f64,
    /// Stop once the gradient norm falls below `tolerance · max(1, ‖g₀‖)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-4,
            tolerance: 1e-5,
            max_iterations: 2000,
            initial_step: 1.0,
        }
    }
}

/// Linear class scores `Wᵀx + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

struct SoftmaxProblem<'a> {
    x: &'a DMatrix<f64>,
    onehot: DMatrix<f64>,
    ridge: f64,
}

type SoftmaxGradients = (DMatrix<f64>, DVector<f64>);

impl SoftmaxProblem<'_> {
    /// Mean cross-entropy plus ridge, with the gradients when requested.
    fn evaluate(
        &self,
        w: &DMatrix<f64>,
        b: &DVector<f64>,
        grads: bool,
    ) -> (f64, Option<SoftmaxGradients>) {
        let n = self.x.ncols() as f64;
        let mut scores = w.tr_mul(self.x);
        for mut col in scores.column_iter_mut() {
            col += b;
        }
        let mut total = 0.0;
        for (j, mut col) in scores.column_iter_mut().enumerate() {
            let max = col.max();
            col.add_scalar_mut(-max);
            let lse = col.iter().map(|s| s.exp()).sum::<f64>().ln();
            let target = self
                .onehot
                .column(j)
                .iter()
                .position(|&v| v == 1.0)
                .unwrap_or(0);
            total -= col[target] - lse;
            if grads {
                col.apply(|s| *s = (*s - lse).exp());
            }
        }
        let loss = total / n + 0.5 * self.ridge * w.norm_squared();
        if !grads {
            return (loss, None);
        }
        let diff = (scores - &self.onehot) / n;
        let gw = self.x * diff.transpose() + w * self.ridge;
        let gb = DVector::from_iterator(diff.nrows(), diff.row_iter().map(|r| r.sum()));
        (loss, Some((gw, gb)))
    }
}

/// Multinomial logistic regression by full-batch gradient descent with a
/// halving (Armijo) backtracking step.
pub fn softmax_train(
    train_x: &DMatrix<f64>,
    labels: &[usize],
    class_count: usize,
    config: &SoftmaxConfig,
) -> Result<SoftmaxModel> {
    if labels.len() != train_x.ncols() {
        return Err(shape_error(
            "softmax labels",
            (train_x.ncols(), 1),
            (labels.len(), 1),
        ));
    }
    let mut present = vec![false; class_count];
    for &l in labels {
        if l >= class_count {
            return Err(Error::Parameter(format!(
                "label {l} exceeds class count {class_count}"
            )));
        }
        present[l] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Parameter(
            "softmax training needs at least 2 classes present".into(),
        ));
    }
    let problem = SoftmaxProblem {
        x: train_x,
        onehot: crate::data::one_hot_encode(labels, class_count)?.into_inner(),
        ridge: config.ridge,
    };
    let mut w = DMatrix::zeros(train_x.nrows(), class_count);
    let mut b = DVector::zeros(class_count);
    let (mut loss, g) = problem.evaluate(&w, &b, true);
    let (mut gw, mut gb) = g.expect("gradients requested");
    let g0 = (gw.norm_squared() + gb.norm_squared()).sqrt();
    let stop = config.tolerance * g0.max(1.0);
    let mut step = config.initial_step;
    for _ in 0..config.max_iterations {
        let gnorm_sq = gw.norm_squared() + gb.norm_squared();
        if !loss.is_finite() || !gnorm_sq.is_finite() {
            return Err(Error::NonFinite("softmax training loss"));
        }
        if gnorm_sq.sqrt() < stop {
            break;
        }
        let mut accepted = false;
        while step > 1e-20 {
            let cw = &w - &gw * step;
            let cb = &b - &gb * step;
            let (cand, _) = problem.evaluate(&cw, &cb, false);
            if cand <= loss - 0.5 * step * gnorm_sq {
                w = cw;
                b = cb;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        let (l, g) = problem.evaluate(&w, &b, true);
        loss = l;
        (gw, gb) = g.expect("gradients requested");
        step *= 2.0;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("softmax training loss"));
    }
    Ok(SoftmaxModel {
        weights: w,
        bias: b,
    })
}

/// Arg-max class score per column; ties go to the smallest class index.
pub fn softmax_predict(model: &SoftmaxModel, test_x: &DMatrix<f64>) -> Result<Vec<usize>> {
    if test_x.nrows() != model.weights.nrows() {
        return Err(shape_error(
            "softmax predict",
            model.weights.shape(),
            test_x.shape(),
        ));
    }
    let scores = model.weights.tr_mul(test_x);
    Ok(scores
        .column_iter()
        .map(|col| {
            let mut best = 0;
            for c in 1..col.len() {
                if col[c] + model.bias[c] > col[best] + model.bias[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(shape_error(
            "accuracy",
            (predicted.len(), 1),
            (truth.len(), 1),
        ));
    }
    if truth.is_empty() {
        return Err(Error::Parameter("accuracy of an empty prediction".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Feature set for a requested count read off a path: the support of the point
/// closest in size, topped up from the densest point by decreasing row norm
/// when the support is smaller than `target`.
pub fn select_features(path: &RegularizationPath, target: usize) -> Result<Vec<usize>> {
    let point = select_by_count(path, target)?;
    let mut chosen = point.support.clone();
    if chosen.len() < target {
        let densest = path.densest().ok_or(Error::EmptyPath)?;
        let norms = row_norms(&densest.weights);
        for i in rank_by_norm(&norms) {
            if chosen.len() >= target || norms[i] == 0.0 {
                break;
            }
            if !chosen.contains(&i) {
                chosen.push(i);
            }
        }
        chosen.sort_unstable();
    }
    Ok(chosen)
}

/// Indices by decreasing value, ties by index.
pub fn rank_by_norm(norms: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
}

/// The `k` features with the largest row norms, ascending by index.
pub fn top_k_by_norm(norms: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut top: Vec<usize> = rank_by_norm(norms).into_iter().take(k).collect();
    top.sort_unstable();
    top
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Knn,
    Softmax,
}

impl Classifier {
    pub fn name(self) -> &'static str {
        match self {
            Classifier::Knn => "knn",
            Classifier::Softmax => "softmax",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hiht,
    Ahiht,
    L21,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hiht => "hiht",
            Method::Ahiht => "ahiht",
            Method::L21 => "l21",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub method: Method,
    pub solver: SolverConfig,
    /// Requested numbers of selected features.
    pub feature_counts: Vec<usize>,
    /// For the ℓ2,1 baseline: regularization values as fractions of the
    /// smallest `λ` that zeroes every row.
    pub lambda_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub knn_k: usize,
    pub classifiers: Vec<Classifier>,
    pub standardize: bool,
    pub softmax: SoftmaxConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Ahiht,
            solver: SolverConfig::default(),
            feature_counts: (1..=20).map(|k| 20 * k).collect(),
            lambda_grid: (0..=5).map(|e| 10f64.powi(e - 5)).collect(),
            trials: 10,
            seed: 0,
            train_fraction: 2.0 / 3.0,
            knn_k: 5,
            classifiers: vec![Classifier::Knn, Classifier::Softmax],
            standardize: false,
            softmax: SoftmaxConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub method: String,
    /// `λ` of the path point used, or the ℓ2,1 `λ`; `None` for the all-features baseline.
    pub lambda: Option<f64>,
    pub requested_count: usize,
    pub selected_features: Vec<usize>,
    pub accuracy: f64,
    pub train_seconds: f64,
    pub classifier: Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub classifier: Classifier,
    /// Grid fraction for the ℓ2,1 baseline, `None` for path-based methods.
    pub lambda_scale: Option<f64>,
    pub requested_count: usize,
    pub mean_selected: f64,
    pub mean_accuracy: f64,
    pub accuracy_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineAccuracy {
    pub classifier: Classifier,
    pub mean_accuracy: f64,
    pub accuracy_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset_name: String,
    pub method: Method,
    pub trials: Vec<TrialResult>,
    pub baseline_trials: Vec<TrialResult>,
    pub curves: Vec<CurvePoint>,
    pub baseline: Vec<BaselineAccuracy>,
    /// Best curve point per classifier. It is chosen on test accuracy and is
    /// therefore optimistic.
    pub best: Vec<CurvePoint>,
    pub mean_accuracy: f64,
    pub accuracy_std: f64,
    pub mean_feature_count: f64,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-trial seeds derived from the experiment seed.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.next_u64()).collect()
}

/// Trains `classifier` on the restricted training matrix and returns test accuracy.
#[allow(clippy::too_many_arguments)]
pub fn classify_subset(
    classifier: Classifier,
    train_x: &DMatrix<f64>,
    train_labels: &[usize],
    test_x: &DMatrix<f64>,
    test_labels: &[usize],
    features: &[usize],
    class_count: usize,
    config: &ExperimentConfig,
) -> Result<f64> {
    let tr = restrict_features(train_x, features)?;
    let te = restrict_features(test_x, features)?;
    let predicted = match classifier {
        Classifier::Knn => knn_predict(&tr, train_labels, &te, config.knn_k.min(tr.ncols()))?,
        Classifier::Softmax => {
            let model = softmax_train(&tr, train_labels, class_count, &config.softmax)?;
            softmax_predict(&model, &te)?
        }
    };
    accuracy(&predicted, test_labels)
}

struct Split {
    train_x: DMatrix<f64>,
    train_labels: Vec<usize>,
    test_x: DMatrix<f64>,
    test_labels: Vec<usize>,
    train: Dataset,
}

fn prepare_split(dataset: &Dataset, config: &ExperimentConfig, seed: u64) -> Result<Split> {
    let (train_idx, test_idx) = stratified_split_indices(dataset, config.train_fraction, seed)?;
    let train = dataset.subset(&train_idx)?;
    let test = dataset.subset(&test_idx)?;
    let (train_x, test_x) = if config.standardize {
        let s = Standardizer::fit(train.features());
        (s.apply(train.features()), s.apply(test.features()))
    } else {
        (train.features().clone(), test.features().clone())
    };
    let train_ds = Dataset::new(
        train_x.clone(),
        train.labels().to_vec(),
        dataset.class_count(),
    )?;
    Ok(Split {
        train_labels: train.labels().to_vec(),
        test_labels: test.labels().to_vec(),
        train_x,
        test_x,
        train: train_ds,
    })
}

fn run_trial(
    dataset: &Dataset,
    config: &ExperimentConfig,
    trial: usize,
    seed: u64,
) -> Result<(Vec<TrialResult>, Vec<TrialResult>)> {
    let split = prepare_split(dataset, config, seed)?;
    let class_count = dataset.class_count();
    let all: Vec<usize> = (0..dataset.feature_count()).collect();
    let eval = |classifier, features: &[usize]| {
        classify_subset(
            classifier,
            &split.train_x,
            &split.train_labels,
            &split.test_x,
            &split.test_labels,
            features,
            class_count,
            config,
        )
    };

    let mut baseline = Vec::new();
    for &classifier in &config.classifiers {
        baseline.push(TrialResult {
            trial,
            method: "baseline".into(),
            lambda: None,
            requested_count: all.len(),
            selected_features: all.clone(),
            accuracy: eval(classifier, &all)?,
            train_seconds: 0.0,
            classifier,
        });
    }

    let centered = center(&split.train)?;
    let resolved = resolve_config(&config.solver, &centered)?;
    let mut records = Vec::new();
    match config.method {
        Method::Hiht | Method::Ahiht => {
            let algorithm = if config.method == Method::Hiht {
                Algorithm::Hiht
            } else {
                Algorithm::Ahiht
            };
            let start = Instant::now();
            let path = solve(algorithm, &centered, &resolved)?;
            let seconds = start.elapsed().as_secs_f64();
            for &count in &config.feature_counts {
                let features = select_features(&path, count)?;
                let lambda = select_by_count(&path, count)?.lambda;
                for &classifier in &config.classifiers {
                    records.push(TrialResult {
                        trial,
                        method: config.method.name().into(),
                        lambda: Some(lambda),
                        requested_count: count,
                        accuracy: eval(classifier, &features)?,
                        selected_features: features.clone(),
                        train_seconds: seconds,
                        classifier,
                    });
                }
            }
        }
        Method::L21 => {
            let lambda_max = l21_lambda_max(&centered);
            for &scale in &config.lambda_grid {
                let lambda = scale * lambda_max;
                let start = Instant::now();
                let sol = l21_solve(&centered, lambda, &resolved)?;
                let seconds = start.elapsed().as_secs_f64();
                let norms = row_norms(&sol.weights);
                for &count in &config.feature_counts {
                    let features = top_k_by_norm(&norms, count);
                    for &classifier in &config.classifiers {
                        records.push(TrialResult {
                            trial,
                            method: config.method.name().into(),
                            lambda: Some(lambda),
                            requested_count: count,
                            accuracy: eval(classifier, &features)?,
                            selected_features: features.clone(),
                            train_seconds: seconds,
                            classifier,
                        });
                    }
                }
            }
        }
    }
    Ok((records, baseline))
}

/// Repeated stratified-split evaluation.
///
/// For every trial: split, solve on the training part, select features for
/// each requested count, train every classifier on the restricted training
/// data and record its test accuracy. An all-features baseline is recorded
/// alongside.
pub fn run_experiment(
    dataset: &Dataset,
    dataset_name: &str,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if config.feature_counts.is_empty() {
        return Err(Error::Parameter("feature-count grid is empty".into()));
    }
    if config.method == Method::L21 && config.lambda_grid.is_empty() {
        return Err(Error::Parameter("lambda grid is empty".into()));
    }
    if config.classifiers.is_empty() {
        return Err(Error::Parameter("no classifier requested".into()));
    }
    if config.trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    let seeds = trial_seeds(config.seed, config.trials);
    let mut trials = Vec::new();
    let mut baseline_trials = Vec::new();
    for (t, &seed) in seeds.iter().enumerate() {
        let (records, baseline) =
            run_trial(dataset, config, t, seed).map_err(|e| Error::Trial {
                trial: t,
                source: Box::new(e),
            })?;
        trials.extend(records);
        baseline_trials.extend(baseline);
    }
    Ok(aggregate(
        dataset_name,
        config,
        seeds,
        trials,
        baseline_trials,
    ))
}

/// Builds the report's summary fields from raw trial records.
pub fn aggregate(
    dataset_name: &str,
    config: &ExperimentConfig,
    seeds: Vec<u64>,
    trials: Vec<TrialResult>,
    baseline_trials: Vec<TrialResult>,
) -> ExperimentReport {
    let lambda_scales: Vec<f64> = config.lambda_grid.clone();
    let trials_per_lambda = config.feature_counts.len() * config.classifiers.len();
    // key: classifier, λ-grid position (ℓ2,1 only), requested count
    let mut groups: BTreeMap<(Classifier, Option<usize>, usize), Vec<&TrialResult>> =
        BTreeMap::new();
    for (i, r) in trials.iter().enumerate() {
        let grid = if config.method == Method::L21 {
            Some((i / trials_per_lambda) % lambda_scales.len())
        } else {
            None
        };
        groups
            .entry((r.classifier, grid, r.requested_count))
            .or_default()
            .push(r);
    }
    let curves: Vec<CurvePoint> = groups
        .into_iter()
        .map(|((classifier, grid, count), rs)| {
            let accs: Vec<f64> = rs.iter().map(|r| r.accuracy).collect();
            let (mean, std) = mean_std(&accs);
            CurvePoint {
                classifier,
                lambda_scale: grid.map(|g| lambda_scales[g]),
                requested_count: count,
                mean_selected: rs
                    .iter()
                    .map(|r| r.selected_features.len() as f64)
                    .sum::<f64>()
                    / rs.len() as f64,
                mean_accuracy: mean,
                accuracy_std: std,
            }
        })
        .collect();
    let mut best: Vec<CurvePoint> = Vec::new();
    for c in &config.classifiers {
        if let Some(p) =
            curves
                .iter()
                .filter(|p| p.classifier == *c)
                .fold(None::<&CurvePoint>, |acc, p| match acc {
                    Some(a) if a.mean_accuracy >= p.mean_accuracy => Some(a),
                    _ => Some(p),
                })
        {
            best.push(p.clone());
        }
    }
    let baseline = config
        .classifiers
        .iter()
        .map(|&classifier| {
            let accs: Vec<f64> = baseline_trials
                .iter()
                .filter(|r| r.classifier == classifier)
                .map(|r| r.accuracy)
                .collect();
            let (mean, std) = mean_std(&accs);
            BaselineAccuracy {
                classifier,
                mean_accuracy: mean,
                accuracy_std: std,
            }
        })
        .collect();
    let accs: Vec<f64> = trials.iter().map(|r| r.accuracy).collect();
    let (mean_accuracy, accuracy_std) = mean_std(&accs);
    let mean_feature_count = if trials.is_empty() {
        0.0
    } else {
        trials
            .iter()
            .map(|r| r.selected_features.len() as f64)
            .sum::<f64>()
            / trials.len() as f64
    };
    ExperimentReport {
        dataset_name: dataset_name.to_string(),
        method: config.method,
        trials,
        baseline_trials,
        curves,
        baseline,
        best,
        mean_accuracy,
        accuracy_std,
        mean_feature_count,
        config: config.clone(),
        seeds,
    }
}
