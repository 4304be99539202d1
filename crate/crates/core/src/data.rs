//! Datasets, label encoding, centering and stratified splitting.
//!
//! Matrices follow the feature-major convention used throughout the crate:
//! a design matrix is `d x N` (one row per feature, one column per sample)
//! and a label matrix is `C x N`. Class labels are zero-based indices.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A labelled, feature-major dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Vec<usize>,
    class_count: usize,
    feature_names: Option<Vec<String>>,
    class_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from a `d x N` feature matrix and `N` zero-based labels.
    ///
    /// Every class in `0..class_count` must occur at least once, and the
    /// dataset must have at least two samples, one feature and two classes.
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let (d, n) = features.shape();
        if n < 2 {
            return Err(Error::DegenerateDataset(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if d < 1 {
            return Err(Error::DegenerateDataset("need at least 1 feature".into()));
        }
        if class_count < 2 {
            return Err(Error::DegenerateDataset(format!(
                "need at least 2 classes, got {class_count}"
            )));
        }
        if labels.len() != n {
            return Err(Error::Shape {
                context: "dataset labels",
                left: format!("{n} samples"),
                right: format!("{} labels", labels.len()),
            });
        }
        let mut seen = vec![false; class_count];
        for (index, &label) in labels.iter().enumerate() {
            if label >= class_count {
                return Err(Error::InvalidLabel {
                    index,
                    label,
                    class_count,
                });
            }
            seen[label] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::DegenerateDataset(format!(
                "class {missing} has no samples"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            feature_names: None,
            class_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.feature_count() {
            return Err(Error::Shape {
                context: "feature names",
                left: format!("{} features", self.feature_count()),
                right: format!("{} names", names.len()),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.class_count {
            return Err(Error::Shape {
                context: "class names",
                left: format!("{} classes", self.class_count),
                right: format!("{} names", names.len()),
            });
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_count(&self) -> usize {
        self.features.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.features.ncols()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Original label tokens, indexed by class, when the dataset came from a file.
    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Samples at `indices`, in the given order. Class count and names are kept.
    ///
    /// The subset must still contain every class.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = self.sample_count();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Parameter(format!(
                "sample index {bad} out of range for {n} samples"
            )));
        }
        let features = self.features.select_columns(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut out = Self::new(features, labels, self.class_count)?;
        out.feature_names = self.feature_names.clone();
        out.class_names = self.class_names.clone();
        Ok(out)
    }

    pub fn label_matrix(&self) -> LabelMatrix {
        // labels are validated at construction
        one_hot_encode(&self.labels, self.class_count).expect("labels validated")
    }
}

/// Binary `C x N` class-membership matrix; every column holds a single one.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix(DMatrix<f64>);

impl LabelMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

pub fn one_hot_encode(labels: &[usize], class_count: usize) -> Result<LabelMatrix> {
    if labels.is_empty() {
        return Err(Error::DegenerateDataset("no labels to encode".into()));
    }
    let mut y = DMatrix::zeros(class_count, labels.len());
    for (index, &label) in labels.iter().enumerate() {
        if label >= class_count {
            return Err(Error::InvalidLabel {
                index,
                label,
                class_count,
            });
        }
        y[(label, index)] = 1.0;
    }
    Ok(LabelMatrix(y))
}

/// Column-centered design and label matrices plus the row means that were removed.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredData {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub x_mean: DVector<f64>,
    pub y_mean: DVector<f64>,
}

impl CenteredData {
    /// Wraps matrices that the caller treats as already centered.
    ///
    /// No centering is applied and the stored means are zero. Useful for
    /// hand-built problem instances.
    pub fn from_centered(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(crate::error::shape_error(
                "centered data",
                x.shape(),
                y.shape(),
            ));
        }
        Ok(Self {
            x_mean: DVector::zeros(x.nrows()),
            y_mean: DVector::zeros(y.nrows()),
            x,
            y,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.x.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.y.nrows()
    }
}

/// Subtracts each row's mean. Equivalent to right-multiplying by `I - 11ᵀ/N`.
pub fn center_rows(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = m.ncols() as f64;
    let mean = DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum() / n));
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row.add_scalar_mut(-mean[i]);
    }
    (out, mean)
}

pub fn center(dataset: &Dataset) -> Result<CenteredData> {
    if dataset.sample_count() < 2 {
        return Err(Error::DegenerateDataset(
            "centering needs at least 2 samples".into(),
        ));
    }
    let (x, x_mean) = center_rows(dataset.features());
    let (y, y_mean) = center_rows(dataset.label_matrix().values());
    Ok(CenteredData {
        x,
        y,
        x_mean,
        y_mean,
    })
}

/// Number of samples of a class of size `class_size` that go to the training side.
///
/// `ceil(fraction * class_size)`, clamped to `[1, class_size - 1]` so both sides
/// see every class.
pub fn train_quota(class_size: usize, fraction: f64) -> usize {
    // the small offset keeps exact products like (2/3)*3 from rounding up
    let raw = (fraction * class_size as f64 - 1e-9).ceil().max(1.0) as usize;
    raw.min(class_size.saturating_sub(1)).max(1)
}

/// Per-class random split. Returns sorted `(train, test)` sample indices.
pub fn stratified_split_indices(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class = vec![Vec::new(); dataset.class_count()];
    for (i, &label) in dataset.labels().iter().enumerate() {
        by_class[label].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} has {} sample(s); at least 2 are required",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let quota = train_quota(members.len(), train_fraction);
        train.extend_from_slice(&members[..quota]);
        test.extend_from_slice(&members[quota..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_split_indices(dataset, train_fraction, seed)?;
    Ok((dataset.subset(&train)?, dataset.subset(&test)?))
}

/// Per-feature z-scoring with statistics fitted on one matrix and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: DVector<f64>,
    scale: DVector<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.ncols().max(1) as f64;
        let mean = DVector::from_iterator(x.nrows(), x.row_iter().map(|r| r.sum() / n));
        let scale = DVector::from_iterator(
            x.nrows(),
            x.row_iter().enumerate().map(|(i, r)| {
                let var = r.iter().map(|v| (v - mean[i]).powi(2)).sum::<f64>() / n;
                // constant features are only centered
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            }),
        );
        Self { mean, scale }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row.add_scalar_mut(-self.mean[i]);
            row /= self.scale[i];
        }
        out
    }
}
