//! Least-squares loss, its gradient, the row-count penalized objective and
//! related quantities on centered data.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{CenteredData, Dataset};
use crate::error::{shape_error, Error, Result};

/// `d x C` weight matrix. A feature is selected when its row is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight matrix"));
        }
        Ok(Self(values))
    }

    pub fn zeros(features: usize, classes: usize) -> Self {
        Self(DMatrix::zeros(features, classes))
    }

    pub(crate) fn from_trusted(values: DMatrix<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    /// Indices of rows holding at least one nonzero entry, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .row_iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of nonzero rows, the row-sparsity count `‖W‖_{2,0}`.
    pub fn support_size(&self) -> usize {
        self.0
            .row_iter()
            .filter(|r| r.iter().any(|&v| v != 0.0))
            .count()
    }

    pub fn zero_row_count(&self) -> usize {
        self.0.nrows() - self.support_size()
    }

    /// Squared Frobenius distance to another weight matrix of the same shape.
    pub fn distance_sq(&self, other: &WeightMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

fn check_shape(w: &WeightMatrix, data: &CenteredData) -> Result<()> {
    let expected = (data.feature_count(), data.class_count());
    if w.shape() != expected {
        return Err(shape_error("weights vs data", w.shape(), expected));
    }
    Ok(())
}

/// `WᵀX̃ − Ỹ`, shape `C x N`.
pub(crate) fn residual(w: &WeightMatrix, data: &CenteredData) -> DMatrix<f64> {
    w.values().tr_mul(&data.x) - &data.y
}

pub fn loss(w: &WeightMatrix, data: &CenteredData) -> Result<f64> {
    check_shape(w, data)?;
    Ok(0.5 * residual(w, data).norm_squared())
}

/// Gradient of the loss, `X̃X̃ᵀW − X̃Ỹᵀ`, evaluated as `X̃(WᵀX̃ − Ỹ)ᵀ` so the
/// `d x d` Gram matrix is never formed.
pub fn gradient(w: &WeightMatrix, data: &CenteredData) -> Result<DMatrix<f64>> {
    check_shape(w, data)?;
    Ok(&data.x * residual(w, data).transpose())
}

/// Loss and gradient from a single residual evaluation.
pub(crate) fn loss_and_gradient(w: &WeightMatrix, data: &CenteredData) -> (f64, DMatrix<f64>) {
    let r = residual(w, data);
    (0.5 * r.norm_squared(), &data.x * r.transpose())
}

/// `f(W) − f(W⁺)` evaluated from the step `Δ = W⁺ − W` as
/// `−⟨∇f(W), Δ⟩ − ½‖ΔᵀX̃‖²_F`.
///
/// Exact for the quadratic loss and free of the cancellation that subtracting
/// two nearly equal loss values suffers once steps become small.
pub(crate) fn loss_decrease(
    w: &WeightMatrix,
    next: &WeightMatrix,
    grad: &DMatrix<f64>,
    data: &CenteredData,
) -> f64 {
    let delta = next.values() - w.values();
    let projected = delta.tr_mul(&data.x);
    -grad.dot(&delta) - 0.5 * projected.norm_squared()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be a finite nonnegative number, got {lambda}"
        )));
    }
    Ok(())
}

/// `loss(W) + λ · (number of nonzero rows of W)`.
pub fn objective_value(w: &WeightMatrix, lambda: f64, data: &CenteredData) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(loss(w, data)? + lambda * w.support_size() as f64)
}

/// Optimal intercept for fixed weights on uncentered data: row means of `Y − WᵀX`.
pub fn recover_bias(w: &WeightMatrix, dataset: &Dataset) -> Result<DVector<f64>> {
    let expected = (dataset.feature_count(), dataset.class_count());
    if w.shape() != expected {
        return Err(shape_error("weights vs dataset", w.shape(), expected));
    }
    let y = dataset.label_matrix().into_inner();
    let r = y - w.values().tr_mul(dataset.features());
    let n = r.ncols() as f64;
    Ok(DVector::from_iterator(
        r.nrows(),
        r.row_iter().map(|row| row.sum() / n),
    ))
}

/// Objective on uncentered data with an explicit intercept:
/// `½‖WᵀX + b1ᵀ − Y‖²_F + λ‖W‖_{2,0}`.
pub fn uncentered_objective(
    w: &WeightMatrix,
    bias: &DVector<f64>,
    lambda: f64,
    dataset: &Dataset,
) -> Result<f64> {
    check_lambda(lambda)?;
    let expected = (dataset.feature_count(), dataset.class_count());
    if w.shape() != expected {
        return Err(shape_error("weights vs dataset", w.shape(), expected));
    }
    if bias.len() != dataset.class_count() {
        return Err(shape_error(
            "bias vs dataset",
            (bias.len(), 1),
            (dataset.class_count(), 1),
        ));
    }
    let mut r = w.values().tr_mul(dataset.features()) - dataset.label_matrix().into_inner();
    for mut col in r.column_iter_mut() {
        col += bias;
    }
    Ok(0.5 * r.norm_squared() + lambda * w.support_size() as f64)
}

pub const SPECTRAL_SAFETY: f64 = 1.01;
pub const SPECTRAL_FLOOR: f64 = 1e-12;
const POWER_SEED: u64 = 0x5eed_1a2b;

/// Upper estimate of the largest eigenvalue of `X̃X̃ᵀ` (the Lipschitz constant
/// of the loss gradient) by power iteration, inflated by [`SPECTRAL_SAFETY`].
///
/// Iterates on whichever of `X̃X̃ᵀ` / `X̃ᵀX̃` is smaller; both share the
/// nonzero spectrum.
pub fn spectral_bound(data: &CenteredData, tolerance: f64, max_iterations: usize) -> f64 {
    spectral_bound_seeded(data, tolerance, max_iterations, POWER_SEED)
}

/// [`spectral_bound`] with an explicit seed for the random start vector.
pub fn spectral_bound_seeded(
    data: &CenteredData,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
) -> f64 {
    let x = &data.x;
    let (d, n) = x.shape();
    let dim = d.min(n);
    if dim == 0 {
        return SPECTRAL_FLOOR;
    }
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        if d <= n {
            x * x.tr_mul(v)
        } else {
            x.tr_mul(&(x * v))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    v.normalize_mut();
    let mut estimate = 0.0;
    for _ in 0..max_iterations.max(1) {
        let av = apply(&v);
        let rayleigh = v.dot(&av);
        let norm = av.norm();
        if norm == 0.0 || !norm.is_finite() {
            estimate = rayleigh.max(0.0);
            break;
        }
        let converged = (rayleigh - estimate).abs() <= tolerance * rayleigh.abs();
        estimate = rayleigh;
        v = av / norm;
        if converged {
            break;
        }
    }
    (estimate * SPECTRAL_SAFETY).max(SPECTRAL_FLOOR)
}

/// ℓ2 norm of every row.
pub fn row_norms(w: &WeightMatrix) -> DVector<f64> {
    DVector::from_iterator(w.0.nrows(), w.0.row_iter().map(|r| r.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::center;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    fn random_data(seed: u64, d: usize, n: usize, c: usize) -> CenteredData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CenteredData::from_centered(random_matrix(&mut rng, d, n), random_matrix(&mut rng, c, n))
            .unwrap()
    }

    #[test]
    fn loss_at_zero_is_half_label_energy() {
        let data = random_data(1, 3, 5, 2);
        let w = WeightMatrix::zeros(3, 2);
        assert!((loss(&w, &data).unwrap() - 0.5 * data.y.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn loss_zero_on_exact_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_matrix(&mut rng, 2, 3);
        let data = CenteredData::from_centered(DMatrix::identity(2, 2), w.transpose()).unwrap();
        assert_eq!(loss(&WeightMatrix::new(w).unwrap(), &data).unwrap(), 0.0);
    }

    #[test]
    fn loss_matches_triple_loop() {
        let data = random_data(3, 3, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_matrix(&mut rng, 3, 2);
        let mut total = 0.0;
        for c in 0..2 {
            for j in 0..4 {
                let mut s = 0.0;
                for i in 0..3 {
                    s += w[(i, c)] * data.x[(i, j)];
                }
                total += (s - data.y[(c, j)]).powi(2);
            }
        }
        let got = loss(&WeightMatrix::new(w).unwrap(), &data).unwrap();
        assert!((got - 0.5 * total).abs() < 1e-12 * total.max(1.0));
    }

    #[test]
    fn shape_errors_are_reported() {
        let data = random_data(5, 3, 4, 2);
        let w = WeightMatrix::zeros(2, 2);
        assert!(matches!(loss(&w, &data), Err(Error::Shape { .. })));
        assert!(matches!(gradient(&w, &data), Err(Error::Shape { .. })));
    }

    #[test]
    fn gradient_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_matrix(&mut rng, 4, 2);
        let data =
            CenteredData::from_centered(DMatrix::identity(4, 4), DMatrix::zeros(2, 4)).unwrap();
        let g = gradient(&WeightMatrix::new(w.clone()).unwrap(), &data).unwrap();
        assert!((g - w).amax() < 1e-14);

        let data = random_data(7, 4, 6, 3);
        let g0 = gradient(&WeightMatrix::zeros(4, 3), &data).unwrap();
        let expected = -(&data.x * data.y.transpose());
        assert!((g0 - expected).amax() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..5 {
            let data = random_data(100 + seed, 5, 8, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let w = random_matrix(&mut rng, 5, 3);
            let g = gradient(&WeightMatrix::new(w.clone()).unwrap(), &data).unwrap();
            let h = 1e-6 * w.amax().max(1.0);
            let mut max_rel: f64 = 0.0;
            for i in 0..5 {
                for c in 0..3 {
                    let mut plus = w.clone();
                    plus[(i, c)] += h;
                    let mut minus = w.clone();
                    minus[(i, c)] -= h;
                    let fd = (loss(&WeightMatrix::new(plus).unwrap(), &data).unwrap()
                        - loss(&WeightMatrix::new(minus).unwrap(), &data).unwrap())
                        / (2.0 * h);
                    let rel = (fd - g[(i, c)]).abs() / g.amax().max(1e-12);
                    max_rel = max_rel.max(rel);
                }
            }
            assert!(max_rel < 1e-5, "seed {seed}: {max_rel}");
        }
    }

    #[test]
    fn objective_counts_nonzero_rows() {
        let data = random_data(8, 4, 6, 2);
        let zero = WeightMatrix::zeros(4, 2);
        assert_eq!(
            objective_value(&zero, 3.0, &data).unwrap(),
            loss(&zero, &data).unwrap()
        );
        let mut w = DMatrix::zeros(4, 2);
        w[(1, 0)] = 0.3;
        w[(3, 1)] = -0.2;
        let w = WeightMatrix::new(w).unwrap();
        assert_eq!(w.support(), vec![1, 3]);
        let expected = loss(&w, &data).unwrap() + 1.0;
        assert!((objective_value(&w, 0.5, &data).unwrap() - expected).abs() < 1e-12);
        assert!(objective_value(&w, -0.1, &data).is_err());
    }

    #[test]
    fn objective_gap_between_lambdas_is_linear_in_support() {
        let data = random_data(9, 5, 7, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut w = random_matrix(&mut rng, 5, 3);
        w.row_mut(2).fill(0.0);
        let w = WeightMatrix::new(w).unwrap();
        let hi = objective_value(&w, 0.8, &data).unwrap();
        let lo = objective_value(&w, 0.3, &data).unwrap();
        assert!(lo <= hi);
        assert!((hi - lo - 0.5 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn bias_special_cases() {
        let ds = Dataset::new(DMatrix::from_row_slice(1, 2, &[0.5, -1.0]), vec![0, 1], 2).unwrap();
        let b = recover_bias(&WeightMatrix::zeros(1, 2), &ds).unwrap();
        assert_eq!(b.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn bias_recovers_exact_fit() {
        // labels are a linear function of features plus an intercept
        let x = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let ds = Dataset::new(x, vec![0, 1, 2, 0], 3).unwrap();
        // x0 -> class 0 , x1 -> class 1, neither -> class 2
        let w = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, -1.0]);
        let w = WeightMatrix::new(w).unwrap();
        let b = recover_bias(&w, &ds).unwrap();
        assert!((b - DVector::from_vec(vec![0.0, 0.0, 1.0])).amax() < 1e-12);
        assert!(
            uncentered_objective(&w, &recover_bias(&w, &ds).unwrap(), 0.0, &ds).unwrap() < 1e-24
        );
    }

    #[test]
    fn recovered_bias_is_stationary_and_matches_centered_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random_matrix(&mut rng, 4, 9);
        let labels: Vec<usize> = (0..9).map(|j| j % 3).collect();
        let ds = Dataset::new(x, labels, 3).unwrap();
        let mut w = random_matrix(&mut rng, 4, 3);
        w.row_mut(0).fill(0.0);
        let w = WeightMatrix::new(w).unwrap();
        let b = recover_bias(&w, &ds).unwrap();
        let h = 1e-6;
        let mut grad_norm = 0.0;
        for c in 0..3 {
            let mut p = b.clone();
            p[c] += h;
            let mut m = b.clone();
            m[c] -= h;
            let fd = (uncentered_objective(&w, &p, 0.0, &ds).unwrap()
                - uncentered_objective(&w, &m, 0.0, &ds).unwrap())
                / (2.0 * h);
            grad_norm += fd * fd;
        }
        let scale = uncentered_objective(&w, &b, 0.0, &ds).unwrap().max(1.0);
        assert!(grad_norm.sqrt() < 1e-6 * scale);

        let centered = center(&ds).unwrap();
        let lhs = uncentered_objective(&w, &b, 0.7, &ds).unwrap();
        let rhs = objective_value(&w, 0.7, &centered).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn spectral_bound_diagonal_and_zero() {
        let data = CenteredData::from_centered(
            DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0])),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        let b = spectral_bound(&data, 1e-6, 500);
        assert!((9.0..=9.09 + 1e-9).contains(&b), "{b}");

        let data = CenteredData::from_centered(DMatrix::zeros(3, 4), DMatrix::zeros(2, 4)).unwrap();
        assert_eq!(spectral_bound(&data, 1e-6, 500), SPECTRAL_FLOOR);
    }

    #[test]
    fn spectral_bound_brackets_dense_eigenvalue() {
        for seed in 0..5 {
            for (d, n) in [(6, 10), (10, 6)] {
                let data = random_data(300 + seed, d, n, 2);
                let gram = &data.x * data.x.transpose();
                let top = gram.symmetric_eigen().eigenvalues.max();
                let b = spectral_bound(&data, 1e-6, 500);
                assert!(b >= top && b <= 1.02 * top, "{b} vs {top}");
            }
        }
    }

    #[test]
    fn row_norms_cases() {
        let w = WeightMatrix::new(DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0])).unwrap();
        assert_eq!(row_norms(&w).as_slice(), &[5.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = random_matrix(&mut rng, 6, 4);
        let norms = row_norms(&WeightMatrix::new(m.clone()).unwrap());
        for i in 0..6 {
            let mut s = 0.0;
            for c in 0..4 {
                s += m[(i, c)] * m[(i, c)];
            }
            assert!((norms[i] - s.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_reject_nan() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(WeightMatrix::new(m).is_err());
    }
}
