//! Gradient step and row-wise hard thresholding, the proximal map of the
//! row-count penalty.

use nalgebra::DMatrix;

use crate::data::CenteredData;
use crate::error::{shape_error, Error, Result};
use crate::objective::{gradient, WeightMatrix};

fn check_step(lipschitz: f64) -> Result<()> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::Parameter(format!(
            "L must be finite and positive, got {lipschitz}"
        )));
    }
    Ok(())
}

/// `W − grad / L`.
pub fn gradient_step(
    w: &WeightMatrix,
    grad: &DMatrix<f64>,
    lipschitz: f64,
) -> Result<DMatrix<f64>> {
    check_step(lipschitz)?;
    if w.shape() != grad.shape() {
        return Err(shape_error("gradient step", w.shape(), grad.shape()));
    }
    let step = 1.0 / lipschitz;
    Ok(w.values() - grad * step)
}

/// Keeps row `i` of `g` unchanged when `‖gᵢ‖² > 2λ/L` and writes an exact zero
/// row otherwise. Ties go to zero.
pub fn row_hard_threshold(g: &DMatrix<f64>, lambda: f64, lipschitz: f64) -> Result<WeightMatrix> {
    check_step(lipschitz)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be a finite nonnegative number, got {lambda}"
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("hard threshold input"));
    }
    let cutoff = 2.0 * lambda / lipschitz;
    let mut out = g.clone();
    for mut row in out.row_iter_mut() {
        if row.norm_squared() <= cutoff {
            row.fill(0.0);
        }
    }
    Ok(WeightMatrix::from_trusted(out))
}

/// One IHT update: hard threshold of a gradient step.
pub fn iht_update(
    w: &WeightMatrix,
    lambda: f64,
    lipschitz: f64,
    data: &CenteredData,
) -> Result<WeightMatrix> {
    let grad = gradient(w, data)?;
    row_hard_threshold(&gradient_step(w, &grad, lipschitz)?, lambda, lipschitz)
}
