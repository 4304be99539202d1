//! Global optimum of the row-count penalized problem by support enumeration.

use nalgebra::DMatrix;

use crate::data::CenteredData;
use crate::error::{Error, Result};
use crate::objective::{objective_value, WeightMatrix};

pub const DEFAULT_ORACLE_MAX_DIM: usize = 12;
/// Ridge added to the restricted normal equations.
pub const ORACLE_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub weights: WeightMatrix,
    pub objective: f64,
    pub support: Vec<usize>,
}

/// Least squares restricted to the rows in `support`; other rows are zero.
pub fn restricted_least_squares(data: &CenteredData, support: &[usize]) -> Result<WeightMatrix> {
    let d = data.feature_count();
    let c = data.class_count();
    let mut full = DMatrix::zeros(d, c);
    if support.is_empty() {
        return WeightMatrix::new(full);
    }
    let xs = data.x.select_rows(support);
    let mut gram = &xs * xs.transpose();
    for i in 0..support.len() {
        gram[(i, i)] += ORACLE_RIDGE;
    }
    let rhs = &xs * data.y.transpose();
    let solved = gram
        .cholesky()
        .ok_or_else(|| {
            Error::DegenerateDataset("restricted Gram matrix is not positive definite".into())
        })?
        .solve(&rhs);
    for (r, &i) in support.iter().enumerate() {
        full.row_mut(i).copy_from(&solved.row(r));
    }
    WeightMatrix::new(full)
}

/// Enumerates all `2^d` supports. Refuses when `d > max_dim`. Among supports
/// with equal objective the first in enumeration order (by bit mask) wins.
pub fn brute_force_oracle(
    data: &CenteredData,
    lambda: f64,
    max_dim: usize,
) -> Result<OracleSolution> {
    let d = data.feature_count();
    if d > max_dim {
        return Err(Error::OracleTooLarge { dim: d, max_dim });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be a finite nonnegative number, got {lambda}"
        )));
    }
    let mut best: Option<OracleSolution> = None;
    for mask in 0u64..(1u64 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let weights = restricted_least_squares(data, &support)?;
        let objective = objective_value(&weights, lambda, data)?;
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(OracleSolution {
                support: weights.support(),
                weights,
                objective,
            });
        }
    }
    Ok(best.expect("at least the empty support is enumerated"))
}
