//! Convex comparison point: proximal gradient on `½‖WᵀX̃ − Ỹ‖²_F + λ‖W‖_{2,1}`.

use nalgebra::DMatrix;

use crate::data::CenteredData;
use crate::error::{Error, Result};
use crate::objective::{loss_and_gradient, loss_decrease, WeightMatrix};
use crate::solver::ResolvedConfig;
use crate::thresholding::gradient_step;

/// Group soft threshold, the proximal map of `τ‖·‖_{2,1}`: every row is scaled
/// by `max(0, 1 − τ/‖gᵢ‖)`.
pub fn row_soft_threshold(g: &DMatrix<f64>, tau: f64) -> Result<WeightMatrix> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!(
            "tau must be a finite nonnegative number, got {tau}"
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("soft threshold input"));
    }
    let mut out = g.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm <= tau {
            row.fill(0.0);
        } else {
            row *= 1.0 - tau / norm;
        }
    }
    WeightMatrix::new(out)
}

pub fn l21_norm(w: &WeightMatrix) -> f64 {
    w.values().row_iter().map(|r| r.norm()).sum()
}

/// `‖W‖_{2,1} − ‖W⁺‖_{2,1}` with each row difference formed as
/// `⟨a − b, a + b⟩ / (‖a‖ + ‖b‖)`.
fn l21_norm_decrease(w: &WeightMatrix, next: &WeightMatrix) -> f64 {
    w.values()
        .row_iter()
        .zip(next.values().row_iter())
        .map(|(a, b)| {
            let denom = a.norm() + b.norm();
            if denom == 0.0 {
                0.0
            } else {
                (a - b).dot(&(a + b)) / denom
            }
        })
        .sum()
}

/// `½‖WᵀX̃ − Ỹ‖²_F + λ‖W‖_{2,1}`.
pub fn l21_objective(w: &WeightMatrix, lambda: f64, data: &CenteredData) -> Result<f64> {
    Ok(crate::objective::loss(w, data)? + lambda * l21_norm(w))
}

/// Smallest `λ` for which `W = 0` is optimal: the largest row norm of `∇f(0)`.
pub fn l21_lambda_max(data: &CenteredData) -> f64 {
    let g = &data.x * data.y.transpose();
    g.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct L21Solution {
    pub lambda: f64,
    pub weights: WeightMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub prox_evaluations: usize,
    pub final_l: f64,
    pub converged: bool,
    /// Objective at `W = 0` followed by its value after each accepted update.
    pub trace: Vec<f64>,
}

/// Proximal gradient from `W = 0` with the same backtracking rule and stopping
/// test as the hard-threshold solver (`L₀`, `γ`, `η`, `ε`, inner cap, `max_L`
/// are taken from `config`).
pub fn l21_solve(data: &CenteredData, lambda: f64, config: &ResolvedConfig) -> Result<L21Solution> {
    config.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be a finite nonnegative number, got {lambda}"
        )));
    }
    let mut w = WeightMatrix::zeros(data.feature_count(), data.class_count());
    let (mut loss, mut grad) = loss_and_gradient(&w, data);
    let mut objective = loss;
    if lambda >= l21_lambda_max(data) {
        // W = 0 is optimal; iterating would only chase rounding on the boundary row
        return Ok(L21Solution {
            lambda,
            weights: w,
            objective,
            iterations: 0,
            prox_evaluations: 0,
            final_l: config.l0,
            converged: true,
            trace: vec![objective],
        });
    }
    let mut l = config.l0;
    let mut trace = vec![objective];
    let mut evaluations = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_inner_iterations {
        let (next, next_loss, next_grad, change_sq) = loop {
            let candidate = row_soft_threshold(&gradient_step(&w, &grad, l)?, lambda / l)?;
            evaluations += 1;
            let change_sq = w.distance_sq(&candidate);
            let decrease = loss_decrease(&w, &candidate, &grad, data)
                + lambda * l21_norm_decrease(&w, &candidate);
            if decrease >= 0.5 * config.eta * change_sq {
                let (cand_loss, cand_grad) = loss_and_gradient(&candidate, data);
                break (candidate, cand_loss, cand_grad, change_sq);
            }
            l *= config.gamma;
            if l > config.max_l {
                return Err(Error::Divergence {
                    lambda,
                    lipschitz: l,
                    objective,
                });
            }
        };
        iterations += 1;
        w = next;
        loss = next_loss;
        grad = next_grad;
        objective = loss + lambda * l21_norm(&w);
        trace.push(objective);
        if change_sq <= config.epsilon {
            converged = true;
            break;
        }
    }
    Ok(L21Solution {
        lambda,
        weights: w,
        objective,
        iterations,
        prox_evaluations: evaluations,
        final_l: l,
        converged,
        trace,
    })
}

/// `l21_solve` at the `λ` whose least-squares loss is closest to
/// `target_loss`, found by bisection on `log λ` over `[λmax·1e-8, λmax]`.
pub fn l21_matched_loss(
    data: &CenteredData,
    target_loss: f64,
    config: &ResolvedConfig,
    iterations: usize,
) -> Result<L21Solution> {
    let lambda_max = l21_lambda_max(data);
    if lambda_max == 0.0 {
        return l21_solve(data, 0.0, config);
    }
    // every λ ≥ λmax gives W = 0, the largest attainable loss
    let top = l21_solve(data, lambda_max, config)?;
    let top_loss = crate::objective::loss(&top.weights, data)?;
    if target_loss >= top_loss {
        return Ok(top);
    }
    let (mut lo, mut hi) = ((lambda_max * 1e-8).ln(), lambda_max.ln());
    let mut best: Option<(f64, L21Solution)> = Some((top_loss - target_loss, top));
    for _ in 0..iterations.max(1) {
        let mid = 0.5 * (lo + hi);
        let sol = l21_solve(data, mid.exp(), config)?;
        let sol_loss = crate::objective::loss(&sol.weights, data)?;
        // loss grows with λ
        if sol_loss < target_loss {
            lo = mid;
        } else {
            hi = mid;
        }
        let gap = (sol_loss - target_loss).abs();
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, sol));
        }
    }
    Ok(best.expect("seeded with the λmax solution").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::gradient;
    use crate::solver::{resolve_config, SolverConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_data(seed: u64, d: usize, n: usize, c: usize) -> CenteredData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DMatrix::from_fn(c, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (x, _) = crate::data::center_rows(&x);
        let (y, _) = crate::data::center_rows(&y);
        CenteredData::from_centered(x, y).unwrap()
    }

    fn tight(data: &CenteredData) -> ResolvedConfig {
        let mut cfg = resolve_config(&SolverConfig::default(), data).unwrap();
        cfg.epsilon = 1e-20;
        cfg.max_inner_iterations = 200_000;
        cfg
    }

    #[test]
    fn soft_threshold_cases() {
        let g = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.3, 0.4]);
        let out = row_soft_threshold(&g, 2.5).unwrap();
        assert_eq!(
            out.values().row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.5, 2.0]
        );
        assert_eq!(
            out.values().row(1).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 0.0]
        );
        assert!(row_soft_threshold(&g, -1.0).is_err());
        assert_eq!(
            row_soft_threshold(&DMatrix::zeros(1, 3), 0.0)
                .unwrap()
                .support_size(),
            0
        );
    }

    #[test]
    fn soft_threshold_minimizes_prox_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let g = DMatrix::from_fn(1, 2, |_, _| rng.random_range(-2.0..2.0));
            let tau = rng.random_range(0.0..1.5);
            let w = row_soft_threshold(&g, tau).unwrap();
            let f = |a: f64, b: f64| {
                0.5 * ((a - g[0]).powi(2) + (b - g[1]).powi(2)) + tau * (a * a + b * b).sqrt()
            };
            let best = f(w.values()[0], w.values()[1]);
            // dense grid search around the input
            let mut grid_min = f64::INFINITY;
            for i in -200..=200 {
                for j in -200..=200 {
                    grid_min = grid_min.min(f(i as f64 * 0.01, j as f64 * 0.01));
                }
            }
            assert!(best <= grid_min + 1e-12);
        }
    }

    #[test]
    fn zero_lambda_reaches_least_squares() {
        let data = random_data(2, 4, 20, 2);
        let sol = l21_solve(&data, 0.0, &tight(&data)).unwrap();
        // normal equations: X̃X̃ᵀ W = X̃Ỹᵀ
        let gram = &data.x * data.x.transpose();
        let rhs = &data.x * data.y.transpose();
        let direct = gram.cholesky().unwrap().solve(&rhs);
        let scale = rhs.norm();
        let residual = gradient(&sol.weights, &data).unwrap().norm();
        assert!(residual < 1e-4 * scale, "{residual}");
        assert!((sol.weights.values() - direct).amax() < 1e-4);
    }

    #[test]
    fn large_lambda_keeps_zero() {
        let data = random_data(3, 5, 15, 3);
        let cfg = tight(&data);
        let sol = l21_solve(&data, l21_lambda_max(&data) * (1.0 + 1e-9), &cfg).unwrap();
        assert_eq!(sol.weights.support_size(), 0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn solution_satisfies_subgradient_conditions() {
        for seed in 0..5 {
            let data = random_data(10 + seed, 6, 12, 3);
            let lambda = 0.3 * l21_lambda_max(&data);
            let sol = l21_solve(&data, lambda, &tight(&data)).unwrap();
            let g = gradient(&sol.weights, &data).unwrap();
            let w = sol.weights.values();
            for i in 0..6 {
                let norm = w.row(i).norm();
                if norm > 0.0 {
                    let r = g.row(i) + w.row(i) * (lambda / norm);
                    assert!(r.norm() < 1e-4, "row {i}: {}", r.norm());
                } else {
                    assert!(g.row(i).norm() <= lambda * (1.0 + 1e-4));
                }
            }
            for pair in sol.trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs());
            }
        }
    }

    #[test]
    fn matched_loss_hits_target() {
        let data = random_data(20, 6, 30, 2);
        let cfg = tight(&data);
        let reference = l21_solve(&data, 0.2 * l21_lambda_max(&data), &cfg).unwrap();
        let target = crate::objective::loss(&reference.weights, &data).unwrap();
        let matched = l21_matched_loss(&data, target, &cfg, 40).unwrap();
        let got = crate::objective::loss(&matched.weights, &data).unwrap();
        assert!((got - target).abs() < 1e-6 * target, "{got} vs {target}");
    }

    #[test]
    fn lambda_max_gives_zero_without_iterating() {
        for seed in 0..20 {
            let data = random_data(seed, 8, 25, 3);
            let cfg = tight(&data);
            let sol = l21_solve(&data, l21_lambda_max(&data), &cfg).unwrap();
            assert_eq!(sol.weights.zero_row_count(), 8);
            assert_eq!(sol.iterations, 0);
        }
    }

    #[test]
    fn matched_loss_at_zero_weights_is_all_zero() {
        let data = random_data(20, 6, 30, 3);
        let cfg = tight(&data);
        let target = crate::objective::loss(&WeightMatrix::zeros(6, 3), &data).unwrap();
        let matched = l21_matched_loss(&data, target, &cfg, 10).unwrap();
        assert_eq!(matched.weights.zero_row_count(), 6);
    }
}
