//! Homotopy iterative hard thresholding.
//!
//! Both solvers walk a geometric sequence `λ_k = λ₀ρᵏ`, warm-starting the
//! weights and the step constant `L` from the previous value of `λ`. Each
//! update is accepted only once it satisfies the sufficient-decrease test
//! `φ(W) − φ(W⁺) ≥ (η/2)‖W − W⁺‖²_F`, inflating `L` by `γ` until it does.
//!
//! [`hiht_solve`] iterates to convergence at every `λ`; [`ahiht_solve`]
//! performs exactly one accepted update per `λ`.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::CenteredData;
use crate::error::{Error, Result};
use crate::objective::{
    gradient, loss_decrease, objective_value, spectral_bound_seeded, WeightMatrix,
};
use crate::thresholding::{gradient_step, row_hard_threshold};

pub const DEFAULT_RHO: f64 = 0.7;
pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_ETA: f64 = 1e-4;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_PATH_STEPS: usize = 30;
pub const DEFAULT_MAX_INNER: usize = 1000;
/// Auto `L₀` is this fraction of the spectral bound; the line search raises it as needed.
pub const AUTO_L0_FRACTION: f64 = 0.1;
/// Auto divergence cap, as a multiple of `L₀`.
pub const AUTO_MAX_L_FACTOR: f64 = 1e12;
pub const POWER_TOLERANCE: f64 = 1e-6;
pub const POWER_MAX_ITERATIONS: usize = 500;

/// Solver hyperparameters. `None` marks a value to be derived from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda0: Option<f64>,
    pub l0: Option<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub path_steps: usize,
    pub max_inner_iterations: usize,
    pub max_l: Option<f64>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda0: None,
            l0: None,
            rho: DEFAULT_RHO,
            gamma: DEFAULT_GAMMA,
            eta: DEFAULT_ETA,
            epsilon: DEFAULT_EPSILON,
            path_steps: DEFAULT_PATH_STEPS,
            max_inner_iterations: DEFAULT_MAX_INNER,
            max_l: None,
            seed: 0,
        }
    }
}

/// A [`SolverConfig`] with every automatic field filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub lambda0: f64,
    pub l0: f64,
    pub rho: f64,
    pub gamma: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub path_steps: usize,
    pub max_inner_iterations: usize,
    pub max_l: f64,
    pub seed: u64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}

impl ResolvedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        positive("eta", self.eta)?;
        positive("epsilon", self.epsilon)?;
        positive("L0", self.l0)?;
        positive("max_L", self.max_l)?;
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::Config(format!(
                "lambda0 must be finite and nonnegative, got {}",
                self.lambda0
            )));
        }
        if self.path_steps == 0 {
            return Err(Error::Config("path_steps must be at least 1".into()));
        }
        if self.max_inner_iterations == 0 {
            return Err(Error::Config(
                "max_inner_iterations must be at least 1".into(),
            ));
        }
        if self.max_l < self.l0 {
            return Err(Error::Config(format!(
                "max_L ({}) is below L0 ({})",
                self.max_l, self.l0
            )));
        }
        Ok(())
    }
}

/// Fills automatic fields.
///
/// * `L₀ = 0.1 · spectral_bound(X̃)`
/// * `λ₀ = maxᵢ ‖∇f(0)ᵢ‖² / (2L₀)`, the smallest `λ` at which the first
///   update from `W = 0` keeps every row at zero.
/// * `max_L = 1e12 · L₀`
pub fn resolve_config(config: &SolverConfig, data: &CenteredData) -> Result<ResolvedConfig> {
    let l0 = match config.l0 {
        Some(l0) => l0,
        None => {
            AUTO_L0_FRACTION
                * spectral_bound_seeded(data, POWER_TOLERANCE, POWER_MAX_ITERATIONS, config.seed)
        }
    };
    positive("L0", l0)?;
    let lambda0 = match config.lambda0 {
        Some(l) => l,
        None => {
            let g0 = gradient(
                &WeightMatrix::zeros(data.feature_count(), data.class_count()),
                data,
            )?;
            let max_sq = g0
                .row_iter()
                .map(|r| r.norm_squared())
                .fold(0.0_f64, f64::max);
            // bump past rounding so the first step from zero keeps every row at zero
            let first = gradient_step(
                &WeightMatrix::zeros(data.feature_count(), data.class_count()),
                &g0,
                l0,
            )?;
            let step_max = first
                .row_iter()
                .map(|r| r.norm_squared())
                .fold(0.0_f64, f64::max);
            let mut lambda0 = max_sq / (2.0 * l0);
            while 2.0 * lambda0 / l0 < step_max {
                lambda0 = lambda0.next_up();
            }
            lambda0
        }
    };
    let resolved = ResolvedConfig {
        lambda0,
        l0,
        rho: config.rho,
        gamma: config.gamma,
        eta: config.eta,
        epsilon: config.epsilon,
        path_steps: config.path_steps,
        max_inner_iterations: config.max_inner_iterations,
        max_l: config.max_l.unwrap_or(AUTO_MAX_L_FACTOR * l0),
        seed: config.seed,
    };
    resolved.validate()?;
    Ok(resolved)
}

/// Result of one accepted, line-searched update.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchStep {
    pub weights: WeightMatrix,
    pub lipschitz: f64,
    pub objective: f64,
    /// `‖W − W⁺‖²_F`
    pub change_sq: f64,
    /// Number of IHT updates evaluated, rejected ones included.
    pub evaluations: usize,
}

pub(crate) fn line_search_from(
    w: &WeightMatrix,
    objective: f64,
    lambda: f64,
    lipschitz: f64,
    config: &ResolvedConfig,
    data: &CenteredData,
) -> Result<LineSearchStep> {
    let grad = gradient(w, data)?;
    let mut l = lipschitz;
    let mut evaluations = 0;
    loop {
        // same as iht_update(w, lambda, l, data) with the gradient reused across L
        let next = row_hard_threshold(&gradient_step(w, &grad, l)?, lambda, l)?;
        evaluations += 1;
        let change_sq = w.distance_sq(&next);
        let decrease = loss_decrease(w, &next, &grad, data)
            + lambda * (w.support_size() as f64 - next.support_size() as f64);
        if decrease >= 0.5 * config.eta * change_sq {
            let next_objective = objective_value(&next, lambda, data)?;
            return Ok(LineSearchStep {
                weights: next,
                lipschitz: l,
                objective: next_objective,
                change_sq,
                evaluations,
            });
        }
        l *= config.gamma;
        if l > config.max_l {
            return Err(Error::Divergence {
                lambda,
                lipschitz: l,
                objective,
            });
        }
    }
}

/// One IHT update with `L` inflated by `γ` until the sufficient-decrease test
/// `φ(W) − φ(W⁺) ≥ (η/2)‖W − W⁺‖²_F` passes. Returns the accepted weights and the `L` that produced them.
pub fn line_search_update(
    w: &WeightMatrix,
    lambda: f64,
    lipschitz: f64,
    config: &ResolvedConfig,
    data: &CenteredData,
) -> Result<LineSearchStep> {
    positive("L", lipschitz)?;
    let objective = objective_value(w, lambda, data)?;
    line_search_from(w, objective, lambda, lipschitz, config, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Hiht,
    Ahiht,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hiht => "hiht",
            Algorithm::Ahiht => "ahiht",
        }
    }
}

/// Solution at one value of `λ` along the homotopy.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    pub weights: WeightMatrix,
    pub bias: DVector<f64>,
    pub objective: f64,
    pub support: Vec<usize>,
    pub support_size: usize,
    pub inner_iterations: usize,
    pub iht_updates: usize,
    pub final_l: f64,
    /// The inner-iteration cap was hit before the convergence test passed.
    pub truncated: bool,
    /// `φ_λ` at the warm start followed by its value after each accepted update.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationPath {
    pub algorithm: Algorithm,
    pub config: ResolvedConfig,
    pub points: Vec<PathPoint>,
    pub total_iht_updates: usize,
    pub wall_time: f64,
}

impl RegularizationPath {
    /// The point with the largest support, ties broken toward smaller `λ`.
    pub fn densest(&self) -> Option<&PathPoint> {
        self.points
            .iter()
            .enumerate()
            .max_by_key(|(k, p)| (p.support_size, *k))
            .map(|(_, p)| p)
    }
}

/// `b = ȳ − Wᵀx̄`, the optimal intercept expressed through the stored means.
pub fn bias_from_means(w: &WeightMatrix, data: &CenteredData) -> DVector<f64> {
    &data.y_mean - w.values().tr_mul(&data.x_mean)
}

#[allow(clippy::too_many_arguments)]
fn make_point(
    lambda: f64,
    weights: WeightMatrix,
    objective: f64,
    inner_iterations: usize,
    iht_updates: usize,
    final_l: f64,
    truncated: bool,
    trace: Vec<f64>,
    data: &CenteredData,
) -> PathPoint {
    let support = weights.support();
    PathPoint {
        lambda,
        bias: bias_from_means(&weights, data),
        objective,
        support_size: support.len(),
        support,
        weights,
        inner_iterations,
        iht_updates,
        final_l,
        truncated,
        trace,
    }
}

fn run_path(
    algorithm: Algorithm,
    data: &CenteredData,
    config: &ResolvedConfig,
) -> Result<RegularizationPath> {
    config.validate()?;
    let start = Instant::now();
    let mut w = WeightMatrix::zeros(data.feature_count(), data.class_count());
    let mut l = config.l0;
    let mut lambda = config.lambda0;
    let mut points = Vec::with_capacity(config.path_steps);
    let mut total = 0;
    let inner_cap = match algorithm {
        Algorithm::Hiht => config.max_inner_iterations,
        Algorithm::Ahiht => 1,
    };
    for k in 0..config.path_steps {
        if k > 0 {
            lambda *= config.rho;
        }
        let mut objective = objective_value(&w, lambda, data)?;
        let mut trace = vec![objective];
        let mut inner = 0;
        let mut updates = 0;
        let mut converged = false;
        while inner < inner_cap {
            let step = line_search_from(&w, objective, lambda, l, config, data)?;
            inner += 1;
            updates += step.evaluations;
            w = step.weights;
            l = step.lipschitz;
            objective = step.objective;
            trace.push(objective);
            if step.change_sq <= config.epsilon {
                converged = true;
                break;
            }
        }
        total += updates;
        let truncated = algorithm == Algorithm::Hiht && !converged;
        points.push(make_point(
            lambda,
            w.clone(),
            objective,
            inner,
            updates,
            l,
            truncated,
            trace,
            data,
        ));
    }
    Ok(RegularizationPath {
        algorithm,
        config: config.clone(),
        points,
        total_iht_updates: total,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Homotopy IHT: line-searched updates at each `λ` until
/// `‖W_i − W_{i+1}‖²_F ≤ ε` or the inner cap is reached.
pub fn hiht_solve(data: &CenteredData, config: &ResolvedConfig) -> Result<RegularizationPath> {
    run_path(Algorithm::Hiht, data, config)
}

/// Accelerated variant: a single line-searched update per `λ`.
pub fn ahiht_solve(data: &CenteredData, config: &ResolvedConfig) -> Result<RegularizationPath> {
    run_path(Algorithm::Ahiht, data, config)
}

pub fn solve(
    algorithm: Algorithm,
    data: &CenteredData,
    config: &ResolvedConfig,
) -> Result<RegularizationPath> {
    run_path(algorithm, data, config)
}

/// The point whose support size is closest to `target`; ties prefer the
/// smaller support, then the larger `λ`.
pub fn select_by_count(path: &RegularizationPath, target: usize) -> Result<&PathPoint> {
    path.points
        .iter()
        .enumerate()
        .min_by_key(|(k, p)| (p.support_size.abs_diff(target), p.support_size, *k))
        .map(|(_, p)| p)
        .ok_or(Error::EmptyPath)
}
