//! Exact population objectives over a preference matrix and full-batch
//! gradient descent on one scalar reward per alternative.
//!
//! The population objective is the mean over unordered pairs `a < b` of the
//! conditional risk at margin `r[a] − r[b]` and probability `eta[a][b]`.
//! Pair terms are accumulated in a fixed row-major order, so results are
//! bit-identical regardless of how callers schedule work.

use std::ops::Deref;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::oracles::Ranking;
use crate::preferences::{Comparison, PreferenceMatrix};
use crate::rng;

/// One finite reward per alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardVector(Vec<f64>);

impl TryFrom<Vec<f64>> for RewardVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        RewardVector::new(v)
    }
}

impl From<RewardVector> for Vec<f64> {
    fn from(r: RewardVector) -> Vec<f64> {
        r.0
    }
}

impl Deref for RewardVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl RewardVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "reward {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(RewardVector(values))
    }

    pub fn zeros(m: usize) -> Self {
        RewardVector(vec![0.0; m])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        RewardVector::new(self.0.iter().map(|v| v + c).collect())
    }
}

fn check_dims(matrix: &PreferenceMatrix, r: &[f64]) -> Result<()> {
    if matrix.m() == r.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: matrix.m(),
            got: r.len(),
        })
    }
}

pub fn population_objective(spec: &LossSpec, r: &[f64], matrix: &PreferenceMatrix) -> Result<f64> {
    check_dims(matrix, r)?;
    let total: f64 = matrix
        .pairs()
        .map(|(a, b)| spec.conditional_risk(r[a] - r[b], matrix.eta(a, b)))
        .sum();
    Ok(total / matrix.pair_count() as f64)
}

/// Gradient of [`population_objective`] with respect to the rewards.
pub fn population_gradient(
    spec: &LossSpec,
    r: &[f64],
    matrix: &PreferenceMatrix,
) -> Result<Vec<f64>> {
    check_dims(matrix, r)?;
    Ok(objective_and_gradient(spec, r, matrix).1)
}

fn objective_and_gradient(
    spec: &LossSpec,
    r: &[f64],
    matrix: &PreferenceMatrix,
) -> (f64, Vec<f64>) {
    let norm = 1.0 / matrix.pair_count() as f64;
    let mut objective = 0.0;
    let mut grad = vec![0.0; r.len()];
    for (a, b) in matrix.pairs() {
        let delta = r[a] - r[b];
        let eta = matrix.eta(a, b);
        objective += spec.conditional_risk(delta, eta);
        let g = spec.conditional_risk_grad(delta, eta) * norm;
        grad[a] += g;
        grad[b] -= g;
    }
    (objective * norm, grad)
}

/// Mean instance loss over an observed comparison list (the sampled-data
/// counterpart of [`population_objective`]).
pub fn empirical_objective(spec: &LossSpec, r: &[f64], data: &[Comparison]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty comparison list".into()));
    }
    let mut total = 0.0;
    for c in data {
        if c.i >= r.len() || c.j >= r.len() || c.i == c.j {
            return Err(Error::InvalidArgument(format!(
                "comparison ({}, {}) invalid for {} alternatives",
                c.i,
                c.j,
                r.len()
            )));
        }
        total += spec.value(r[c.i] - r[c.j], c.y);
    }
    Ok(total / data.len() as f64)
}

pub fn empirical_gradient(spec: &LossSpec, r: &[f64], data: &[Comparison]) -> Result<Vec<f64>> {
    empirical_objective(spec, r, data)?;
    let norm = 1.0 / data.len() as f64;
    let mut grad = vec![0.0; r.len()];
    for c in data {
        let g = spec.grad(r[c.i] - r[c.j], c.y) * norm;
        grad[c.i] += g;
        grad[c.j] -= g;
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    Zeros,
    SeededGaussian { sigma: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub learning_rate: f64,
    pub steps: usize,
    #[serde(default = "default_init")]
    pub init: Init,
    #[serde(default)]
    pub record_trajectory: bool,
}

fn default_init() -> Init {
    Init::Zeros
}

impl OptimConfig {
    pub fn new(learning_rate: f64, steps: usize) -> Self {
        OptimConfig {
            learning_rate,
            steps,
            init: Init::Zeros,
            record_trajectory: false,
        }
    }

    /// Default step size and budget for a loss.
    ///
    /// The step is `base · min(1, s²)` with `s` the loss's
    /// [`margin_scale`](LossSpec::margin_scale), which keeps the dynamics in
    /// units of `s` fixed as the loss sharpens. `base` is 0.5 for BTL and
    /// Soft Kemeny, 0.4 for Soft Copeland and 0.1 for exponential and hinge.
    /// The saturating losses (Soft Copeland, Soft Kemeny) get 5000 steps, the
    /// others 2000.
    pub fn default_for(spec: &LossSpec) -> Self {
        let base = match *spec {
            LossSpec::Btl { .. } | LossSpec::SoftKemeny { .. } => 0.5,
            LossSpec::SoftCopeland { .. } => 0.4,
            LossSpec::Exponential | LossSpec::Hinge => 0.1,
        };
        let steps = match *spec {
            LossSpec::SoftCopeland { .. } | LossSpec::SoftKemeny { .. } => 5000,
            _ => 2000,
        };
        let s = spec.margin_scale();
        OptimConfig::new(base * (s * s).min(1.0), steps)
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_trajectory(mut self, record: bool) -> Self {
        self.record_trajectory = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be >= 1".into()));
        }
        if let Init::SeededGaussian { sigma, .. } = self.init {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "init sigma must be >= 0, got {sigma}"
                )));
            }
        }
        Ok(())
    }

    /// The starting rewards for `m` items.
    pub fn initial_rewards(&self, m: usize) -> Vec<f64> {
        match self.init {
            Init::Zeros => vec![0.0; m],
            Init::SeededGaussian { sigma, seed } => {
                let mut rng = rng::stream(seed);
                let normal = Normal::new(0.0, sigma).expect("sigma validated");
                (0..m).map(|_| normal.sample(&mut rng)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    #[serde(rename = "final")]
    pub final_rewards: RewardVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
    pub final_objective: f64,
    pub grad_norm_final: f64,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fixed-step full-batch gradient descent from the configured init.
///
/// The trace, when recorded, holds the objective before every step and
/// after the last one (`steps + 1` entries).
pub fn gradient_descent(
    spec: &LossSpec,
    matrix: &PreferenceMatrix,
    config: &OptimConfig,
) -> Result<OptimResult> {
    spec.validate()?;
    config.validate()?;
    let mut r = config.initial_rewards(matrix.m());
    let mut trace = config
        .record_trajectory
        .then(|| Vec::with_capacity(config.steps + 1));
    for step in 0..config.steps {
        let (obj, grad) = objective_and_gradient(spec, &r, matrix);
        if !obj.is_finite() {
            return Err(Error::NonFinite {
                what: "objective",
                step,
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                step,
            });
        }
        if let Some(t) = trace.as_mut() {
            t.push(obj);
        }
        for (ri, gi) in r.iter_mut().zip(&grad) {
            *ri -= config.learning_rate * gi;
        }
    }
    let (obj, grad) = objective_and_gradient(spec, &r, matrix);
    let steps = config.steps;
    if !obj.is_finite() {
        return Err(Error::NonFinite {
            what: "objective",
            step: steps,
        });
    }
    if grad.iter().any(|g| !g.is_finite()) || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient",
            step: steps,
        });
    }
    if let Some(t) = trace.as_mut() {
        t.push(obj);
    }
    Ok(OptimResult {
        final_rewards: RewardVector(r),
        objective_trace: trace,
        final_objective: obj,
        grad_norm_final: l2(&grad),
    })
}

/// Descending sort of rewards; exact ties go to the lower index first.
pub fn induced_ranking(r: &[f64]) -> Ranking {
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
    Ranking::new(order).expect("sorted indices form a permutation")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// Coordinates excluded because an incident pair sits at a kink.
    pub skipped: usize,
    pub checked: usize,
}

/// Absolute floor in the relative-error denominator.
pub const FD_ABS_FLOOR: f64 = 1e-12;

/// Relative error with [`FD_ABS_FLOOR`] in the denominator.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_ABS_FLOOR)
}

/// Compares [`population_gradient`] with central differences of
/// [`population_objective`], one coordinate at a time.
///
/// A coordinate is skipped when any pair it touches has a margin within
/// `2·step` of a non-differentiable point of the loss.
pub fn finite_difference_check(
    spec: &LossSpec,
    matrix: &PreferenceMatrix,
    r: &[f64],
    step: f64,
) -> Result<FdReport> {
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be in (0, 1e-2], got {step}"
        )));
    }
    let analytic = population_gradient(spec, r, matrix)?;
    let m = r.len();
    let mut report = FdReport {
        max_rel_error: 0.0,
        skipped: 0,
        checked: 0,
    };
    let mut probe = r.to_vec();
    for a in 0..m {
        let at_kink = (0..m)
            .filter(|&b| b != a)
            .any(|b| spec.near_kink(r[a] - r[b], 2.0 * step));
        if at_kink {
            report.skipped += 1;
            continue;
        }
        probe[a] = r[a] + step;
        let up = population_objective(spec, &probe, matrix)?;
        probe[a] = r[a] - step;
        let down = population_objective(spec, &probe, matrix)?;
        probe[a] = r[a];
        let numeric = (up - down) / (2.0 * step);
        report.max_rel_error = report
            .max_rel_error
            .max(relative_error(analytic[a], numeric));
        report.checked += 1;
    }
    Ok(report)
}
