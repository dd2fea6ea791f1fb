//! Pairwise losses over a reward margin `Δ = r(i) − r(j)`.
//!
//! Every family exposes the instance loss, its analytic derivative in `Δ`,
//! and the conditional risk under a preference probability `η`:
//!
//! | family         | loss                                   |
//! |----------------|----------------------------------------|
//! | BTL            | `log(1 + exp(−yΔ/τ))`                  |
//! | Soft Copeland  | `−y·tanh(β(σ(Δ/τ) − ½)) + (λ/2)Δ²`     |
//! | Soft Kemeny    | `σ(−yΔ/τ)`                             |
//! | Exponential    | `exp(−yΔ)`                             |
//! | Hinge          | `max(0, 1 − yΔ)`                       |
//!
//! Exponential and hinge take no hyperparameters. The hinge derivative at
//! the kink `yΔ = 1` is taken to be 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preferences::Label;

/// Beyond this magnitude the logistic function is saturated to exactly 0 or 1.
pub const SIGMOID_SATURATION: f64 = 700.0;

/// Logistic function, stable on both tails.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z > SIGMOID_SATURATION {
        1.0
    } else if z < -SIGMOID_SATURATION {
        0.0
    } else if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `σ(z)·(1 − σ(z))` without cancellation in the tails.
#[inline]
pub fn sigmoid_slope(z: f64) -> f64 {
    sigmoid(z) * sigmoid(-z)
}

/// `(σ(z), σ(−z))` from a single exponential.
#[inline]
pub fn sigmoid_pair(z: f64) -> (f64, f64) {
    if z > SIGMOID_SATURATION {
        return (1.0, 0.0);
    }
    if z < -SIGMOID_SATURATION {
        return (0.0, 1.0);
    }
    let e = (-z.abs()).exp();
    let (big, small) = (1.0 / (1.0 + e), e / (1.0 + e));
    if z >= 0.0 {
        (big, small)
    } else {
        (small, big)
    }
}

/// `log(1 + exp(z))`.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Win probability `σ(Δ/τ)`.
pub fn win_probability(delta: f64, tau: f64) -> f64 {
    sigmoid(delta / tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Btl,
    SoftCopeland,
    SoftKemeny,
    Exponential,
    Hinge,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Btl,
        Family::SoftCopeland,
        Family::SoftKemeny,
        Family::Exponential,
        Family::Hinge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Btl => "btl",
            Family::SoftCopeland => "soft_copeland",
            Family::SoftKemeny => "soft_kemeny",
            Family::Exponential => "exponential",
            Family::Hinge => "hinge",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s || f.name().replace('_', "-") == s)
            .ok_or_else(|| {
                Error::InvalidLoss(format!(
                    "unknown loss family {s:?}; expected btl, soft_copeland, soft_kemeny, exponential or hinge"
                ))
            })
    }
}

/// A loss family together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossSpecRepr", into = "LossSpecRepr")]
pub enum LossSpec {
    Btl { tau: f64 },
    SoftCopeland { tau: f64, beta: f64, lambda: f64 },
    SoftKemeny { tau: f64 },
    Exponential,
    Hinge,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossSpecRepr {
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
}

impl TryFrom<LossSpecRepr> for LossSpec {
    type Error = Error;

    fn try_from(r: LossSpecRepr) -> Result<Self> {
        LossSpec::from_parts(r.family, r.tau, r.beta, r.lambda)
    }
}

impl From<LossSpec> for LossSpecRepr {
    fn from(spec: LossSpec) -> Self {
        LossSpecRepr {
            family: spec.family(),
            tau: spec.tau(),
            beta: spec.beta(),
            lambda: spec.lambda(),
        }
    }
}

fn require_positive(name: &str, family: Family, v: Option<f64>) -> Result<f64> {
    match v {
        None => Err(Error::InvalidLoss(format!("{family} requires {name}"))),
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(Error::InvalidLoss(format!(
            "{name} must be positive and finite, got {x}"
        ))),
    }
}

fn forbid(name: &str, family: Family, v: Option<f64>) -> Result<()> {
    match v {
        None => Ok(()),
        Some(_) => Err(Error::InvalidLoss(format!("{family} takes no {name}"))),
    }
}

impl LossSpec {
    pub fn btl(tau: f64) -> Self {
        LossSpec::Btl { tau }
    }

    pub fn soft_copeland(tau: f64, beta: f64, lambda: f64) -> Self {
        LossSpec::SoftCopeland { tau, beta, lambda }
    }

    pub fn soft_kemeny(tau: f64) -> Self {
        LossSpec::SoftKemeny { tau }
    }

    /// Assembles and validates a spec from optional hyperparameters, the
    /// way a config file or command line presents them.
    pub fn from_parts(
        family: Family,
        tau: Option<f64>,
        beta: Option<f64>,
        lambda: Option<f64>,
    ) -> Result<Self> {
        let spec = match family {
            Family::Btl => {
                forbid("beta", family, beta)?;
                forbid("lambda", family, lambda)?;
                LossSpec::Btl {
                    tau: require_positive("tau", family, tau)?,
                }
            }
            Family::SoftKemeny => {
                forbid("beta", family, beta)?;
                forbid("lambda", family, lambda)?;
                LossSpec::SoftKemeny {
                    tau: require_positive("tau", family, tau)?,
                }
            }
            Family::SoftCopeland => LossSpec::SoftCopeland {
                tau: require_positive("tau", family, tau)?,
                beta: require_positive("beta", family, beta)?,
                lambda: require_positive("lambda", family, lambda)?,
            },
            Family::Exponential | Family::Hinge => {
                forbid("tau", family, tau)?;
                forbid("beta", family, beta)?;
                forbid("lambda", family, lambda)?;
                if family == Family::Exponential {
                    LossSpec::Exponential
                } else {
                    LossSpec::Hinge
                }
            }
        };
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        LossSpec::from_parts(self.family(), self.tau(), self.beta(), self.lambda()).map(|_| ())
    }

    pub fn family(&self) -> Family {
        match self {
            LossSpec::Btl { .. } => Family::Btl,
            LossSpec::SoftCopeland { .. } => Family::SoftCopeland,
            LossSpec::SoftKemeny { .. } => Family::SoftKemeny,
            LossSpec::Exponential => Family::Exponential,
            LossSpec::Hinge => Family::Hinge,
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match *self {
            LossSpec::Btl { tau } | LossSpec::SoftKemeny { tau } => Some(tau),
            LossSpec::SoftCopeland { tau, .. } => Some(tau),
            LossSpec::Exponential | LossSpec::Hinge => None,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            LossSpec::SoftCopeland { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            LossSpec::SoftCopeland { lambda, .. } => Some(lambda),
            _ => None,
        }
    }

    /// Width of the margin region in which the loss changes shape: `τ` for
    /// BTL and Soft Kemeny, `τ·min(1, 4/β)` for Soft Copeland (the edge score
    /// saturates once `β/(4τ)·|Δ|` is of order one), and 1 otherwise.
    pub fn margin_scale(&self) -> f64 {
        match *self {
            LossSpec::Btl { tau } | LossSpec::SoftKemeny { tau } => tau,
            LossSpec::SoftCopeland { tau, beta, .. } => tau * (4.0 / beta).min(1.0),
            LossSpec::Exponential | LossSpec::Hinge => 1.0,
        }
    }

    /// Instance loss for label `y` at margin `delta`.
    pub fn value(&self, delta: f64, y: Label) -> f64 {
        let y = y.sign();
        match *self {
            LossSpec::Btl { tau } => softplus(-y * delta / tau),
            LossSpec::SoftCopeland { tau, beta, lambda } => {
                -y * soft_copeland_edge(delta, tau, beta) + 0.5 * lambda * delta * delta
            }
            LossSpec::SoftKemeny { tau } => sigmoid(-y * delta / tau),
            LossSpec::Exponential => (-y * delta).exp(),
            LossSpec::Hinge => (1.0 - y * delta).max(0.0),
        }
    }

    /// Analytic `∂loss/∂Δ`.
    pub fn grad(&self, delta: f64, y: Label) -> f64 {
        let y = y.sign();
        match *self {
            LossSpec::Btl { tau } => -(y / tau) * sigmoid(-y * delta / tau),
            LossSpec::SoftCopeland { tau, beta, lambda } => {
                -y * soft_copeland_edge_slope(delta, tau, beta) + lambda * delta
            }
            LossSpec::SoftKemeny { tau } => -(y / tau) * sigmoid_slope(-y * delta / tau),
            LossSpec::Exponential => -y * (-y * delta).exp(),
            LossSpec::Hinge => {
                if y * delta < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }

    /// Expected loss when the first element wins with probability `eta`:
    /// `η·loss(Δ, +1) + (1 − η)·loss(Δ, −1)`.
    pub fn conditional_risk(&self, delta: f64, eta: f64) -> f64 {
        self.risk_and_grad(delta, eta).0
    }

    /// `∂/∂Δ` of [`conditional_risk`](Self::conditional_risk).
    pub fn conditional_risk_grad(&self, delta: f64, eta: f64) -> f64 {
        self.risk_and_grad(delta, eta).1
    }

    /// Conditional risk and its margin derivative, sharing the transcendental
    /// evaluations between the two labels.
    pub fn risk_and_grad(&self, delta: f64, eta: f64) -> (f64, f64) {
        match *self {
            LossSpec::Btl { tau } => {
                let z = delta / tau;
                let (p, q) = sigmoid_pair(z);
                let tail = (-z.abs()).exp().ln_1p();
                // softplus(−z) and softplus(z)
                let (sp_neg, sp_pos) = (tail + (-z).max(0.0), tail + z.max(0.0));
                let risk = eta * sp_neg + (1.0 - eta) * sp_pos;
                (risk, ((1.0 - eta) * p - eta * q) / tau)
            }
            LossSpec::SoftCopeland { tau, beta, lambda } => {
                let gamma = 2.0 * eta - 1.0;
                let s = soft_copeland_edge(delta, tau, beta);
                let slope = soft_copeland_edge_slope(delta, tau, beta);
                (
                    -gamma * s + 0.5 * lambda * delta * delta,
                    -gamma * slope + lambda * delta,
                )
            }
            LossSpec::SoftKemeny { tau } => {
                let (p, q) = sigmoid_pair(delta / tau);
                (eta * q + (1.0 - eta) * p, (1.0 - 2.0 * eta) * p * q / tau)
            }
            LossSpec::Exponential => {
                let (down, up) = ((-delta).exp(), delta.exp());
                (
                    eta * down + (1.0 - eta) * up,
                    -eta * down + (1.0 - eta) * up,
                )
            }
            LossSpec::Hinge => {
                let (win, loss) = ((1.0 - delta).max(0.0), (1.0 + delta).max(0.0));
                let gw = if delta < 1.0 { -1.0 } else { 0.0 };
                let gl = if -delta < 1.0 { 1.0 } else { 0.0 };
                (eta * win + (1.0 - eta) * loss, eta * gw + (1.0 - eta) * gl)
            }
        }
    }

    /// Whether `delta` sits within `window` of a point where the loss is not
    /// differentiable for either label.
    pub fn near_kink(&self, delta: f64, window: f64) -> bool {
        matches!(self, LossSpec::Hinge) && (delta.abs() - 1.0).abs() < window
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LossSpec::Btl { tau } => write!(f, "btl(tau={tau})"),
            LossSpec::SoftCopeland { tau, beta, lambda } => {
                write!(f, "soft_copeland(tau={tau}, beta={beta}, lambda={lambda})")
            }
            LossSpec::SoftKemeny { tau } => write!(f, "soft_kemeny(tau={tau})"),
            LossSpec::Exponential => f.write_str("exponential"),
            LossSpec::Hinge => f.write_str("hinge"),
        }
    }
}

/// Minimizer of the BTL conditional risk, `τ·log(η / (1 − η))`.
/// There is no finite minimizer when `η` is 0 or 1.
pub fn btl_optimal_margin(eta: f64, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta}: the BTL risk has a finite minimizer only for eta in (0, 1)"
        )));
    }
    Ok(tau * (eta / (1.0 - eta)).ln())
}

/// Soft Copeland edge score `tanh(β(σ(Δ/τ) − ½))`, in `(−tanh(β/2), tanh(β/2))`.
///
/// Uses `σ(x) − ½ = ½·tanh(x/2)` so that the score is exactly odd in `Δ`.
#[inline]
pub fn soft_copeland_edge(delta: f64, tau: f64, beta: f64) -> f64 {
    (beta * 0.5 * (0.5 * delta / tau).tanh()).tanh()
}

/// `d/dΔ` of [`soft_copeland_edge`]: `(β/τ)·p(1−p)·sech²(β(p − ½))`.
#[inline]
pub fn soft_copeland_edge_slope(delta: f64, tau: f64, beta: f64) -> f64 {
    let x = delta / tau;
    let c = (beta * 0.5 * (0.5 * x).tanh()).cosh();
    (beta / tau) * sigmoid_slope(x) / (c * c)
}

/// Soft Copeland score of alternative `x` under rewards `r`: the mean edge
/// score against every other alternative (uniform opponents).
pub fn soft_copeland_score(r: &[f64], x: usize, tau: f64, beta: f64) -> Result<f64> {
    if x >= r.len() || r.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "alternative {x} out of range for {} rewards",
            r.len()
        )));
    }
    let total: f64 = (0..r.len())
        .filter(|&o| o != x)
        .map(|o| soft_copeland_edge(r[x] - r[o], tau, beta))
        .sum();
    Ok(total / (r.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Y: [Label; 2] = Label::BOTH;

    fn all_specs() -> Vec<LossSpec> {
        vec![
            LossSpec::btl(1.0),
            LossSpec::btl(0.5),
            LossSpec::soft_copeland(1.0, 2.0, 0.01),
            LossSpec::soft_copeland(0.5, 8.0, 0.1),
            LossSpec::soft_kemeny(1.0),
            LossSpec::soft_kemeny(0.3),
            LossSpec::Exponential,
            LossSpec::Hinge,
        ]
    }

    #[test]
    fn sigmoid_tails_and_symmetry() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        for z in [-30.0, -3.0, -0.1, 0.7, 12.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
        assert!((softplus(-50.0) - (-50.0f64).exp()).abs() < 1e-30);
        assert!((softplus(50.0) - 50.0).abs() < 1e-15);
        assert!(softplus(-1000.0) >= 0.0 && softplus(1000.0).is_finite());
    }

    #[test]
    fn win_probability_examples() {
        assert_eq!(win_probability(0.0, 2.0), 0.5);
        assert!((win_probability(0.7, 0.7) - 0.731_058_578_630_004_9).abs() < 1e-12);
        for d in [-4.0, -0.3, 0.2, 9.0] {
            assert!((win_probability(d, 0.8) + win_probability(-d, 0.8) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_value_examples() {
        for y in Y {
            assert!((LossSpec::btl(0.3).value(0.0, y) - std::f64::consts::LN_2).abs() < 1e-15);
        }
        let sk = LossSpec::soft_kemeny(1.0).value(4.595, Label::Win);
        assert!((sk - 0.01).abs() < 1e-4, "{sk}");

        // σ(3) = 0.9525741268, 2(σ(3) - 0.5) = 0.9051482536, tanh(.) = 0.7187954121
        let sc = LossSpec::soft_copeland(1.0, 2.0, 0.01).value(3.0, Label::Win);
        assert!((sc - (-0.718_795_412_1 + 0.045)).abs() < 1e-9, "{sc}");
        assert!((sc + 0.6743).abs() < 1e-3);

        assert_eq!(LossSpec::Exponential.value(0.0, Label::Win), 1.0);
        assert_eq!(LossSpec::Hinge.value(2.0, Label::Win), 0.0);
        assert_eq!(LossSpec::Hinge.value(2.0, Label::Loss), 3.0);
    }

    #[test]
    fn grad_examples() {
        let g = LossSpec::soft_kemeny(1.0).grad(0.0, Label::Win);
        assert!((g + 0.25).abs() < 1e-15);
        for lambda in [0.001, 0.1, 5.0] {
            let g = LossSpec::soft_copeland(1.0, 2.0, lambda).grad(0.0, Label::Win);
            assert!((g + 0.5).abs() < 1e-15);
        }
        assert_eq!(LossSpec::Hinge.grad(1.0, Label::Win), 0.0);
        assert_eq!(LossSpec::Hinge.grad(0.999, Label::Win), -1.0);
        assert_eq!(LossSpec::Hinge.grad(-0.999, Label::Loss), 1.0);
    }

    #[test]
    fn grads_match_central_differences() {
        // Margins are measured in units of τ: beyond |Δ/τ| ≈ 10 on the losing
        // side the loss value is within 1e-5 of a constant and central
        // differences no longer resolve the slope in double precision.
        let h = 1e-5;
        for spec in all_specs() {
            let unit = spec.tau().unwrap_or(1.0);
            for k in 0..=40 {
                let delta = unit * (-10.0 + 0.5 * k as f64 + 0.013);
                for y in Y {
                    if spec.near_kink(delta, 1e-4) {
                        continue;
                    }
                    let fd = (spec.value(delta + h, y) - spec.value(delta - h, y)) / (2.0 * h);
                    let an = spec.grad(delta, y);
                    let err = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-12);
                    assert!(
                        err <= 1e-6,
                        "{spec} Δ={delta} y={y:?}: {an} vs {fd} ({err:e})"
                    );
                }
            }
        }
    }

    #[test]
    fn label_symmetry() {
        for spec in all_specs() {
            for k in 0..=80 {
                let d = -10.0 + 0.25 * k as f64;
                let a = spec.value(d, Label::Win);
                let b = spec.value(-d, Label::Loss);
                assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "{spec} at {d}");
            }
        }
    }

    #[test]
    fn conditional_risk_examples() {
        let btl = LossSpec::btl(1.0);
        for d in [0.3, 1.0, 4.0] {
            assert!((btl.conditional_risk(d, 0.5) - btl.conditional_risk(-d, 0.5)).abs() < 1e-15);
            assert!(btl.conditional_risk(d, 0.5) > btl.conditional_risk(0.0, 0.5));
        }
        let sc = LossSpec::soft_copeland(1.0, 3.0, 0.2);
        for d in [-3.0, -0.5, 0.0, 2.0] {
            assert!((sc.conditional_risk(d, 0.5) - 0.1 * d * d).abs() < 1e-15);
        }
        let eta = sigmoid(1.0);
        assert!(btl.conditional_risk_grad(1.0, eta).abs() < 1e-15);
        assert!(btl.conditional_risk(1.0, eta) < btl.conditional_risk(0.99, eta));
        assert!(btl.conditional_risk(1.0, eta) < btl.conditional_risk(1.01, eta));
    }

    #[test]
    fn fused_risk_matches_label_average() {
        for spec in all_specs() {
            for eta in [0.0, 0.1, 0.5, 0.731, 1.0] {
                for k in 0..=60 {
                    let d = -6.0 + 0.2 * k as f64 + 0.001;
                    let (risk, grad) = spec.risk_and_grad(d, eta);
                    let r2 =
                        eta * spec.value(d, Label::Win) + (1.0 - eta) * spec.value(d, Label::Loss);
                    let g2 =
                        eta * spec.grad(d, Label::Win) + (1.0 - eta) * spec.grad(d, Label::Loss);
                    assert!(
                        (risk - r2).abs() <= 1e-13 * r2.abs().max(1.0),
                        "{spec} {eta} {d}"
                    );
                    assert!(
                        (grad - g2).abs() <= 1e-13 * g2.abs().max(1.0),
                        "{spec} {eta} {d}"
                    );
                }
            }
        }
    }

    #[test]
    fn btl_optimal_margin_examples() {
        assert_eq!(btl_optimal_margin(0.5, 3.0).unwrap(), 0.0);
        assert!((btl_optimal_margin(0.7311, 2.0).unwrap() - 2.0).abs() < 1e-3);
        assert!((btl_optimal_margin(0.9, 1.0).unwrap() - 9f64.ln()).abs() < 1e-15);
        assert!(btl_optimal_margin(1.0, 1.0).is_err());
        assert!(btl_optimal_margin(0.0, 1.0).is_err());
        assert!(btl_optimal_margin(0.4, 0.0).is_err());
    }

    #[test]
    fn edge_score_shape() {
        assert_eq!(soft_copeland_edge(0.0, 1.0, 2.0), 0.0);
        let lim = soft_copeland_edge(1e6, 1.0, 2.0);
        assert!((lim - 1f64.tanh()).abs() < 1e-15);
        let mut prev = -1.0;
        for k in 0..=200 {
            let d = -10.0 + 0.1 * k as f64;
            let s = soft_copeland_edge(d, 0.7, 3.0);
            assert_eq!(s, -soft_copeland_edge(-d, 0.7, 3.0));
            assert!(s > prev);
            assert!(s.abs() <= 1.0);
            prev = s;
        }
    }

    #[test]
    fn soft_copeland_score_examples() {
        for x in 0..4 {
            assert_eq!(soft_copeland_score(&[2.0; 4], x, 1.0, 5.0).unwrap(), 0.0);
        }
        let r = [1.0, 0.0];
        let s0 = soft_copeland_score(&r, 0, 1.0, 2.0).unwrap();
        let s1 = soft_copeland_score(&r, 1, 1.0, 2.0).unwrap();
        assert_eq!(s0, -s1);
        assert_eq!(s0, soft_copeland_edge(1.0, 1.0, 2.0));
        assert!(soft_copeland_score(&r, 2, 1.0, 2.0).is_err());
    }

    #[test]
    fn spec_json_contract() {
        let spec = LossSpec::soft_copeland(0.5, 4.0, 0.01);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            s,
            r#"{"family":"soft_copeland","tau":0.5,"beta":4.0,"lambda":0.01}"#
        );
        assert_eq!(serde_json::from_str::<LossSpec>(&s).unwrap(), spec);
        assert_eq!(
            serde_json::to_string(&LossSpec::Hinge).unwrap(),
            r#"{"family":"hinge"}"#
        );
        assert_eq!(
            serde_json::from_str::<LossSpec>(r#"{"family":"btl","tau":2.0}"#).unwrap(),
            LossSpec::btl(2.0)
        );
        for bad in [
            r#"{"family":"btl"}"#,
            r#"{"family":"btl","tau":-1}"#,
            r#"{"family":"hinge","tau":1}"#,
            r#"{"family":"soft_copeland","tau":1,"beta":2}"#,
            r#"{"family":"soft_kemeny","tau":1,"lambda":0.1}"#,
            r#"{"family":"borda","tau":1}"#,
        ] {
            assert!(serde_json::from_str::<LossSpec>(bad).is_err(), "{bad}");
        }
    }
}
