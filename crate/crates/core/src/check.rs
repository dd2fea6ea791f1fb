//! Self-check suite: finite-difference gradient checks for every loss
//! family plus the pairwise and limit properties the losses are built to
//! satisfy. Each property reports pass or fail independently.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::losses::{btl_optimal_margin, soft_copeland_score, Family, LossSpec};
use crate::optimizer::{
    finite_difference_check, gradient_descent, induced_ranking, population_gradient,
    population_objective, relative_error, Init, OptimConfig,
};
use crate::oracles::expected_disagreement;
use crate::preferences::{generate_regime, Label, PreferenceMatrix, RegimeKind, RegimeSpec};
use crate::rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;

/// Relative perturbation applied to an analytic gradient under fault
/// injection.
pub const FAULT_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    pub seed: u64,
    /// Perturbs the analytic margin gradient of this family.
    pub inject_fault: Option<Family>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

impl CheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.properties.iter().filter(|p| !p.passed)
    }
}

/// Hyperparameter points for the margin-gradient check.
pub fn gradient_check_specs(family: Family) -> Vec<LossSpec> {
    match family {
        Family::Btl => vec![LossSpec::btl(0.5), LossSpec::btl(1.0), LossSpec::btl(2.0)],
        Family::SoftKemeny => vec![
            LossSpec::soft_kemeny(0.5),
            LossSpec::soft_kemeny(1.0),
            LossSpec::soft_kemeny(2.0),
        ],
        Family::SoftCopeland => vec![
            LossSpec::soft_copeland(1.0, 4.0, 0.01),
            LossSpec::soft_copeland(0.5, 16.0, 0.1),
            LossSpec::soft_copeland(2.0, 1.0, 0.001),
        ],
        Family::Exponential => vec![LossSpec::Exponential],
        Family::Hinge => vec![LossSpec::Hinge],
    }
}

/// Margins in units of the loss's margin scale.
pub const GRADIENT_CHECK_MARGINS: [f64; 13] = [
    -6.0, -3.0, -1.5, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 1.5, 3.0, 6.0,
];

/// One margin-gradient comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientPoint {
    pub spec: LossSpec,
    pub delta: f64,
    pub y: Label,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// Central differences of the instance loss against its analytic margin
/// gradient over [`gradient_check_specs`] × [`GRADIENT_CHECK_MARGINS`] × both
/// labels, skipping hinge margins with `|Δ|` within `2·step` of 1.
pub fn margin_gradient_points(family: Family, fault: bool, step: f64) -> Vec<GradientPoint> {
    let mut out = Vec::new();
    for spec in gradient_check_specs(family) {
        for &z in &GRADIENT_CHECK_MARGINS {
            let delta = z * spec.margin_scale();
            for y in Label::BOTH {
                if spec.near_kink(y.sign() * delta, 2.0 * step) {
                    continue;
                }
                let mut analytic = spec.grad(delta, y);
                if fault {
                    analytic = analytic * (1.0 + FAULT_SCALE) + FAULT_SCALE;
                }
                let numeric =
                    (spec.value(delta + step, y) - spec.value(delta - step, y)) / (2.0 * step);
                out.push(GradientPoint {
                    spec,
                    delta,
                    y,
                    analytic,
                    numeric,
                    rel_error: relative_error(analytic, numeric),
                });
            }
        }
    }
    out
}

fn random_matrix<R: Rng>(m: usize, rng: &mut R) -> PreferenceMatrix {
    PreferenceMatrix::from_upper(m, |_, _| rng.random_range(0.05..0.95)).expect("valid")
}

fn random_rewards<R: Rng>(m: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..m)
        .map(|_| scale * rng.random_range(-2.0..2.0))
        .collect()
}

/// Rewards in `[0, 1)` whose pairwise gaps are all at least `gap`.
pub fn separated_rewards<R: Rng>(m: usize, gap: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let ok = (0..m).all(|a| (a + 1..m).all(|b| (r[a] - r[b]).abs() >= gap));
        if ok {
            return r;
        }
    }
}

/// Single-pair matrix with `eta[0][1] = eta`.
pub fn pair_matrix(eta: f64) -> Result<PreferenceMatrix> {
    PreferenceMatrix::from_upper(2, |_, _| eta)
}

fn pair_margin(spec: &LossSpec, eta: f64, cfg: &OptimConfig) -> Result<f64> {
    let res = gradient_descent(spec, &pair_matrix(eta)?, cfg)?;
    Ok(res.final_rewards[0] - res.final_rewards[1])
}

/// Outcome of one property: `Ok(detail)` on pass, `Err(detail)` on failure.
type Outcome = std::result::Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lift(r: Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e| Err(format!("error: {e}")))
}

fn margin_gradient(family: Family, fault: bool) -> Outcome {
    let points = margin_gradient_points(family, fault, FD_STEP);
    let worst = points
        .iter()
        .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
        .expect("nonempty grid");
    verdict(
        worst.rel_error <= FD_TOL,
        format!(
            "{} points, max rel error {:.3e} at {} delta={} y={}",
            points.len(),
            worst.rel_error,
            worst.spec,
            worst.delta,
            worst.y.sign()
        ),
    )
}

fn population_checks(family: Family, seed: u64) -> [(&'static str, Outcome); 3] {
    let mut rng = rng::stream(seed);
    let matrix = random_matrix(5, &mut rng);
    let mut fd_worst = 0.0f64;
    let mut sum_worst = 0.0f64;
    let mut shift_worst = 0.0f64;
    let mut skipped = 0;
    let mut failure = None;
    for spec in gradient_check_specs(family) {
        let r = random_rewards(5, spec.margin_scale(), &mut rng);
        let mut run = || -> Result<()> {
            let report = finite_difference_check(&spec, &matrix, &r, FD_STEP)?;
            fd_worst = fd_worst.max(report.max_rel_error);
            skipped += report.skipped;
            let grad = population_gradient(&spec, &r, &matrix)?;
            sum_worst = sum_worst.max(grad.iter().sum::<f64>().abs());
            let shifted: Vec<f64> = r.iter().map(|x| x + 3.25).collect();
            let diff = population_objective(&spec, &shifted, &matrix)?
                - population_objective(&spec, &r, &matrix)?;
            shift_worst = shift_worst.max(diff.abs());
            Ok(())
        };
        if let Err(e) = run() {
            failure = Some(format!("error: {e}"));
        }
    }
    if let Some(msg) = failure {
        return [
            ("population_gradient", Err(msg.clone())),
            ("gradient_sum_zero", Err(msg.clone())),
            ("translation_invariance", Err(msg)),
        ];
    }
    [
        (
            "population_gradient",
            verdict(
                fd_worst <= FD_TOL,
                format!("max rel error {fd_worst:.3e}, {skipped} coordinates skipped"),
            ),
        ),
        (
            "gradient_sum_zero",
            verdict(sum_worst <= 1e-10, format!("max |sum| {sum_worst:.3e}")),
        ),
        (
            "translation_invariance",
            verdict(
                shift_worst <= 1e-12,
                format!("max change {shift_worst:.3e}"),
            ),
        ),
    ]
}

fn label_symmetry(family: Family) -> Outcome {
    let mut worst = 0.0f64;
    for spec in gradient_check_specs(family) {
        for &z in &GRADIENT_CHECK_MARGINS {
            let d = z * spec.margin_scale();
            worst = worst.max((spec.value(d, Label::Win) - spec.value(-d, Label::Loss)).abs());
        }
    }
    verdict(
        worst == 0.0,
        format!("max |l(d,+1) - l(-d,-1)| {worst:.3e}"),
    )
}

fn btl_calibration() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for tau in [0.5, 1.0, 2.0] {
        let spec = LossSpec::btl(tau);
        for eta in [0.6, 0.7311, 0.9] {
            let got = pair_margin(&spec, eta, &OptimConfig::default_for(&spec))?;
            worst = worst.max((got - btl_optimal_margin(eta, tau)?).abs());
        }
    }
    Ok(verdict(
        worst <= 1e-4,
        format!("max |delta - tau*logit(eta)| {worst:.3e}"),
    ))
}

/// Soft Copeland configuration used by the pairwise-optimum properties.
fn copeland_pair_config(spec: &LossSpec, seed: u64) -> OptimConfig {
    OptimConfig::default_for(spec).with_init(Init::SeededGaussian { sigma: 0.01, seed })
}

fn soft_copeland_sign(seed: u64) -> Result<Outcome> {
    let spec = LossSpec::soft_copeland(1.0, 4.0, 0.01);
    let cfg = copeland_pair_config(&spec, seed);
    let mut notes = Vec::new();
    let mut ok = true;
    for eta in [0.2, 0.4, 0.6, 0.8] {
        let d = pair_margin(&spec, eta, &cfg)?;
        ok &= d.signum() == (2.0 * eta - 1.0).signum() && d != 0.0;
        notes.push(format!("eta={eta}: {d:.6}"));
    }
    let tie = pair_margin(&spec, 0.5, &cfg)?;
    ok &= tie.abs() <= 1e-6;
    notes.push(format!("eta=0.5: {tie:.3e}"));
    Ok(verdict(ok, notes.join(", ")))
}

fn soft_copeland_divergence(seed: u64) -> Result<Outcome> {
    let mut margins = Vec::new();
    for lambda in [0.1, 0.01, 0.001] {
        let spec = LossSpec::soft_copeland(1.0, 4.0, lambda);
        margins.push(pair_margin(&spec, 0.8, &copeland_pair_config(&spec, seed))?.abs());
    }
    Ok(verdict(
        margins.windows(2).all(|w| w[1] > w[0]),
        format!("|delta*| at lambda 0.1, 0.01, 0.001: {margins:?}"),
    ))
}

/// First `Δ > 0` at which the Soft Copeland gradient for `y = +1` stops
/// being negative, by bisection on `[0, β/(4τλ)]`.
pub fn soft_copeland_first_root(tau: f64, beta: f64, lambda: f64) -> f64 {
    let spec = LossSpec::soft_copeland(tau, beta, lambda);
    let band = beta / (4.0 * tau * lambda);
    // the gradient is negative on (0, lo] and nonnegative at hi
    let (mut lo, mut hi) = (0.0, band);
    let steps = 2000;
    for k in 1..=steps {
        let d = band * f64::from(k) / f64::from(steps);
        if spec.grad(d, Label::Win) >= 0.0 {
            hi = d;
            break;
        }
        lo = d;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if spec.grad(mid, Label::Win) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// For `y = +1` the gradient is negative for every `Δ ≤ 0` and on
/// `(0, Δ₀)`, `Δ₀` the first positive root; `Δ₀` lies strictly inside
/// `β/(4τλ)`.
fn soft_copeland_band() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (tau, beta, lambda) in [(1.0, 4.0, 0.01), (0.5, 16.0, 0.1), (2.0, 1.0, 0.001)] {
        let spec = LossSpec::soft_copeland(tau, beta, lambda);
        let band = beta / (4.0 * tau * lambda);
        let root = soft_copeland_first_root(tau, beta, lambda);
        ok &= root > 0.0 && root < band;
        for k in 0..=400 {
            let f = f64::from(k) / 400.0;
            ok &= spec.grad(-band * f, Label::Win) < 0.0;
            ok &= spec.grad(0.999 * root * f, Label::Win) < 0.0;
            ok &= spec.grad(band * f, Label::Loss) > 0.0;
            ok &= spec.grad(-0.999 * root * f, Label::Loss) > 0.0;
        }
        notes.push(format!("{spec}: root {root:.4} < band {band:.4}"));
    }
    verdict(ok, notes.join("; "))
}

fn soft_copeland_counting(seed: u64) -> Result<Outcome> {
    let mut rng = rng::stream(seed);
    let m = 7;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let r = separated_rewards(m, 0.01, &mut rng);
        for x in 0..m {
            let count: f64 = (0..m)
                .filter(|&o| o != x)
                .map(|o| (r[x] - r[o]).signum())
                .sum();
            let score = soft_copeland_score(&r, x, 0.01, 100.0)?;
            worst = worst.max((score - count / (m - 1) as f64).abs());
        }
    }
    Ok(verdict(
        worst <= 1e-3,
        format!("max |score - normalized count| {worst:.3e} over 10 draws"),
    ))
}

fn soft_kemeny_monotone() -> Outcome {
    let mut ok = true;
    for tau in [0.05, 0.5, 2.0] {
        let spec = LossSpec::soft_kemeny(tau);
        for k in -300..=300 {
            let d = f64::from(k) / 10.0 * tau;
            ok &= spec.grad(d, Label::Win) < 0.0 && spec.grad(d, Label::Loss) > 0.0;
        }
        ok &= spec.grad(30.0 * tau, Label::Win).abs() < 1e-6;
    }
    verdict(
        ok,
        "sign(grad) = -y on |delta/tau| <= 30; |grad| < 1e-6 at delta/tau = 30".into(),
    )
}

fn soft_kemeny_limit(seed: u64) -> Result<Outcome> {
    let mut rng = rng::stream(seed);
    let spec = LossSpec::soft_kemeny(0.01);
    let mut matrices = vec![
        generate_regime(&RegimeSpec::new(RegimeKind::Transitive, 5))?,
        generate_regime(&RegimeSpec::new(RegimeKind::Cyclic, 5))?,
    ];
    matrices.extend((0..3).map(|_| random_matrix(5, &mut rng)));
    let mut worst = 0.0f64;
    for matrix in &matrices {
        let mut r: Vec<f64> = (0..5).map(|a| 0.5 * f64::from(a)).collect();
        r.shuffle(&mut rng);
        let objective = population_objective(&spec, &r, matrix)?;
        let disagreement = expected_disagreement(&induced_ranking(&r), matrix)?;
        worst = worst.max((objective - disagreement).abs());
    }
    Ok(verdict(
        worst <= 1e-3,
        format!("max |objective - disagreement| {worst:.3e}"),
    ))
}

fn soft_copeland_saturation() -> Outcome {
    let (tau, beta) = (0.5, 100.0);
    let mut worst = 0.0f64;
    for k in -200..=200 {
        let d = f64::from(k) / 20.0;
        let p = crate::losses::win_probability(d, tau);
        if (p - 0.5).abs() >= 0.05 {
            worst = worst.max((crate::losses::soft_copeland_edge(d, tau, beta) - d.signum()).abs());
        }
    }
    verdict(worst < 1e-3, format!("max |edge - sign| {worst:.3e}"))
}

/// Runs every property and collects one result per property.
pub fn run_checks(options: &CheckOptions) -> CheckReport {
    let mut properties = Vec::new();
    let mut push = |name: String, family: Option<Family>, outcome: Outcome| {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        properties.push(PropertyResult {
            name,
            family,
            passed,
            detail,
        });
    };

    for (i, family) in Family::ALL.into_iter().enumerate() {
        let fault = options.inject_fault == Some(family);
        push(
            format!("margin_gradient[{family}]"),
            Some(family),
            margin_gradient(family, fault),
        );
        for (name, outcome) in population_checks(family, rng::derive_seed(options.seed, i as u64)) {
            push(format!("{name}[{family}]"), Some(family), outcome);
        }
        push(
            format!("label_symmetry[{family}]"),
            Some(family),
            label_symmetry(family),
        );
    }

    let seed = rng::derive_seed(options.seed, 100);
    push(
        "btl_calibration".into(),
        Some(Family::Btl),
        lift(btl_calibration()),
    );
    push(
        "soft_copeland_sign_consistency".into(),
        Some(Family::SoftCopeland),
        lift(soft_copeland_sign(seed)),
    );
    push(
        "soft_copeland_lambda_divergence".into(),
        Some(Family::SoftCopeland),
        lift(soft_copeland_divergence(seed)),
    );
    push(
        "soft_copeland_monotone_band".into(),
        Some(Family::SoftCopeland),
        soft_copeland_band(),
    );
    push(
        "soft_copeland_saturation".into(),
        Some(Family::SoftCopeland),
        soft_copeland_saturation(),
    );
    push(
        "soft_copeland_counting_limit".into(),
        Some(Family::SoftCopeland),
        lift(soft_copeland_counting(seed)),
    );
    push(
        "soft_kemeny_monotonicity".into(),
        Some(Family::SoftKemeny),
        soft_kemeny_monotone(),
    );
    push(
        "soft_kemeny_disagreement_limit".into(),
        Some(Family::SoftKemeny),
        lift(soft_kemeny_limit(seed)),
    );

    CheckReport {
        passed: properties.iter().all(|p| p.passed),
        properties,
    }
}
