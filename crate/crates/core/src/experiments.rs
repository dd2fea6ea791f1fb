//! Desk-scale experiment harness: rule recovery over a smoothing grid
//! (`exp1`), hidden-context aggregation over a two-context family (`exp2`)
//! and margin-gradient profiles (`exp3`).
//!
//! Every cell owns its generator, seeded from `(seed, cell index)` where the
//! cell index is the cell's position in the documented enumeration order.
//! Cells run on the ambient rayon pool and are collected in enumeration
//! order, so output does not depend on the number of worker threads.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{Family, LossSpec};
use crate::optimizer::{gradient_descent, induced_ranking, Init, OptimConfig};
use crate::oracles::{
    borda_winners, check_condorcet_criterion, check_majority_winner, check_pareto,
    condorcet_winner, copeland, expected_disagreement, kemeny_optimal_set, kendall_to_set,
    AxiomStatus, Ranking, KEMENY_MAX_M,
};
use crate::preferences::{
    generate_regime, ContextMixture, PreferenceMatrix, RegimeKind, RegimeSpec,
};
use crate::rng::derive_seed;

/// Standard deviation of the initial rewards, in units of the loss's
/// margin scale. Large enough that symmetric stationary points (such as
/// `r = 0` on a cyclic tournament) are left within the step budget.
pub const INIT_SIGMA_REL: f64 = 0.3;

/// `regime` column value for hidden-context records.
pub const HIDDEN_CONTEXT_REGIME: &str = "hidden_context";

pub const RECORD_HEADER: &str = "loss,tau,beta,lambda,regime,m,seed,copeland_agreement,\
kendall_to_kemeny,condorcet_status,expected_disagreement";

/// Columns appended to [`RECORD_HEADER`] for hidden-context records.
pub const HIDDEN_CONTEXT_COLUMNS: &str = "weight,majority_winner_status,pareto_status";

pub const GRADIENT_HEADER: &str = "loss,tau,beta,series,delta,grad_magnitude";

/// `condorcet_status` value written for a cell whose optimizer aborted.
pub const ERROR_STATUS: &str = "error";

// ---------------------------------------------------------------------------
// Grid and records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentGrid {
    pub m_values: Vec<usize>,
    pub regimes: Vec<RegimeKind>,
    pub tau_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub families: Vec<Family>,
    /// Overrides the per-loss step budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            m_values: vec![5, 7, 9],
            regimes: RegimeKind::ALL.to_vec(),
            tau_grid: vec![1.0, 0.3, 0.1, 0.05, 0.01],
            beta_grid: vec![1.0, 4.0, 16.0, 100.0],
            lambda_grid: vec![0.1, 0.01, 0.001],
            seeds: (0..20).collect(),
            families: Family::ALL.to_vec(),
            steps: None,
        }
    }
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} must be nonempty")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "{name} values must be positive, got {v}"
        )));
    }
    Ok(())
}

fn check_steps(steps: Option<usize>) -> Result<()> {
    if steps == Some(0) {
        return Err(Error::InvalidConfig("steps must be >= 1".into()));
    }
    Ok(())
}

fn check_nonempty<T>(name: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} must be nonempty")));
    }
    Ok(())
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        check_nonempty("m_values", &self.m_values)?;
        check_nonempty("regimes", &self.regimes)?;
        check_nonempty("seeds", &self.seeds)?;
        check_nonempty("families", &self.families)?;
        check_positive("tau_grid", &self.tau_grid)?;
        check_positive("beta_grid", &self.beta_grid)?;
        check_positive("lambda_grid", &self.lambda_grid)?;
        check_steps(self.steps)?;
        for &m in &self.m_values {
            if m > KEMENY_MAX_M {
                return Err(Error::TooManyAlternatives {
                    m,
                    max: KEMENY_MAX_M,
                });
            }
            for &kind in &self.regimes {
                RegimeSpec::new(kind, m).validate()?;
            }
        }
        Ok(())
    }

    /// Every loss configuration in the grid, families in listed order; Soft
    /// Copeland varies `τ` slowest and `λ` fastest.
    pub fn losses(&self) -> Vec<LossSpec> {
        let mut out = Vec::new();
        for &family in &self.families {
            match family {
                Family::Btl => out.extend(self.tau_grid.iter().map(|&tau| LossSpec::btl(tau))),
                Family::SoftKemeny => {
                    out.extend(self.tau_grid.iter().map(|&tau| LossSpec::soft_kemeny(tau)))
                }
                Family::SoftCopeland => {
                    for &tau in &self.tau_grid {
                        for &beta in &self.beta_grid {
                            for &lambda in &self.lambda_grid {
                                out.push(LossSpec::soft_copeland(tau, beta, lambda));
                            }
                        }
                    }
                }
                Family::Exponential => out.push(LossSpec::Exponential),
                Family::Hinge => out.push(LossSpec::Hinge),
            }
        }
        out
    }

    /// Number of cells `run_exp1` will evaluate.
    pub fn cell_count(&self) -> usize {
        self.regimes.len() * self.m_values.len() * self.losses().len() * self.seeds.len()
    }
}

/// Optimizer settings for one cell: the loss's default step and budget, and
/// a Gaussian start of width [`INIT_SIGMA_REL`] times its margin scale.
pub fn cell_config(spec: &LossSpec, init_seed: u64, steps: Option<usize>) -> OptimConfig {
    let mut cfg = OptimConfig::default_for(spec).with_init(Init::SeededGaussian {
        sigma: INIT_SIGMA_REL * spec.margin_scale(),
        seed: init_seed,
    });
    if let Some(steps) = steps {
        cfg.steps = steps;
    }
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMetrics {
    pub ranking: Ranking,
    /// Top of the induced ranking is a Copeland winner.
    pub copeland_agreement: bool,
    /// Kendall distance to the nearest Kemeny-optimal ranking.
    pub kendall_to_kemeny: usize,
    pub condorcet_status: AxiomStatus,
    pub expected_disagreement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MixtureMetrics {
    pub majority_winner_status: AxiomStatus,
    pub pareto_status: AxiomStatus,
}

/// One experiment cell. Exactly one of `metrics` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub loss: LossSpec,
    pub regime: String,
    pub m: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(flatten)]
    pub metrics: Option<CellMetrics>,
    #[serde(flatten)]
    pub mixture: Option<MixtureMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MetricsRecord {
    pub fn is_failed(&self) -> bool {
        self.metrics.is_none()
    }
}

/// Oracle outputs for one population matrix, shared by every cell on it.
struct Reference {
    matrix: PreferenceMatrix,
    copeland_winners: Vec<usize>,
    kemeny: Vec<Ranking>,
}

impl Reference {
    fn new(matrix: PreferenceMatrix) -> Result<Self> {
        let copeland_winners = copeland(&matrix).winners;
        let (kemeny, _) = kemeny_optimal_set(&matrix)?;
        Ok(Reference {
            matrix,
            copeland_winners,
            kemeny,
        })
    }

    fn evaluate(&self, spec: &LossSpec, cfg: &OptimConfig) -> Result<CellMetrics> {
        let result = gradient_descent(spec, &self.matrix, cfg)?;
        let ranking = induced_ranking(&result.final_rewards);
        let top = ranking.top();
        Ok(CellMetrics {
            copeland_agreement: self.copeland_winners.contains(&top),
            kendall_to_kemeny: kendall_to_set(&ranking, &self.kemeny)?,
            condorcet_status: check_condorcet_criterion(top, &self.matrix),
            expected_disagreement: expected_disagreement(&ranking, &self.matrix)?,
            ranking,
        })
    }
}

fn split_outcome(outcome: Result<CellMetrics>) -> (Option<CellMetrics>, Option<String>) {
    match outcome {
        Ok(metrics) => (Some(metrics), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Experiment 1
// ---------------------------------------------------------------------------

/// Rule recovery on the synthetic regimes.
///
/// Cells are enumerated regime, then m, then loss (see
/// [`ExperimentGrid::losses`]), then seed.
pub fn run_exp1(grid: &ExperimentGrid) -> Result<Vec<MetricsRecord>> {
    grid.validate()?;
    let populations: Vec<(RegimeKind, usize)> = grid
        .regimes
        .iter()
        .flat_map(|&kind| grid.m_values.iter().map(move |&m| (kind, m)))
        .collect();
    let references: Vec<Reference> = populations
        .par_iter()
        .map(|&(kind, m)| Reference::new(generate_regime(&RegimeSpec::new(kind, m))?))
        .collect::<Result<_>>()?;

    let losses = grid.losses();
    let mut cells = Vec::with_capacity(grid.cell_count());
    for p in 0..populations.len() {
        for loss in &losses {
            for &seed in &grid.seeds {
                cells.push((p, *loss, seed));
            }
        }
    }

    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(index, &(p, loss, seed))| {
            let (kind, m) = populations[p];
            let cfg = cell_config(&loss, derive_seed(seed, index as u64), grid.steps);
            let (metrics, error) = split_outcome(references[p].evaluate(&loss, &cfg));
            MetricsRecord {
                loss,
                regime: kind.name().to_string(),
                m,
                seed,
                weight: None,
                metrics,
                mixture: None,
                error,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Experiment 2
// ---------------------------------------------------------------------------

/// Two contexts over the same alternatives; weight `w` goes to `first`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoContextFamily {
    pub first: PreferenceMatrix,
    pub second: PreferenceMatrix,
}

impl TwoContextFamily {
    pub fn new(first: PreferenceMatrix, second: PreferenceMatrix) -> Result<Self> {
        if first.m() != second.m() {
            return Err(Error::DimensionMismatch {
                expected: first.m(),
                got: second.m(),
            });
        }
        Ok(TwoContextFamily { first, second })
    }

    pub fn m(&self) -> usize {
        self.first.m()
    }

    pub fn mixture(&self, weight: f64) -> Result<ContextMixture> {
        ContextMixture::two(weight, self.first.clone(), self.second.clone())
    }
}

/// A two-context, three-alternative logistic-utility mixture whose marginal
/// has a Condorcet winner that is not its (unique) Borda winner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitFixture {
    pub first_utilities: [f64; 3],
    pub second_utilities: [f64; 3],
    pub weight: f64,
    pub condorcet_winner: usize,
    pub borda_winner: usize,
    /// Unique Kemeny-optimal ranking of the marginal.
    pub kemeny: [usize; 3],
}

/// The frozen output of [`search_split_fixture`].
pub const SPLIT_FIXTURE: SplitFixture = SplitFixture {
    first_utilities: [2.5, 4.0, 0.0],
    second_utilities: [3.5, 0.0, 0.0],
    weight: 0.65,
    condorcet_winner: 1,
    borda_winner: 0,
    kemeny: [1, 0, 2],
};

impl SplitFixture {
    pub fn family(&self) -> TwoContextFamily {
        TwoContextFamily {
            first: PreferenceMatrix::from_utilities(&self.first_utilities)
                .expect("finite utilities"),
            second: PreferenceMatrix::from_utilities(&self.second_utilities)
                .expect("finite utilities"),
        }
    }

    pub fn mixture(&self) -> ContextMixture {
        self.family()
            .mixture(self.weight)
            .expect("weight in [0, 1]")
    }

    pub fn marginal(&self) -> PreferenceMatrix {
        self.mixture().marginal()
    }
}

/// Grid searched by [`search_split_fixture`]: utilities of alternatives 0
/// and 1 in each context (alternative 2 is pinned at 0).
pub const SPLIT_SEARCH_UTILITIES: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

/// Weights `k / 20` for `k = 1..=19`.
pub fn split_search_weights() -> Vec<f64> {
    (1..20).map(|k| f64::from(k) / 20.0).collect()
}

/// How clearly a marginal separates its Condorcet and Borda winners: the
/// smaller of the Condorcet winner's weakest majority margin `η − ½` and the
/// Borda gap between the two winners. `None` unless both winners exist, the
/// Borda winner is unique, and they differ.
pub fn split_robustness(marginal: &PreferenceMatrix) -> Option<(f64, usize, usize)> {
    let cw = condorcet_winner(marginal)?;
    let bw = match borda_winners(marginal).as_slice() {
        [b] if *b != cw => *b,
        _ => return None,
    };
    let borda = crate::oracles::borda_scores(marginal);
    let margin = (0..marginal.m())
        .filter(|&b| b != cw)
        .map(|b| marginal.eta(cw, b) - 0.5)
        .fold(f64::INFINITY, f64::min);
    Some((margin.min(borda[bw] - borda[cw]), cw, bw))
}

/// Exhaustive search for a Borda/Condorcet split over
/// [`SPLIT_SEARCH_UTILITIES`]² × [`SPLIT_SEARCH_UTILITIES`]² ×
/// [`split_search_weights`], returning the most robust candidate (first in
/// enumeration order on ties) together with its robustness.
pub fn search_split_fixture() -> Option<(SplitFixture, f64)> {
    let weights = split_search_weights();
    let mut best: Option<(SplitFixture, f64)> = None;
    for &a0 in &SPLIT_SEARCH_UTILITIES {
        for &a1 in &SPLIT_SEARCH_UTILITIES {
            let ua = [a0, a1, 0.0];
            let first = PreferenceMatrix::from_utilities(&ua).expect("finite utilities");
            for &b0 in &SPLIT_SEARCH_UTILITIES {
                for &b1 in &SPLIT_SEARCH_UTILITIES {
                    let ub = [b0, b1, 0.0];
                    let second = PreferenceMatrix::from_utilities(&ub).expect("finite utilities");
                    for &w in &weights {
                        let mix = ContextMixture::two(w, first.clone(), second.clone())
                            .expect("valid weight");
                        let marginal = mix.marginal();
                        let Some((score, cw, bw)) = split_robustness(&marginal) else {
                            continue;
                        };
                        if best.as_ref().is_none_or(|(_, s)| score > *s) {
                            let (kemeny, _) =
                                crate::oracles::kemeny_optimal(&marginal).expect("m = 3");
                            let order = kemeny.order();
                            best = Some((
                                SplitFixture {
                                    first_utilities: ua,
                                    second_utilities: ub,
                                    weight: w,
                                    condorcet_winner: cw,
                                    borda_winner: bw,
                                    kemeny: [order[0], order[1], order[2]],
                                },
                                score,
                            ));
                        }
                    }
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp2Config {
    pub family: TwoContextFamily,
    pub weights: Vec<f64>,
    pub losses: Vec<LossSpec>,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Default for Exp2Config {
    fn default() -> Self {
        Exp2Config {
            family: SPLIT_FIXTURE.family(),
            weights: (0..=20).map(|k| f64::from(k) / 20.0).collect(),
            losses: vec![
                LossSpec::btl(1.0),
                LossSpec::soft_copeland(1.0, 4.0, 0.01),
                LossSpec::soft_kemeny(0.05),
                LossSpec::Exponential,
                LossSpec::Hinge,
            ],
            seeds: (0..20).collect(),
            steps: None,
        }
    }
}

impl Exp2Config {
    pub fn validate(&self) -> Result<()> {
        check_nonempty("weights", &self.weights)?;
        check_nonempty("losses", &self.losses)?;
        check_nonempty("seeds", &self.seeds)?;
        check_steps(self.steps)?;
        if self.family.first.m() != self.family.second.m() {
            return Err(Error::DimensionMismatch {
                expected: self.family.first.m(),
                got: self.family.second.m(),
            });
        }
        if self.family.m() > KEMENY_MAX_M {
            return Err(Error::TooManyAlternatives {
                m: self.family.m(),
                max: KEMENY_MAX_M,
            });
        }
        if let Some(w) = self.weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidConfig(format!(
                "weights must lie in [0, 1], got {w}"
            )));
        }
        self.losses.iter().try_for_each(LossSpec::validate)
    }
}

/// Hidden-context aggregation. Each loss is fit to the exact mixture
/// marginal; Condorcet, Copeland and Kemeny metrics are taken on the
/// marginal, majority-winner and Pareto checks on the mixture.
///
/// Cells are enumerated weight, then loss, then seed.
pub fn run_exp2(config: &Exp2Config) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    let mixtures: Vec<ContextMixture> = config
        .weights
        .iter()
        .map(|&w| config.family.mixture(w))
        .collect::<Result<_>>()?;
    let references: Vec<Reference> = mixtures
        .par_iter()
        .map(|mix| Reference::new(mix.marginal()))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for w in 0..config.weights.len() {
        for loss in &config.losses {
            for &seed in &config.seeds {
                cells.push((w, *loss, seed));
            }
        }
    }

    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(index, &(w, loss, seed))| {
            let cfg = cell_config(&loss, derive_seed(seed, index as u64), config.steps);
            let mix = &mixtures[w];
            let outcome = references[w].evaluate(&loss, &cfg).and_then(|metrics| {
                let mixture = MixtureMetrics {
                    majority_winner_status: check_majority_winner(metrics.ranking.top(), mix),
                    pareto_status: check_pareto(&metrics.ranking, mix)?,
                };
                Ok((metrics, mixture))
            });
            let (metrics, mixture, error) = match outcome {
                Ok((metrics, mixture)) => (Some(metrics), Some(mixture), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            MetricsRecord {
                loss,
                regime: HIDDEN_CONTEXT_REGIME.to_string(),
                m: config.family.m(),
                seed,
                weight: Some(config.weights[w]),
                metrics,
                mixture,
                error,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Experiment 3
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    /// `|∂risk/∂Δ|` at each pair's converged margin, weighted by its `η`.
    Converged,
    /// `|∂loss/∂Δ|` for label `+1` on a fixed margin grid.
    Profile,
}

impl Series {
    pub fn name(self) -> &'static str {
        match self {
            Series::Converged => "converged",
            Series::Profile => "profile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientSample {
    pub loss: LossSpec,
    pub series: Series,
    pub delta: f64,
    pub grad_magnitude: f64,
}

/// `-10.0, -9.9, ..., 10.0`.
pub fn default_delta_grid() -> Vec<f64> {
    (-100..=100).map(|k| f64::from(k) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp3Config {
    pub matrix: PreferenceMatrix,
    pub losses: Vec<LossSpec>,
    pub delta_grid: Vec<f64>,
}

impl Default for Exp3Config {
    fn default() -> Self {
        Exp3Config {
            matrix: generate_regime(&RegimeSpec::new(RegimeKind::Transitive, 5))
                .expect("valid regime"),
            losses: vec![
                LossSpec::btl(1.0),
                LossSpec::soft_kemeny(1.0),
                LossSpec::soft_copeland(1.0, 1.0, 0.01),
                LossSpec::soft_copeland(1.0, 4.0, 0.01),
                LossSpec::soft_copeland(1.0, 16.0, 0.01),
                LossSpec::Exponential,
                LossSpec::Hinge,
            ],
            delta_grid: default_delta_grid(),
        }
    }
}

impl Exp3Config {
    pub fn validate(&self) -> Result<()> {
        check_nonempty("losses", &self.losses)?;
        check_nonempty("delta_grid", &self.delta_grid)?;
        if let Some(d) = self.delta_grid.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "delta_grid values must be finite, got {d}"
            )));
        }
        self.losses.iter().try_for_each(LossSpec::validate)
    }
}

/// For each loss, in order: the converged series (one sample per pair
/// `a < b`, row-major) followed by the profile series over `delta_grid`.
/// Optimization starts from zero rewards with the loss's default settings.
pub fn run_exp3(config: &Exp3Config) -> Result<Vec<GradientSample>> {
    config.validate()?;
    let per_loss: Vec<Vec<GradientSample>> = config
        .losses
        .par_iter()
        .map(|loss| {
            let result = gradient_descent(loss, &config.matrix, &OptimConfig::default_for(loss))?;
            let r = &result.final_rewards;
            let converged = config.matrix.pairs().map(|(a, b)| {
                let delta = r[a] - r[b];
                GradientSample {
                    loss: *loss,
                    series: Series::Converged,
                    delta,
                    grad_magnitude: loss
                        .conditional_risk_grad(delta, config.matrix.eta(a, b))
                        .abs(),
                }
            });
            let profile = config.delta_grid.iter().map(|&delta| GradientSample {
                loss: *loss,
                series: Series::Profile,
                delta,
                grad_magnitude: loss.grad(delta, crate::preferences::Label::Win).abs(),
            });
            Ok(converged.chain(profile).collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_loss.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Aggregate over the seeds of one (loss, regime, m, weight) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub loss: LossSpec,
    pub regime: String,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    pub n: usize,
    pub failed: usize,
    /// Over successful cells; `None` when every cell failed.
    pub copeland_agreement: Option<f64>,
    pub mean_kendall: Option<f64>,
    /// Over successful, non-vacuous cells; `None` when there are none.
    pub condorcet_rate: Option<f64>,
    pub condorcet_count: usize,
}

/// Groups appear in order of first occurrence in `records`.
pub fn summarize(records: &[MetricsRecord]) -> Vec<SummaryRow> {
    let mut index: HashMap<(String, &str, usize, Option<u64>), usize> = HashMap::new();
    let mut groups: Vec<Vec<&MetricsRecord>> = Vec::new();
    for rec in records {
        let key = (
            rec.loss.to_string(),
            rec.regime.as_str(),
            rec.m,
            rec.weight.map(f64::to_bits),
        );
        let g = *index.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(rec);
    }
    groups
        .into_iter()
        .map(|group| {
            let first = group[0];
            let ok: Vec<&CellMetrics> = group.iter().filter_map(|r| r.metrics.as_ref()).collect();
            let decided: Vec<AxiomStatus> = ok
                .iter()
                .map(|c| c.condorcet_status)
                .filter(|s| *s != AxiomStatus::Vacuous)
                .collect();
            let frac =
                |count: usize, total: usize| (total > 0).then(|| count as f64 / total as f64);
            SummaryRow {
                loss: first.loss,
                regime: first.regime.clone(),
                m: first.m,
                weight: first.weight,
                n: group.len(),
                failed: group.len() - ok.len(),
                copeland_agreement: frac(
                    ok.iter().filter(|c| c.copeland_agreement).count(),
                    ok.len(),
                ),
                mean_kendall: (!ok.is_empty()).then(|| {
                    ok.iter().map(|c| c.kendall_to_kemeny as f64).sum::<f64>() / ok.len() as f64
                }),
                condorcet_rate: frac(
                    decided
                        .iter()
                        .filter(|s| **s == AxiomStatus::Satisfied)
                        .count(),
                    decided.len(),
                ),
                condorcet_count: decided.len(),
            }
        })
        .collect()
}

fn opt_cell(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

/// Fixed-width text rendering of [`summarize`] output.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<48} {:<18} {:>2} {:>6} {:>4} {:>6} {:>8} {:>8} {:>14}",
        "loss", "regime", "m", "weight", "n", "failed", "copeland", "kendall", "condorcet(n)"
    );
    for row in rows {
        let weight = row
            .weight
            .map_or_else(|| "-".to_string(), |w| format!("{w:.3}"));
        let condorcet = format!("{} ({})", opt_cell(row.condorcet_rate), row.condorcet_count);
        let _ = writeln!(
            out,
            "{:<48} {:<18} {:>2} {:>6} {:>4} {:>6} {:>8} {:>8} {:>14}",
            row.loss.to_string(),
            row.regime,
            row.m,
            weight,
            row.n,
            row.failed,
            opt_cell(row.copeland_agreement),
            opt_cell(row.mean_kendall),
            condorcet
        );
    }
    out
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Ten significant digits, `%g` style: positional notation for decimal
/// exponents in `[-5, 10)`, scientific otherwise, trailing zeros removed.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn opt_float(value: Option<f64>) -> String {
    value.map(format_float).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordLayout {
    /// [`RECORD_HEADER`].
    Base,
    /// [`RECORD_HEADER`] followed by [`HIDDEN_CONTEXT_COLUMNS`].
    HiddenContext,
}

fn csv_string(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, row: Vec<String>| {
        w.write_record(&row).expect("in-memory write");
    };
    write(&mut w, header.split(',').map(str::to_string).collect());
    for row in rows {
        write(&mut w, row);
    }
    let bytes = w.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("fields are UTF-8")
}

/// Failed cells carry `condorcet_status = error` and empty metric fields.
pub fn records_csv(records: &[MetricsRecord], layout: RecordLayout) -> String {
    let header = match layout {
        RecordLayout::Base => RECORD_HEADER.to_string(),
        RecordLayout::HiddenContext => format!("{RECORD_HEADER},{HIDDEN_CONTEXT_COLUMNS}"),
    };
    let rows = records.iter().map(|rec| {
        let loss = &rec.loss;
        let mut row = vec![
            loss.family().name().to_string(),
            opt_float(loss.tau()),
            opt_float(loss.beta()),
            opt_float(loss.lambda()),
            rec.regime.clone(),
            rec.m.to_string(),
            rec.seed.to_string(),
        ];
        match &rec.metrics {
            Some(c) => row.extend([
                c.copeland_agreement.to_string(),
                c.kendall_to_kemeny.to_string(),
                c.condorcet_status.to_string(),
                format_float(c.expected_disagreement),
            ]),
            None => row.extend([
                String::new(),
                String::new(),
                ERROR_STATUS.to_string(),
                String::new(),
            ]),
        }
        if layout == RecordLayout::HiddenContext {
            row.push(opt_float(rec.weight));
            match &rec.mixture {
                Some(x) => row.extend([
                    x.majority_winner_status.to_string(),
                    x.pareto_status.to_string(),
                ]),
                None => row.extend([String::new(), String::new()]),
            }
        }
        row
    });
    csv_string(&header, rows)
}

pub fn gradients_csv(samples: &[GradientSample]) -> String {
    let rows = samples.iter().map(|s| {
        vec![
            s.loss.family().name().to_string(),
            opt_float(s.loss.tau()),
            opt_float(s.loss.beta()),
            s.series.name().to_string(),
            format_float(s.delta),
            format_float(s.grad_magnitude),
        ]
    });
    csv_string(GRADIENT_HEADER, rows)
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("threads must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
