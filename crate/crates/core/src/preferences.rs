//! Population preference structures and comparison sampling.
//!
//! A [`PreferenceMatrix`] holds `eta[a][b] = Pr(a beats b)` over `m`
//! alternatives. Matrices are built so that `eta[b][a] = 1 - eta[a][b]`
//! holds exactly as computed; the upper triangle is the source of truth.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::sigmoid;

/// Tolerance for probability identities (complementarity, weight sums).
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct PreferenceMatrix {
    m: usize,
    eta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRepr {
    m: usize,
    eta: Vec<Vec<f64>>,
}

impl TryFrom<MatrixRepr> for PreferenceMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        if repr.eta.len() != repr.m {
            return Err(Error::InvalidMatrix(format!(
                "declared m = {} but eta has {} rows",
                repr.m,
                repr.eta.len()
            )));
        }
        PreferenceMatrix::from_rows(repr.eta)
    }
}

impl From<PreferenceMatrix> for MatrixRepr {
    fn from(matrix: PreferenceMatrix) -> Self {
        MatrixRepr {
            m: matrix.m,
            eta: matrix.rows(),
        }
    }
}

impl PreferenceMatrix {
    /// Builds a matrix from its strict upper triangle. `upper(a, b)` is called
    /// once for every `a < b`; the lower triangle is filled with the exact
    /// complement.
    pub fn from_upper(m: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidMatrix(format!("need m >= 2, got {m}")));
        }
        let mut eta = vec![0.5; m * m];
        for a in 0..m {
            for b in (a + 1)..m {
                let p = upper(a, b);
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidMatrix(format!(
                        "eta[{a}][{b}] = {p} is not a probability"
                    )));
                }
                eta[a * m + b] = p;
                eta[b * m + a] = 1.0 - p;
            }
        }
        Ok(PreferenceMatrix { m, eta })
    }

    /// Validates a full grid. Off-diagonal pairs must be complementary
    /// within [`PROB_TOL`] and the diagonal must be one-half.
    #[allow(clippy::needless_range_loop)]
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::InvalidMatrix(format!("need m >= 2, got {m}")));
        }
        for (a, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidMatrix(format!(
                    "row {a} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (b, &p) in row.iter().enumerate() {
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidMatrix(format!(
                        "eta[{a}][{b}] = {p} is not a probability"
                    )));
                }
            }
            if (row[a] - 0.5).abs() > PROB_TOL {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal eta[{a}][{a}] = {} must be 0.5",
                    row[a]
                )));
            }
        }
        for a in 0..m {
            for b in (a + 1)..m {
                let sum = rows[a][b] + rows[b][a];
                if (sum - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidMatrix(format!(
                        "eta[{a}][{b}] + eta[{b}][{a}] = {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(PreferenceMatrix {
            m,
            eta: rows.into_iter().flatten().collect(),
        })
    }

    /// Every off-diagonal entry equal to one-half.
    pub fn indifferent(m: usize) -> Result<Self> {
        Self::from_upper(m, |_, _| 0.5)
    }

    /// Logistic preferences from latent utilities: `eta[a][b] = σ(u_a − u_b)`.
    pub fn from_utilities(utilities: &[f64]) -> Result<Self> {
        if utilities.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidMatrix("utilities must be finite".into()));
        }
        Self::from_upper(utilities.len(), |a, b| sigmoid(utilities[a] - utilities[b]))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn eta(&self, a: usize, b: usize) -> f64 {
        self.eta[a * self.m + b]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.eta.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Unordered pairs `(a, b)` with `a < b`, in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.m;
        (0..m).flat_map(move |a| ((a + 1)..m).map(move |b| (a, b)))
    }

    pub fn pair_count(&self) -> usize {
        self.m * (self.m - 1) / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedContext {
    pub weight: f64,
    pub matrix: PreferenceMatrix,
}

/// Hidden-context model: each comparison first draws a context by weight,
/// then draws its label from that context's matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct ContextMixture {
    contexts: Vec<WeightedContext>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureRepr {
    contexts: Vec<WeightedContext>,
}

impl TryFrom<MixtureRepr> for ContextMixture {
    type Error = Error;

    fn try_from(repr: MixtureRepr) -> Result<Self> {
        ContextMixture::new(repr.contexts)
    }
}

impl From<ContextMixture> for MixtureRepr {
    fn from(mix: ContextMixture) -> Self {
        MixtureRepr {
            contexts: mix.contexts,
        }
    }
}

impl ContextMixture {
    pub fn new(contexts: Vec<WeightedContext>) -> Result<Self> {
        let first = contexts
            .first()
            .ok_or_else(|| Error::InvalidMixture("mixture needs at least one context".into()))?;
        let m = first.matrix.m();
        let mut total = 0.0;
        for (c, ctx) in contexts.iter().enumerate() {
            if !ctx.weight.is_finite() || ctx.weight < 0.0 {
                return Err(Error::InvalidMixture(format!(
                    "context {c} has invalid weight {}",
                    ctx.weight
                )));
            }
            if ctx.matrix.m() != m {
                return Err(Error::InvalidMixture(format!(
                    "context {c} has m = {}, expected {m}",
                    ctx.matrix.m()
                )));
            }
            total += ctx.weight;
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidMixture(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(ContextMixture { contexts })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, PreferenceMatrix)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(weight, matrix)| WeightedContext { weight, matrix })
                .collect(),
        )
    }

    /// A mixture of two contexts with weights `(w, 1 - w)`.
    pub fn two(w: f64, first: PreferenceMatrix, second: PreferenceMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidMixture(format!("weight {w} outside [0, 1]")));
        }
        Self::from_pairs([(w, first), (1.0 - w, second)])
    }

    pub fn contexts(&self) -> &[WeightedContext] {
        &self.contexts
    }

    pub fn m(&self) -> usize {
        self.contexts[0].matrix.m()
    }

    /// Marginal preferences with the context integrated out.
    pub fn marginal(&self) -> PreferenceMatrix {
        let m = self.m();
        PreferenceMatrix::from_upper(m, |a, b| {
            let p: f64 = self
                .contexts
                .iter()
                .map(|ctx| ctx.weight * ctx.matrix.eta(a, b))
                .sum();
            p.clamp(0.0, 1.0)
        })
        .expect("convex combination of valid matrices is valid")
    }
}

/// Pairwise label: `Win` means the first element of the pair was preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Win,
    Loss,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Win, Label::Loss];

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Win => 1.0,
            Label::Loss => -1.0,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Win),
            -1 => Ok(Label::Loss),
            other => Err(format!("label must be +1 or -1, got {other}")),
        }
    }
}

impl From<Label> for i8 {
    fn from(y: Label) -> i8 {
        match y {
            Label::Win => 1,
            Label::Loss => -1,
        }
    }
}

/// One observed comparison `(i, j, y, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub i: usize,
    pub j: usize,
    pub y: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<usize>,
}

/// Distribution over which pair gets compared. Only the uniform
/// distribution over unordered pairs is supported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDistribution {
    #[default]
    Uniform,
}

/// Draws an unordered pair, orients it as `(min, max)`, and labels it with
/// `Pr(y = +1) = eta[i][j]`.
pub fn sample_comparison<R: Rng + ?Sized>(
    matrix: &PreferenceMatrix,
    pairs: PairDistribution,
    rng: &mut R,
) -> Comparison {
    let PairDistribution::Uniform = pairs;
    let m = matrix.m();
    let a = rng.random_range(0..m);
    let mut b = rng.random_range(0..m - 1);
    if b >= a {
        b += 1;
    }
    let (i, j) = (a.min(b), a.max(b));
    let u: f64 = rng.random();
    let y = if u < matrix.eta(i, j) {
        Label::Win
    } else {
        Label::Loss
    };
    Comparison {
        i,
        j,
        y,
        context: None,
    }
}

pub fn sample_context_comparison<R: Rng + ?Sized>(
    mix: &ContextMixture,
    pairs: PairDistribution,
    rng: &mut R,
) -> Comparison {
    let c = if mix.contexts().len() == 1 {
        0
    } else {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (c, ctx) in mix.contexts().iter().enumerate() {
            if ctx.weight <= 0.0 {
                continue;
            }
            acc += ctx.weight;
            chosen = Some(c);
            if u < acc {
                break;
            }
        }
        chosen.expect("a valid mixture has positive total weight")
    };
    let mut cmp = sample_comparison(&mix.contexts()[c].matrix, pairs, rng);
    cmp.context = Some(c);
    cmp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Transitive,
    NearTie,
    Cyclic,
    SharplyTransitive,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 4] = [
        RegimeKind::Transitive,
        RegimeKind::NearTie,
        RegimeKind::Cyclic,
        RegimeKind::SharplyTransitive,
    ];

    pub fn default_scale(self) -> f64 {
        match self {
            RegimeKind::Transitive => 1.0,
            RegimeKind::NearTie => 0.05,
            RegimeKind::Cyclic => 0.25,
            RegimeKind::SharplyTransitive => 5.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegimeKind::Transitive => "transitive",
            RegimeKind::NearTie => "near_tie",
            RegimeKind::Cyclic => "cyclic",
            RegimeKind::SharplyTransitive => "sharply_transitive",
        }
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RegimeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegimeKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| {
                Error::InvalidRegime(format!(
                    "unknown regime {s:?}; expected one of transitive, near_tie, cyclic, sharply_transitive"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub kind: RegimeKind,
    pub m: usize,
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

impl RegimeSpec {
    /// Spec with the regime's default sharpness and seed 0.
    pub fn new(kind: RegimeKind, m: usize) -> Self {
        RegimeSpec {
            kind,
            m,
            scale: kind.default_scale(),
            seed: 0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidRegime(format!("need m >= 2, got {}", self.m)));
        }
        if self.kind == RegimeKind::Cyclic && self.m < 3 {
            return Err(Error::InvalidRegime(format!(
                "a cycle needs m >= 3, got {}",
                self.m
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidRegime(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Builds the population matrix for a regime.
///
/// The three utility regimes use evenly spaced utilities
/// `u_a = (m - 1 - a) * scale` under a logistic link, so alternative 0 is
/// best. The cyclic regime is the circulant tournament in which each
/// alternative beats the next `⌊(m - 1) / 2⌋` alternatives (mod m) with
/// probability `0.5 + d`, `d = min(scale, 0.49)`; for even m the opposite
/// pair is an exact tie.
pub fn generate_regime(spec: &RegimeSpec) -> Result<PreferenceMatrix> {
    spec.validate()?;
    let m = spec.m;
    match spec.kind {
        RegimeKind::Transitive | RegimeKind::NearTie | RegimeKind::SharplyTransitive => {
            let utilities: Vec<f64> = (0..m).map(|a| (m - 1 - a) as f64 * spec.scale).collect();
            PreferenceMatrix::from_utilities(&utilities)
        }
        RegimeKind::Cyclic => {
            let d = spec.scale.min(0.49);
            let reach = (m - 1) / 2;
            PreferenceMatrix::from_upper(m, |a, b| {
                let ahead = (b + m - a) % m;
                if ahead <= reach {
                    0.5 + d
                } else if m.is_multiple_of(2) && ahead == m / 2 {
                    0.5
                } else {
                    0.5 - d
                }
            })
        }
    }
}
