//! Exact social-choice computations over a [`PreferenceMatrix`]: pairwise
//! majority, Copeland, Condorcet, Borda, Kemeny, Kendall distance, and the
//! axiom checks used to score learned rankings.
//!
//! Everything here is brute force and intended as ground truth for small m.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preferences::{ContextMixture, PreferenceMatrix};

/// `|eta − ½|` at or below this is a majority tie.
pub const TIE_TOL: f64 = 1e-12;

/// Largest m accepted by the exhaustive Kemeny search (9! rankings).
pub const KEMENY_MAX_M: usize = 9;

/// A strict total order; position 0 is the best alternative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ranking(Vec<usize>);

impl TryFrom<Vec<usize>> for Ranking {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Ranking::new(order)
    }
}

impl From<Ranking> for Vec<usize> {
    fn from(r: Ranking) -> Vec<usize> {
        r.0
    }
}

impl Ranking {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        let mut seen = vec![false; m];
        for &a in &order {
            if a >= m || std::mem::replace(&mut seen[a], true) {
                return Err(Error::InvalidRanking(format!(
                    "{order:?} is not a permutation of 0..{m}"
                )));
            }
        }
        Ok(Ranking(order))
    }

    pub fn identity(m: usize) -> Self {
        Ranking((0..m).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> usize {
        self.0[0]
    }

    pub fn reversed(&self) -> Ranking {
        Ranking(self.0.iter().rev().copied().collect())
    }

    /// `positions()[a]` is the rank of alternative `a`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (p, &a) in self.0.iter().enumerate() {
            pos[a] = p;
        }
        pos
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `sign(eta[a][b] − ½)` with ties inside [`TIE_TOL`].
pub fn majority_sign(matrix: &PreferenceMatrix, a: usize, b: usize) -> i8 {
    let d = matrix.eta(a, b) - 0.5;
    if d.abs() <= TIE_TOL {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopelandResult {
    pub scores: Vec<f64>,
    pub winners: Vec<usize>,
}

/// Indices attaining the maximum of `scores` (exact comparison).
fn argmax_set(scores: &[f64]) -> Vec<usize> {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..scores.len()).filter(|&a| scores[a] == best).collect()
}

/// Wins minus losses in pairwise majority contests.
pub fn copeland(matrix: &PreferenceMatrix) -> CopelandResult {
    let m = matrix.m();
    let scores: Vec<f64> = (0..m)
        .map(|a| {
            (0..m)
                .filter(|&b| b != a)
                .map(|b| f64::from(majority_sign(matrix, a, b)))
                .sum()
        })
        .collect();
    let winners = argmax_set(&scores);
    CopelandResult { scores, winners }
}

/// The alternative that strictly beats every other by majority, if any.
pub fn condorcet_winner(matrix: &PreferenceMatrix) -> Option<usize> {
    let m = matrix.m();
    (0..m).find(|&a| {
        (0..m)
            .filter(|&b| b != a)
            .all(|b| majority_sign(matrix, a, b) == 1)
    })
}

/// Expected pairwise wins against uniformly drawn opponents, unnormalized:
/// `Σ_{b≠a} eta[a][b]`.
pub fn borda_scores(matrix: &PreferenceMatrix) -> Vec<f64> {
    let m = matrix.m();
    (0..m)
        .map(|a| (0..m).filter(|&b| b != a).map(|b| matrix.eta(a, b)).sum())
        .collect()
}

pub fn borda_winners(matrix: &PreferenceMatrix) -> Vec<usize> {
    argmax_set(&borda_scores(matrix))
}

/// Number of discordant pairs.
pub fn kendall_distance(p: &Ranking, q: &Ranking) -> Result<usize> {
    check_dims(p.len(), q.len())?;
    let qpos = q.positions();
    let mapped: Vec<usize> = p.order().iter().map(|&a| qpos[a]).collect();
    let mut count = 0;
    for i in 0..mapped.len() {
        for j in (i + 1)..mapped.len() {
            if mapped[i] > mapped[j] {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Probability that a uniformly drawn comparison disagrees with `rank`.
pub fn expected_disagreement(rank: &Ranking, matrix: &PreferenceMatrix) -> Result<f64> {
    check_dims(matrix.m(), rank.len())?;
    Ok(disagreement_with_positions(&rank.positions(), matrix))
}

fn disagreement_with_positions(pos: &[usize], matrix: &PreferenceMatrix) -> f64 {
    let m = matrix.m();
    let mut total = 0.0;
    for a in 0..m {
        for b in (a + 1)..m {
            // eta[loser][winner]
            total += if pos[a] < pos[b] {
                matrix.eta(b, a)
            } else {
                matrix.eta(a, b)
            };
        }
    }
    total / matrix.pair_count() as f64
}

/// Rearranges `perm` into the next permutation in lexicographic order.
/// Returns `false` once the last permutation has been passed.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn check_kemeny_size(m: usize) -> Result<()> {
    if m > KEMENY_MAX_M {
        return Err(Error::TooManyAlternatives {
            m,
            max: KEMENY_MAX_M,
        });
    }
    Ok(())
}

/// Visits every ranking in lexicographic order with its disagreement.
fn for_each_ranking(matrix: &PreferenceMatrix, mut visit: impl FnMut(&[usize], f64)) {
    let m = matrix.m();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut pos = vec![0; m];
    loop {
        for (p, &a) in perm.iter().enumerate() {
            pos[a] = p;
        }
        visit(&perm, disagreement_with_positions(&pos, matrix));
        if !next_permutation(&mut perm) {
            break;
        }
    }
}

/// Exhaustive Kemeny aggregation. Returns the lexicographically first
/// ranking minimizing [`expected_disagreement`], with its value.
pub fn kemeny_optimal(matrix: &PreferenceMatrix) -> Result<(Ranking, f64)> {
    check_kemeny_size(matrix.m())?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_ranking(matrix, |perm, value| {
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((perm.to_vec(), value));
        }
    });
    let (order, value) = best.expect("at least one ranking");
    Ok((Ranking(order), value))
}

/// All Kemeny-optimal rankings (values within [`TIE_TOL`] of the minimum),
/// in lexicographic order, with the minimum value.
pub fn kemeny_optimal_set(matrix: &PreferenceMatrix) -> Result<(Vec<Ranking>, f64)> {
    check_kemeny_size(matrix.m())?;
    let mut best = f64::INFINITY;
    let mut set: Vec<(Vec<usize>, f64)> = Vec::new();
    for_each_ranking(matrix, |perm, value| {
        if value < best - TIE_TOL {
            best = value;
            set.retain(|(_, v)| *v <= best + TIE_TOL);
        }
        if value <= best + TIE_TOL {
            best = best.min(value);
            set.push((perm.to_vec(), value));
        }
    });
    set.retain(|(_, v)| *v <= best + TIE_TOL);
    Ok((set.into_iter().map(|(o, _)| Ranking(o)).collect(), best))
}

/// Smallest Kendall distance from `rank` to any ranking in `targets`.
pub fn kendall_to_set(rank: &Ranking, targets: &[Ranking]) -> Result<usize> {
    let mut best = None;
    for t in targets {
        let d = kendall_distance(rank, t)?;
        best = Some(best.map_or(d, |b: usize| b.min(d)));
    }
    best.ok_or_else(|| Error::InvalidArgument("empty target set".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomStatus {
    Satisfied,
    Violated,
    Vacuous,
}

impl AxiomStatus {
    pub fn name(self) -> &'static str {
        match self {
            AxiomStatus::Satisfied => "satisfied",
            AxiomStatus::Violated => "violated",
            AxiomStatus::Vacuous => "vacuous",
        }
    }
}

impl fmt::Display for AxiomStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Condorcet,
    MajorityWinner,
    Pareto,
}

/// Serialized as `{"axiom": ..., "status": ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub status: AxiomStatus,
}

/// Vacuous when no Condorcet winner exists.
pub fn check_condorcet_criterion(selected: usize, matrix: &PreferenceMatrix) -> AxiomStatus {
    match condorcet_winner(matrix) {
        None => AxiomStatus::Vacuous,
        Some(w) if w == selected => AxiomStatus::Satisfied,
        Some(_) => AxiomStatus::Violated,
    }
}

/// The alternative that is the Condorcet winner of contexts holding more
/// than half the total weight. Contexts without a Condorcet winner abstain.
pub fn majority_winner(mix: &ContextMixture) -> Option<usize> {
    let mut votes = vec![0.0; mix.m()];
    for ctx in mix.contexts() {
        if let Some(w) = condorcet_winner(&ctx.matrix) {
            votes[w] += ctx.weight;
        }
    }
    votes.iter().position(|&v| v > 0.5)
}

pub fn check_majority_winner(selected: usize, mix: &ContextMixture) -> AxiomStatus {
    match majority_winner(mix) {
        None => AxiomStatus::Vacuous,
        Some(w) if w == selected => AxiomStatus::Satisfied,
        Some(_) => AxiomStatus::Violated,
    }
}

/// Violated iff some pair is strictly preferred the same way in every
/// context while `rank` orders it the other way.
pub fn check_pareto(rank: &Ranking, mix: &ContextMixture) -> Result<AxiomStatus> {
    let m = mix.m();
    check_dims(m, rank.len())?;
    let pos = rank.positions();
    for a in 0..m {
        for b in 0..m {
            if a == b || pos[a] < pos[b] {
                continue;
            }
            // rank places b above a
            let unanimous = mix
                .contexts()
                .iter()
                .all(|ctx| ctx.matrix.eta(a, b) > 0.5 + TIE_TOL);
            if unanimous {
                return Ok(AxiomStatus::Violated);
            }
        }
    }
    Ok(AxiomStatus::Satisfied)
}
