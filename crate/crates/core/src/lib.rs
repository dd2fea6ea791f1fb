//! Differentiable pairwise-preference losses whose population optima line up
//! with classical voting rules, exact brute-force social-choice oracles, and
//! a small experiment harness built on both.
//!
//! ```
//! use diffvote::{generate_regime, gradient_descent, induced_ranking, kemeny_optimal};
//! use diffvote::{LossSpec, OptimConfig, RegimeKind, RegimeSpec};
//!
//! let matrix = generate_regime(&RegimeSpec::new(RegimeKind::Transitive, 4)).unwrap();
//! let spec = LossSpec::soft_kemeny(0.5);
//! let result = gradient_descent(&spec, &matrix, &OptimConfig::default_for(&spec)).unwrap();
//! let (kemeny, _) = kemeny_optimal(&matrix).unwrap();
//! assert_eq!(induced_ranking(&result.final_rewards), kemeny);
//! ```

pub mod check;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod optimizer;
pub mod oracles;
pub mod preferences;
pub mod rng;

pub use check::{run_checks, CheckOptions, CheckReport, PropertyResult};
pub use error::{Error, Result};
pub use experiments::{
    run_exp1, run_exp2, run_exp3, summarize, Exp2Config, Exp3Config, ExperimentGrid,
    GradientSample, MetricsRecord, Series, SplitFixture, SummaryRow, TwoContextFamily,
    SPLIT_FIXTURE,
};
pub use losses::{
    btl_optimal_margin, sigmoid, soft_copeland_edge, soft_copeland_score, win_probability, Family,
    LossSpec,
};
pub use optimizer::{
    finite_difference_check, gradient_descent, induced_ranking, population_gradient,
    population_objective, FdReport, Init, OptimConfig, OptimResult, RewardVector,
};
pub use oracles::{
    borda_scores, check_condorcet_criterion, check_majority_winner, check_pareto, condorcet_winner,
    copeland, expected_disagreement, kemeny_optimal, kemeny_optimal_set, kendall_distance,
    majority_sign, Axiom, AxiomCheck, AxiomStatus, CopelandResult, Ranking,
};
pub use preferences::{
    generate_regime, sample_comparison, sample_context_comparison, Comparison, ContextMixture,
    Label, PairDistribution, PreferenceMatrix, RegimeKind, RegimeSpec, WeightedContext,
};
