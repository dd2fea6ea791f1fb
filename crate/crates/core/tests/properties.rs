use proptest::prelude::*;

use diffvote::oracles::{borda_scores, copeland, expected_disagreement, kendall_distance};
use diffvote::{
    induced_ranking, population_gradient, population_objective, soft_copeland_score,
    ContextMixture, Label, LossSpec, PreferenceMatrix, Ranking,
};

fn loss_spec() -> impl Strategy<Value = LossSpec> {
    prop_oneof![
        (0.1f64..3.0).prop_map(LossSpec::btl),
        (0.1f64..3.0).prop_map(LossSpec::soft_kemeny),
        (0.1f64..3.0, 0.5f64..20.0, 0.001f64..0.5)
            .prop_map(|(t, b, l)| LossSpec::soft_copeland(t, b, l)),
        Just(LossSpec::Exponential),
        Just(LossSpec::Hinge),
    ]
}

fn matrix(m: usize) -> impl Strategy<Value = PreferenceMatrix> {
    prop::collection::vec(0.0f64..=1.0, m * (m - 1) / 2).prop_map(move |upper| {
        let mut it = upper.into_iter();
        PreferenceMatrix::from_upper(m, |_, _| it.next().unwrap()).unwrap()
    })
}

fn matrix_and_rewards() -> impl Strategy<Value = (PreferenceMatrix, Vec<f64>)> {
    (2usize..7).prop_flat_map(|m| (matrix(m), prop::collection::vec(-3.0f64..3.0, m)))
}

fn permutation(m: usize) -> impl Strategy<Value = Ranking> {
    Just((0..m).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Ranking::new(v).unwrap())
}

proptest! {
    #[test]
    fn objective_is_translation_invariant(
        spec in loss_spec(),
        (mat, r) in matrix_and_rewards(),
        c in -5.0f64..5.0,
    ) {
        let shifted: Vec<f64> = r.iter().map(|x| x + c).collect();
        let a = population_objective(&spec, &r, &mat).unwrap();
        let b = population_objective(&spec, &shifted, &mat).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn gradient_components_sum_to_zero(spec in loss_spec(), (mat, r) in matrix_and_rewards()) {
        let g = population_gradient(&spec, &r, &mat).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() <= 1e-10);
    }

    #[test]
    fn losses_are_label_symmetric(spec in loss_spec(), delta in -5.0f64..5.0) {
        prop_assert_eq!(spec.value(delta, Label::Win), spec.value(-delta, Label::Loss));
        prop_assert_eq!(spec.grad(delta, Label::Win), -spec.grad(-delta, Label::Loss));
    }

    #[test]
    fn conditional_risk_is_label_average(spec in loss_spec(), delta in -5.0f64..5.0, eta in 0.0f64..=1.0) {
        let direct = eta * spec.value(delta, Label::Win) + (1.0 - eta) * spec.value(delta, Label::Loss);
        let risk = spec.conditional_risk(delta, eta);
        prop_assert!((risk - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn mixture_marginal_is_weight_linear(
        a in matrix(4), b in matrix(4), c in matrix(4),
        w in 0.0f64..=1.0, v in 0.0f64..=1.0,
    ) {
        // (w, v) split between a and b, the rest on c
        let wa = w * v;
        let wb = w * (1.0 - v);
        let wc = 1.0 - wa - wb;
        let flat = ContextMixture::from_pairs([(wa, a.clone()), (wb, b.clone()), (wc, c.clone())]).unwrap();
        let inner = ContextMixture::two(v, a, b).unwrap().marginal();
        let nested = ContextMixture::two(w, inner, c).unwrap().marginal();
        let flat = flat.marginal();
        for x in 0..4 {
            for y in 0..4 {
                prop_assert!((flat.eta(x, y) - nested.eta(x, y)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn induced_ranking_ignores_shift_and_positive_scale(
        r in prop::collection::vec(-3.0f64..3.0, 2..8),
        c in -3.0f64..3.0,
        s in 0.5f64..4.0,
    ) {
        // shifts can merge nearly equal rewards; keep them apart
        let mut sorted = r.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-9));
        let moved: Vec<f64> = r.iter().map(|x| s * x + c).collect();
        prop_assert_eq!(induced_ranking(&r), induced_ranking(&moved));
    }

    #[test]
    fn disagreement_of_ranking_and_reverse_sum_to_one(
        (mat, rank) in (2usize..7).prop_flat_map(|m| (matrix(m), permutation(m))),
    ) {
        let d = expected_disagreement(&rank, &mat).unwrap();
        let rev = expected_disagreement(&rank.reversed(), &mat).unwrap();
        prop_assert!((d + rev - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kendall_distance_to_reverse_is_maximal(rank in (2usize..8).prop_flat_map(permutation)) {
        let m = rank.len();
        prop_assert_eq!(kendall_distance(&rank, &rank.reversed()).unwrap(), m * (m - 1) / 2);
    }

    #[test]
    fn copeland_and_borda_totals_are_fixed(mat in (2usize..8).prop_flat_map(matrix)) {
        let m = mat.m() as f64;
        prop_assert_eq!(copeland(&mat).scores.iter().sum::<f64>(), 0.0);
        let borda: f64 = borda_scores(&mat).iter().sum();
        prop_assert!((borda - m * (m - 1.0) / 2.0).abs() <= 1e-9);
    }

    #[test]
    fn soft_copeland_scores_sum_to_zero(
        r in prop::collection::vec(-2.0f64..2.0, 2..8),
        tau in 0.1f64..2.0,
        beta in 0.5f64..50.0,
    ) {
        let total: f64 = (0..r.len()).map(|x| soft_copeland_score(&r, x, tau, beta).unwrap()).sum();
        prop_assert!(total.abs() <= 1e-12);
    }

    #[test]
    fn soft_kemeny_gradient_sign_is_minus_label(tau in 0.05f64..3.0, z in -30.0f64..30.0) {
        let spec = LossSpec::soft_kemeny(tau);
        prop_assert!(spec.grad(z * tau, Label::Win) < 0.0);
        prop_assert!(spec.grad(z * tau, Label::Loss) > 0.0);
    }

    #[test]
    fn soft_copeland_gradient_is_negative_for_nonpositive_margins(
        tau in 0.1f64..3.0, beta in 0.5f64..50.0, lambda in 0.001f64..1.0, f in 0.0f64..=1.0,
    ) {
        let spec = LossSpec::soft_copeland(tau, beta, lambda);
        let band = beta / (4.0 * tau * lambda);
        prop_assert!(spec.grad(-f * band, Label::Win) < 0.0);
        prop_assert!(spec.grad(f * band, Label::Loss) > 0.0);
    }
}

/// For `y = +1` and `Δ > 0` the regularizer overtakes the saturating edge
/// term long before `|Δ|` reaches `β/(4τλ)`; the sign guarantee holds only up
/// to the first positive root.
#[test]
fn soft_copeland_gradient_turns_positive_inside_the_ratio_band() {
    let (tau, beta, lambda) = (1.0, 4.0, 0.01);
    let spec = LossSpec::soft_copeland(tau, beta, lambda);
    let band = beta / (4.0 * tau * lambda);
    assert_eq!(band, 100.0);
    let g = spec.grad(10.0, Label::Win);
    assert!(g > 0.0, "{g}");
    // the regularizer accounts for almost all of it
    assert!((g - lambda * 10.0).abs() < 1e-3);

    let root = diffvote::check::soft_copeland_first_root(tau, beta, lambda);
    assert!(root > 0.0 && root < band);
    let below = (1..1000).map(|k| root * f64::from(k) / 1000.0);
    assert!(below.into_iter().all(|d| spec.grad(d, Label::Win) < 0.0));
    assert!(spec.grad(root * 1.001, Label::Win) > 0.0);
}
