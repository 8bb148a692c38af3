mod common;

use eb_risk::priors::DiscretePrior;
use eb_risk::{Likelihood, Prior};
use proptest::prelude::*;

fn discrete_prior() -> impl Strategy<Value = DiscretePrior> {
    prop::collection::vec((-10.0f64..10.0, 0.01f64..1.0), 1..=20).prop_map(|pairs| {
        let (atoms, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        DiscretePrior::from_unnormalized(atoms, weights).unwrap()
    })
}

fn sigma() -> impl Strategy<Value = f64> {
    (-3.0f64..3.9).prop_map(|e| 10f64.powf(e).clamp(0.05, 50.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn tweedie_matches_direct_mean(p in discrete_prior(), s in sigma(), u in -1.0f64..1.0) {
        let x = u * (10.0 * s + 10.0);
        let prior = Prior::Discrete(p);
        let lik = Likelihood::new(s).unwrap();
        let direct = lik.posterior_mean(&prior, x);
        let tweedie = lik.posterior_mean_tweedie(&prior, x);
        prop_assert!((direct - tweedie).abs() <= 1e-8 * (1.0 + x.abs()), "{direct} vs {tweedie}");
    }

    #[test]
    fn posterior_mean_in_convex_hull(p in discrete_prior(), s in sigma(), x in -200.0f64..200.0) {
        let (lo, hi) = (p.atoms()[0], *p.atoms().last().unwrap());
        let m = Likelihood::new(s).unwrap().posterior_mean(&Prior::Discrete(p), x);
        prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
    }

    #[test]
    fn second_moment_dominates_squared_mean(p in discrete_prior(), s in sigma(), x in -60.0f64..60.0) {
        let prior = Prior::Discrete(p);
        let lik = Likelihood::new(s).unwrap();
        let m = lik.posterior_mean(&prior, x);
        let m2 = lik.posterior_second_moment(&prior, x);
        prop_assert!(m2 >= m * m - 1e-12 * (1.0 + m2));
    }

    #[test]
    fn posterior_mean_nondecreasing(p in discrete_prior(), s in sigma(), x in -60.0f64..60.0, dx in 1e-3f64..5.0) {
        let prior = Prior::Discrete(p);
        let lik = Likelihood::new(s).unwrap();
        let a = lik.posterior_mean(&prior, x);
        let b = lik.posterior_mean(&prior, x + dx);
        prop_assert!(b >= a - 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn posterior_tail_is_a_survival_function(p in discrete_prior(), s in sigma(), x in -30.0f64..30.0,
                                             t in -12.0f64..12.0, dt in 0.0f64..5.0) {
        let prior = Prior::Discrete(p);
        let lik = Likelihood::new(s).unwrap();
        let a = lik.posterior_tail(&prior, x, t);
        let b = lik.posterior_tail(&prior, x, t + dt);
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(b <= a + 1e-15);
    }
}

/// Finite-difference oracle for the score on Gaussian mixtures.
#[test]
fn score_matches_finite_difference_of_log_density() {
    let mut rng = common::rng(11);
    for _ in 0..50 {
        let d = common::random_discrete(&mut rng, 6, 4.0);
        let prior = Prior::Discrete(d);
        let lik = Likelihood::new(1.3).unwrap();
        for &x in &[-5.0, -1.0, 0.3, 2.0, 7.0] {
            let h = 1e-5;
            let fd = (lik.log_marginal_density(&prior, x + h) - lik.log_marginal_density(&prior, x - h))
                / (2.0 * h);
            let sc = lik.marginal_score(&prior, x);
            assert!((fd - sc).abs() < 1e-6 * (1.0 + sc.abs()), "{fd} vs {sc}");
        }
    }
}

/// A mixture whose components all share one variance τ² equals, after
/// conditioning, the discrete prior on the means convolved with N(0, σ² + τ²).
#[test]
fn mixture_marginal_matches_discrete_with_inflated_noise() {
    use eb_risk::GaussianMixturePrior;
    let means = vec![-2.0, 0.5, 3.0];
    let weights = vec![0.3, 0.5, 0.2];
    let tau2 = 0.7;
    let mix: Prior = GaussianMixturePrior::new(means.clone(), vec![tau2; 3], weights.clone())
        .unwrap()
        .into();
    let disc: Prior = DiscretePrior::new(means, weights).unwrap().into();
    let sigma: f64 = 1.1;
    let lm = Likelihood::new(sigma).unwrap();
    let ld = Likelihood::new((sigma * sigma + tau2).sqrt()).unwrap();
    for &x in &[-6.0, -1.0, 0.0, 2.5, 9.0] {
        let a = lm.log_marginal_density(&mix, x);
        let b = ld.log_marginal_density(&disc, x);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        assert!((lm.marginal_score(&mix, x) - ld.marginal_score(&disc, x)).abs() < 1e-12);
    }
}
