mod common;

use eb_risk::risk::{risk_monte_carlo, risk_quadrature, risk_upper_from_moment};
use eb_risk::{Prior, QuadratureSpec};
use rand::Rng;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn dominance_by_second_moment() {
    let mut rng = common::rng(21);
    for _ in 0..200 {
        let g0 = common::random_centered(&mut rng, 8, 4.0);
        let g1 = common::random_centered(&mut rng, 8, 4.0);
        let sigma = 10f64.powf(rng.random_range(-1.0..1.0));
        let rep = risk_quadrature(&g0, &g1, sigma, &spec()).unwrap();
        let v = g0.variance().max(g1.variance());
        assert!(rep.risk >= 0.0 && rep.second_moment >= 0.0);
        assert!(rep.risk <= risk_upper_from_moment(rep.second_moment, v) + 1e-9);
    }
}

#[test]
fn own_prior_beats_zero_and_identity_rules() {
    let mut rng = common::rng(22);
    for _ in 0..200 {
        let g = common::random_centered(&mut rng, 8, 4.0);
        let sigma = 10f64.powf(rng.random_range(-1.0..1.0));
        let rep = risk_quadrature(&g, &g, sigma, &spec()).unwrap();
        let cap = g.variance().min(sigma * sigma);
        assert!(rep.risk <= cap + 1e-6, "risk {} > {cap} at sigma {sigma}", rep.risk);
    }
}

#[test]
fn zero_rule_risk_is_second_moment() {
    let mut rng = common::rng(23);
    let zero = Prior::point_mass(0.0);
    for _ in 0..100 {
        let g0: Prior = common::random_discrete(&mut rng, 10, 5.0).into();
        for &s in &[0.1, 1.0, 10.0] {
            let rep = risk_quadrature(&g0, &zero, s, &spec()).unwrap();
            assert!((rep.risk - g0.second_moment()).abs() <= 1e-10);
        }
    }
}

#[test]
fn mixture_outer_prior_against_monte_carlo() {
    let g0: Prior = eb_risk::GaussianMixturePrior::new(vec![-1.5, 1.0], vec![0.3, 0.8], vec![0.4, 0.6])
        .unwrap()
        .into();
    let g1 = Prior::rademacher();
    let s = QuadratureSpec { seed: 5, ..spec() };
    for &sigma in &[0.4, 1.0, 3.0] {
        let q = risk_quadrature(&g0, &g1, sigma, &s).unwrap();
        let mc = risk_monte_carlo(&g0, &g1, sigma, &s).unwrap();
        let se = mc.std_error.unwrap();
        assert!((q.risk - mc.risk).abs() <= 4.0 * se, "{} vs {} ± {se}", q.risk, mc.risk);
    }
}

#[test]
fn quadrature_converges_in_node_count() {
    let g0 = Prior::rademacher();
    let g1: Prior = eb_risk::priors::DiscretePrior::new(vec![-2.0, 0.0, 1.0], vec![0.2, 0.5, 0.3])
        .unwrap()
        .into();
    let at = |sigma: f64, n: usize| {
        risk_quadrature(&g0, &g1, sigma, &QuadratureSpec { gh_nodes: n, ..spec() })
            .unwrap()
            .risk
    };
    for &sigma in &[1.0, 4.0] {
        assert!((at(sigma, 121) - at(sigma, 241)).abs() < 1e-9, "sigma {sigma}");
    }
    // Sharper posterior-mean transitions at small σ need more nodes.
    assert!((at(0.3, 121) - at(0.3, 481)).abs() < 1e-3);
    assert!((at(0.3, 241) - at(0.3, 481)).abs() < 1e-5);
}
