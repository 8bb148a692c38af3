//! Marginal density, score and posterior functionals under `X | θ ~ N(θ, σ²)`.
//!
//! Every prior is handled as a list of Gaussian components `(log wᵢ, mᵢ, τᵢ²)`,
//! with atoms of a discrete prior being components with `τᵢ² = 0`. Sums over
//! components are formed in the log domain with a max shift, so densities far
//! in the tails (small σ, large |x|) never underflow to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{normal_logpdf, std_normal_sf};
use crate::priors::Prior;

/// Gaussian observation noise with known standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Likelihood {
    sigma: f64,
}

/// One prior component after conditioning on `X = x`.
#[derive(Debug, Clone, Copy)]
struct Conditioned {
    /// `log wᵢ + log N(x; mᵢ, σ² + τᵢ²)`
    log_joint: f64,
    /// d/dx of the component's log marginal density.
    score: f64,
    post_mean: f64,
    post_var: f64,
}

impl Likelihood {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn for_each_component(&self, prior: &Prior, x: f64, mut f: impl FnMut(Conditioned)) {
        let s2 = self.sigma * self.sigma;
        match prior {
            Prior::Discrete(d) => {
                for (&a, &lw) in d.atoms().iter().zip(d.log_weights()) {
                    f(Conditioned {
                        log_joint: lw + normal_logpdf(x, a, s2),
                        score: (a - x) / s2,
                        post_mean: a,
                        post_var: 0.0,
                    });
                }
            }
            Prior::GaussianMixture(g) => {
                for ((&m, &tau2), &lw) in g.means().iter().zip(g.variances()).zip(g.log_weights()) {
                    let total = s2 + tau2;
                    let shrink = tau2 / total;
                    f(Conditioned {
                        log_joint: lw + normal_logpdf(x, m, total),
                        score: (m - x) / total,
                        post_mean: m + shrink * (x - m),
                        post_var: shrink * s2,
                    });
                }
            }
        }
    }

    fn max_log_joint(&self, prior: &Prior, x: f64) -> f64 {
        let mut m = f64::NEG_INFINITY;
        self.for_each_component(prior, x, |c| m = m.max(c.log_joint));
        m
    }

    /// Posterior average of `g` over components: `Σ pᵢ g(cᵢ)` with
    /// `pᵢ ∝ exp(log_joint_i - max)`.
    fn posterior_average(&self, prior: &Prior, x: f64, g: impl Fn(&Conditioned) -> f64) -> f64 {
        let shift = self.max_log_joint(prior, x);
        let mut num = 0.0;
        let mut den = 0.0;
        self.for_each_component(prior, x, |c| {
            let e = (c.log_joint - shift).exp();
            num += e * g(&c);
            den += e;
        });
        num / den
    }

    /// `log f_{G,σ}(x)`
    pub fn log_marginal_density(&self, prior: &Prior, x: f64) -> f64 {
        let shift = self.max_log_joint(prior, x);
        let mut den = 0.0;
        self.for_each_component(prior, x, |c| den += (c.log_joint - shift).exp());
        shift + den.ln()
    }

    /// `f'_{G,σ}(x) / f_{G,σ}(x)`, from the derivative kernels of each component.
    pub fn marginal_score(&self, prior: &Prior, x: f64) -> f64 {
        self.posterior_average(prior, x, |c| c.score)
    }

    /// `E_G[θ | X = x]` from posterior component weights and conjugate means.
    pub fn posterior_mean(&self, prior: &Prior, x: f64) -> f64 {
        self.posterior_average(prior, x, |c| c.post_mean)
    }

    /// `x + σ² · score(x)`
    pub fn posterior_mean_tweedie(&self, prior: &Prior, x: f64) -> f64 {
        x + self.sigma * self.sigma * self.marginal_score(prior, x)
    }

    /// `P_G(θ > s | X = x)`; an atom equal to `s` does not count.
    pub fn posterior_tail(&self, prior: &Prior, x: f64, s: f64) -> f64 {
        let p = self.posterior_average(prior, x, |c| {
            if c.post_var > 0.0 {
                std_normal_sf((s - c.post_mean) / c.post_var.sqrt())
            } else if c.post_mean > s {
                1.0
            } else {
                0.0
            }
        });
        p.clamp(0.0, 1.0)
    }

    /// `E_G[θ² | X = x]`
    pub fn posterior_second_moment(&self, prior: &Prior, x: f64) -> f64 {
        self.posterior_average(prior, x, |c| c.post_mean * c.post_mean + c.post_var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lik(s: f64) -> Likelihood {
        Likelihood::new(s).unwrap()
    }

    fn normal01() -> Prior {
        Prior::normal(0.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_sigma() {
        assert_eq!(Likelihood::new(0.0), Err(Error::InvalidSigma(0.0)));
        assert!(Likelihood::new(-1.0).is_err());
        assert!(Likelihood::new(f64::NAN).is_err());
        assert!(Likelihood::new(f64::INFINITY).is_err());
    }

    #[test]
    fn log_marginal_density_examples() {
        // f(0) = ½φ(-1) + ½φ(1) = φ(1)
        assert_abs_diff_eq!(
            lik(1.0).log_marginal_density(&Prior::rademacher(), 0.0),
            -1.418_938_533_204_672_7,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            lik(1.0).log_marginal_density(&Prior::point_mass(0.0), 0.0),
            -0.918_938_533_204_672_7,
            epsilon = 1e-15
        );
        // N(0,1) * N(0,1) = N(0,2)
        assert_abs_diff_eq!(
            lik(1.0).log_marginal_density(&normal01(), 2.0),
            -2.265_512_123_484_645,
            epsilon = 1e-14
        );
    }

    #[test]
    fn log_marginal_density_stays_finite_far_out() {
        let v = lik(0.01).log_marginal_density(&Prior::rademacher(), 50.0);
        assert!(v.is_finite());
        // dominated by the atom at +1: log φ(4900) - log(0.01) + log ½
        let expect = -0.918_938_533_204_672_7 - 0.5 * 4900.0f64.powi(2) - 0.01f64.ln() + 0.5f64.ln();
        assert!((v - expect).abs() < 1e-9 * expect.abs());
    }

    #[test]
    fn marginal_score_examples() {
        let r = Prior::rademacher();
        assert_abs_diff_eq!(lik(1.0).marginal_score(&r, 0.0), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(
            lik(1.0).marginal_score(&r, 1.0),
            1f64.tanh() - 1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            lik(2.0).marginal_score(&Prior::point_mass(0.0), 3.0),
            -0.75,
            epsilon = 1e-15
        );
    }

    #[test]
    fn posterior_mean_examples() {
        let delta = Prior::point_mass(0.0);
        for &(s, x) in &[(0.1, 5.0), (1.0, -3.0), (30.0, 100.0)] {
            assert_eq!(lik(s).posterior_mean(&delta, x), 0.0);
        }
        assert_abs_diff_eq!(lik(1.0).posterior_mean(&normal01(), 1.6), 0.8, epsilon = 1e-15);
        assert_eq!(lik(1.0).posterior_mean(&Prior::rademacher(), 0.0), 0.0);
        // Rademacher posterior mean is tanh(x/σ²).
        assert_abs_diff_eq!(
            lik(0.5).posterior_mean(&Prior::rademacher(), 0.3),
            (0.3f64 / 0.25).tanh(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn tweedie_examples() {
        assert_abs_diff_eq!(
            lik(2.0).posterior_mean_tweedie(&Prior::point_mass(0.0), 3.0),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            lik(1.0).posterior_mean_tweedie(&Prior::rademacher(), 1.0),
            0.761_594_155_955_764_9,
            epsilon = 1e-15
        );
        // score vanishes at the symmetry point, so the Tweedie map fixes x
        assert_eq!(lik(1.0).posterior_mean_tweedie(&Prior::rademacher(), 0.0), 0.0);
    }

    #[test]
    fn posterior_tail_examples() {
        let r = Prior::rademacher();
        assert_abs_diff_eq!(lik(1.0).posterior_tail(&r, 0.0, 0.5), 0.5, epsilon = 1e-15);
        assert_eq!(lik(1.0).posterior_tail(&r, 0.0, 1.5), 0.0);
        // atom at s exactly is excluded
        assert_eq!(lik(1.0).posterior_tail(&r, 0.0, 1.0), 0.0);
        assert_abs_diff_eq!(lik(1.0).posterior_tail(&normal01(), 0.0, 0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn posterior_second_moment_examples() {
        for &x in &[-4.0, 0.0, 0.7, 9.0] {
            assert_abs_diff_eq!(
                lik(1.0).posterior_second_moment(&Prior::rademacher(), x),
                1.0,
                epsilon = 1e-15
            );
            assert_eq!(lik(1.0).posterior_second_moment(&Prior::point_mass(0.0), x), 0.0);
        }
        assert_abs_diff_eq!(
            lik(1.0).posterior_second_moment(&normal01(), 0.0),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn small_sigma_picks_nearest_atom() {
        let p: Prior = crate::priors::DiscretePrior::new(vec![-2.0, 0.5, 3.0], vec![0.2, 0.5, 0.3])
            .unwrap()
            .into();
        let l = lik(1e-3);
        assert_abs_diff_eq!(l.posterior_mean(&p, 0.4), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(l.posterior_mean(&p, 2.0), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.posterior_mean(&p, -40.0), -2.0, epsilon = 1e-12);
    }
}
