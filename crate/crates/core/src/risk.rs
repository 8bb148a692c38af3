//! Disagreement risk `R(G1, σ; G0) = E_{θ~G0}[(E_{G1}[θ|X] - θ)²]` and the
//! second-moment functional `M = E_{G0}[E_{G1}[θ|X]²]`.
//!
//! Two independent routes: a deterministic Gauss-Hermite tensor rule, and a
//! seeded Monte Carlo estimator whose output does not depend on the number of
//! worker threads.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::Likelihood;
use crate::priors::Prior;
use crate::quadrature::GaussHermite;

/// Monte Carlo draws per chunk. Chunk `c` uses ChaCha stream `c`, so the
/// estimate is the same however chunks are scheduled.
const MC_CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub gh_nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub theta_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            gh_nodes: 121,
            mc_samples: 200_000,
            seed: 0,
            theta_nodes: 61,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.gh_nodes < 3 {
            return Err(Error::InvalidQuadratureSpec(format!(
                "gh_nodes must be at least 3, got {}",
                self.gh_nodes
            )));
        }
        if self.mc_samples < 100 {
            return Err(Error::InvalidQuadratureSpec(format!(
                "mc_samples must be at least 100, got {}",
                self.mc_samples
            )));
        }
        if self.theta_nodes == 0 {
            return Err(Error::InvalidQuadratureSpec(
                "theta_nodes must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub risk: f64,
    pub second_moment: f64,
    pub method: Method,
    /// Standard error of `risk`; Monte Carlo only.
    pub std_error: Option<f64>,
    pub sigma: f64,
    pub n_evals: u64,
}

impl RiskReport {
    pub const CSV_HEADER: &'static str = "sigma,risk,second_moment,method,std_error";

    pub fn csv_row(&self) -> String {
        let se = self.std_error.map(|v| format!("{v:?}")).unwrap_or_default();
        format!(
            "{:?},{:?},{:?},{},{}",
            self.sigma, self.risk, self.second_moment, self.method, se
        )
    }
}

/// Weighted θ-nodes of the outer expectation over `G0`: exact atoms for a
/// discrete prior, a Gauss-Hermite rule per component for a mixture.
fn outer_nodes(g0: &Prior, theta_nodes: usize) -> Vec<(f64, f64)> {
    match g0 {
        Prior::Discrete(d) => d
            .atoms()
            .iter()
            .copied()
            .zip(d.weights().iter().copied())
            .collect(),
        Prior::GaussianMixture(g) => {
            let rule = GaussHermite::cached(theta_nodes);
            let mut out = Vec::with_capacity(g.len() * rule.len());
            for ((&m, &v), &w) in g.means().iter().zip(g.variances()).zip(g.weights()) {
                let sd = v.sqrt();
                for (&z, &wz) in rule.nodes().iter().zip(rule.weights()) {
                    out.push((m + sd * z, w * wz));
                }
            }
            out
        }
    }
}

/// `R(G1, σ; G0)` and `M` by Gauss-Hermite quadrature.
///
/// The inner integrand `x ↦ E_{G1}[θ|x]` is smooth but, for a discrete `G1`
/// with atoms far apart relative to σ, switches between atoms over an x-range
/// of width about `σ² / gap`. The fixed-node rule resolves that only once the
/// node spacing is comparable, so for small σ raise `gh_nodes` or cross-check
/// with [`risk_monte_carlo`].
pub fn risk_quadrature(
    g0: &Prior,
    g1: &Prior,
    sigma: f64,
    spec: &QuadratureSpec,
) -> Result<RiskReport> {
    let lik = Likelihood::new(sigma)?;
    spec.validate()?;
    let rule = GaussHermite::cached(spec.gh_nodes);
    let mut risk = 0.0;
    let mut second = 0.0;
    let mut n_evals = 0u64;
    for (theta, w_theta) in outer_nodes(g0, spec.theta_nodes) {
        let mut r = 0.0;
        let mut m = 0.0;
        for (&z, &wz) in rule.nodes().iter().zip(rule.weights()) {
            let rule_value = lik.posterior_mean(g1, theta + sigma * z);
            let err = rule_value - theta;
            r += wz * err * err;
            m += wz * rule_value * rule_value;
        }
        n_evals += rule.len() as u64;
        risk += w_theta * r;
        second += w_theta * m;
    }
    Ok(RiskReport {
        risk,
        second_moment: second,
        method: Method::Quadrature,
        std_error: None,
        sigma,
        n_evals,
    })
}

/// Draws θ from a prior given a uniform and a standard normal variate.
fn draw_theta(g0: &Prior, rng: &mut ChaCha8Rng) -> f64 {
    let (weights, pick): (&[f64], _) = match g0 {
        Prior::Discrete(d) => (d.weights(), d.atoms()),
        Prior::GaussianMixture(g) => (g.weights(), g.means()),
    };
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut idx = weights.len() - 1;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            idx = i;
            break;
        }
    }
    match g0 {
        Prior::Discrete(_) => pick[idx],
        Prior::GaussianMixture(g) => {
            let z: f64 = rng.sample(StandardNormal);
            pick[idx] + g.variances()[idx].sqrt() * z
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// `R(G1, σ; G0)` and `M` by seeded Monte Carlo over `(θ, X)`.
pub fn risk_monte_carlo(
    g0: &Prior,
    g1: &Prior,
    sigma: f64,
    spec: &QuadratureSpec,
) -> Result<RiskReport> {
    let lik = Likelihood::new(sigma)?;
    spec.validate()?;
    let n = spec.mc_samples;
    let n_chunks = n.div_ceil(MC_CHUNK);
    let chunks: Vec<(Moments, Moments)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            let mut loss = Moments::default();
            let mut sq = Moments::default();
            for _ in 0..len {
                let theta = draw_theta(g0, &mut rng);
                let z: f64 = rng.sample(StandardNormal);
                let est = lik.posterior_mean(g1, theta + sigma * z);
                loss.push((est - theta) * (est - theta));
                sq.push(est * est);
            }
            (loss, sq)
        })
        .collect();
    let (loss, sq) = chunks
        .into_iter()
        .fold((Moments::default(), Moments::default()), |(a, b), (c, d)| {
            (a.merge(c), b.merge(d))
        });
    let sample_sd = (loss.m2 / (loss.n - 1.0)).max(0.0).sqrt();
    Ok(RiskReport {
        risk: loss.mean,
        second_moment: sq.mean,
        method: Method::MonteCarlo,
        std_error: Some(sample_sd / loss.n.sqrt()),
        sigma,
        n_evals: n as u64,
    })
}

/// `E_{G0}[E_{G1}[θ|X]²]` by the quadrature route.
pub fn second_moment_functional(
    g0: &Prior,
    g1: &Prior,
    sigma: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(risk_quadrature(g0, g1, sigma, spec)?.second_moment)
}

/// `R ≤ 2V + 2M`, from `(a - b)² ≤ 2a² + 2b²`.
pub fn risk_upper_from_moment(m: f64, v: f64) -> f64 {
    2.0 * v + 2.0 * m
}
