//! Numerical checks of the inequalities that control the disagreement risk.
//!
//! Each check evaluates both sides of one inequality `lhs ≤ rhs` on explicit
//! inputs and reports the tightest point. A check passes when
//! `rhs - lhs ≥ -1e-9 (1 + |rhs|)`, which admits cases of exact equality
//! under rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::std_normal_sf;
use crate::posterior::Likelihood;
use crate::priors::{Prior, TailCondition};
use crate::risk::{second_moment_functional, QuadratureSpec};

/// Relative slack allowed on a margin before a check counts as violated.
pub const MARGIN_TOL: f64 = 1e-9;
/// Largest |mean| accepted as centered.
pub const CENTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub margin: f64,
    pub satisfied: bool,
    /// Grid point (x or s) where the margin is smallest.
    pub witness: Option<f64>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, witness: Option<f64>) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            satisfied: margin >= -MARGIN_TOL * (1.0 + rhs.abs()),
            witness,
        }
    }

    /// The point with the smallest margin. NaN margins count as the worst.
    fn tightest(
        name: &str,
        points: impl IntoIterator<Item = (f64, f64, f64)>,
    ) -> Result<Self> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (lhs, rhs, at) in points {
            let margin = rhs - lhs;
            let worse = match best {
                None => true,
                Some((bl, br, _)) => margin.is_nan() || margin < br - bl,
            };
            if worse {
                best = Some((lhs, rhs, at));
                if margin.is_nan() {
                    break;
                }
            }
        }
        let (lhs, rhs, at) = best.ok_or(Error::EmptyGrid("no evaluation points"))?;
        Ok(Self::new(name, lhs, rhs, Some(at)))
    }
}

fn require_centered(prior: &Prior) -> Result<()> {
    let mean = prior.mean();
    if mean.abs() > CENTER_TOL {
        return Err(Error::NonCenteredPrior { mean });
    }
    Ok(())
}

/// `6V + 4σ²`
pub fn lemma1_rhs(v: f64, sigma: f64) -> f64 {
    6.0 * v + 4.0 * sigma * sigma
}

/// `E_{G0}[E_{G1}[θ|X]²] ≤ 6V + 4σ²` with `V = max(Var G0, Var G1)`.
pub fn check_lemma1(
    g0: &Prior,
    g1: &Prior,
    sigma: f64,
    spec: &QuadratureSpec,
) -> Result<BoundReport> {
    require_centered(g0)?;
    require_centered(g1)?;
    let v = g0.variance().max(g1.variance());
    let lhs = second_moment_functional(g0, g1, sigma, spec)?;
    Ok(BoundReport::new("lemma1_second_moment", lhs, lemma1_rhs(v, sigma), None))
}

/// `log f_{G1,σ}(x) ≥ -log(√(2π) σ) - (x² + V) / (2σ²)` with `V = E_{G1} θ²`.
/// Reported in the log domain: `lhs` is the lower envelope, `rhs` the density.
pub fn check_jensen_denom(g1: &Prior, sigma: f64, xs: &[f64]) -> Result<BoundReport> {
    require_centered(g1)?;
    let lik = Likelihood::new(sigma)?;
    let v = g1.second_moment();
    let log_norm = (2.0 * std::f64::consts::PI).sqrt().ln() + sigma.ln();
    BoundReport::tightest(
        "jensen_marginal_lower_bound",
        xs.iter().map(|&x| {
            let envelope = -log_norm - (x * x + v) / (2.0 * sigma * sigma);
            (envelope, lik.log_marginal_density(g1, x), x)
        }),
    )
}

/// `(f'/f)² ≤ σ⁻² log(1 / (2π σ² f²))`, with the right side evaluated from
/// `log f` directly.
pub fn check_score_bound(g1: &Prior, sigma: f64, xs: &[f64]) -> Result<BoundReport> {
    let lik = Likelihood::new(sigma)?;
    let log_norm = (2.0 * std::f64::consts::PI).sqrt().ln() + sigma.ln();
    let s2 = sigma * sigma;
    BoundReport::tightest(
        "score_squared_bound",
        xs.iter().map(|&x| {
            let score = lik.marginal_score(g1, x);
            let rhs = -(2.0 / s2) * (lik.log_marginal_density(g1, x) + log_norm);
            (score * score, rhs, x)
        }),
    )
}

/// `Φ̄(x) ≤ ½ exp(-x²/2)` for `x ≥ 0`.
pub fn check_mills(xs: &[f64]) -> Result<BoundReport> {
    if let Some(&bad) = xs.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::NegativeInput(bad));
    }
    BoundReport::tightest(
        "mills_gaussian_tail",
        xs.iter()
            .map(|&x| (std_normal_sf(x), 0.5 * (-0.5 * x * x).exp(), x)),
    )
}

/// `max(1 - G1(s), G1(-s)) ≤ c s^(-k)` on every `s` in the grid.
pub fn check_tail_condition(
    g1: &Prior,
    tc: &TailCondition,
    s_grid: &[f64],
) -> Result<BoundReport> {
    if let Some(&bad) = s_grid.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::NegativeInput(bad));
    }
    BoundReport::tightest(
        "polynomial_tail_condition",
        s_grid
            .iter()
            .map(|&s| (g1.two_sided_tail(s), tc.envelope(s), s)),
    )
}

/// 2001 evenly spaced points on `±(10σ + 10)`.
pub fn default_x_grid(sigma: f64) -> Vec<f64> {
    uniform_grid(-(10.0 * sigma + 10.0), 10.0 * sigma + 10.0, 2001)
}

/// 10 000 evenly spaced points on `[0, 40]`.
pub fn default_mills_grid() -> Vec<f64> {
    uniform_grid(0.0, 40.0, 10_000)
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
