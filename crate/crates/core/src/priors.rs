//! Priors over the unknown mean θ: finitely supported and Gaussian mixtures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_sf};

/// Tolerance on `Σ weights = 1` at construction.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A prior with finitely many atoms, kept in canonical form: atoms strictly
/// increasing, weights strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteRepr", into = "DiscreteRepr")]
pub struct DiscretePrior {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    #[serde(skip)]
    log_weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiscreteRepr {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<DiscreteRepr> for DiscretePrior {
    type Error = Error;
    fn try_from(r: DiscreteRepr) -> Result<Self> {
        DiscretePrior::new(r.atoms, r.weights)
    }
}

impl From<DiscretePrior> for DiscreteRepr {
    fn from(p: DiscretePrior) -> Self {
        DiscreteRepr {
            atoms: p.atoms,
            weights: p.weights,
        }
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidPrior(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidPrior(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

impl DiscretePrior {
    /// Zero weights are pruned and duplicate atoms merged by summing weights.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidPrior(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidPrior("no atoms".into()));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPrior("atoms must be finite".into()));
        }
        check_weights(&weights)?;

        let mut pairs: Vec<(f64, f64)> = atoms
            .into_iter()
            .zip(weights)
            .filter(|&(_, w)| w > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                // -0.0 and 0.0 are the same atom.
                Some(last) if last.0 == a => last.1 += w,
                _ => merged.push((if a == 0.0 { 0.0 } else { a }, w)),
            }
        }
        let (atoms, weights): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            atoms,
            weights,
            log_weights,
        })
    }

    /// Like [`DiscretePrior::new`] but rescales nonnegative weights to sum to one.
    pub fn from_unnormalized(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidPrior(format!(
                "weights must have a positive finite total, got {total}"
            )));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::new(atoms, weights)
    }

    pub fn point_mass(at: f64) -> Self {
        Self::new(vec![at], vec![1.0]).expect("point mass is valid")
    }

    /// ½δ₋₁ + ½δ₊₁
    pub fn rademacher() -> Self {
        Self::symmetric_two_point(1.0)
    }

    /// ½δ₋ₐ + ½δ₊ₐ, variance `a²`.
    pub fn symmetric_two_point(a: f64) -> Self {
        Self::new(vec![-a, a], vec![0.5, 0.5]).expect("two-point prior is valid")
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn expect_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| w * f(a))
            .sum()
    }

    /// Largest `s` with `s^k * tail(s)` at a local supremum: for step tails these
    /// are exactly the atom magnitudes.
    fn tail_constant(&self, k: f64) -> f64 {
        let mut best = 0.0f64;
        // Right tail: P(θ > s) for s just below a positive atom a is P(θ ≥ a).
        let mut upper = 0.0;
        for (&a, &w) in self.atoms.iter().zip(&self.weights).rev() {
            if a <= 0.0 {
                break;
            }
            upper += w;
            best = best.max(a.powf(k) * upper);
        }
        // Left tail: P(θ ≤ -s) at s = |a| includes the atom itself.
        let mut lower = 0.0;
        for (&a, &w) in self.atoms.iter().zip(&self.weights) {
            if a >= 0.0 {
                break;
            }
            lower += w;
            best = best.max((-a).powf(k) * lower);
        }
        best
    }
}

/// A finite mixture of normals `Σ wᵢ N(meansᵢ, variancesᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct GaussianMixturePrior {
    means: Vec<f64>,
    variances: Vec<f64>,
    weights: Vec<f64>,
    #[serde(skip)]
    log_weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MixtureRepr {
    means: Vec<f64>,
    variances: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<MixtureRepr> for GaussianMixturePrior {
    type Error = Error;
    fn try_from(r: MixtureRepr) -> Result<Self> {
        GaussianMixturePrior::new(r.means, r.variances, r.weights)
    }
}

impl From<GaussianMixturePrior> for MixtureRepr {
    fn from(p: GaussianMixturePrior) -> Self {
        MixtureRepr {
            means: p.means,
            variances: p.variances,
            weights: p.weights,
        }
    }
}

impl GaussianMixturePrior {
    /// Zero-weight components are dropped; order is otherwise preserved.
    pub fn new(means: Vec<f64>, variances: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if means.len() != variances.len() || means.len() != weights.len() {
            return Err(Error::InvalidPrior(format!(
                "mixture has {} means, {} variances, {} weights",
                means.len(),
                variances.len(),
                weights.len()
            )));
        }
        if means.is_empty() {
            return Err(Error::InvalidPrior("no mixture components".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidPrior("means must be finite".into()));
        }
        if variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidPrior(
                "variances must be finite and positive".into(),
            ));
        }
        check_weights(&weights)?;
        let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let means: Vec<f64> = keep.iter().map(|&i| means[i]).collect();
        let variances: Vec<f64> = keep.iter().map(|&i| variances[i]).collect();
        let weights: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            means,
            variances,
            weights,
            log_weights,
        })
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![mean], vec![variance], vec![1.0])
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.means
            .iter()
            .zip(&self.variances)
            .zip(&self.weights)
            .map(|((&m, &v), &w)| (m, v, w))
    }

    fn sf(&self, s: f64) -> f64 {
        self.components()
            .map(|(m, v, w)| w * std_normal_sf((s - m) / v.sqrt()))
            .sum()
    }

    fn cdf(&self, s: f64) -> f64 {
        self.components()
            .map(|(m, v, w)| w * std_normal_cdf((s - m) / v.sqrt()))
            .sum()
    }

    fn log_tail_power(&self, k: f64, log_s: f64) -> f64 {
        let s = log_s.exp();
        let tail = self.sf(s).max(self.cdf(-s));
        k * log_s + tail.ln()
    }

    fn tail_constant(&self, k: f64) -> Result<f64> {
        const GRID: usize = 1024;
        let min_sd = self
            .variances
            .iter()
            .map(|v| v.sqrt())
            .fold(f64::INFINITY, f64::min);
        let proxy = self
            .components()
            .map(|(m, v, _)| m.abs() + v.sqrt())
            .fold(0.0, f64::max);
        let lo = (1e-3 * min_sd).max(1e-6).ln();
        let hi = (1e3 * proxy).ln();
        let grid: Vec<f64> = (0..GRID)
            .map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
            .collect();
        let vals: Vec<f64> = grid.iter().map(|&t| self.log_tail_power(k, t)).collect();

        if vals.iter().any(|v| *v == f64::INFINITY || v.is_nan()) {
            return Err(Error::NonIntegrableTail { k });
        }
        let n = vals.len();
        if vals[n - 1].is_finite() && vals[n - 1] >= vals[n - 2] {
            return Err(Error::NonIntegrableTail { k });
        }

        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            let v = vals[i];
            if !v.is_finite() {
                continue;
            }
            let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < n { vals[i + 1] } else { f64::NEG_INFINITY };
            if v < left || v < right {
                continue;
            }
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(n - 1)];
            let refined = golden_max(|t| self.log_tail_power(k, t), a, b, 100);
            best = best.max(v).max(refined);
        }
        Ok(if best.is_finite() { best.exp() } else { 0.0 })
    }
}

fn normal_pdf(t: f64, mean: f64, sd: f64) -> f64 {
    crate::normal::std_normal_pdf((t - mean) / sd) / sd
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64))
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// A prior G over θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Prior {
    Discrete(DiscretePrior),
    GaussianMixture(GaussianMixturePrior),
}

impl From<DiscretePrior> for Prior {
    fn from(p: DiscretePrior) -> Self {
        Prior::Discrete(p)
    }
}

impl From<GaussianMixturePrior> for Prior {
    fn from(p: GaussianMixturePrior) -> Self {
        Prior::GaussianMixture(p)
    }
}

impl Prior {
    pub fn point_mass(at: f64) -> Self {
        DiscretePrior::point_mass(at).into()
    }

    pub fn rademacher() -> Self {
        DiscretePrior::rademacher().into()
    }

    /// Single normal component N(mean, variance).
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Ok(GaussianMixturePrior::normal(mean, variance)?.into())
    }

    pub fn as_discrete(&self) -> Option<&DiscretePrior> {
        match self {
            Prior::Discrete(d) => Some(d),
            Prior::GaussianMixture(_) => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Prior::Discrete(d) => d.expect_of(|a| a),
            Prior::GaussianMixture(g) => g.components().map(|(m, _, w)| w * m).sum(),
        }
    }

    /// `E θ²`
    pub fn second_moment(&self) -> f64 {
        match self {
            Prior::Discrete(d) => d.expect_of(|a| a * a),
            Prior::GaussianMixture(g) => g.components().map(|(m, v, w)| w * (m * m + v)).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let central = match self {
            Prior::Discrete(d) => d.expect_of(|a| (a - mean) * (a - mean)),
            Prior::GaussianMixture(g) => g
                .components()
                .map(|(m, v, w)| w * ((m - mean) * (m - mean) + v))
                .sum(),
        };
        central.max(0.0)
    }

    /// `E|θ|^k`. Mixture components are integrated by composite Simpson on
    /// `mean ± 40 sd`, split at zero where `|θ|^k` loses smoothness.
    pub fn abs_moment(&self, k: f64) -> f64 {
        match self {
            Prior::Discrete(d) => d.expect_of(|a| a.abs().powf(k)),
            Prior::GaussianMixture(g) => g
                .components()
                .map(|(m, v, w)| {
                    let sd = v.sqrt();
                    let f = |t: f64| t.abs().powf(k) * normal_pdf(t, m, sd);
                    let (a, b) = (m - 40.0 * sd, m + 40.0 * sd);
                    let integral = if a < 0.0 && b > 0.0 {
                        simpson(f, a, 0.0, 20_000) + simpson(f, 0.0, b, 20_000)
                    } else {
                        simpson(f, a, b, 40_000)
                    };
                    w * integral
                })
                .sum(),
        }
    }

    /// `P(θ ≤ s)`, right-continuous.
    pub fn cdf(&self, s: f64) -> f64 {
        match self {
            Prior::Discrete(d) => d
                .atoms
                .iter()
                .zip(&d.weights)
                .filter(|(&a, _)| a <= s)
                .map(|(_, &w)| w)
                .sum::<f64>()
                .min(1.0),
            Prior::GaussianMixture(g) => g.cdf(s).min(1.0),
        }
    }

    /// `P(θ > s)`, summed directly rather than as `1 - cdf` so small tails keep precision.
    pub fn sf(&self, s: f64) -> f64 {
        match self {
            Prior::Discrete(d) => d
                .atoms
                .iter()
                .zip(&d.weights)
                .filter(|(&a, _)| a > s)
                .map(|(_, &w)| w)
                .sum::<f64>()
                .min(1.0),
            Prior::GaussianMixture(g) => g.sf(s).min(1.0),
        }
    }

    /// `max(P(θ > s), P(θ ≤ -s))`
    pub fn two_sided_tail(&self, s: f64) -> f64 {
        self.sf(s).max(self.cdf(-s))
    }

    /// Smallest `c` with `max(1 - G(s), G(-s)) ≤ c s^(-k)` for every `s > 0`.
    pub fn tail_constant(&self, k: f64) -> Result<f64> {
        if !(k > 2.0 && k.is_finite()) {
            return Err(Error::InvalidTailCondition(format!(
                "exponent k must exceed 2, got {k}"
            )));
        }
        match self {
            Prior::Discrete(d) => Ok(d.tail_constant(k)),
            Prior::GaussianMixture(g) => g.tail_constant(k),
        }
    }

    /// Number of atoms or mixture components.
    pub fn n_components(&self) -> usize {
        match self {
            Prior::Discrete(d) => d.len(),
            Prior::GaussianMixture(g) => g.len(),
        }
    }
}

/// Polynomial tail bound `max(1 - G(s), G(-s)) ≤ c s^(-k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCondition {
    k: f64,
    c: f64,
}

impl TailCondition {
    pub fn new(k: f64, c: f64) -> Result<Self> {
        if !(k > 2.0 && k.is_finite()) {
            return Err(Error::InvalidTailCondition(format!(
                "exponent k must exceed 2, got {k}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidTailCondition(format!(
                "constant c must be positive, got {c}"
            )));
        }
        Ok(Self { k, c })
    }

    /// The tightest condition `prior` satisfies at exponent `k`, inflated by
    /// `1 + slack` so that it certifies the bound under rounding.
    pub fn certify(prior: &Prior, k: f64, slack: f64) -> Result<Self> {
        let c = prior.tail_constant(k)?;
        // A point mass at zero has no tail; any positive constant works.
        Self::new(k, (c * (1.0 + slack)).max(f64::MIN_POSITIVE))
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `c s^(-k)`
    pub fn envelope(&self, s: f64) -> f64 {
        self.c * s.powf(-self.k)
    }
}

/// Log-spaced evaluation points for tail checks: 1024 points spanning the
/// prior's scale, plus each nonzero atom magnitude and the float just below it
/// (where the right-tail supremum is approached).
pub fn default_s_grid(prior: &Prior) -> Vec<f64> {
    const GRID: usize = 1024;
    let (lo, hi) = match prior {
        Prior::Discrete(d) => {
            let mags: Vec<f64> = d.atoms.iter().map(|a| a.abs()).filter(|&a| a > 0.0).collect();
            let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
            let max = mags.iter().copied().fold(0.0, f64::max);
            if mags.is_empty() {
                (1e-6, 1.0)
            } else {
                ((1e-3 * min).max(1e-6), 1e3 * max)
            }
        }
        Prior::GaussianMixture(g) => {
            let min_sd = g.variances.iter().map(|v| v.sqrt()).fold(f64::INFINITY, f64::min);
            let proxy = g.components().map(|(m, v, _)| m.abs() + v.sqrt()).fold(0.0, f64::max);
            ((1e-3 * min_sd).max(1e-6), 1e3 * proxy)
        }
    };
    let mut grid = log_grid(lo, hi, GRID);
    if let Prior::Discrete(d) = prior {
        for &a in &d.atoms {
            let m = a.abs();
            if m > 0.0 {
                grid.push(m);
                grid.push(f64::from_bits(m.to_bits() - 1));
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    grid
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
