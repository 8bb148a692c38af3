//! σ-sweeps and a derivative-free search for prior pairs with large
//! disagreement risk.
//!
//! Candidates are pairs of discrete priors with a fixed number of atoms,
//! parameterized by atom locations and weight logits. Every proposal is
//! projected back onto `{mean 0, variance ≤ V}` before it is scored, and the
//! score of a pair is its largest risk over the σ grid. The search returns a
//! numerical lower bound on `sup R`, nothing more.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{check_tail_condition, CENTER_TOL};
use crate::error::{Error, Result};
use crate::priors::{default_s_grid, DiscretePrior, Prior, TailCondition};
use crate::risk::{risk_quadrature, QuadratureSpec, RiskReport};

/// Weight of the outer atoms `±a` in the heavy-tail warm start.
const SURROGATE_TAIL_MASS: f64 = 0.02;
/// Steps shrink by this factor after a sweep with no accepted move.
const STEP_DECAY: f64 = 0.5;
/// A coordinate search stops once the atom step falls below this fraction of √V.
const MIN_REL_STEP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_atoms_g0: usize,
    pub n_atoms_g1: usize,
    pub var_cap: f64,
    pub sigma_grid: Vec<f64>,
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    pub tail_k: Option<f64>,
    pub tail_c: Option<f64>,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InfeasibleConfig(msg));
        if self.n_atoms_g0 == 0 || self.n_atoms_g1 == 0 {
            return fail("each prior needs at least one atom".into());
        }
        if !(self.var_cap.is_finite() && self.var_cap > 0.0) {
            return fail(format!("var_cap must be positive, got {}", self.var_cap));
        }
        if self.sigma_grid.is_empty() {
            return fail("sigma_grid is empty".into());
        }
        if self.sigma_grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return fail("sigma_grid entries must be positive".into());
        }
        if self.sigma_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("sigma_grid must be strictly ascending".into());
        }
        if self.restarts == 0 || self.iters == 0 {
            return fail("restarts and iters must be positive".into());
        }
        match (self.tail_k, self.tail_c) {
            (None, None) => {}
            (Some(k), Some(c)) => {
                TailCondition::new(k, c).map_err(|e| Error::InfeasibleConfig(e.to_string()))?;
            }
            _ => return fail("tail_k and tail_c must be given together".into()),
        }
        Ok(())
    }

    fn tail_condition(&self) -> Option<TailCondition> {
        match (self.tail_k, self.tail_c) {
            (Some(k), Some(c)) => TailCondition::new(k, c).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_g0: DiscretePrior,
    pub best_g1: DiscretePrior,
    pub best_sigma: f64,
    pub best_risk: f64,
    /// `(iteration, best risk so far)`, numbered across restarts in order.
    pub trace: Vec<(usize, f64)>,
}

/// One [`RiskReport`] per σ, by quadrature.
pub fn sweep_sigma(
    g0: &Prior,
    g1: &Prior,
    sigma_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<RiskReport>> {
    if sigma_grid.is_empty() {
        return Err(Error::EmptyGrid("sigma grid"));
    }
    sigma_grid
        .par_iter()
        .map(|&s| risk_quadrature(g0, g1, s, spec))
        .collect()
}

/// Weighted mean and variance of raw atoms.
fn raw_moments(atoms: &[f64], weights: &[f64]) -> (f64, f64) {
    let mean: f64 = atoms.iter().zip(weights).map(|(a, w)| w * a).sum();
    let var: f64 = atoms
        .iter()
        .zip(weights)
        .map(|(a, w)| w * (a - mean) * (a - mean))
        .sum();
    (mean, var)
}

/// Shift atoms to mean zero, then shrink them toward zero until the variance
/// is at most `var_cap`. `None` if the atoms carry no spread.
fn center_and_cap(atoms: &[f64], weights: &[f64], var_cap: f64) -> Option<Vec<f64>> {
    let (mean, var) = raw_moments(atoms, weights);
    if !(var > 0.0) || atoms.iter().all(|&a| a == atoms[0]) {
        return None;
    }
    let scale = (var_cap / var).sqrt().min(1.0);
    Some(atoms.iter().map(|a| (a - mean) * scale).collect())
}

/// Moves `prior` onto `{mean 0, variance ≤ var_cap}` by a shift followed by a
/// shrink toward the origin. Weights are unchanged.
pub fn project_moments(prior: &DiscretePrior, var_cap: f64) -> Result<DiscretePrior> {
    if !(var_cap.is_finite() && var_cap >= 0.0) {
        return Err(Error::InfeasibleConfig(format!(
            "var_cap must be nonnegative, got {var_cap}"
        )));
    }
    if prior.len() < 2 {
        return Err(Error::DegeneratePrior);
    }
    let atoms = center_and_cap(prior.atoms(), prior.weights(), var_cap)
        .ok_or(Error::DegeneratePrior)?;
    DiscretePrior::new(atoms, prior.weights().to_vec())
}

/// Raw search coordinates for one prior.
#[derive(Debug, Clone, PartialEq)]
struct Params {
    atoms: Vec<f64>,
    logits: Vec<f64>,
}

impl Params {
    fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.logits.len());
        crate::normal::softmax_into(&self.logits, &mut w);
        w
    }

    /// Represent `(atoms, weights)` with exactly `n` coordinates. Extra slots
    /// duplicate the last atom and split its weight, which leaves the prior
    /// unchanged after merging. `None` if it has more than `n` atoms.
    fn embed(atoms: &[f64], weights: &[f64], n: usize) -> Option<Self> {
        if n == 1 {
            return Some(Self {
                atoms: vec![0.0],
                logits: vec![0.0],
            });
        }
        let m = atoms.len();
        if m > n {
            return None;
        }
        let mut out_a = atoms[..m - 1].to_vec();
        let mut out_w = weights[..m - 1].to_vec();
        let copies = n - m + 1;
        for _ in 0..copies {
            out_a.push(atoms[m - 1]);
            out_w.push(weights[m - 1] / copies as f64);
        }
        Some(Self {
            atoms: out_a,
            logits: out_w.iter().map(|w| w.ln()).collect(),
        })
    }

    /// Projects onto the feasible set. Returns the projected coordinates and
    /// the canonical prior they describe.
    fn realize(&self, var_cap: f64) -> Option<(Params, DiscretePrior)> {
        if self.atoms.len() == 1 {
            return Some((self.clone(), DiscretePrior::point_mass(0.0)));
        }
        let weights = self.weights();
        let atoms = center_and_cap(&self.atoms, &weights, var_cap)?;
        let prior = DiscretePrior::new(atoms.clone(), weights).ok()?;
        Some((
            Params {
                atoms,
                logits: self.logits.clone(),
            },
            prior,
        ))
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    g0: Params,
    g1: Params,
}

#[derive(Debug, Clone)]
struct Scored {
    cand: Candidate,
    g0: DiscretePrior,
    g1: DiscretePrior,
    risk: f64,
    sigma: f64,
}

struct Searcher<'a> {
    config: &'a SearchConfig,
    spec: &'a QuadratureSpec,
    tail: Option<TailCondition>,
}

impl Searcher<'_> {
    fn score(&self, cand: &Candidate) -> Option<Scored> {
        let (p0, g0) = cand.g0.realize(self.config.var_cap)?;
        let (p1, g1) = cand.g1.realize(self.config.var_cap)?;
        if let Some(tc) = &self.tail {
            let c = Prior::Discrete(g1.clone()).tail_constant(tc.k()).ok()?;
            if c > tc.c() {
                return None;
            }
        }
        let pg0 = Prior::Discrete(g0.clone());
        let pg1 = Prior::Discrete(g1.clone());
        let mut best: Option<(f64, f64)> = None;
        for &s in &self.config.sigma_grid {
            let r = risk_quadrature(&pg0, &pg1, s, self.spec).ok()?.risk;
            if !r.is_finite() {
                return None;
            }
            if best.is_none_or(|(br, _)| r > br) {
                best = Some((r, s));
            }
        }
        let (risk, sigma) = best?;
        Some(Scored {
            cand: Candidate { g0: p0, g1: p1 },
            g0,
            g1,
            risk,
            sigma,
        })
    }

    /// Shrinks g1's atoms until it meets the tail constraint.
    fn repair_tail(&self, p: Params) -> Params {
        let Some(tc) = &self.tail else { return p };
        if p.atoms.len() == 1 {
            return p;
        }
        let Some((proj, prior)) = p.realize(self.config.var_cap) else {
            return p;
        };
        let c = Prior::Discrete(prior).tail_constant(tc.k()).unwrap_or(0.0);
        if c <= tc.c() {
            return proj;
        }
        let shrink = (tc.c() / c).powf(1.0 / tc.k()) * (1.0 - 1e-12);
        Params {
            atoms: proj.atoms.iter().map(|a| a * shrink).collect(),
            logits: proj.logits,
        }
    }

    fn rademacher(&self, n: usize) -> Params {
        let a = self.config.var_cap.sqrt();
        Params::embed(&[-a, a], &[0.5, 0.5], n).expect("two atoms fit when n >= 2")
    }

    /// Atoms `-a, 0, a` with mass `p/2` on each outer atom and `p a² = V`.
    fn surrogate(&self, n: usize) -> Params {
        let p = SURROGATE_TAIL_MASS;
        let a = (self.config.var_cap / p).sqrt();
        Params::embed(&[-a, 0.0, a], &[p / 2.0, 1.0 - p, p / 2.0], n)
            .unwrap_or_else(|| self.rademacher(n))
    }

    fn warm_starts(&self) -> Vec<Candidate> {
        let (n0, n1) = (self.config.n_atoms_g0, self.config.n_atoms_g1);
        vec![
            Candidate {
                g0: self.rademacher_or_delta(n0),
                g1: self.repair_tail(self.rademacher_or_delta(n1)),
            },
            Candidate {
                g0: if n0 == 1 { self.rademacher_or_delta(1) } else { self.surrogate(n0) },
                g1: self.repair_tail(if n1 == 1 {
                    self.rademacher_or_delta(1)
                } else {
                    self.surrogate(n1)
                }),
            },
        ]
    }

    fn rademacher_or_delta(&self, n: usize) -> Params {
        if n == 1 {
            Params::embed(&[0.0], &[1.0], 1).expect("point mass embeds")
        } else {
            self.rademacher(n)
        }
    }

    fn random_params(&self, n: usize, rng: &mut ChaCha8Rng) -> Params {
        let half = 3.0 * self.config.var_cap.sqrt();
        let atoms = (0..n).map(|_| rng.random_range(-half..=half)).collect();
        let logits = (0..n)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                e.max(1e-300).ln()
            })
            .collect();
        Params { atoms, logits }
    }

    fn random_start(&self, restart: usize) -> Option<Scored> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(restart as u64);
        for _ in 0..100 {
            let cand = Candidate {
                g0: self.random_params(self.config.n_atoms_g0, &mut rng),
                g1: {
                    let p = self.random_params(self.config.n_atoms_g1, &mut rng);
                    self.repair_tail(p)
                },
            };
            if let Some(s) = self.score(&cand) {
                return Some(s);
            }
        }
        None
    }

    /// Coordinate search from `start`. Returns the best point and its
    /// per-sweep trace of best risk.
    fn climb(&self, start: Scored) -> (Scored, Vec<f64>) {
        let root_v = self.config.var_cap.sqrt();
        let mut atom_step = 0.5 * root_v;
        let mut logit_step = 1.0;
        let mut cur = start;
        let mut trace = vec![cur.risk];
        let n0 = cur.cand.g0.atoms.len();
        let n1 = cur.cand.g1.atoms.len();
        // (which prior, is_logit, index)
        let mut coords = Vec::new();
        for (which, n) in [(0usize, n0), (1, n1)] {
            if n < 2 {
                continue;
            }
            for i in 0..n {
                coords.push((which, false, i));
            }
            for i in 0..n {
                coords.push((which, true, i));
            }
        }
        for _ in 0..self.config.iters {
            if coords.is_empty() || atom_step < MIN_REL_STEP * root_v {
                break;
            }
            let mut improved = false;
            for &(which, is_logit, i) in &coords {
                let step = if is_logit { logit_step } else { atom_step };
                for sign in [1.0, -1.0] {
                    let mut cand = cur.cand.clone();
                    let p = if which == 0 { &mut cand.g0 } else { &mut cand.g1 };
                    if is_logit {
                        p.logits[i] += sign * step;
                    } else {
                        p.atoms[i] += sign * step;
                    }
                    if let Some(s) = self.score(&cand) {
                        if s.risk > cur.risk {
                            cur = s;
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if !improved {
                atom_step *= STEP_DECAY;
                logit_step *= STEP_DECAY;
            }
            trace.push(cur.risk);
        }
        (cur, trace)
    }
}

/// Seeded multi-start coordinate search for `(G0, G1, σ)` maximizing the
/// disagreement risk over discrete priors with mean zero and variance at most
/// `var_cap`. Warm starts (Rademacher at the cap, and a three-atom heavy-tail
/// pair) always run in addition to `config.restarts` random starts.
pub fn maximize_risk(config: &SearchConfig, spec: &QuadratureSpec) -> Result<SearchResult> {
    config.validate()?;
    spec.validate()?;
    let searcher = Searcher {
        config,
        spec,
        tail: config.tail_condition(),
    };
    let warm = searcher.warm_starts();
    let n_warm = warm.len();
    let total = n_warm + config.restarts;

    let runs: Vec<Option<(Scored, Vec<f64>)>> = (0..total)
        .into_par_iter()
        .map(|r| {
            let start = if r < n_warm {
                searcher.score(&warm[r])
            } else {
                searcher.random_start(r)
            };
            start.map(|s| searcher.climb(s))
        })
        .collect();

    let mut best: Option<Scored> = None;
    let mut trace = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for (end, local) in runs.into_iter().flatten() {
        for r in local {
            running = running.max(r);
            trace.push((trace.len(), running));
        }
        // ties keep the lowest restart index
        if best.as_ref().is_none_or(|b| end.risk > b.risk) {
            best = Some(end);
        }
    }
    let best = best.ok_or_else(|| {
        Error::InfeasibleConfig("no feasible starting point satisfies the constraints".into())
    })?;

    let result = SearchResult {
        best_g0: best.g0,
        best_g1: best.g1,
        best_sigma: best.sigma,
        best_risk: best.risk,
        trace,
    };
    assert_feasible(&result, config);
    Ok(result)
}

fn assert_feasible(result: &SearchResult, config: &SearchConfig) {
    for g in [&result.best_g0, &result.best_g1] {
        let p = Prior::Discrete(g.clone());
        assert!(p.mean().abs() <= CENTER_TOL, "search returned a non-centered prior");
        assert!(
            p.variance() <= config.var_cap * (1.0 + 1e-9),
            "search returned a prior above the variance cap"
        );
    }
    if let Some(tc) = config.tail_condition() {
        let g1 = Prior::Discrete(result.best_g1.clone());
        let rep = check_tail_condition(&g1, &tc, &default_s_grid(&g1))
            .expect("default grid is nonempty and positive");
        assert!(rep.satisfied, "search returned g1 violating the tail condition");
    }
}
