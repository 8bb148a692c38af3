//! Gauss-Hermite quadrature for expectations under a standard normal.
//!
//! Nodes are roots of the Hermite polynomial for the weight `exp(-x²)`,
//! rescaled so that
//! `E[g(Z)] ≈ Σ weights[i] * g(nodes[i])` for `Z ~ N(0, 1)`.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule for the standard normal. `n` must be positive.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Hermite rule needs at least one node");
        let (xs, ws) = physicists_rule(n);
        let nodes = xs.iter().map(|x| x * SQRT_2).collect();
        let weights = ws.iter().map(|w| w / PI.sqrt()).collect();
        Self { nodes, weights }
    }

    /// Shared rule for `n` nodes, computed once per process.
    pub fn cached(n: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussHermite::new(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(mean + sd * Z)]` for `Z ~ N(0, 1)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mean: f64, sd: f64, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(mean + sd * z))
            .sum()
    }
}

/// Orthonormal Hermite value `p_n(x)` and derivative `p_n'(x)` for the
/// weight `exp(-x²)`, returned as `(p, dp, log_scale)` with the true values
/// equal to `p * exp(log_scale)` and `dp * exp(log_scale)`. The rescaling
/// keeps large `n` and `|x|` from overflowing.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64, f64) {
    const BIG: f64 = 1e150;
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > BIG {
            p1 /= BIG;
            p2 /= BIG;
            log_scale += BIG.ln();
        }
    }
    (p1, (2.0 * n as f64).sqrt() * p2, log_scale)
}

/// Nodes in ascending order and weights for `∫ g(x) exp(-x²) dx`.
///
/// Roots start from the eigenvalues of the Jacobi matrix (Golub-Welsch) and are
/// polished by Newton steps; weights come from `2 / p_n'(x)²`, which keeps full
/// relative precision for the tiny weights in the tails.
fn physicists_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    roots.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(n);
    for x in roots.iter_mut() {
        for _ in 0..8 {
            let (p, dp, _) = hermite_orthonormal(n, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, dp, log_scale) = hermite_orthonormal(n, *x);
        let log_w = 2f64.ln() - 2.0 * (dp.abs().ln() + log_scale);
        weights.push(log_w.exp());
    }
    if n % 2 == 1 {
        roots[n / 2] = 0.0;
    }
    // Symmetrize: the rule is exactly symmetric about zero.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (roots[j] - roots[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        roots[i] = -x;
        roots[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    (roots, weights)
}
