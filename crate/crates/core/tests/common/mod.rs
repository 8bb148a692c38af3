#![allow(dead_code)]

use eb_risk::priors::DiscretePrior;
use eb_risk::search::project_moments;
use eb_risk::Prior;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Discrete prior with 1..=max_atoms atoms in [-scale, scale] and
/// Dirichlet(1)-like weights.
pub fn random_discrete(rng: &mut ChaCha8Rng, max_atoms: usize, scale: f64) -> DiscretePrior {
    let n = rng.random_range(1..=max_atoms);
    let atoms: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..=scale)).collect();
    let weights: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    DiscretePrior::from_unnormalized(atoms, weights).unwrap()
}

/// Mean-zero discrete prior with at most `max_atoms` atoms and variance at most `var_cap`.
pub fn random_centered(rng: &mut ChaCha8Rng, max_atoms: usize, var_cap: f64) -> Prior {
    loop {
        let p = random_discrete(rng, max_atoms, 3.0 * var_cap.sqrt());
        if p.len() == 1 {
            return Prior::point_mass(0.0);
        }
        if let Ok(q) = project_moments(&p, var_cap) {
            return q.into();
        }
    }
}
