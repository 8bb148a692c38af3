//! Bayes risk of a posterior-mean rule built from one prior and scored under
//! another, in the Gaussian sequence model `X | θ ~ N(θ, σ²)`.
//!
//! The crate computes the disagreement risk `R(G1, σ; G0)` and the
//! second-moment functional `E_{G0}[E_{G1}[θ|X]²]`, checks the analytic
//! inequalities that control them, and searches over moment-constrained
//! discrete priors for pairs with large risk.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod normal;
pub mod posterior;
pub mod priors;
pub mod quadrature;
pub mod risk;
pub mod search;

pub use bounds::BoundReport;
pub use error::{Error, Result};
pub use posterior::Likelihood;
pub use priors::{DiscretePrior, GaussianMixturePrior, Prior, TailCondition};
pub use quadrature::GaussHermite;
pub use risk::{Method, QuadratureSpec, RiskReport};
pub use search::{SearchConfig, SearchResult};
