//! Randomized certification of oscillation bounds for Lipschitz functions
//! on (truncations of) the infinite-dimensional torus.
//!
//! The library turns a family of probabilistic existence arguments into
//! executable, seeded experiments:
//!
//! * [`constants`] — ℓ_p-ball volumes, oscillation-bound weights, and
//!   coordinate-block sizes, all in log space;
//! * [`geometry`] — torus points, ℓ_p metrics, and parallel subtori;
//! * [`function`] — the function contract plus cosine-series and grid
//!   families with exact analytic oracles;
//! * [`sampling`] — seeded ℓ_p-ball sampling, a mergeable Monte Carlo
//!   integrator, and a brute-force grid oscillation oracle;
//! * [`morrey`] — the weighted-derivative hypothesis check, oscillation
//!   certificates, and the random-chain simulator behind them;
//! * [`search`] — the randomized block search for subtori on which a
//!   1-Lipschitz function is nearly constant, and the nested iteration
//!   that extracts its limiting spectrum value.
//!
//! Everything is reproducible: a 64-bit seed plus a stream id determines
//! every draw, and estimator merges are exact, so results are bit-identical
//! across worker counts.

pub mod constants;
pub mod error;
pub mod function;
pub mod geometry;
pub mod morrey;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod search;
pub mod stats;

pub use error::{Error, Result};
