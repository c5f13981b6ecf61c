//! Analytic cache performance models with a Monte-Carlo reference
//! simulator.
//!
//! The centerpiece is the characteristic-time approximation for LRU hit
//! rates: solve `sum_n (1 - exp(-q(n) t)) = C` once, read off per-object
//! hit rates `1 - exp(-q(n) t_C)`. Around it sit the popularity-law
//! machinery that makes the sums tractable for catalogs of 10^11+ objects
//! (mixtures, chunking, cache filtering, rank segmentation), an analogous
//! fixed point for random/FIFO replacement, the Gaussian analysis that
//! explains when the approximation is trustworthy, and an exact simulator
//! to check everything against.

pub mod error;
pub mod gaussian;
pub mod lru;
pub mod numeric;
pub mod popularity;
pub mod random_replacement;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use lru::{CheSolution, HitProfile};
pub use popularity::{PopularityLaw, RankSegmentation, TrafficClass, TrafficMix};
pub use random_replacement::RandomSolution;
pub use sim::{Policy, SimConfig, SimEstimate};
