//! Exact solver for ROI-optimal pacing equilibria of simultaneous
//! second-price auctions with divisible goods.
//!
//! Buyers have additive valuations over unit-supply divisible goods and a
//! convex disutility for money given by a piecewise-linear cost curve
//! (optionally truncated at a hard budget). Each buyer scales their
//! valuation vector by a single pacing multiplier `alpha in [0, 1]` and the
//! goods clear simultaneously at second prices with reserves.
//!
//! The deterministic core (`market`, `auction`, `frontier`, `equilibrium`,
//! `benchmarks`) works in exact rational arithmetic end to end. The
//! `stochastic` module is the only floating-point component; it estimates
//! expectations under multiplicative bid noise and drives the smoothed-game
//! solver tier.
//!
//! Entry points:
//! - [`auction::run_auction`]: clear one bid profile.
//! - [`frontier::roi_best_response`]: one buyer's optimal spend against
//!   fixed competing prices.
//! - [`equilibrium::verify_equilibrium`]: certify a pacing profile.
//! - [`solver::solve`]: find an equilibrium (smoothed-game limit with
//!   exact fallbacks).
//! - [`benchmarks::check_bounds`]: welfare and revenue guarantees of a
//!   certified outcome.

pub mod auction;
pub mod benchmarks;
pub mod equilibrium;
pub mod error;
pub mod frontier;
pub mod market;
pub mod rational;
pub mod scenario;
pub mod simplex;
pub mod solver;
pub mod stochastic;

pub use error::Error;
pub use rational::{ExtRat, Rat};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
