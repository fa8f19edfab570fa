//! Prediction of bounded sequences with amortized per-interval regret.
//!
//! The benchmark is the interval payoff `P_α(X)`: the best, over every
//! partition of `X` into intervals, of the total best-constant-expert payoff
//! minus `α·√len` per interval. A randomized Cover-style predictor reaches it
//! in expectation whenever the mean of `P_α` over uniform sequences is at
//! most zero.
//!
//! Modules:
//!
//! * [`sequence`]: sequences, intervals, heights, dyadic decomposition.
//! * [`payoff`]: the interval payoff function and its dynamic programs.
//! * [`predictor`]: exact, Monte Carlo, aligned-fast and real-valued predictors.
//! * [`baselines`]: constant experts and weighted majority.
//! * [`experts`]: reductions between bit prediction and two experts.
//! * [`calibration`]: estimating the smallest feasible `α` for a horizon.
//! * [`harness`]: generators, price ingestion, experiments and logs.

pub mod baselines;
pub mod calibration;
pub mod error;
pub mod experts;
pub mod harness;
pub mod payoff;
pub mod predictor;
pub mod rng;
pub mod sequence;

pub use error::{Error, Result};
pub use payoff::{Alpha, PayoffTable};
pub use sequence::{Interval, Partition, PrefixSums, Sequence};
