//! Covert throughput design against a multi-antenna optimal detector under
//! finite-blocklength delay constraints.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: gamma-family functions, Gaussian tail inverse, scaled E1.
//! * [`model`]: scenario config, Rayleigh channel draws, observation synthesis.
//! * [`detector`]: the adversary's combining detector and its error rates.
//! * [`covertness`]: per-use and expected KL divergence, Pinsker bound.
//! * [`rate_opt`]: finite-blocklength rate, blocklength rules, power search, sweeps.
//! * [`montecarlo`]: seeded simulation oracles for the analytic pipeline.
//! * [`cli`]: the `covert` command-line front end.
//!
//! Batch work (sweeps, Monte Carlo trials) goes through [`par`], which uses
//! rayon when the `parallel` feature is on and runs sequentially otherwise.

pub mod cli;
pub mod covertness;
pub mod detector;
pub mod error;
pub mod model;
pub mod par;
pub mod montecarlo;
pub mod quadrature;
pub mod rate_opt;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{ChannelDraw, Hypothesis, ObservationMatrix, SystemConfig};
pub use par::Execution;
pub use specfun::Probability;
