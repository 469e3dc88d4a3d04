//! Pathwise simulation and statistical verification of one-dimensional
//! reflected diffusions whose noise is a function of their reflection local
//! time.
//!
//! The solution pair `(x, L)` is built by an inductive hitting-time
//! approximation: level `n` freezes the noise coefficient between the times
//! the solution reaches `-1/n, -2/n, ...`, and doubling `n` drives the pair
//! to its limit. On top of the scheme sit the reflected process `Y = x + L`
//! with its quadratic-variation and occupation-density identities, and the
//! time-of-determinacy experiments for power-law noise, where the noise dies
//! once a unit of local time has accumulated.
//!
//! Everything stochastic is a pure function of `(seed, path index)`:
//! ensembles are bit-reproducible at any worker count.
//!
//! Entry points: [`paths::BrownianSampler`], [`scheme::construct_by_hitting`]
//! and [`scheme::refine_until`], [`reflected::reflect`],
//! [`determinacy::sample_tau_direct`], [`ensemble::run_ensemble`], and the
//! `loctime` binary over [`cli`]. The `examples/` directory has one runnable
//! example per capability.

pub mod checks;
pub mod cli;
pub mod determinacy;
pub mod ensemble;
pub mod error;
pub mod noise;
pub mod paths;
pub mod reflected;
pub mod rng;
pub mod scheme;

pub use error::{Error, Result};
