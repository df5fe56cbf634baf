//! Simulation and certification toolkit for prepare-and-measure protocols
//! whose only device assumption is the dimension of the exchanged message,
//! under detection-loophole attacks.
//!
//! The crate models both black boxes of such a protocol, computes exact
//! lossless and post-selected statistics, decides whether a distribution
//! admits a d-dimensional classical explanation (producing LP certificates
//! either way), evaluates random-access-code figures of merit against
//! brute-force classical baselines and the binary-entropy information
//! bound, constructs and searches detection-loophole attacks, and audits
//! observed statistics from the parties' point of view.
//!
//! Conventions, fixed crate-wide:
//! * alphabets are contiguous ranges `0..n`;
//! * conditional tables are indexed (outcome, a, b);
//! * packed bit strings are little-endian: bit `b` of `a` is `(a >> b) & 1`;
//! * probabilities are `f64` with a default comparison tolerance of 1e-9.

// Index loops over parallel tableau rows read better than zipped iterators.
#![allow(clippy::needless_range_loop)]

pub mod attacks;
pub mod audit;
pub mod classical;
pub mod error;
pub mod quantum;
pub mod rac;
pub mod reproduce;
pub mod sampling;
pub mod scenario;
pub mod schema;
pub mod simplex;
pub mod tables;

pub use error::{Error, Result};
pub use tables::{ClickTable, ConditionalDistribution, ScenarioDims};
