//! Numerical evaluation of capacity-compression-distortion tradeoff regions
//! for state-dependent channels with rate-limited state and feedback
//! helpers, plus boundary search and a random-coding Monte Carlo simulator.
//!
//! The crate is organized around [`prob::FactoredModel`]: a pmf
//! factorization tagged with the region variant it parameterizes. Models
//! compose into dense joint distributions, [`region`] evaluates the rate
//! constraints of each variant, [`search`] optimizes over free factors,
//! [`closed_forms`] reproduces the binary examples analytically, and
//! [`sim`] runs the block coding scheme at small blocklength.

pub mod closed_forms;
pub mod error;
pub mod info;
pub mod prob;
pub mod region;
pub mod search;
pub mod sim;

pub use error::{Error, Result};
pub use info::Bits;
pub use prob::{Alphabet, CondDist, FactoredModel, JointDist, MarkovConstraint, Variant};
pub use region::{CommonPart, DistortionSpec, EstimatorTable, RegionPoint};
