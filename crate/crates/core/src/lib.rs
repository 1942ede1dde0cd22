//! Bayesian nonparametric inference for species-sampling problems under the
//! Pitman-Yor process prior.
//!
//! The crate covers the three classical species-sampling targets given an
//! observed sample of size n:
//!
//! * **coverage**: posterior laws and estimates of the probability mass of
//!   species seen r times (the missing mass at r = 0), with Good-Turing as
//!   the frequentist baseline;
//! * **unseen**: the number of new species in m further draws, via the exact
//!   coefficient-based posterior, a compound-Binomial Monte Carlo sampler,
//!   and the Good-Toulmin baseline;
//! * **prevalence**: how many of the species currently seen r times will be
//!   seen again among m further draws, via an exact inclusion-exclusion
//!   posterior, a compound-Hypergeometric sampler, a large-sample Binomial
//!   approximation, and the Thisted-Efron baseline.
//!
//! Prior parameters (alpha, theta) are fitted empirically (profile and joint
//! maximum likelihood) or through a grid hierarchical-Bayes posterior over
//! (alpha, gamma = theta + alpha); see [`fit`].

// Domain checks use `!(x > 0.0)` deliberately: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod coverage;
pub mod data;
pub mod error;
pub mod fit;
pub mod prevalence;
pub mod pyp;
pub mod rng;
pub mod special;
pub mod unseen;

pub use data::SampleSummary;
pub use error::{Error, Result};
pub use pyp::{PartitionState, PypParams};
pub use rng::RngStream;
pub use unseen::{DiscretePosterior, Provenance};
