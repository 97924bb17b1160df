//! Approximations and bounds of Shannon mutual information for neural
//! population codes with independent Poisson responses.
//!
//! The crate computes, for a discrete stimulus set with a positive prior:
//!
//! - pairwise divergence matrices (Kullback-Leibler, Chernoff exponent,
//!   Bhattacharyya, Chernoff information) in closed form, validated by a
//!   brute-force summation oracle ([`divergence`]);
//! - the information metrics I_u, I_e, I_{beta,alpha} and their
//!   restricted-sum variants I_d, I_u^d, I_{beta,alpha}^d, I_D, I_D^0,
//!   plus the Chernoff-information bound ([`metrics`]);
//! - continuous-stimulus asymptotics I_G, I_F, I_gamma from Fisher
//!   information on a quadrature grid ([`fisher`]);
//! - ground truth: a Monte-Carlo estimator with bootstrap standard
//!   deviation and an exact enumeration oracle for tiny instances
//!   ([`montecarlo`]);
//! - a config-driven experiment runner with CSV/JSON output
//!   ([`experiment`]).
//!
//! All internal math is in nats; reporting emits nats and bits.

pub mod divergence;
pub mod error;
pub mod experiment;
pub mod fisher;
pub mod metrics;
pub mod montecarlo;
pub mod rng;
pub mod stimulus;

pub use error::{Error, Result};
