//! Derivative-free saddle-point search.
//!
//! The crate locates index-k saddle points of a black-box energy using only
//! function values. A nested scheme drives the search:
//!
//! - an inner stochastic eigenvector search ([`eigensearch`]) tracks the k
//!   unstable directions of the Hessian from Hessian-vector difference
//!   quotients along random Gaussian directions;
//! - an outer reflected-gradient step ([`saddlesearch`]) moves the iterate
//!   along a two-point gradient estimate with the unstable components flipped.
//!
//! [`oracle`] hosts the objective abstraction and the benchmark landscapes,
//! [`estimators`] the zeroth-order estimators, and [`harness`] the replicated
//! experiment runner and its statistics.

pub mod eigensearch;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod saddlesearch;

pub use eigensearch::{eigen_search, eigen_step, subspace_distance, EigenSearchConfig, Stopping};
pub use error::{Error, Result};
pub use estimators::{batch_residual, grad_estimate, hess_vec_estimate, hessian_estimate, RngStream};
pub use linalg::Basis;
pub use oracle::{Landscape, Objective};
pub use saddlesearch::{
    deterministic_saddle_search, saddle_search, LengthSchedule, RunRecord, SaddleConfig,
    StepSchedule,
};
