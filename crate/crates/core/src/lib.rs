//! Motion-planning workbench: RRT* and bidirectional RRT* with pluggable
//! sampling, an attention-based learned sampler, a path-length estimator,
//! and a weighted self-imitation fine-tuning loop.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`] — state spaces, metrics, interpolation, steering
//! - [`env`] — workspaces, obstacles, collision checking, point clouds
//! - [`autodiff`] — reverse-mode differentiation over small dense tensors
//! - [`nn`] — attention blocks shared by the two networks
//! - [`sampler`] — the learned sampling distribution (encoder + node decoder)
//! - [`estimator`] — the path-length estimator network
//! - [`planner`] — RRT, RRT*, bidirectional RRT*
//! - [`wsil`] — replay buffer, quality weighting, fine-tuning loop
//! - [`train`] — pretraining driver and batch assembly

pub mod autodiff;
pub mod env;
pub mod estimator;
pub mod geometry;
pub mod nn;
pub mod planner;
pub mod sampler;
pub mod seed;
pub mod train;
pub mod wsil;

pub use geometry::{SpaceTag, State, StateSpace};
