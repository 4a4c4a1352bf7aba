//! Pairwise dependent geometric stick-breaking (PDGSBP) and Dirichlet
//! process (rPDDP) mixtures for density estimation in grouped data.
//!
//! Each group `j` has density `f_j = Σ_l p_jl g_jl`, where the random
//! densities `g_jl = g_lj` are shared by pairs of groups. Two Gibbs
//! samplers are provided, [`pdgsbp::PdgsbpSampler`] and
//! [`rpddp::RpddpSampler`], both driven by [`chain::run_chain`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
mod common;
pub mod conjugate;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod model;
pub mod pdgsbp;
pub mod quadrature;
pub mod rpddp;
pub mod sampling;

pub use chain::{run_chain, ChainConfig, ChainRng, ChainTrace, GibbsSampler, SweepStats};
pub use common::{selection_posterior, SharedPrior};
pub use error::{Error, Result};
