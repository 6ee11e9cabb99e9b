//! Downlink transmit-power minimization for an IRS-aided system serving one
//! confidential subscriber and one general communication user while a passive
//! eavesdropper listens.
//!
//! The base station superimposes two beamformed data streams and artificial
//! noise; an intelligent reflecting surface (IRS) provides the only
//! propagation path to all receivers. The optimizer alternates between three
//! convexified subproblems — the confidential beamformer (semidefinite
//! relaxation), the general beamformer plus AN covariance (successive convex
//! approximation), and the IRS phase shifts (SCA over a unit-diagonal PSD
//! lift) — recovering rank-one solutions by eigendecomposition with Gaussian
//! randomization.
//!
//! Module map:
//! - [`channel`]: seeded synthesis of all channel matrices and geometry.
//! - [`secrecy`]: rates, secrecy rate, total power, cascaded operators.
//! - [`sdp`]: a dense primal-dual interior-point solver for Hermitian SDPs
//!   with linear trace constraints.
//! - [`subproblems`]: builders and solvers for the three subproblems.
//! - [`recovery`]: rank-one extraction and feasibility-preserving rescaling.
//! - [`optimizer`]: the outer alternating loop and its convergence control.
//! - [`baselines`]: MRT, random-phase, no-AN and relay comparison schemes.

pub mod baselines;
pub mod channel;
mod la;
pub mod optimizer;
pub mod recovery;
pub mod rng;
pub mod sdp;
pub mod secrecy;
pub mod subproblems;

pub use baselines::{run_baseline, BaselineKind};
pub use channel::{ChannelSet, GeometryAngles, Scenario, ScenarioError};
pub use optimizer::{
    check_monotone, initialize, minimize_power, OptimizerOptions, RunReport, RunStatus,
};
pub use recovery::RandomizationOptions;
pub use secrecy::{BeamState, CascadeOperators, RateSummary};
pub use subproblems::ScaOptions;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
