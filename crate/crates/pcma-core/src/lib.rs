//! Principal component mediation analysis.
//!
//! Estimates unit-norm exposure and mediator projections jointly with the
//! coefficients of two linear structural equations
//!
//! ```text
//! M ψ = X φ α + W θ₁ + ε
//! Y   = X φ γ + M ψ β + W θ₂ + η
//! ```
//!
//! extracts further orthogonal components by deflation, and provides
//! bootstrap and plug-in asymptotic inference on the direct (`γ`) and
//! indirect (`αβ`) effects, together with the simulation design used to
//! benchmark the method.
//!
//! The crate is `no_std` and needs only `alloc`; file formats, the CLI and
//! threaded execution live in the `pcma` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sequential;
pub mod simgen;
pub mod solver;
pub mod stats;

pub use error::{Block, Design, Error, Projection, Result};
pub use model::{
    effects, pre_adjust, standardize, ComponentSequence, DataSet, Effects, MediationComponent, ParameterSet,
    StandardizationRecord,
};
pub use inference::{
    asymptotic_covariances, bc_interval, bootstrap_component, ie_variance, percentile_interval,
    AsymptoticCovariances, BootstrapMode, BootstrapResult, CiType, Executor, InferenceConfig, Interval,
    Quantity, Serial,
};
pub use sequential::{deflate, fit_components, fit_sequence, DeflationState, SequenceFit, StopRule};
pub use simgen::{evaluate, generate, pca_hp, run_study, ReplicateMetrics, SimScenario, StudyConfig, StudySummary};
pub use solver::{fit_component, FitConfig, FitTrace, Init};
