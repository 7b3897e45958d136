//! Data-driven estimation of distribution-system flexibility sets.
//!
//! The flexibility set of a feeder is the set of substation power profiles
//! `p0 ∈ R^T` that some feasible DER schedule can realize. This crate builds
//! the compact linear operating model `W p ≤ z, p0 = D p + b` of a radial
//! feeder, labels profiles with an exact LP oracle, certifies an inner
//! subset (a robust hyperbox grown by a convex hull of verified profiles),
//! and trains a classifier of the set by pool-based active learning.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below fix the type.

pub mod active;
pub mod error;
pub mod eval;
pub mod inner;
pub mod io;
pub mod lp;
pub mod mlp;
pub mod network;
pub mod oracle;
pub mod robust_box;
pub mod scalar;
pub mod seed;

pub use active::{ActiveConfig, Learner, Strategy};
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use inner::InnerSet;
pub use lp::{LpProblem, LpSolution, LpStatus, SolverTolerances};
pub use mlp::{MlpParams, TrainConfig};
pub use network::{CompactModel, DerKind, DerSpec, FeederSpec, GeneratorConfig};
pub use oracle::{Label, Oracle, Provenance, SamplePoint};
pub use robust_box::InnerBox;
pub use scalar::Scalar;

pub type CompactModel64 = CompactModel<f64>;
pub type CompactModel32 = CompactModel<f32>;
pub type MlpParams64 = MlpParams<f64>;
pub type MlpParams32 = MlpParams<f32>;
pub type InnerSet64 = InnerSet<f64>;
pub type InnerSet32 = InnerSet<f32>;
pub type SamplePoint64 = SamplePoint<f64>;
pub type SamplePoint32 = SamplePoint<f32>;
pub type LpProblem64 = LpProblem<f64>;
pub type LpProblem32 = LpProblem<f32>;
