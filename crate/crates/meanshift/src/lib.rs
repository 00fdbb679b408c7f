//! Mean shift mode seeking and clustering with adaptive kernel bandwidths.
//!
//! Implements six bandwidth strategies — fixed bandwidth (FMS), bandwidth
//! variable with the estimate point (EAMS), bandwidth variable with the
//! sample points (SAMS), their sum and cross combinations (ESAMS, WEAMS),
//! and a bidirectional strategy (BAMS) that weighs samples by the signed
//! difference between the two directions, stabilized through a sigmoid.
//!
//! The crate also ships knn bandwidth selection, a blurring-mode engine
//! that updates the whole sample set each round, an L*u*v image filtering
//! pipeline, a seeded Gaussian-mixture generator for benchmarks, and Rand
//! index evaluation.
//!
//! Core math is generic over the scalar type via [`Real`]; concrete
//! `f32`/`f64` aliases live at the crate root.

pub mod bandwidth;
pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod geom;
pub mod imaging;
pub mod kernels;
pub mod scalar;
pub mod strategies;

pub use bandwidth::{BandwidthField, NeighborSets};
pub use data::{GaussianComponent, Labels, PointSet, SynthSpec};
pub use engine::{EngineConfig, EngineMode, ModeResult};
pub use error::{Error, Result};
pub use eval::MetricReport;
pub use kernels::KernelProfile;
pub use scalar::Real;
pub use strategies::{SquareMatrix, Strategy, StrategyParams, WeightVector};

/// `f32` point set.
pub type PointSet32 = PointSet<f32>;
/// `f64` point set.
pub type PointSet64 = PointSet<f64>;
/// `f32` per-sample bandwidths.
pub type BandwidthField32 = BandwidthField<f32>;
/// `f64` per-sample bandwidths.
pub type BandwidthField64 = BandwidthField<f64>;
/// `f32` strategy parameters.
pub type StrategyParams32 = StrategyParams<f32>;
/// `f64` strategy parameters.
pub type StrategyParams64 = StrategyParams<f64>;
/// `f32` engine configuration.
pub type EngineConfig32 = EngineConfig<f32>;
/// `f64` engine configuration.
pub type EngineConfig64 = EngineConfig<f64>;
