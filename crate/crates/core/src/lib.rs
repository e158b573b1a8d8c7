//! Bounds on dissipative collapse models from the linewidth of levitated
//! mechanical oscillators.

// `!(a < b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod models;
pub mod rates;
pub mod simulate;
pub mod spectrum;
pub mod thermal;

pub use bounds::{BoundCurve, BoundModel, ExclusionVerdict, TheoryFloor};
pub use error::{Error, Result};
pub use models::{
    CdDissipation, CslParams, DpParams, ExperimentRecord, LinearizedDynamics, ModelKind, ModelParams,
    PhysicalConstants, SphereGeometry,
};
pub use rates::{Framework, KernelSpec, RatePair};
