//! Frequency-heterogeneous attention reference layer and analytic
//! performance model.
//!
//! The crate has two halves:
//!
//! * an executable, deterministic reference of the layer itself —
//!   separable spectral decomposition ([`spectral`]), band partitioning
//!   ([`bands`]), dense / block-sparse / sliding-window band operators
//!   ([`attention`]), the timestep-conditioned head router ([`router`])
//!   and the assembled forward pass ([`layer`]);
//! * an analytic cost and throughput engine ([`perf`]) with embedded
//!   reference tables ([`tables`]) used as regression anchors, plus the
//!   invariant battery behind the `check` command ([`checks`]).
//!
//! Everything is 64-bit floats with fixed accumulation order: identical
//! inputs give bitwise-identical outputs.

pub mod attention;
pub mod bands;
pub mod checks;
pub mod error;
pub mod layer;
pub mod perf;
pub mod report;
pub mod rng;
pub mod router;
pub mod spectral;
pub mod tables;
pub mod tensor;

pub use error::{Error, Result};
