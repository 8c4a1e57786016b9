//! Deterministic simulation of the quadratic jerk system and a pipeline for
//! comparing heterogeneous traces of it.
//!
//! * [`jerk`]: the model `x''' = -A x'' - x ∓ x'^2` and its circuit time scale.
//! * [`integrate`]: Euler, RK4 and Dormand–Prince integration onto a uniform grid.
//! * [`ingest`]: CSV and SPICE-export parsing, CSV writing.
//! * [`align`]: common time grid and linear resampling.
//! * [`metrics`]: NRMSE, cumulative NRMSE, reference selection, prediction
//!   horizon and divergence rate.
//! * [`report`]: the comparison report assembled from the above.
//! * [`cli`]: the `jerkrepro` command-line front end.

pub mod align;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod integrate;
pub mod jerk;
pub mod metrics;
pub mod report;
pub mod series;
pub mod sum;

pub use error::{Error, Result};
