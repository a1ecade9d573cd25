//! Pedotransfer-function ensembles for soil water retention.
//!
//! * [`retention`]: van Genuchten, Brooks-Corey and Campbell curves.
//! * [`ptf`]: thirteen pedotransfer functions in four predictor groups.
//! * [`dataset`]: sample ingestion, quality control, stratification, bootstrap.
//! * [`metrics`]: RMSE and information criteria.
//! * [`ensemble`]: weighted ensembles calibrated by a genetic algorithm.
//! * [`mapping`]: ASCII grids and ensemble maps with bootstrap CV.
//! * `cli` (feature `cli`): the `ptfens` command-line tool.

#[cfg(feature = "cli")]
pub mod cli;
pub mod dataset;
pub mod ensemble;
pub mod mapping;
pub mod metrics;
mod par;
pub mod ptf;
pub mod retention;
mod seed;

pub use ptf::{PredictorRecord, PtfGroup, PtfId, PtfLibrary};
pub use retention::{theta_at, RetentionParams};
