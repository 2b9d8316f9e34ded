//! Crowdsourced WiFi fingerprint localization with BLE-derived location labels.
//!
//! Training scans arrive tagged with a location estimate and a confidence
//! radius. [`fingerprint`] spreads each scan over the grid cells its
//! confidence circle covers and keeps weighted Gaussian RSS statistics per
//! cell and AP. [`estimator`] scores online scans against those statistics,
//! smooths the result and tracks a device over time. [`sim`] generates
//! synthetic floors and datasets and [`harness`] runs experiments on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod fingerprint;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
pub use estimator::{
    discrete_estimate, spatial_center_of_mass, temporal_smooth, track, CellPosterior, Estimator,
    TrackState,
};
pub use fingerprint::{
    build_fingerprint, load_db, save_db, AssignmentStrategy, BuilderConfig, FingerprintBuilder,
    LoadError,
};
pub use geometry::{assignment_weights, circle_cell_area, Circle};
pub use harness::{
    compare_baseline, run_experiment, run_sweep, ErrorReport, Experiment, Sweep, SweepParam,
};
pub use model::{
    ApId, ApStats, BleScan, CellId, CellStats, FingerprintDb, GridSpec, GroundTruthEstimate, Point,
    Reading, Rect, RepresentativeMode, TaggedScan, TrackerConfig, WifiScan,
};
pub use sim::{simulate_dataset, Environment, ExperimentConfig};
