//! Correlation-filter visual tracker built on fused HSV/HOG features, a
//! background-aware filter learned by ADMM in the frequency domain, and a
//! reliable-response mask that suppresses steep distractor peaks.
//!
//! Modules follow the processing chain: [`ingest`] loads sequences and
//! configuration, [`features`] builds the 93-channel descriptor, [`cfcore`]
//! learns filters and computes responses, [`response`] masks the response,
//! [`tracker`] runs the per-frame loop, [`eval`] scores trajectories with the
//! one-pass protocol and [`synth`] renders test scenes with exact ground truth.

pub mod cfcore;
pub mod config;
pub mod debug;
pub mod error;
pub mod eval;
pub mod features;
pub mod frame;
pub mod geometry;
pub mod ingest;
pub mod response;
pub mod synth;
pub mod tracker;

pub use config::{default_config, TrackerConfig};
pub use error::{Error, Result};
pub use frame::Frame;
pub use geometry::BoundingBox;
pub use ingest::{load_sequence, parse_groundtruth_line, Sequence};
pub use tracker::{track_sequence, TrackerState};
