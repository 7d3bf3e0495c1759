//! Identification of VR users from device sensor traces.
//!
//! The pipeline ingests per-session multi-channel sensor recordings (body
//! motion, eye gaze, hand joints, facial expression) and divides each trace
//! into blocks: fixed block amount (FBA) gives every user's session for an
//! app the same number of blocks, while fixed block length (FBL) is the
//! constant-duration baseline. Each block is summarized into five
//! statistics per channel, per-sensor-group feature engineering follows,
//! and seed-deterministic random forests identify the user per block with
//! max voting across a sub-session. Evaluation covers app-scoped and
//! device-scoped adversaries, equal-share group evaluation, and the
//! zero-day-app protocol. A parameterized synthetic trace generator stands
//! in for private captures and doubles as the verification oracle.
//!
//! See the crate examples for one runnable walkthrough per capability, and
//! the `vrident` binary for the batch CLI.

pub mod adversary;
pub mod blocking;
pub mod classifier;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod seeding;
pub mod synth;

pub use error::{Error, Result};
