//! Spatial privacy exposure of location-tagged reports, and a dual-mode sensing
//! algorithm that keeps it low.
//!
//! - [`metrics`]: activity coverage, activity uniformity and privacy exposure.
//! - [`place`]: WiFi-fingerprint learning and detection of private places.
//! - [`anonymity`]: greedy k-anonymity, POI obfuscation and the dispatcher that
//!   decides whether a report is suppressed or submitted.
//! - [`pattern`] and [`sim`]: synthetic activity patterns and the Monte-Carlo
//!   campaigns built on them.
//! - [`io`]: JSONL / CSV file formats.

// Negated comparisons are how NaN gets rejected in validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anonymity;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pattern;
pub mod place;
pub mod profile;
pub mod sim;

pub use anonymity::{
    build_anonymity_set, obfuscate, process_outgoing, AnonymityConfig, AnonymitySet, Decision, PoiIndex,
    RequestKind, SensingContext,
};
pub use error::{Error, Result};
pub use metrics::{coverage, distance, exposure, extend_summary, uniformity, ExposureSummary};
pub use model::{Crs, DistanceMode, GeoPoint, Located, MetricsConfig, OwnerTag, Report, ReportPool};
pub use pattern::{AngleMode, PatternKind, PatternSpec};
pub use place::{is_private, observe_scan, similarity, Fingerprint, PlaceConfig, PlaceProfile, Verdict};
pub use profile::Profile;
