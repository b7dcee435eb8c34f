//! Safety-assurance toolchain for a satellite-borne wildfire-detection ML
//! component.
//!
//! The crate covers the whole assurance workflow: GSN argument fragments
//! ([`gsn`]), the quantified requirement set and its traceability
//! ([`requirements`]), raster tiles and masks ([`raster`]), pluggable fire
//! detectors ([`detector`]), evaluation metrics ([`metrics`]), dataset
//! evaluation ([`data_eval`]), the independent verification campaign
//! ([`verification`]), constellation pass simulation ([`passsim`]) and
//! evidence-backed safety-case assembly ([`assembly`]).

pub mod assembly;
pub mod corpus;
pub mod data_eval;
pub mod detector;
pub mod evidence;
pub mod finding;
pub mod gsn;
pub mod metrics;
pub mod passsim;
pub mod raster;
pub mod requirements;
pub mod synthetic;
pub mod verification;
pub mod workflow;

pub use finding::{Finding, Severity};

/// Version tag written into every JSON and CSV artifact the crate emits.
pub const SCHEMA_VERSION: u32 = 1;
