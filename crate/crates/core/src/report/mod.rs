//! Configuration-driven runs producing comma-separated tables and SVG plots.
//!
//! Tables, one per family, with fixed columns:
//! `contact.csv`, `curvature.csv`, `viscosity.csv`, `abp.csv`, `harnack.csv`.
//! Numbers use 12 significant digits; rows are sorted, so reruns with the same
//! config and seed are byte-identical.

pub mod config;
pub mod run;
pub mod svg;
pub mod table;

pub use config::{parse_config, Operation, RunConfig};
pub use run::{families, run, run_families, RunOutcome};
pub use table::{emit_table, Family, ResultRow};
