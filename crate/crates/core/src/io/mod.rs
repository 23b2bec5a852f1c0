//! Manifests, reports and command dispatch.

pub mod manifest;
pub mod report;
pub mod run;

pub use manifest::{build, chart_digest, load_manifest, load_manifest_bytes, Loaded, Manifest, ManifestError, MANIFEST_SCHEMA};
pub use report::{round_sig, write_report, Format, Report, REPORT_SCHEMA};
pub use run::{parse_grid, run, Command, RunError, RunOptions};
