//! Data ingestion, estimation drivers, the simulation study and report output.

pub mod config;
pub mod estimate;
pub mod io;
pub mod report;
pub mod study;

pub use config::{BandSettings, Config, StudySettings};
pub use estimate::{estimate, Estimate, EstimateSettings, Method};
pub use io::{ingest_csv, transform, ColumnSelector, HeaderMode, Transform};
pub use report::{emit_report, round_sig, EstimateReport, Format, Report};
pub use study::{
    aggregate, default_scenarios, replicate_seed, run_study, Aggregate, ReplicateRecord, Scenario, StudyResult,
    StudySpec,
};
