//! Frame CSV files, cohort manifests, synthetic cohorts and reports.

mod frames;
mod manifest;
mod report;
mod synth;

pub use frames::{parse_frames, read_frames, write_frames};
pub use manifest::{load_cohort, parse_manifest, write_manifest, ManifestRecord};
pub use report::{read_report, render_text, write_report, Report, ReportFormat, SCHEMA_VERSION};
pub use synth::{synth_cohort, synthesize_streams, AttributeEffects, SynthSpec, SyntheticParticipant};
