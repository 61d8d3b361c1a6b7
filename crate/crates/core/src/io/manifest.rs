use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frames::parse_frames;
use crate::error::{Error, Result};
use crate::eval::{Cohort, Diagnosis, StudyRecord};
use crate::features::temporal_feature_vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawEntry {
    id: String,
    label: String,
    frames: PathBuf,
}

/// One manifest entry with its frame path resolved against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    pub diagnosis: Diagnosis,
    pub frames: PathBuf,
}

/// Parses a manifest (JSON array of `{id, label, frames}`), sorted by id.
pub fn parse_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let err = |message: String| Error::Manifest {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<RawEntry> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut by_id: BTreeMap<String, ManifestRecord> = BTreeMap::new();
    let mut duplicates = Vec::new();
    for entry in raw {
        let diagnosis: Diagnosis = entry
            .label
            .parse()
            .map_err(|_| err(format!("participant '{}' has unknown label '{}'", entry.id, entry.label)))?;
        let frames = base.join(&entry.frames);
        if !frames.is_file() {
            return Err(err(format!(
                "participant '{}': frame file {} does not exist",
                entry.id,
                frames.display()
            )));
        }
        let record = ManifestRecord {
            id: entry.id.clone(),
            diagnosis,
            frames,
        };
        if by_id.insert(entry.id.clone(), record).is_some() {
            duplicates.push(entry.id);
        }
    }
    if !duplicates.is_empty() {
        duplicates.sort();
        duplicates.dedup();
        return Err(err(format!("duplicate participant ids: {}", duplicates.join(", "))));
    }
    Ok(by_id.into_values().collect())
}

/// Writes a manifest; `frames` paths are stored as given.
pub fn write_manifest(path: &Path, records: &[(String, Diagnosis, PathBuf)]) -> Result<()> {
    let raw: Vec<RawEntry> = records
        .iter()
        .map(|(id, d, f)| RawEntry {
            id: id.clone(),
            label: d.to_string(),
            frames: f.clone(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&raw)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses the manifest and every frame file, then builds participant features.
pub fn load_cohort(manifest: &Path, tau: f64) -> Result<Cohort> {
    let entries = parse_manifest(manifest)?;
    let records = entries
        .par_iter()
        .map(|e| {
            let frames = parse_frames(&e.frames)?;
            Ok(StudyRecord {
                id: e.id.clone(),
                diagnosis: e.diagnosis,
                features: temporal_feature_vector(&frames, tau)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Cohort::new(records)
}
