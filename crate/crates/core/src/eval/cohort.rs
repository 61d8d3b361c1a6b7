use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TemporalFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Diagnosis {
    #[serde(rename = "ASD")]
    Asd,
    #[serde(rename = "non-ASD")]
    NonAsd,
}

impl Diagnosis {
    /// ASD is the positive class.
    pub fn is_positive(self) -> bool {
        self == Diagnosis::Asd
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Diagnosis::Asd
        } else {
            Diagnosis::NonAsd
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagnosis::Asd => "ASD",
            Diagnosis::NonAsd => "non-ASD",
        })
    }
}

impl FromStr for Diagnosis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ASD" => Ok(Diagnosis::Asd),
            "non-ASD" => Ok(Diagnosis::NonAsd),
            other => Err(Error::InvalidArgument(format!(
                "unknown label '{other}' (expected \"ASD\" or \"non-ASD\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub id: String,
    pub diagnosis: Diagnosis,
    pub features: TemporalFeatures,
}

/// Participants sorted by id; ids are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    records: Vec<StudyRecord>,
}

impl Cohort {
    pub fn new(mut records: Vec<StudyRecord>) -> Result<Self> {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let mut seen = BTreeSet::new();
        let dups: BTreeSet<&str> = records
            .iter()
            .filter(|r| !seen.insert(r.id.as_str()))
            .map(|r| r.id.as_str())
            .collect();
        if !dups.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "duplicate participant ids: {}",
                dups.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[StudyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(ASD, non-ASD)` counts.
    pub fn group_counts(&self) -> (usize, usize) {
        let asd = self.records.iter().filter(|r| r.diagnosis.is_positive()).count();
        (asd, self.records.len() - asd)
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.diagnosis.is_positive()).collect()
    }

    /// At least two participants and both diagnoses present.
    pub fn validate_for_evaluation(&self) -> Result<()> {
        let (asd, non) = self.group_counts();
        if self.records.len() < 2 || asd == 0 || non == 0 {
            return Err(Error::InvalidArgument(format!(
                "cohort needs both diagnoses (has {asd} ASD, {non} non-ASD)"
            )));
        }
        Ok(())
    }
}
