//! Temporal summary of a participant's per-frame attribute stream.
//!
//! A frame vector is `AU(12) | expr(8) | arousal | valence`. The participant
//! vector is `mean(22) | std(22) | AU activation(12) | p_aro | p_val`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AU_COUNT: usize = 12;
pub const EXPR_COUNT: usize = 8;
pub const FRAME_DIM: usize = AU_COUNT + EXPR_COUNT + 2;
pub const FEATURE_DIM: usize = 2 * FRAME_DIM + AU_COUNT + 2;

pub const AU_COLUMNS: Range<usize> = 0..AU_COUNT;
pub const EXPR_COLUMNS: Range<usize> = AU_COUNT..AU_COUNT + EXPR_COUNT;
pub const AROUSAL_COLUMN: usize = 20;
pub const VALENCE_COLUMN: usize = 21;

pub const MEAN_SLICE: Range<usize> = 0..FRAME_DIM;
pub const STD_SLICE: Range<usize> = FRAME_DIM..2 * FRAME_DIM;
pub const ACTIVATION_SLICE: Range<usize> = 2 * FRAME_DIM..2 * FRAME_DIM + AU_COUNT;
pub const P_AROUSAL_INDEX: usize = 56;
pub const P_VALENCE_INDEX: usize = 57;

/// Default AU activation threshold.
pub const DEFAULT_TAU: f64 = 0.5;

const EXPR_SUM_TOLERANCE: f64 = 1e-9;

/// One frame's network outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAttributes {
    pub au: [f64; AU_COUNT],
    pub expr: [f64; EXPR_COUNT],
    pub arousal: f64,
    pub valence: f64,
}

impl FrameAttributes {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        let signed = |v: f64| v.is_finite() && (-1.0..=1.0).contains(&v);
        if let Some(i) = self.au.iter().position(|&v| !unit(v)) {
            return Err(Error::InvalidArgument(format!("au[{i}] = {} outside [0, 1]", self.au[i])));
        }
        if let Some(i) = self.expr.iter().position(|&v| !unit(v)) {
            return Err(Error::InvalidArgument(format!(
                "expr[{i}] = {} outside [0, 1]",
                self.expr[i]
            )));
        }
        let total: f64 = self.expr.iter().sum();
        if (total - 1.0).abs() > EXPR_SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("expr sums to {total}, not 1")));
        }
        if !signed(self.arousal) || !signed(self.valence) {
            return Err(Error::InvalidArgument(format!(
                "arousal {} / valence {} outside [-1, 1]",
                self.arousal, self.valence
            )));
        }
        Ok(())
    }

    /// Inverse of [`frame_vector`] (no range checks).
    pub fn from_frame_vector(v: &[f64; FRAME_DIM]) -> Self {
        let mut attrs = Self {
            au: [0.0; AU_COUNT],
            expr: [0.0; EXPR_COUNT],
            arousal: v[AROUSAL_COLUMN],
            valence: v[VALENCE_COLUMN],
        };
        attrs.au.copy_from_slice(&v[AU_COLUMNS]);
        attrs.expr.copy_from_slice(&v[EXPR_COLUMNS]);
        attrs
    }
}

/// Concatenates `au | expr | arousal | valence`.
pub fn frame_vector(attrs: &FrameAttributes) -> Result<[f64; FRAME_DIM]> {
    attrs.validate()?;
    let mut v = [0.0; FRAME_DIM];
    v[AU_COLUMNS].copy_from_slice(&attrs.au);
    v[EXPR_COLUMNS].copy_from_slice(&attrs.expr);
    v[AROUSAL_COLUMN] = attrs.arousal;
    v[VALENCE_COLUMN] = attrs.valence;
    Ok(v)
}

/// `M x 22` frame stream in frame order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeMatrix {
    rows: Vec<[f64; FRAME_DIM]>,
}

impl AttributeMatrix {
    pub fn new(rows: Vec<[f64; FRAME_DIM]>) -> Self {
        Self { rows }
    }

    pub fn from_attributes(frames: &[FrameAttributes]) -> Result<Self> {
        Ok(Self {
            rows: frames.iter().map(frame_vector).collect::<Result<_>>()?,
        })
    }

    pub fn rows(&self) -> &[[f64; FRAME_DIM]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: [f64; FRAME_DIM]) {
        self.rows.push(row);
    }

    fn non_empty(&self) -> Result<usize> {
        if self.rows.is_empty() {
            Err(Error::InvalidArgument("attribute matrix has no frames".into()))
        } else {
            Ok(self.rows.len())
        }
    }
}

/// Per-column population mean and standard deviation (two-pass).
///
/// Sums are taken relative to the first frame, so a constant column yields
/// exactly that constant and a zero deviation.
pub fn mean_std(f: &AttributeMatrix) -> Result<([f64; FRAME_DIM], [f64; FRAME_DIM])> {
    let m = f.non_empty()? as f64;
    let first = f.rows()[0];
    let mut shift = [0.0; FRAME_DIM];
    for row in f.rows() {
        for ((acc, v), v0) in shift.iter_mut().zip(row).zip(&first) {
            *acc += v - v0;
        }
    }
    let mut mean = first;
    for (mu, s) in mean.iter_mut().zip(&shift) {
        *mu += s / m;
    }
    let mut var = [0.0; FRAME_DIM];
    for row in f.rows() {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std = var.map(|v| (v / m).sqrt());
    Ok((mean, std))
}

/// Fraction of frames in which each AU strictly exceeds `tau`.
pub fn au_activation(f: &AttributeMatrix, tau: f64) -> Result<[f64; AU_COUNT]> {
    let m = f.non_empty()?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside [0, 1]")));
    }
    let mut counts = [0usize; AU_COUNT];
    for row in f.rows() {
        for (c, &v) in counts.iter_mut().zip(&row[AU_COLUMNS]) {
            if v > tau {
                *c += 1;
            }
        }
    }
    Ok(counts.map(|c| c as f64 / m as f64))
}

/// Fractions of frames with strictly positive arousal and valence.
pub fn positive_fractions(f: &AttributeMatrix) -> Result<(f64, f64)> {
    let m = f.non_empty()? as f64;
    let aro = f.rows().iter().filter(|r| r[AROUSAL_COLUMN] > 0.0).count();
    let val = f.rows().iter().filter(|r| r[VALENCE_COLUMN] > 0.0).count();
    Ok((aro as f64 / m, val as f64 / m))
}

/// The 58-dim participant vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TemporalFeatures {
    values: Vec<f64>,
}

impl TemporalFeatures {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::Shape(format!(
                "temporal feature vector needs {FEATURE_DIM} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("feature {i} is {}", values[i])));
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> &[f64] {
        &self.values[MEAN_SLICE]
    }

    pub fn std(&self) -> &[f64] {
        &self.values[STD_SLICE]
    }

    pub fn activation(&self) -> &[f64] {
        &self.values[ACTIVATION_SLICE]
    }

    pub fn p_arousal(&self) -> f64 {
        self.values[P_AROUSAL_INDEX]
    }

    pub fn p_valence(&self) -> f64 {
        self.values[P_VALENCE_INDEX]
    }
}

impl TryFrom<Vec<f64>> for TemporalFeatures {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::from_values(values)
    }
}

impl From<TemporalFeatures> for Vec<f64> {
    fn from(f: TemporalFeatures) -> Self {
        f.values
    }
}

/// `mean | std | activation(tau) | p_aro | p_val`.
pub fn temporal_feature_vector(f: &AttributeMatrix, tau: f64) -> Result<TemporalFeatures> {
    let (mean, std) = mean_std(f)?;
    let act = au_activation(f, tau)?;
    let (p_aro, p_val) = positive_fractions(f)?;
    let mut values = Vec::with_capacity(FEATURE_DIM);
    values.extend_from_slice(&mean);
    values.extend_from_slice(&std);
    values.extend_from_slice(&act);
    values.push(p_aro);
    values.push(p_val);
    TemporalFeatures::from_values(values)
}

/// Facial-attribute group owning a subset of the 58 features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Au,
    Arousal,
    Valence,
    Expr,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [Attribute::Au, Attribute::Arousal, Attribute::Valence, Attribute::Expr];

    /// Feature indices of this group; the four groups partition `0..58`.
    pub fn feature_indices(self) -> Vec<usize> {
        let shift = |r: Range<usize>, by: usize| (r.start + by)..(r.end + by);
        match self {
            Attribute::Au => AU_COLUMNS
                .chain(shift(AU_COLUMNS, STD_SLICE.start))
                .chain(ACTIVATION_SLICE)
                .collect(),
            Attribute::Expr => EXPR_COLUMNS.chain(shift(EXPR_COLUMNS, STD_SLICE.start)).collect(),
            Attribute::Arousal => vec![AROUSAL_COLUMN, STD_SLICE.start + AROUSAL_COLUMN, P_AROUSAL_INDEX],
            Attribute::Valence => vec![VALENCE_COLUMN, STD_SLICE.start + VALENCE_COLUMN, P_VALENCE_INDEX],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Au => "au",
            Attribute::Arousal => "arousal",
            Attribute::Valence => "valence",
            Attribute::Expr => "expr",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "au" | "aus" => Ok(Attribute::Au),
            "aro" | "arousal" => Ok(Attribute::Arousal),
            "val" | "valence" => Ok(Attribute::Valence),
            "expr" | "expression" => Ok(Attribute::Expr),
            other => Err(Error::InvalidArgument(format!("unknown attribute `{other}`"))),
        }
    }
}

/// Column names of the frame vector, matching the frame CSV header.
pub fn frame_column_names() -> Vec<String> {
    (1..=AU_COUNT)
        .map(|i| format!("au_{i:02}"))
        .chain((1..=EXPR_COUNT).map(|i| format!("expr_{i:02}")))
        .chain(["arousal".to_string(), "valence".to_string()])
        .collect()
}

/// Names of the 58 participant features.
pub fn feature_names() -> Vec<String> {
    let frame = frame_column_names();
    frame
        .iter()
        .map(|c| format!("mean_{c}"))
        .chain(frame.iter().map(|c| format!("std_{c}")))
        .chain((1..=AU_COUNT).map(|i| format!("act_au_{i:02}")))
        .chain(["p_arousal".to_string(), "p_valence".to_string()])
        .collect()
}
