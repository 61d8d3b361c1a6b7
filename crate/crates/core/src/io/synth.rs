use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::frames::write_frames;
use super::manifest::write_manifest;
use crate::error::{Error, Result};
use crate::eval::Diagnosis;
use crate::features::{AttributeMatrix, AU_COUNT, EXPR_COUNT, FRAME_DIM};
use crate::numerics::activation::softmax;

/// Group mean shifts for the ASD group, in units of the between-participant
/// standard deviation of the affected quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributeEffects {
    pub au: f64,
    pub arousal: f64,
    pub valence: f64,
    /// Shift of the neutral-expression logit.
    pub expr: f64,
}

impl Default for AttributeEffects {
    fn default() -> Self {
        Self {
            au: 0.0,
            arousal: 2.0,
            valence: 2.0,
            expr: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub participants_per_group: usize,
    pub frames_per_participant: usize,
    pub effects: AttributeEffects,
    /// Frame-to-frame standard deviation around each participant's means.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            participants_per_group: 40,
            frames_per_participant: 300,
            effects: AttributeEffects::default(),
            noise: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.participants_per_group == 0 || self.frames_per_participant == 0 {
            return Err(Error::InvalidArgument("synthetic counts must be at least 1".into()));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return Err(Error::InvalidArgument(format!("noise must be positive, got {}", self.noise)));
        }
        let e = &self.effects;
        if [e.au, e.arousal, e.valence, e.expr].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("effect sizes must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParticipant {
    pub id: String,
    pub diagnosis: Diagnosis,
    pub frames: AttributeMatrix,
}

// between-participant spread of each latent mean
const AU_SPREAD: f64 = 0.08;
const AFFECT_SPREAD: f64 = 0.15;
const EXPR_SPREAD: f64 = 0.3;

/// Draws every participant's frame stream. Each participant has latent
/// means (AU levels, arousal, valence, expression logits); frames scatter
/// around them and are clipped to the valid ranges.
pub fn synthesize_streams(spec: &SynthSpec) -> Result<Vec<SyntheticParticipant>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let e = &spec.effects;
    let mut out = Vec::with_capacity(2 * spec.participants_per_group);
    for diagnosis in [Diagnosis::Asd, Diagnosis::NonAsd] {
        let shift = if diagnosis.is_positive() { 1.0 } else { 0.0 };
        for p in 0..spec.participants_per_group {
            let au: Vec<f64> = (0..AU_COUNT)
                .map(|_| 0.35 + AU_SPREAD * (std.sample(&mut rng) + shift * e.au))
                .collect();
            let arousal = AFFECT_SPREAD * (std.sample(&mut rng) + shift * e.arousal);
            let valence = AFFECT_SPREAD * (std.sample(&mut rng) + shift * e.valence);
            let mut logits: Vec<f64> = (0..EXPR_COUNT).map(|_| EXPR_SPREAD * std.sample(&mut rng)).collect();
            logits[0] += EXPR_SPREAD * shift * e.expr;

            let mut frames = AttributeMatrix::default();
            for _ in 0..spec.frames_per_participant {
                let mut v = [0.0; FRAME_DIM];
                for (k, m) in au.iter().enumerate() {
                    v[k] = (m + spec.noise * std.sample(&mut rng)).clamp(0.0, 1.0);
                }
                let frame_logits: Vec<f64> = logits.iter().map(|l| l + spec.noise * std.sample(&mut rng)).collect();
                let probs = softmax(&frame_logits);
                v[AU_COUNT..AU_COUNT + EXPR_COUNT].copy_from_slice(&probs);
                v[AU_COUNT + EXPR_COUNT] = (arousal + spec.noise * std.sample(&mut rng)).clamp(-1.0, 1.0);
                v[AU_COUNT + EXPR_COUNT + 1] = (valence + spec.noise * std.sample(&mut rng)).clamp(-1.0, 1.0);
                frames.push(v);
            }
            let tag = if diagnosis.is_positive() { "asd" } else { "nonasd" };
            out.push(SyntheticParticipant {
                id: format!("{tag}_{p:03}"),
                diagnosis,
                frames,
            });
        }
    }
    Ok(out)
}

/// Writes `frames/<id>.csv` per participant and `manifest.json` under `dir`;
/// returns the manifest path.
pub fn synth_cohort(spec: &SynthSpec, dir: &Path) -> Result<PathBuf> {
    let participants = synthesize_streams(spec)?;
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let mut entries = Vec::with_capacity(participants.len());
    for p in &participants {
        let rel = PathBuf::from("frames").join(format!("{}.csv", p.id));
        write_frames(&dir.join(&rel), &p.frames)?;
        entries.push((p.id.clone(), p.diagnosis, rel));
    }
    let manifest = dir.join("manifest.json");
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}
