use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::graph::{ModelGraph, SlotKind};
use crate::error::{Error, Result};

/// Flat storage for every parameter slot of a graph.
///
/// Slot `i` occupies `[weight | bias]` starting at `offsets[i]`; the flat
/// layout lets optimisers treat the whole set as one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    layout: Vec<(usize, usize, usize)>,
    data: Vec<f64>,
}

impl ParamSet {
    pub fn zeros(graph: &ModelGraph) -> Self {
        let mut layout = Vec::with_capacity(graph.slots().len());
        let mut offset = 0;
        for slot in graph.slots() {
            layout.push((offset, slot.weight_len(), slot.bias_len()));
            offset += slot.len();
        }
        Self {
            layout,
            data: vec![0.0; offset],
        }
    }

    /// Wraps `data` with the graph's layout, checking the total length.
    pub fn from_vec(graph: &ModelGraph, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(graph);
        if data.len() != p.data.len() {
            return Err(Error::Shape(format!(
                "parameter vector has {} values, graph needs {}",
                data.len(),
                p.data.len()
            )));
        }
        p.data = data;
        Ok(p)
    }

    /// Same layout with every value zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn slot_count(&self) -> usize {
        self.layout.len()
    }

    pub fn weight(&self, slot: usize) -> &[f64] {
        let (o, w, _) = self.layout[slot];
        &self.data[o..o + w]
    }

    pub fn bias(&self, slot: usize) -> &[f64] {
        let (o, w, b) = self.layout[slot];
        &self.data[o + w..o + w + b]
    }

    pub fn weight_mut(&mut self, slot: usize) -> &mut [f64] {
        let (o, w, _) = self.layout[slot];
        &mut self.data[o..o + w]
    }

    pub fn bias_mut(&mut self, slot: usize) -> &mut [f64] {
        let (o, w, b) = self.layout[slot];
        &mut self.data[o + w..o + w + b]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Checks that this set was laid out for `graph`.
    pub fn conforms_to(&self, graph: &ModelGraph) -> Result<()> {
        let slots = graph.slots();
        let ok = self.layout.len() == slots.len()
            && self
                .layout
                .iter()
                .zip(slots)
                .all(|(&(_, w, b), s)| w == s.weight_len() && b == s.bias_len());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("parameter set does not match graph layout".into()))
        }
    }
}

/// He-normal weights (variance `2 / fan_in`), zero biases, unit affine scales.
pub fn init_params(graph: &ModelGraph, seed: u64) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::zeros(graph);
    for (i, slot) in graph.slots().iter().enumerate() {
        let fan_in = match slot.kind {
            SlotKind::Conv(spec) => spec.macs_per_output(),
            SlotKind::Linear { in_features, .. } => in_features,
            SlotKind::Affine { .. } => {
                params.weight_mut(i).fill(1.0);
                continue;
            }
        };
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        for w in params.weight_mut(i) {
            *w = normal.sample(&mut rng);
        }
    }
    params
}
