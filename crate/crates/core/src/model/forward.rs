use serde::{Deserialize, Serialize};

use super::graph::{ModelGraph, Op, Task};
use super::params::ParamSet;
use crate::error::{Error, Result};
use crate::numerics::{
    self, channel_affine, channel_affine_backward, conv2d, conv2d_backward, global_avg_pool,
    global_avg_pool_backward, linear, linear_backward, Tensor4,
};

/// Raw head outputs for a batch: logits for expr/AU, unsquashed scalars for
/// arousal/valence. Each head is stored row-major as `batch x width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadOutputs {
    pub batch: usize,
    pub heads: Vec<(Task, Vec<f64>)>,
}

impl HeadOutputs {
    pub fn get(&self, task: Task) -> Option<&[f64]> {
        self.heads
            .iter()
            .find(|(t, _)| *t == task)
            .map(|(_, v)| v.as_slice())
    }

    pub fn row(&self, task: Task, index: usize) -> Option<&[f64]> {
        let values = self.get(task)?;
        let width = values.len() / self.batch.max(1);
        values.get(index * width..(index + 1) * width)
    }

    pub fn tasks(&self) -> Vec<Task> {
        self.heads.iter().map(|(t, _)| *t).collect()
    }

    /// Zero-valued outputs with the given per-task widths.
    pub fn zeros(batch: usize, widths: &[(Task, usize)]) -> Self {
        Self {
            batch,
            heads: widths
                .iter()
                .map(|&(t, w)| (t, vec![0.0; batch * w]))
                .collect(),
        }
    }

    pub fn get_mut(&mut self, task: Task) -> Option<&mut [f64]> {
        self.heads
            .iter_mut()
            .find(|(t, _)| *t == task)
            .map(|(_, v)| v.as_mut_slice())
    }
}

/// Every node's value from one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    values: Vec<Tensor4>,
}

impl ForwardTrace {
    pub fn value(&self, node: usize) -> &Tensor4 {
        &self.values[node]
    }

    pub fn heads(&self, graph: &ModelGraph) -> HeadOutputs {
        let batch = self.values[0].batch();
        HeadOutputs {
            batch,
            heads: graph
                .head_nodes()
                .iter()
                .map(|&(t, id)| (t, self.values[id].data().to_vec()))
                .collect(),
        }
    }
}

fn check_batch(graph: &ModelGraph, params: &ParamSet, batch: &Tensor4) -> Result<()> {
    params.conforms_to(graph)?;
    let (h, w) = graph.input_size();
    let expected = [graph.config().input_channels, h, w];
    if batch.dims()[1..] != expected || batch.batch() == 0 {
        return Err(Error::Shape(format!(
            "batch dims {:?} do not match graph input {expected:?}",
            batch.dims()
        )));
    }
    Ok(())
}

fn batched_linear(x: &Tensor4, weights: &[f64], bias: &[f64]) -> Result<Tensor4> {
    let mut data = Vec::with_capacity(x.batch() * bias.len());
    for n in 0..x.batch() {
        data.extend(linear(x.item(n), weights, bias)?);
    }
    Tensor4::new([x.batch(), bias.len(), 1, 1], data)
}

fn concat_channels(parts: &[&Tensor4]) -> Result<Tensor4> {
    let [n, _, h, w] = parts[0].dims();
    let c: usize = parts.iter().map(|p| p.channels()).sum();
    let mut data = Vec::with_capacity(n * c * h * w);
    for b in 0..n {
        for p in parts {
            if p.height() != h || p.width() != w || p.batch() != n {
                return Err(Error::Shape("concat operands differ in shape".into()));
            }
            data.extend_from_slice(p.item(b));
        }
    }
    Tensor4::new([n, c, h, w], data)
}

/// Runs the graph and keeps every intermediate value.
pub fn forward_trace(graph: &ModelGraph, params: &ParamSet, batch: &Tensor4) -> Result<ForwardTrace> {
    check_batch(graph, params, batch)?;
    numerics::ensure_finite(batch.data(), "model input")?;
    let mut values: Vec<Tensor4> = Vec::with_capacity(graph.nodes().len());
    for (i, node) in graph.nodes().iter().enumerate() {
        let arg = |k: usize| &values[node.inputs[k]];
        let out = match node.op {
            Op::Input => Ok(batch.clone()),
            Op::Conv { spec, slot } => conv2d(arg(0), &spec, params.weight(slot), params.bias(slot)),
            Op::Affine { slot } => channel_affine(arg(0), params.weight(slot), params.bias(slot)),
            Op::Relu => {
                let x = arg(0);
                Tensor4::new(x.dims(), x.data().iter().map(|v| v.max(0.0)).collect())
            }
            Op::Add => numerics::add(arg(0), arg(1)),
            Op::Concat => {
                let parts: Vec<&Tensor4> = node.inputs.iter().map(|&j| &values[j]).collect();
                concat_channels(&parts)
            }
            Op::GlobalAvgPool => global_avg_pool(arg(0)),
            Op::Linear { slot } => batched_linear(arg(0), params.weight(slot), params.bias(slot)),
        }
        .map_err(|e| match e {
            Error::Numeric(msg) => Error::Numeric(format!(
                "layer {i} ({}): {msg}",
                graph.blocks()[node.block].name
            )),
            other => other,
        })?;
        if let Some(bad) = out.data().iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "layer {i} ({}) produced {bad}",
                graph.blocks()[node.block].name
            )));
        }
        values.push(out);
    }
    Ok(ForwardTrace { values })
}

/// Raw head outputs for a batch of images.
pub fn forward(graph: &ModelGraph, params: &ParamSet, batch: &Tensor4) -> Result<HeadOutputs> {
    Ok(forward_trace(graph, params, batch)?.heads(graph))
}

fn accumulate(slot: &mut Option<Tensor4>, grad: Tensor4) -> Result<()> {
    match slot {
        Some(existing) => {
            existing.same_dims(&grad, "adjoint accumulation")?;
            for (a, g) in existing.data_mut().iter_mut().zip(grad.data()) {
                *a += g;
            }
        }
        None => *slot = Some(grad),
    }
    Ok(())
}

/// Parameter adjoints for the given head adjoints (same layout as the
/// forward heads; missing heads contribute nothing).
pub fn backward(
    graph: &ModelGraph,
    params: &ParamSet,
    trace: &ForwardTrace,
    head_adjoints: &HeadOutputs,
) -> Result<ParamSet> {
    params.conforms_to(graph)?;
    let batch = trace.values[0].batch();
    let mut adj: Vec<Option<Tensor4>> = vec![None; graph.nodes().len()];
    for &(task, id) in graph.head_nodes() {
        if let Some(values) = head_adjoints.get(task) {
            let g = Tensor4::new([batch, graph.nodes()[id].channels, 1, 1], values.to_vec())?;
            accumulate(&mut adj[id], g)?;
        }
    }

    let mut grads = params.zeros_like();
    for (i, node) in graph.nodes().iter().enumerate().rev() {
        let Some(up) = adj[i].take() else { continue };
        let input = |k: usize| &trace.values[node.inputs[k]];
        match node.op {
            Op::Input => {}
            Op::Conv { spec, slot } => {
                let g = conv2d_backward(input(0), &spec, params.weight(slot), &up)?;
                add_into(grads.weight_mut(slot), &g.weights);
                add_into(grads.bias_mut(slot), &g.bias);
                accumulate(&mut adj[node.inputs[0]], g.input)?;
            }
            Op::Affine { slot } => {
                let g = channel_affine_backward(input(0), params.weight(slot), &up)?;
                add_into(grads.weight_mut(slot), &g.scale);
                add_into(grads.bias_mut(slot), &g.shift);
                accumulate(&mut adj[node.inputs[0]], g.input)?;
            }
            Op::Relu => {
                let x = input(0);
                let data = x
                    .data()
                    .iter()
                    .zip(up.data())
                    .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                accumulate(&mut adj[node.inputs[0]], Tensor4::new(x.dims(), data)?)?;
            }
            Op::Add => {
                for &j in &node.inputs {
                    accumulate(&mut adj[j], up.clone())?;
                }
            }
            Op::Concat => {
                let [n, _, h, w] = up.dims();
                let plane = h * w;
                let mut offset = 0;
                for &j in &node.inputs {
                    let c = trace.values[j].channels();
                    let mut data = Vec::with_capacity(n * c * plane);
                    for b in 0..n {
                        data.extend_from_slice(&up.item(b)[offset * plane..(offset + c) * plane]);
                    }
                    offset += c;
                    accumulate(&mut adj[j], Tensor4::new([n, c, h, w], data)?)?;
                }
            }
            Op::GlobalAvgPool => {
                let g = global_avg_pool_backward(input(0).dims(), &up)?;
                accumulate(&mut adj[node.inputs[0]], g)?;
            }
            Op::Linear { slot } => {
                let x = input(0);
                let mut gin = Vec::with_capacity(x.len());
                for b in 0..batch {
                    let g = linear_backward(x.item(b), params.weight(slot), up.item(b))?;
                    add_into(grads.weight_mut(slot), &g.weights);
                    add_into(grads.bias_mut(slot), &g.bias);
                    gin.extend(g.input);
                }
                accumulate(&mut adj[node.inputs[0]], Tensor4::new(x.dims(), gin)?)?;
            }
        }
    }
    Ok(grads)
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
