use serde::{Deserialize, Serialize};

use super::graph::{build_graph_with, CuKind, GraphConfig, ModelGraph, Op, Task, TaskMode};
use crate::error::{Error, Result};

/// Per-node `(channels, height, width)` for an input of `(height, width)`.
pub(crate) fn trace_shapes(graph: &ModelGraph, input: (usize, usize)) -> Result<Vec<[usize; 3]>> {
    let (h, w) = input;
    if h == 0 || w == 0 {
        return Err(Error::Shape(format!("incompatible input size {h}x{w}")));
    }
    let mut shapes: Vec<[usize; 3]> = Vec::with_capacity(graph.nodes.len());
    for (i, node) in graph.nodes.iter().enumerate() {
        let first = node.inputs.first().map(|&j| shapes[j]);
        let shape = match node.op {
            Op::Input => [graph.config.input_channels, h, w],
            Op::Conv { spec, .. } => {
                let [_, ih, iw] = first.expect("conv has an input");
                let (oh, ow) = spec.output_hw(ih, iw).map_err(|e| {
                    Error::Shape(format!("incompatible input size {h}x{w} at node {i}: {e}"))
                })?;
                [spec.out_channels, oh, ow]
            }
            Op::Affine { .. } | Op::Relu => first.expect("unary op has an input"),
            Op::Add => {
                let a = first.expect("add has inputs");
                if node.inputs.iter().any(|&j| shapes[j] != a) {
                    return Err(Error::Shape(format!(
                        "incompatible input size {h}x{w}: residual operands differ at node {i}"
                    )));
                }
                a
            }
            Op::Concat => {
                let [_, ch, cw] = first.expect("concat has inputs");
                let mut c = 0;
                for &j in &node.inputs {
                    let [jc, jh, jw] = shapes[j];
                    if (jh, jw) != (ch, cw) {
                        return Err(Error::Shape(format!(
                            "incompatible input size {h}x{w}: concat operands differ at node {i}"
                        )));
                    }
                    c += jc;
                }
                [c, ch, cw]
            }
            Op::GlobalAvgPool => [first.expect("pool has an input")[0], 1, 1],
            Op::Linear { .. } => [node.channels, 1, 1],
        };
        shapes.push(shape);
    }
    Ok(shapes)
}

fn node_flops(graph: &ModelGraph, shapes: &[[usize; 3]], i: usize) -> u64 {
    let node = &graph.nodes[i];
    let [c, h, w] = shapes[i];
    let out = (c * h * w) as u64;
    match node.op {
        Op::Input | Op::Relu | Op::Concat => 0,
        Op::Conv { spec, .. } => out * spec.macs_per_output() as u64,
        Op::Affine { .. } | Op::Add => out,
        Op::GlobalAvgPool => {
            let [ic, ih, iw] = shapes[node.inputs[0]];
            (ic * ih * iw) as u64
        }
        Op::Linear { slot } => graph.slots[slot].weight_len() as u64,
    }
}

/// Total number of learnable scalars.
pub fn count_params(graph: &ModelGraph) -> u64 {
    graph.slots.iter().map(|s| s.len() as u64).sum()
}

/// Multiply-accumulates for one image of size `input`; one MAC counts as
/// one FLOP. Affine and residual adds cost one per element, pooling one add
/// per input element, ReLU and concat are free.
pub fn count_flops(graph: &ModelGraph, input: (usize, usize)) -> Result<u64> {
    let shapes = trace_shapes(graph, input)?;
    Ok((0..graph.nodes.len()).map(|i| node_flops(graph, &shapes, i)).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub name: String,
    pub table_row: String,
    /// `[channels, height, width]` of the block output.
    pub output: [usize; 3],
    pub params: u64,
    pub flops: u64,
}

/// Output shape of one architecture-table row (the last block in it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub label: String,
    pub repeats: usize,
    pub output: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub cu: CuKind,
    pub mode: String,
    pub input: (usize, usize),
    pub flop_convention: String,
    pub layers: Vec<LayerRow>,
    pub rows: Vec<TraceRow>,
    pub total_params: u64,
    pub total_flops: u64,
}

impl GraphReport {
    /// Spatial size per convolutional table row.
    pub fn spatial_trace(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| !r.label.starts_with("Linear") && r.label != "Avg. pool")
            .map(|r| r.output[1])
            .collect()
    }

    /// Distinct consecutive channel counts through the trunk.
    pub fn channel_trace(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for r in self.rows.iter().filter(|r| !r.label.starts_with("Linear")) {
            if out.last() != Some(&r.output[0]) {
                out.push(r.output[0]);
            }
        }
        out
    }
}

/// Per-block parameter/MAC table plus per-row output shapes.
pub fn analyze_graph(graph: &ModelGraph, input: (usize, usize)) -> Result<GraphReport> {
    let shapes = trace_shapes(graph, input)?;
    let mut layers: Vec<LayerRow> = graph
        .blocks
        .iter()
        .map(|b| LayerRow {
            name: b.name.clone(),
            table_row: graph.rows[b.row].0.clone(),
            output: [0, 0, 0],
            params: 0,
            flops: 0,
        })
        .collect();
    for (i, node) in graph.nodes.iter().enumerate() {
        let row = &mut layers[node.block];
        row.flops += node_flops(graph, &shapes, i);
        row.output = shapes[i];
        if let Op::Conv { slot, .. } | Op::Affine { slot } | Op::Linear { slot } = node.op {
            row.params += graph.slots[slot].len() as u64;
        }
    }
    // heads all hang off the pool; report their own widths
    for &(_, id) in graph.head_nodes() {
        layers[graph.nodes[id].block].output = shapes[id];
    }

    let mut rows: Vec<TraceRow> = graph
        .rows
        .iter()
        .map(|(label, repeats)| TraceRow {
            label: label.clone(),
            repeats: *repeats,
            output: [0, 0, 0],
        })
        .collect();
    for (block, layer) in graph.blocks.iter().zip(&layers) {
        if !rows[block.row].label.starts_with("Linear") {
            rows[block.row].output = layer.output;
        } else {
            rows[block.row].output = [graph.head_widths().iter().map(|h| h.1).sum(), 1, 1];
        }
    }

    Ok(GraphReport {
        cu: graph.cu(),
        mode: graph.mode().to_string(),
        input,
        flop_convention: "1 MAC = 1 FLOP".to_string(),
        total_params: layers.iter().map(|l| l.params).sum(),
        total_flops: layers.iter().map(|l| l.flops).sum(),
        layers,
        rows,
    })
}

/// Counts for four separate single-task networks next to the shared one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTaskSummary {
    pub cu: CuKind,
    pub per_task: Vec<(Task, u64, u64)>,
    pub summed_params: u64,
    pub summed_flops: u64,
    pub multi_task_params: u64,
    pub multi_task_flops: u64,
}

pub fn single_task_summary(config: &GraphConfig) -> Result<SingleTaskSummary> {
    let mut per_task = Vec::with_capacity(4);
    for task in Task::ALL {
        let mut cfg = config.clone();
        cfg.mode = TaskMode::SingleTask(task);
        let g = build_graph_with(cfg)?;
        per_task.push((task, count_params(&g), count_flops(&g, g.input_size())?));
    }
    let mut cfg = config.clone();
    cfg.mode = TaskMode::MultiTask;
    let multi = build_graph_with(cfg)?;
    Ok(SingleTaskSummary {
        cu: config.cu,
        summed_params: per_task.iter().map(|t| t.1).sum(),
        summed_flops: per_task.iter().map(|t| t.2).sum(),
        multi_task_params: count_params(&multi),
        multi_task_flops: count_flops(&multi, multi.input_size())?,
        per_task,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_graph;

    #[test]
    fn stem_costs() {
        let g = build_graph(CuKind::Eesp, TaskMode::MultiTask);
        let stem = &g.slots()[0];
        assert_eq!(stem.len(), 3 * 3 * 3 * 32 + 32);
        let shapes = trace_shapes(&g, (224, 224)).unwrap();
        assert_eq!(node_flops(&g, &shapes, 1), 864 * 112 * 112);
        assert_eq!(node_flops(&g, &shapes, 1), 10_838_016);
    }

    #[test]
    fn zero_input_is_incompatible() {
        let g = build_graph(CuKind::Bottleneck, TaskMode::MultiTask);
        assert!(count_flops(&g, (0, 224)).is_err());
    }
}
