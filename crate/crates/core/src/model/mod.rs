//! Multi-task CNN: architecture construction, static cost analysis, parameter
//! initialisation and inference to per-frame attributes.

mod attributes;
mod cost;
mod forward;
mod graph;
mod params;

pub use attributes::{predict_attributes, predict_frame};
pub use cost::{
    analyze_graph, count_flops, count_params, single_task_summary, GraphReport, LayerRow,
    SingleTaskSummary, TraceRow,
};
pub use forward::{backward, forward, forward_trace, ForwardTrace, HeadOutputs};
pub use graph::{
    build_graph, build_graph_with, Block, CuHyperparams, CuKind, GraphConfig, ModelGraph, Node,
    Op, ParamSlot, SlotKind, StageSpec, Task, TaskMode,
};
pub use params::{init_params, ParamSet};
