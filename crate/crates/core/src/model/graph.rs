use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ConvSpec;

/// One of the four facial-attribute prediction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Expr,
    Au,
    Arousal,
    Valence,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Expr, Task::Au, Task::Arousal, Task::Valence];

    /// Head width: 8 expressions, 12 action units, one scalar per affect axis.
    pub fn width(self) -> usize {
        match self {
            Task::Expr => 8,
            Task::Au => 12,
            Task::Arousal | Task::Valence => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Expr => "expr",
            Task::Au => "au",
            Task::Arousal => "arousal",
            Task::Valence => "valence",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "expr" | "expression" => Ok(Task::Expr),
            "au" | "aus" => Ok(Task::Au),
            "aro" | "arousal" => Ok(Task::Arousal),
            "val" | "valence" => Ok(Task::Valence),
            other => Err(Error::InvalidArgument(format!("unknown task `{other}`"))),
        }
    }
}

/// Repeated convolutional unit of the trunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CuKind {
    Bottleneck,
    MobileNet,
    Eesp,
}

impl CuKind {
    pub const ALL: [CuKind; 3] = [CuKind::Bottleneck, CuKind::MobileNet, CuKind::Eesp];

    pub fn name(self) -> &'static str {
        match self {
            CuKind::Bottleneck => "bottleneck",
            CuKind::MobileNet => "mobilenet",
            CuKind::Eesp => "eesp",
        }
    }
}

impl fmt::Display for CuKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CuKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bottleneck" => Ok(CuKind::Bottleneck),
            "mobilenet" => Ok(CuKind::MobileNet),
            "eesp" => Ok(CuKind::Eesp),
            other => Err(Error::InvalidArgument(format!("unknown CU kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    MultiTask,
    SingleTask(Task),
}

impl TaskMode {
    pub fn tasks(self) -> Vec<Task> {
        match self {
            TaskMode::MultiTask => Task::ALL.to_vec(),
            TaskMode::SingleTask(t) => vec![t],
        }
    }
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskMode::MultiTask => f.write_str("multi"),
            TaskMode::SingleTask(t) => write!(f, "single:{t}"),
        }
    }
}

impl FromStr for TaskMode {
    type Err = Error;

    /// `multi` or `single:<task>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s.eq_ignore_ascii_case("multi") => Ok(TaskMode::MultiTask),
            Some((head, task)) if head.eq_ignore_ascii_case("single") => {
                Ok(TaskMode::SingleTask(task.parse()?))
            }
            _ => Err(Error::InvalidArgument(format!(
                "task mode must be `multi` or `single:<task>`, got `{s}`"
            ))),
        }
    }
}

/// Internal widths of the convolutional units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuHyperparams {
    /// Inner width of the bottleneck 3x3 as a multiple of the unit's output channels.
    pub bottleneck_width: f64,
    /// MobileNet hidden width as a multiple of the unit's input channels.
    pub mobilenet_expansion: f64,
    /// Number of parallel dilated depthwise branches (dilations 1..=branches).
    pub eesp_branches: usize,
    /// Width of each EESP branch as a multiple of the unit's output channels.
    pub eesp_branch_width: f64,
    pub eesp_reduce_groups: usize,
    pub eesp_expand_groups: usize,
}

impl Default for CuHyperparams {
    fn default() -> Self {
        Self {
            bottleneck_width: 1.25,
            mobilenet_expansion: 7.0,
            eesp_branches: 4,
            eesp_branch_width: 2.0,
            eesp_reduce_groups: 4,
            eesp_expand_groups: 2,
        }
    }
}

/// A run of `repeats` units; only the first applies `stride`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub channels: usize,
    pub stride: usize,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub input_channels: usize,
    pub input_size: (usize, usize),
    pub stem_channels: usize,
    pub stem_stride: usize,
    /// Each entry is one row of the architecture table.
    pub stages: Vec<StageSpec>,
    /// Channels of the closing depthwise 3x3 (a channel multiplier over the
    /// last stage), or `None` to go straight to pooling.
    pub final_dw_channels: Option<usize>,
    pub cu: CuKind,
    pub mode: TaskMode,
    pub hyper: CuHyperparams,
}

impl GraphConfig {
    /// The reference architecture: 224x224 RGB input, trunk rows
    /// 32/2, 32/1, 64/2, 64x3, 128/2, 128x7, 256/2, 256x3, a 256->512
    /// depthwise 3x3 and one linear head per task.
    pub fn reference(cu: CuKind, mode: TaskMode) -> Self {
        let row = |channels, stride, repeats| StageSpec {
            channels,
            stride,
            repeats,
        };
        Self {
            input_channels: 3,
            input_size: (224, 224),
            stem_channels: 32,
            stem_stride: 2,
            stages: vec![
                row(32, 2, 1),
                row(32, 1, 1),
                row(64, 2, 1),
                row(64, 1, 3),
                row(128, 2, 1),
                row(128, 1, 7),
                row(256, 2, 1),
                row(256, 1, 3),
            ],
            final_dw_channels: Some(512),
            cu,
            mode,
            hyper: CuHyperparams::default(),
        }
    }

    pub fn with_input_size(mut self, height: usize, width: usize) -> Self {
        self.input_size = (height, width);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.stem_channels == 0 || self.stem_stride == 0 {
            return Err(Error::InvalidArgument("graph stem must be non-empty".into()));
        }
        if self.input_size.0 == 0 || self.input_size.1 == 0 {
            return Err(Error::InvalidArgument("graph input size must be positive".into()));
        }
        for s in &self.stages {
            if s.channels == 0 || s.stride == 0 || s.repeats == 0 {
                return Err(Error::InvalidArgument(format!("invalid stage {s:?}")));
            }
        }
        let h = &self.hyper;
        if h.bottleneck_width <= 0.0
            || h.mobilenet_expansion <= 0.0
            || h.eesp_branch_width <= 0.0
            || h.eesp_branches == 0
            || h.eesp_reduce_groups == 0
            || h.eesp_expand_groups == 0
        {
            return Err(Error::InvalidArgument(format!("invalid CU hyperparameters {h:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotKind {
    Conv(ConvSpec),
    Affine { channels: usize },
    Linear { in_features: usize, out_features: usize },
}

/// A named parameter tensor pair (weight, bias); affine slots store
/// (scale, shift).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub name: String,
    pub kind: SlotKind,
}

impl ParamSlot {
    pub fn weight_len(&self) -> usize {
        match self.kind {
            SlotKind::Conv(spec) => spec.weight_len(),
            SlotKind::Affine { channels } => channels,
            SlotKind::Linear {
                in_features,
                out_features,
            } => in_features * out_features,
        }
    }

    pub fn bias_len(&self) -> usize {
        match self.kind {
            SlotKind::Conv(spec) => spec.bias_len(),
            SlotKind::Affine { channels } => channels,
            SlotKind::Linear { out_features, .. } => out_features,
        }
    }

    pub fn len(&self) -> usize {
        self.weight_len() + self.bias_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Input,
    Conv { spec: ConvSpec, slot: usize },
    Affine { slot: usize },
    Relu,
    Add,
    Concat,
    GlobalAvgPool,
    Linear { slot: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub op: Op,
    pub inputs: Vec<usize>,
    pub block: usize,
    pub channels: usize,
}

/// A named group of nodes: the stem, one unit, the closing depthwise conv,
/// the pool or one head. `row` indexes the architecture table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub row: usize,
}

/// Immutable dataflow graph; nodes are stored in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    pub(crate) config: GraphConfig,
    pub(crate) nodes: Vec<Node>,
    pub(crate) slots: Vec<ParamSlot>,
    pub(crate) blocks: Vec<Block>,
    pub(crate) rows: Vec<(String, usize)>,
    pub(crate) heads: Vec<(Task, usize)>,
}

impl ModelGraph {
    pub fn config(&self) -> &GraphConfig {
        &self.config
    }

    pub fn cu(&self) -> CuKind {
        self.config.cu
    }

    pub fn mode(&self) -> TaskMode {
        self.config.mode
    }

    pub fn input_size(&self) -> (usize, usize) {
        self.config.input_size
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Architecture table rows as `(label, repeats)`.
    pub fn rows(&self) -> &[(String, usize)] {
        &self.rows
    }

    /// `(task, head width)` in head order.
    pub fn head_widths(&self) -> Vec<(Task, usize)> {
        self.heads
            .iter()
            .map(|&(t, id)| (t, self.nodes[id].channels))
            .collect()
    }

    pub(crate) fn head_nodes(&self) -> &[(Task, usize)] {
        &self.heads
    }
}

/// Builds the reference architecture for `cu` and `mode`.
pub fn build_graph(cu: CuKind, mode: TaskMode) -> ModelGraph {
    build_graph_with(GraphConfig::reference(cu, mode)).expect("reference config is valid")
}

pub fn build_graph_with(config: GraphConfig) -> Result<ModelGraph> {
    config.validate()?;
    let mut b = Builder::default();

    b.row(&format!("Conv-3/{}", config.stem_stride), 1);
    b.block("stem");
    let input = b.push(Op::Input, vec![], config.input_channels);
    let stem = ConvSpec::new(config.input_channels, config.stem_channels, 3).stride(config.stem_stride);
    let mut x = b.conv_affine(input, stem, "conv", true)?;
    let mut channels = config.stem_channels;

    let mut unit_index = 0;
    for (stage_no, stage) in config.stages.iter().enumerate() {
        b.row(&format!("CU/{}", stage.stride), stage.repeats);
        for r in 0..stage.repeats {
            unit_index += 1;
            b.block(&format!("row{}.unit{}", stage_no + 1, r + 1));
            let stride = if r == 0 { stage.stride } else { 1 };
            x = match config.cu {
                CuKind::Bottleneck => b.bottleneck(x, channels, stage.channels, stride, &config.hyper)?,
                CuKind::MobileNet => b.mobilenet(x, channels, stage.channels, stride, &config.hyper)?,
                CuKind::Eesp => b.eesp(x, channels, stage.channels, stride, &config.hyper)?,
            };
            channels = stage.channels;
        }
    }
    debug_assert!(unit_index == config.stages.iter().map(|s| s.repeats).sum::<usize>());

    if let Some(out) = config.final_dw_channels {
        if out % channels != 0 {
            return Err(Error::InvalidArgument(format!(
                "depthwise output {out} is not a multiple of {channels} channels"
            )));
        }
        b.row("DWConv-3/1", 1);
        b.block("dwconv");
        let spec = ConvSpec::new(channels, out, 3).groups(channels);
        x = b.conv_affine(x, spec, "conv", true)?;
        channels = out;
    }

    b.row("Avg. pool", 1);
    b.block("pool");
    let pooled = b.push(Op::GlobalAvgPool, vec![x], channels);

    let tasks = config.mode.tasks();
    b.row(&format!("Linear x{}", tasks.len()), 1);
    let mut heads = Vec::with_capacity(tasks.len());
    for task in tasks {
        b.block(&format!("head.{task}"));
        let slot = b.slot(
            "linear",
            SlotKind::Linear {
                in_features: channels,
                out_features: task.width(),
            },
        );
        let id = b.push(Op::Linear { slot }, vec![pooled], task.width());
        heads.push((task, id));
    }

    Ok(ModelGraph {
        config,
        nodes: b.nodes,
        slots: b.slots,
        blocks: b.blocks,
        rows: b.rows,
        heads,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn scaled(channels: usize, factor: f64) -> usize {
    ((channels as f64 * factor).round() as usize).max(1)
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    slots: Vec<ParamSlot>,
    blocks: Vec<Block>,
    rows: Vec<(String, usize)>,
}

impl Builder {
    fn row(&mut self, label: &str, repeats: usize) {
        self.rows.push((label.to_string(), repeats));
    }

    fn block(&mut self, name: &str) {
        self.blocks.push(Block {
            name: name.to_string(),
            row: self.rows.len() - 1,
        });
    }

    fn push(&mut self, op: Op, inputs: Vec<usize>, channels: usize) -> usize {
        self.nodes.push(Node {
            op,
            inputs,
            block: self.blocks.len() - 1,
            channels,
        });
        self.nodes.len() - 1
    }

    fn slot(&mut self, name: &str, kind: SlotKind) -> usize {
        let block = &self.blocks[self.blocks.len() - 1].name;
        self.slots.push(ParamSlot {
            name: format!("{block}.{name}"),
            kind,
        });
        self.slots.len() - 1
    }

    /// Convolution, per-channel affine and optional ReLU.
    fn conv_affine(&mut self, x: usize, spec: ConvSpec, name: &str, relu: bool) -> Result<usize> {
        spec.validate()?;
        debug_assert_eq!(self.nodes[x].channels, spec.in_channels);
        let slot = self.slot(name, SlotKind::Conv(spec));
        let c = self.push(Op::Conv { spec, slot }, vec![x], spec.out_channels);
        let slot = self.slot(
            &format!("{name}.affine"),
            SlotKind::Affine {
                channels: spec.out_channels,
            },
        );
        let a = self.push(Op::Affine { slot }, vec![c], spec.out_channels);
        Ok(if relu { self.relu(a) } else { a })
    }

    fn relu(&mut self, x: usize) -> usize {
        let c = self.nodes[x].channels;
        self.push(Op::Relu, vec![x], c)
    }

    fn add(&mut self, a: usize, b: usize) -> usize {
        let c = self.nodes[a].channels;
        debug_assert_eq!(c, self.nodes[b].channels);
        self.push(Op::Add, vec![a, b], c)
    }

    fn shortcut(&mut self, x: usize, cin: usize, cout: usize, stride: usize) -> Result<usize> {
        if stride == 1 && cin == cout {
            Ok(x)
        } else {
            let spec = ConvSpec::new(cin, cout, 1).stride(stride);
            self.conv_affine(x, spec, "shortcut", false)
        }
    }

    /// 1x1 reduce, strided 3x3, 1x1 expand, residual add, ReLU.
    fn bottleneck(
        &mut self,
        x: usize,
        cin: usize,
        cout: usize,
        stride: usize,
        h: &CuHyperparams,
    ) -> Result<usize> {
        let mid = scaled(cout, h.bottleneck_width);
        let a = self.conv_affine(x, ConvSpec::new(cin, mid, 1), "reduce", true)?;
        let b = self.conv_affine(a, ConvSpec::new(mid, mid, 3).stride(stride), "conv3", true)?;
        let c = self.conv_affine(b, ConvSpec::new(mid, cout, 1), "expand", false)?;
        let s = self.shortcut(x, cin, cout, stride)?;
        let sum = self.add(c, s);
        Ok(self.relu(sum))
    }

    /// Optional 1x1 expansion, strided depthwise 3x3, 1x1 pointwise, residual
    /// add when shapes allow, ReLU.
    fn mobilenet(
        &mut self,
        x: usize,
        cin: usize,
        cout: usize,
        stride: usize,
        h: &CuHyperparams,
    ) -> Result<usize> {
        let hidden = scaled(cin, h.mobilenet_expansion);
        let e = if hidden == cin {
            x
        } else {
            self.conv_affine(x, ConvSpec::new(cin, hidden, 1), "expand", true)?
        };
        let dw = ConvSpec::new(hidden, hidden, 3).stride(stride).groups(hidden);
        let d = self.conv_affine(e, dw, "depthwise", true)?;
        let p = self.conv_affine(d, ConvSpec::new(hidden, cout, 1), "pointwise", false)?;
        let out = if stride == 1 && cin == cout {
            self.add(p, x)
        } else {
            p
        };
        Ok(self.relu(out))
    }

    /// Grouped 1x1 reduce, parallel dilated depthwise 3x3 branches joined by
    /// hierarchical sums, concat, grouped 1x1 expand, residual add, ReLU.
    fn eesp(
        &mut self,
        x: usize,
        cin: usize,
        cout: usize,
        stride: usize,
        h: &CuHyperparams,
    ) -> Result<usize> {
        let width = scaled(cout, h.eesp_branch_width);
        let g_reduce = gcd(h.eesp_reduce_groups, gcd(cin, width));
        let r = self.conv_affine(x, ConvSpec::new(cin, width, 1).groups(g_reduce), "reduce", true)?;

        let mut merged: Vec<usize> = Vec::with_capacity(h.eesp_branches);
        for k in 1..=h.eesp_branches {
            let spec = ConvSpec::new(width, width, 3)
                .dilation(k)
                .stride(stride)
                .groups(width);
            let branch = self.conv_affine(r, spec, &format!("branch{k}"), false)?;
            let joined = match merged.last() {
                Some(&prev) => self.add(prev, branch),
                None => branch,
            };
            merged.push(joined);
        }
        let total = width * h.eesp_branches;
        let cat = self.push(Op::Concat, merged, total);
        let cat = self.relu(cat);

        let g_expand = gcd(h.eesp_expand_groups, gcd(total, cout));
        let e = self.conv_affine(cat, ConvSpec::new(total, cout, 1).groups(g_expand), "expand", false)?;
        let s = self.shortcut(x, cin, cout, stride)?;
        let sum = self.add(e, s);
        Ok(self.relu(sum))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_modes_and_kinds() {
        assert_eq!("multi".parse::<TaskMode>().unwrap(), TaskMode::MultiTask);
        assert_eq!(
            "single:valence".parse::<TaskMode>().unwrap(),
            TaskMode::SingleTask(Task::Valence)
        );
        assert!("single".parse::<TaskMode>().is_err());
        assert_eq!("EESP".parse::<CuKind>().unwrap(), CuKind::Eesp);
        assert!("resnet".parse::<CuKind>().is_err());
    }

    #[test]
    fn single_task_graph_has_one_head() {
        let g = build_graph(CuKind::MobileNet, TaskMode::SingleTask(Task::Expr));
        assert_eq!(g.head_widths(), vec![(Task::Expr, 8)]);
    }

    #[test]
    fn multi_task_head_widths() {
        let g = build_graph(CuKind::Eesp, TaskMode::MultiTask);
        assert_eq!(
            g.head_widths(),
            vec![(Task::Expr, 8), (Task::Au, 12), (Task::Arousal, 1), (Task::Valence, 1)]
        );
    }

    #[test]
    fn rows_follow_reference_repeats() {
        let g = build_graph(CuKind::Bottleneck, TaskMode::MultiTask);
        let repeats: Vec<usize> = g.rows().iter().take(10).map(|r| r.1).collect();
        assert_eq!(repeats, vec![1, 1, 1, 1, 3, 1, 7, 1, 3, 1]);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = GraphConfig::reference(CuKind::Eesp, TaskMode::MultiTask);
        cfg.stages[0].repeats = 0;
        assert!(build_graph_with(cfg).is_err());
        let mut cfg = GraphConfig::reference(CuKind::Eesp, TaskMode::MultiTask);
        cfg.final_dw_channels = Some(300);
        assert!(build_graph_with(cfg).is_err());
    }
}
