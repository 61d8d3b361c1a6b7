//! The `asdface` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, ClassifierSpec, Hyperparams};
use crate::error::{Error, Result};
use crate::eval::{
    ablation_study, attribute_mask, attribute_significance, default_ablation_subsets, loocv, Diagnosis,
};
use crate::features::{feature_names, temporal_feature_vector, Attribute, TemporalFeatures, DEFAULT_TAU};
use crate::io::{
    load_cohort, parse_frames, parse_manifest, render_text, synth_cohort, AttributeEffects, Report, ReportFormat,
    SynthSpec,
};
use crate::model::{analyze_graph, build_graph_with, single_task_summary, CuKind, GraphConfig, GraphReport, SingleTaskSummary, TaskMode};
use crate::training::{train_toy, ToyConfig};

#[derive(Debug, Parser)]
#[command(name = "asdface", version, about = "Facial-attribute ASD screening pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Random seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report destination (stdout when absent). For `synth`, the cohort directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Report format: json or text (extract-features also accepts csv).
    #[arg(long, global = true, default_value = "json")]
    pub format: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parameter and MAC table for the multi-task network.
    AnalyzeGraph {
        #[command(flatten)]
        common: Common,
        /// bottleneck, mobilenet or eesp; all three when absent.
        #[arg(long)]
        cu: Option<CuKind>,
        /// multi or single:<task>.
        #[arg(long)]
        mode: Option<TaskMode>,
        #[arg(long)]
        input_size: Option<usize>,
    },
    /// Train the small multi-task network on synthetic images.
    TrainToy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        images: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        augment: bool,
    },
    /// Frame CSV(s) to 58-dim participant features.
    ExtractFeatures {
        #[command(flatten)]
        common: Common,
        /// Frame CSV files.
        #[arg(long = "frames")]
        frames: Vec<PathBuf>,
        /// Cohort manifest; every listed participant is processed.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Leave-one-out evaluation of one classifier.
    Loocv {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalArgs,
        /// Comma-separated attribute groups (au, arousal, valence, expr).
        #[arg(long)]
        attributes: Option<String>,
    },
    /// Leave-one-out metrics for the standard attribute subsets.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// ASD versus non-ASD t-tests per attribute and per feature.
    Ttest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Write a synthetic cohort (manifest plus frame CSVs).
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        participants: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        effect_au: Option<f64>,
        #[arg(long)]
        effect_arousal: Option<f64>,
        #[arg(long)]
        effect_valence: Option<f64>,
        #[arg(long)]
        effect_expr: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long)]
    pub tau: Option<f64>,
}

impl clap::builder::ValueParserFactory for CuKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<CuKind>().map_err(|e| e.to_string()))
    }
}

impl clap::builder::ValueParserFactory for TaskMode {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<TaskMode>().map_err(|e| e.to_string()))
    }
}

impl clap::builder::ValueParserFactory for ClassifierKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<ClassifierKind>().map_err(|e| e.to_string()))
    }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", p.display())))
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GraphFileConfig {
    cu: Option<String>,
    mode: Option<String>,
    input_size: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalFileConfig {
    manifest: Option<PathBuf>,
    classifier: Option<ClassifierKind>,
    params: Option<Hyperparams>,
    attributes: Option<Vec<Attribute>>,
    tau: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FeatureFileConfig {
    frames: Vec<PathBuf>,
    manifest: Option<PathBuf>,
    tau: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct GraphAnalysis {
    graphs: Vec<GraphReport>,
    single_task: Vec<SingleTaskSummary>,
}

#[derive(Debug, Serialize)]
struct ParticipantFeatures {
    id: String,
    diagnosis: Option<Diagnosis>,
    features: TemporalFeatures,
}

#[derive(Debug, Serialize)]
struct FeatureTable {
    tau: f64,
    names: Vec<String>,
    participants: Vec<ParticipantFeatures>,
}

#[derive(Debug, Serialize)]
struct SynthSummary {
    spec: SynthSpec,
    /// Relative to the cohort directory, so the report is location-independent.
    manifest: PathBuf,
    asd: usize,
    non_asd: usize,
}

fn emit<T: Serialize>(common: &Common, kind: &str, seed: Option<u64>, result: T) -> Result<()> {
    let report = Report::new(kind, seed, result);
    let format: ReportFormat = common.format.parse()?;
    let text = match format {
        ReportFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
        ReportFormat::Text => render_text(&report)?,
    };
    write_output(common.output.as_deref(), &text)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn require_manifest(m: Option<PathBuf>) -> Result<PathBuf> {
    m.ok_or_else(|| Error::InvalidArgument("--manifest is required (flag or config)".into()))
}

fn tau_or_default(tau: Option<f64>) -> Result<f64> {
    let tau = tau.unwrap_or(DEFAULT_TAU);
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside [0, 1]")));
    }
    Ok(tau)
}

fn parse_attributes(s: &str) -> Result<Vec<Attribute>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

fn eval_setup(common: &Common, args: &EvalArgs) -> Result<(EvalFileConfig, ClassifierSpec, PathBuf, f64, u64)> {
    let file: EvalFileConfig = load_config(common.config.as_deref())?;
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let kind = args.classifier.or(file.classifier).unwrap_or(ClassifierKind::LogisticRegression);
    let spec = ClassifierSpec {
        kind,
        params: file.params.clone().unwrap_or_default(),
        seed,
    };
    let manifest = require_manifest(args.manifest.clone().or(file.manifest.clone()))?;
    let tau = tau_or_default(args.tau.or(file.tau))?;
    Ok((file, spec, manifest, tau, seed))
}

/// Runs one command line (including the program name).
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            std::process::exit(0)
        }
        _ => Error::InvalidArgument(e.to_string().trim_end().to_string()),
    })?;
    match cli.command {
        Command::AnalyzeGraph {
            common,
            cu,
            mode,
            input_size,
        } => {
            let file: GraphFileConfig = load_config(common.config.as_deref())?;
            let seed = common.seed.or(file.seed);
            let cus = match cu.map(Ok).or(file.cu.as_deref().map(str::parse)) {
                Some(c) => vec![c?],
                None => CuKind::ALL.to_vec(),
            };
            let mode = match mode.map(Ok).or(file.mode.as_deref().map(str::parse)) {
                Some(m) => m?,
                None => TaskMode::MultiTask,
            };
            let size = input_size.or(file.input_size).unwrap_or(224);
            let mut graphs = Vec::new();
            let mut single_task = Vec::new();
            for cu in cus {
                let config = GraphConfig::reference(cu, mode).with_input_size(size, size);
                let graph = build_graph_with(config.clone())?;
                graphs.push(analyze_graph(&graph, (size, size))?);
                single_task.push(single_task_summary(&config)?);
            }
            emit(&common, "analyze-graph", seed, GraphAnalysis { graphs, single_task })
        }
        Command::TrainToy {
            common,
            epochs,
            images,
            batch_size,
            augment,
        } => {
            let mut cfg: ToyConfig = load_config(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.train.seed = s;
            }
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(n) = images {
                cfg.images = n;
            }
            if let Some(b) = batch_size {
                cfg.train.batch_size = b;
            }
            cfg.augment |= augment;
            let report = train_toy(&cfg)?;
            emit(&common, "train-toy", Some(cfg.train.seed), report)
        }
        Command::ExtractFeatures {
            common,
            frames,
            manifest,
            tau,
        } => {
            let file: FeatureFileConfig = load_config(common.config.as_deref())?;
            let tau = tau_or_default(tau.or(file.tau))?;
            let seed = common.seed.or(file.seed);
            let frames = if frames.is_empty() { file.frames } else { frames };
            let manifest = manifest.or(file.manifest);
            let mut participants = Vec::new();
            for path in &frames {
                let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                participants.push(ParticipantFeatures {
                    id,
                    diagnosis: None,
                    features: temporal_feature_vector(&parse_frames(path)?, tau)?,
                });
            }
            if let Some(m) = manifest {
                for entry in parse_manifest(&m)? {
                    participants.push(ParticipantFeatures {
                        id: entry.id,
                        diagnosis: Some(entry.diagnosis),
                        features: temporal_feature_vector(&parse_frames(&entry.frames)?, tau)?,
                    });
                }
            }
            if participants.is_empty() {
                return Err(Error::InvalidArgument("give --frames or --manifest".into()));
            }
            let table = FeatureTable {
                tau,
                names: feature_names(),
                participants,
            };
            if common.format == "csv" {
                let mut out = format!("id,diagnosis,{}\n", table.names.join(","));
                for p in &table.participants {
                    out.push_str(&p.id);
                    out.push(',');
                    out.push_str(&p.diagnosis.map(|d| d.to_string()).unwrap_or_default());
                    for v in p.features.as_slice() {
                        out.push(',');
                        out.push_str(&v.to_string());
                    }
                    out.push('\n');
                }
                return write_output(common.output.as_deref(), &out);
            }
            emit(&common, "extract-features", seed, table)
        }
        Command::Loocv {
            common,
            eval,
            attributes,
        } => {
            let (file, spec, manifest, tau, seed) = eval_setup(&common, &eval)?;
            let attrs = match attributes {
                Some(s) => parse_attributes(&s)?,
                None => file.attributes.unwrap_or_else(|| Attribute::ALL.to_vec()),
            };
            let cohort = load_cohort(&manifest, tau)?;
            let report = loocv(&cohort, &spec, &attribute_mask(&attrs)?)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(&common, "loocv", Some(seed), report)
        }
        Command::Ablate { common, eval } => {
            let (_, spec, manifest, tau, seed) = eval_setup(&common, &eval)?;
            let cohort = load_cohort(&manifest, tau)?;
            let rows = ablation_study(&cohort, &spec, &default_ablation_subsets())?;
            emit(&common, "ablate", Some(seed), rows)
        }
        Command::Ttest { common, manifest, tau } => {
            let file: EvalFileConfig = load_config(common.config.as_deref())?;
            let manifest = require_manifest(manifest.or(file.manifest))?;
            let cohort = load_cohort(&manifest, tau_or_default(tau.or(file.tau))?)?;
            emit(&common, "ttest", common.seed.or(file.seed), attribute_significance(&cohort)?)
        }
        Command::Synth {
            common,
            participants,
            frames,
            noise,
            effect_au,
            effect_arousal,
            effect_valence,
            effect_expr,
        } => {
            let mut spec: SynthSpec = load_config(common.config.as_deref())?;
            if let Some(s) = common.seed {
                spec.seed = s;
            }
            if let Some(n) = participants {
                spec.participants_per_group = n;
            }
            if let Some(f) = frames {
                spec.frames_per_participant = f;
            }
            if let Some(n) = noise {
                spec.noise = n;
            }
            let e: &mut AttributeEffects = &mut spec.effects;
            for (dst, src) in [
                (&mut e.au, effect_au),
                (&mut e.arousal, effect_arousal),
                (&mut e.valence, effect_valence),
                (&mut e.expr, effect_expr),
            ] {
                if let Some(v) = src {
                    *dst = v;
                }
            }
            let dir = common
                .output
                .clone()
                .ok_or_else(|| Error::InvalidArgument("synth needs --output <dir>".into()))?;
            let manifest = synth_cohort(&spec, &dir)?;
            let summary = SynthSummary {
                asd: spec.participants_per_group,
                non_asd: spec.participants_per_group,
                manifest: manifest.strip_prefix(&dir).unwrap_or(&manifest).to_path_buf(),
                spec,
            };
            let report = Report::new("synth", Some(summary.spec.seed), summary);
            let text = match common.format.parse::<ReportFormat>()? {
                ReportFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
                ReportFormat::Text => render_text(&report)?,
            };
            write_output(Some(&dir.join("synth_report.json")), &text)?;
            write_output(None, &text)
        }
    }
}

/// Process entry point: machine-readable error JSON on stderr and exit code 2
/// on failure.
pub fn main_with_args(args: Vec<OsString>) -> ExitCode {
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::from(2)
        }
    }
}
