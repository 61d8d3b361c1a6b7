//! Python bindings. Structured results come back as plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use asdface::classifiers::{self, ClassifierKind, ClassifierSpec, FittedModel};
use asdface::eval::{self, Cohort};
use asdface::features::{self, Attribute, AttributeMatrix, FRAME_DIM};
use asdface::io::{self, AttributeEffects, SynthSpec};
use asdface::model::{self, CuKind, GraphConfig, TaskMode};
use asdface::training::{self, ToyConfig};
use asdface::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, value_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Parameter/MAC table of the reference network.
#[pyfunction]
#[pyo3(signature = (cu, mode = "multi", input_size = 224))]
fn analyze_graph<'py>(py: Python<'py>, cu: &str, mode: &str, input_size: usize) -> PyResult<Bound<'py, PyAny>> {
    let cfg = GraphConfig::reference(parse::<CuKind>(cu)?, parse::<TaskMode>(mode)?).with_input_size(input_size, input_size);
    let graph = model::build_graph_with(cfg).map_err(err)?;
    to_py(py, &model::analyze_graph(&graph, (input_size, input_size)).map_err(err)?)
}

/// 58-dim participant features from an `M x 22` frame matrix.
#[pyfunction]
#[pyo3(signature = (frames, tau = features::DEFAULT_TAU))]
fn temporal_features(frames: Vec<Vec<f64>>, tau: f64) -> PyResult<Vec<f64>> {
    let mut m = AttributeMatrix::default();
    for (i, row) in frames.into_iter().enumerate() {
        let row: [f64; FRAME_DIM] = row
            .try_into()
            .map_err(|r: Vec<f64>| PyValueError::new_err(format!("frame {i} has {} values, expected {FRAME_DIM}", r.len())))?;
        m.push(row);
    }
    Ok(features::temporal_feature_vector(&m, tau).map_err(err)?.as_slice().to_vec())
}

/// Two-sample Student's t-test: `(t, p)`; `t` is None when undefined.
#[pyfunction]
fn t_test(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<(Option<f64>, f64)> {
    let r = eval::t_test(&xs, &ys).map_err(err)?;
    Ok((r.t, r.p))
}

#[pyfunction]
fn confusion_metrics<'py>(py: Python<'py>, predictions: Vec<bool>, labels: Vec<bool>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &eval::confusion_metrics(&predictions, &labels).map_err(err)?)
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    eval::pearson(&x, &y).map_err(err)
}

/// Writes a synthetic cohort under `directory`; returns the manifest path.
#[pyfunction]
#[pyo3(signature = (directory, participants_per_group = 40, frames_per_participant = 300, seed = 0, effects = None, noise = 0.1))]
fn synth_cohort(
    directory: PathBuf,
    participants_per_group: usize,
    frames_per_participant: usize,
    seed: u64,
    effects: Option<(f64, f64, f64, f64)>,
    noise: f64,
) -> PyResult<String> {
    let mut spec = SynthSpec {
        participants_per_group,
        frames_per_participant,
        noise,
        seed,
        ..SynthSpec::default()
    };
    if let Some((au, arousal, valence, expr)) = effects {
        spec.effects = AttributeEffects { au, arousal, valence, expr };
    }
    let path = io::synth_cohort(&spec, &directory).map_err(err)?;
    Ok(path.display().to_string())
}

/// Train the small synthetic multi-task network; returns the report dict.
#[pyfunction]
#[pyo3(signature = (epochs = 30, images = 200, seed = 0))]
fn train_toy<'py>(py: Python<'py>, epochs: usize, images: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = ToyConfig { images, ..ToyConfig::default() };
    cfg.train.epochs = epochs;
    cfg.train.seed = seed;
    to_py(py, &training::train_toy(&cfg).map_err(err)?)
}

/// A participant cohort loaded from a manifest.
#[pyclass(name = "Cohort", module = "asdface", frozen)]
struct PyCohort {
    inner: Cohort,
}

#[pymethods]
impl PyCohort {
    #[staticmethod]
    #[pyo3(signature = (manifest, tau = features::DEFAULT_TAU))]
    fn load(manifest: PathBuf, tau: f64) -> PyResult<Self> {
        Ok(Self {
            inner: io::load_cohort(&manifest, tau).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.records().iter().map(|r| r.id.clone()).collect()
    }

    /// True for ASD.
    #[getter]
    fn labels(&self) -> Vec<bool> {
        self.inner.labels()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.records().iter().map(|r| r.features.as_slice().to_vec()).collect()
    }

    #[pyo3(signature = (classifier = "logistic_regression", attributes = None, seed = 0))]
    fn loocv<'py>(
        &self,
        py: Python<'py>,
        classifier: &str,
        attributes: Option<Vec<String>>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let attrs: Vec<Attribute> = match attributes {
            Some(a) => a.iter().map(|s| parse(s)).collect::<PyResult<_>>()?,
            None => Attribute::ALL.to_vec(),
        };
        let spec = ClassifierSpec::new(parse(classifier)?).with_seed(seed);
        let mask = eval::attribute_mask(&attrs).map_err(err)?;
        to_py(py, &eval::loocv(&self.inner, &spec, &mask).map_err(err)?)
    }

    #[pyo3(signature = (classifier = "logistic_regression", seed = 0))]
    fn ablation<'py>(&self, py: Python<'py>, classifier: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let spec = ClassifierSpec::new(parse(classifier)?).with_seed(seed);
        to_py(
            py,
            &eval::ablation_study(&self.inner, &spec, &eval::default_ablation_subsets()).map_err(err)?,
        )
    }

    fn significance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &eval::attribute_significance(&self.inner).map_err(err)?)
    }
}

/// One binary classifier; `fit` then `predict_proba`.
#[pyclass(name = "Classifier", module = "asdface")]
struct PyClassifier {
    spec: ClassifierSpec,
    fitted: Option<FittedModel>,
}

#[pymethods]
impl PyClassifier {
    #[new]
    #[pyo3(signature = (kind = "logistic_regression", seed = 0))]
    fn new(kind: &str, seed: u64) -> PyResult<Self> {
        Ok(Self {
            spec: ClassifierSpec::new(parse::<ClassifierKind>(kind)?).with_seed(seed),
            fitted: None,
        })
    }

    #[getter]
    fn kind(&self) -> String {
        self.spec.kind.to_string()
    }

    fn fit(&mut self, x: Vec<Vec<f64>>, y: Vec<bool>) -> PyResult<()> {
        self.fitted = Some(classifiers::fit(&self.spec, &x, &y).map_err(err)?);
        Ok(())
    }

    fn predict_proba(&self, x: Vec<f64>) -> PyResult<f64> {
        let model = self
            .fitted
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("classifier is not fitted"))?;
        classifiers::predict_proba(model, &x).map_err(err)
    }
}

#[pymodule]
#[pyo3(name = "asdface")]
fn asdface_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(analyze_graph, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_features, m)?)?;
    m.add_function(wrap_pyfunction!(t_test, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(synth_cohort, m)?)?;
    m.add_function(wrap_pyfunction!(train_toy, m)?)?;
    m.add_class::<PyCohort>()?;
    m.add_class::<PyClassifier>()?;
    m.add("FEATURE_DIM", features::FEATURE_DIM)?;
    Ok(())
}
