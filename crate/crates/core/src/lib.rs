//! Facial-attribute based ASD classification pipeline.
//!
//! The crate is organised the way data flows through the system:
//!
//! * [`numerics`] holds dense tensor kernels with forward and adjoint passes.
//! * [`model`] builds the multi-task CNN, counts its parameters and MACs and
//!   runs inference to per-frame [`features::FrameAttributes`].
//! * [`training`] provides the masked task losses, the summed multi-task
//!   objective, SGD with momentum and image augmentation.
//! * [`features`] turns a frame-attribute stream into the 58-dim participant
//!   vector.
//! * [`classifiers`] implements the binary classifier bank.
//! * [`eval`] runs leave-one-out evaluation, metrics, ablations and t-tests.
//! * [`io`] covers file formats, synthetic cohorts and reports; [`cli`] wires
//!   everything into the `asdface` command.

pub mod classifiers;
pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
