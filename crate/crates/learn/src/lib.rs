//! Perception, data and training for temporal iterative local refinement.
//!
//! * [`tensor`] – dense tensors and a reverse-mode tape.
//! * [`model`] – the MLP perception network; [`adam`] its optimiser and
//!   [`checkpoint`] its JSON file format.
//! * [`data`] – MNIST IDX files, symbolic trace sampling and image-sequence
//!   datasets in JSON Lines.
//! * [`train`] – the training loop and the evaluation metrics.
//! * [`bench`] – benchmark suites over DECLARE formulas.
//! * [`config`] – flat `key = value` configuration files.

pub mod adam;
pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use error::{Error, Result};
pub use model::{Head, PerceptionModel};
pub use tensor::{Tape, Tensor, Var};
pub use train::{
    batch_loss, evaluate_grounding, evaluate_sequence, train, Grounding, KnowledgeGraphs, Metrics,
    Sample, Task, TrainConfig, TrainOutcome,
};
