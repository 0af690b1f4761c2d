//! JSON checkpoints of a [`PerceptionModel`].
//!
//! ```json
//! {
//!   "format": "tilr-perception",
//!   "version": 1,
//!   "head": "softmax",
//!   "atoms": ["p0", "p1"],
//!   "params": [
//!     {"name": "w1", "shape": [784, 128], "values": [...]},
//!     {"name": "b1", "shape": [128], "values": [...]},
//!     {"name": "w2", "shape": [128, 2], "values": [...]},
//!     {"name": "b2", "shape": [2], "values": [...]}
//!   ]
//! }
//! ```
//!
//! Values are row-major. Floats are written with enough digits to read
//! back bit-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Head, PerceptionModel, PARAM_NAMES};
use crate::tensor::Tensor;

pub const FORMAT: &str = "tilr-perception";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    head: String,
    atoms: Vec<String>,
    params: Vec<ParamRecord>,
}

/// A model together with the atom names its outputs stand for.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: PerceptionModel,
    pub atoms: Vec<String>,
}

pub fn save_checkpoint(path: &Path, model: &PerceptionModel, atoms: &[String]) -> Result<()> {
    if atoms.len() != model.n_atoms() {
        return Err(Error::Shape(format!(
            "{} atom names for a model with {} outputs",
            atoms.len(),
            model.n_atoms()
        )));
    }
    let file = CheckpointFile {
        format: FORMAT.into(),
        version: VERSION,
        head: model.head().to_string(),
        atoms: atoms.to_vec(),
        params: PARAM_NAMES
            .iter()
            .zip(model.params())
            .map(|(name, t)| ParamRecord {
                name: (*name).into(),
                shape: t.shape().to_vec(),
                values: t.data().to_vec(),
            })
            .collect(),
    };
    let out = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(out);
    serde_json::to_writer(&mut out, &file).map_err(|e| Error::format(path, e.to_string()))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let input = File::open(path).map_err(|e| Error::io(path, e))?;
    let file: CheckpointFile = serde_json::from_reader(BufReader::new(input))
        .map_err(|e| Error::format(path, e.to_string()))?;
    if file.format != FORMAT {
        return Err(Error::format(
            path,
            format!("not a checkpoint (format `{}`)", file.format),
        ));
    }
    if file.version != VERSION {
        return Err(Error::format(
            path,
            format!("unsupported checkpoint version {}", file.version),
        ));
    }
    let head: Head = file.head.parse()?;
    let names: Vec<&str> = file.params.iter().map(|p| p.name.as_str()).collect();
    if names != PARAM_NAMES {
        return Err(Error::format(
            path,
            format!("unexpected parameters {names:?}"),
        ));
    }
    let params = file
        .params
        .into_iter()
        .map(|p| Tensor::new(p.shape, p.values))
        .collect::<Result<Vec<_>>>()?;
    let model = PerceptionModel::from_params(params, head)?;
    if model.n_atoms() != file.atoms.len() {
        return Err(Error::format(
            path,
            "atom names do not match the output layer",
        ));
    }
    Ok(Checkpoint {
        model,
        atoms: file.atoms,
    })
}
