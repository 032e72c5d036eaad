//! Checkpoint directory layout:
//!
//! * `meta.json`: [`CheckpointMeta`];
//! * `params.bin`: every parameter flattened row-major, concatenated in the
//!   order listed under `params`, as little-endian `f64`.
//!
//! Label propagation has no parameters; its checkpoint carries an empty
//! `params.bin` and is re-propagated from the split's training labels.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Architecture, Model, ModelKind};
use crate::train::{HyperParams, Metric, ModelOptions};

use super::SCHEMA_VERSION;

pub const META: &str = "meta.json";
pub const PARAMS: &str = "params.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub num_nodes: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n={}, D={}, C={}", self.num_nodes, self.feature_dim, self.num_classes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub schema_version: u32,
    pub model: ModelKind,
    pub hyper: HyperParams,
    pub options: ModelOptions,
    pub architecture: Option<Architecture>,
    pub dims: Dims,
    /// Root seed of the training run.
    pub seed: u64,
    pub split_seed: u64,
    pub split_index: usize,
    pub symmetrize: bool,
    pub metric: Metric,
    pub dataset_checksum: String,
    /// Test metric recorded at training time.
    pub test_metric: f64,
    pub params: Vec<ParamShape>,
}

/// Writes a checkpoint; `model` must be present exactly when the meta has an
/// architecture.
pub fn save_checkpoint(dir: &Path, meta: &CheckpointMeta, model: Option<&Model<f64>>) -> Result<()> {
    if meta.architecture.is_some() != model.is_some() {
        return Err(Error::Invalid("checkpoint needs parameters exactly for trainable models".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut meta = meta.clone();
    meta.schema_version = SCHEMA_VERSION;
    let mut bytes = Vec::new();
    if let Some(model) = model {
        meta.params = model
            .params()
            .shapes()
            .into_iter()
            .map(|(name, rows, cols)| ParamShape { name, rows, cols })
            .collect();
        for v in model.params().to_flat() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let meta_path = dir.join(META);
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&meta_path, e))?;
    let params_path = dir.join(PARAMS);
    fs::write(&params_path, bytes).map_err(|e| Error::io(&params_path, e))
}

/// Reads a checkpoint and rebuilds its model, if it has one.
pub fn load_checkpoint(dir: &Path) -> Result<(CheckpointMeta, Option<Model<f64>>)> {
    let meta_path = dir.join(META);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: CheckpointMeta =
        serde_json::from_str(&text).map_err(|e| Error::Format { path: meta_path.clone(), msg: e.to_string() })?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(Error::Format { path: meta_path, msg: format!("unsupported schema_version {}", meta.schema_version) });
    }
    let params_path = dir.join(PARAMS);
    let bytes = fs::read(&params_path).map_err(|e| Error::io(&params_path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format { path: params_path, msg: format!("{} bytes is not a whole number of f64 values", bytes.len()) });
    }
    let flat: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let Some(arch) = meta.architecture.clone() else {
        if !flat.is_empty() {
            return Err(Error::Format { path: params_path, msg: "parameters present for a parameter-free model".into() });
        }
        return Ok((meta, None));
    };
    let model = Model::from_flat(arch, &flat)
        .map_err(|e| Error::Format { path: params_path.clone(), msg: e.to_string() })?;
    let shapes: Vec<ParamShape> = model
        .params()
        .shapes()
        .into_iter()
        .map(|(name, rows, cols)| ParamShape { name, rows, cols })
        .collect();
    if shapes != meta.params {
        return Err(Error::Format { path: meta_path, msg: "parameter list does not match the architecture".into() });
    }
    Ok((meta, Some(model)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn meta(arch: Option<Architecture>) -> CheckpointMeta {
        CheckpointMeta {
            schema_version: 0,
            model: ModelKind::Linkx,
            hyper: HyperParams::Linkx { hidden: 4, final_layers: 2 },
            options: ModelOptions::default(),
            architecture: arch,
            dims: Dims { num_nodes: 7, feature_dim: 3, num_classes: 2 },
            seed: 1,
            split_seed: 2,
            split_index: 0,
            symmetrize: false,
            metric: Metric::Accuracy,
            dataset_checksum: "abc".into(),
            test_metric: 0.5,
            params: Vec::new(),
        }
    }

    #[test]
    fn round_trip_preserves_parameters_bitwise() {
        let arch = Architecture::Linkx {
            num_nodes: 7,
            feature_dim: 3,
            hidden: 4,
            classes: 2,
            adj_layers: 1,
            feat_layers: 2,
            final_layers: 2,
        };
        let model = Model::<f64>::new(arch.clone(), &mut stream(3, Stream::Init, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &meta(Some(arch)), Some(&model)).unwrap();
        let (back_meta, back) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(back.unwrap(), model);
        assert_eq!(back_meta.schema_version, SCHEMA_VERSION);
        assert_eq!(back_meta.params[0], ParamShape { name: "adj.layer0.weight".into(), rows: 4, cols: 7 });
        let size = fs::metadata(dir.path().join(PARAMS)).unwrap().len() as usize;
        assert_eq!(size, 8 * model.params().num_scalars());
    }

    #[test]
    fn truncated_parameters_are_rejected() {
        let arch = Architecture::Link { num_nodes: 5, classes: 2, bias: false };
        let model = Model::<f64>::new(arch.clone(), &mut stream(3, Stream::Init, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &meta(Some(arch)), Some(&model)).unwrap();
        let path = dir.path().join(PARAMS);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(load_checkpoint(dir.path()).is_err());
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_checkpoint(dir.path()).is_err());
    }

    #[test]
    fn parameter_free_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &meta(None), None).unwrap();
        assert!(load_checkpoint(dir.path()).unwrap().1.is_none());
    }
}
