//! On-disk dataset directories and model checkpoints.

pub mod checkpoint;
pub mod dataset;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, Dims, ParamShape};
pub use dataset::{dataset_checksum, read_dataset, write_dataset, DatasetMeta};

/// Version stamp written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
