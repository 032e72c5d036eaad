//! Dataset directory layout:
//!
//! * `edges.tsv`: `src<TAB>dst` per line, base-10 node indices;
//! * `labels.tsv`: one class index per line, line `i` is node `i`;
//! * `features.tsv`: `D` tab-separated floats per line, line `i` is node `i`
//!   (empty lines when `D = 0`);
//! * `meta.json`: `n`, `directed`, `num_classes`, `feature_dim` and, for
//!   generated data, the generator request under `synth`.
//!
//! Floats are written in shortest round-trip form, so a write/read cycle is
//! bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Dataset, Labels};
use crate::kernel::DenseMatrix;
use crate::synth::SynthSpec;

pub const META: &str = "meta.json";
pub const EDGES: &str = "edges.tsv";
pub const LABELS: &str = "labels.tsv";
pub const FEATURES: &str = "features.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n: usize,
    pub directed: bool,
    pub num_classes: usize,
    pub feature_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

fn write_file(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: PathBuf) -> Result<(PathBuf, String)> {
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, text))
}

/// Writes `dataset` into `dir`, creating it if needed.
pub fn write_dataset(dir: &Path, dataset: &Dataset, synth: Option<&SynthSpec>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = DatasetMeta {
        n: dataset.num_nodes(),
        directed: dataset.graph.is_directed(),
        num_classes: dataset.num_classes(),
        feature_dim: dataset.feature_dim(),
        synth: synth.cloned(),
    };
    write_file(dir.join(META), &(serde_json::to_string_pretty(&meta)? + "\n"))?;

    let mut edges = String::new();
    for (u, v) in dataset.graph.edge_list() {
        writeln!(edges, "{u}\t{v}").expect("write to String");
    }
    write_file(dir.join(EDGES), &edges)?;

    let mut labels = String::new();
    for &k in dataset.labels.values() {
        writeln!(labels, "{k}").expect("write to String");
    }
    write_file(dir.join(LABELS), &labels)?;

    let x = &dataset.features;
    let mut features = String::new();
    for u in 0..x.cols() {
        for r in 0..x.rows() {
            if r > 0 {
                features.push('\t');
            }
            write!(features, "{}", x.get(r, u)).expect("write to String");
        }
        features.push('\n');
    }
    write_file(dir.join(FEATURES), &features)
}

fn parse_field<T: FromStr>(path: &Path, line: usize, field: &str, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("invalid {what} {field:?}"),
    })
}

/// Lines of a TSV file with their 1-based numbers; a trailing newline does not
/// produce an extra line.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l))
}

/// Loads and validates a dataset directory.
pub fn read_dataset(dir: &Path) -> Result<(Dataset, DatasetMeta)> {
    let (meta_path, meta_text) = read_file(dir.join(META))?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Format { path: meta_path.clone(), msg: e.to_string() })?;
    if meta.n == 0 || meta.num_classes == 0 {
        return Err(Error::Format { path: meta_path, msg: "n and num_classes must be positive".into() });
    }
    let n = meta.n;

    let (path, text) = read_file(dir.join(EDGES))?;
    let mut edges = Vec::new();
    for (line, row) in numbered_lines(&text) {
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Parse { path, line, msg: format!("expected 2 tab-separated fields, found {}", fields.len()) });
        }
        let u: usize = parse_field(&path, line, fields[0], "source node")?;
        let v: usize = parse_field(&path, line, fields[1], "target node")?;
        if let Some(bad) = [u, v].into_iter().find(|&x| x >= n) {
            return Err(Error::Parse { path, line, msg: format!("node {bad} out of range for n = {n}") });
        }
        edges.push((u, v));
    }
    let graph = build_graph(&edges, n, meta.directed)?;

    let (path, text) = read_file(dir.join(LABELS))?;
    let mut labels = Vec::with_capacity(n);
    for (line, row) in numbered_lines(&text) {
        if labels.len() == n {
            if row.trim().is_empty() {
                continue;
            }
            return Err(Error::Parse { path, line, msg: format!("more than n = {n} labels") });
        }
        let k: usize = parse_field(&path, line, row, "label")?;
        if k >= meta.num_classes {
            return Err(Error::Parse { path, line, msg: format!("label {k} out of range for {} classes", meta.num_classes) });
        }
        labels.push(k);
    }
    if labels.len() != n {
        return Err(Error::Format { path, msg: format!("expected {n} labels, found {}", labels.len()) });
    }

    let (path, text) = read_file(dir.join(FEATURES))?;
    let d = meta.feature_dim;
    let mut data = vec![0.0; d * n];
    let mut rows = 0;
    for (line, row) in numbered_lines(&text) {
        if rows == n {
            if row.trim().is_empty() {
                continue;
            }
            return Err(Error::Parse { path, line, msg: format!("more than n = {n} feature rows") });
        }
        let fields: Vec<&str> = if row.is_empty() { Vec::new() } else { row.split('\t').collect() };
        if fields.len() != d {
            return Err(Error::Parse { path, line, msg: format!("expected {d} values, found {}", fields.len()) });
        }
        for (r, f) in fields.iter().enumerate() {
            let x: f64 = parse_field(&path, line, f, "feature value")?;
            if !x.is_finite() {
                return Err(Error::Parse { path, line, msg: format!("non-finite feature value {f:?}") });
            }
            data[r * n + rows] = x;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Format { path, msg: format!("expected {n} feature rows, found {rows}") });
    }
    let features = DenseMatrix::from_vec(d, n, data)?;
    let dataset = Dataset::new(graph, features, Labels::new(labels, meta.num_classes)?)?;
    Ok((dataset, meta))
}

/// SHA-256 over the four dataset files, each framed by its name and byte length.
pub fn dataset_checksum(dir: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    for name in [META, EDGES, LABELS, FEATURES] {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
