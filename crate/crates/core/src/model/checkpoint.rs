//! Model checkpoints: one line of JSON header followed by the raw parameters.
//!
//! ```text
//! {"format":"ocdm-mlp","version":1,"widths":[N,...,L],"dropout":0.5,"seed":7}\n
//! <f64 little-endian> layer 0 weights (row-major outputs x inputs), layer 0 biases, layer 1 ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Dense, MlpModel};
use crate::error::{Error, Result};

const FORMAT: &str = "ocdm-mlp";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub widths: Vec<usize>,
    pub dropout: f64,
    pub seed: Option<u64>,
}

pub fn save_checkpoint(model: &MlpModel, seed: Option<u64>, path: &Path) -> Result<()> {
    let header = CheckpointHeader {
        format: FORMAT.into(),
        version: VERSION,
        widths: model.widths(),
        dropout: model.dropout(),
        seed,
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for layer in model.layers() {
        for v in layer.weights.iter().chain(&layer.biases) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpModel, CheckpointHeader)> {
    let mut input = BufReader::new(File::open(path)?);
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end())?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Schema(format!(
            "unsupported checkpoint {} v{}",
            header.format, header.version
        )));
    }
    let skeleton = MlpModel::zeros(&header.widths, header.dropout)?;
    let mut layers = Vec::with_capacity(skeleton.layers().len());
    let mut buf = [0u8; 8];
    for shape in skeleton.layers() {
        let mut read = |n: usize| -> Result<Vec<f64>> {
            (0..n)
                .map(|_| {
                    input
                        .read_exact(&mut buf)
                        .map_err(|e| Error::Schema(format!("truncated checkpoint: {e}")))?;
                    Ok(f64::from_le_bytes(buf))
                })
                .collect()
        };
        let weights = read(shape.inputs * shape.outputs)?;
        let biases = read(shape.outputs)?;
        layers.push(Dense {
            inputs: shape.inputs,
            outputs: shape.outputs,
            weights,
            biases,
        });
    }
    if input.read(&mut buf)? != 0 {
        return Err(Error::Schema("trailing bytes after checkpoint parameters".into()));
    }
    Ok((MlpModel::from_layers(layers, header.dropout), header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = MlpModel::new(&[5, 7, 3], 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        save_checkpoint(&model, Some(9), &path).unwrap();
        let (loaded, header) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(header.widths, vec![5, 7, 3]);
        assert_eq!(header.seed, Some(9));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = MlpModel::zeros(&[2, 2], 0.0).unwrap();
        save_checkpoint(&model, None, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Schema(_))));
    }
}
