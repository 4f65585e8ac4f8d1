//! Two-file checkpoint: a JSON manifest describing the layers and a sibling
//! binary file holding every layer's weights (row-major `[fan_in × fan_out]`)
//! followed by its biases, layer by layer, as little-endian `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Activation, Layer, MlpParams, Tensor};
use crate::{Error, Result};

const FORMAT: &str = "tvgan-mlp";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerManifest {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub version: u32,
    pub dtype: String,
    pub weights_file: String,
    pub num_params: usize,
    pub layers: Vec<LayerManifest>,
}

/// Writes `<dir>/<name>.json` and `<dir>/<name>.bin`, creating `dir` if
/// needed; returns both paths.
pub fn save_checkpoint(params: &MlpParams, dir: &Path, name: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join(format!("{name}.json"));
    let bin_name = format!("{name}.bin");
    let bin_path = dir.join(&bin_name);
    let manifest = CheckpointManifest {
        format: FORMAT.into(),
        version: 1,
        dtype: "f64-le".into(),
        weights_file: bin_name,
        num_params: params.num_params(),
        layers: params
            .layers()
            .iter()
            .map(|l| LayerManifest {
                fan_in: l.fan_in(),
                fan_out: l.fan_out(),
                activation: l.activation,
            })
            .collect(),
    };
    let bytes: Vec<u8> = params
        .to_flat()
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))?;
    Ok((manifest_path, bin_path))
}

pub fn load_checkpoint(manifest_path: &Path) -> Result<MlpParams> {
    let parse_err = |message: String| Error::Parse {
        path: manifest_path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: CheckpointManifest =
        serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
    if manifest.format != FORMAT || manifest.dtype != "f64-le" {
        return Err(parse_err(format!(
            "unsupported checkpoint format {}/{}",
            manifest.format, manifest.dtype
        )));
    }
    let bin_path = manifest_path
        .parent()
        .unwrap_or(Path::new("."))
        .join(&manifest.weights_file);
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let expected: usize = manifest
        .layers
        .iter()
        .map(|l| l.fan_in * l.fan_out + l.fan_out)
        .sum();
    if expected != manifest.num_params || bytes.len() != expected * 8 {
        return Err(parse_err(format!(
            "expected {expected} parameters ({} bytes), weights file has {} bytes",
            expected * 8,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let mut off = 0;
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for l in &manifest.layers {
        let nw = l.fan_in * l.fan_out;
        let w = Tensor::matrix(l.fan_in, l.fan_out, values[off..off + nw].to_vec())?;
        off += nw;
        let b = values[off..off + l.fan_out].to_vec();
        off += l.fan_out;
        layers.push(Layer::new(w, b, l.activation)?);
    }
    MlpParams::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = MlpParams::init(
            &[2, 5, 1],
            &[Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        let (m, b) = save_checkpoint(&net, dir.path(), "disc").unwrap();
        assert_eq!(
            fs::metadata(&b).unwrap().len(),
            (net.num_params() * 8) as u64
        );
        let loaded = load_checkpoint(&m).unwrap();
        assert_eq!(loaded, net);
    }

    #[test]
    fn binary_layout_is_weights_then_biases() {
        let dir = tempfile::tempdir().unwrap();
        let w = Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap();
        let net =
            MlpParams::new(vec![Layer::new(w, vec![3.0], Activation::Identity).unwrap()]).unwrap();
        let (_, b) = save_checkpoint(&net, dir.path(), "g").unwrap();
        let bytes = fs::read(b).unwrap();
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn truncated_weights_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = MlpParams::init(&[1, 2], &[Activation::Tanh], &mut rng).unwrap();
        let (m, b) = save_checkpoint(&net, dir.path(), "x").unwrap();
        fs::write(&b, [0u8; 12]).unwrap();
        assert!(matches!(load_checkpoint(&m), Err(Error::Parse { .. })));
    }
}
