use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Mlp, NeuralError, Result};

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    /// Row-major `out × in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// On-disk JSON form of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub layers: Vec<LayerWeights>,
}

impl WeightsFile {
    pub fn from_network(net: &Mlp) -> Self {
        let layers = (0..net.num_layers()).map(|l| LayerWeights { weights: net.weights(l).to_vec(), biases: net.biases(l).to_vec() }).collect();
        Self { format_version: WEIGHTS_FORMAT_VERSION, layer_dims: net.dims().to_vec(), layers }
    }

    pub fn into_network(self, expected_dims: Option<&[usize]>) -> Result<Mlp> {
        if self.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(NeuralError::Version { found: self.format_version, expected: WEIGHTS_FORMAT_VERSION });
        }
        if let Some(expected) = expected_dims {
            if expected != self.layer_dims.as_slice() {
                return Err(NeuralError::Architecture { expected: expected.to_vec(), found: self.layer_dims });
            }
        }
        let mut net = Mlp::zeros(&self.layer_dims)?;
        if self.layers.len() != net.num_layers() {
            return Err(NeuralError::Malformed(format!("{} layers listed, dims imply {}", self.layers.len(), net.num_layers())));
        }
        for (l, layer) in self.layers.into_iter().enumerate() {
            let (wr, br) = net.layer_range(l);
            if layer.weights.len() != wr.len() || layer.biases.len() != br.len() {
                return Err(NeuralError::Malformed(format!("layer {l} has wrong parameter counts")));
            }
            net.weights_mut(l).copy_from_slice(&layer.weights);
            net.biases_mut(l).copy_from_slice(&layer.biases);
        }
        if !net.is_finite() {
            return Err(NeuralError::Malformed("non-finite parameter".into()));
        }
        Ok(net)
    }
}

pub fn save_weights(net: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string(&WeightsFile::from_network(net)).map_err(|e| NeuralError::Malformed(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Loads a network, optionally insisting on a particular architecture.
pub fn load_weights(path: impl AsRef<Path>, expected_dims: Option<&[usize]>) -> Result<Mlp> {
    let text = std::fs::read_to_string(path)?;
    let file: WeightsFile = serde_json::from_str(&text).map_err(|e| NeuralError::Malformed(e.to_string()))?;
    file.into_network(expected_dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{init_network, Q_NETWORK_DIMS};
    use proptest::prelude::*;

    #[test]
    fn architecture_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("small.json");
        save_weights(&init_network(&[4, 32, 4], 0).unwrap(), &path).unwrap();
        assert!(matches!(load_weights(&path, Some(&Q_NETWORK_DIMS)), Err(NeuralError::Architecture { .. })));
        assert!(load_weights(&path, None).is_ok());
    }

    #[test]
    fn malformed_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"format_version\": 1, \"layer_dims\": [4, 4]").unwrap();
        assert!(matches!(load_weights(&path, None), Err(NeuralError::Malformed(_))));
        let mut f = WeightsFile::from_network(&init_network(&[2, 2], 0).unwrap());
        f.format_version = 7;
        assert!(matches!(f.into_network(None), Err(NeuralError::Version { found: 7, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_bitwise(seed in 0u64..1000, x in proptest::array::uniform4(-2.0..2.0f64)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("w.json");
            let net = init_network(&Q_NETWORK_DIMS, seed).unwrap();
            save_weights(&net, &path).unwrap();
            let back = load_weights(&path, Some(&Q_NETWORK_DIMS)).unwrap();
            prop_assert_eq!(back.checksum(), net.checksum());
            prop_assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
        }
    }
}
