//! Model checkpoints as JSON: every named parameter tensor with its shape,
//! plus the layer sizes and the run seed. Floats are written in their
//! shortest round-trip form, so save followed by load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slicegw_core::autodiff::{OptimizerKind, Tensor};
use slicegw_core::model::{ModelBundle, ModelDims};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    pub input: usize,
    pub hidden: usize,
    pub feature: usize,
    pub classes: usize,
    pub disc_hidden: usize,
    pub leaky_slope: f64,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_bundle(bundle: &ModelBundle) -> Self {
        let ModelDims { input, hidden, feature, classes, disc_hidden } = bundle.dims;
        let tensors = bundle
            .named_tensors()
            .into_iter()
            .map(|(name, t)| NamedTensor { name: name.to_owned(), rows: t.rows(), cols: t.cols(), data: t.data().to_vec() })
            .collect();
        Self {
            seed: bundle.seed,
            input,
            hidden,
            feature,
            classes,
            disc_hidden,
            leaky_slope: bundle.extractor.slope,
            tensors,
        }
    }

    /// Rebuilds a bundle with fresh optimizer state.
    pub fn to_bundle(&self, optimizer: OptimizerKind, lr: f64) -> Result<ModelBundle> {
        let dims = ModelDims {
            input: self.input,
            hidden: self.hidden,
            feature: self.feature,
            classes: self.classes,
            disc_hidden: self.disc_hidden,
        };
        let mut bundle = ModelBundle::new(dims, self.seed, self.leaky_slope, optimizer, lr)?;
        let named = self
            .tensors
            .iter()
            .map(|t| Ok((t.name.clone(), Tensor::from_vec(t.rows, t.cols, t.data.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        bundle.load_named(&named)?;
        Ok(bundle)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).map_err(|e| Error::Checkpoint { path: path.into(), message: e.to_string() })?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint { path: path.into(), message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_round_trip() {
        let dims = ModelDims { input: 7, hidden: 5, feature: 3, classes: 4, disc_hidden: 6 };
        let mut bundle = ModelBundle::new(dims, 99, 0.2, OptimizerKind::SGD, 0.1).unwrap();
        bundle.extractor.hidden.bias.value.data_mut()[0] = 1.0 / 3.0;
        bundle.classifier.out.weight.value.data_mut()[1] = -2.5e-310;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let ckpt = Checkpoint::from_bundle(&bundle);
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ckpt);
        let rebuilt = loaded.to_bundle(OptimizerKind::SGD, 0.1).unwrap();
        for ((na, a), (nb, b)) in bundle.named_tensors().into_iter().zip(rebuilt.named_tensors()) {
            assert_eq!(na, nb);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let dims = ModelDims { input: 2, hidden: 2, feature: 2, classes: 2, disc_hidden: 2 };
        let bundle = ModelBundle::new(dims, 1, 0.2, OptimizerKind::SGD, 0.1).unwrap();
        let mut ckpt = Checkpoint::from_bundle(&bundle);
        ckpt.tensors[0].rows = 1;
        ckpt.tensors[0].data.truncate(2);
        assert!(ckpt.to_bundle(OptimizerKind::SGD, 0.1).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "{").unwrap();
        assert!(Checkpoint::load(&path).unwrap_err().to_string().contains("bad.json"));
    }
}
