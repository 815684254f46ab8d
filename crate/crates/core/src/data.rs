//! Labeled datasets and the synthetic shifted-Gaussians task.

use alloc::format;
use alloc::vec::Vec;

use crate::autodiff::Tensor;
use crate::geometry::PointCloud;
use crate::rng::{derive_seed, rng_for, standard_normal, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

/// `n` feature rows with class labels in `[0, classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Tensor,
    labels: Vec<usize>,
    classes: usize,
    pub domain: Domain,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(features: Tensor, labels: Vec<usize>, classes: usize, domain: Domain, split: Split) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::Empty("dataset needs at least one row and one feature"));
        }
        if labels.len() != features.rows() {
            return Err(Error::SizeMismatch { left: features.rows(), right: labels.len() });
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::LabelOutOfRange { row, label, classes });
        }
        if let Some(pos) = features.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / features.cols(), col: pos % features.cols() });
        }
        Ok(Self { features, labels, classes, domain, split })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Rows whose label is `class`, as a point cloud.
    pub fn class_cloud(&self, class: usize) -> Result<PointCloud> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
        let t = self.features.select_rows(&idx);
        PointCloud::new(t.into_vec(), idx.len(), self.dim())
    }

    /// The first `n` rows.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        let idx: Vec<usize> = (0..n).collect();
        Self::new(self.features.select_rows(&idx), self.labels[..n].to_vec(), self.classes, self.domain, self.split)
    }
}

/// Replaces every feature `v` by `1 - v` and tags the result as target.
pub fn invert_domain(ds: &LabeledDataset) -> Result<LabeledDataset> {
    let cols = ds.dim();
    if let Some(pos) = ds.features.data().iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::OutOfUnitRange { row: pos / cols, value: ds.features.data()[pos] });
    }
    Ok(LabeledDataset {
        features: ds.features.map(|v| 1.0 - v),
        labels: ds.labels.clone(),
        classes: ds.classes,
        domain: Domain::Target,
        split: ds.split,
    })
}

/// Gaussian blobs per class; the target domain moves every center by a
/// rotation (in the plane of the first two coordinates, about the origin)
/// followed by a translation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTask {
    pub classes: usize,
    pub n_per_class: usize,
    pub dim: usize,
    pub rotation_deg: f64,
    /// Empty means no translation; otherwise one entry per dimension.
    pub translation: Vec<f64>,
    pub noise: f64,
    /// Scale of the standard-normal draws that place class centers.
    pub center_scale: f64,
    pub seed: u64,
}

impl Default for GaussianTask {
    fn default() -> Self {
        Self {
            classes: 4,
            n_per_class: 250,
            dim: 2,
            rotation_deg: 60.0,
            translation: alloc::vec![2.0, -1.0],
            noise: 0.4,
            center_scale: 2.0,
            seed: 0,
        }
    }
}

impl GaussianTask {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::arg("shifted gaussians need at least 2 classes"));
        }
        if self.dim < 2 {
            return Err(Error::arg("shifted gaussians need at least 2 dimensions"));
        }
        if self.n_per_class == 0 {
            return Err(Error::arg("n_per_class must be at least 1"));
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(Error::arg(format!("noise must be a finite value >= 0, got {}", self.noise)));
        }
        if !self.translation.is_empty() && self.translation.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: self.translation.len() });
        }
        if !self.rotation_deg.is_finite() || !self.center_scale.is_finite() || self.translation.iter().any(|v| !v.is_finite())
        {
            return Err(Error::arg("rotation, translation and center scale must be finite"));
        }
        Ok(())
    }

    /// Source class centers, `classes x dim`, depending only on the seed.
    pub fn source_centers(&self) -> Vec<f64> {
        let mut rng = rng_for(self.seed, streams::CENTERS);
        (0..self.classes * self.dim)
            .map(|_| {
                let z: f64 = standard_normal(&mut rng);
                self.center_scale * z
            })
            .collect()
    }

    /// Centers after the rotation and translation.
    pub fn target_centers(&self) -> Vec<f64> {
        let mut centers = self.source_centers();
        let (sin, cos) = libm::sincos(self.rotation_deg.to_radians());
        for c in centers.chunks_exact_mut(self.dim) {
            let (x, y) = (c[0], c[1]);
            c[0] = cos * x - sin * y;
            c[1] = sin * x + cos * y;
            for (v, t) in c.iter_mut().zip(&self.translation) {
                *v += t;
            }
        }
        centers
    }

    fn sample(&self, centers: &[f64], domain: Domain, split: Split) -> Result<LabeledDataset> {
        let label = match (domain, split) {
            (Domain::Source, Split::Train) => 0,
            (Domain::Target, Split::Train) => 1,
            (Domain::Source, Split::Test) => 2,
            (Domain::Target, Split::Test) => 3,
        };
        let mut rng = rng_for(derive_seed(self.seed, label), streams::SAMPLES);
        let n = self.classes * self.n_per_class;
        let mut data = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for class in 0..self.classes {
            let center = &centers[class * self.dim..(class + 1) * self.dim];
            for _ in 0..self.n_per_class {
                for &c in center {
                    let z: f64 = standard_normal(&mut rng);
                    data.push(c + self.noise * z);
                }
                labels.push(class);
            }
        }
        LabeledDataset::new(Tensor::from_vec(n, self.dim, data)?, labels, self.classes, domain, split)
    }
}

/// Draws `(source, target)` for one split. Train and test use separate
/// random streams; centers are shared.
pub fn make_shifted_gaussians(task: &GaussianTask, split: Split) -> Result<(LabeledDataset, LabeledDataset)> {
    task.validate()?;
    let source = task.sample(&task.source_centers(), Domain::Source, split)?;
    let target = task.sample(&task.target_centers(), Domain::Target, split)?;
    Ok((source, target))
}
