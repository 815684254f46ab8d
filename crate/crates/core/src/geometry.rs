//! Point clouds, intra-domain cost matrices and 1D projections.
//!
//! Every point carries the same mass `1/n`; nothing in this crate models
//! non-uniform weights.

use alloc::format;
use alloc::vec::Vec;

use crate::rng::{rng_for, standard_normal, streams};
use crate::{Error, Result};

/// Tolerance on `|direction| - 1` for anything treated as a unit vector.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// `n` points in `d` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    d: usize,
    points: Vec<f64>,
}

impl PointCloud {
    /// Wraps a row-major buffer of `n * d` values.
    pub fn new(points: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("point cloud needs at least one point"));
        }
        if d == 0 {
            return Err(Error::Empty("point cloud needs at least one dimension"));
        }
        if points.len() != n * d {
            return Err(Error::shape(
                "PointCloud::new",
                format!("buffer of {} values cannot hold {n} x {d}", points.len()),
            ));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / d, col: pos % d });
        }
        Ok(Self { n, d, points })
    }

    /// Builds a cloud from rows; ragged input is rejected.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("point cloud needs at least one point"))?;
        let d = first.as_ref().len();
        let mut points = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            points.extend_from_slice(row);
        }
        Self::new(points, rows.len(), d)
    }

    /// A one-dimensional cloud.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), values.len(), 1)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.points
    }

    /// Mass carried by each point.
    pub fn mass(&self) -> f64 {
        1.0 / self.n as f64
    }
}

/// Symmetric `n x n` matrix of squared Euclidean distances with a zero
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    /// Validates a row-major buffer against the cost-matrix invariants.
    pub fn from_values(values: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("cost matrix needs at least one point"));
        }
        if values.len() != n * n {
            return Err(Error::InvalidCost(format!("{} values for a {n} x {n} matrix", values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidCost(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidCost(format!("entry ({i}, {j}) = {v}")));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidCost(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// `L` unit directions in `d` dimensions and the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    count: usize,
    d: usize,
    seed: Option<u64>,
    directions: Vec<f64>,
}

impl ProjectionSet {
    /// Wraps explicit directions. Each row must already be a unit vector.
    pub fn from_directions(directions: Vec<f64>, count: usize, d: usize) -> Result<Self> {
        if count == 0 || d == 0 {
            return Err(Error::Empty("projection set needs L >= 1 and d >= 1"));
        }
        if directions.len() != count * d {
            return Err(Error::shape(
                "ProjectionSet::from_directions",
                format!("{} values for {count} x {d}", directions.len()),
            ));
        }
        for row in directions.chunks_exact(d) {
            check_unit(row)?;
        }
        Ok(Self { count, d, seed: None, directions })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `None` when the directions were supplied explicitly.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.directions[i * self.d..(i + 1) * self.d]
    }

    pub fn directions(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.directions.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.directions
    }
}

/// Squared Euclidean distances between all pairs of rows.
pub fn pairwise_sq_euclidean(cloud: &PointCloud) -> Result<CostMatrix> {
    let n = cloud.len();
    let mut values = alloc::vec![0.0; n * n];
    for i in 0..n {
        let a = cloud.row(i);
        for j in (i + 1)..n {
            let b = cloud.row(j);
            let v: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            if !v.is_finite() {
                return Err(Error::CostOverflow { row: i });
            }
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(CostMatrix { n, values })
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_unit(direction: &[f64]) -> Result<()> {
    let norm = libm::sqrt(dot(direction, direction));
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NotUnit { norm });
    }
    Ok(())
}

/// Writes `<row, direction>` for each row of `cloud` into `out`.
pub(crate) fn project_into(cloud: &PointCloud, direction: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(cloud.rows().map(|row| dot(row, direction)));
}

/// Projects every point onto `direction`, keeping row order.
pub fn project_1d(cloud: &PointCloud, direction: &[f64]) -> Result<PointCloud> {
    if direction.len() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), found: direction.len() });
    }
    check_unit(direction)?;
    let mut out = Vec::with_capacity(cloud.len());
    project_into(cloud, direction, &mut out);
    PointCloud::new(out, cloud.len(), 1)
}

/// Draws `count` directions uniformly on the unit sphere in `d` dimensions
/// by normalizing standard-normal vectors.
pub fn sample_projections(count: usize, d: usize, seed: u64) -> Result<ProjectionSet> {
    if count == 0 {
        return Err(Error::arg("number of projections must be at least 1"));
    }
    if d == 0 {
        return Err(Error::arg("projection dimension must be at least 1"));
    }
    let mut rng = rng_for(seed, streams::PROJECTIONS);
    let mut directions = Vec::with_capacity(count * d);
    let mut v = alloc::vec![0.0f64; d];
    for _ in 0..count {
        loop {
            for x in v.iter_mut() {
                *x = standard_normal(&mut rng);
            }
            let norm = libm::sqrt(dot(&v, &v));
            // A zero (or denormal) draw has no direction; draw again.
            if norm > 1e-100 {
                directions.extend(v.iter().map(|x| x / norm));
                break;
            }
        }
    }
    Ok(ProjectionSet { count, d, seed: Some(seed), directions })
}

/// `n` points with independent standard-normal coordinates, scaled by
/// `scale`.
pub fn gaussian_cloud(n: usize, d: usize, scale: f64, seed: u64) -> Result<PointCloud> {
    let mut rng = rng_for(seed, streams::SAMPLES);
    let points = (0..n * d)
        .map(|_| {
            let z: f64 = standard_normal(&mut rng);
            scale * z
        })
        .collect();
    PointCloud::new(points, n, d)
}
