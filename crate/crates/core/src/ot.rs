//! Gromov-Wasserstein distances on uniform empirical measures.
//!
//! Conventions shared by every solver here:
//!
//! - Costs are squared Euclidean intra-domain distances.
//! - The GW objective pairs source indices `(i, j)` with target indices
//!   `(k, l)` through `pi[i][k] * pi[j][l]`.
//! - Permutations act as couplings with mass `1/n` on `(i, sigma(i))`, so
//!   every permutation objective carries the `1/n^2` factor.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{project_into, CostMatrix, PointCloud, ProjectionSet};
use crate::{Error, Result};

/// Largest `n` accepted by [`gw_bruteforce`] (9! permutations).
pub const BRUTEFORCE_MAX_N: usize = 9;

/// Marginal tolerance for dense couplings.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// A correspondence between source and target indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    /// `sigma[i]` is the target index matched to source index `i`.
    Permutation(Vec<usize>),
    /// Row-major `n x n` transport plan with uniform marginals `1/n`.
    Coupling { n: usize, plan: Vec<f64> },
}

impl Mapping {
    pub fn permutation(sigma: Vec<usize>) -> Result<Self> {
        let n = sigma.len();
        if n == 0 {
            return Err(Error::Empty("permutation needs at least one index"));
        }
        let mut seen = vec![false; n];
        for &s in &sigma {
            if s >= n || seen[s] {
                return Err(Error::InvalidMapping(format!("{sigma:?} is not a bijection on 0..{n}")));
            }
            seen[s] = true;
        }
        Ok(Mapping::Permutation(sigma))
    }

    pub fn identity(n: usize) -> Self {
        Mapping::Permutation((0..n).collect())
    }

    pub fn coupling(plan: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("coupling needs at least one index"));
        }
        if plan.len() != n * n {
            return Err(Error::InvalidMapping(format!("{} entries for an {n} x {n} coupling", plan.len())));
        }
        if let Some(v) = plan.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidMapping(format!("negative or non-finite mass {v}")));
        }
        let mass = 1.0 / n as f64;
        for i in 0..n {
            let row: f64 = plan[i * n..(i + 1) * n].iter().sum();
            let col: f64 = (0..n).map(|k| plan[k * n + i]).sum();
            if (row - mass).abs() > MARGINAL_TOLERANCE || (col - mass).abs() > MARGINAL_TOLERANCE {
                return Err(Error::InvalidMapping(format!(
                    "marginal {i}: row {row}, column {col}, expected {mass}"
                )));
            }
        }
        Ok(Mapping::Coupling { n, plan })
    }

    pub fn len(&self) -> usize {
        match self {
            Mapping::Permutation(s) => s.len(),
            Mapping::Coupling { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dense plan; permutations become `1/n` on `(i, sigma(i))`.
    pub fn to_plan(&self) -> Vec<f64> {
        match self {
            Mapping::Permutation(sigma) => {
                let n = sigma.len();
                let mut plan = vec![0.0; n * n];
                for (i, &s) in sigma.iter().enumerate() {
                    plan[i * n + s] = 1.0 / n as f64;
                }
                plan
            }
            Mapping::Coupling { plan, .. } => plan.clone(),
        }
    }

    pub fn as_permutation(&self) -> Option<&[usize]> {
        match self {
            Mapping::Permutation(s) => Some(s),
            Mapping::Coupling { .. } => None,
        }
    }
}

/// A GW value together with a mapping attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct GwResult {
    pub value: f64,
    pub mapping: Mapping,
}

/// `sum_{i,j,k,l} |c_s(i,j) - c_t(k,l)|^2 pi[i][k] pi[j][l]`, evaluated
/// term by term (zero-mass entries skipped).
pub fn gw_objective(cost_s: &CostMatrix, cost_t: &CostMatrix, mapping: &Mapping) -> Result<f64> {
    let n = cost_s.len();
    if cost_t.len() != n {
        return Err(Error::SizeMismatch { left: n, right: cost_t.len() });
    }
    if mapping.len() != n {
        return Err(Error::SizeMismatch { left: n, right: mapping.len() });
    }
    let plan = mapping.to_plan();
    let support: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .filter_map(|(i, k)| {
            let m = plan[i * n + k];
            (m != 0.0).then_some((i, k, m))
        })
        .collect();
    let mut total = 0.0;
    for &(i, k, a) in &support {
        for &(j, l, b) in &support {
            let diff = cost_s.get(i, j) - cost_t.get(k, l);
            total += diff * diff * a * b;
        }
    }
    Ok(total)
}

fn permutation_value(cost_s: &CostMatrix, cost_t: &CostMatrix, sigma: &[usize]) -> f64 {
    let n = sigma.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let diff = cost_s.get(i, j) - cost_t.get(sigma[i], sigma[j]);
            total += diff * diff;
        }
    }
    total / (n * n) as f64
}

/// Rearranges `perm` into the next permutation in lexicographic order.
/// Returns `false` once the last permutation has been passed.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Exact GW over permutation couplings by enumerating all `n!`
/// permutations. Ties go to the lexicographically smallest permutation.
pub fn gw_bruteforce(cost_s: &CostMatrix, cost_t: &CostMatrix) -> Result<GwResult> {
    let n = cost_s.len();
    if cost_t.len() != n {
        return Err(Error::SizeMismatch { left: n, right: cost_t.len() });
    }
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge { n, max: BRUTEFORCE_MAX_N });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_value = permutation_value(cost_s, cost_t, &perm);
    let mut best = perm.clone();
    while next_permutation(&mut perm) {
        let v = permutation_value(cost_s, cost_t, &perm);
        if v < best_value {
            best_value = v;
            best.copy_from_slice(&perm);
        }
    }
    Ok(GwResult { value: best_value, mapping: Mapping::Permutation(best) })
}

/// `(1/n^2) sum_{a,b} ((x_a - x_b)^2 - (y_a - y_b)^2)^2` for paired 1D
/// values, in O(n).
///
/// With `d = x - y` and `s = x + y` each term factors as
/// `(d_a - d_b)^2 (s_a - s_b)^2`, which expands into centered moments.
/// Identical inputs give `d = 0` and hence an exact zero.
pub fn paired_gw_value(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    PairMoments::new(x, y, |i| i).value()
}

/// Gradient of [`paired_gw_value`] with respect to `x` and `y`, with the
/// pairing held fixed. Results are added into `gx` and `gy`.
pub fn paired_gw_grad(x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
    let m = PairMoments::new(x, y, |i| i);
    let n = m.n;
    let scale = 4.0 / (n * n);
    for i in 0..x.len() {
        let d = x[i] - y[i] - m.mean_d;
        let s = x[i] + y[i] - m.mean_s;
        // sum_b (d - d_b)(s - s_b)^2 and sum_b (s - s_b)(d - d_b)^2
        let gd = d * (n * s * s - 2.0 * s * m.s1 + m.s2) - (s * s * m.d1 - 2.0 * s * m.ds + m.ds2);
        let gs = s * (n * d * d - 2.0 * d * m.d1 + m.d2) - (d * d * m.s1 - 2.0 * d * m.ds + m.d2s);
        gx[i] += scale * (gd + gs);
        gy[i] += scale * (gs - gd);
    }
}

/// Centered moments of `d = x - y` and `s = x + y`.
struct PairMoments {
    n: f64,
    mean_d: f64,
    mean_s: f64,
    d1: f64,
    s1: f64,
    d2: f64,
    s2: f64,
    ds: f64,
    d2s: f64,
    ds2: f64,
    d2s2: f64,
}

impl PairMoments {
    fn new(x: &[f64], y: &[f64], index: impl Fn(usize) -> usize) -> Self {
        let len = x.len();
        let n = len as f64;
        let mean_d = (0..len).map(|i| x[i] - y[index(i)]).sum::<f64>() / n;
        let mean_s = (0..len).map(|i| x[i] + y[index(i)]).sum::<f64>() / n;
        let mut m = PairMoments { n, mean_d, mean_s, d1: 0.0, s1: 0.0, d2: 0.0, s2: 0.0, ds: 0.0, d2s: 0.0, ds2: 0.0, d2s2: 0.0 };
        for i in 0..len {
            let yi = y[index(i)];
            let d = x[i] - yi - mean_d;
            let s = x[i] + yi - mean_s;
            let (dd, ss) = (d * d, s * s);
            m.d1 += d;
            m.s1 += s;
            m.d2 += dd;
            m.s2 += ss;
            m.ds += d * s;
            m.d2s += dd * s;
            m.ds2 += d * ss;
            m.d2s2 += dd * ss;
        }
        m
    }

    /// `(1/n^2) sum_{a,b} (d_a - d_b)^2 (s_a - s_b)^2`.
    fn value(&self) -> f64 {
        let total = 2.0 * self.n * self.d2s2 - 4.0 * self.d2s * self.s1 - 4.0 * self.ds2 * self.d1
            + 2.0 * self.d2 * self.s2
            + 4.0 * self.ds * self.ds;
        // The exact value is a sum of squares; only rounding can push it below zero.
        (total / (self.n * self.n)).max(0.0)
    }
}

/// Which sorted pairing won in the 1D solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Identity,
    AntiIdentity,
}

/// Relative gap below which the identity and anti-identity values count as
/// tied (and identity is chosen).
pub const ORIENTATION_TIE: f64 = 1e-12;

/// Solves 1D GW on two ascending sequences of equal length.
pub fn solve_sorted(xs: &[f64], ys: &[f64]) -> (f64, Orientation) {
    let identity = paired_gw_value(xs, ys);
    let n = xs.len();
    let anti = PairMoments::new(xs, ys, |i| n - 1 - i).value();
    if anti < identity * (1.0 - ORIENTATION_TIE) {
        (anti, Orientation::AntiIdentity)
    } else {
        (identity, Orientation::Identity)
    }
}

fn sorted_copy(values: &[f64], buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend_from_slice(values);
    buf.sort_unstable_by(f64::total_cmp);
}

fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

/// Solves 1D GW on unsorted projected values; the mapping is expressed in
/// the original indices.
fn gw_1d_values(xs: &[f64], ys: &[f64]) -> GwResult {
    let n = xs.len();
    let order_s = argsort(xs);
    let order_t = argsort(ys);
    let sorted_s: Vec<f64> = order_s.iter().map(|&i| xs[i]).collect();
    let sorted_t: Vec<f64> = order_t.iter().map(|&i| ys[i]).collect();
    let (value, orientation) = solve_sorted(&sorted_s, &sorted_t);
    let mut sigma = vec![0usize; n];
    for (rank, &i) in order_s.iter().enumerate() {
        sigma[i] = match orientation {
            Orientation::Identity => order_t[rank],
            Orientation::AntiIdentity => order_t[n - 1 - rank],
        };
    }
    GwResult { value, mapping: Mapping::Permutation(sigma) }
}

/// GW between two 1D clouds by sorting and comparing the identity and
/// anti-identity pairings. O(n log n).
pub fn gw_1d(proj_s: &PointCloud, proj_t: &PointCloud) -> Result<GwResult> {
    for c in [proj_s, proj_t] {
        if c.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: c.dim() });
        }
    }
    if proj_s.len() != proj_t.len() {
        return Err(Error::SizeMismatch { left: proj_s.len(), right: proj_t.len() });
    }
    Ok(gw_1d_values(proj_s.as_slice(), proj_t.as_slice()))
}

fn check_sliced_inputs(s: &PointCloud, t: &PointCloud, projections: &ProjectionSet) -> Result<()> {
    if s.len() != t.len() {
        return Err(Error::SizeMismatch { left: s.len(), right: t.len() });
    }
    if s.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: t.dim() });
    }
    if projections.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: projections.dim() });
    }
    Ok(())
}

/// Sliced Gromov-Wasserstein: the mean of 1D GW values over all
/// projection directions, accumulated in direction order.
pub fn sgw(cloud_s: &PointCloud, cloud_t: &PointCloud, projections: &ProjectionSet) -> Result<f64> {
    check_sliced_inputs(cloud_s, cloud_t, projections)?;
    let n = cloud_s.len();
    let (mut ps, mut pt) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut total = 0.0;
    for dir in projections.directions() {
        project_into(cloud_s, dir, &mut ps);
        project_into(cloud_t, dir, &mut pt);
        sorted_copy(&ps, &mut xs);
        sorted_copy(&pt, &mut ys);
        total += solve_sorted(&xs, &ys).0;
    }
    Ok(total / projections.len() as f64)
}

/// SGW together with the per-direction 1D solutions. `value` is bitwise
/// equal to what [`sgw`] returns for the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedPlan {
    pub value: f64,
    pub per_direction: Vec<GwResult>,
}

pub fn sgw_plan(cloud_s: &PointCloud, cloud_t: &PointCloud, projections: &ProjectionSet) -> Result<SlicedPlan> {
    check_sliced_inputs(cloud_s, cloud_t, projections)?;
    let n = cloud_s.len();
    let (mut ps, mut pt) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut per_direction = Vec::with_capacity(projections.len());
    let mut total = 0.0;
    for dir in projections.directions() {
        project_into(cloud_s, dir, &mut ps);
        project_into(cloud_t, dir, &mut pt);
        let r = gw_1d_values(&ps, &pt);
        total += r.value;
        per_direction.push(r);
    }
    Ok(SlicedPlan { value: total / projections.len() as f64, per_direction })
}

/// Sliced Wasserstein-2 squared: sorted matching per direction, averaged.
pub fn sliced_wasserstein(cloud_s: &PointCloud, cloud_t: &PointCloud, projections: &ProjectionSet) -> Result<f64> {
    check_sliced_inputs(cloud_s, cloud_t, projections)?;
    let n = cloud_s.len();
    let (mut ps, mut pt) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut total = 0.0;
    for dir in projections.directions() {
        project_into(cloud_s, dir, &mut ps);
        project_into(cloud_t, dir, &mut pt);
        sorted_copy(&ps, &mut xs);
        sorted_copy(&pt, &mut ys);
        let w: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - b) * (a - b)).sum();
        total += w / n as f64;
    }
    Ok(total / projections.len() as f64)
}
