#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicegw_core::geometry::PointCloud;
use slicegw_core::rng::standard_normal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointCloud {
    let v: Vec<f64> = (0..n * d).map(|_| standard_normal(rng)).collect();
    PointCloud::new(v, n, d).unwrap()
}

/// Random orthogonal matrix (rotation or reflection) by Gram-Schmidt on a
/// Gaussian matrix, row-major `d x d`.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    if rng.random_bool(0.5) {
        for x in q[0].iter_mut() {
            *x = -*x;
        }
    }
    q.concat()
}

/// `x -> Q x + t` applied to every row.
pub fn rigid_motion(cloud: &PointCloud, q: &[f64], t: &[f64]) -> PointCloud {
    let d = cloud.dim();
    let mut out = Vec::with_capacity(cloud.len() * d);
    for row in cloud.rows() {
        for i in 0..d {
            let v: f64 = (0..d).map(|k| q[i * d + k] * row[k]).sum();
            out.push(v + t[i]);
        }
    }
    PointCloud::new(out, cloud.len(), d).unwrap()
}

pub fn map_cloud(cloud: &PointCloud, f: impl Fn(f64) -> f64) -> PointCloud {
    PointCloud::new(cloud.as_slice().iter().map(|&v| f(v)).collect(), cloud.len(), cloud.dim()).unwrap()
}

pub fn permute_rows(cloud: &PointCloud, perm: &[usize]) -> PointCloud {
    let rows: Vec<Vec<f64>> = perm.iter().map(|&i| cloud.row(i).to_vec()).collect();
    PointCloud::from_rows(&rows).unwrap()
}

/// Independent exhaustive GW over permutations: recursive enumeration and
/// the direct double sum over squared distances recomputed from the points.
pub fn oracle_gw(a: &PointCloud, b: &PointCloud) -> f64 {
    fn sq(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
    }
    fn rec(a: &PointCloud, b: &PointCloud, perm: &mut Vec<usize>, used: &mut Vec<bool>, best: &mut f64) {
        let n = a.len();
        if perm.len() == n {
            let mut t = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let u = sq(a.row(i), a.row(j)) - sq(b.row(perm[i]), b.row(perm[j]));
                    t += u * u;
                }
            }
            *best = best.min(t / (n * n) as f64);
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                perm.push(k);
                rec(a, b, perm, used, best);
                perm.pop();
                used[k] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(a, b, &mut Vec::new(), &mut vec![false; a.len()], &mut best);
    best
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
