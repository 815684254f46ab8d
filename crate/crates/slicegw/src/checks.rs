//! Numerical property checks shared by `slicegw selftest` and the
//! acceptance suite. Each check draws its instances from a seed and reports
//! how many it ran, the worst deviation seen and whether that stayed
//! within tolerance.

use serde::Serialize;
use slicegw_core::autodiff::{Graph, NodeId, Tensor};
use slicegw_core::geometry::{gaussian_cloud, pairwise_sq_euclidean, sample_projections, PointCloud, ProjectionSet};
use slicegw_core::ot::{gw_1d, gw_bruteforce, sgw, sgw_plan, Mapping};
use slicegw_core::rng::{derive_seed, mix64};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str, instances: usize, worst: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), passed: worst <= tolerance, instances, worst, tolerance, detail }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} instances, worst {:.3e} (tolerance {:.0e}){}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.worst,
            self.tolerance,
            if self.detail.is_empty() { "" } else { "; " },
            self.detail
        )
    }
}

/// A 1D instance on which the sorted solver and the exhaustive search
/// disagreed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleFixture {
    pub seed: u64,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub gw_1d: f64,
    pub gw_bruteforce: f64,
}

fn pick(seed: u64, lo: usize, hi: usize) -> usize {
    lo + (mix64(seed) % (hi - lo + 1) as u64) as usize
}

fn brute_value(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(gw_bruteforce(&pairwise_sq_euclidean(a)?, &pairwise_sq_euclidean(b)?)?.value)
}

fn scaled(cloud: &PointCloud, f: impl Fn(usize, &[f64]) -> Vec<f64>) -> Result<PointCloud> {
    let rows: Vec<Vec<f64>> = cloud.rows().enumerate().map(|(i, r)| f(i, r)).collect();
    Ok(PointCloud::from_rows(&rows)?)
}

/// 1D instances with `n` in 2..=7: sorted solver against exhaustive search.
pub fn oracle_equivalence(instances: usize, seed: u64) -> Result<(CheckReport, Vec<OracleFixture>)> {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    let mut fixtures = Vec::new();
    for k in 0..instances as u64 {
        let s = derive_seed(seed, k);
        let n = pick(s, 2, 7);
        let a = gaussian_cloud(n, 1, 1.0, derive_seed(s, 1))?;
        let b = gaussian_cloud(n, 1, 1.0, derive_seed(s, 2))?;
        let fast = gw_1d(&a, &b)?.value;
        let slow = brute_value(&a, &b)?;
        let diff = (fast - slow).abs();
        worst = worst.max(diff);
        if diff > TOL {
            fixtures.push(OracleFixture {
                seed: s,
                source: a.as_slice().to_vec(),
                target: b.as_slice().to_vec(),
                gw_1d: fast,
                gw_bruteforce: slow,
            });
        }
    }
    let detail = format!("{} discrepancies", fixtures.len());
    Ok((CheckReport::new("oracle equivalence (gw_1d vs gw_bruteforce)", instances, worst, TOL, detail), fixtures))
}

/// A random orthogonal matrix (rotation or reflection), row-major.
pub fn random_orthogonal(d: usize, seed: u64) -> Result<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut attempt = 0;
    while basis.len() < d {
        let mut v = gaussian_cloud(1, d, 1.0, derive_seed(seed, attempt))?.into_vec();
        attempt += 1;
        for u in &basis {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(basis.concat())
}

fn rigid(cloud: &PointCloud, q: &[f64], t: &[f64]) -> Result<PointCloud> {
    let d = cloud.dim();
    scaled(cloud, |_, row| (0..d).map(|i| (0..d).map(|k| q[i * d + k] * row[k]).sum::<f64>() + t[i]).collect())
}

/// `gw_bruteforce` under a random rotation/reflection plus translation of
/// one of the two clouds, in 2 and 3 dimensions with `n <= 6`.
pub fn isometry_invariance(instances: usize, seed: u64) -> Result<CheckReport> {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    let mut reflections = 0;
    for k in 0..instances as u64 {
        let s = derive_seed(seed, k);
        let (n, d) = (pick(s, 2, 6), pick(derive_seed(s, 9), 2, 3));
        let a = gaussian_cloud(n, d, 1.0, derive_seed(s, 1))?;
        let b = gaussian_cloud(n, d, 1.0, derive_seed(s, 2))?;
        let mut q = random_orthogonal(d, derive_seed(s, 3))?;
        if k % 2 == 1 {
            q[..d].iter_mut().for_each(|v| *v = -*v);
        }
        if det_sign(&q, d) < 0.0 {
            reflections += 1;
        }
        let t = gaussian_cloud(1, d, 5.0, derive_seed(s, 4))?.into_vec();
        let base = brute_value(&a, &b)?;
        let moved = if k % 4 < 2 { brute_value(&rigid(&a, &q, &t)?, &b)? } else { brute_value(&a, &rigid(&b, &q, &t)?)? };
        worst = worst.max((base - moved).abs());
    }
    let detail = format!("{reflections} of them orientation-reversing");
    Ok(CheckReport::new("isometry invariance of gw_bruteforce", instances, worst, TOL, detail))
}

fn det_sign(q: &[f64], d: usize) -> f64 {
    match d {
        1 => q[0],
        2 => q[0] * q[3] - q[1] * q[2],
        _ => {
            q[0] * (q[4] * q[8] - q[5] * q[7]) - q[1] * (q[3] * q[8] - q[5] * q[6]) + q[2] * (q[3] * q[7] - q[4] * q[6])
        }
    }
}

/// `sgw(X, X)` and `sgw(X, X + t)` on random clouds. Returns the identity
/// and translation reports.
pub fn identity_and_translation(instances: usize, seed: u64) -> Result<(CheckReport, CheckReport)> {
    let (mut worst_id, mut worst_tr): (f64, f64) = (0.0, 0.0);
    for k in 0..instances as u64 {
        let s = derive_seed(seed, k);
        let (n, d) = (pick(s, 2, 200), pick(derive_seed(s, 9), 1, 5));
        let x = gaussian_cloud(n, d, 1.0, derive_seed(s, 1))?;
        let t = gaussian_cloud(1, d, 10.0, derive_seed(s, 2))?.into_vec();
        let p = sample_projections(50, d, derive_seed(s, 3))?;
        worst_id = worst_id.max(sgw(&x, &x, &p)?.abs());
        let shifted = scaled(&x, |_, r| r.iter().zip(&t).map(|(a, b)| a + b).collect())?;
        worst_tr = worst_tr.max(sgw(&x, &shifted, &p)?.abs());
    }
    Ok((
        CheckReport::new("sgw(X, X) = 0", instances, worst_id, 1e-12, String::new()),
        CheckReport::new("sgw(X, X + t) = 0", instances, worst_tr, 1e-10, String::new()),
    ))
}

/// Scaling both clouds by `s` multiplies every GW variant by `s^4`.
pub fn scaling_law(instances: usize, seed: u64) -> Result<CheckReport> {
    const TOL: f64 = 1e-6;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    for k in 0..instances as u64 {
        let s0 = derive_seed(seed, k);
        let n = pick(s0, 2, 6);
        let a = gaussian_cloud(n, 2, 1.0, derive_seed(s0, 1))?;
        let b = gaussian_cloud(n, 2, 1.0, derive_seed(s0, 2))?;
        let a1 = gaussian_cloud(n, 1, 1.0, derive_seed(s0, 3))?;
        let b1 = gaussian_cloud(n, 1, 1.0, derive_seed(s0, 4))?;
        let p = sample_projections(20, 2, derive_seed(s0, 5))?;
        for s in [0.5f64, 2.0, 3.0] {
            let f = s.powi(4);
            let up = |c: &PointCloud| scaled(c, |_, r| r.iter().map(|v| v * s).collect());
            worst = worst.max(rel(brute_value(&up(&a)?, &up(&b)?)?, f * brute_value(&a, &b)?));
            worst = worst.max(rel(gw_1d(&up(&a1)?, &up(&b1)?)?.value, f * gw_1d(&a1, &b1)?.value));
            worst = worst.max(rel(sgw(&up(&a)?, &up(&b)?, &p)?, f * sgw(&a, &b, &p)?));
            count += 3;
        }
    }
    Ok(CheckReport::new("s^4 scaling of gw_bruteforce, gw_1d, sgw", count, worst, TOL, "s in {0.5, 2, 3}".into()))
}

/// Central-difference step and tolerance for [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Entries whose gradient magnitude is below this are compared absolutely.
pub const FD_FLOOR: f64 = 1e-6;

struct Instance {
    inputs: Vec<Tensor>,
    labels: Vec<usize>,
    projections: ProjectionSet,
}

/// Indices into `Instance::inputs`.
const XS: usize = 0;
const XT: usize = 1;

/// Builds the composite objective `ce + 0.3 mean(log softmax) + 0.7 disc +
/// 0.5 adv + 1.1 sgw` over a two-layer extractor, a linear classifier and a
/// sigmoid discriminator. Returns the root and the nodes whose values
/// determine the non-smooth branches (leaky ReLU inputs).
fn composite(g: &mut Graph, ids: &[NodeId], inst: &Instance) -> slicegw_core::Result<(NodeId, Vec<NodeId>)> {
    let [xs, xt, w1, b1, w2, b2, wc, bc, wd, bd] = ids[..] else { unreachable!("ten inputs") };
    let hs = g.affine(xs, w1, b1)?;
    let ht = g.affine(xt, w1, b1)?;
    let (as_, at) = (g.leaky_relu(hs, 0.2), g.leaky_relu(ht, 0.2));
    let fs = g.affine(as_, w2, b2)?;
    let ft = g.affine(at, w2, b2)?;
    let logits = g.affine(fs, wc, bc)?;
    let ce = g.ce_loss(logits, &inst.labels)?;
    let probs = g.softmax(logits);
    let logp = g.log(probs);
    let m = g.mean(logp)?;
    let zs = g.affine(fs, wd, bd)?;
    let zt = g.affine(ft, wd, bd)?;
    let (ds, dt) = (g.sigmoid(zs), g.sigmoid(zt));
    let disc = g.disc_loss(ds, dt)?;
    let adv = g.adv_loss(dt)?;
    let sw = g.sgw_loss(fs, ft, &inst.projections)?;
    let root = g.weighted_sum(&[(ce, 1.0), (m, 0.3), (disc, 0.7), (adv, 0.5), (sw, 1.1)])?;
    Ok((root, vec![hs, ht]))
}

fn branch_key(inst: &Instance) -> slicegw_core::Result<(Vec<bool>, Vec<Mapping>)> {
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inst.inputs.iter().map(|t| g.constant(t.clone())).collect();
    let (_, kinks) = composite(&mut g, &ids, inst)?;
    let signs = kinks.iter().flat_map(|&k| g.value(k).data().iter().map(|&v| v > 0.0).collect::<Vec<_>>()).collect();
    // Features are the inputs of the sgw loss; recompute them to read its plan.
    let features: Vec<PointCloud> = [XS, XT]
        .iter()
        .map(|&x| {
            let mut g = Graph::new();
            let ids: Vec<NodeId> = inst.inputs.iter().map(|t| g.constant(t.clone())).collect();
            let h = g.affine(ids[x], ids[2], ids[3])?;
            let a = g.leaky_relu(h, 0.2);
            let f = g.affine(a, ids[4], ids[5])?;
            let v = g.value(f);
            PointCloud::new(v.data().to_vec(), v.rows(), v.cols())
        })
        .collect::<slicegw_core::Result<_>>()?;
    let plan = sgw_plan(&features[0], &features[1], &inst.projections)?;
    Ok((signs, plan.per_direction.into_iter().map(|r| r.mapping).collect()))
}

fn eval(inst: &Instance) -> slicegw_core::Result<f64> {
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inst.inputs.iter().map(|t| g.constant(t.clone())).collect();
    let (root, _) = composite(&mut g, &ids, inst)?;
    Ok(g.value(root).item())
}

fn random_instance(seed: u64) -> Result<Instance> {
    let n = pick(seed, 3, 8);
    let (k, h, f, c) = (pick(derive_seed(seed, 1), 2, 4), 5, pick(derive_seed(seed, 2), 2, 4), 3);
    let shapes = [(n, k), (n, k), (k, h), (1, h), (h, f), (1, f), (f, c), (1, c), (f, 1), (1, 1)];
    let inputs = shapes
        .iter()
        .enumerate()
        .map(|(i, &(r, cols))| {
            let v = gaussian_cloud(r, cols, if i < 2 { 1.0 } else { 0.7 }, derive_seed(seed, 100 + i as u64))?;
            Ok(Tensor::from_vec(r, cols, v.into_vec())?)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..n).map(|i| (mix64(derive_seed(seed, 200 + i as u64)) % c as u64) as usize).collect();
    let projections = sample_projections(6, f, derive_seed(seed, 3))?;
    Ok(Instance { inputs, labels, projections })
}

/// Backpropagated gradients of a composite objective (every graph op plus
/// `sgw_loss`) against central differences. An entry is skipped, and
/// counted, when moving it by the step changes a sorting order, an
/// identity/anti-identity choice or the side of a leaky-ReLU kink.
pub fn gradient_check(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let (mut checked, mut skipped) = (0usize, 0usize);
    for k in 0..instances as u64 {
        let inst = random_instance(derive_seed(seed, k))?;
        let mut g = Graph::new();
        let ids: Vec<NodeId> = inst.inputs.iter().map(|t| g.variable(t.clone())).collect();
        let (root, _) = composite(&mut g, &ids, &inst)?;
        g.backward(root)?;
        let key = branch_key(&inst)?;
        for (i, t) in inst.inputs.iter().enumerate() {
            let analytic = g.grad(ids[i]).cloned().unwrap_or_else(|| Tensor::zeros(t.rows(), t.cols()));
            for e in 0..t.len() {
                let mut values = [0.0; 2];
                let mut tie = false;
                for (slot, h) in [FD_STEP, -FD_STEP].into_iter().enumerate() {
                    let mut moved = Instance {
                        inputs: inst.inputs.clone(),
                        labels: inst.labels.clone(),
                        projections: inst.projections.clone(),
                    };
                    moved.inputs[i].data_mut()[e] += h;
                    tie |= branch_key(&moved)? != key;
                    values[slot] = eval(&moved)?;
                }
                if tie {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                let fd = (values[0] - values[1]) / (2.0 * FD_STEP);
                let a = analytic.data()[e];
                worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(FD_FLOOR));
            }
        }
    }
    let detail = format!("{checked} entries compared, {skipped} skipped at ties or kinks");
    let mut report = CheckReport::new("gradients vs central differences", instances, worst, FD_TOLERANCE, detail);
    report.passed &= checked > 0;
    Ok(report)
}

/// `disc_loss` at `D = 0.5` everywhere and `ce_loss` at uniform logits.
pub fn loss_sanity() -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [1, 4, 17] {
        let mut g = Graph::new();
        let s = g.constant(Tensor::from_vec(n, 1, vec![0.5; n])?);
        let t = g.constant(Tensor::from_vec(n + 2, 1, vec![0.5; n + 2])?);
        let l = g.disc_loss(s, t)?;
        worst = worst.max((g.value(l).item() - 2.0 * std::f64::consts::LN_2).abs());
        count += 1;
    }
    for c in 2..=10usize {
        for fill in [0.0, 3.7, -12.5] {
            let mut g = Graph::new();
            let z = g.constant(Tensor::from_vec(5, c, vec![fill; 5 * c])?);
            let labels: Vec<usize> = (0..5).map(|i| i % c).collect();
            let l = g.ce_loss(z, &labels)?;
            worst = worst.max((g.value(l).item() - (c as f64).ln()).abs());
            count += 1;
        }
    }
    Ok(CheckReport::new("disc_loss(0.5) = 2 ln 2, ce_loss(uniform) = ln c", count, worst, 1e-12, String::new()))
}

/// The fast property checks, with the instance counts of the acceptance
/// criteria.
pub fn standard_suite(seed: u64) -> Result<Vec<CheckReport>> {
    let (oracle, _) = oracle_equivalence(200, seed)?;
    let (id, tr) = identity_and_translation(50, derive_seed(seed, 2))?;
    Ok(vec![
        oracle,
        isometry_invariance(50, derive_seed(seed, 1))?,
        id,
        tr,
        scaling_law(20, derive_seed(seed, 3))?,
        gradient_check(20, derive_seed(seed, 4))?,
        loss_sanity()?,
    ])
}
