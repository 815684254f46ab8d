mod common;

use common::*;
use rand::Rng;
use slicegw_core::autodiff::{Graph, NodeId, Tensor};
use slicegw_core::geometry::{sample_projections, PointCloud, ProjectionSet};
use slicegw_core::ot::sgw_plan;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
/// Gradient entries below this magnitude are compared absolutely.
const FLOOR: f64 = 1e-6;

type Build<'a> = dyn Fn(&mut Graph, &[NodeId]) -> NodeId + 'a;

fn eval(inputs: &[Tensor], build: &Build) -> f64 {
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let out = build(&mut g, &ids);
    g.value(out).item()
}

/// Largest relative error between backprop and central differences over
/// every input entry for which `skip` returns false.
fn check(inputs: &[Tensor], build: &Build, skip: &dyn Fn(usize, usize) -> bool) -> f64 {
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.variable(t.clone())).collect();
    let out = build(&mut g, &ids);
    g.backward(out).unwrap();
    let mut worst: f64 = 0.0;
    for (k, t) in inputs.iter().enumerate() {
        let analytic = g.grad(ids[k]).cloned().unwrap_or_else(|| Tensor::zeros(t.rows(), t.cols()));
        for e in 0..t.len() {
            if skip(k, e) {
                continue;
            }
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[e] += H;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[e] -= H;
            let fd = (eval(&plus, build) - eval(&minus, build)) / (2.0 * H);
            worst = worst.max(rel_err(analytic.data()[e], fd, FLOOR));
        }
    }
    worst
}

fn uniform(r: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| r.random_range(lo..hi)).collect()).unwrap()
}

/// Reduces a matrix node to a scalar through a fixed random linear head.
fn head(g: &mut Graph, x: NodeId, weights: &Tensor) -> NodeId {
    let w = g.constant(weights.clone());
    let b = g.constant(Tensor::zeros(1, 1));
    let y = g.affine(x, w, b).unwrap();
    g.mean(y).unwrap()
}

#[test]
fn affine_gradients() {
    let mut r = rng(1);
    for _ in 0..20 {
        let (n, k, m) = (r.random_range(1..6), r.random_range(1..5), r.random_range(1..5));
        let inputs = [uniform(&mut r, n, k, -2.0, 2.0), uniform(&mut r, k, m, -1.0, 1.0), uniform(&mut r, 1, m, -1.0, 1.0)];
        let hw = uniform(&mut r, m, 1, -1.0, 1.0);
        let build = |g: &mut Graph, ids: &[NodeId]| {
            let y = g.affine(ids[0], ids[1], ids[2]).unwrap();
            head(g, y, &hw)
        };
        let e = check(&inputs, &build, &|_, _| false);
        assert!(e < TOL, "affine rel err {e}");
    }
}

#[test]
fn elementwise_gradients() {
    let mut r = rng(2);
    for _ in 0..20 {
        let (n, m) = (r.random_range(1..6), r.random_range(1..5));
        let x = uniform(&mut r, n, m, -3.0, 3.0);
        let hw = uniform(&mut r, m, 1, -1.0, 1.0);
        let near_kink = |_: usize, e: usize| x.data()[e].abs() < 1e-3;
        let leaky = |g: &mut Graph, ids: &[NodeId]| {
            let y = g.leaky_relu(ids[0], 0.2);
            head(g, y, &hw)
        };
        let sig = |g: &mut Graph, ids: &[NodeId]| {
            let y = g.sigmoid(ids[0]);
            head(g, y, &hw)
        };
        let soft = |g: &mut Graph, ids: &[NodeId]| {
            let y = g.softmax(ids[0]);
            head(g, y, &hw)
        };
        let inputs = [x.clone()];
        for (name, e) in [
            ("leaky_relu", check(&inputs, &leaky, &near_kink)),
            ("sigmoid", check(&inputs, &sig, &|_, _| false)),
            ("softmax", check(&inputs, &soft, &|_, _| false)),
        ] {
            assert!(e < TOL, "{name} rel err {e}");
        }
        let pos = [uniform(&mut r, n, m, 0.1, 3.0)];
        let log = |g: &mut Graph, ids: &[NodeId]| {
            let y = g.log(ids[0]);
            head(g, y, &hw)
        };
        let e = check(&pos, &log, &|_, _| false);
        assert!(e < TOL, "log rel err {e}");
    }
}

#[test]
fn loss_gradients() {
    let mut r = rng(3);
    for _ in 0..20 {
        let (n, c) = (r.random_range(1..7), r.random_range(2..5));
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
        let logits = [uniform(&mut r, n, c, -3.0, 3.0)];
        let ce = |g: &mut Graph, ids: &[NodeId]| g.ce_loss(ids[0], &labels).unwrap();
        let e = check(&logits, &ce, &|_, _| false);
        assert!(e < TOL, "ce rel err {e}");

        let probs = [uniform(&mut r, n, 1, 0.05, 0.95), uniform(&mut r, n + 1, 1, 0.05, 0.95)];
        let disc = |g: &mut Graph, ids: &[NodeId]| g.disc_loss(ids[0], ids[1]).unwrap();
        let e = check(&probs, &disc, &|_, _| false);
        assert!(e < TOL, "disc rel err {e}");
        let adv = |g: &mut Graph, ids: &[NodeId]| g.adv_loss(ids[1]).unwrap();
        let e = check(&probs, &adv, &|_, _| false);
        assert!(e < TOL, "adv rel err {e}");

        let w = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let ws = |g: &mut Graph, ids: &[NodeId]| {
            let a = g.adv_loss(ids[1]).unwrap();
            let b = g.disc_loss(ids[0], ids[1]).unwrap();
            g.weighted_sum(&[(a, w.0), (b, w.1)]).unwrap()
        };
        let e = check(&probs, &ws, &|_, _| false);
        assert!(e < TOL, "weighted_sum rel err {e}");
    }
}

fn plan_key(s: &Tensor, t: &Tensor, p: &ProjectionSet) -> Vec<slicegw_core::ot::Mapping> {
    let cs = PointCloud::new(s.data().to_vec(), s.rows(), s.cols()).unwrap();
    let ct = PointCloud::new(t.data().to_vec(), t.rows(), t.cols()).unwrap();
    sgw_plan(&cs, &ct, p).unwrap().per_direction.into_iter().map(|r| r.mapping).collect()
}

#[test]
fn sgw_loss_gradients_away_from_ties() {
    let mut r = rng(4);
    let mut skipped = 0usize;
    let mut checked = 0usize;
    for case in 0..20u64 {
        let (n, d) = (r.random_range(2..9), r.random_range(1..4));
        let inputs = [uniform(&mut r, n, d, -2.0, 2.0), uniform(&mut r, n, d, -2.0, 2.0)];
        let p = sample_projections(5, d, case).unwrap();
        let base = plan_key(&inputs[0], &inputs[1], &p);
        let tie = |k: usize, e: usize| {
            [H, -H].iter().any(|&h| {
                let mut moved = inputs.to_vec();
                moved[k].data_mut()[e] += h;
                plan_key(&moved[0], &moved[1], &p) != base
            })
        };
        for (k, t) in inputs.iter().enumerate() {
            for e in 0..t.len() {
                if tie(k, e) {
                    skipped += 1;
                } else {
                    checked += 1;
                }
            }
        }
        let build = |g: &mut Graph, ids: &[NodeId]| g.sgw_loss(ids[0], ids[1], &p).unwrap();
        let e = check(&inputs, &build, &tie);
        assert!(e < TOL, "sgw_loss case {case} rel err {e}");
    }
    eprintln!("sgw_loss: {checked} entries checked, {skipped} skipped near ties");
    assert!(checked > skipped);
}
