//! A small tape-style reverse-mode differentiation engine.
//!
//! Everything is a row-major 2D [`Tensor`] (batch x features); scalars are
//! `1 x 1`. A [`Graph`] is an append-only arena of nodes, so node order is
//! already a topological order and [`Graph::backward`] walks it in reverse,
//! visiting each node once.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{dot, PointCloud, ProjectionSet};
use crate::ot::{self, Mapping};
use crate::{Error, Result};

/// Lower clamp applied to every `log` input.
pub const LOG_CLAMP: f64 = 1e-12;

/// Default negative slope for leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape("Tensor::from_vec", format!("{} values for {rows} x {cols}", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn scalar(v: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The single entry of a `1 x 1` tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    /// Gathers the listed rows into a new tensor.
    pub fn select_rows(&self, idx: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Tensor { rows: idx.len(), cols: self.cols, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `c = op(a) * op(b) + beta * c` where `op` optionally transposes.
fn gemm(a: &Tensor, trans_a: bool, b: &Tensor, trans_b: bool, beta: f64, c: &mut Tensor) {
    let (m, k) = if trans_a { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (kb, n) = if trans_b { (b.cols, b.rows) } else { (b.rows, b.cols) };
    assert_eq!(k, kb);
    assert_eq!(c.shape(), (m, n));
    let (rsa, csa) = if trans_a { (1, a.cols as isize) } else { (a.cols as isize, 1) };
    let (rsb, csb) = if trans_b { (1, b.cols as isize) } else { (b.cols as isize, 1) };
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the shape asserts above guarantee that every strided access
    // stays inside the three buffers, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Affine { x: NodeId, w: NodeId, b: NodeId },
    LeakyRelu { x: NodeId, slope: f64 },
    Sigmoid { x: NodeId },
    Softmax { x: NodeId },
    Log { x: NodeId },
    Mean { x: NodeId },
    WeightedSum { terms: Vec<(NodeId, f64)> },
    CrossEntropy { logits: NodeId, labels: Vec<usize>, probs: Tensor },
    DiscLoss { src: NodeId, tgt: NodeId },
    AdvLoss { tgt: NodeId },
    Sgw { src: NodeId, tgt: NodeId, projections: ProjectionSet, matches: Vec<Vec<usize>> },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    grad: Option<Tensor>,
    requires_grad: bool,
    op: Op,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn clamped_ln(v: f64) -> f64 {
    libm::log(v.max(LOG_CLAMP))
}

fn check_column(op: &'static str, t: &Tensor) -> Result<()> {
    if t.cols != 1 || t.rows == 0 {
        return Err(Error::shape(op, format!("expected a nonempty n x 1 column, got {:?}", t.shape())));
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> NodeId {
        self.nodes.push(Node { value, grad: None, requires_grad, op });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, false, Op::Leaf)
    }

    /// A leaf whose gradient is tracked.
    pub fn variable(&mut self, value: Tensor) -> NodeId {
        self.push(value, true, Op::Leaf)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    /// `x W + b` with `x: n x k`, `W: k x m`, `b: 1 x m`.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if xv.cols != wv.rows || bv.rows != 1 || bv.cols != wv.cols {
            return Err(Error::shape(
                "affine",
                format!("x {:?}, W {:?}, b {:?}", xv.shape(), wv.shape(), bv.shape()),
            ));
        }
        let mut out = Tensor::zeros(xv.rows, wv.cols);
        for r in 0..out.rows {
            out.data[r * out.cols..(r + 1) * out.cols].copy_from_slice(&bv.data);
        }
        gemm(xv, false, wv, false, 1.0, &mut out);
        let rg = self.needs(&[x, w, b]);
        Ok(self.push(out, rg, Op::Affine { x, w, b }))
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> NodeId {
        let out = self.value(x).map(|v| if v > 0.0 { v } else { slope * v });
        let rg = self.needs(&[x]);
        self.push(out, rg, Op::LeakyRelu { x, slope })
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).map(|v| 1.0 / (1.0 + libm::exp(-v)));
        let rg = self.needs(&[x]);
        self.push(out, rg, Op::Sigmoid { x })
    }

    /// Row-wise softmax, shifted by the row maximum.
    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let out = softmax_rows(self.value(x));
        let rg = self.needs(&[x]);
        self.push(out, rg, Op::Softmax { x })
    }

    /// Natural log with inputs clamped below at [`LOG_CLAMP`].
    pub fn log(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).map(clamped_ln);
        let rg = self.needs(&[x]);
        self.push(out, rg, Op::Log { x })
    }

    /// Mean over every entry, as a scalar.
    pub fn mean(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x);
        if v.is_empty() {
            return Err(Error::shape("mean", String::from("empty tensor")));
        }
        let m = v.data.iter().sum::<f64>() / v.len() as f64;
        let rg = self.needs(&[x]);
        Ok(self.push(Tensor::scalar(m), rg, Op::Mean { x }))
    }

    /// `sum_k weight_k * term_k` over scalar nodes.
    pub fn weighted_sum(&mut self, terms: &[(NodeId, f64)]) -> Result<NodeId> {
        let mut total = 0.0;
        for &(id, w) in terms {
            let v = self.value(id);
            if v.shape() != (1, 1) {
                return Err(Error::shape("weighted_sum", format!("term {:?} has shape {:?}", id, v.shape())));
            }
            total += w * v.item();
        }
        let ids: Vec<NodeId> = terms.iter().map(|t| t.0).collect();
        let rg = self.needs(&ids);
        Ok(self.push(Tensor::scalar(total), rg, Op::WeightedSum { terms: terms.to_vec() }))
    }

    /// Mean over the batch of `-log softmax(logits)[label]`.
    pub fn ce_loss(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let z = self.value(logits);
        if z.rows != labels.len() || z.rows == 0 {
            return Err(Error::shape("ce_loss", format!("{} labels for logits {:?}", labels.len(), z.shape())));
        }
        for (row, &label) in labels.iter().enumerate() {
            if label >= z.cols {
                return Err(Error::LabelOutOfRange { row, label, classes: z.cols });
            }
        }
        let mut total = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            let row = z.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + libm::log(row.iter().map(|&v| libm::exp(v - max)).sum::<f64>());
            total += lse - row[label];
        }
        let probs = softmax_rows(z);
        let loss = total / labels.len() as f64;
        let rg = self.needs(&[logits]);
        Ok(self.push(Tensor::scalar(loss), rg, Op::CrossEntropy { logits, labels: labels.to_vec(), probs }))
    }

    /// Discriminator loss: `mean(-log d_src) + mean(-log(1 - d_tgt))`.
    pub fn disc_loss(&mut self, d_src: NodeId, d_tgt: NodeId) -> Result<NodeId> {
        let (s, t) = (self.value(d_src), self.value(d_tgt));
        check_column("disc_loss", s)?;
        check_column("disc_loss", t)?;
        let ls = s.data.iter().map(|&v| -clamped_ln(v)).sum::<f64>() / s.rows as f64;
        let lt = t.data.iter().map(|&v| -clamped_ln(1.0 - v)).sum::<f64>() / t.rows as f64;
        let rg = self.needs(&[d_src, d_tgt]);
        Ok(self.push(Tensor::scalar(ls + lt), rg, Op::DiscLoss { src: d_src, tgt: d_tgt }))
    }

    /// Adversarial loss for target features: `mean(-log d_tgt)`.
    pub fn adv_loss(&mut self, d_tgt: NodeId) -> Result<NodeId> {
        let t = self.value(d_tgt);
        check_column("adv_loss", t)?;
        let l = t.data.iter().map(|&v| -clamped_ln(v)).sum::<f64>() / t.rows as f64;
        let rg = self.needs(&[d_tgt]);
        Ok(self.push(Tensor::scalar(l), rg, Op::AdvLoss { tgt: d_tgt }))
    }

    /// Sliced GW between the rows of two feature batches. The forward value
    /// comes from [`ot::sgw_plan`]; backward holds each direction's sorting
    /// and identity/anti-identity choice fixed.
    pub fn sgw_loss(&mut self, feat_s: NodeId, feat_t: NodeId, projections: &ProjectionSet) -> Result<NodeId> {
        let (s, t) = (self.value(feat_s), self.value(feat_t));
        let cs = PointCloud::new(s.data.clone(), s.rows, s.cols)?;
        let ct = PointCloud::new(t.data.clone(), t.rows, t.cols)?;
        let plan = ot::sgw_plan(&cs, &ct, projections)?;
        let matches = plan
            .per_direction
            .into_iter()
            .map(|r| match r.mapping {
                Mapping::Permutation(sigma) => sigma,
                Mapping::Coupling { .. } => unreachable!("1D solver returns permutations"),
            })
            .collect();
        let rg = self.needs(&[feat_s, feat_t]);
        Ok(self.push(
            Tensor::scalar(plan.value),
            rg,
            Op::Sgw { src: feat_s, tgt: feat_t, projections: projections.clone(), matches },
        ))
    }

    /// Backpropagates from a scalar `root`. Gradients accumulate into every
    /// node that requires them; call on a fresh graph per step.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        if self.value(root).shape() != (1, 1) {
            return Err(Error::shape("backward", format!("root has shape {:?}", self.value(root).shape())));
        }
        if !self.nodes[root.0].requires_grad {
            return Ok(());
        }
        self.nodes[root.0].grad = Some(Tensor::scalar(1.0));
        for i in (0..=root.0).rev() {
            let Some(grad) = self.nodes[i].grad.take() else { continue };
            let contributions = self.node_backward(i, &grad);
            self.nodes[i].grad = Some(grad);
            for (id, g) in contributions {
                let node = &mut self.nodes[id.0];
                if !node.requires_grad {
                    continue;
                }
                match node.grad.as_mut() {
                    Some(acc) => acc.add_assign(&g),
                    None => node.grad = Some(g),
                }
            }
        }
        Ok(())
    }

    fn node_backward(&self, i: usize, grad: &Tensor) -> Vec<(NodeId, Tensor)> {
        let node = &self.nodes[i];
        let wants = |id: &NodeId| self.nodes[id.0].requires_grad;
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                if wants(x) {
                    let mut gx = Tensor::zeros(xv.rows, xv.cols);
                    gemm(grad, false, wv, true, 0.0, &mut gx);
                    out.push((*x, gx));
                }
                if wants(w) {
                    let mut gw = Tensor::zeros(wv.rows, wv.cols);
                    gemm(xv, true, grad, false, 0.0, &mut gw);
                    out.push((*w, gw));
                }
                if wants(b) {
                    let mut gb = Tensor::zeros(1, grad.cols);
                    for r in 0..grad.rows {
                        for (acc, g) in gb.data.iter_mut().zip(grad.row(r)) {
                            *acc += g;
                        }
                    }
                    out.push((*b, gb));
                }
            }
            Op::LeakyRelu { x, slope } => {
                if wants(x) {
                    let xv = self.value(*x);
                    let data =
                        xv.data.iter().zip(&grad.data).map(|(&v, &g)| if v > 0.0 { g } else { slope * g }).collect();
                    out.push((*x, Tensor { rows: xv.rows, cols: xv.cols, data }));
                }
            }
            Op::Sigmoid { x } => {
                if wants(x) {
                    let y = &node.value;
                    let data = y.data.iter().zip(&grad.data).map(|(&s, &g)| g * s * (1.0 - s)).collect();
                    out.push((*x, Tensor { rows: y.rows, cols: y.cols, data }));
                }
            }
            Op::Softmax { x } => {
                if wants(x) {
                    let y = &node.value;
                    let mut gx = Tensor::zeros(y.rows, y.cols);
                    for r in 0..y.rows {
                        let (yr, gr) = (y.row(r), grad.row(r));
                        let inner = dot(yr, gr);
                        for c in 0..y.cols {
                            gx.data[r * y.cols + c] = yr[c] * (gr[c] - inner);
                        }
                    }
                    out.push((*x, gx));
                }
            }
            Op::Log { x } => {
                if wants(x) {
                    let xv = self.value(*x);
                    let data = xv
                        .data
                        .iter()
                        .zip(&grad.data)
                        .map(|(&v, &g)| if v > LOG_CLAMP { g / v } else { 0.0 })
                        .collect();
                    out.push((*x, Tensor { rows: xv.rows, cols: xv.cols, data }));
                }
            }
            Op::Mean { x } => {
                if wants(x) {
                    let xv = self.value(*x);
                    let g = grad.item() / xv.len() as f64;
                    out.push((*x, Tensor { rows: xv.rows, cols: xv.cols, data: vec![g; xv.len()] }));
                }
            }
            Op::WeightedSum { terms } => {
                for &(id, w) in terms {
                    if wants(&id) {
                        out.push((id, Tensor::scalar(w * grad.item())));
                    }
                }
            }
            Op::CrossEntropy { logits, labels, probs } => {
                if wants(logits) {
                    let scale = grad.item() / labels.len() as f64;
                    let mut gz = probs.clone();
                    for (r, &label) in labels.iter().enumerate() {
                        gz.data[r * gz.cols + label] -= 1.0;
                    }
                    for v in gz.data.iter_mut() {
                        *v *= scale;
                    }
                    out.push((*logits, gz));
                }
            }
            Op::DiscLoss { src, tgt } => {
                let g = grad.item();
                if wants(src) {
                    let s = self.value(*src);
                    let n = s.rows as f64;
                    out.push((*src, s.map(|v| if v > LOG_CLAMP { -g / (n * v) } else { 0.0 })));
                }
                if wants(tgt) {
                    let t = self.value(*tgt);
                    let n = t.rows as f64;
                    out.push((*tgt, t.map(|v| if 1.0 - v > LOG_CLAMP { g / (n * (1.0 - v)) } else { 0.0 })));
                }
            }
            Op::AdvLoss { tgt } => {
                if wants(tgt) {
                    let g = grad.item();
                    let t = self.value(*tgt);
                    let n = t.rows as f64;
                    out.push((*tgt, t.map(|v| if v > LOG_CLAMP { -g / (n * v) } else { 0.0 })));
                }
            }
            Op::Sgw { src, tgt, projections, matches } => {
                let (s, t) = (self.value(*src), self.value(*tgt));
                let (n, d) = s.shape();
                let scale = grad.item() / projections.len() as f64;
                let mut gs = Tensor::zeros(n, d);
                let mut gt = Tensor::zeros(n, d);
                let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
                let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
                for (dir, sigma) in projections.directions().zip(matches) {
                    for a in 0..n {
                        x[a] = dot(s.row(a), dir);
                        y[a] = dot(t.row(sigma[a]), dir);
                    }
                    gx.fill(0.0);
                    gy.fill(0.0);
                    ot::paired_gw_grad(&x, &y, &mut gx, &mut gy);
                    for a in 0..n {
                        let (cx, cy) = (scale * gx[a], scale * gy[a]);
                        let rs = &mut gs.data[a * d..(a + 1) * d];
                        for (acc, &u) in rs.iter_mut().zip(dir) {
                            *acc += cx * u;
                        }
                        let b = sigma[a];
                        let rt = &mut gt.data[b * d..(b + 1) * d];
                        for (acc, &u) in rt.iter_mut().zip(dir) {
                            *acc += cy * u;
                        }
                    }
                }
                if wants(src) {
                    out.push((*src, gs));
                }
                if wants(tgt) {
                    out.push((*tgt, gt));
                }
            }
        }
        out
    }
}

fn softmax_rows(z: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(z.rows, z.cols);
    for r in 0..z.rows {
        let row = z.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dst = &mut out.data[r * z.cols..(r + 1) * z.cols];
        let mut sum = 0.0;
        for (o, &v) in dst.iter_mut().zip(row) {
            *o = libm::exp(v - max);
            sum += *o;
        }
        for o in dst.iter_mut() {
            *o /= sum;
        }
    }
    out
}

/// A named trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.rows, value.cols);
        Self { name: name.into(), value, grad }
    }

    pub fn accumulate(&mut self, g: &Tensor) {
        self.grad.add_assign(g);
    }

    pub fn zero_grad(&mut self) {
        self.grad.data.fill(0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// Plain gradient descent, optionally with heavy-ball momentum.
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub const SGD: OptimizerKind = OptimizerKind::Sgd { momentum: 0.0 };
    pub const ADAM: OptimizerKind = OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 };
}

/// Per-parameter optimizer state for one group of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    steps: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self { kind, lr, steps: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update from the accumulated gradients, then clears them.
    /// If any gradient is non-finite nothing is modified.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        if let Some(p) = params.iter().find(|p| !p.grad.is_finite()) {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
        if self.first.len() != params.len() {
            self.first = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.second = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
        }
        self.steps += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Sgd { momentum } => {
                for (p, buf) in params.iter_mut().zip(&mut self.first) {
                    if momentum == 0.0 {
                        for (w, g) in p.value.data.iter_mut().zip(&p.grad.data) {
                            *w -= lr * g;
                        }
                    } else {
                        for ((w, g), v) in p.value.data.iter_mut().zip(&p.grad.data).zip(buf.iter_mut()) {
                            *v = momentum * *v + g;
                            *w -= lr * *v;
                        }
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = self.steps as i32;
                let c1 = 1.0 - libm::pow(beta1, t as f64);
                let c2 = 1.0 - libm::pow(beta2, t as f64);
                for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
                    for (((w, g), m), v) in p.value.data.iter_mut().zip(&p.grad.data).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *w -= lr * (*m / c1) / (libm::sqrt(*v / c2) + eps);
                    }
                }
            }
        }
        for p in params.iter_mut() {
            p.zero_grad();
        }
        Ok(())
    }
}
