//! The three networks trained by the adaptation loop.
//!
//! - Extractor `F`: affine -> leaky ReLU -> affine, shared by both domains.
//! - Classifier `C`: one affine map followed by softmax.
//! - Discriminator `D`: two affine + leaky ReLU layers, then a scalar
//!   affine head and a sigmoid.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng as _;

use crate::autodiff::{Graph, NodeId, Optimizer, OptimizerKind, Param, Tensor};
use crate::rng::{rng_for, streams, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub feature: usize,
    pub classes: usize,
    pub disc_hidden: usize,
}

/// Affine layer `x W + b`, `W: in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    /// Uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and bias.
    fn init(name: &str, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-bound..=bound)).collect() };
        let w = draw(fan_in * fan_out);
        let b = draw(fan_out);
        Linear {
            weight: Param::new(format!("{name}.weight"), Tensor::from_vec(fan_in, fan_out, w).expect("shape")),
            bias: Param::new(format!("{name}.bias"), Tensor::from_vec(1, fan_out, b).expect("shape")),
        }
    }
}

/// A network whose parameters can be placed on a graph.
pub trait Module {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    /// Puts every parameter on `g`, as variables when `trainable`.
    fn bind(&self, g: &mut Graph, trainable: bool) -> Bound {
        let nodes = self
            .params()
            .into_iter()
            .map(|p| if trainable { g.variable(p.value.clone()) } else { g.constant(p.value.clone()) })
            .collect();
        Bound { nodes, trainable }
    }

    /// Adds the graph gradients of a trainable binding into the parameters.
    fn absorb(&mut self, g: &Graph, bound: &Bound) {
        if !bound.trainable {
            return;
        }
        for (p, &id) in self.params_mut().into_iter().zip(&bound.nodes) {
            if let Some(grad) = g.grad(id) {
                p.accumulate(grad);
            }
        }
    }
}

/// Graph nodes holding one module's parameters, in `params()` order.
#[derive(Debug, Clone)]
pub struct Bound {
    nodes: Vec<NodeId>,
    trainable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extractor {
    pub hidden: Linear,
    pub out: Linear,
    pub slope: f64,
}

impl Module for Extractor {
    fn params(&self) -> Vec<&Param> {
        alloc::vec![&self.hidden.weight, &self.hidden.bias, &self.out.weight, &self.out.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        alloc::vec![&mut self.hidden.weight, &mut self.hidden.bias, &mut self.out.weight, &mut self.out.bias]
    }
}

impl Extractor {
    pub fn forward(&self, g: &mut Graph, bound: &Bound, x: NodeId) -> Result<NodeId> {
        let n = &bound.nodes;
        let h = g.affine(x, n[0], n[1])?;
        let h = g.leaky_relu(h, self.slope);
        g.affine(h, n[2], n[3])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub out: Linear,
}

impl Module for Classifier {
    fn params(&self) -> Vec<&Param> {
        alloc::vec![&self.out.weight, &self.out.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        alloc::vec![&mut self.out.weight, &mut self.out.bias]
    }
}

impl Classifier {
    /// Pre-softmax scores.
    pub fn logits(&self, g: &mut Graph, bound: &Bound, features: NodeId) -> Result<NodeId> {
        g.affine(features, bound.nodes[0], bound.nodes[1])
    }

    /// Class probabilities.
    pub fn forward(&self, g: &mut Graph, bound: &Bound, features: NodeId) -> Result<NodeId> {
        let z = self.logits(g, bound, features)?;
        Ok(g.softmax(z))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub first: Linear,
    pub second: Linear,
    pub head: Linear,
    pub slope: f64,
}

impl Module for Discriminator {
    fn params(&self) -> Vec<&Param> {
        alloc::vec![
            &self.first.weight,
            &self.first.bias,
            &self.second.weight,
            &self.second.bias,
            &self.head.weight,
            &self.head.bias
        ]
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        alloc::vec![
            &mut self.first.weight,
            &mut self.first.bias,
            &mut self.second.weight,
            &mut self.second.bias,
            &mut self.head.weight,
            &mut self.head.bias
        ]
    }
}

impl Discriminator {
    /// Probability that each feature row came from the source domain.
    pub fn forward(&self, g: &mut Graph, bound: &Bound, features: NodeId) -> Result<NodeId> {
        let n = &bound.nodes;
        let h = g.affine(features, n[0], n[1])?;
        let h = g.leaky_relu(h, self.slope);
        let h = g.affine(h, n[2], n[3])?;
        let h = g.leaky_relu(h, self.slope);
        let z = g.affine(h, n[4], n[5])?;
        Ok(g.sigmoid(z))
    }
}

/// `F`, `C`, `D` plus one optimizer for `F + C` and one for `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub dims: ModelDims,
    pub seed: u64,
    pub extractor: Extractor,
    pub classifier: Classifier,
    pub discriminator: Discriminator,
    pub opt_fc: Optimizer,
    pub opt_d: Optimizer,
}

impl ModelBundle {
    pub fn new(dims: ModelDims, seed: u64, slope: f64, optimizer: OptimizerKind, lr: f64) -> Result<Self> {
        let ModelDims { input, hidden, feature, classes, disc_hidden } = dims;
        if [input, hidden, feature, disc_hidden].contains(&0) || classes < 2 {
            return Err(Error::arg(format!("invalid model dimensions {dims:?}")));
        }
        let mut rng = rng_for(seed, streams::INIT);
        let extractor = Extractor {
            hidden: Linear::init("extractor.hidden", input, hidden, &mut rng),
            out: Linear::init("extractor.out", hidden, feature, &mut rng),
            slope,
        };
        let classifier = Classifier { out: Linear::init("classifier.out", feature, classes, &mut rng) };
        let discriminator = Discriminator {
            first: Linear::init("discriminator.first", feature, disc_hidden, &mut rng),
            second: Linear::init("discriminator.second", disc_hidden, disc_hidden, &mut rng),
            head: Linear::init("discriminator.head", disc_hidden, 1, &mut rng),
            slope,
        };
        Ok(Self {
            dims,
            seed,
            extractor,
            classifier,
            discriminator,
            opt_fc: Optimizer::new(optimizer, lr),
            opt_d: Optimizer::new(optimizer, lr),
        })
    }

    /// Applies accumulated gradients to `F` and `C`.
    pub fn step_fc(&mut self) -> Result<()> {
        let mut params = self.extractor.params_mut();
        params.extend(self.classifier.params_mut());
        self.opt_fc.step(&mut params)
    }

    /// Applies accumulated gradients to `D`.
    pub fn step_d(&mut self) -> Result<()> {
        let mut params = self.discriminator.params_mut();
        self.opt_d.step(&mut params)
    }

    /// Every parameter tensor, `F` then `C` then `D`.
    pub fn named_tensors(&self) -> Vec<(&str, &Tensor)> {
        let mut out: Vec<(&str, &Tensor)> = Vec::new();
        for p in self.extractor.params().into_iter().chain(self.classifier.params()).chain(self.discriminator.params()) {
            out.push((p.name.as_str(), &p.value));
        }
        out
    }

    /// Overwrites parameter values by name. Every parameter must be present
    /// with a matching shape.
    pub fn load_named(&mut self, tensors: &[(String, Tensor)]) -> Result<()> {
        let mut params = self.extractor.params_mut();
        params.extend(self.classifier.params_mut());
        params.extend(self.discriminator.params_mut());
        for p in params {
            let (_, t) = tensors
                .iter()
                .find(|(name, _)| *name == p.name)
                .ok_or_else(|| Error::arg(format!("missing parameter {}", p.name)))?;
            if t.shape() != p.value.shape() {
                return Err(Error::shape("load_named", format!("{}: {:?} vs {:?}", p.name, t.shape(), p.value.shape())));
            }
            p.value = t.clone();
            p.zero_grad();
        }
        Ok(())
    }

    /// Class probabilities for a batch, without tracking gradients.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let bf = self.extractor.bind(&mut g, false);
        let bc = self.classifier.bind(&mut g, false);
        let xi = g.constant(x.clone());
        let f = self.extractor.forward(&mut g, &bf, xi)?;
        let p = self.classifier.forward(&mut g, &bc, f)?;
        Ok(g.value(p).clone())
    }

    /// Extracted features for a batch.
    pub fn features(&self, x: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let bf = self.extractor.bind(&mut g, false);
        let xi = g.constant(x.clone());
        let f = self.extractor.forward(&mut g, &bf, xi)?;
        Ok(g.value(f).clone())
    }
}
