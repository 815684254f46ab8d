//! Adversarial + sliced-GW unsupervised domain adaptation.
//!
//! One training step runs, in order:
//!
//! 1. a discriminator update on `disc_loss(D(F(x_s)), D(F(x_t)))` with the
//!    extractor outputs detached (skipped when the arm has no adversarial
//!    term);
//! 2. an extractor + classifier update on
//!    `L_s + lambda_adv * L_adv + lambda_sgw * L_sgw`, where terms with a
//!    zero effective weight are left out of the graph entirely.
//!
//! Source and target batches are always the same size, because the 1D GW
//! solver pairs points one-to-one.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::autodiff::{Graph, OptimizerKind, Tensor, LEAKY_SLOPE};
use crate::data::LabeledDataset;
use crate::geometry::{sample_projections, ProjectionSet};
use crate::model::{ModelBundle, ModelDims, Module};
use crate::rng::{derive_seed, rng_for, streams, Rng};
use crate::{Error, Result};

/// Which target-side losses are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    SourceOnly,
    AdvOnly,
    SgwOnly,
    AdvPlusSgw,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::SourceOnly, Arm::AdvOnly, Arm::SgwOnly, Arm::AdvPlusSgw];

    pub fn name(self) -> &'static str {
        match self {
            Arm::SourceOnly => "source_only",
            Arm::AdvOnly => "adv_only",
            Arm::SgwOnly => "sgw_only",
            Arm::AdvPlusSgw => "adv_plus_sgw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown arm {s:?}; expected one of source_only, adv_only, sgw_only, adv_plus_sgw")))
    }

    pub fn uses_adversarial(self) -> bool {
        matches!(self, Arm::AdvOnly | Arm::AdvPlusSgw)
    }

    pub fn uses_sgw(self) -> bool {
        matches!(self, Arm::SgwOnly | Arm::AdvPlusSgw)
    }
}

/// Training hyper-parameters. The defaults are batch 128, learning rate
/// 0.0002, 10 epochs, unit loss weights, 200 projections and Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub lambda_adv: f64,
    pub lambda_sgw: f64,
    pub projections: usize,
    pub seed: u64,
    pub arm: Arm,
    /// Draw fresh projections every step (otherwise once per run).
    pub resample_projections: bool,
    pub hidden: usize,
    pub feature_dim: usize,
    pub disc_hidden: usize,
    pub leaky_slope: f64,
    pub optimizer: OptimizerKind,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            lr: 0.0002,
            epochs: 10,
            lambda_adv: 1.0,
            lambda_sgw: 1.0,
            projections: 200,
            seed: 0,
            arm: Arm::AdvPlusSgw,
            resample_projections: true,
            hidden: 128,
            feature_dim: 64,
            disc_hidden: 64,
            leaky_slope: LEAKY_SLOPE,
            optimizer: OptimizerKind::ADAM,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::arg("batch_size must be at least 2"));
        }
        if self.epochs < 1 {
            return Err(Error::arg("epochs must be at least 1"));
        }
        if [self.lambda_adv, self.lambda_sgw].iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::arg("loss weights must be >= 0"));
        }
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::arg("lr must be a positive finite number"));
        }
        if self.projections < 1 {
            return Err(Error::arg("projections must be at least 1"));
        }
        if self.hidden == 0 || self.feature_dim == 0 || self.disc_hidden == 0 {
            return Err(Error::arg("layer widths must be at least 1"));
        }
        if let OptimizerKind::Sgd { momentum } = self.optimizer {
            if !(0.0..1.0).contains(&momentum) {
                return Err(Error::arg("momentum must be in [0, 1)"));
            }
        }
        Ok(())
    }

    /// Adversarial weight after the arm is applied.
    pub fn effective_lambda_adv(&self) -> f64 {
        if self.arm.uses_adversarial() {
            self.lambda_adv
        } else {
            0.0
        }
    }

    pub fn effective_lambda_sgw(&self) -> f64 {
        if self.arm.uses_sgw() {
            self.lambda_sgw
        } else {
            0.0
        }
    }

    /// Seed of the projection set used at `step`.
    pub fn projection_seed(&self, step: u64) -> u64 {
        if self.resample_projections {
            derive_seed(self.seed, step.wrapping_add(1 << 32))
        } else {
            derive_seed(self.seed, 1 << 32)
        }
    }
}

/// Loss values recorded for one training step. `target` is the value of
/// the graph node `lambda_adv * adv + lambda_sgw * sgw`; `lambda_*` are the
/// effective weights used in that node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub step: u64,
    pub source: f64,
    pub adv: f64,
    pub sgw: f64,
    pub disc: f64,
    pub target: f64,
    pub total: f64,
    pub lambda_adv: f64,
    pub lambda_sgw: f64,
}

/// Per-epoch summary. `seconds` is filled in by callers that own a clock.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub src_acc: f64,
    pub tgt_acc: f64,
    pub loss_source: f64,
    pub loss_adv: f64,
    pub loss_sgw: f64,
    pub loss_disc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub arm: Arm,
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    pub final_src_acc: f64,
    pub final_tgt_acc: f64,
}

/// Source/target train sets plus held-out test sets.
#[derive(Debug, Clone)]
pub struct DomainData {
    pub source_train: LabeledDataset,
    pub target_train: LabeledDataset,
    pub source_test: LabeledDataset,
    pub target_test: LabeledDataset,
}

impl DomainData {
    pub fn validate(&self) -> Result<()> {
        let all = [&self.source_train, &self.target_train, &self.source_test, &self.target_test];
        let (dim, classes) = (self.source_train.dim(), self.source_train.classes());
        for ds in all {
            if ds.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: ds.dim() });
            }
            if ds.classes() != classes {
                return Err(Error::arg(format!("class count {} vs {classes}", ds.classes())));
            }
        }
        Ok(())
    }
}

/// Owns a [`ModelBundle`] and advances it step by step.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: ExperimentConfig,
    pub bundle: ModelBundle,
    step: u64,
    epoch: usize,
    shuffle: Rng,
    fixed_projections: Option<ProjectionSet>,
    history: Vec<StepLog>,
}

impl Trainer {
    pub fn new(cfg: ExperimentConfig, input_dim: usize, classes: usize) -> Result<Self> {
        cfg.validate()?;
        let dims = ModelDims {
            input: input_dim,
            hidden: cfg.hidden,
            feature: cfg.feature_dim,
            classes,
            disc_hidden: cfg.disc_hidden,
        };
        let bundle = ModelBundle::new(dims, cfg.seed, cfg.leaky_slope, cfg.optimizer, cfg.lr)?;
        let shuffle = rng_for(cfg.seed, streams::SHUFFLE);
        Ok(Self { cfg, bundle, step: 0, epoch: 0, shuffle, fixed_projections: None, history: Vec::new() })
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn history(&self) -> &[StepLog] {
        &self.history
    }

    fn projections_for_step(&mut self) -> Result<ProjectionSet> {
        let d = self.cfg.feature_dim;
        if self.cfg.resample_projections {
            return sample_projections(self.cfg.projections, d, self.cfg.projection_seed(self.step));
        }
        if self.fixed_projections.is_none() {
            self.fixed_projections = Some(sample_projections(self.cfg.projections, d, self.cfg.projection_seed(0))?);
        }
        Ok(self.fixed_projections.clone().expect("set above"))
    }

    /// One discriminator update followed by one extractor/classifier update.
    pub fn train_step(&mut self, xs: &Tensor, ys: &[usize], xt: &Tensor) -> Result<StepLog> {
        if xs.rows() != xt.rows() || xs.rows() != ys.len() {
            return Err(Error::SizeMismatch { left: xs.rows(), right: xt.rows() });
        }
        let lambda_adv = self.cfg.effective_lambda_adv();
        let lambda_sgw = self.cfg.effective_lambda_sgw();
        let projections = self.projections_for_step()?;

        // Discriminator update on detached features.
        let disc = {
            let mut g = Graph::new();
            let fs = g.constant(self.bundle.features(xs)?);
            let ft = g.constant(self.bundle.features(xt)?);
            let trainable = self.cfg.arm.uses_adversarial();
            let bd = self.bundle.discriminator.bind(&mut g, trainable);
            let ds = self.bundle.discriminator.forward(&mut g, &bd, fs)?;
            let dt = self.bundle.discriminator.forward(&mut g, &bd, ft)?;
            let loss = g.disc_loss(ds, dt)?;
            if trainable {
                g.backward(loss)?;
                self.bundle.discriminator.absorb(&g, &bd);
                self.bundle.step_d()?;
            }
            g.value(loss).item()
        };

        // Extractor + classifier update; D enters as constants.
        let mut g = Graph::new();
        let bf = self.bundle.extractor.bind(&mut g, true);
        let bc = self.bundle.classifier.bind(&mut g, true);
        let bd = self.bundle.discriminator.bind(&mut g, false);
        let xs_id = g.constant(xs.clone());
        let xt_id = g.constant(xt.clone());
        let fs = self.bundle.extractor.forward(&mut g, &bf, xs_id)?;
        let ft = self.bundle.extractor.forward(&mut g, &bf, xt_id)?;
        let logits = self.bundle.classifier.logits(&mut g, &bc, fs)?;
        let l_s = g.ce_loss(logits, ys)?;
        let d_t = self.bundle.discriminator.forward(&mut g, &bd, ft)?;
        let l_adv = g.adv_loss(d_t)?;
        let l_sgw = g.sgw_loss(fs, ft, &projections)?;

        let mut target_terms = Vec::new();
        if lambda_adv > 0.0 {
            target_terms.push((l_adv, lambda_adv));
        }
        if lambda_sgw > 0.0 {
            target_terms.push((l_sgw, lambda_sgw));
        }
        let l_t = g.weighted_sum(&target_terms)?;
        let total = if target_terms.is_empty() { l_s } else { g.weighted_sum(&[(l_s, 1.0), (l_t, 1.0)])? };
        g.backward(total)?;
        self.bundle.extractor.absorb(&g, &bf);
        self.bundle.classifier.absorb(&g, &bc);
        self.bundle.step_fc()?;

        let log = StepLog {
            step: self.step,
            source: g.value(l_s).item(),
            adv: g.value(l_adv).item(),
            sgw: g.value(l_sgw).item(),
            disc,
            target: g.value(l_t).item(),
            total: g.value(total).item(),
            lambda_adv,
            lambda_sgw,
        };
        self.step += 1;
        self.history.push(log);
        Ok(log)
    }

    /// One pass over shuffled, zipped source/target batches; trailing
    /// partial batches are dropped. Returns mean losses over the steps.
    pub fn train_epoch(&mut self, source: &LabeledDataset, target: &LabeledDataset) -> Result<EpochMetrics> {
        let b = self.cfg.batch_size;
        let steps = (source.len() / b).min(target.len() / b);
        if steps == 0 {
            return Err(Error::arg(format!(
                "batch size {b} exceeds the smaller training set ({} source, {} target)",
                source.len(),
                target.len()
            )));
        }
        let mut src_order: Vec<usize> = (0..source.len()).collect();
        let mut tgt_order: Vec<usize> = (0..target.len()).collect();
        src_order.shuffle(&mut self.shuffle);
        tgt_order.shuffle(&mut self.shuffle);
        let mut sums = [0.0f64; 4];
        for k in 0..steps {
            let si = &src_order[k * b..(k + 1) * b];
            let ti = &tgt_order[k * b..(k + 1) * b];
            let xs = source.features().select_rows(si);
            let ys: Vec<usize> = si.iter().map(|&i| source.labels()[i]).collect();
            let xt = target.features().select_rows(ti);
            let log = self.train_step(&xs, &ys, &xt)?;
            for (acc, v) in sums.iter_mut().zip([log.source, log.adv, log.sgw, log.disc]) {
                *acc += v;
            }
        }
        self.epoch += 1;
        let n = steps as f64;
        Ok(EpochMetrics {
            epoch: self.epoch,
            src_acc: f64::NAN,
            tgt_acc: f64::NAN,
            loss_source: sums[0] / n,
            loss_adv: sums[1] / n,
            loss_sgw: sums[2] / n,
            loss_disc: sums[3] / n,
            seconds: 0.0,
        })
    }

    /// Trains for `cfg.epochs` epochs, evaluating on the held-out sets after
    /// each one. `on_epoch` sees each finished epoch (and may set its
    /// wall-clock time).
    pub fn run(&mut self, data: &DomainData, mut on_epoch: impl FnMut(&mut EpochMetrics)) -> Result<Metrics> {
        data.validate()?;
        let mut epochs = Vec::with_capacity(self.cfg.epochs);
        for _ in 0..self.cfg.epochs {
            let mut m = self.train_epoch(&data.source_train, &data.target_train)?;
            m.src_acc = evaluate(&self.bundle, &data.source_test)?;
            m.tgt_acc = evaluate(&self.bundle, &data.target_test)?;
            on_epoch(&mut m);
            epochs.push(m);
        }
        let last = epochs.last().expect("epochs >= 1");
        Ok(Metrics {
            arm: self.cfg.arm,
            seed: self.cfg.seed,
            final_src_acc: last.src_acc,
            final_tgt_acc: last.tgt_acc,
            epochs,
        })
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fraction of rows whose predicted class matches the label.
pub fn evaluate(bundle: &ModelBundle, ds: &LabeledDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    const CHUNK: usize = 1024;
    let mut correct = 0usize;
    let idx: Vec<usize> = (0..ds.len()).collect();
    for chunk in idx.chunks(CHUNK) {
        let probs = bundle.predict(&ds.features().select_rows(chunk))?;
        for (r, &i) in chunk.iter().enumerate() {
            if argmax(probs.row(r)) == ds.labels()[i] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Short human-readable label for logs.
pub fn describe(cfg: &ExperimentConfig) -> String {
    format!(
        "{} seed={} batch={} lr={} epochs={} lambda_adv={} lambda_sgw={} L={}",
        cfg.arm.name(),
        cfg.seed,
        cfg.batch_size,
        cfg.lr,
        cfg.epochs,
        cfg.lambda_adv,
        cfg.lambda_sgw,
        cfg.projections
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_shifted_gaussians, Domain, GaussianTask, Split};
    use alloc::vec;

    fn tiny_cfg(arm: Arm) -> ExperimentConfig {
        ExperimentConfig {
            batch_size: 4,
            lr: 0.05,
            epochs: 1,
            projections: 8,
            arm,
            hidden: 6,
            feature_dim: 3,
            disc_hidden: 5,
            ..Default::default()
        }
    }

    fn batch() -> (Tensor, Vec<usize>, Tensor) {
        let xs = Tensor::from_vec(4, 2, vec![0.1, 0.9, -1.0, 0.3, 0.5, 0.5, 2.0, -0.7]).unwrap();
        let xt = Tensor::from_vec(4, 2, vec![1.1, -0.2, 0.4, 0.8, -0.6, 1.3, 0.0, 0.2]).unwrap();
        (xs, vec![0, 1, 1, 0], xt)
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!((c.batch_size, c.lr, c.epochs, c.projections), (128, 0.0002, 10, 200));
        assert_eq!((c.lambda_adv, c.lambda_sgw), (1.0, 1.0));
    }

    #[test]
    fn config_invariants() {
        let bad = [
            ExperimentConfig { epochs: 0, ..Default::default() },
            ExperimentConfig { batch_size: 1, ..Default::default() },
            ExperimentConfig { lambda_adv: -1.0, ..Default::default() },
            ExperimentConfig { lambda_sgw: f64::NAN, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn arm_names_round_trip() {
        for arm in Arm::ALL {
            assert_eq!(Arm::parse(arm.name()).unwrap(), arm);
        }
        assert!(Arm::parse("both").is_err());
    }

    #[test]
    fn source_only_never_touches_discriminator() {
        let mut t = Trainer::new(tiny_cfg(Arm::SourceOnly), 2, 2).unwrap();
        let d0 = t.bundle.discriminator.clone();
        let (xs, ys, xt) = batch();
        for _ in 0..5 {
            t.train_step(&xs, &ys, &xt).unwrap();
        }
        assert_eq!(t.bundle.discriminator, d0);
    }

    #[test]
    fn sgw_only_never_touches_discriminator() {
        let mut t = Trainer::new(tiny_cfg(Arm::SgwOnly), 2, 2).unwrap();
        let d0 = t.bundle.discriminator.clone();
        let f0 = t.bundle.extractor.clone();
        let (xs, ys, xt) = batch();
        for _ in 0..3 {
            t.train_step(&xs, &ys, &xt).unwrap();
        }
        assert_eq!(t.bundle.discriminator, d0);
        assert_ne!(t.bundle.extractor, f0);
    }

    #[test]
    fn zero_weights_match_source_only_bitwise() {
        let mut zeroed = tiny_cfg(Arm::AdvPlusSgw);
        zeroed.lambda_adv = 0.0;
        zeroed.lambda_sgw = 0.0;
        let mut a = Trainer::new(zeroed, 2, 2).unwrap();
        let mut b = Trainer::new(tiny_cfg(Arm::SourceOnly), 2, 2).unwrap();
        let (xs, ys, xt) = batch();
        for _ in 0..4 {
            a.train_step(&xs, &ys, &xt).unwrap();
            b.train_step(&xs, &ys, &xt).unwrap();
        }
        assert_eq!(a.bundle.extractor, b.bundle.extractor);
        assert_eq!(a.bundle.classifier, b.bundle.classifier);
    }

    #[test]
    fn logged_target_loss_is_weighted_sum() {
        let mut cfg = tiny_cfg(Arm::AdvPlusSgw);
        cfg.seed = 0;
        cfg.lambda_adv = 0.7;
        cfg.lambda_sgw = 1.3;
        let mut t = Trainer::new(cfg, 2, 2).unwrap();
        let (xs, ys, xt) = batch();
        let log = t.train_step(&xs, &ys, &xt).unwrap();
        assert!((log.target - (0.7 * log.adv + 1.3 * log.sgw)).abs() < 1e-12);
        assert!((log.total - (log.source + log.target)).abs() < 1e-12);
    }

    #[test]
    fn step_rejects_unequal_batches() {
        let mut t = Trainer::new(tiny_cfg(Arm::AdvPlusSgw), 2, 2).unwrap();
        let (xs, ys, _) = batch();
        let xt = Tensor::zeros(3, 2);
        assert!(t.train_step(&xs, &ys, &xt).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.0, 0.0, 1.0]), 2);
    }

    #[test]
    fn uniform_classifier_scores_class_zero_fraction() {
        let mut t = Trainer::new(tiny_cfg(Arm::SourceOnly), 2, 2).unwrap();
        for p in t.bundle.classifier.params_mut() {
            p.value.data_mut().fill(0.0);
        }
        let labels = vec![0, 1, 1, 0, 1];
        let ds = LabeledDataset::new(Tensor::zeros(5, 2), labels, 2, Domain::Source, Split::Test).unwrap();
        assert_eq!(evaluate(&t.bundle, &ds).unwrap(), 0.4);
    }

    #[test]
    fn runs_are_reproducible() {
        let task = GaussianTask { n_per_class: 20, ..Default::default() };
        let (source_train, target_train) = make_shifted_gaussians(&task, Split::Train).unwrap();
        let (source_test, target_test) = make_shifted_gaussians(&task, Split::Test).unwrap();
        let data = DomainData { source_train, target_train, source_test, target_test };
        let mut cfg = tiny_cfg(Arm::AdvPlusSgw);
        cfg.batch_size = 16;
        cfg.epochs = 2;
        let a = Trainer::new(cfg.clone(), 2, 4).unwrap().run(&data, |_| {}).unwrap();
        let b = Trainer::new(cfg, 2, 4).unwrap().run(&data, |_| {}).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.epochs.len(), 2);
        assert!((0.0..=1.0).contains(&a.final_tgt_acc));
    }
}
