//! Loading the datasets named by a [`RunSpec`], running one training arm
//! and reporting the result.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use slicegw_core::adapt::{describe, DomainData, EpochMetrics, Metrics, Trainer};
use slicegw_core::autodiff::OptimizerKind;
use slicegw_core::data::{invert_domain, make_shifted_gaussians, Domain, GaussianTask, LabeledDataset, Split};

use crate::config::{DatasetKind, RunSpec};
use crate::error::{Error, Result};
use crate::idx::load_idx;

pub const MNIST_FILES: [&str; 4] =
    ["train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"];

/// The four datasets of a run.
///
/// For `mnist-invert` the MNIST training set is split in half: the first
/// half is the labeled source, the second half (inverted) the unlabeled
/// target. Test sets are the MNIST test set and its inversion.
pub fn load_data(spec: &RunSpec) -> Result<DomainData> {
    let data = match spec.dataset {
        DatasetKind::Gaussians => {
            let task = GaussianTask { seed: spec.effective_data_seed(), ..spec.task.clone() };
            let (source_train, target_train) = make_shifted_gaussians(&task, Split::Train)?;
            let (source_test, target_test) = make_shifted_gaussians(&task, Split::Test)?;
            DomainData { source_train, target_train, source_test, target_test }
        }
        DatasetKind::MnistInvert => {
            let dir = &spec.mnist_dir;
            let train = load_idx(dir.join(MNIST_FILES[0]), dir.join(MNIST_FILES[1]), Split::Train)?;
            let test = load_idx(dir.join(MNIST_FILES[2]), dir.join(MNIST_FILES[3]), Split::Test)?;
            let half = train.len() / 2;
            let source = rows(&train, 0, half)?;
            let target = invert_domain(&rows(&train, half, train.len())?)?;
            let test = cap(test, spec.test_limit)?;
            DomainData {
                source_train: cap(source, spec.train_limit)?,
                target_train: cap(target, spec.train_limit)?,
                target_test: invert_domain(&test)?,
                source_test: test,
            }
        }
    };
    Ok(data)
}

fn rows(ds: &LabeledDataset, start: usize, end: usize) -> Result<LabeledDataset> {
    let idx: Vec<usize> = (start..end).collect();
    let labels = idx.iter().map(|&i| ds.labels()[i]).collect();
    Ok(LabeledDataset::new(ds.features().select_rows(&idx), labels, ds.classes(), Domain::Source, ds.split)?)
}

fn cap(ds: LabeledDataset, limit: Option<usize>) -> Result<LabeledDataset> {
    match limit {
        Some(n) if n < ds.len() => Ok(ds.truncated(n)?),
        _ => Ok(ds),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub src_acc: f64,
    pub tgt_acc: f64,
    pub loss_source: f64,
    pub loss_adv: f64,
    pub loss_sgw: f64,
    pub loss_disc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

/// Everything needed to identify and reproduce a run, plus its results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub dataset: String,
    pub arm: String,
    pub seed: u64,
    pub data_seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: String,
    pub lambda_adv: f64,
    pub lambda_sgw: f64,
    pub projections: usize,
    pub resample_projections: bool,
    pub train_rows: usize,
    pub test_rows: usize,
    pub steps: u64,
    pub final_src_acc: f64,
    pub final_tgt_acc: f64,
    pub history: Vec<EpochRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

impl RunSummary {
    /// Wall-clock fields are dropped so the summary depends only on the
    /// configuration and seed.
    pub fn without_timing(&self) -> Self {
        let mut s = self.clone();
        s.seconds = None;
        for e in &mut s.history {
            e.seconds = None;
        }
        s
    }
}

pub fn optimizer_name(kind: OptimizerKind) -> String {
    match kind {
        OptimizerKind::Sgd { momentum: 0.0 } => "sgd".into(),
        OptimizerKind::Sgd { momentum } => format!("sgd(momentum={momentum})"),
        OptimizerKind::Adam { .. } => "adam".into(),
    }
}

/// Full training run on already-loaded data. `progress` receives one line
/// per finished epoch.
pub fn run_on(spec: &RunSpec, data: &DomainData, mut progress: impl FnMut(&str)) -> Result<(RunSummary, Trainer)> {
    spec.validate()?;
    let cfg = &spec.cfg;
    let mut trainer = Trainer::new(cfg.clone(), data.source_train.dim(), data.source_train.classes())?;
    let start = Instant::now();
    let mut last = Instant::now();
    let metrics: Metrics = trainer.run(data, |m: &mut EpochMetrics| {
        m.seconds = last.elapsed().as_secs_f64();
        last = Instant::now();
        progress(&format!(
            "[{}] epoch {} src_acc={:.4} tgt_acc={:.4} L_s={:.4} L_adv={:.4} L_sgw={:.4} L_d={:.4} ({:.1}s)",
            describe(cfg),
            m.epoch,
            m.src_acc,
            m.tgt_acc,
            m.loss_source,
            m.loss_adv,
            m.loss_sgw,
            m.loss_disc,
            m.seconds
        ));
    })?;
    let history = metrics
        .epochs
        .iter()
        .map(|m| EpochRecord {
            epoch: m.epoch,
            src_acc: m.src_acc,
            tgt_acc: m.tgt_acc,
            loss_source: m.loss_source,
            loss_adv: m.loss_adv,
            loss_sgw: m.loss_sgw,
            loss_disc: m.loss_disc,
            seconds: Some(m.seconds),
        })
        .collect();
    let summary = RunSummary {
        dataset: spec.dataset.name().into(),
        arm: cfg.arm.name().into(),
        seed: cfg.seed,
        data_seed: spec.effective_data_seed(),
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        optimizer: optimizer_name(cfg.optimizer),
        lambda_adv: cfg.effective_lambda_adv(),
        lambda_sgw: cfg.effective_lambda_sgw(),
        projections: cfg.projections,
        resample_projections: cfg.resample_projections,
        train_rows: data.source_train.len(),
        test_rows: data.source_test.len(),
        steps: trainer.steps_taken(),
        final_src_acc: metrics.final_src_acc,
        final_tgt_acc: metrics.final_tgt_acc,
        history,
        seconds: Some(start.elapsed().as_secs_f64()),
    };
    Ok((summary, trainer))
}

/// Loads the data and trains one arm.
pub fn run_experiment(spec: &RunSpec, progress: impl FnMut(&str)) -> Result<(RunSummary, Trainer)> {
    spec.validate()?;
    let data = load_data(spec)?;
    run_on(spec, &data, progress)
}

/// Writes `summary.json` and `epochs.csv` into `dir`.
pub fn write_metrics(dir: &Path, summary: &RunSummary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Invalid(e.to_string()))?;
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.join("epochs.csv");
    let mut out = Vec::new();
    writeln!(out, "epoch,src_acc,tgt_acc,L_s,L_adv,L_SGW,L_D,seconds").expect("writing to a Vec");
    for e in &summary.history {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            e.epoch,
            e.src_acc,
            e.tgt_acc,
            e.loss_source,
            e.loss_adv,
            e.loss_sgw,
            e.loss_disc,
            e.seconds.unwrap_or(0.0)
        )
        .expect("writing to a Vec");
    }
    fs::write(&csv_path, out).map_err(|e| Error::io(&csv_path, e))
}
