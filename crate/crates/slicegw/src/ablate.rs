//! All four training arms over several seeds, aggregated per arm.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use slicegw_core::adapt::{Arm, DomainData};

use crate::config::{DatasetKind, RunSpec};
use crate::error::{Error, Result};
use crate::experiment::{load_data, run_on, RunSummary};

/// Target accuracies (%) reported for the full-scale MNIST to MNIST-M
/// setting, in [`Arm::ALL`] order.
pub const PAPER_REFERENCE: [f64; 4] = [58.49, 64.77, 65.72, 68.56];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub final_src_acc: f64,
    pub final_tgt_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    pub lambda_adv: f64,
    pub lambda_sgw: f64,
    pub tgt_acc_mean: f64,
    pub tgt_acc_std: f64,
    pub src_acc_mean: f64,
    pub src_acc_std: f64,
    pub runs: Vec<SeedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub dataset: String,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub projections: usize,
    pub arms: Vec<ArmSummary>,
}

impl AblationReport {
    pub fn arm(&self, arm: Arm) -> &ArmSummary {
        self.arms.iter().find(|a| a.arm == arm.name()).expect("every arm is present")
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every arm for seeds `base.seed, base.seed + 1, ...` using up to
/// `jobs` worker threads. Results are ordered by (arm, seed) whatever the
/// scheduling.
pub fn ablate(base: &RunSpec, seeds: usize, jobs: usize, progress: &(dyn Fn(&str) + Sync)) -> Result<AblationReport> {
    if seeds == 0 {
        return Err(Error::Invalid("--seeds must be at least 1".into()));
    }
    base.validate()?;
    let seed_list: Vec<u64> = (0..seeds as u64).map(|k| base.cfg.seed.wrapping_add(k)).collect();
    let specs: Vec<RunSpec> = seed_list
        .iter()
        .map(|&seed| {
            let mut s = base.clone();
            s.cfg.seed = seed;
            s
        })
        .collect();

    // Synthetic data follows the seed; MNIST is the same for every seed.
    let datasets: Vec<DomainData> = match base.dataset {
        DatasetKind::MnistInvert => vec![load_data(base)?],
        DatasetKind::Gaussians => specs.iter().map(load_data).collect::<Result<_>>()?,
    };
    let data_for = |k: usize| if datasets.len() == 1 { &datasets[0] } else { &datasets[k] };

    let tasks: Vec<(Arm, usize)> = Arm::ALL.iter().flat_map(|&a| (0..seeds).map(move |k| (a, k))).collect();
    let results: Mutex<Vec<Option<Result<RunSummary>>>> = Mutex::new(tasks.iter().map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(arm, k)) = tasks.get(i) else { break };
        let mut spec = specs[k].clone();
        spec.cfg.arm = arm;
        let r = run_on(&spec, data_for(k), progress).map(|(s, _)| s);
        results.lock().expect("worker panicked")[i] = Some(r);
    };
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, tasks.len()) {
            scope.spawn(worker);
        }
    });

    let results = results.into_inner().expect("worker panicked");
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r.expect("every task ran")?);
    }
    let arms = Arm::ALL
        .iter()
        .enumerate()
        .map(|(a, &arm)| {
            let mine = &runs[a * seeds..(a + 1) * seeds];
            let tgt: Vec<f64> = mine.iter().map(|r| r.final_tgt_acc).collect();
            let src: Vec<f64> = mine.iter().map(|r| r.final_src_acc).collect();
            let (tgt_acc_mean, tgt_acc_std) = mean_std(&tgt);
            let (src_acc_mean, src_acc_std) = mean_std(&src);
            ArmSummary {
                arm: arm.name().into(),
                lambda_adv: mine[0].lambda_adv,
                lambda_sgw: mine[0].lambda_sgw,
                tgt_acc_mean,
                tgt_acc_std,
                src_acc_mean,
                src_acc_std,
                runs: mine
                    .iter()
                    .map(|r| SeedResult { seed: r.seed, final_src_acc: r.final_src_acc, final_tgt_acc: r.final_tgt_acc })
                    .collect(),
            }
        })
        .collect();
    Ok(AblationReport {
        dataset: base.dataset.name().into(),
        seeds: seed_list,
        epochs: base.cfg.epochs,
        batch_size: base.cfg.batch_size,
        lr: base.cfg.lr,
        projections: base.cfg.projections,
        arms,
    })
}

/// Markdown table with one row per arm, target accuracy in percent, and
/// the full-scale reference column.
pub fn markdown_table(report: &AblationReport) -> String {
    let mut out = String::new();
    let k = report.seeds.len();
    let _ = writeln!(out, "Target accuracy on {} ({k} seed{}), mean ± std in %", report.dataset, if k == 1 { "" } else { "s" });
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "| L_s | L_adv | L_SGW | target acc | source acc | reference (MNIST→MNIST-M, full-scale, not reproduced here) |"
    );
    let _ = writeln!(out, "|:---:|:---:|:---:|---:|---:|---:|");
    for (arm, reference) in report.arms.iter().zip(PAPER_REFERENCE) {
        let mark = |w: f64| if w > 0.0 { "✓" } else { "" };
        let _ = writeln!(
            out,
            "| ✓ | {} | {} | {:.2} ± {:.2} | {:.2} ± {:.2} | {reference:.2} |",
            mark(arm.lambda_adv),
            mark(arm.lambda_sgw),
            100.0 * arm.tgt_acc_mean,
            100.0 * arm.tgt_acc_std,
            100.0 * arm.src_acc_mean,
            100.0 * arm.src_acc_std,
        );
    }
    out
}
