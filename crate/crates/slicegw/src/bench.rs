//! Wall-clock scaling of [`sgw`] in the number of points and projections.

use std::fmt::Write as _;
use std::time::Instant;

use slicegw_core::geometry::{gaussian_cloud, sample_projections};
use slicegw_core::ot::sgw;
use slicegw_core::rng::derive_seed;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub l_list: Vec<usize>,
    pub repeats: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { n_list: vec![4096, 8192, 16384, 32768], l_list: vec![200], repeats: 5, dim: 2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub l: usize,
    pub median_seconds: f64,
    /// Against the previous `n` in the list at the same `L`.
    pub ratio_to_previous_n: Option<f64>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Times one `sgw` call per repeat for every `(L, n)` pair, after one
/// untimed warm-up call per pair. Repeats are interleaved round-robin over
/// the pairs so that slow drift in machine speed affects all pairs alike.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.repeats == 0 {
        return Err(Error::Invalid("repeats must be at least 1".into()));
    }
    if cfg.n_list.is_empty() || cfg.l_list.is_empty() {
        return Err(Error::Invalid("n-list and L-list must not be empty".into()));
    }
    if let Some(&n) = cfg.n_list.iter().find(|&&n| n < 2) {
        return Err(Error::Invalid(format!("every n must be at least 2, got {n}")));
    }
    if cfg.dim == 0 {
        return Err(Error::Invalid("dim must be at least 1".into()));
    }
    let mut cases = Vec::new();
    for &l in &cfg.l_list {
        let projections = sample_projections(l, cfg.dim, derive_seed(cfg.seed, l as u64))?;
        for &n in &cfg.n_list {
            let a = gaussian_cloud(n, cfg.dim, 1.0, derive_seed(cfg.seed, 2 * n as u64))?;
            let b = gaussian_cloud(n, cfg.dim, 1.0, derive_seed(cfg.seed, 2 * n as u64 + 1))?;
            std::hint::black_box(sgw(&a, &b, &projections)?);
            cases.push((n, l, a, b, projections.clone(), Vec::with_capacity(cfg.repeats)));
        }
    }
    for _ in 0..cfg.repeats {
        for (_, _, a, b, projections, times) in &mut cases {
            let start = Instant::now();
            std::hint::black_box(sgw(std::hint::black_box(a), b, projections)?);
            times.push(start.elapsed().as_secs_f64());
        }
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(cases.len());
    for (n, l, _, _, _, mut times) in cases {
        let median_seconds = median(&mut times);
        let previous = rows.last().filter(|r| r.l == l).map(|r| r.median_seconds);
        rows.push(BenchRow { n, l, median_seconds, ratio_to_previous_n: previous.map(|p| median_seconds / p) });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,L,median_seconds,ratio_to_previous_n\n");
    for r in rows {
        let ratio = r.ratio_to_previous_n.map(|v| format!("{v:.4}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{:.9},{ratio}", r.n, r.l, r.median_seconds);
    }
    out
}
