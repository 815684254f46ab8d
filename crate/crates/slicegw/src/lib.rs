//! File formats, the experiment runner and the pieces of the `slicegw`
//! command-line tool, on top of [`slicegw_core`].
//!
//! - [`cloud`]: point clouds and labeled datasets as headerless CSV.
//! - [`idx`]: the MNIST IDX container.
//! - [`checkpoint`]: model parameters as JSON.
//! - [`config`]: run configuration and `key = value` config files.
//! - [`experiment`]: dataset loading, single runs and the metrics files.
//! - [`ablate`], [`bench`], [`checks`]: the multi-run commands.

pub mod ablate;
pub mod bench;
pub mod checkpoint;
pub mod checks;
pub mod cloud;
pub mod config;
mod error;
pub mod experiment;
pub mod idx;

pub use error::{Error, Result};

/// `v` with 12 significant digits; zero prints as `0.000000000000`.
pub fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = if v == 0.0 { -1 } else { v.abs().log10().floor() as i32 };
    if (-5..15).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, v)
    } else {
        format!("{v:.11e}")
    }
}
