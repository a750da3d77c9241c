//! Pathwise error metrics on the extreme eigenvalues.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::sample::SpotMatrixSeries;
use crate::sim::GroundTruth;

/// Values below this are reported as `ε` in tables.
pub const EPSILON_DISPLAY: f64 = 1e-10;

/// Estimated minimum eigenvalues below `-NEGATIVE_EIGEN_THRESHOLD` count as
/// negative.
pub const NEGATIVE_EIGEN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extreme {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: String,
    /// Mean squared error of the largest eigenvalue.
    pub mse: f64,
    /// Mean squared error of the smallest eigenvalue.
    pub mse_min: f64,
    pub trim_fraction: f64,
    pub evaluated_count: usize,
    /// Evaluated times whose estimated smallest eigenvalue is below
    /// `-NEGATIVE_EIGEN_THRESHOLD`.
    pub negative_count: usize,
    /// Mean of `Σ_i |λ̂_i - λ_i|` over evaluated times.
    pub mean_spectrum_l1: f64,
    /// Largest `Σ_i |λ̂_i - λ_i|` over evaluated times.
    pub sup_spectrum_l1: f64,
}

/// Grid indices kept after dropping `floor(N₀ · fraction / 2)` points at
/// each end.
///
/// With `fraction == 0` this is `1..=N₀`. Otherwise both endpoints are
/// always dropped, since no estimator is defined there.
pub fn trim_indices(n0: usize, fraction: f64) -> Result<RangeInclusive<usize>> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(contract(format!("trim fraction {fraction} must lie in [0, 0.5)")));
    }
    if n0 == 0 {
        return Err(contract("grid size must be positive"));
    }
    if fraction == 0.0 {
        return Ok(1..=n0);
    }
    let drop = ((n0 as f64 * fraction / 2.0).floor() as usize).max(1);
    Ok(drop..=n0.saturating_sub(drop))
}

/// Grid indices of `est` retained by the trim, paired with positions in
/// `est`. Estimated times must all lie on the truth grid.
fn retained(
    est: &SpotMatrixSeries,
    truth: &GroundTruth,
    trim: f64,
) -> Result<Vec<(usize, usize)>> {
    let n0 = truth.times.len() - 1;
    let keep = trim_indices(n0, trim)?;
    let mut out = Vec::with_capacity(est.len());
    for (pos, &t) in est.times().iter().enumerate() {
        let k = truth
            .index_of(t)
            .map_err(|_| contract(format!("estimate time {t} is not on the truth grid")))?;
        if keep.contains(&k) {
            out.push((pos, k));
        }
    }
    Ok(out)
}

/// Mean over retained times of `|λ̂(t_k) - λ(t_k)|²` for the largest or
/// smallest eigenvalue. Returns `(value, count)`; `value` is 0 when no
/// time is retained.
pub fn eigen_mse(
    est: &SpotMatrixSeries,
    truth: &GroundTruth,
    which: Extreme,
    trim: f64,
) -> Result<(f64, usize)> {
    let idx = retained(est, truth, trim)?;
    let pick = |s: &crate::eig::Spectrum| match which {
        Extreme::Max => s.max(),
        Extreme::Min => s.min(),
    };
    let sum: f64 = idx
        .iter()
        .map(|&(pos, k)| {
            let e = pick(&est.spectra()[pos]) - pick(truth.spectrum_at_index(k));
            e * e
        })
        .sum();
    let count = idx.len();
    Ok((if count == 0 { 0.0 } else { sum / count as f64 }, count))
}

/// Both extreme-eigenvalue errors plus diagnostics.
pub fn error_report(
    method: &str,
    est: &SpotMatrixSeries,
    truth: &GroundTruth,
    trim: f64,
) -> Result<ErrorReport> {
    let (mse, count) = eigen_mse(est, truth, Extreme::Max, trim)?;
    let (mse_min, _) = eigen_mse(est, truth, Extreme::Min, trim)?;
    let idx = retained(est, truth, trim)?;
    let mut negative_count = 0;
    let mut sup_l1 = 0.0_f64;
    let mut sum_l1 = 0.0;
    for &(pos, k) in &idx {
        let s = &est.spectra()[pos];
        if s.min() < -NEGATIVE_EIGEN_THRESHOLD {
            negative_count += 1;
        }
        let l1 = crate::eig::spectrum_l1_distance(s, truth.spectrum_at_index(k))?;
        sup_l1 = sup_l1.max(l1);
        sum_l1 += l1;
    }
    Ok(ErrorReport {
        method: method.to_string(),
        mse,
        mse_min,
        trim_fraction: trim,
        evaluated_count: count,
        negative_count,
        mean_spectrum_l1: if count == 0 { 0.0 } else { sum_l1 / count as f64 },
        sup_spectrum_l1: sup_l1,
    })
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

pub fn mean_stderr(values: &[f64]) -> MeanStderr {
    let n = values.len();
    if n == 0 {
        return MeanStderr {
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanStderr { mean, stderr }
}

/// Table rendering: `ε` for values below [`EPSILON_DISPLAY`], otherwise the
/// value in units of `10⁻⁴`.
pub fn format_scaled(value: f64) -> String {
    if value.abs() < EPSILON_DISPLAY {
        "ε".to_string()
    } else {
        let scaled = value * 1e4;
        if scaled.abs() >= 10.0 {
            format!("{scaled:.0}")
        } else {
            format!("{scaled:.3}")
        }
    }
}
