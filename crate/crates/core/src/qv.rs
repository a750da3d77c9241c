//! Windowed quadratic-variation estimator and its jump-robust bipower
//! counterpart.
//!
//! Both estimators average products of increments over a window of
//! half-width `h` around `t`, normalised by `2h`. Repeated evaluation goes
//! through [`QvEstimator`] / [`BipowerEstimator`], which precompute prefix
//! sums per component pair so that each evaluation costs `O(d²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eig::SymMatrix;
use crate::error::{contract, Error, Result};
use crate::kernel::pair_index;
use crate::sample::{PathSample, SpotMatrixSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QvConfig {
    /// Window half-width `h`, in the time units of the path.
    pub bandwidth: f64,
    /// Hölder exponent of the volatility, used only to pick default bandwidths.
    pub holder_alpha: f64,
}

impl QvConfig {
    /// Bandwidth `T · n^{-1/(2α+1)}`.
    pub fn for_grid(n: usize, horizon: f64, holder_alpha: f64) -> Self {
        Self {
            bandwidth: default_bandwidth(n, horizon, holder_alpha),
            holder_alpha,
        }
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth < horizon / 2.0) {
            return Err(contract(format!(
                "bandwidth {} must lie in (0, T/2) with T = {horizon}",
                self.bandwidth
            )));
        }
        if !(self.holder_alpha > 0.0 && self.holder_alpha <= 1.0) {
            return Err(contract(format!(
                "Hölder exponent {} must lie in (0, 1]",
                self.holder_alpha
            )));
        }
        Ok(())
    }
}

/// Blumenthal–Getoor index of the jump part together with the rate
/// exponent used to set the bandwidth `h = T · n^{-2γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpModelInfo {
    pub bg_index: f64,
    pub rate_exponent: f64,
}

impl JumpModelInfo {
    /// Picks `γ = 0.9 · min(α/(2α+1), (2-β)/(2β))`.
    pub fn with_default_rate(bg_index: f64, holder_alpha: f64) -> Result<Self> {
        let rate_exponent = 0.9 * max_rate_exponent(bg_index, holder_alpha)?;
        Ok(Self {
            bg_index,
            rate_exponent,
        })
    }

    pub fn validate(&self, holder_alpha: f64) -> Result<()> {
        let cap = max_rate_exponent(self.bg_index, holder_alpha)?;
        if !(self.rate_exponent > 0.0 && self.rate_exponent < cap) {
            return Err(contract(format!(
                "rate exponent {} must lie in (0, {cap})",
                self.rate_exponent
            )));
        }
        Ok(())
    }

    pub fn bandwidth(&self, n: usize, horizon: f64) -> f64 {
        horizon * (n as f64).powf(-2.0 * self.rate_exponent)
    }
}

/// `min(α/(2α+1), (2-β)/(2β))`, with the second term infinite at `β = 0`.
pub fn max_rate_exponent(bg_index: f64, holder_alpha: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&bg_index) {
        return Err(contract(format!(
            "Blumenthal–Getoor index {bg_index} must lie in [0, 2)"
        )));
    }
    let diffusion = holder_alpha / (2.0 * holder_alpha + 1.0);
    if bg_index == 0.0 {
        return Ok(diffusion);
    }
    Ok(diffusion.min((2.0 - bg_index) / (2.0 * bg_index)))
}

/// `T · n^{-1/(2α+1)}`.
pub fn default_bandwidth(n: usize, horizon: f64, holder_alpha: f64) -> f64 {
    horizon * (n as f64).powf(-1.0 / (2.0 * holder_alpha + 1.0))
}

fn check_time(path: &PathSample, h: f64, t: f64) -> Result<()> {
    let horizon = path.horizon();
    if !(t > h && t < horizon - h) {
        return Err(Error::OutOfWindow {
            t,
            lo: h,
            hi: horizon - h,
        });
    }
    Ok(())
}

/// Index range `lo..hi` of increments `i` with `t-h ≤ t_i` and `t_{i+1} ≤ t+h`.
fn qv_window(times: &[f64], t: f64, h: f64) -> (usize, usize) {
    let lo = times.partition_point(|&s| s < t - h);
    // Number of grid points with t_j ≤ t+h; the last admissible i+1 is that - 1.
    let upto = times.partition_point(|&s| s <= t + h);
    (lo, upto.saturating_sub(1).max(lo))
}

/// Index range `lo..hi` of `i` with `t-h ≤ t_{i-1}` and `t_{i+1} ≤ t+h`.
fn bipower_window(times: &[f64], t: f64, h: f64) -> (usize, usize) {
    let first = times.partition_point(|&s| s < t - h);
    let upto = times.partition_point(|&s| s <= t + h);
    let lo = first + 1;
    (lo, upto.saturating_sub(1).max(lo))
}

/// `Σ̃(t) = (1/2h) Σ_i ΔX(t_i) ΔX(t_i)ᵀ` over increments inside `[t-h, t+h]`.
pub fn qv_estimate(path: &PathSample, cfg: &QvConfig, t: f64) -> Result<SymMatrix> {
    cfg.validate(path.horizon())?;
    check_time(path, cfg.bandwidth, t)?;
    let (lo, hi) = qv_window(path.times(), t, cfg.bandwidth);
    if hi <= lo {
        return Err(Error::DegenerateWindow { t });
    }
    let d = path.dim();
    let scale = 1.0 / (2.0 * cfg.bandwidth);
    Ok(SymMatrix::from_upper_fn(d, |u, v| {
        let (xu, xv) = (path.column(u), path.column(v));
        let mut acc = 0.0;
        for i in lo..hi {
            acc += (xu[i + 1] - xu[i]) * (xv[i + 1] - xv[i]);
        }
        scale * acc
    }))
}

#[inline]
fn bipower_term(xu: &[f64], xv: &[f64], i: usize) -> f64 {
    let du0 = xu[i] - xu[i - 1];
    let du1 = xu[i + 1] - xu[i];
    let dv0 = xv[i] - xv[i - 1];
    let dv1 = xv[i + 1] - xv[i];
    ((du0 + dv0) * (du1 + dv1)).abs() - (du0 * du1).abs() - (dv0 * dv1).abs()
}

/// `Σ̄(t) = (π/8h) Σ_i (|Δ_i(X_u+X_v) Δ_{i+1}(X_u+X_v)| - |Δ_i X_u Δ_{i+1} X_u| - |Δ_i X_v Δ_{i+1} X_v|)`.
pub fn bipower_estimate(path: &PathSample, cfg: &QvConfig, t: f64) -> Result<SymMatrix> {
    cfg.validate(path.horizon())?;
    check_time(path, cfg.bandwidth, t)?;
    let (lo, hi) = bipower_window(path.times(), t, cfg.bandwidth);
    if hi <= lo {
        return Err(Error::DegenerateWindow { t });
    }
    let d = path.dim();
    let scale = PI / (8.0 * cfg.bandwidth);
    Ok(SymMatrix::from_upper_fn(d, |u, v| {
        let (xu, xv) = (path.column(u), path.column(v));
        let acc: f64 = (lo..hi).map(|i| bipower_term(xu, xv, i)).sum();
        scale * acc
    }))
}

/// Error-free sum: `a + b == s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Double-double prefix sums of per-index terms for every pair `u <= v`.
/// Window sums are differences of two prefixes; the low-order parts keep
/// that difference accurate relative to the window, not the whole path.
#[derive(Debug, Clone)]
struct PairPrefix {
    dim: usize,
    /// `hi[p][i] + lo[p][i]` is the sum of the first `i` terms for pair `p`.
    hi: Vec<Vec<f64>>,
    lo: Vec<Vec<f64>>,
}

impl PairPrefix {
    fn build(dim: usize, len: usize, term: impl Fn(usize, usize, usize) -> f64) -> Self {
        let pairs = dim * (dim + 1) / 2;
        let mut hi = Vec::with_capacity(pairs);
        let mut lo = Vec::with_capacity(pairs);
        for u in 0..dim {
            for v in u..dim {
                let (mut s, mut c) = (0.0, 0.0);
                let mut row_hi = Vec::with_capacity(len + 1);
                let mut row_lo = Vec::with_capacity(len + 1);
                row_hi.push(0.0);
                row_lo.push(0.0);
                for i in 0..len {
                    let (s1, e) = two_sum(s, term(u, v, i));
                    let (s2, c2) = two_sum(s1, c + e);
                    s = s2;
                    c = c2;
                    row_hi.push(s);
                    row_lo.push(c);
                }
                hi.push(row_hi);
                lo.push(row_lo);
            }
        }
        Self { dim, hi, lo }
    }

    /// Matrix of `scale * Σ_{i in a..b} term(u, v, i)`.
    fn window(&self, a: usize, b: usize, scale: f64) -> SymMatrix {
        SymMatrix::from_upper_fn(self.dim, |u, v| {
            let p = pair_index(self.dim, u, v);
            let (hi, lo) = (&self.hi[p], &self.lo[p]);
            let (s, e) = two_sum(hi[b], -hi[a]);
            scale * (s + (e + (lo[b] - lo[a])))
        })
    }
}

/// Quadratic-variation estimator with precomputed prefix sums, for
/// evaluating Σ̃ at many times on one path.
#[derive(Debug, Clone)]
pub struct QvEstimator<'a> {
    path: &'a PathSample,
    cfg: QvConfig,
    prefix: PairPrefix,
}

impl<'a> QvEstimator<'a> {
    pub fn new(path: &'a PathSample, cfg: QvConfig) -> Result<Self> {
        cfg.validate(path.horizon())?;
        let prefix = PairPrefix::build(path.dim(), path.n(), |u, v, i| {
            let (xu, xv) = (path.column(u), path.column(v));
            (xu[i + 1] - xu[i]) * (xv[i + 1] - xv[i])
        });
        Ok(Self { path, cfg, prefix })
    }

    pub fn estimate(&self, t: f64) -> Result<SymMatrix> {
        let h = self.cfg.bandwidth;
        check_time(self.path, h, t)?;
        let (lo, hi) = qv_window(self.path.times(), t, h);
        if hi <= lo {
            return Err(Error::DegenerateWindow { t });
        }
        Ok(self.prefix.window(lo, hi, 1.0 / (2.0 * h)))
    }

    pub fn series(&self, times: &[f64]) -> Result<SpotMatrixSeries> {
        let mut out = SpotMatrixSeries::new();
        for &t in times {
            out.push(t, self.estimate(t)?)?;
        }
        Ok(out)
    }

    /// Observation times strictly inside `(h, T-h)`.
    pub fn valid_times(&self) -> Vec<f64> {
        interior_times(self.path, self.cfg.bandwidth)
    }
}

/// Bipower estimator with precomputed prefix sums.
#[derive(Debug, Clone)]
pub struct BipowerEstimator<'a> {
    path: &'a PathSample,
    cfg: QvConfig,
    prefix: PairPrefix,
}

impl<'a> BipowerEstimator<'a> {
    pub fn new(path: &'a PathSample, cfg: QvConfig) -> Result<Self> {
        cfg.validate(path.horizon())?;
        // Term index i runs over 1..n; slot i-1 of the prefix holds it.
        let len = path.n().saturating_sub(1);
        let prefix = PairPrefix::build(path.dim(), len, |u, v, k| {
            bipower_term(path.column(u), path.column(v), k + 1)
        });
        Ok(Self { path, cfg, prefix })
    }

    pub fn estimate(&self, t: f64) -> Result<SymMatrix> {
        let h = self.cfg.bandwidth;
        check_time(self.path, h, t)?;
        let (lo, hi) = bipower_window(self.path.times(), t, h);
        if hi <= lo {
            return Err(Error::DegenerateWindow { t });
        }
        Ok(self.prefix.window(lo - 1, hi - 1, PI / (8.0 * h)))
    }

    pub fn series(&self, times: &[f64]) -> Result<SpotMatrixSeries> {
        let mut out = SpotMatrixSeries::new();
        for &t in times {
            out.push(t, self.estimate(t)?)?;
        }
        Ok(out)
    }

    pub fn valid_times(&self) -> Vec<f64> {
        interior_times(self.path, self.cfg.bandwidth)
    }
}

fn interior_times(path: &PathSample, h: f64) -> Vec<f64> {
    let horizon = path.horizon();
    path.times()
        .iter()
        .copied()
        .filter(|&t| t > h && t < horizon - h)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::uniform_grid;

    fn path2(n: usize, f: impl Fn(usize) -> (f64, f64)) -> PathSample {
        let (a, b) = (0..=n).map(f).unzip();
        PathSample::on_uniform_grid(1.0, vec![a, b]).unwrap()
    }

    #[test]
    fn bandwidth_examples() {
        let h = default_bandwidth(10_000, std::f64::consts::TAU, 0.5);
        assert!((h - std::f64::consts::TAU * 1e-2).abs() < 1e-15);
        assert!((default_bandwidth(1_000_000, 3.0, 1.0) - 3.0e-2).abs() < 1e-14);
        assert!((default_bandwidth(100, 2.0, 0.5) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn jump_rate_caps() {
        assert!((max_rate_exponent(0.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((max_rate_exponent(1.5, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(max_rate_exponent(2.0, 1.0).is_err());
        let info = JumpModelInfo::with_default_rate(0.0, 0.5).unwrap();
        assert!((info.rate_exponent - 0.225).abs() < 1e-15);
        assert!(info.validate(0.5).is_ok());
        let bad = JumpModelInfo {
            rate_exponent: 0.3,
            ..info
        };
        assert!(bad.validate(0.5).is_err());
    }

    #[test]
    fn pure_drift_closed_form() {
        let n = 1000;
        let c = 0.7;
        let p = path2(n, |i| (c * i as f64 / n as f64, 0.0));
        let cfg = QvConfig {
            bandwidth: 0.05,
            holder_alpha: 0.5,
        };
        let m = qv_estimate(&p, &cfg, 0.5).unwrap();
        let (lo, hi) = qv_window(p.times(), 0.5, 0.05);
        let count = (hi - lo) as f64;
        let expect = count * (c / n as f64).powi(2) / 0.1;
        assert!((m.get(0, 0) - expect).abs() < 1e-15);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn single_increment_window_is_rank_one() {
        let p = path2(10, |i| ((i as f64).sin(), (i as f64 * 0.3).cos()));
        let h = 0.06;
        let t = 0.55;
        let cfg = QvConfig {
            bandwidth: h,
            holder_alpha: 0.5,
        };
        // [0.49, 0.61] contains t_5 = 0.5 and t_6 = 0.6 only.
        let m = qv_estimate(&p, &cfg, t).unwrap();
        let du = p.column(0)[6] - p.column(0)[5];
        let dv = p.column(1)[6] - p.column(1)[5];
        let s = m.spectrum().unwrap();
        let norm2 = du * du + dv * dv;
        assert!((s.max() - norm2 / (2.0 * h)).abs() < 1e-14);
        assert!(s.min().abs() < 1e-14);
    }

    #[test]
    fn bipower_diagonal_is_scalar_bipower() {
        let p = path2(200, |i| ((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
        let cfg = QvConfig {
            bandwidth: 0.1,
            holder_alpha: 0.5,
        };
        let t = 0.4;
        let m = bipower_estimate(&p, &cfg, t).unwrap();
        let (lo, hi) = bipower_window(p.times(), t, 0.1);
        let x = p.column(0);
        let direct: f64 = (lo..hi)
            .map(|i| (x[i] - x[i - 1]).abs() * (x[i + 1] - x[i]).abs())
            .sum::<f64>()
            * PI
            / (4.0 * 0.1);
        assert!((m.get(0, 0) - direct).abs() < 1e-13 * direct.abs());
    }

    #[test]
    fn window_errors() {
        let p = path2(10, |i| (i as f64, 0.0));
        let cfg = QvConfig {
            bandwidth: 0.2,
            holder_alpha: 0.5,
        };
        assert!(matches!(
            qv_estimate(&p, &cfg, 0.1),
            Err(Error::OutOfWindow { .. })
        ));
        let narrow = QvConfig {
            bandwidth: 0.02,
            holder_alpha: 0.5,
        };
        assert!(matches!(
            qv_estimate(&p, &narrow, 0.55),
            Err(Error::DegenerateWindow { .. })
        ));
        assert!(matches!(
            bipower_estimate(&p, &QvConfig { bandwidth: 0.06, holder_alpha: 0.5 }, 0.55),
            Err(Error::DegenerateWindow { .. })
        ));
    }

    #[test]
    fn prefix_window_survives_large_history() {
        // Early increments of size 1e4, later ones of size 1e-4: an
        // uncompensated prefix difference would lose every digit.
        let n = 400;
        let mut x = vec![0.0];
        for i in 0..n {
            let step = if i < 20 { 1e4 } else { 1e-4 * (1.0 + (i as f64).sin()) };
            x.push(x[i] + step);
        }
        let p = PathSample::on_uniform_grid(1.0, vec![x]).unwrap();
        let cfg = QvConfig {
            bandwidth: 0.05,
            holder_alpha: 0.5,
        };
        let qv = QvEstimator::new(&p, cfg).unwrap();
        for t in [0.5, 0.7, 0.9] {
            let fast = qv.estimate(t).unwrap().get(0, 0);
            let slow = qv_estimate(&p, &cfg, t).unwrap().get(0, 0);
            assert!((fast - slow).abs() <= 1e-12 * slow, "{fast} vs {slow}");
        }
    }

    #[test]
    fn prefix_matches_direct() {
        let times = uniform_grid(2.0, 300);
        let a: Vec<f64> = times.iter().map(|t| (7.0 * t).sin() + t).collect();
        let b: Vec<f64> = times.iter().map(|t| (3.0 * t).cos() * t).collect();
        let c: Vec<f64> = times.iter().map(|t| (11.0 * t).sin() * 0.1).collect();
        let p = PathSample::on_uniform_grid(2.0, vec![a, b, c]).unwrap();
        let cfg = QvConfig::for_grid(p.n(), 2.0, 0.5);
        let qv = QvEstimator::new(&p, cfg).unwrap();
        let bp = BipowerEstimator::new(&p, cfg).unwrap();
        for t in qv.valid_times() {
            let fast = qv.estimate(t).unwrap();
            let slow = qv_estimate(&p, &cfg, t).unwrap();
            assert!(fast.entrywise_l1_distance(&slow).unwrap() < 1e-12);
            let fast = bp.estimate(t).unwrap();
            let slow = bipower_estimate(&p, &cfg, t).unwrap();
            assert!(fast.entrywise_l1_distance(&slow).unwrap() < 1e-12);
        }
    }
}
