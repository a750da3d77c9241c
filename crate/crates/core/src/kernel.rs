//! Shared machinery for the Fourier-series estimators: reconstruction
//! kernels, trigonometric coefficient sets and fitted coefficient tables.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::eig::SymMatrix;
use crate::error::{contract, Error, Result};
use crate::sample::SpotMatrixSeries;

/// Weighting applied to the partial Fourier sum of Σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `w(k) = 1 - k/N`.
    Fejer,
    /// `w(k) = sin²(δk) / (δk)²`, with `w(0) = 1`.
    SmoothedFejer { delta: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Fejer => Ok(()),
            Kernel::SmoothedFejer { delta } if delta > 0.0 && delta.is_finite() => Ok(()),
            Kernel::SmoothedFejer { delta } => {
                Err(contract(format!("smoothing delta must be positive, got {delta}")))
            }
        }
    }

    pub fn weight(&self, k: usize, cutoff: usize) -> f64 {
        match *self {
            Kernel::Fejer => 1.0 - k as f64 / cutoff as f64,
            Kernel::SmoothedFejer { delta } => {
                if k == 0 {
                    return 1.0;
                }
                let x = delta * k as f64;
                let s = x.sin() / x;
                s * s
            }
        }
    }

    /// Weights for `k = 0..=cutoff`.
    pub fn weights(&self, cutoff: usize) -> Vec<f64> {
        (0..=cutoff).map(|k| self.weight(k, cutoff)).collect()
    }
}

/// The smoothing parameter of the i-th rung of the kernel ladder,
/// `δ_i = T · N₀^{-0.1 (i + 2)}`.
pub fn delta_ladder(horizon: f64, n0: usize, rung: u32) -> f64 {
    horizon * (n0 as f64).powf(-0.1 * (rung as f64 + 2.0))
}

/// Cosine/sine coefficients `a_k, b_k`, `k = 0..=N`, of one entry of Σ,
/// on the `[0, 2π]` time scale. `b[0]` is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaCoeffs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SigmaCoeffs {
    pub fn zeros(cutoff: usize) -> Self {
        Self {
            a: vec![0.0; cutoff + 1],
            b: vec![0.0; cutoff + 1],
        }
    }

    pub fn cutoff(&self) -> usize {
        self.a.len() - 1
    }

    /// `Σ_k w(k) (a_k cos(kt) + b_k sin(kt))` at the point described by `basis`.
    pub fn evaluate(&self, weights: &[f64], basis: &TrigBasis) -> f64 {
        (0..self.a.len())
            .map(|k| weights[k] * (self.a[k] * basis.cos[k] + self.b[k] * basis.sin[k]))
            .sum()
    }
}

/// `cos(kt)` and `sin(kt)` for `k = 0..=N` at one angle.
#[derive(Debug, Clone)]
pub struct TrigBasis {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigBasis {
    pub fn at(t: f64, cutoff: usize) -> Self {
        let mut cos = Vec::with_capacity(cutoff + 1);
        let mut sin = Vec::with_capacity(cutoff + 1);
        let (s1, c1) = t.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        for k in 0..=cutoff {
            // Re-anchor periodically so the rotation error stays at rounding level.
            if k % 64 == 0 && k > 0 {
                let (sk, ck) = (k as f64 * t).sin_cos();
                c = ck;
                s = sk;
            }
            cos.push(c);
            sin.push(s);
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
        }
        Self { cos, sin }
    }
}

/// `cos(2πm/n)` and `sin(2πm/n)` for `m = 0..n`, so that `cos(k t_i)` on
/// the grid `t_i = 2πi/n` is a table lookup at `(k·i) mod n`.
#[derive(Debug, Clone)]
pub struct GridTrig {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl GridTrig {
    pub fn new(n: usize) -> Self {
        let (sin, cos) = (0..n)
            .map(|m| (TAU * m as f64 / n as f64).sin_cos())
            .unzip();
        Self { n, cos, sin }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(cos(k t_i), sin(k t_i))`.
    #[inline]
    pub fn at(&self, k: usize, i: usize) -> (f64, f64) {
        let m = ((k % self.n) * (i % self.n)) % self.n;
        (self.cos[m], self.sin[m])
    }

    /// Iterates `(cos(k t_i), sin(k t_i))` for `i = 0..=n`.
    pub fn row(&self, k: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let step = k % self.n;
        let mut m = 0;
        (0..=self.n).map(move |_| {
            let out = (self.cos[m], self.sin[m]);
            m += step;
            if m >= self.n {
                m -= self.n;
            }
            out
        })
    }
}

/// Σ-coefficients for every pair `u <= v`, ready for reconstruction at any
/// time in `(0, T)`.
#[derive(Debug, Clone)]
pub struct FourierFit {
    dim: usize,
    cutoff: usize,
    horizon: f64,
    /// Row-major upper triangle, `(0,0), (0,1), …, (d-1,d-1)`.
    pairs: Vec<SigmaCoeffs>,
}

impl FourierFit {
    pub(crate) fn new(dim: usize, cutoff: usize, horizon: f64, pairs: Vec<SigmaCoeffs>) -> Self {
        debug_assert_eq!(pairs.len(), dim * (dim + 1) / 2);
        Self {
            dim,
            cutoff,
            horizon,
            pairs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn coeffs(&self, u: usize, v: usize) -> &SigmaCoeffs {
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        &self.pairs[pair_index(self.dim, u, v)]
    }

    /// Reconstructed Σ at time `t ∈ (0, T)`, in the units of the original
    /// time axis.
    pub fn reconstruct(&self, kernel: &Kernel, t: f64) -> Result<SymMatrix> {
        kernel.validate()?;
        let weights = kernel.weights(self.cutoff);
        self.reconstruct_with(&weights, t)
    }

    fn reconstruct_with(&self, weights: &[f64], t: f64) -> Result<SymMatrix> {
        if !(t > 0.0 && t < self.horizon) {
            return Err(Error::OutOfWindow {
                t,
                lo: 0.0,
                hi: self.horizon,
            });
        }
        let angle = TAU * t / self.horizon;
        let basis = TrigBasis::at(angle, self.cutoff);
        // Σ on the 2π clock is T/2π times Σ on the original clock.
        let scale = TAU / self.horizon;
        let mut idx = 0;
        let mut m = SymMatrix::zeros(self.dim);
        for u in 0..self.dim {
            for v in u..self.dim {
                m.set(u, v, scale * self.pairs[idx].evaluate(weights, &basis));
                idx += 1;
            }
        }
        Ok(m)
    }

    pub fn series(&self, kernel: &Kernel, times: &[f64]) -> Result<SpotMatrixSeries> {
        kernel.validate()?;
        let weights = kernel.weights(self.cutoff);
        let mut series = SpotMatrixSeries::new();
        for &t in times {
            series.push(t, self.reconstruct_with(&weights, t)?)?;
        }
        Ok(series)
    }
}

impl FourierFit {
    /// Reconstruction at `grid[m]` for each `m` in `indices`, where `grid`
    /// is a uniform grid of `n + 1` points on `[0, T]`. All grid points are
    /// evaluated at once with one inverse FFT per component pair. Agrees
    /// with [`FourierFit::series`] up to rounding.
    pub fn grid_series(&self, kernel: &Kernel, grid: &[f64], indices: &[usize]) -> Result<SpotMatrixSeries> {
        kernel.validate()?;
        let n = grid.len().saturating_sub(1);
        if let Some(&m) = indices.iter().find(|&&m| m == 0 || m >= n) {
            return Err(Error::OutOfWindow {
                t: grid.get(m).copied().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: self.horizon,
            });
        }
        let weights = kernel.weights(self.cutoff);
        let scale = TAU / self.horizon;
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
        let mut entries: Vec<Vec<f64>> = Vec::with_capacity(self.pairs.len());
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for pair in &self.pairs {
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for k in 0..=self.cutoff {
                // Re[(a - ib) e^{ikt}] = a cos(kt) + b sin(kt); frequencies alias mod n on the grid.
                buf[k % n] += weights[k] * Complex::new(pair.a[k], -pair.b[k]);
            }
            fft.process(&mut buf);
            entries.push(indices.iter().map(|&m| scale * buf[m].re).collect());
        }
        let mut series = SpotMatrixSeries::new();
        for (pos, &m) in indices.iter().enumerate() {
            let mut mat = SymMatrix::zeros(self.dim);
            let mut idx = 0;
            for u in 0..self.dim {
                for v in u..self.dim {
                    mat.set(u, v, entries[idx][pos]);
                    idx += 1;
                }
            }
            series.push(grid[m], mat)?;
        }
        Ok(series)
    }
}

pub(crate) fn pair_index(dim: usize, u: usize, v: usize) -> usize {
    debug_assert!(u <= v && v < dim);
    u * dim - u * (u + 1) / 2 + v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_endpoints() {
        assert_eq!(Kernel::Fejer.weight(0, 10), 1.0);
        assert_eq!(Kernel::Fejer.weight(10, 10), 0.0);
    }

    #[test]
    fn smoothed_weight_taylor_bound() {
        // sin²x/x² ≥ 1 - x²/3 for small x.
        for &delta in &[1e-3, 1e-2, 0.05] {
            let k = Kernel::SmoothedFejer { delta };
            assert_eq!(k.weight(0, 5), 1.0);
            for i in 1..200 {
                let x = delta * i as f64;
                if x > 0.1 {
                    break;
                }
                let w = k.weight(i, 1000);
                assert!(w >= 1.0 - x * x / 3.0 - 1e-15);
                assert!(w <= 1.0);
            }
        }
        let tiny = Kernel::SmoothedFejer { delta: 1e-9 };
        assert!((tiny.weight(7, 10) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(Kernel::SmoothedFejer { delta: 0.0 }.validate().is_err());
        assert!(Kernel::SmoothedFejer { delta: -1.0 }.validate().is_err());
    }

    #[test]
    fn trig_basis_matches_direct() {
        let t = 2.345;
        let basis = TrigBasis::at(t, 3000);
        for k in (0..=3000).step_by(7) {
            assert!((basis.cos[k] - (k as f64 * t).cos()).abs() < 1e-12);
            assert!((basis.sin[k] - (k as f64 * t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_coefficient_reconstructs_constant() {
        let mut c = SigmaCoeffs::zeros(8);
        c.a[0] = 0.7;
        let fit = FourierFit::new(1, 8, TAU, vec![c]);
        for &t in &[0.1, 1.0, 3.0, 6.0] {
            let m = fit.reconstruct(&Kernel::Fejer, t).unwrap();
            assert!((m.get(0, 0) - 0.7).abs() < 1e-15);
        }
        assert!(fit.reconstruct(&Kernel::Fejer, 0.0).is_err());
        assert!(fit.reconstruct(&Kernel::Fejer, TAU).is_err());
    }

    #[test]
    fn grid_fft_matches_direct() {
        let cutoff = 37;
        let pairs: Vec<SigmaCoeffs> = (0..3)
            .map(|p| SigmaCoeffs {
                a: (0..=cutoff).map(|k| ((k * 7 + p) as f64).sin()).collect(),
                b: {
                    let mut b: Vec<f64> = (0..=cutoff).map(|k| ((k * 3 + p) as f64).cos()).collect();
                    b[0] = 0.0;
                    b
                },
            })
            .collect();
        let horizon = 3.0;
        let fit = FourierFit::new(2, cutoff, horizon, pairs);
        let n = 50;
        let grid = crate::sample::uniform_grid(horizon, n);
        let indices: Vec<usize> = (1..n).collect();
        let times: Vec<f64> = indices.iter().map(|&m| grid[m]).collect();
        for kernel in [Kernel::Fejer, Kernel::SmoothedFejer { delta: 0.2 }] {
            let fast = fit.grid_series(&kernel, &grid, &indices).unwrap();
            let slow = fit.series(&kernel, &times).unwrap();
            for (a, b) in fast.matrices().iter().zip(slow.matrices()) {
                assert!(a.entrywise_l1_distance(b).unwrap() < 1e-12);
            }
            assert_eq!(fast.times(), &times[..]);
        }
        assert!(fit.grid_series(&Kernel::Fejer, &grid, &[0]).is_err());
        assert!(fit.grid_series(&Kernel::Fejer, &grid, &[n]).is_err());
    }

    #[test]
    fn pair_index_enumerates_upper_triangle() {
        let d = 4;
        let mut expected = 0;
        for u in 0..d {
            for v in u..d {
                assert_eq!(pair_index(d, u, v), expected);
                expected += 1;
            }
        }
    }

    #[test]
    fn ladder_values() {
        let d1 = delta_ladder(TAU, 1000, 1);
        assert!((d1 - TAU * 1000f64.powf(-0.3)).abs() < 1e-15);
        assert!(delta_ladder(TAU, 1000, 4) < delta_ladder(TAU, 1000, 3));
    }
}
