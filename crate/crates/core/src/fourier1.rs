//! First Fourier-series estimator of the spot volatility matrix.
//!
//! Three steps, all on the `[0, 2π]` clock:
//!
//! 1. Fourier coefficients of each `dX_j` up to frequency `2N`, from a
//!    summation-by-parts form of `(1/π)∫cos(kt) dX_j`.
//! 2. Bohr convolution of those coefficients to obtain the Fourier
//!    coefficients of each `Σ_{u,v}`, averaging over frequencies `n₀..=N`.
//! 3. Kernel-weighted partial Fourier sum of `Σ_{u,v}` at any `t ∈ (0, 2π)`.
//!
//! Paths on a general `[0, T]` are rescaled to `[0, 2π]` by [`fit`] and the
//! reconstruction is converted back to the original time units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eig::SymMatrix;
use crate::error::{contract, Result};
use crate::kernel::{FourierFit, GridTrig, Kernel, SigmaCoeffs};
use crate::sample::PathSample;

/// Trigonometric coefficients of one component's increments, for
/// frequencies `k = 0..=max_freq`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    pub component: usize,
    pub cosine: Vec<f64>,
    pub sine: Vec<f64>,
}

impl FourierCoeffs {
    pub fn max_freq(&self) -> usize {
        self.cosine.len() - 1
    }

    /// Coefficient at a possibly negative frequency, using the real-signal
    /// symmetry `a_{-m} = a_m`, `b_{-m} = -b_m`.
    #[inline]
    pub fn signed(&self, k: isize) -> (f64, f64) {
        let m = k.unsigned_abs();
        if k >= 0 {
            (self.cosine[m], self.sine[m])
        } else {
            (self.cosine[m], -self.sine[m])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fourier1Config {
    /// Reconstruction cutoff `N`.
    pub cutoff: usize,
    /// Lowest frequency used in the Bohr averages.
    pub n0: usize,
    pub kernel: Kernel,
}

impl Fourier1Config {
    pub fn new(cutoff: usize, kernel: Kernel) -> Self {
        Self {
            cutoff,
            n0: 1,
            kernel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff == 0 {
            return Err(contract("Fourier cutoff N must be positive"));
        }
        if self.n0 > self.cutoff {
            return Err(contract(format!(
                "n0 = {} exceeds cutoff N = {}",
                self.n0, self.cutoff
            )));
        }
        self.kernel.validate()
    }
}

/// Cutoff from the Nyquist rule `2N = n/2`.
pub fn nyquist_cutoff(n: usize) -> usize {
    (n / 4).max(1)
}

/// `â_k(dX_j)`, `b̂_k(dX_j)` for `k = 0..=max_freq` on a path over `[0, 2π]`.
pub fn path_fourier_coeffs(path: &PathSample, j: usize, max_freq: usize) -> Result<FourierCoeffs> {
    path.check_on_2pi()?;
    path.check_component(j)?;
    let table = GridTrig::new(path.n());
    Ok(coeffs_with_table(path, j, max_freq, &table))
}

pub(crate) fn coeffs_with_table(
    path: &PathSample,
    j: usize,
    max_freq: usize,
    table: &GridTrig,
) -> FourierCoeffs {
    let x = path.column(j);
    let n = path.n();
    let boundary = (x[n] - x[0]) / PI;
    let mut cosine = Vec::with_capacity(max_freq + 1);
    let mut sine = Vec::with_capacity(max_freq + 1);
    for k in 0..=max_freq {
        let mut ca = 0.0;
        let mut sa = 0.0;
        let mut row = table.row(k);
        let (mut c_prev, mut s_prev) = row.next().expect("grid has n+1 points");
        for (i, (c, s)) in row.enumerate() {
            let xp = x[i];
            ca += (c_prev - c) * xp;
            sa += (s_prev - s) * xp;
            c_prev = c;
            s_prev = s;
        }
        cosine.push(ca / PI + boundary);
        sine.push(sa / PI);
    }
    // sin(0·t) vanishes identically; keep the invariant exact.
    sine[0] = 0.0;
    FourierCoeffs {
        component: j,
        cosine,
        sine,
    }
}

/// Fourier coefficients `a_k, b_k`, `k = 0..=N`, of `Σ_{u,v}` by Bohr
/// convolution of the path coefficients of components `u` and `v`.
pub fn sigma_fourier_coeffs_v1(
    cu: &FourierCoeffs,
    cv: &FourierCoeffs,
    cfg: &Fourier1Config,
) -> Result<SigmaCoeffs> {
    cfg.validate()?;
    let big_n = cfg.cutoff;
    let need = 2 * big_n;
    if cu.max_freq() < need || cv.max_freq() < need {
        return Err(contract(format!(
            "path coefficients cover frequency {} but 2N = {need} is required",
            cu.max_freq().min(cv.max_freq())
        )));
    }
    let (au, bu, av, bv) = (&cu.cosine, &cu.sine, &cv.cosine, &cv.sine);
    let width = (big_n + 1 - cfg.n0) as f64;
    let mut out = SigmaCoeffs::zeros(big_n);

    let mut a0 = 0.0;
    for s in cfg.n0..=big_n {
        a0 += au[s] * av[s] + bu[s] * bv[s];
    }
    out.a[0] = PI / (2.0 * width) * a0;

    for k in 1..=big_n {
        let mut ak = 0.0;
        let mut bk = 0.0;
        for s in cfg.n0..=big_n {
            ak += au[s] * av[s + k] + av[s] * au[s + k];
            bk += au[s] * bv[s + k] + av[s] * bu[s + k];
        }
        out.a[k] = PI / width * ak;
        out.b[k] = PI / width * bk;
    }
    Ok(out)
}

/// Runs steps 1 and 2 for every pair of components. The returned fit
/// reconstructs Σ on the original time axis of `path`.
pub fn fit(path: &PathSample, cfg: &Fourier1Config) -> Result<FourierFit> {
    cfg.validate()?;
    let scaled = path.rescaled_to_2pi();
    let table = GridTrig::new(scaled.n());
    let max_freq = 2 * cfg.cutoff;
    let coeffs: Vec<FourierCoeffs> = (0..path.dim())
        .map(|j| coeffs_with_table(&scaled, j, max_freq, &table))
        .collect();
    let mut pairs = Vec::with_capacity(path.dim() * (path.dim() + 1) / 2);
    for u in 0..path.dim() {
        for v in u..path.dim() {
            pairs.push(sigma_fourier_coeffs_v1(&coeffs[u], &coeffs[v], cfg)?);
        }
    }
    Ok(FourierFit::new(path.dim(), cfg.cutoff, path.horizon(), pairs))
}

/// Step 3: the reconstructed matrix at `t`, using the kernel in `cfg`.
pub fn reconstruct_sigma_v1(fit: &FourierFit, cfg: &Fourier1Config, t: f64) -> Result<SymMatrix> {
    fit.reconstruct(&cfg.kernel, t)
}
