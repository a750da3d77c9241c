//! Second Fourier-series estimator, specialised to regular sampling.
//!
//! The complex Bohr convolution `α_k = 2π/(2N+1) Σ_{|s|≤N} c_s c_{k-s}` is
//! evaluated in real form from the increment coefficients
//! `â_s = Σ_i cos(s t_i) δ_i`, `b̂_s = Σ_i sin(s t_i) δ_i`. Coefficients at
//! negative frequency follow `â_{-m} = â_m`, `b̂_{-m} = -b̂_m`.
//!
//! The raw estimate is not symmetric in the component pair. Two fixes are
//! offered: compute the ordered pair `u <= v` and mirror it
//! ([`Symmetrization::PostHoc`]), or average the convolution over both
//! orders ([`Symmetrization::Convolution`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::fourier1::FourierCoeffs;
use crate::kernel::{FourierFit, GridTrig, Kernel, SigmaCoeffs};
use crate::sample::{PathSample, SpotMatrixSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetrization {
    PostHoc,
    Convolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fourier2Config {
    pub cutoff: usize,
    pub kernel: Kernel,
    pub symmetrization: Symmetrization,
}

impl Fourier2Config {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff == 0 {
            return Err(contract("Fourier cutoff N must be positive"));
        }
        self.kernel.validate()
    }
}

/// `Σ_i cos(s t_i) δ_i` and `Σ_i sin(s t_i) δ_i` for `s = 0..=max_freq`,
/// with left-endpoint times `t_i`, `i = 0..n`.
pub fn increment_coeffs(path: &PathSample, j: usize, max_freq: usize) -> Result<FourierCoeffs> {
    path.check_on_2pi()?;
    path.check_component(j)?;
    let table = GridTrig::new(path.n());
    Ok(coeffs_with_table(path, j, max_freq, &table))
}

fn coeffs_with_table(path: &PathSample, j: usize, max_freq: usize, table: &GridTrig) -> FourierCoeffs {
    let delta = path.increments(j);
    let mut cosine = Vec::with_capacity(max_freq + 1);
    let mut sine = Vec::with_capacity(max_freq + 1);
    for s in 0..=max_freq {
        let (mut ca, mut sa) = (0.0, 0.0);
        for (d, (c, sn)) in delta.iter().zip(table.row(s)) {
            ca += c * d;
            sa += sn * d;
        }
        cosine.push(ca);
        sine.push(sa);
    }
    sine[0] = 0.0;
    FourierCoeffs {
        component: j,
        cosine,
        sine,
    }
}

fn check_coverage(c1: &FourierCoeffs, c2: &FourierCoeffs, cutoff: usize) -> Result<()> {
    let need = 2 * cutoff;
    let have = c1.max_freq().min(c2.max_freq());
    if have < need {
        return Err(contract(format!(
            "increment coefficients cover frequency {have} but 2N = {need} is required"
        )));
    }
    Ok(())
}

/// Mean level `α₀`, symmetric in the two components.
fn alpha0(c1: &FourierCoeffs, c2: &FourierCoeffs, total1: f64, total2: f64, cutoff: usize) -> f64 {
    let mut acc = 0.0;
    for s in 1..=cutoff {
        acc += 2.0 * (c1.cosine[s] * c2.cosine[s] + c1.sine[s] * c2.sine[s]);
    }
    (acc + total1 * total2) / (2.0 * PI * (2 * cutoff + 1) as f64)
}

/// The four-term convolution sums for ordered components `(1, 2)` at
/// frequency `k`, without prefactor or boundary term.
#[inline]
fn ordered_sums(c1: &FourierCoeffs, c2: &FourierCoeffs, k: usize, cutoff: usize) -> (f64, f64) {
    let (mut sa, mut sb) = (0.0, 0.0);
    let k = k as isize;
    for s in 1..=cutoff {
        let (a1, b1) = (c1.cosine[s], c1.sine[s]);
        let (a2m, b2m) = c2.signed(k - s as isize);
        let (a2p, b2p) = c2.signed(k + s as isize);
        sa += a1 * a2m - b1 * b2m + a1 * a2p + b1 * b2p;
        sb += a1 * b2m + b1 * a2m + a1 * b2p - b1 * a2p;
    }
    (sa, sb)
}

/// Coefficients of the raw estimate for the ordered pair `(j₁, j₂)`.
/// `total1`, `total2` are `X^{j₁}(2π) - X^{j₁}(0)` and likewise for `j₂`.
/// `a[0]` holds `α₀`.
pub fn sigma_coeffs_unsymmetrized(
    c1: &FourierCoeffs,
    c2: &FourierCoeffs,
    total1: f64,
    total2: f64,
    cfg: &Fourier2Config,
) -> Result<SigmaCoeffs> {
    cfg.validate()?;
    let big_n = cfg.cutoff;
    check_coverage(c1, c2, big_n)?;
    let pre = 1.0 / (PI * (2 * big_n + 1) as f64);
    let mut out = SigmaCoeffs::zeros(big_n);
    out.a[0] = alpha0(c1, c2, total1, total2, big_n);
    for k in 1..=big_n {
        let (sa, sb) = ordered_sums(c1, c2, k, big_n);
        out.a[k] = pre * (sa + c2.cosine[k] * total1);
        out.b[k] = pre * (sb + c2.sine[k] * total1);
    }
    Ok(out)
}

/// Coefficients of the convolution-symmetrized estimate: the eight-term
/// sums with both boundary terms and prefactor `1/(2π(2N+1))`.
pub fn sigma_coeffs_convolution(
    c1: &FourierCoeffs,
    c2: &FourierCoeffs,
    total1: f64,
    total2: f64,
    cfg: &Fourier2Config,
) -> Result<SigmaCoeffs> {
    cfg.validate()?;
    let big_n = cfg.cutoff;
    check_coverage(c1, c2, big_n)?;
    let pre = 1.0 / (2.0 * PI * (2 * big_n + 1) as f64);
    let mut out = SigmaCoeffs::zeros(big_n);
    out.a[0] = alpha0(c1, c2, total1, total2, big_n);
    for k in 1..=big_n {
        let (sa12, sb12) = ordered_sums(c1, c2, k, big_n);
        let (sa21, sb21) = ordered_sums(c2, c1, k, big_n);
        out.a[k] = pre * (sa12 + sa21 + c2.cosine[k] * total1 + c1.cosine[k] * total2);
        out.b[k] = pre * (sb12 + sb21 + c2.sine[k] * total1 + c1.sine[k] * total2);
    }
    Ok(out)
}

/// Computes increment coefficients for all components (to frequency `2N`)
/// and the symmetrized Σ-coefficients for every pair.
pub fn fit(path: &PathSample, cfg: &Fourier2Config) -> Result<FourierFit> {
    cfg.validate()?;
    let scaled = path.rescaled_to_2pi();
    let table = GridTrig::new(scaled.n());
    let max_freq = 2 * cfg.cutoff;
    let d = path.dim();
    let coeffs: Vec<FourierCoeffs> = (0..d)
        .map(|j| coeffs_with_table(&scaled, j, max_freq, &table))
        .collect();
    let totals: Vec<f64> = (0..d)
        .map(|j| {
            let x = path.column(j);
            x[x.len() - 1] - x[0]
        })
        .collect();
    let mut pairs = Vec::with_capacity(d * (d + 1) / 2);
    for u in 0..d {
        for v in u..d {
            let (cu, cv) = (&coeffs[u], &coeffs[v]);
            pairs.push(match cfg.symmetrization {
                Symmetrization::PostHoc => {
                    sigma_coeffs_unsymmetrized(cu, cv, totals[u], totals[v], cfg)?
                }
                Symmetrization::Convolution => {
                    sigma_coeffs_convolution(cu, cv, totals[u], totals[v], cfg)?
                }
            });
        }
    }
    Ok(FourierFit::new(d, cfg.cutoff, path.horizon(), pairs))
}

/// Symmetric Σ estimates at each of `eval_times`, which must lie in `(0, T)`.
pub fn sigma_series_v2(
    path: &PathSample,
    cfg: &Fourier2Config,
    eval_times: &[f64],
) -> Result<SpotMatrixSeries> {
    fit(path, cfg)?.series(&cfg.kernel, eval_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::uniform_grid;
    use std::f64::consts::TAU;

    fn cfg(n: usize, sym: Symmetrization) -> Fourier2Config {
        Fourier2Config {
            cutoff: n,
            kernel: Kernel::Fejer,
            symmetrization: sym,
        }
    }

    #[test]
    fn constant_path_all_zero() {
        let p = PathSample::on_uniform_grid(TAU, vec![vec![2.0; 41]]).unwrap();
        let c = increment_coeffs(&p, 0, 10).unwrap();
        assert!(c.cosine.iter().chain(&c.sine).all(|&v| v == 0.0));
    }

    #[test]
    fn single_unit_increment_at_origin() {
        let mut x = vec![0.0; 21];
        for v in x.iter_mut().skip(1) {
            *v = 1.0;
        }
        let p = PathSample::on_uniform_grid(TAU, vec![x]).unwrap();
        let c = increment_coeffs(&p, 0, 12).unwrap();
        assert!(c.cosine.iter().all(|&v| v == 1.0));
        assert!(c.sine.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_increments_give_zero_coeffs() {
        let z = FourierCoeffs {
            component: 0,
            cosine: vec![0.0; 9],
            sine: vec![0.0; 9],
        };
        let out = sigma_coeffs_unsymmetrized(&z, &z, 0.0, 0.0, &cfg(4, Symmetrization::PostHoc))
            .unwrap();
        assert!(out.a.iter().chain(&out.b).all(|&v| v == 0.0));
        assert!(
            sigma_coeffs_unsymmetrized(&z, &z, 0.0, 0.0, &cfg(5, Symmetrization::PostHoc)).is_err()
        );
    }

    #[test]
    fn one_dimensional_symmetrizations_coincide() {
        let times = uniform_grid(TAU, 64);
        let x: Vec<f64> = times.iter().map(|t| (2.0 * t).sin() + 0.3 * (5.0 * t).cos()).collect();
        let p = PathSample::new(times, vec![x], vec!["x".into()]).unwrap();
        let ts = [0.5, 1.7, 3.1, 5.9];
        let a = sigma_series_v2(&p, &cfg(16, Symmetrization::PostHoc), &ts).unwrap();
        let b = sigma_series_v2(&p, &cfg(16, Symmetrization::Convolution), &ts).unwrap();
        for (ma, mb) in a.matrices().iter().zip(b.matrices()) {
            assert!((ma.get(0, 0) - mb.get(0, 0)).abs() <= 1e-13 * ma.get(0, 0).abs().max(1.0));
        }
    }
}
