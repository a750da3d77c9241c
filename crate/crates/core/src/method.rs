//! Uniform dispatch over the estimators.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier1::{self, nyquist_cutoff, Fourier1Config};
use crate::fourier2::{self, Fourier2Config, Symmetrization};
use crate::kernel::{delta_ladder, FourierFit, Kernel};
use crate::qv::{BipowerEstimator, JumpModelInfo, QvConfig, QvEstimator};
use crate::sample::{PathSample, SpotMatrixSeries};

/// Reconstruction kernel as written in an experiment spec. Ladder rungs
/// are resolved against the path horizon and grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Fejer,
    Ladder(u32),
    Delta(f64),
}

impl KernelChoice {
    pub fn resolve(&self, horizon: f64, n: usize) -> Kernel {
        match *self {
            KernelChoice::Fejer => Kernel::Fejer,
            KernelChoice::Ladder(i) => Kernel::SmoothedFejer {
                delta: delta_ladder(horizon, n, i),
            },
            KernelChoice::Delta(delta) => Kernel::SmoothedFejer { delta },
        }
    }

    fn label(&self) -> String {
        match self {
            KernelChoice::Fejer => "FS".into(),
            KernelChoice::Ladder(i) => format!("FS{i}"),
            KernelChoice::Delta(d) => format!("d{d}"),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        if s == "FS" {
            Some(KernelChoice::Fejer)
        } else if let Some(i) = s.strip_prefix("FS") {
            i.parse().ok().map(KernelChoice::Ladder)
        } else if let Some(d) = s.strip_prefix('d') {
            d.parse().ok().map(KernelChoice::Delta)
        } else {
            None
        }
    }
}

fn default_holder() -> f64 {
    0.5
}

fn default_n0() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    /// Windowed quadratic variation. With `bg_index` set, the bandwidth
    /// follows the jump-robust rate instead of `T n^{-1/(2α+1)}`.
    Qv {
        #[serde(default = "default_holder")]
        holder_alpha: f64,
        #[serde(default)]
        bg_index: Option<f64>,
    },
    Bipower {
        #[serde(default = "default_holder")]
        holder_alpha: f64,
        #[serde(default)]
        bg_index: Option<f64>,
    },
    Fourier1 {
        kernel: KernelChoice,
        #[serde(default = "default_n0")]
        n0: usize,
        /// Defaults to the Nyquist rule `N = n/4`.
        #[serde(default)]
        cutoff: Option<usize>,
    },
    Fourier2 {
        kernel: KernelChoice,
        symmetrization: Symmetrization,
        #[serde(default)]
        cutoff: Option<usize>,
    },
}

impl MethodSpec {
    pub fn qv() -> Self {
        MethodSpec::Qv {
            holder_alpha: default_holder(),
            bg_index: None,
        }
    }

    pub fn bipower() -> Self {
        MethodSpec::Bipower {
            holder_alpha: default_holder(),
            bg_index: None,
        }
    }

    pub fn fourier1(kernel: KernelChoice) -> Self {
        MethodSpec::Fourier1 {
            kernel,
            n0: 1,
            cutoff: None,
        }
    }

    pub fn fourier2(kernel: KernelChoice, symmetrization: Symmetrization) -> Self {
        MethodSpec::Fourier2 {
            kernel,
            symmetrization,
            cutoff: None,
        }
    }

    /// Short name used in tables and CSV headers, e.g. `QV`, `F1-FS3`,
    /// `F2C-FS`. Round-trips through [`FromStr`] when the Hölder exponent
    /// is the default.
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn is_fourier(&self) -> bool {
        matches!(self, MethodSpec::Fourier1 { .. } | MethodSpec::Fourier2 { .. })
    }

    /// Checks parameters that do not depend on the path.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{self}: {m}")));
        match self {
            MethodSpec::Qv { holder_alpha, bg_index } | MethodSpec::Bipower { holder_alpha, bg_index } => {
                if !(*holder_alpha > 0.0 && *holder_alpha <= 1.0) {
                    return bad(format!("holder_alpha {holder_alpha} must lie in (0, 1]"));
                }
                if let Some(b) = bg_index {
                    if !(0.0..2.0).contains(b) {
                        return bad(format!("bg_index {b} must lie in [0, 2)"));
                    }
                }
            }
            MethodSpec::Fourier1 { kernel, n0, cutoff } => {
                if *n0 == 0 {
                    return bad("n0 must be at least 1".into());
                }
                if let Some(c) = cutoff {
                    if *c < *n0 {
                        return bad(format!("cutoff {c} is below n0 = {n0}"));
                    }
                }
                check_kernel(self, kernel)?;
            }
            MethodSpec::Fourier2 { kernel, cutoff, .. } => {
                if *cutoff == Some(0) {
                    return bad("cutoff must be positive".into());
                }
                check_kernel(self, kernel)?;
            }
        }
        Ok(())
    }

    fn qv_config(&self, path: &PathSample) -> Result<QvConfig> {
        let (MethodSpec::Qv { holder_alpha, bg_index } | MethodSpec::Bipower { holder_alpha, bg_index }) =
            self
        else {
            unreachable!("qv_config on a Fourier method")
        };
        let (n, horizon) = (path.n(), path.horizon());
        Ok(match bg_index {
            None => QvConfig::for_grid(n, horizon, *holder_alpha),
            Some(b) => QvConfig {
                bandwidth: JumpModelInfo::with_default_rate(*b, *holder_alpha)?.bandwidth(n, horizon),
                holder_alpha: *holder_alpha,
            },
        })
    }
}

fn check_kernel(method: &MethodSpec, kernel: &KernelChoice) -> Result<()> {
    match kernel {
        KernelChoice::Delta(d) if !(*d > 0.0 && d.is_finite()) => Err(Error::Config(format!(
            "{method}: smoothing delta must be positive, got {d}"
        ))),
        KernelChoice::Ladder(0) => Err(Error::Config(format!("{method}: ladder rungs start at 1"))),
        _ => Ok(()),
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Qv { bg_index, .. } | MethodSpec::Bipower { bg_index, .. } => {
                let base = if matches!(self, MethodSpec::Qv { .. }) { "QV" } else { "BP" };
                match bg_index {
                    None => write!(f, "{base}"),
                    Some(b) => write!(f, "{base}@b{b}"),
                }
            }
            MethodSpec::Fourier1 { kernel, n0, cutoff } => {
                write!(f, "F1-{}", kernel.label())?;
                if *n0 != 1 {
                    write!(f, "/n{n0}")?;
                }
                if let Some(c) = cutoff {
                    write!(f, "/N{c}")?;
                }
                Ok(())
            }
            MethodSpec::Fourier2 {
                kernel,
                symmetrization,
                cutoff,
            } => {
                let s = match symmetrization {
                    Symmetrization::PostHoc => 'P',
                    Symmetrization::Convolution => 'C',
                };
                write!(f, "F2{s}-{}", kernel.label())?;
                if let Some(c) = cutoff {
                    write!(f, "/N{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Config(format!("unknown method `{s}`"));
        let (base, bg) = match s.split_once("@b") {
            Some((b, x)) => (b, Some(x.parse::<f64>().map_err(|_| err())?)),
            None => (s, None),
        };
        match base {
            "QV" => {
                return Ok(MethodSpec::Qv {
                    holder_alpha: default_holder(),
                    bg_index: bg,
                })
            }
            "BP" => {
                return Ok(MethodSpec::Bipower {
                    holder_alpha: default_holder(),
                    bg_index: bg,
                })
            }
            _ if bg.is_some() => return Err(err()),
            _ => {}
        }
        let mut parts = base.split('/');
        let head = parts.next().ok_or_else(err)?;
        let (scheme, kernel) = head.split_once('-').ok_or_else(err)?;
        let kernel = KernelChoice::parse(kernel).ok_or_else(err)?;
        let mut n0 = 1;
        let mut cutoff = None;
        for p in parts {
            if let Some(v) = p.strip_prefix('n') {
                n0 = v.parse().map_err(|_| err())?;
            } else if let Some(v) = p.strip_prefix('N') {
                cutoff = Some(v.parse().map_err(|_| err())?);
            } else {
                return Err(err());
            }
        }
        let method = match scheme {
            "F1" => MethodSpec::Fourier1 { kernel, n0, cutoff },
            "F2P" | "F2C" if n0 == 1 => MethodSpec::Fourier2 {
                kernel,
                symmetrization: if scheme == "F2P" {
                    Symmetrization::PostHoc
                } else {
                    Symmetrization::Convolution
                },
                cutoff,
            },
            _ => return Err(err()),
        };
        Ok(method)
    }
}

/// Key identifying a Fourier fit independently of the kernel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum FitKey {
    First { n0: usize, cutoff: usize },
    Second { symmetrization: Symmetrization, cutoff: usize },
}

/// Estimates on one path, sharing Fourier fits between methods that differ
/// only in their reconstruction kernel.
pub struct PathEstimator<'a> {
    path: &'a PathSample,
    fits: HashMap<FitKey, FourierFit>,
}

impl<'a> PathEstimator<'a> {
    pub fn new(path: &'a PathSample) -> Self {
        Self {
            path,
            fits: HashMap::new(),
        }
    }

    /// Σ estimates at `eval_times`, or at the method's default times: grid
    /// points strictly inside `(h, T-h)` for the window estimators, and the
    /// grid without its endpoints for the Fourier estimators.
    pub fn estimate(&mut self, method: &MethodSpec, eval_times: Option<&[f64]>) -> Result<SpotMatrixSeries> {
        self.dispatch(method, eval_times).map_err(|e| Error::Method {
            method: method.label(),
            source: Box::new(e),
        })
    }

    fn dispatch(&mut self, method: &MethodSpec, eval_times: Option<&[f64]>) -> Result<SpotMatrixSeries> {
        method.validate()?;
        let path = self.path;
        match method {
            MethodSpec::Qv { .. } => {
                let est = QvEstimator::new(path, method.qv_config(path)?)?;
                match eval_times {
                    Some(ts) => est.series(ts),
                    None => est.series(&est.valid_times()),
                }
            }
            MethodSpec::Bipower { .. } => {
                let est = BipowerEstimator::new(path, method.qv_config(path)?)?;
                match eval_times {
                    Some(ts) => est.series(ts),
                    None => est.series(&est.valid_times()),
                }
            }
            MethodSpec::Fourier1 { kernel, n0, cutoff } => {
                let cutoff = cutoff.unwrap_or_else(|| nyquist_cutoff(path.n()));
                let kernel = kernel.resolve(path.horizon(), path.n());
                let key = FitKey::First { n0: *n0, cutoff };
                let cfg = Fourier1Config {
                    cutoff,
                    n0: *n0,
                    kernel,
                };
                let fit = self.fit_or_insert(key, || fourier1::fit(path, &cfg))?;
                reconstruct(fit, &kernel, path, eval_times)
            }
            MethodSpec::Fourier2 {
                kernel,
                symmetrization,
                cutoff,
            } => {
                let cutoff = cutoff.unwrap_or_else(|| nyquist_cutoff(path.n()));
                let kernel = kernel.resolve(path.horizon(), path.n());
                let key = FitKey::Second {
                    symmetrization: *symmetrization,
                    cutoff,
                };
                let cfg = Fourier2Config {
                    cutoff,
                    kernel,
                    symmetrization: *symmetrization,
                };
                let fit = self.fit_or_insert(key, || fourier2::fit(path, &cfg))?;
                reconstruct(fit, &kernel, path, eval_times)
            }
        }
    }

    fn fit_or_insert(
        &mut self,
        key: FitKey,
        make: impl FnOnce() -> Result<FourierFit>,
    ) -> Result<&FourierFit> {
        if !self.fits.contains_key(&key) {
            let fit = make()?;
            self.fits.insert(key.clone(), fit);
        }
        Ok(&self.fits[&key])
    }
}

fn reconstruct(
    fit: &FourierFit,
    kernel: &Kernel,
    path: &PathSample,
    eval_times: Option<&[f64]>,
) -> Result<SpotMatrixSeries> {
    match eval_times {
        Some(ts) => fit.series(kernel, ts),
        None => {
            let indices: Vec<usize> = (1..path.n()).collect();
            fit.grid_series(kernel, path.times(), &indices)
        }
    }
}

/// One-shot form of [`PathEstimator::estimate`].
pub fn estimate_path(
    path: &PathSample,
    method: &MethodSpec,
    eval_times: Option<&[f64]>,
) -> Result<SpotMatrixSeries> {
    PathEstimator::new(path).estimate(method, eval_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qv::qv_estimate;
    use crate::sim::{simulate_heston, HestonSpec};

    fn path(n: usize) -> PathSample {
        simulate_heston(&HestonSpec::benchmark(n), None, 11).unwrap().0
    }

    #[test]
    fn labels_round_trip() {
        for s in [
            "QV", "BP", "QV@b0", "BP@b0.5", "F1-FS", "F1-FS3", "F1-d0.25", "F1-FS2/n3/N40", "F2P-FS",
            "F2C-FS4", "F2C-FS1/N10",
        ] {
            let m: MethodSpec = s.parse().unwrap();
            assert_eq!(m.label(), s);
        }
        for s in ["qv", "F3-FS", "F2P-FS/n2", "F1-XX", "F1-FS/q", "F1-FS@b0"] {
            assert!(s.parse::<MethodSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn toml_method_syntax() {
        #[derive(Deserialize)]
        struct W {
            methods: Vec<MethodSpec>,
        }
        let w: W = toml::from_str(
            r#"
            [[methods]]
            kind = "qv"
            [[methods]]
            kind = "fourier1"
            kernel = { ladder = 2 }
            [[methods]]
            kind = "fourier2"
            kernel = "fejer"
            symmetrization = "convolution"
            cutoff = 12
            "#,
        )
        .unwrap();
        let labels: Vec<String> = w.methods.iter().map(MethodSpec::label).collect();
        assert_eq!(labels, ["QV", "F1-FS2", "F2C-FS/N12"]);
    }

    #[test]
    fn qv_dispatch_matches_direct() {
        let p = path(200);
        let m = MethodSpec::qv();
        let s = estimate_path(&p, &m, None).unwrap();
        let cfg = QvConfig::for_grid(200, p.horizon(), 0.5);
        assert!(!s.is_empty());
        for (t, est, _) in s.iter() {
            let direct = qv_estimate(&p, &cfg, t).unwrap();
            let tol = 1e-12 * direct.frobenius_norm();
            assert!(est.entrywise_l1_distance(&direct).unwrap() <= tol);
        }
    }

    #[test]
    fn fourier2_dispatch_matches_module() {
        let p = path(120);
        let m = MethodSpec::fourier2(KernelChoice::Ladder(2), Symmetrization::PostHoc);
        let times: Vec<f64> = p.times()[1..120].to_vec();
        let cfg = Fourier2Config {
            cutoff: 30,
            kernel: KernelChoice::Ladder(2).resolve(p.horizon(), 120),
            symmetrization: Symmetrization::PostHoc,
        };
        let direct = fourier2::sigma_series_v2(&p, &cfg, &times).unwrap();
        assert_eq!(estimate_path(&p, &m, Some(&times)).unwrap(), direct);
        let grid = estimate_path(&p, &m, None).unwrap();
        assert_eq!(grid.times(), direct.times());
        for (a, b) in grid.matrices().iter().zip(direct.matrices()) {
            assert!(a.entrywise_l1_distance(b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn cached_fit_matches_fresh() {
        let p = path(80);
        let mut est = PathEstimator::new(&p);
        let a = MethodSpec::fourier1(KernelChoice::Fejer);
        let b = MethodSpec::fourier1(KernelChoice::Ladder(3));
        est.estimate(&a, None).unwrap();
        assert_eq!(est.estimate(&b, None).unwrap(), estimate_path(&p, &b, None).unwrap());
        assert_eq!(est.fits.len(), 1);
    }

    #[test]
    fn errors_carry_method_label() {
        let p = path(40);
        let err = estimate_path(&p, &MethodSpec::qv(), Some(&[0.01])).unwrap_err();
        match err {
            Error::Method { method, source } => {
                assert_eq!(method, "QV");
                assert!(matches!(*source, Error::OutOfWindow { .. }));
            }
            e => panic!("unexpected {e}"),
        }
        let bad = MethodSpec::Fourier1 {
            kernel: KernelChoice::Delta(-1.0),
            n0: 1,
            cutoff: None,
        };
        assert!(estimate_path(&p, &bad, None).is_err());
    }
}
