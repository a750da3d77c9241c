//! Ground-truth generator: a multi-factor Heston-type model
//!
//! ```text
//! dX_i = γ_i dt + Σ_j λ_ij √v_j dW_j (+ dJ_i)
//! dv_j = α_j (b_j - v_j) dt + σ_j √v_j dB_j
//! ```
//!
//! Variances are drawn from the exact CIR transition law; prices use an
//! Euler–Maruyama step. The true spot matrix is `Λ diag(v(t)) Λᵀ`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eig::{Spectrum, SymMatrix};
use crate::error::{contract, Error, Result};
use crate::sample::{uniform_grid, PathSample, SpotMatrixSeries, GRID_TOL};

const STREAM_PRICE: u64 = 0;
const STREAM_VARIANCE: u64 = 1;
const STREAM_JUMPS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HestonSpec {
    /// Price dimension `d`.
    pub d: usize,
    /// Number of variance factors `d₁`.
    pub d1: usize,
    /// Drift `γ_i`, length `d`.
    pub drift: Vec<f64>,
    /// Loadings `λ_ij`, `d` rows of length `d₁`.
    pub loadings: Vec<Vec<f64>>,
    /// Mean-reversion speeds `α_j`.
    pub mean_reversion: Vec<f64>,
    /// Long-run variances `b_j`.
    pub long_run: Vec<f64>,
    /// Volatilities of variance `σ_j`.
    pub vol_of_vol: Vec<f64>,
    /// Initial variances `v_j(0)`.
    pub v0: Vec<f64>,
    /// Initial prices `X_i(0)`.
    pub x0: Vec<f64>,
    /// Horizon `T`.
    pub horizon: f64,
    /// Number of grid steps `N₀`.
    #[serde(default)]
    pub grid_size: usize,
}

impl HestonSpec {
    /// The five-asset, three-factor benchmark model.
    ///
    /// The drift and level parameters are read as `γ_i = i/100` for assets
    /// and `b_j = v_j(0) = j/100` for factors. `σ_j = √(2 b_j α_j)` puts each
    /// variance exactly on the Feller boundary.
    pub fn benchmark(grid_size: usize) -> Self {
        let (d, d1) = (5, 3);
        let long_run: Vec<f64> = (1..=d1).map(|j| j as f64 / 100.0).collect();
        let mean_reversion = vec![2.0; d1];
        let vol_of_vol = long_run
            .iter()
            .zip(&mean_reversion)
            .map(|(b, a)| (2.0 * b * a).sqrt())
            .collect();
        let loadings = (1..=d)
            .map(|i| {
                (1..=d1)
                    .map(|j| {
                        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * ((i * j) as f64).sin()
                    })
                    .collect()
            })
            .collect();
        Self {
            d,
            d1,
            drift: (1..=d).map(|i| i as f64 / 100.0).collect(),
            loadings,
            mean_reversion,
            v0: long_run.clone(),
            long_run,
            vol_of_vol,
            x0: vec![1.0; d],
            horizon: TAU,
            grid_size,
        }
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.grid_size as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d1 == 0 {
            return Err(contract("model dimensions must be positive"));
        }
        if self.grid_size == 0 {
            return Err(contract("grid size N0 must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(contract("horizon must be positive"));
        }
        let check_len = |name: &str, len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(contract(format!("{name} has length {len}, expected {want}")))
            }
        };
        check_len("drift", self.drift.len(), self.d)?;
        check_len("x0", self.x0.len(), self.d)?;
        check_len("loadings", self.loadings.len(), self.d)?;
        for row in &self.loadings {
            check_len("loadings row", row.len(), self.d1)?;
        }
        for (name, v) in [
            ("mean_reversion", &self.mean_reversion),
            ("long_run", &self.long_run),
            ("vol_of_vol", &self.vol_of_vol),
            ("v0", &self.v0),
        ] {
            check_len(name, v.len(), self.d1)?;
            if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(contract(format!("{name} entries must be positive")));
            }
        }
        Ok(())
    }

    /// `Λ diag(v) Λᵀ`.
    pub fn spot_matrix(&self, v: &[f64]) -> SymMatrix {
        SymMatrix::from_upper_fn(self.d, |i, k| {
            (0..self.d1)
                .map(|j| self.loadings[i][j] * v[j] * self.loadings[k][j])
                .sum()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpSize {
    /// Every jump moves the price by this vector.
    Fixed(Vec<f64>),
    /// Each coordinate of each jump is an independent `N(0, stddev²)`.
    GaussianIid { stddev: f64 },
}

/// Compound-Poisson jump component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    /// Expected number of jumps per unit time.
    pub intensity: f64,
    pub size: JumpSize,
}

impl JumpSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(contract("jump intensity must be non-negative"));
        }
        match &self.size {
            JumpSize::Fixed(v) if v.len() != d => Err(contract(format!(
                "jump vector has length {}, expected {d}",
                v.len()
            ))),
            JumpSize::GaussianIid { stddev } if stddev.is_nan() || *stddev < 0.0 => {
                Err(contract("jump stddev must be non-negative"))
            }
            _ => Ok(()),
        }
    }
}

/// What the estimators are trying to recover.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub times: Vec<f64>,
    /// Row `k` holds `v(t_k)`, one entry per factor.
    pub variance_paths: Vec<Vec<f64>>,
    /// True Σ and spectra at every grid time.
    pub sigma: SpotMatrixSeries,
    /// Jump times, when jumps were simulated.
    pub jump_times: Vec<f64>,
}

impl GroundTruth {
    pub fn step(&self) -> f64 {
        self.times[self.times.len() - 1] / (self.times.len() - 1) as f64
    }

    /// Grid index of `t`, or an error if `t` is not a grid time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let step = self.step();
        let k = (t / step).round();
        if k < 0.0 || k as usize >= self.times.len() {
            return Err(Error::OffGrid { t });
        }
        let k = k as usize;
        if (self.times[k] - t).abs() > GRID_TOL * step {
            return Err(Error::OffGrid { t });
        }
        Ok(k)
    }

    pub fn spectrum_at_index(&self, k: usize) -> &Spectrum {
        &self.sigma.spectra()[k]
    }
}

/// Sorted eigenvalues of the true Σ at grid time `t`.
pub fn true_spectrum_at(truth: &GroundTruth, t: f64) -> Result<Spectrum> {
    Ok(truth.spectrum_at_index(truth.index_of(t)?).clone())
}

/// One draw from the exact transition law of `dv = α(b - v)dt + σ√v dB`
/// over a step `dt`: a scaled noncentral χ², sampled as a Poisson mixture
/// of gammas.
pub fn cir_exact_step<R: Rng + ?Sized>(
    v: f64,
    dt: f64,
    alpha: f64,
    b: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(v > 0.0 && dt > 0.0 && alpha > 0.0 && b > 0.0 && sigma > 0.0) {
        return Err(contract(format!(
            "CIR step needs positive inputs (v={v}, dt={dt}, alpha={alpha}, b={b}, sigma={sigma})"
        )));
    }
    let decay = (-alpha * dt).exp();
    let c = sigma * sigma * (1.0 - decay) / (4.0 * alpha);
    let df = 4.0 * alpha * b / (sigma * sigma);
    let nc = v * decay / c;
    let poisson = Poisson::new(nc / 2.0).map_err(|e| contract(format!("poisson: {e}")))?;
    let k: f64 = poisson.sample(rng);
    let gamma = Gamma::new(df / 2.0 + k, 2.0).map_err(|e| contract(format!("gamma: {e}")))?;
    let chi2: f64 = gamma.sample(rng);
    // Underflow to zero is possible only in extreme corners of parameter space.
    Ok((c * chi2).max(f64::MIN_POSITIVE))
}

/// Simulates one path on the grid `t_k = k T / N₀` together with the true
/// spot matrices. Identical `seed`s give bit-identical output.
pub fn simulate_heston(
    spec: &HestonSpec,
    jumps: Option<&JumpSpec>,
    seed: u64,
) -> Result<(PathSample, GroundTruth)> {
    spec.validate()?;
    if let Some(j) = jumps {
        j.validate(spec.d)?;
    }
    let n0 = spec.grid_size;
    let dt = spec.step();
    let sqrt_dt = dt.sqrt();

    let mut var_rng = ChaCha8Rng::seed_from_u64(seed);
    var_rng.set_stream(STREAM_VARIANCE);
    let mut price_rng = ChaCha8Rng::seed_from_u64(seed);
    price_rng.set_stream(STREAM_PRICE);

    let mut variance_paths = Vec::with_capacity(n0 + 1);
    variance_paths.push(spec.v0.clone());
    for k in 0..n0 {
        let prev = &variance_paths[k];
        let next = (0..spec.d1)
            .map(|j| {
                cir_exact_step(
                    prev[j],
                    dt,
                    spec.mean_reversion[j],
                    spec.long_run[j],
                    spec.vol_of_vol[j],
                    &mut var_rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        variance_paths.push(next);
    }

    let mut jump_increments = vec![vec![0.0; spec.d]; n0];
    let mut jump_times = Vec::new();
    if let Some(js) = jumps {
        let mut jump_rng = ChaCha8Rng::seed_from_u64(seed);
        jump_rng.set_stream(STREAM_JUMPS);
        let mean_count = js.intensity * spec.horizon;
        let count = if mean_count > 0.0 {
            let p = Poisson::new(mean_count).map_err(|e| contract(format!("poisson: {e}")))?;
            let c: f64 = p.sample(&mut jump_rng);
            c as usize
        } else {
            0
        };
        for _ in 0..count {
            let tau = jump_rng.random::<f64>() * spec.horizon;
            let cell = ((tau / dt) as usize).min(n0 - 1);
            jump_times.push(tau);
            for (i, inc) in jump_increments[cell].iter_mut().enumerate() {
                *inc += match &js.size {
                    JumpSize::Fixed(v) => v[i],
                    JumpSize::GaussianIid { stddev } => {
                        stddev * jump_rng.sample::<f64, _>(StandardNormal)
                    }
                };
            }
        }
        jump_times.sort_by(f64::total_cmp);
    }

    let mut columns: Vec<Vec<f64>> = spec
        .x0
        .iter()
        .map(|&x| {
            let mut c = Vec::with_capacity(n0 + 1);
            c.push(x);
            c
        })
        .collect();
    let mut shocks = vec![0.0; spec.d1];
    for k in 0..n0 {
        let v = &variance_paths[k];
        for (j, z) in shocks.iter_mut().enumerate() {
            let normal: f64 = price_rng.sample(StandardNormal);
            *z = v[j].sqrt() * normal;
        }
        for i in 0..spec.d {
            let diffusion: f64 = (0..spec.d1).map(|j| spec.loadings[i][j] * shocks[j]).sum();
            let prev = columns[i][k];
            columns[i].push(prev + spec.drift[i] * dt + sqrt_dt * diffusion + jump_increments[k][i]);
        }
    }

    let times = uniform_grid(spec.horizon, n0);
    let labels = (1..=spec.d).map(|i| format!("x{i}")).collect();
    let path = PathSample::new(times.clone(), columns, labels)?;

    let mut sigma = SpotMatrixSeries::new();
    for (t, v) in times.iter().zip(&variance_paths) {
        sigma.push(*t, spec.spot_matrix(v))?;
    }
    Ok((
        path,
        GroundTruth {
            times,
            variance_paths,
            sigma,
            jump_times,
        },
    ))
}
