//! Observation grids and estimated matrix series.

use std::f64::consts::TAU;

use crate::eig::{Spectrum, SymMatrix};
use crate::error::{contract, Error, Result};

/// Relative tolerance on the spacing of observation times.
pub const GRID_TOL: f64 = 1e-9;

/// Observations of a `d`-dimensional process on an equally spaced grid
/// `0 = t_0 < t_1 < … < t_n = T`.
///
/// Values are stored column-wise: `column(j)[i]` is `X_j(t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    times: Vec<f64>,
    columns: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl PathSample {
    pub fn new(times: Vec<f64>, columns: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 observation times, got {}",
                times.len()
            )));
        }
        if columns.is_empty() {
            return Err(contract("path needs at least one component"));
        }
        if labels.len() != columns.len() {
            return Err(contract(format!(
                "{} labels for {} components",
                labels.len(),
                columns.len()
            )));
        }
        if let Some((j, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != times.len()) {
            return Err(contract(format!(
                "component {j} has {} values for {} times",
                c.len(),
                times.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("non-finite observation time".into()));
        }
        for (j, c) in columns.iter().enumerate() {
            if let Some(i) = c.iter().position(|x| !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-finite value in component {} ({}) at row {i}",
                    j, labels[j]
                )));
            }
        }
        if times[0] != 0.0 {
            return Err(Error::Validation(format!(
                "observation grid must start at 0, starts at {}",
                times[0]
            )));
        }
        let n = times.len() - 1;
        let horizon = times[n];
        if horizon.is_nan() || horizon <= 0.0 {
            return Err(Error::Validation("observation horizon must be positive".into()));
        }
        let step = horizon / n as f64;
        for (i, &t) in times.iter().enumerate() {
            if (t - i as f64 * step).abs() > GRID_TOL * horizon {
                return Err(Error::Validation(format!(
                    "irregular grid: t[{i}] = {t}, expected {}",
                    i as f64 * step
                )));
            }
        }
        Ok(Self {
            times,
            columns,
            labels,
        })
    }

    /// Builds a sample on the grid `t_i = i * horizon / n` from columns of
    /// length `n + 1`, labelling components `x1, x2, …`.
    pub fn on_uniform_grid(horizon: f64, columns: Vec<Vec<f64>>) -> Result<Self> {
        let len = columns.first().map_or(0, Vec::len);
        if len < 2 {
            return Err(Error::InsufficientData("need at least 2 observations".into()));
        }
        let labels = (1..=columns.len()).map(|j| format!("x{j}")).collect();
        Self::new(uniform_grid(horizon, len - 1), columns, labels)
    }

    /// Number of increments `n`.
    pub fn n(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.n()]
    }

    pub fn step(&self) -> f64 {
        self.horizon() / self.n() as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `X_j(t_{i+1}) - X_j(t_i)` for `i = 0..n`.
    pub fn increments(&self, j: usize) -> Vec<f64> {
        self.columns[j].windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same observations re-timed onto `[0, 2π]`.
    pub fn rescaled_to_2pi(&self) -> Self {
        Self {
            times: uniform_grid(TAU, self.n()),
            columns: self.columns.clone(),
            labels: self.labels.clone(),
        }
    }

    pub(crate) fn check_on_2pi(&self) -> Result<()> {
        if (self.horizon() - TAU).abs() > GRID_TOL * TAU {
            return Err(contract(format!(
                "path must be rescaled to [0, 2π], horizon is {}",
                self.horizon()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_component(&self, j: usize) -> Result<()> {
        if j >= self.dim() {
            return Err(contract(format!(
                "component {j} out of range for dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `t_i = i * horizon / n`, `i = 0..=n`, with the last point exactly `horizon`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * horizon / n as f64).collect();
    times[n] = horizon;
    times
}

/// Estimated (or true) spot matrices at a sequence of times, with spectra.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpotMatrixSeries {
    times: Vec<f64>,
    matrices: Vec<SymMatrix>,
    spectra: Vec<Spectrum>,
}

impl SpotMatrixSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a matrix, computing its spectrum.
    pub fn push(&mut self, t: f64, m: SymMatrix) -> Result<()> {
        let spectrum = m.spectrum()?;
        self.push_with_spectrum(t, m, spectrum);
        Ok(())
    }

    pub fn push_with_spectrum(&mut self, t: f64, m: SymMatrix, spectrum: Spectrum) {
        self.times.push(t);
        self.matrices.push(m);
        self.spectra.push(spectrum);
    }

    pub fn from_matrices(times: Vec<f64>, matrices: Vec<SymMatrix>) -> Result<Self> {
        if times.len() != matrices.len() {
            return Err(contract("times and matrices differ in length"));
        }
        let spectra = matrices
            .iter()
            .map(SymMatrix::spectrum)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times,
            matrices,
            spectra,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn matrices(&self) -> &[SymMatrix] {
        &self.matrices
    }

    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &SymMatrix, &Spectrum)> {
        self.times
            .iter()
            .zip(&self.matrices)
            .zip(&self.spectra)
            .map(|((&t, m), s)| (t, m, s))
    }
}
