//! Small dense symmetric matrices and their spectra.
//!
//! The eigensolver is a cyclic Jacobi iteration. Dimensions here are tiny
//! (a handful of assets), so robustness and accuracy on near-zero
//! eigenvalues matter more than asymptotic cost.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Relative convergence tolerance used when callers have no better choice.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Number of full Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// A real symmetric matrix stored densely in row-major order.
///
/// Every write goes to both `(i, j)` and `(j, i)`, so the stored matrix is
/// exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be positive");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` for `i <= j` only.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from square rows, reading the diagonal and upper
    /// triangle; the strict lower triangle is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(contract("matrix must have at least one row"));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(contract("matrix rows must be square"));
        }
        Ok(Self::from_upper_fn(dim, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    /// Sum of absolute entry-wise differences, over the full matrix.
    pub fn entrywise_l1_distance(&self, other: &SymMatrix) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Eigenvalues with the default relative tolerance.
    pub fn spectrum(&self) -> Result<Spectrum> {
        eigenvalues_sym(self, DEFAULT_TOL)
    }
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts `values` descending. NaNs are rejected.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(contract("spectrum contains NaN"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Eigenvalues of `m` by cyclic Jacobi rotations, sorted descending.
///
/// Iteration stops once every off-diagonal entry of the rotated matrix is at
/// most `tol * ‖m‖_F`.
pub fn eigenvalues_sym(m: &SymMatrix, tol: f64) -> Result<Spectrum> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(contract(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.dim();
    let mut a = m.rows();
    let threshold = tol * m.frobenius_norm();

    let max_off = |a: &Vec<Vec<f64>>| {
        let mut worst = 0.0_f64;
        for (p, row) in a.iter().enumerate() {
            for &x in &row[p + 1..] {
                worst = worst.max(x.abs());
            }
        }
        worst
    };

    let mut sweeps = 0;
    loop {
        let off = max_off(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::IterationLimit {
                sweeps,
                residual: off,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= threshold {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                // signum(0) is +1 for f64, which picks the 45 degree rotation.
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (lo, hi) = a.split_at_mut(q);
                for (apk, aqk) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (x, y) = (*apk, *aqk);
                    *apk = c * x - s * y;
                    *aqk = s * x + c * y;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
        sweeps += 1;
    }

    Spectrum::from_unsorted((0..n).map(|i| a[i][i]).collect())
}

/// Frobenius norm of `a - b`, i.e. `sqrt(tr((A - B)^2))`.
///
/// By the Hoffman–Wielandt inequality this bounds the ℓ₂ distance between
/// the sorted spectra of `a` and `b`.
pub fn hoffman_wielandt_gap(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `Σ_i |a_i - b_i|` for two spectra sorted in the same order.
pub fn spectrum_l1_distance(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    if a.len() != b.len() {
        return Err(contract(format!(
            "spectrum lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .sum())
}

fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(contract(format!(
            "matrix dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}
