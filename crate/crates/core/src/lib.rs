//! Spot estimation of the eigenvalues of a multivariate volatility matrix
//! from discretely observed prices.

pub mod eig;
pub mod error;
pub mod experiment;
pub mod fourier1;
pub mod fourier2;
pub mod io;
pub mod kernel;
pub mod method;
pub mod metrics;
pub mod qv;
pub mod sample;
pub mod sim;

pub use eig::{eigenvalues_sym, Spectrum, SymMatrix};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentSpec};
pub use kernel::{FourierFit, Kernel};
pub use method::{estimate_path, KernelChoice, MethodSpec};
pub use sample::{PathSample, SpotMatrixSeries};
