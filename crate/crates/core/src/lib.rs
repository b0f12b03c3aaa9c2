//! Riemann-sum approximation of integral functionals `∫_0^T h(X_t) dt` of Markov
//! processes: exact-law path simulation, coupled Monte Carlo error curves, and the
//! constants of the strong L2 error bound.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision.
//!
//! ```
//! use funcrate_core::{GridSpecF64, HolderFunctionF64, ProcessModelF64};
//! use funcrate_core::estimate::mse_curve;
//! use funcrate_core::theory::bm_linear_mse_oracle;
//!
//! let model = ProcessModelF64::brownian(1.0, vec![0.0]).unwrap();
//! let grid = GridSpecF64::new(1.0, 1 << 10, vec![4, 8, 16]).unwrap();
//! let h = HolderFunctionF64::linear(1.0, 0.0).unwrap();
//! let summary = mse_curve(&model, &grid, &h, 2000, 7).unwrap();
//! let row = summary.row(8).unwrap();
//! assert!((row.mse - bm_linear_mse_oracle(1.0, 8)).abs() < 5.0 * row.std_error + 1e-4);
//! ```

pub mod error;
pub mod estimate;
pub mod funcs;
pub mod model;
pub mod quad;
pub mod scalar;
pub mod simulate;
pub mod sum;
pub mod theory;

pub use error::{Error, Result};
pub use estimate::{mse_curve, moment_diagnostic, riemann_sum, ErrorRow, ErrorSummary, MomentDiagnostic};
pub use funcs::{empirical_holder_check, HolderFunction, HolderKind};
pub use model::{
    certificate_for, q_moment, transition_density, Certification, Coefficient, DensityBoundCertificate,
    ModelKind, ProcessModel, QKernel,
};
pub use scalar::Scalar;
pub use simulate::{simulate_path, subsample, GridSpec, Path, PathBatch};
pub use sum::NeumaierSum;
pub use theory::{c_gamma_alpha, d_constant, fit_rate, theoretical_bound, Branch, RateFit, TheoryBound};

pub type ProcessModelF64 = ProcessModel<f64>;
pub type ProcessModelF32 = ProcessModel<f32>;
pub type HolderFunctionF64 = HolderFunction<f64>;
pub type HolderFunctionF32 = HolderFunction<f32>;
pub type GridSpecF64 = GridSpec<f64>;
pub type GridSpecF32 = GridSpec<f32>;
pub type PathF64 = Path<f64>;
pub type PathF32 = Path<f32>;
pub type CertificateF64 = DensityBoundCertificate<f64>;
pub type CertificateF32 = DensityBoundCertificate<f32>;
pub type ErrorSummaryF64 = ErrorSummary<f64>;
pub type ErrorSummaryF32 = ErrorSummary<f32>;
pub type TheoryBoundF64 = TheoryBound<f64>;
pub type TheoryBoundF32 = TheoryBound<f32>;
