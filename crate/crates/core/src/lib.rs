//! Pseudo-spectral drift-diffusion simulation with nonlocal Lévy-type
//! diffusion on the periodic torus, together with a numerical harness for
//! the Littlewood–Paley estimates that govern its smoothing.
//!
//! The equation is `∂ₜθ + u·∇θ + 𝓛θ − εΔθ = f` on `[0, 2πL)^d`, `d ∈ {1, 2}`,
//! where `𝓛` has symbol `A(ξ) = ∫(1 − cos y·ξ)K(y) dy`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod config;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod littlewood_paley;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod spectral;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use harness::{run_preset, PresetOutcome, PRESETS};
pub use kernels::{
    apply_operator_quadrature, apply_operator_spectral, symbol_closed_form, symbol_for,
    symbol_from_kernel, symbol_lower_bound_fit, validate_kernel, KernelAudit, KernelForm,
    LevyKernelSpec, LowerBoundFit, RadialProfile, SymbolGrid,
};
pub use littlewood_paley::{
    bernstein_check, besov_norm, bony_commutator_decomposition, commutator_bound_check,
    holder_seminorm, project_block, BesovNormReport, BlockDecomposition, BonyTerms,
    DyadicPartition,
};
pub use quadrature::QuadratureConfig;
pub use report::{config_hash, linear_fit, CheckStatus, EstimateReport, RegressionFit};
pub use solver::{
    mollify_data, solve, step, vanishing_viscosity_sweep, ConvergenceReport, DriftSpec,
    ForcingSpec, InitialSpec, Solver, SolverConfig, Trajectory,
};
pub use spectral::{Dealiaser, Field, FieldSpectrum, Grid, VectorField};
