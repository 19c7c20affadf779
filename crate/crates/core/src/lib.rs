//! Observable purity and the sensitivity of simulated expectation values to
//! imperfections.
//!
//! The crate is organised bottom-up:
//! - [`operator`]: Hermitian operators, states, unitary evolution;
//! - [`spin`]: collective spins, LMG and transverse Ising Hamiltonians, observable families;
//! - [`ensemble`]: seeded Haar, spin-coherent, Dicke, GOE and local-field sampling;
//! - [`metrics`]: observable purity, diagonal ensembles, variation distance;
//! - [`static_error`]: perturbed-state errors and their Haar averages;
//! - [`dynamics`]: perturbed evolution, cumulative errors, asymptotic laws, λ fitting.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod operator;
pub mod spin;
pub mod static_error;
pub mod stats;
pub mod tolerance;

pub use dynamics::{DynamicsSetup, ErrorSeries, TimeGrid};
pub use ensemble::{PerturbationKind, PerturbationModel, SeedSpec, StateEnsemble};
pub use error::{Error, Result};
pub use metrics::{build_report, purity, DiagonalEnsemble, ObservableReport};
pub use operator::{
    eigendecompose, evolve, expectation, C64, ComplexMatrix, ComplexVector, DensityOperator,
    HermitianOperator, PureState, Spectrum,
};
pub use spin::{
    Axis, LmgParams, ObservableFamily, PauliFactor, Representation, SpinSystem, TimParams,
};
pub use stats::Estimate;
