//! Fixed numerical tolerances.
//!
//! These are correctness contracts of the library, not tuning knobs; none of
//! them is configurable at runtime.

/// Max absolute deviation |A_ij - conj(A_ji)| accepted for a Hermitian operator.
pub const HERMITIAN: f64 = 1e-10;

/// Max entry of U diag(E) U† - A after a spectral decomposition.
pub const RECONSTRUCTION: f64 = 1e-9;

/// Max entry of U†U - I for eigenvector matrices and sampled unitaries.
pub const UNITARY: f64 = 1e-10;

/// Accepted |‖ψ‖² - 1| for a pure state.
pub const STATE_NORM: f64 = 1e-12;

/// Accepted |⟨ψ|ψ⊥⟩| for orthogonal companions.
pub const ORTHOGONALITY: f64 = 1e-12;

/// Imaginary part of ⟨ψ|A|ψ⟩ above which the operator is considered corrupted.
pub const EXPECTATION_IMAGINARY: f64 = 1e-8;

/// Density operators: Hermiticity, unit trace and eigenvalue floor.
pub const DENSITY: f64 = 1e-10;

/// Eigenvalues within this distance of the minimum are clamped to zero after a shift.
pub const SHIFT_CLAMP: f64 = 1e-10;

/// Spectral gaps below this are reported as degeneracies.
pub const DEGENERATE_GAP: f64 = 1e-10;

/// Gap differences below this are reported as gap collisions (resonances).
pub const GAP_COLLISION: f64 = 1e-8;

/// Normalization slack accepted by the variation distance.
pub const PROBABILITY_SUM: f64 = 1e-8;

/// Components with modulus below this are skipped when fixing eigenvector phases.
pub const PHASE_PIVOT: f64 = 1e-8;
