//! Fixtures shared by the benchmarks.

use purity_core::ensemble::sample_goe;
use purity_core::spin::{collective_spin, lmg_hamiltonian};
use purity_core::{
    build_report, Axis, DynamicsSetup, HermitianOperator, LmgParams, PerturbationKind, PerturbationModel,
    Representation, Result, SeedSpec, SpinSystem, TimeGrid,
};

/// A dense real symmetric matrix of dimension `d` with no special structure.
pub fn random_hermitian(d: usize, seed: u64) -> HermitianOperator {
    sample_goe(&mut SeedSpec::new(seed).rng(), d)
}

/// LMG at B = 0.4Λ in the symmetric subspace, GOE noise with λ = 0.01 and
/// S_x as the observable.
pub fn lmg_setup(particles: usize, instances: usize, t_max: f64, steps: usize) -> Result<DynamicsSetup> {
    let system = SpinSystem::symmetric(particles)?;
    let h = lmg_hamiltonian(
        &LmgParams {
            field: 0.4,
            coupling: 1.0,
            particles,
        },
        Representation::Symmetric,
    )?;
    let sx = collective_spin(&system, Axis::X)?;
    let report = build_report("sx", &sx, Some(&h))?;
    DynamicsSetup::new(
        system,
        h,
        PerturbationModel::new(PerturbationKind::Goe, 0.01)?,
        instances,
        TimeGrid::new(t_max, steps)?,
        vec![report],
    )
}
