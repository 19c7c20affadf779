mod common;

use common::*;
use purity_core::dynamics::local_field_pair_f;
use purity_core::ensemble::{
    characteristic_f, dicke_state, empirical_f, haar_state, haar_unitary, local_field_f, orthogonal_companion,
    sample_goe, spin_coherent_state,
};
use purity_core::metrics::diagonal_purity;
use purity_core::operator::{expectation, unitarity_deviation};
use purity_core::spin::{collective_spin, tim_hamiltonian};
use purity_core::stats::{par_map_indexed, Estimate};
use purity_core::*;

fn u11_moments(d: usize, n: usize, seed: u64, left: Option<&ComplexMatrix>) -> (Estimate, Estimate) {
    let seed = SeedSpec::new(seed);
    let samples = par_map_indexed(n, |i| {
        let mut u = haar_unitary(&mut seed.child(i as u64).rng(), d).unwrap();
        if let Some(w) = left {
            u = w * u;
        }
        u[(0, 0)].norm_sqr()
    });
    let fourth: Vec<f64> = samples.iter().map(|x| x * x).collect();
    (Estimate::from_samples(&samples), Estimate::from_samples(&fourth))
}

#[test]
fn haar_unitaries_are_unitary() {
    let mut rng = SeedSpec::new(1).rng();
    for d in [2, 5, 32] {
        let u = haar_unitary(&mut rng, d).unwrap();
        assert!(unitarity_deviation(&u) < 1e-12);
    }
}

#[test]
fn haar_second_and_fourth_moments() {
    for d in [4usize, 16] {
        let (m2, m4) = u11_moments(d, 20_000, 3, None);
        let df = d as f64;
        assert!(m2.within_sigmas(1.0 / df, 3.0), "d={d}: {m2:?}");
        assert!(m4.within_sigmas(2.0 / (df * (df + 1.0)), 3.0), "d={d}: {m4:?}");
    }
}

#[test]
fn haar_measure_is_left_invariant() {
    let d = 4;
    let w = haar_unitary(&mut SeedSpec::new(99).rng(), d).unwrap();
    let (m2, m4) = u11_moments(d, 20_000, 4, Some(&w));
    assert!(m2.within_sigmas(0.25, 3.0));
    assert!(m4.within_sigmas(2.0 / 20.0, 3.0));
}

#[test]
fn haar_states_have_uniform_populations() {
    let d = 8;
    let seed = SeedSpec::new(5);
    let first: Vec<f64> = (0..20_000)
        .map(|i| haar_state(&mut seed.child(i).rng(), d).unwrap().populations()[0])
        .collect();
    // |ψ_0|² is Beta(1, d-1): P(x < p) = 1 - (1-p)^{d-1}, so (1-x)^{d-1} is uniform
    let transformed: Vec<f64> = first.iter().map(|x| (1.0 - x).powi(d as i32 - 1)).collect();
    let ks = ks_uniform(transformed, 0.0, 1.0);
    assert!(ks < 1.63 / (20_000f64).sqrt(), "KS = {ks}");
}

#[test]
fn orthogonal_companions_are_orthonormal() {
    let seed = SeedSpec::new(6);
    for i in 0..50 {
        let mut rng = seed.child(i).rng();
        let psi = haar_state(&mut rng, 7).unwrap();
        let perp = orthogonal_companion(&mut rng, &psi).unwrap();
        assert!(psi.inner(&perp).unwrap().norm() < 1e-12);
        assert!((perp.amplitudes().norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn spin_coherent_states_cover_the_sphere_uniformly() {
    let n = 6;
    let system = SpinSystem::symmetric(n).unwrap();
    let sz = collective_spin(&system, Axis::Z).unwrap();
    let sx = collective_spin(&system, Axis::X).unwrap();
    let sy = collective_spin(&system, Axis::Y).unwrap();
    let seed = SeedSpec::new(8);
    let count = 5000;
    let mut cos_theta = Vec::with_capacity(count);
    for i in 0..count {
        let psi = spin_coherent_state(&mut seed.child(i as u64).rng(), &system).unwrap();
        let z = expectation(&sz, &psi).unwrap() / (n as f64 / 2.0);
        let x = expectation(&sx, &psi).unwrap() / (n as f64 / 2.0);
        let y = expectation(&sy, &psi).unwrap() / (n as f64 / 2.0);
        // coherent states saturate |⟨S⟩| = s
        assert!((x * x + y * y + z * z - 1.0).abs() < 1e-10);
        cos_theta.push(z);
    }
    let ks = ks_uniform(cos_theta, -1.0, 1.0);
    assert!(ks < 1.63 / (count as f64).sqrt(), "KS = {ks}");
}

#[test]
fn dicke_states_are_sz_eigenstates() {
    let system = SpinSystem::symmetric(5).unwrap();
    let sz = collective_spin(&system, Axis::Z).unwrap();
    let seed = SeedSpec::new(9);
    for i in 0..20 {
        let psi = dicke_state(&mut seed.child(i).rng(), &system).unwrap();
        let m = expectation(&sz, &psi).unwrap();
        let m2 = expectation(&sz.power(2).unwrap(), &psi).unwrap();
        assert!((m2 - m * m).abs() < 1e-12);
    }
}

#[test]
fn goe_element_variances() {
    let d = 6;
    let seed = SeedSpec::new(10);
    let draws: Vec<HermitianOperator> = (0..20_000)
        .map(|i| sample_goe(&mut seed.child(i).rng(), d))
        .collect();
    let diag: Vec<f64> = draws.iter().map(|v| v.matrix()[(2, 2)].re.powi(2)).collect();
    let off: Vec<f64> = draws.iter().map(|v| v.matrix()[(1, 4)].re.powi(2)).collect();
    assert!(Estimate::from_samples(&diag).within_sigmas(1.0, 3.0));
    assert!(Estimate::from_samples(&off).within_sigmas(0.5, 3.0));
    assert!(draws.iter().all(|v| v.is_real()));
}

#[test]
fn goe_characteristic_function_in_a_rotated_basis() {
    // GOE diagonal elements have unit variance in any real orthogonal basis,
    // so f(1) = e^{-1} regardless of the Hamiltonian
    let h = tim_hamiltonian(&TimParams { field: 0.33, coupling: 1.0, particles: 4 }).unwrap();
    let spectrum = h.spectrum().unwrap();
    let taus = [0.0, 0.5, 1.0, 2.0];
    let seed = SeedSpec::new(12);
    let est = empirical_f(&seed, &taus, 20_000, |rng| {
        spectrum.diagonal_elements(sample_goe(rng, 16).matrix())
    })
    .unwrap();
    for (k, &tau) in taus.iter().enumerate() {
        let exact = characteristic_f(&PerturbationKind::Goe, tau).unwrap();
        let tol = 3.0 * est.stderr[k] + 1e-12;
        assert!((est.mean[k] - exact).abs() <= tol, "τ={tau}: {} vs {exact}", est.mean[k]);
    }
}

#[test]
fn local_field_f_closed_form_matches_sampling() {
    let system = SpinSystem::full(4).unwrap();
    let h = tim_hamiltonian(&TimParams { field: 0.33, coupling: 1.0, particles: 4 }).unwrap();
    let spectrum = h.spectrum().unwrap();
    let taus = [0.25, 1.0, 3.0];
    let exact = local_field_pair_f(&system, spectrum, &taus).unwrap();
    let mc = local_field_f(&system, spectrum, &taus, 20_000, &SeedSpec::new(13)).unwrap();
    for k in 0..taus.len() {
        assert!(
            (mc.mean[k] - exact[k]).abs() <= 3.0 * mc.stderr[k] + 1e-12,
            "τ={}: {} vs {}",
            taus[k],
            mc.mean[k],
            exact[k]
        );
    }
}

#[test]
fn rotated_hamiltonians_have_small_diagonal_purity() {
    // H with eigenbasis drawn from the Haar measure: η_D concentrates near 2/(d+1)
    let d = 32;
    let system = SpinSystem::full(5).unwrap();
    let a = ObservableFamily::PartitionProjector { k: 5 }.build(&system).unwrap();
    let seed = SeedSpec::new(14);
    for i in 0..10 {
        let u = haar_unitary(&mut seed.child(i).rng(), d).unwrap();
        let values: Vec<f64> = (0..d).map(|k| k as f64).collect();
        let h = HermitianOperator::from_diagonal(&values).unwrap().conjugated(&u).unwrap();
        let eta_d = diagonal_purity(&a, h.spectrum().unwrap()).unwrap();
        assert!(eta_d < 3.0 / d as f64, "η_D = {eta_d}");
    }
}
