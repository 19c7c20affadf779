mod common;

use common::*;
use purity_core::operator::{commutator, evolve};
use purity_core::spin::{
    self, collective_spin, lmg_hamiltonian, pauli_string, polarized_state, product_state,
    project_to_symmetric, tim_hamiltonian,
};
use purity_core::*;

#[test]
fn tim_matches_kronecker_sum() {
    let (n, h, j) = (5, 0.7, 1.3);
    let ham = tim_hamiltonian(&TimParams { field: h, coupling: j, particles: n }).unwrap();
    let d = 1 << n;
    let mut expected = ComplexMatrix::zeros(d, d);
    for i in 1..=n {
        expected -= site_op(n, i, 'x') * c(h / 2.0, 0.0);
    }
    for i in 1..n {
        expected -= site_op(n, i, 'z') * site_op(n, i + 1, 'z') * c(j / 4.0, 0.0);
    }
    assert!(max_diff(ham.matrix(), &expected) < 1e-14);
}

#[test]
fn pauli_strings_match_kronecker_products() {
    let n = 4;
    let cases: [&[(usize, char)]; 4] = [
        &[(1, 'x')],
        &[(2, 'y'), (3, 'z')],
        &[(4, 'y'), (1, 'x'), (3, 'y')],
        &[(1, 'z'), (2, 'z'), (3, 'x'), (4, 'y')],
    ];
    for case in cases {
        let factors: Vec<PauliFactor> = case
            .iter()
            .map(|&(site, a)| PauliFactor {
                site,
                axis: match a {
                    'x' => Axis::X,
                    'y' => Axis::Y,
                    _ => Axis::Z,
                },
            })
            .collect();
        let got = pauli_string(n, &factors).unwrap();
        let singles: Vec<ComplexMatrix> = (1..=n)
            .map(|s| {
                case.iter()
                    .find(|f| f.0 == s)
                    .map(|f| pauli(f.1))
                    .unwrap_or_else(|| pauli('i'))
            })
            .collect();
        assert!(max_diff(got.matrix(), &kron_chain(&singles)) < 1e-15, "{case:?}");
    }
}

#[test]
fn full_space_collective_spin_matches_kronecker_sum() {
    let system = SpinSystem::full(4).unwrap();
    for (axis, a) in [(Axis::X, 'x'), (Axis::Y, 'y'), (Axis::Z, 'z')] {
        let s = collective_spin(&system, axis).unwrap();
        assert!(max_diff(s.matrix(), &collective(4, a)) < 1e-15);
    }
}

#[test]
fn symmetric_lmg_is_the_projected_full_space_model() {
    for n in 2..=10 {
        let p = LmgParams { field: 0.4, coupling: 1.0, particles: n };
        let full = lmg_hamiltonian(&p, Representation::Full).unwrap();
        let sym = lmg_hamiltonian(&p, Representation::Symmetric).unwrap();
        let projected = project_to_symmetric(&full, n).unwrap();
        assert!(max_diff(projected.matrix(), sym.matrix()) < 1e-12, "N = {n}");

        if n <= 6 {
            let sx = collective(n, 'x');
            let sy = collective(n, 'y');
            let sz = collective(n, 'z');
            let s2 = &sx * &sx + &sy * &sy + &sz * &sz;
            let comm = commutator(full.matrix(), &s2).unwrap();
            assert!(comm.iter().all(|z| z.norm() < 1e-12), "N = {n}");
        }
    }
}

#[test]
fn symmetric_spectrum_is_contained_in_full_spectrum() {
    let n = 8;
    let p = LmgParams { field: 0.4, coupling: 1.0, particles: n };
    let full = lmg_hamiltonian(&p, Representation::Full).unwrap();
    let sym = lmg_hamiltonian(&p, Representation::Symmetric).unwrap();
    let full_values = jacobi_eigenvalues(&full.matrix().map(|z| z.re));
    for e in jacobi_eigenvalues(&sym.matrix().map(|z| z.re)) {
        assert!(full_values.iter().any(|f| (f - e).abs() < 1e-9), "{e} missing");
    }
}

#[test]
fn eigenvalues_agree_with_jacobi() {
    let p = LmgParams { field: 1.5, coupling: 1.0, particles: 20 };
    let h = lmg_hamiltonian(&p, Representation::Symmetric).unwrap();
    let ours = h.eigenvalues().unwrap();
    let reference = jacobi_eigenvalues(&h.matrix().map(|z| z.re));
    for (a, b) in ours.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn evolution_matches_step_doubled_rk4() {
    let p = LmgParams { field: 0.4, coupling: 1.0, particles: 15 };
    let h = lmg_hamiltonian(&p, Representation::Symmetric).unwrap();
    let system = SpinSystem::symmetric(15).unwrap();
    let psi0 = polarized_state(&system, Axis::X, false).unwrap();
    let t = 30.0;
    let coarse = rk4(h.matrix(), psi0.amplitudes(), t, 30_000);
    let fine = rk4(h.matrix(), psi0.amplitudes(), t, 60_000);
    // RK4 error drops by 16 when the step halves; the difference bounds it
    let rk_error = (&coarse - &fine).norm();
    assert!(rk_error < 1e-9, "RK4 not converged: {rk_error}");
    let exact = evolve(&h, &psi0, t).unwrap();
    assert!((exact.amplitudes() - &fine).norm() < 1e-8);
}

#[test]
fn evolution_matches_taylor_exponential() {
    let mut rng = SeedSpec::new(11).rng();
    let v = purity_core::ensemble::haar_unitary(&mut rng, 6).unwrap();
    let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        6,
        [0.3, -1.2, 2.5, 0.0, 0.7, -0.4].map(|x| c(x, 0.0)),
    ));
    let h = HermitianOperator::new(&v * diag * v.adjoint()).unwrap();
    let psi0 = PureState::basis(6, 2).unwrap();
    for t in [0.0, 0.5, 3.0, 17.0] {
        let expected = expm_minus_i(h.matrix(), t) * psi0.amplitudes();
        let got = evolve(&h, &psi0, t).unwrap();
        assert!((got.amplitudes() - expected).norm() < 1e-10, "t = {t}");
    }
}

#[test]
fn product_states_are_global_rotations() {
    // exp(-iθ n̂·S)|↑_x⟩^{⊗N} equals the product of single-spin rotations
    let n = 5;
    let system = SpinSystem::symmetric(n).unwrap();
    let (theta, axis) = (1.234, [0.3f64, -0.5, 0.8]);
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [nx, ny, nz] = axis.map(|x| x / norm);
    let sx = collective_spin(&system, Axis::X).unwrap();
    let sy = collective_spin(&system, Axis::Y).unwrap();
    let sz = collective_spin(&system, Axis::Z).unwrap();
    let gen = sx.matrix() * c(nx, 0.0) + sy.matrix() * c(ny, 0.0) + sz.matrix() * c(nz, 0.0);
    let start = polarized_state(&system, Axis::X, true).unwrap();
    let rotated = expm_minus_i(&gen, theta) * start.amplitudes();

    let single = (pauli('x') * c(nx, 0.0) + pauli('y') * c(ny, 0.0) + pauli('z') * c(nz, 0.0)) * c(0.5, 0.0);
    let up_x = ComplexVector::from_vec(vec![c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0)]);
    let u_up = expm_minus_i(&single, theta) * up_x;
    let product = product_state(&system, u_up[0], u_up[1]).unwrap();
    assert!((overlap_sq(&rotated, product.amplitudes()) - 1.0).abs() < 1e-12);
}

#[test]
fn product_states_agree_between_representations() {
    let n = 6;
    let (up, down) = (c(0.3, 0.4), c(-0.2, 0.7));
    let sym = product_state(&SpinSystem::symmetric(n).unwrap(), up, down).unwrap();
    let full = product_state(&SpinSystem::full(n).unwrap(), up, down).unwrap();
    let embed = spin::symmetric_embedding(n).unwrap();
    let lifted = &embed * sym.amplitudes();
    assert!((overlap_sq(&lifted, full.amplitudes()) - 1.0).abs() < 1e-12);
}

#[test]
fn polarized_states_are_extremal_eigenvectors() {
    for (axis, a) in [(Axis::X, 'x'), (Axis::Y, 'y'), (Axis::Z, 'z')] {
        let n = 4;
        let psi = polarized_state(&SpinSystem::full(n).unwrap(), axis, false).unwrap();
        let s = collective(n, a);
        let image = &s * psi.amplitudes();
        assert!((image + psi.amplitudes() * c(n as f64 / 2.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn even_powers_of_sx_grow_more_pure() {
    let system = SpinSystem::symmetric(15).unwrap();
    let mut last = 0.0;
    for k in 1..=5 {
        let op = ObservableFamily::SpinPower { axis: Axis::X, power: 2 * k }
            .build(&system)
            .unwrap();
        let eta = purity(&op).unwrap();
        assert!(eta > last, "k = {k}: {eta} <= {last}");
        last = eta;
    }
}
