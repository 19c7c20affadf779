//! Built-in oracle suite. Each check compares an implemented closed form with
//! an independent computation (sampling, exact identities or known values).

use std::fmt;

use purity_core::dynamics::{
    asymptotic_error_sq, fit_lambda, infidelity_model, run_state, DynamicsSetup, TimeGrid,
};
use purity_core::ensemble::{
    characteristic_f, empirical_f, goe_f_in_basis, haar_state, haar_unitary, local_field_f,
    DiagonalDistribution,
};
use purity_core::metrics::{variation_distance, DiagonalEnsemble};
use purity_core::spin::{
    collective_spin, lmg_hamiltonian, pauli_string, polarized_state, tim_hamiltonian,
};
use purity_core::static_error::{
    haar_average_delta_sq, haar_mixed_relative, relative_delta, MixedNoiseKind, MixedNoiseSpec,
};
use purity_core::stats::{par_map_indexed, Estimate};
use purity_core::dynamics::local_field_pair_f;
use purity_core::{
    build_report, purity, Axis, HermitianOperator, LmgParams, ObservableFamily, PauliFactor,
    PerturbationKind, PerturbationModel, Representation, Result, SeedSpec, SpinSystem, TimParams,
};

use crate::scenario::sigmas;
use crate::table::Table;

/// Closed forms that the suite must exercise.
pub const FORMULAS: [&str; 17] = [
    "haar-moment-p1",
    "haar-moment-p2",
    "haar-ipr-mean",
    "purity-closed-forms",
    "static-delta-sq",
    "static-relative",
    "depolarizing-relative",
    "orthogonal-mixture-relative",
    "goe-f",
    "gaussian-diagonal-f",
    "uniform-diagonal-f",
    "local-field-f",
    "asymptotic-haar",
    "asymptotic-double-sum",
    "infidelity-law",
    "first-order-delta",
    "variation-distance",
];

const SIGMAS: f64 = 3.0;

/// Deliberate faults for exercising the gates themselves.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Faults {
    /// Replaces the GOE off-diagonal variance (normally ½) in the f(τ) check.
    pub goe_offdiag_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub covers: Vec<&'static str>,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    /// Formulas from [`FORMULAS`] that no check exercised.
    pub fn uncovered(&self) -> Vec<&'static str> {
        FORMULAS
            .iter()
            .copied()
            .filter(|f| !self.checks.iter().any(|c| c.covers.contains(f)))
            .collect()
    }

    pub fn to_table(&self) -> crate::error::CliResult<Table> {
        let mut t = Table::new(&["check", "covers", "master_seed", "passed", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.as_str().into(),
                c.covers.join(";").into(),
                self.seed.into(),
                c.passed.into(),
                c.detail.as_str().into(),
            ])?;
        }
        Ok(t)
    }

    pub fn render(&self) -> String {
        let mut s: String = self.checks.iter().map(|c| format!("{c}\n")).collect();
        s.push_str("coverage:\n");
        for f in FORMULAS {
            let n = self.checks.iter().filter(|c| c.covers.contains(&f)).count();
            s.push_str(&format!("  [{}] {f}\n", if n > 0 { "x" } else { " " }));
        }
        s.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            self.failures()
        ));
        s
    }
}

pub fn run_validate(seed: u64, faults: Faults) -> ValidationReport {
    let root = SeedSpec::new(seed);
    let mut checks = Vec::new();
    type CheckFn = fn(&SeedSpec, &Faults) -> Result<Vec<Check>>;
    let suite: [(&str, &[&'static str], CheckFn); 13] = [
        ("haar-moments", &["haar-moment-p1", "haar-moment-p2"], haar_moments),
        ("haar-ipr", &["haar-ipr-mean"], haar_ipr),
        ("purity", &["purity-closed-forms"], purity_forms),
        ("static", &["static-delta-sq", "static-relative"], static_pure),
        ("mixed", &["depolarizing-relative", "orthogonal-mixture-relative"], static_mixed),
        ("goe-f", &["goe-f"], goe_f),
        ("diagonal-f", &["gaussian-diagonal-f", "uniform-diagonal-f"], diagonal_f),
        ("local-field-f", &["local-field-f"], local_fields),
        ("asymptotic", &["asymptotic-haar", "asymptotic-double-sum"], asymptotic),
        ("infidelity", &["infidelity-law"], infidelity),
        ("first-order", &["first-order-delta"], first_order),
        ("variation", &["variation-distance"], variation),
        ("fit", &[], synthetic_fit),
    ];
    for (k, (name, covers, f)) in suite.into_iter().enumerate() {
        match f(&root.child(k as u64), &faults) {
            Ok(cs) => checks.extend(cs),
            Err(e) => checks.push(Check {
                name: name.into(),
                covers: covers.to_vec(),
                passed: false,
                detail: format!("error: {e}"),
            }),
        }
    }
    ValidationReport { seed, checks }
}

fn check(name: impl Into<String>, covers: &[&'static str], passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        covers: covers.to_vec(),
        passed,
        detail,
    }
}

fn stat_check(name: String, covers: &[&'static str], est: &Estimate, target: f64) -> Check {
    let z = est.sigmas_from(target);
    check(
        name,
        covers,
        z <= SIGMAS,
        format!("{:.6e} ± {:.2e} vs {target:.6e} ({z:.2}σ)", est.mean, est.stderr),
    )
}

fn haar_moments(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, d) in [4usize, 16].into_iter().enumerate() {
        let s = seed.child(k as u64);
        let x: Vec<f64> = par_map_indexed(20_000, |i| {
            haar_unitary(&mut s.child(i as u64).rng(), d).map(|u| u[(0, 0)].norm_sqr())
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
        let df = d as f64;
        out.push(stat_check(format!("E|U11|^2 d={d}"), &["haar-moment-p1"], &Estimate::from_samples(&x), 1.0 / df));
        out.push(stat_check(
            format!("E|U11|^4 d={d}"),
            &["haar-moment-p2"],
            &Estimate::from_samples(&x2),
            2.0 / (df * (df + 1.0)),
        ));
    }
    Ok(out)
}

fn haar_ipr(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let h = lmg_hamiltonian(&LmgParams { field: 0.4, coupling: 1.0, particles: 15 }, Representation::Symmetric)?;
    let spectrum = h.spectrum()?;
    let s0: Vec<f64> = par_map_indexed(20_000, |i| -> Result<f64> {
        let psi = haar_state(&mut seed.child(i as u64).rng(), 16)?;
        Ok(DiagonalEnsemble::from_spectrum(spectrum, &psi)?.ipr)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(vec![stat_check("Haar mean S0 d=16".into(), &["haar-ipr-mean"], &Estimate::from_samples(&s0), 2.0 / 17.0)])
}

fn exact(name: String, got: f64, want: f64) -> Check {
    let err = (got - want).abs();
    check(name, &["purity-closed-forms"], err <= 1e-10, format!("{got:.12e} vs {want:.12e}"))
}

fn purity_forms(_: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let psi = haar_state(&mut SeedSpec::new(0).rng(), 8)?;
    out.push(exact("rank-1 projector".into(), purity(&HermitianOperator::projector(&psi))?, 1.0));
    for n in 2..=8usize {
        let axis = if n % 2 == 0 { Axis::Y } else { Axis::X };
        let factors: Vec<PauliFactor> = (1..=n).step_by(2).map(|site| PauliFactor { site, axis }).collect();
        let p = pauli_string(n, &factors)?;
        out.push(exact(format!("Pauli string N={n}"), purity(&p)?, 2f64.powi(-(n as i32 - 1))));
        let system = SpinSystem::full(n)?;
        for k in [1, n] {
            let proj = ObservableFamily::PartitionProjector { k }.build(&system)?;
            out.push(exact(format!("partition k={k} N={n}"), purity(&proj)?, 2f64.powi(k as i32 - n as i32)));
        }
        let sz = collective_spin(&system, Axis::Z)?;
        let nf = n as f64;
        out.push(exact(format!("magnetization N={n}"), purity(&sz)?, (nf + 1.0) / nf * 2f64.powi(-(n as i32))));
    }
    Ok(out)
}

fn lmg_observables() -> Result<Vec<(String, HermitianOperator)>> {
    let system = SpinSystem::symmetric(15)?;
    ["sz^2", "sx^6", "proj-sx:1/2"]
        .iter()
        .map(|d| {
            let fam: ObservableFamily = d.parse()?;
            Ok((d.to_string(), fam.build(&system)?))
        })
        .collect()
}

fn static_pure(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let gamma = 0.2;
    let mut cases = lmg_observables()?;
    // d = 2: the smallest dimension, where d² - 1 = 3
    cases.push(("sz (d=2)".into(), collective_spin(&SpinSystem::symmetric(1)?, Axis::Z)?));
    for (k, (label, a)) in cases.iter().enumerate() {
        let est = haar_average_delta_sq(a, gamma, 4000, &seed.child(k as u64))?;
        out.push(stat_check(format!("mean δ² {label}"), &["static-delta-sq"], &est.delta_sq, est.analytic_delta_sq));
        out.push(stat_check(format!("mean δ {label}"), &["static-delta-sq"], &est.delta, 0.0));
        let report = build_report(label.clone(), a, None)?;
        let rel = relative_delta(&report, gamma);
        let from_sq = est.analytic_delta_sq.sqrt() / report.haar_mean();
        out.push(check(
            format!("δ_rel closed form {label}"),
            &["static-relative"],
            (rel - from_sq).abs() <= 1e-12 * from_sq.max(1.0),
            format!("{rel:.12e} vs {from_sq:.12e}"),
        ));
    }
    Ok(out)
}

fn static_mixed(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, (label, a)) in lmg_observables()?.iter().enumerate() {
        for (j, (kind, covers)) in [
            (MixedNoiseKind::Depolarizing, "depolarizing-relative"),
            (MixedNoiseKind::OrthogonalMixture, "orthogonal-mixture-relative"),
        ]
        .into_iter()
        .enumerate()
        {
            let spec = MixedNoiseSpec::new(kind, 0.1)?;
            let est = haar_mixed_relative(a, &spec, 4000, &seed.child(k as u64).child(j as u64))?;
            let z = sigmas(est.value, est.analytic, est.stderr);
            out.push(check(
                format!("{covers} {label}"),
                &[covers],
                z <= SIGMAS,
                format!("{:.6e} ± {:.2e} vs {:.6e} ({z:.2}σ)", est.value, est.stderr, est.analytic),
            ));
        }
    }
    Ok(out)
}

fn f_checks(name: &str, covers: &'static str, taus: &[f64], est: &purity_core::ensemble::EmpiricalF, exact: &[f64]) -> Vec<Check> {
    taus.iter()
        .enumerate()
        .map(|(k, tau)| {
            let z = sigmas(est.mean[k], exact[k], est.stderr[k]);
            check(
                format!("{name} τ={tau}"),
                &[covers],
                z <= SIGMAS,
                format!("{:.6e} ± {:.2e} vs {:.6e} ({z:.2}σ)", est.mean[k], est.stderr[k], exact[k]),
            )
        })
        .collect()
}

fn goe_f(seed: &SeedSpec, faults: &Faults) -> Result<Vec<Check>> {
    // diagonal elements are taken in the LMG eigenbasis, where the GOE
    // convention matters
    let h = lmg_hamiltonian(&LmgParams { field: 0.4, coupling: 1.0, particles: 15 }, Representation::Symmetric)?;
    let taus = [0.5, 1.0, 1.5];
    let off = faults.goe_offdiag_variance.unwrap_or(0.5);
    let est = goe_f_in_basis(&h.spectrum()?.vectors, &taus, 5000, seed, 1.0, off)?;
    let exact: Vec<f64> = taus
        .iter()
        .map(|&t| characteristic_f(&PerturbationKind::Goe, t))
        .collect::<Result<_>>()?;
    Ok(f_checks("GOE f", "goe-f", &taus, &est, &exact))
}

fn diagonal_f(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let taus = [0.5, 1.0, 2.0];
    let d = 8;
    for (k, (dist, covers)) in [
        (DiagonalDistribution::Gaussian { sigma: 0.7 }, "gaussian-diagonal-f"),
        (DiagonalDistribution::Uniform { half_width: 1.3 }, "uniform-diagonal-f"),
    ]
    .into_iter()
    .enumerate()
    {
        let kind = PerturbationKind::CustomDiagonal(dist);
        let model = PerturbationModel::new(kind, 1.0)?;
        let system = SpinSystem::symmetric(d - 1)?;
        let est = empirical_f(&seed.child(k as u64), &taus, 5000, |rng| {
            let v = model.sample(rng, &system)?;
            Ok(v.matrix().diagonal().iter().map(|z| z.re).collect())
        })?;
        let exact: Vec<f64> = taus.iter().map(|&t| characteristic_f(&kind, t)).collect::<Result<_>>()?;
        out.extend(f_checks(&kind.to_string(), covers, &taus, &est, &exact));
    }
    Ok(out)
}

fn local_fields(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let system = SpinSystem::full(4)?;
    let h = tim_hamiltonian(&TimParams { field: 0.33, coupling: 1.0, particles: 4 })?;
    let spectrum = h.spectrum()?;
    let taus = [0.25, 1.0, 3.0];
    let exact = local_field_pair_f(&system, spectrum, &taus)?;
    let est = local_field_f(&system, spectrum, &taus, 5000, seed)?;
    Ok(f_checks("local-field f", "local-field-f", &taus, &est, &exact))
}

fn asymptotic(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    // Haar average of the double sum Σ_{n≠m} p_n p_m |A_nm|² is exactly
    // d/(d+1)(η - η_D)(Tr A_s/d)²
    let mut out = Vec::new();
    let n = 6;
    let system = SpinSystem::symmetric(n)?;
    let h = lmg_hamiltonian(&LmgParams { field: 0.4, coupling: 1.0, particles: n }, Representation::Symmetric)?;
    let spectrum = h.spectrum()?;
    let u = &spectrum.vectors;
    for (k, d) in ["sx", "sz^2", "proj-sx:1"].iter().enumerate() {
        let fam: ObservableFamily = d.parse()?;
        let a = fam.build(&system)?;
        let report = build_report(*d, &a, Some(&h))?;
        let in_basis = u.adjoint() * a.matrix() * u;
        let norm = report.haar_mean();
        let s = seed.child(k as u64);
        let samples: Vec<f64> = par_map_indexed(20_000, |i| -> Result<f64> {
            let psi = haar_state(&mut s.child(i as u64).rng(), system.dim())?;
            let pops = DiagonalEnsemble::from_spectrum(spectrum, &psi)?.populations;
            Ok(asymptotic_error_sq(&in_basis, &pops) / (norm * norm))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let predicted = purity_core::dynamics::asymptotic_haar_error(&report)?.powi(2);
        out.push(stat_check(
            format!("Haar mean 𝓔∞² {d}"),
            &["asymptotic-haar", "asymptotic-double-sum"],
            &Estimate::from_samples(&samples),
            predicted,
        ));
    }
    Ok(out)
}

fn infidelity(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let n = 15;
    let system = SpinSystem::symmetric(n)?;
    let h = lmg_hamiltonian(&LmgParams { field: 0.4, coupling: 1.0, particles: n }, Representation::Symmetric)?;
    let a = collective_spin(&system, Axis::X)?;
    let report = build_report("sx", &a, Some(&h))?;
    // the law neglects corrections of relative order λ/gap, so λ is kept well
    // below the smallest LMG gaps
    let lambda = 0.002;
    let setup = DynamicsSetup::new(
        system,
        h,
        PerturbationModel::new(PerturbationKind::Goe, lambda)?,
        50,
        TimeGrid::new(1.0 / lambda, 10)?,
        vec![report],
    )?;
    let psi = polarized_state(&system, Axis::X, false)?;
    let run = run_state(&setup, &psi, 0, seed)?;
    let inf = &run.infidelity;
    let worst = (0..inf.times.len())
        .map(|k| sigmas(inf.exact[k], inf.analytic[k], inf.stderr[k]))
        .fold(0.0, f64::max);
    Ok(vec![check(
        "infidelity (1-f)(1-S0), λt ≤ 1",
        &["infidelity-law"],
        worst <= SIGMAS,
        format!("max deviation {worst:.2}σ over {} times", inf.times.len()),
    )])
}

fn first_order(seed: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    // H and V commute, so the first-order law holds exactly
    let system = SpinSystem::symmetric(5)?;
    let sz = collective_spin(&system, Axis::Z)?;
    let h = sz.scaled(-0.8).add_scaled(&sz.power(2)?, 0.37)?;
    let a = collective_spin(&system, Axis::X)?;
    let report = build_report("sx", &a, Some(&h))?;
    let kind = PerturbationKind::CustomDiagonal(DiagonalDistribution::Gaussian { sigma: 1.0 });
    let setup = DynamicsSetup::new(
        system,
        h,
        PerturbationModel::new(kind, 0.05)?,
        2000,
        TimeGrid::new(60.0, 30)?,
        vec![report],
    )?;
    let psi = polarized_state(&system, Axis::X, false)?;
    let run = run_state(&setup, &psi, 0, seed)?;
    let s = &run.series[0];
    let worst = (0..s.times.len())
        .map(|k| sigmas(s.delta[k], s.analytic_delta[k], s.delta_stderr[k]))
        .fold(0.0, f64::max);
    Ok(vec![check(
        "δ(t) = (1-f)(⟨A(t)⟩ - Tr ρ_D A), commuting noise",
        &["first-order-delta"],
        worst <= SIGMAS,
        format!("max deviation {worst:.2}σ"),
    )])
}

fn variation(_: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let cases = [
        (vec![1.0, 0.0], vec![0.0, 1.0], 1.0),
        (vec![0.5, 0.5], vec![0.75, 0.25], 0.25),
        (vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5], 0.0),
    ];
    cases
        .iter()
        .map(|(p, q, want)| {
            let got = variation_distance(p, q)?;
            Ok(check(
                format!("D_V({p:?}, {q:?})"),
                &["variation-distance"],
                (got - want).abs() < 1e-15,
                format!("{got} vs {want}"),
            ))
        })
        .collect()
}

fn synthetic_fit(_: &SeedSpec, _: &Faults) -> Result<Vec<Check>> {
    let times: Vec<f64> = (0..=300).map(|k| k as f64).collect();
    let data: Vec<f64> = times.iter().map(|&t| infidelity_model(0.01, 0.17, t)).collect();
    let fit = fit_lambda(&times, &data, 0.17)?;
    Ok(vec![check(
        "λ from noiseless infidelity",
        &[],
        (fit.lambda - 0.01).abs() <= 1e-6,
        format!("λ = {:.9}", fit.lambda),
    )])
}
