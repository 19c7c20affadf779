//! Dynamical error model: the ideal evolution e^{-iHt}ψ₀ against exact
//! evolution under H + λV averaged over perturbation draws, the first-order
//! prediction δ(A,t) ≈ (1 - f(λt))(⟨A(t)⟩ - Tr(ρ_D A)), infidelity, cumulative
//! RMS errors, their long-time limits and the λ fit to an infidelity curve.

use crate::ensemble::{
    characteristic_f, local_field_couplings, PerturbationKind, PerturbationModel, SeedSpec,
    StateEnsemble,
};
use crate::error::{Error, Result};
use crate::metrics::{DiagonalEnsemble, ObservableReport};
use crate::operator::{
    expectation, matmul, ComplexMatrix, ComplexVector, DensityOperator, HermitianOperator,
    PureState, Spectrum, C64,
};
use crate::spin::SpinSystem;
use crate::stats::{par_map_indexed, Estimate};

/// Uniform grid t_k = k·t_max/steps, k = 0..=steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
        }
        if steps < 2 {
            return Err(Error::invalid(format!("need at least 2 time steps, got {steps}")));
        }
        Ok(Self { t_max, steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| k as f64 * self.t_max / self.steps as f64)
            .collect()
    }
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::invalid("time series needs at least two points"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::invalid(format!("time grid is not uniform at index {k}")));
        }
    }
    Ok(dt)
}

/// Running RMS 𝓔(t_k) = sqrt((1/t_k) ∫₀^{t_k} δ²) by the trapezoid rule on a
/// uniform grid starting at `times[0]`; the first entry is |δ(t_0)|.
pub fn cumulative_series(times: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
    let dt = check_uniform(times)?;
    if delta.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: delta.len(),
        });
    }
    let mut out = Vec::with_capacity(delta.len());
    out.push(delta[0].abs());
    let mut integral = 0.0;
    for k in 1..delta.len() {
        integral += 0.5 * dt * (delta[k - 1].powi(2) + delta[k].powi(2));
        out.push((integral / (times[k] - times[0])).sqrt());
    }
    Ok(out)
}

/// Mean of δ² over the window t ≥ t_start (trapezoid rule).
fn window_mean_square(times: &[f64], delta: &[f64], t_start: f64) -> f64 {
    let first = times.iter().position(|&t| t >= t_start).unwrap_or(times.len() - 1);
    if first + 1 >= times.len() {
        return delta[delta.len() - 1].powi(2);
    }
    let mut integral = 0.0;
    for k in first + 1..times.len() {
        integral += 0.5 * (times[k] - times[k - 1]) * (delta[k - 1].powi(2) + delta[k].powi(2));
    }
    integral / (times[times.len() - 1] - times[first])
}

/// Relative change of 𝓔(t_max)² when the grid step is doubled; `None` when
/// the error is numerically zero.
fn step_doubling_change(times: &[f64], delta: &[f64]) -> Option<f64> {
    let last = if (times.len() - 1) % 2 == 0 {
        times.len() - 1
    } else {
        times.len() - 2
    };
    if last < 2 {
        return None;
    }
    let trap = |stride: usize| -> f64 {
        let mut s = 0.0;
        let mut k = stride;
        while k <= last {
            s += 0.5 * (times[k] - times[k - stride]) * (delta[k - stride].powi(2) + delta[k].powi(2));
            k += stride;
        }
        s
    };
    let (fine, coarse) = (trap(1), trap(2));
    if fine < 1e-28 {
        return None;
    }
    Some((coarse - fine).abs() / fine)
}

/// Step-doubling tolerance on 𝓔(t_max)².
pub const CONVERGENCE_TOLERANCE: f64 = 0.005;

/// The state-independent part of a dynamics study.
#[derive(Debug, Clone)]
pub struct DynamicsSetup {
    system: SpinSystem,
    hamiltonian: HermitianOperator,
    perturbation: PerturbationModel,
    instances: usize,
    grid: TimeGrid,
    observables: Vec<ObservableReport>,
    /// Observables in the eigenbasis of H.
    eigen_observables: Vec<ComplexMatrix>,
    plateau_fraction: f64,
    f_values: Vec<f64>,
}

/// Default start of the plateau window as a fraction of t_max.
pub const DEFAULT_PLATEAU_FRACTION: f64 = 0.5;

impl DynamicsSetup {
    pub fn new(
        system: SpinSystem,
        hamiltonian: HermitianOperator,
        perturbation: PerturbationModel,
        instances: usize,
        grid: TimeGrid,
        observables: Vec<ObservableReport>,
    ) -> Result<Self> {
        let d = system.dim();
        if hamiltonian.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: hamiltonian.dim(),
            });
        }
        if instances == 0 {
            return Err(Error::invalid("need at least one perturbation instance"));
        }
        for r in &observables {
            if r.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: r.dim(),
                });
            }
            if r.diag_purity.is_none() {
                return Err(Error::invalid(format!(
                    "observable '{}' has no diagonal purity; build its report with H",
                    r.label
                )));
            }
        }
        let spectrum = hamiltonian.spectrum()?;
        let u = &spectrum.vectors;
        let eigen_observables = observables
            .iter()
            .map(|r| matmul(&u.adjoint(), &matmul(r.original().matrix(), u)))
            .collect();
        let taus: Vec<f64> = grid.times().iter().map(|t| perturbation.lambda * t).collect();
        let f_values = match perturbation.kind {
            PerturbationKind::LocalFields => local_field_pair_f(&system, spectrum, &taus)?,
            ref kind => taus
                .iter()
                .map(|&tau| characteristic_f(kind, tau))
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            system,
            hamiltonian,
            perturbation,
            instances,
            grid,
            observables,
            eigen_observables,
            plateau_fraction: DEFAULT_PLATEAU_FRACTION,
            f_values,
        })
    }

    pub fn with_plateau_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::invalid(format!(
                "plateau fraction must lie in [0,1), got {fraction}"
            )));
        }
        self.plateau_fraction = fraction;
        Ok(self)
    }

    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn perturbation(&self) -> &PerturbationModel {
        &self.perturbation
    }

    pub fn instances(&self) -> usize {
        self.instances
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn observables(&self) -> &[ObservableReport] {
        &self.observables
    }

    /// f(λt) on the grid used by the first-order predictions.
    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// True when the first-order prediction rests on an independence
    /// assumption that does not hold exactly for this perturbation.
    pub fn prediction_is_approximate(&self) -> bool {
        !matches!(self.perturbation.kind, PerturbationKind::Goe)
    }

    fn spectrum(&self) -> &Spectrum {
        self.hamiltonian
            .cached_spectrum()
            .expect("spectrum computed in DynamicsSetup::new")
    }

    /// Draws V for one instance and returns the spectrum of H + λV.
    fn perturbed_spectrum(&self, seed: &SeedSpec) -> Result<Spectrum> {
        let v = self.perturbation.sample(&mut seed.rng(), &self.system)?;
        let h = self.hamiltonian.add_scaled(&v, self.perturbation.lambda)?;
        Ok(h.spectrum()?.clone())
    }
}

/// Local-field f(τ): V_nn - V_mm = Σ_j v_j (c_nj - c_mj) is Gaussian with
/// variance σ²_nm = Σ_j (c_nj - c_mj)², so each pair contributes
/// e^{-σ²_nm τ²/2}; the pairs n ≠ m are averaged with equal weight.
pub fn local_field_pair_f(system: &SpinSystem, spectrum: &Spectrum, taus: &[f64]) -> Result<Vec<f64>> {
    let c = local_field_couplings(system, spectrum)?;
    let d = c.nrows();
    let mut variances = Vec::with_capacity(d * (d - 1) / 2);
    for n in 0..d {
        for m in 0..n {
            let s2: f64 = (0..c.ncols()).map(|j| (c[(n, j)] - c[(m, j)]).powi(2)).sum();
            variances.push(s2);
        }
    }
    variances.sort_by(f64::total_cmp);
    // group equal variances; degenerate spectra produce many repeats
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for s2 in variances {
        match groups.last_mut() {
            Some((v, count)) if (*v - s2).abs() <= 1e-14 => *count += 1,
            _ => groups.push((s2, 1)),
        }
    }
    let pairs = (d * (d - 1) / 2) as f64;
    Ok(taus
        .iter()
        .map(|&tau| {
            groups
                .iter()
                .map(|&(s2, count)| count as f64 * (-0.5 * s2 * tau * tau).exp())
                .sum::<f64>()
                / pairs
        })
        .collect())
}

const TIME_BLOCK: usize = 256;

/// Coefficients e^{-iE_n t_j} c_n for a block of times (d × B).
fn evolve_block(values: &[f64], coeffs: &ComplexVector, times: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(values.len(), times.len(), |n, j| {
        coeffs[n] * C64::from_polar(1.0, -values[n] * times[j])
    })
}

/// Re(φ_j† O φ_j) for each column φ_j.
fn quadratic_forms(op: &ComplexMatrix, phi: &ComplexMatrix) -> Vec<f64> {
    let o_phi = matmul(op, phi);
    (0..phi.ncols())
        .map(|j| phi.column(j).dotc(&o_phi.column(j)).re)
        .collect()
}

/// Expectation series [observable][time] for one spectrum, plus the
/// infidelity against a reference evolution when given as (W = U_ref† U,
/// reference energies, reference coefficients).
fn trajectory(
    spectrum: &Spectrum,
    psi0: &PureState,
    ops_in_basis: &[ComplexMatrix],
    ops_direct: &[&HermitianOperator],
    times: &[f64],
    reference: Option<(&ComplexMatrix, &[f64], &ComplexVector)>,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let coeffs = spectrum.coefficients(psi0)?;
    let mut values = vec![Vec::with_capacity(times.len()); ops_in_basis.len()];
    let mut infidelity = Vec::with_capacity(if reference.is_some() { times.len() } else { 0 });
    for block in times.chunks(TIME_BLOCK) {
        let phi = evolve_block(&spectrum.values, &coeffs, block);
        for (k, op) in ops_in_basis.iter().enumerate() {
            values[k].extend(quadratic_forms(op, &phi));
        }
        if let Some((w, ref_values, ref_coeffs)) = reference {
            let psi = evolve_block(ref_values, ref_coeffs, block);
            let w_phi = matmul(w, &phi);
            for j in 0..block.len() {
                let ov = psi.column(j).dotc(&w_phi.column(j));
                infidelity.push((1.0 - ov.norm_sqr()).max(0.0));
            }
        }
    }
    // at t = 0 the evolved state is ψ₀ itself
    for (k, &t) in times.iter().enumerate() {
        if t == 0.0 {
            for (series, op) in values.iter_mut().zip(ops_direct) {
                series[k] = expectation(op, psi0)?;
            }
            if !infidelity.is_empty() {
                infidelity[k] = 0.0;
            }
        }
    }
    Ok((values, infidelity))
}

/// Exact V-averaged infidelity next to (1 - f(λt))(1 - S₀).
#[derive(Debug, Clone, PartialEq)]
pub struct InfidelitySeries {
    pub times: Vec<f64>,
    pub exact: Vec<f64>,
    pub stderr: Vec<f64>,
    pub analytic: Vec<f64>,
    pub s0: f64,
}

/// Error statistics of one observable for one initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub label: String,
    pub times: Vec<f64>,
    /// ⟨ψ(t)|A|ψ(t)⟩.
    pub ideal: Vec<f64>,
    /// δ(A,t) with the perturbed expectation averaged over instances.
    pub delta: Vec<f64>,
    pub delta_stderr: Vec<f64>,
    /// (1 - f(λt))(⟨A(t)⟩ - Tr(ρ_D A)).
    pub analytic_delta: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub cumulative_rel: Vec<f64>,
    /// Mean of δ² over the plateau window t ≥ fraction·t_max.
    pub plateau_sq: f64,
    /// sqrt(plateau_sq) / (Tr A_s/d).
    pub plateau_rel: f64,
    /// Long-time limit of 𝓔², Σ_{n≠m} |b_n|²|b_m|² |A_nm|².
    pub asymptotic_single_sq: f64,
    pub asymptotic_single_rel: f64,
    /// Haar-averaged long-time relative error sqrt(d/(d+1)(η - η_D)).
    pub asymptotic_haar: f64,
    /// Tr(A_s)/d.
    pub normalization: f64,
    /// Step-doubling check of 𝓔(t_max) within [`CONVERGENCE_TOLERANCE`].
    pub converged: bool,
    /// H has gap collisions, so the double sum need not be the long-time limit.
    pub gap_collision: bool,
    /// The first-order prediction is approximate for this perturbation kind.
    pub approximate: bool,
}

/// All outputs for one initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRun {
    pub state_index: usize,
    pub s0: f64,
    pub infidelity: InfidelitySeries,
    pub series: Vec<ErrorSeries>,
}

/// Σ_{n≠m} p_n p_m |A_nm|² for A given in the eigenbasis of H.
pub fn asymptotic_error_sq(a_in_basis: &ComplexMatrix, populations: &[f64]) -> f64 {
    let d = populations.len();
    let mut s = 0.0;
    for m in 0..d {
        for n in 0..d {
            if n != m {
                s += populations[n] * populations[m] * a_in_basis[(n, m)].norm_sqr();
            }
        }
    }
    s
}

/// sqrt(Σ_{n≠m} |b_n|²|b_m|² A_nm A_mn) for ψ₀ under H.
pub fn asymptotic_error(a: &HermitianOperator, h: &HermitianOperator, psi0: &PureState) -> Result<f64> {
    let spectrum = h.spectrum()?;
    if spectrum.has_gap_collision() {
        log::warn!("Hamiltonian has gap collisions; the double sum may not be the long-time limit");
    }
    let u = &spectrum.vectors;
    let a_e = matmul(&u.adjoint(), &matmul(a.matrix(), u));
    let de = DiagonalEnsemble::from_spectrum(spectrum, psi0)?;
    Ok(asymptotic_error_sq(&a_e, &de.populations).sqrt())
}

/// sqrt(d/(d+1) (η - η_D)) from a report built with H.
pub fn asymptotic_haar_error(report: &ObservableReport) -> Result<f64> {
    let eta_d = report
        .diag_purity
        .ok_or_else(|| Error::invalid("report has no diagonal purity"))?;
    let d = report.dim() as f64;
    Ok((d / (d + 1.0) * (report.purity - eta_d).max(0.0)).sqrt())
}

/// Pointwise mean and standard error over equally long rows, summed in row order.
fn mean_and_stderr<'a>(len: usize, rows: impl Iterator<Item = &'a [f64]>) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; len];
    let mut sum_sq = vec![0.0; len];
    let mut count = 0usize;
    for row in rows {
        for (k, x) in row.iter().enumerate() {
            sum[k] += x;
            sum_sq[k] += x * x;
        }
        count += 1;
    }
    let n = count as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr = if count > 1 {
        sum_sq
            .iter()
            .zip(&mean)
            .map(|(s2, m)| ((s2 / n - m * m).max(0.0) / (n - 1.0)).sqrt())
            .collect()
    } else {
        vec![0.0; len]
    };
    (mean, stderr)
}

/// Runs every perturbation instance for one initial state. Instance i draws V
/// from `instance_seed/i`; averages are formed in instance order.
pub fn run_state(
    setup: &DynamicsSetup,
    psi0: &PureState,
    state_index: usize,
    instance_seed: &SeedSpec,
) -> Result<StateRun> {
    let d = setup.system.dim();
    if psi0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi0.dim(),
        });
    }
    let times = setup.grid.times();
    let spectrum = setup.spectrum();
    let direct: Vec<&HermitianOperator> = setup.observables.iter().map(|r| r.original()).collect();
    let (ideal, _) = trajectory(spectrum, psi0, &setup.eigen_observables, &direct, &times, None)?;
    let ideal_coeffs = spectrum.coefficients(psi0)?;
    let diag = DiagonalEnsemble::from_spectrum(spectrum, psi0)?;

    let runs = par_map_indexed(setup.instances, |i| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let wrap = |e: Error| Error::Instance {
            instance: i,
            source: Box::new(e),
        };
        let perturbed = setup
            .perturbed_spectrum(&instance_seed.child(i as u64))
            .map_err(wrap)?;
        let u = &perturbed.vectors;
        let ops: Vec<ComplexMatrix> = direct
            .iter()
            .map(|a| matmul(&u.adjoint(), &matmul(a.matrix(), u)))
            .collect();
        let w = matmul(&spectrum.vectors.adjoint(), u);
        trajectory(
            &perturbed,
            psi0,
            &ops,
            &direct,
            &times,
            Some((&w, &spectrum.values, &ideal_coeffs)),
        )
        .map_err(wrap)
    });
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;

    let (exact_inf, inf_stderr) = mean_and_stderr(times.len(), runs.iter().map(|r| r.1.as_slice()));
    let infidelity = InfidelitySeries {
        analytic: setup
            .f_values
            .iter()
            .map(|f| (1.0 - f) * (1.0 - diag.ipr))
            .collect(),
        times: times.clone(),
        exact: exact_inf,
        stderr: inf_stderr,
        s0: diag.ipr,
    };

    let gap_collision = spectrum.has_gap_collision();
    let t_start = setup.plateau_fraction * setup.grid.t_max();
    let mut series = Vec::with_capacity(setup.observables.len());
    for (k, report) in setup.observables.iter().enumerate() {
        let (perturbed_mean, stderr) =
            mean_and_stderr(times.len(), runs.iter().map(|r| r.0[k].as_slice()));
        let delta: Vec<f64> = ideal[k]
            .iter()
            .zip(&perturbed_mean)
            .map(|(a, b)| a - b)
            .collect();
        let dephased = diag.average(spectrum, report.original())?;
        let analytic_delta = ideal[k]
            .iter()
            .zip(&setup.f_values)
            .map(|(a, f)| (1.0 - f) * (a - dephased))
            .collect();
        let cumulative = cumulative_series(&times, &delta)?;
        let norm = report.haar_mean();
        let converged = match step_doubling_change(&times, &delta) {
            Some(change) => change <= CONVERGENCE_TOLERANCE,
            None => true,
        };
        if !converged {
            log::warn!(
                "{}: cumulative error changes by more than {}% when the time step is doubled",
                report.label,
                CONVERGENCE_TOLERANCE * 100.0
            );
        }
        let plateau_sq = window_mean_square(&times, &delta, t_start);
        let asymptotic_single_sq = asymptotic_error_sq(&setup.eigen_observables[k], &diag.populations);
        series.push(ErrorSeries {
            label: report.label.clone(),
            times: times.clone(),
            ideal: ideal[k].clone(),
            cumulative_rel: cumulative.iter().map(|e| e / norm).collect(),
            cumulative,
            delta,
            delta_stderr: stderr,
            analytic_delta,
            plateau_sq,
            plateau_rel: plateau_sq.sqrt() / norm,
            asymptotic_single_sq,
            asymptotic_single_rel: asymptotic_single_sq.sqrt() / norm,
            asymptotic_haar: asymptotic_haar_error(report)?,
            normalization: norm,
            converged,
            gap_collision,
            approximate: setup.prediction_is_approximate(),
        });
    }
    Ok(StateRun {
        state_index,
        s0: diag.ipr,
        infidelity,
        series,
    })
}

/// Per-instance perturbed states e^{-i(H+λV_i)t}ψ₀ at a single time.
pub fn perturbed_states(
    setup: &DynamicsSetup,
    psi0: &PureState,
    instance_seed: &SeedSpec,
    t: f64,
) -> Result<Vec<PureState>> {
    if !t.is_finite() {
        return Err(Error::InvalidTime(t));
    }
    par_map_indexed(setup.instances, |i| {
        let spectrum = setup.perturbed_spectrum(&instance_seed.child(i as u64))?;
        crate::operator::Propagator::new(&spectrum, psi0)?.state_at(t)
    })
    .into_iter()
    .collect()
}

/// The instance-averaged state [U'(t) ρ₀ U'(t)†]_V.
pub fn averaged_density(
    setup: &DynamicsSetup,
    psi0: &PureState,
    instance_seed: &SeedSpec,
    t: f64,
) -> Result<DensityOperator> {
    let states = perturbed_states(setup, psi0, instance_seed, t)?;
    DensityOperator::uniform_mixture(&states)
}

/// Ensemble-averaged relative errors of one observable: the mean over initial
/// states of 𝓔² is taken before the square root.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub label: String,
    pub purity: f64,
    pub diag_purity: f64,
    pub times: Vec<f64>,
    pub cumulative_rel: Vec<f64>,
    pub cumulative_rel_stderr: Vec<f64>,
    pub plateau_rel: f64,
    pub plateau_rel_stderr: f64,
    /// sqrt(mean over states of the double sum) / (Tr A_s/d).
    pub asymptotic_single_rel: f64,
    pub asymptotic_haar: f64,
}

/// Mean infidelity over initial states.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleInfidelity {
    pub times: Vec<f64>,
    pub exact: Vec<f64>,
    pub stderr: Vec<f64>,
    pub analytic: Vec<f64>,
    pub mean_s0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub states: Vec<StateRun>,
    pub series: Vec<EnsembleSeries>,
    pub infidelity: EnsembleInfidelity,
}

/// Relative RMS sqrt(mean x)/norm with first-order propagated standard error.
fn relative_root(values: &[f64], norm: f64) -> (f64, f64) {
    let est = Estimate::from_samples(values);
    let root = est.mean.max(0.0).sqrt();
    let se = if root > 0.0 && values.len() > 1 {
        est.stderr / (2.0 * root)
    } else {
        0.0
    };
    (root / norm, se / norm)
}

/// Seed stream of initial state `s`.
pub fn state_seed(seed: &SeedSpec, s: usize) -> SeedSpec {
    seed.child(0).child(s as u64)
}

/// Seed stream of the perturbation instances used with initial state `s`.
pub fn instance_seed(seed: &SeedSpec, s: usize) -> SeedSpec {
    seed.child(1).child(s as u64)
}

/// Draws `n_states` initial states and runs each one.
pub fn run_ensemble(
    setup: &DynamicsSetup,
    ensemble: &StateEnsemble,
    n_states: usize,
    seed: &SeedSpec,
) -> Result<EnsembleRun> {
    if n_states == 0 {
        return Err(Error::invalid("need at least one initial state"));
    }
    let states: Vec<StateRun> = par_map_indexed(n_states, |s| {
        let psi0 = ensemble.sample(&mut state_seed(seed, s).rng(), &setup.system)?;
        run_state(setup, &psi0, s, &instance_seed(seed, s))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(summarize(setup, states))
}

/// Aggregates per-state runs (in the given order) into ensemble statistics.
pub fn summarize(setup: &DynamicsSetup, states: Vec<StateRun>) -> EnsembleRun {
    let times = setup.grid.times();
    let k_len = times.len();
    let mut series = Vec::with_capacity(setup.observables.len());
    for (k, report) in setup.observables.iter().enumerate() {
        let norm = report.haar_mean();
        let mut cumulative_rel = Vec::with_capacity(k_len);
        let mut cumulative_rel_stderr = Vec::with_capacity(k_len);
        for j in 0..k_len {
            let sq: Vec<f64> = states.iter().map(|s| s.series[k].cumulative[j].powi(2)).collect();
            let (v, se) = relative_root(&sq, norm);
            cumulative_rel.push(v);
            cumulative_rel_stderr.push(se);
        }
        let plateaus: Vec<f64> = states.iter().map(|s| s.series[k].plateau_sq).collect();
        let (plateau_rel, plateau_rel_stderr) = relative_root(&plateaus, norm);
        let singles: Vec<f64> = states.iter().map(|s| s.series[k].asymptotic_single_sq).collect();
        let (asymptotic_single_rel, _) = relative_root(&singles, norm);
        series.push(EnsembleSeries {
            label: report.label.clone(),
            purity: report.purity,
            diag_purity: report.diag_purity.unwrap_or(f64::NAN),
            times: times.clone(),
            cumulative_rel,
            cumulative_rel_stderr,
            plateau_rel,
            plateau_rel_stderr,
            asymptotic_single_rel,
            asymptotic_haar: states
                .first()
                .map(|s| s.series[k].asymptotic_haar)
                .unwrap_or(f64::NAN),
        });
    }
    let n = states.len() as f64;
    let mut exact = Vec::with_capacity(k_len);
    let mut stderr = Vec::with_capacity(k_len);
    for j in 0..k_len {
        let xs: Vec<f64> = states.iter().map(|s| s.infidelity.exact[j]).collect();
        let est = Estimate::from_samples(&xs);
        exact.push(est.mean);
        // single state: fall back to the instance standard error
        stderr.push(if states.len() > 1 {
            est.stderr
        } else {
            states[0].infidelity.stderr[j]
        });
    }
    let mean_s0 = states.iter().map(|s| s.s0).sum::<f64>() / n;
    let analytic = setup
        .f_values
        .iter()
        .map(|f| (1.0 - f) * (1.0 - mean_s0))
        .collect();
    EnsembleRun {
        infidelity: EnsembleInfidelity {
            times,
            exact,
            stderr,
            analytic,
            mean_s0,
        },
        series,
        states,
    }
}

/// Least-squares fit of (1 - e^{-λ²t²})(1 - S₀) to an infidelity series.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFit {
    pub lambda: f64,
    pub residual: f64,
    pub curve: Vec<f64>,
    pub note: Option<String>,
}

pub const FIT_LAMBDA_MIN: f64 = 1e-5;
pub const FIT_LAMBDA_MAX: f64 = 1.0;
const FIT_SCAN_POINTS: usize = 400;
const FLAT_INFIDELITY: f64 = 1e-6;

pub fn infidelity_model(lambda: f64, s0: f64, t: f64) -> f64 {
    (1.0 - (-(lambda * t).powi(2)).exp()) * (1.0 - s0)
}

/// Scans log λ on [1e-5, 1], then refines the best bracket by golden-section
/// search; the residual is the unweighted sum of squares.
pub fn fit_lambda(times: &[f64], infidelity: &[f64], s0: f64) -> Result<LambdaFit> {
    if times.len() != infidelity.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: infidelity.len(),
        });
    }
    if times.len() < 5 {
        return Err(Error::invalid(format!(
            "need at least 5 time points, got {}",
            times.len()
        )));
    }
    if times.iter().chain(infidelity).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(0.0..=1.0).contains(&s0) {
        return Err(Error::invalid(format!("S0 must lie in [0,1], got {s0}")));
    }
    let residual = |lambda: f64| -> f64 {
        times
            .iter()
            .zip(infidelity)
            .map(|(&t, &y)| (y - infidelity_model(lambda, s0, t)).powi(2))
            .sum()
    };
    let curve_for = |lambda: f64| times.iter().map(|&t| infidelity_model(lambda, s0, t)).collect();
    if infidelity.iter().all(|y| y.abs() < FLAT_INFIDELITY) {
        return Ok(LambdaFit {
            lambda: 0.0,
            residual: residual(0.0),
            curve: curve_for(0.0),
            note: Some(format!("flat series (all infidelities below {FLAT_INFIDELITY:e})")),
        });
    }
    let (lo, hi) = (FIT_LAMBDA_MIN.ln(), FIT_LAMBDA_MAX.ln());
    let grid: Vec<f64> = (0..FIT_SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (FIT_SCAN_POINTS - 1) as f64)
        .collect();
    let obj = |x: f64| residual(x.exp());
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, obj(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (obj(c), obj(e));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = obj(e);
        }
    }
    let lambda = ((a + b) / 2.0).exp();
    let note = if best == 0 || best == grid.len() - 1 {
        Some("optimum at the edge of the λ search range".to_string())
    } else {
        None
    };
    Ok(LambdaFit {
        lambda,
        residual: residual(lambda),
        curve: curve_for(lambda),
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{PerturbationKind, StateEnsemble};
    use crate::metrics::build_report;
    use crate::spin::{self, Axis, LmgParams, Representation};

    fn lmg_setup(n: usize, lambda: f64, instances: usize, grid: TimeGrid) -> DynamicsSetup {
        let system = SpinSystem::symmetric(n).unwrap();
        let h = spin::lmg_hamiltonian(
            &LmgParams {
                field: 0.4,
                coupling: 1.0,
                particles: n,
            },
            Representation::Symmetric,
        )
        .unwrap();
        let sx = spin::collective_spin(&system, Axis::X).unwrap();
        let report = build_report("sx", &sx, Some(&h)).unwrap();
        DynamicsSetup::new(
            system,
            h,
            PerturbationModel::new(PerturbationKind::Goe, lambda).unwrap(),
            instances,
            grid,
            vec![report],
        )
        .unwrap()
    }

    #[test]
    fn grid_and_cumulative_basics() {
        let g = TimeGrid::new(2.0, 4).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
        let c = cumulative_series(&g.times(), &[0.3; 5]).unwrap();
        assert!(c.iter().all(|x| (x - 0.3).abs() < 1e-15));
        assert!(cumulative_series(&[0.0, 1.0, 3.0], &[1.0; 3]).is_err());
    }

    #[test]
    fn zero_lambda_reproduces_ideal_evolution() {
        let setup = lmg_setup(6, 0.0, 3, TimeGrid::new(5.0, 50).unwrap());
        let psi = spin::polarized_state(setup.system(), Axis::X, false).unwrap();
        let run = run_state(&setup, &psi, 0, &SeedSpec::new(1)).unwrap();
        assert!(run.series[0].delta.iter().all(|d| d.abs() < 1e-10));
        assert!(run.infidelity.exact.iter().all(|x| x.abs() < 1e-10));
        assert_eq!(run.series[0].delta[0], 0.0);
    }

    #[test]
    fn delta_vanishes_at_time_zero() {
        let setup = lmg_setup(6, 0.3, 4, TimeGrid::new(5.0, 50).unwrap());
        let psi = spin::polarized_state(setup.system(), Axis::X, false).unwrap();
        let run = run_state(&setup, &psi, 0, &SeedSpec::new(2)).unwrap();
        assert_eq!(run.series[0].delta[0], 0.0);
        assert_eq!(run.infidelity.exact[0], 0.0);
        assert!(run.series[0].delta.iter().skip(1).any(|d| d.abs() > 1e-6));
    }

    #[test]
    fn eigenstate_has_no_analytic_infidelity() {
        let setup = lmg_setup(4, 0.01, 2, TimeGrid::new(3.0, 10).unwrap());
        let v = setup.hamiltonian().spectrum().unwrap().vectors.column(2).into_owned();
        let psi = PureState::normalized(v).unwrap();
        let run = run_state(&setup, &psi, 0, &SeedSpec::new(3)).unwrap();
        assert!((run.s0 - 1.0).abs() < 1e-12);
        assert!(run.infidelity.analytic.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn commuting_observable_has_no_asymptotic_error() {
        let system = SpinSystem::symmetric(5).unwrap();
        let sz = spin::collective_spin(&system, Axis::Z).unwrap();
        let h = sz.scaled(-0.7).add_scaled(&sz.power(2).unwrap(), 0.13).unwrap();
        let psi = spin::polarized_state(&system, Axis::X, true).unwrap();
        assert!(asymptotic_error(&sz, &h, &psi).unwrap() < 1e-12);
        let report = build_report("sz", &sz, Some(&h)).unwrap();
        assert!(asymptotic_haar_error(&report).unwrap() < 1e-6);
    }

    #[test]
    fn synthetic_lambda_recovery() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.5).collect();
        let data: Vec<f64> = times.iter().map(|&t| infidelity_model(0.01, 0.2, t)).collect();
        let fit = fit_lambda(&times, &data, 0.2).unwrap();
        assert!((fit.lambda - 0.01).abs() < 1e-6, "{}", fit.lambda);
        assert!(fit.residual < 1e-20);
    }

    #[test]
    fn flat_series_gives_zero_lambda() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let fit = fit_lambda(&times, &[1e-8; 10], 0.5).unwrap();
        assert_eq!(fit.lambda, 0.0);
        assert!(fit.note.is_some());
        assert!(fit_lambda(&times[..4], &[0.1; 4], 0.5).is_err());
    }

    #[test]
    fn ensemble_run_is_thread_count_independent() {
        let setup = lmg_setup(5, 0.05, 3, TimeGrid::new(4.0, 40).unwrap());
        let seed = SeedSpec::new(11);
        let a = run_ensemble(&setup, &StateEnsemble::Haar, 3, &seed).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool
            .install(|| run_ensemble(&setup, &StateEnsemble::Haar, 3, &seed))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn averaged_density_has_unit_trace() {
        let setup = lmg_setup(15, 0.01, 5, TimeGrid::new(1.0, 2).unwrap());
        let psi = spin::polarized_state(setup.system(), Axis::X, false).unwrap();
        for t in [0.0, 3.0, 30.0] {
            let rho = averaged_density(&setup, &psi, &SeedSpec::new(4), t).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-10);
        }
    }
}
