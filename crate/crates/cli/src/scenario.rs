//! Executes the static and dynamical studies of a scenario and turns them into
//! result tables. Computation and file output are separate so that tables can
//! be compared in memory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use purity_core::dynamics::{run_ensemble, EnsembleRun};
use purity_core::static_error::{haar_mixed_relative, haar_relative_delta};
use purity_core::{build_report, DynamicsSetup, ObservableReport, SeedSpec};

use crate::config::{ScenarioConfig, StaticNoise};
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

/// Which studies of a scenario file to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Studies {
    pub static_study: bool,
    pub dynamics: bool,
}

impl Studies {
    pub const ALL: Studies = Studies {
        static_study: true,
        dynamics: true,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticRow {
    pub observable: String,
    pub purity: f64,
    pub gamma: f64,
    pub value: f64,
    pub stderr: f64,
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSummary {
    pub perturbation: String,
    pub observable: String,
    pub purity: f64,
    pub diag_purity: f64,
    pub plateau_rel: f64,
    pub plateau_rel_stderr: f64,
    pub cumulative_rel_final: f64,
    pub asymptotic_single_rel: f64,
    pub asymptotic_haar: f64,
    pub unconverged_states: usize,
    pub gap_collision: bool,
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub id: String,
    pub seed: u64,
    /// (file name, table) in write order.
    pub tables: Vec<(String, Table)>,
    pub static_rows: Vec<StaticRow>,
    pub dynamics: Vec<DynamicsSummary>,
    pub gates: Vec<GateResult>,
    pub manifest: String,
}

impl ScenarioOutput {
    pub fn failed_gates(&self) -> usize {
        self.gates.iter().filter(|g| !g.passed).count()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Writes every table and the manifest into `dir`.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
        for (name, table) in &self.tables {
            table.write(&dir.join(name))?;
        }
        let path = dir.join("manifest.txt");
        fs::write(&path, &self.manifest).map_err(|e| CliError::io(path.display().to_string(), e))
    }
}

/// η and η_D (w.r.t. the scenario Hamiltonian) for every configured observable.
pub fn purity_table(config: &ScenarioConfig) -> CliResult<Table> {
    let system = config.system()?;
    let h = config.hamiltonian()?;
    let mut table = Table::new(&[
        "scenario",
        "observable",
        "dim",
        "purity",
        "diag_purity",
        "purity_minus_diag",
        "inverse_dim",
        "degenerate_hamiltonian",
    ]);
    for fam in config.families() {
        let r = build_report(fam.to_string(), &fam.build(&system)?, Some(&h))?;
        let diag = r.diag_purity.expect("built with H");
        table.push(vec![
            config.id.as_str().into(),
            r.label.as_str().into(),
            r.dim().into(),
            r.purity.into(),
            diag.into(),
            (r.purity - diag).into(),
            (1.0 / r.dim() as f64).into(),
            r.degenerate_hamiltonian.into(),
        ])?;
    }
    Ok(table)
}

pub const DEFAULT_SEED: u64 = 1;

pub fn run_scenario(config: &ScenarioConfig, seed: Option<u64>, studies: Studies) -> CliResult<ScenarioOutput> {
    let seed = seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let mut out = ScenarioOutput {
        id: config.id.clone(),
        seed,
        tables: Vec::new(),
        static_rows: Vec::new(),
        dynamics: Vec::new(),
        gates: Vec::new(),
        manifest: String::new(),
    };
    let mut manifest = format!(
        "scenario {}\nschema_version {}\nmaster_seed {}\nmodel {:?} N={} representation={} field_per_coupling={} coupling={}\n",
        config.id,
        crate::config::SCHEMA_VERSION,
        seed,
        config.model.kind,
        config.model.particles,
        config.representation()?,
        config.model.field_per_coupling,
        config.model.coupling
    );
    let ran_static = studies.static_study && config.static_study.is_some();
    let ran_dynamics = studies.dynamics && config.dynamics.is_some();
    if !ran_static && !ran_dynamics {
        return Err(CliError::config(
            config.id.clone(),
            "no study to run: add a [static] or [dynamics] table",
        ));
    }
    if ran_static {
        static_study(config, seed, &mut out, &mut manifest)?;
    }
    if ran_dynamics {
        dynamics_study(config, seed, &mut out, &mut manifest)?;
    }
    evaluate_gates(config, &mut out);
    if !out.gates.is_empty() {
        manifest.push_str("\ngates\n");
        for g in &out.gates {
            let _ = writeln!(manifest, "  {} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
        }
    }
    out.manifest = manifest;
    Ok(out)
}

fn static_study(config: &ScenarioConfig, seed: u64, out: &mut ScenarioOutput, manifest: &mut String) -> CliResult<()> {
    let s = config.static_study.as_ref().expect("checked by caller");
    let system = config.system()?;
    let mut table = Table::new(&[
        "scenario",
        "noise",
        "observable",
        "purity",
        "master_seed",
        "state_index",
        "instances",
        "gamma",
        "relative_error",
        "stderr",
        "analytic",
    ]);
    let base = SeedSpec::new(seed).child(2);
    for (k, fam) in config.families().iter().enumerate() {
        let a = fam.build(&system)?;
        let report = build_report(fam.to_string(), &a, None)?;
        for (g, &gamma) in s.gammas.iter().enumerate() {
            let seed = base.child(k as u64).child(g as u64);
            let est = match s.noise.mixed(gamma)? {
                None => haar_relative_delta(&a, gamma, s.samples, &seed)?,
                Some(spec) => haar_mixed_relative(&a, &spec, s.samples, &seed)?,
            };
            table.push(vec![
                config.id.as_str().into(),
                s.noise.label().into(),
                report.label.clone().into(),
                report.purity.into(),
                out.seed.into(),
                "all".into(),
                s.samples.into(),
                gamma.into(),
                est.value.into(),
                est.stderr.into(),
                est.analytic.into(),
            ])?;
            out.static_rows.push(StaticRow {
                observable: report.label.clone(),
                purity: report.purity,
                gamma,
                value: est.value,
                stderr: est.stderr,
                analytic: est.analytic,
            });
        }
    }
    let _ = writeln!(
        manifest,
        "\nstatic.csv: {} noise, {} Haar pairs per point; x = gamma (or purity), y = relative_error ± stderr, analytic = closed-form prediction",
        s.noise.label(),
        s.samples
    );
    if s.noise == StaticNoise::OrthogonalMixture {
        manifest.push_str("  orthogonal-mixture analytic column: sqrt(2d²/(d²-1) γ² (η - 1/d))\n");
    }
    out.tables.push(("static.csv".into(), table));
    Ok(())
}

fn dynamics_study(config: &ScenarioConfig, seed: u64, out: &mut ScenarioOutput, manifest: &mut String) -> CliResult<()> {
    let d = config.dynamics.as_ref().expect("checked by caller");
    let system = config.system()?;
    let h = config.hamiltonian()?;
    let reports: Vec<ObservableReport> = config
        .families()
        .iter()
        .map(|f| build_report(f.to_string(), &f.build(&system)?, Some(&h)))
        .collect::<purity_core::Result<_>>()?;
    let ensemble = config.state_ensemble()?;
    let grid = config.time_grid()?;
    let count = config.ensemble.count;
    let state_label = |s: Option<usize>| -> Cell {
        match s {
            Some(i) => i.into(),
            None if count == 1 => 0usize.into(),
            None => "all".into(),
        }
    };
    let _ = writeln!(
        manifest,
        "\ndynamics: ensemble {} x{}, {} instances, λ = {} x coupling, t_max = {} / coupling, {} steps, plateau window t >= {} t_max",
        ensemble,
        count,
        d.instances,
        d.lambda_per_coupling,
        d.tmax_inv_coupling,
        d.steps,
        d.plateau_fraction.unwrap_or(purity_core::dynamics::DEFAULT_PLATEAU_FRACTION)
    );
    if d.tmax_inv_coupling > 300.0 {
        manifest.push_str(
            "  note: t_max exceeds 300/coupling so that the plateau window is well converged\n",
        );
    }
    let mut summary = Table::new(&[
        "scenario",
        "perturbation",
        "observable",
        "purity",
        "diag_purity",
        "purity_minus_diag",
        "master_seed",
        "state_index",
        "instances",
        "states",
        "plateau_rel",
        "plateau_rel_stderr",
        "cumulative_rel_final",
        "asymptotic_single_rel",
        "asymptotic_haar",
        "unconverged_states",
        "gap_collision",
        "approximate",
    ]);
    for model in config.perturbations() {
        let kind = model.kind.to_string();
        let file_kind = kind.replace(':', "_");
        let mut setup = DynamicsSetup::new(system, h.clone(), model, d.instances, grid, reports.clone())?;
        if let Some(f) = d.plateau_fraction {
            setup = setup.with_plateau_fraction(f)?;
        }
        let run = run_ensemble(&setup, &ensemble, count, &SeedSpec::new(seed))?;
        let approximate = setup.prediction_is_approximate();
        push_series_tables(config, out, &run, &kind, &file_kind, d.instances, d.output_stride, &state_label)?;
        for (k, s) in run.series.iter().enumerate() {
            let unconverged = run.states.iter().filter(|r| !r.series[k].converged).count();
            let gap_collision = run.states.iter().any(|r| r.series[k].gap_collision);
            let cumulative_rel_final = *s.cumulative_rel.last().expect("non-empty grid");
            summary.push(vec![
                config.id.as_str().into(),
                kind.as_str().into(),
                s.label.as_str().into(),
                s.purity.into(),
                s.diag_purity.into(),
                (s.purity - s.diag_purity).into(),
                out.seed.into(),
                state_label(None),
                d.instances.into(),
                count.into(),
                s.plateau_rel.into(),
                s.plateau_rel_stderr.into(),
                cumulative_rel_final.into(),
                s.asymptotic_single_rel.into(),
                s.asymptotic_haar.into(),
                unconverged.into(),
                gap_collision.into(),
                approximate.into(),
            ])?;
            if unconverged > 0 {
                log::warn!("{kind}/{}: {unconverged} state(s) failed the step-doubling check", s.label);
            }
            out.dynamics.push(DynamicsSummary {
                perturbation: kind.clone(),
                observable: s.label.clone(),
                purity: s.purity,
                diag_purity: s.diag_purity,
                plateau_rel: s.plateau_rel,
                plateau_rel_stderr: s.plateau_rel_stderr,
                cumulative_rel_final,
                asymptotic_single_rel: s.asymptotic_single_rel,
                asymptotic_haar: s.asymptotic_haar,
                unconverged_states: unconverged,
                gap_collision,
                approximate,
            });
        }
        let _ = writeln!(
            manifest,
            "series_{file_kind}.csv: x = time [1/coupling], y = cumulative_rel ± cumulative_rel_stderr, one curve per observable; asymptotic_haar is the long-time prediction\n\
             infidelity_{file_kind}.csv: x = time, y = infidelity ± stderr, analytic = (1 - f(λt))(1 - S0)\n\
             states_{file_kind}.csv: one row per initial state and observable"
        );
        if count == 1 {
            let _ = writeln!(
                manifest,
                "delta_{file_kind}.csv: x = time, y = delta ± delta_stderr next to analytic_delta and the ideal expectation"
            );
        }
        if approximate {
            let _ = writeln!(manifest, "  {kind}: first-order prediction is approximate for this perturbation");
        }
    }
    manifest.push_str("summary.csv: plateau_rel against asymptotic_haar; x = purity or purity_minus_diag\n");
    out.tables.push(("summary.csv".into(), summary));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn push_series_tables(
    config: &ScenarioConfig,
    out: &mut ScenarioOutput,
    run: &EnsembleRun,
    kind: &str,
    file_kind: &str,
    instances: usize,
    stride: usize,
    state_label: &dyn Fn(Option<usize>) -> Cell,
) -> CliResult<()> {
    let id = config.id.as_str();
    let keep = |j: usize, len: usize| j % stride == 0 || j + 1 == len;

    let mut series = Table::new(&[
        "scenario",
        "perturbation",
        "observable",
        "purity",
        "diag_purity",
        "master_seed",
        "state_index",
        "instances",
        "time",
        "cumulative_rel",
        "cumulative_rel_stderr",
        "asymptotic_haar",
    ]);
    for s in &run.series {
        let len = s.times.len();
        for j in (0..len).filter(|&j| keep(j, len)) {
            series.push(vec![
                id.into(),
                kind.into(),
                s.label.as_str().into(),
                s.purity.into(),
                s.diag_purity.into(),
                out.seed.into(),
                state_label(None),
                instances.into(),
                s.times[j].into(),
                s.cumulative_rel[j].into(),
                s.cumulative_rel_stderr[j].into(),
                s.asymptotic_haar.into(),
            ])?;
        }
    }

    let inf = &run.infidelity;
    let mut infidelity = Table::new(&[
        "scenario",
        "perturbation",
        "master_seed",
        "state_index",
        "instances",
        "time",
        "infidelity",
        "stderr",
        "analytic",
    ]);
    let len = inf.times.len();
    for j in (0..len).filter(|&j| keep(j, len)) {
        infidelity.push(vec![
            id.into(),
            kind.into(),
            out.seed.into(),
            state_label(None),
            instances.into(),
            inf.times[j].into(),
            inf.exact[j].into(),
            inf.stderr[j].into(),
            inf.analytic[j].into(),
        ])?;
    }

    let mut states = Table::new(&[
        "scenario",
        "perturbation",
        "observable",
        "purity",
        "diag_purity",
        "master_seed",
        "state_index",
        "instances",
        "s0",
        "plateau_rel",
        "cumulative_rel_final",
        "asymptotic_single_rel",
        "converged",
        "gap_collision",
    ]);
    for st in &run.states {
        for (s, e) in st.series.iter().zip(&run.series) {
            states.push(vec![
                id.into(),
                kind.into(),
                s.label.as_str().into(),
                e.purity.into(),
                e.diag_purity.into(),
                out.seed.into(),
                state_label(Some(st.state_index)),
                instances.into(),
                st.s0.into(),
                s.plateau_rel.into(),
                (*s.cumulative_rel.last().expect("non-empty grid")).into(),
                s.asymptotic_single_rel.into(),
                s.converged.into(),
                s.gap_collision.into(),
            ])?;
        }
    }

    out.tables.push((format!("series_{file_kind}.csv"), series));
    out.tables.push((format!("infidelity_{file_kind}.csv"), infidelity));
    out.tables.push((format!("states_{file_kind}.csv"), states));

    if run.states.len() == 1 {
        let st = &run.states[0];
        let mut delta = Table::new(&[
            "scenario",
            "perturbation",
            "observable",
            "master_seed",
            "state_index",
            "instances",
            "time",
            "ideal",
            "delta",
            "delta_stderr",
            "analytic_delta",
            "cumulative_rel",
        ]);
        for s in &st.series {
            let len = s.times.len();
            for j in (0..len).filter(|&j| keep(j, len)) {
                delta.push(vec![
                    id.into(),
                    kind.into(),
                    s.label.as_str().into(),
                    out.seed.into(),
                    st.state_index.into(),
                    instances.into(),
                    s.times[j].into(),
                    s.ideal[j].into(),
                    s.delta[j].into(),
                    s.delta_stderr[j].into(),
                    s.analytic_delta[j].into(),
                    s.cumulative_rel[j].into(),
                ])?;
            }
        }
        out.tables.push((format!("delta_{file_kind}.csv"), delta));
    }
    Ok(())
}

/// Groups observables whose purities agree to 1e-9 (relative) and returns
/// the group index of each, groups numbered by increasing purity.
pub fn purity_groups(purities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..purities.len()).collect();
    order.sort_by(|&a, &b| purities[a].total_cmp(&purities[b]));
    let mut group = vec![0; purities.len()];
    let mut g = 0;
    for w in 0..order.len() {
        if w > 0 {
            let (p, q) = (purities[order[w - 1]], purities[order[w]]);
            if (q - p).abs() > 1e-9 * q.abs().max(1.0) {
                g += 1;
            }
        }
        group[order[w]] = g;
    }
    group
}

/// True when every observable of a lower purity group has a strictly smaller
/// plateau than every observable of a higher group.
pub fn strictly_ordered_by_purity(purities: &[f64], plateaus: &[f64]) -> bool {
    let groups = purity_groups(purities);
    (0..plateaus.len()).all(|i| {
        (0..plateaus.len()).all(|j| groups[i] >= groups[j] || plateaus[i] < plateaus[j])
    })
}

/// Purity-group labels listed in order of increasing plateau.
pub fn plateau_group_sequence(purities: &[f64], plateaus: &[f64]) -> Vec<usize> {
    let groups = purity_groups(purities);
    let mut order: Vec<usize> = (0..plateaus.len()).collect();
    order.sort_by(|&a, &b| plateaus[a].total_cmp(&plateaus[b]));
    order.into_iter().map(|i| groups[i]).collect()
}

fn evaluate_gates(config: &ScenarioConfig, out: &mut ScenarioOutput) {
    let g = &config.gates;
    if let Some(k) = g.static_within_sigmas {
        for r in &out.static_rows {
            let z = sigmas(r.value, r.analytic, r.stderr);
            out.gates.push(GateResult {
                name: format!("static {} γ={}", r.observable, r.gamma),
                passed: z <= k,
                detail: format!("{:.6} ± {:.6} vs {:.6} ({z:.2}σ)", r.value, r.stderr, r.analytic),
            });
        }
    }
    let kinds: Vec<String> = {
        let mut v: Vec<String> = Vec::new();
        for s in &out.dynamics {
            if !v.contains(&s.perturbation) {
                v.push(s.perturbation.clone());
            }
        }
        v
    };
    let mut sequences = Vec::new();
    for kind in &kinds {
        let rows: Vec<&DynamicsSummary> = out.dynamics.iter().filter(|s| &s.perturbation == kind).collect();
        if let Some(k) = g.plateau_within_sigmas {
            for r in &rows {
                let z = sigmas(r.plateau_rel, r.asymptotic_haar, r.plateau_rel_stderr);
                out.gates.push(GateResult {
                    name: format!("plateau {kind} {}", r.observable),
                    passed: z <= k,
                    detail: format!(
                        "{:.6} ± {:.6} vs {:.6} ({z:.2}σ)",
                        r.plateau_rel, r.plateau_rel_stderr, r.asymptotic_haar
                    ),
                });
            }
        }
        let purities: Vec<f64> = rows.iter().map(|r| r.purity).collect();
        let plateaus: Vec<f64> = rows.iter().map(|r| r.plateau_rel).collect();
        if g.ordered_by_purity {
            out.gates.push(GateResult {
                name: format!("ordering {kind}"),
                passed: strictly_ordered_by_purity(&purities, &plateaus),
                detail: format!("plateaus {plateaus:.4?} for purities {purities:.4?}"),
            });
        }
        sequences.push(plateau_group_sequence(&purities, &plateaus));
    }
    if g.same_order_across_perturbations && !sequences.is_empty() {
        let same = sequences.windows(2).all(|w| w[0] == w[1]);
        out.gates.push(GateResult {
            name: "ordering across perturbations".into(),
            passed: same,
            detail: format!("purity groups by increasing plateau: {sequences:?}"),
        });
    }
}

/// |x - target| in units of `stderr`; zero error counts only exact agreement.
pub fn sigmas(x: f64, target: f64, stderr: f64) -> f64 {
    let diff = (x - target).abs();
    if diff == 0.0 {
        0.0
    } else if stderr > 0.0 {
        diff / stderr
    } else {
        f64::INFINITY
    }
}
