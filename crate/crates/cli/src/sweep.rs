//! Parameter sweeps: one scenario run per grid point, failures isolated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::config::{ScenarioConfig, Study};
use crate::error::{CliError, CliResult};
use crate::scenario::{run_scenario, GateResult, ScenarioOutput, Studies};
use crate::table::{Cell, Table};

#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub elapsed: Duration,
    pub outcome: Result<ScenarioOutput, String>,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub parameter: String,
    pub table: Table,
    pub points: Vec<SweepPoint>,
    pub total: Duration,
}

impl SweepOutput {
    pub fn failures(&self) -> Vec<(f64, &str)> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().err().map(|e| (p.value, e.as_str())))
            .collect()
    }

    pub fn gates(&self) -> impl Iterator<Item = (f64, &GateResult)> {
        self.points.iter().flat_map(|p| {
            p.outcome
                .iter()
                .flat_map(move |o| o.gates.iter().map(move |g| (p.value, g)))
        })
    }

    /// Plain-text timing report; kept out of the CSV files so that those stay
    /// reproducible.
    pub fn timing_report(&self) -> String {
        let mut s = format!("parameter {}\n", self.parameter);
        for p in &self.points {
            let status = if p.outcome.is_ok() { "ok" } else { "failed" };
            let _ = writeln!(s, "{} {:.3}s {status}", p.value, p.elapsed.as_secs_f64());
        }
        let _ = writeln!(s, "total {:.3}s", self.total.as_secs_f64());
        s
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
        self.table.write(&dir.join("sweep.csv"))?;
        let timing = dir.join("timings.txt");
        fs::write(&timing, self.timing_report()).map_err(|e| CliError::io(timing.display().to_string(), e))?;
        let failures = self.failures();
        if !failures.is_empty() {
            let mut text = String::new();
            for (v, e) in failures {
                let _ = writeln!(text, "{} = {v}: {e}", self.parameter);
            }
            let path = dir.join("failures.txt");
            fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))?;
        }
        Ok(())
    }
}

/// Runs the configured study at every grid point. The table holds the point's
/// summary (dynamics) or static rows prefixed by the parameter name and value.
pub fn run_sweep(config: &ScenarioConfig, seed: Option<u64>) -> CliResult<SweepOutput> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config(config.id.clone(), "no [sweep] table"))?;
    let studies = match sweep.study {
        Study::Static => Studies {
            static_study: true,
            dynamics: false,
        },
        Study::Dynamics => Studies {
            static_study: false,
            dynamics: true,
        },
    };
    let source = match sweep.study {
        Study::Static => "static.csv",
        Study::Dynamics => "summary.csv",
    };
    let start = Instant::now();
    if sweep.values.is_empty() {
        log::warn!("sweep grid for '{}' is empty; nothing to run", sweep.parameter.name());
    }
    let mut points = Vec::with_capacity(sweep.values.len());
    let mut table: Option<Table> = None;
    for &value in &sweep.values {
        let t0 = Instant::now();
        let outcome = config
            .with_parameter(sweep.parameter, value)
            .and_then(|c| run_scenario(&c, seed, studies).map_err(|e| e.to_string()));
        match &outcome {
            Ok(out) => {
                let src = out.table(source).expect("study produces its table");
                let t = table.get_or_insert_with(|| prefixed_table(src.headers()));
                for row in src.rows() {
                    let mut cells: Vec<Cell> = vec![sweep.parameter.name().into(), value.into()];
                    cells.extend(row[1..].iter().cloned());
                    t.push(cells)?;
                }
            }
            Err(e) => log::error!("{} = {value} failed: {e}", sweep.parameter.name()),
        }
        points.push(SweepPoint {
            value,
            elapsed: t0.elapsed(),
            outcome,
        });
    }
    Ok(SweepOutput {
        parameter: sweep.parameter.name().into(),
        table: table.unwrap_or_else(|| Table::new(&["parameter", "value"])),
        points,
        total: start.elapsed(),
    })
}

fn prefixed_table(headers: &[String]) -> Table {
    let mut h: Vec<&str> = vec!["parameter", "value"];
    h.extend(headers[1..].iter().map(String::as_str));
    Table::new(&h)
}
