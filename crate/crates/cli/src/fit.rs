//! λ estimation from a measured or simulated infidelity series.

use std::path::Path;

use purity_core::dynamics::{fit_lambda, state_seed, LambdaFit};
use purity_core::metrics::diagonal_ensemble;
use purity_core::SeedSpec;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::table::Table;

#[derive(Debug, Clone, PartialEq)]
pub struct InfidelityData {
    pub times: Vec<f64>,
    pub infidelity: Vec<f64>,
}

const TIME_COLUMNS: [&str; 2] = ["time", "t"];
const INFIDELITY_COLUMNS: [&str; 2] = ["infidelity", "exact"];

/// Reads a CSV with a header naming a time column (`time` or `t`) and an
/// infidelity column (`infidelity` or `exact`). Errors carry the line number.
pub fn read_series(path: &Path) -> CliResult<InfidelityData> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse_series(file, &path.display().to_string())
}

pub fn parse_series<R: std::io::Read>(reader: R, name: &str) -> CliResult<InfidelityData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{name}: header: {e}")))?
        .clone();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h));
    let (Some(tc), Some(ic)) = (find(&TIME_COLUMNS), find(&INFIDELITY_COLUMNS)) else {
        return Err(CliError::Input(format!(
            "{name}: header must name a time column ({}) and an infidelity column ({})",
            TIME_COLUMNS.join("/"),
            INFIDELITY_COLUMNS.join("/")
        )));
    };
    let mut data = InfidelityData {
        times: Vec::new(),
        infidelity: Vec::new(),
    };
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::Input(format!("{name}: line {line}: {e}")))?;
        let cell = |c: usize, what: &str| -> CliResult<f64> {
            let raw = record
                .get(c)
                .ok_or_else(|| CliError::Input(format!("{name}: line {line}: missing {what}")))?;
            let x: f64 = raw
                .parse()
                .map_err(|_| CliError::Input(format!("{name}: line {line}: {what} '{raw}' is not a number")))?;
            if !x.is_finite() {
                return Err(CliError::Input(format!("{name}: line {line}: {what} is not finite")));
            }
            Ok(x)
        };
        data.times.push(cell(tc, "time")?);
        data.infidelity.push(cell(ic, "infidelity")?);
    }
    Ok(data)
}

/// S₀ of the scenario's initial state: the deterministic state, or state 0 of
/// a random ensemble drawn with the scenario seed.
pub fn scenario_s0(config: &ScenarioConfig, seed: Option<u64>) -> CliResult<f64> {
    let seed = seed.or(config.seed).unwrap_or(crate::scenario::DEFAULT_SEED);
    let system = config.system()?;
    let ensemble = config.state_ensemble()?;
    let psi = ensemble.sample(&mut state_seed(&SeedSpec::new(seed), 0).rng(), &system)?;
    Ok(diagonal_ensemble(&config.hamiltonian()?, &psi)?.ipr)
}

pub fn fit(data: &InfidelityData, s0: f64) -> CliResult<LambdaFit> {
    if !(0.0..=1.0).contains(&s0) {
        return Err(CliError::Input(format!("S0 = {s0} outside [0, 1]")));
    }
    Ok(fit_lambda(&data.times, &data.infidelity, s0)?)
}

pub fn curve_table(data: &InfidelityData, fit: &LambdaFit) -> CliResult<Table> {
    let mut t = Table::new(&["time", "infidelity", "fitted"]);
    for ((&time, &inf), &fitted) in data.times.iter().zip(&data.infidelity).zip(&fit.curve) {
        t.push(vec![time.into(), inf.into(), fitted.into()])?;
    }
    Ok(t)
}
