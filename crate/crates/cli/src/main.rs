use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use purity_cli::config::{self, ModelConfig, ModelKind, ObservablesConfig, ScenarioConfig, SCHEMA_VERSION};
use purity_cli::error::{CliError, CliResult};
use purity_cli::scenario::{purity_table, run_scenario, Studies};
use purity_cli::sweep::run_sweep;
use purity_cli::validate::{run_validate, Faults};
use purity_cli::{fit, with_threads};

#[derive(Parser)]
#[command(name = "purity", version, about = "Observable purity and error studies for spin models")]
struct Cli {
    /// Master seed; overrides the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "PURITY_THREADS")]
    threads: Option<usize>,
    /// Output directory (default: <output.directory>/<id> from the scenario).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in oracle checks.
    Validate {
        /// Replace the GOE off-diagonal variance in the f(τ) check (fault injection).
        #[arg(long)]
        inject_goe_offdiag_variance: Option<f64>,
    },
    /// Static perturbed-state study of a scenario.
    Static,
    /// Perturbed-dynamics study of a scenario.
    Dynamics,
    /// Every study present in the scenario.
    Run,
    /// Parameter sweep described by the scenario's [sweep] table.
    Sweep,
    /// Estimate λ from an infidelity series.
    FitLambda {
        /// CSV with a time column and an infidelity column.
        #[arg(long)]
        input: PathBuf,
        /// S₀ of the initial state; taken from --config when omitted.
        #[arg(long)]
        s0: Option<f64>,
    },
    /// Observable purity and diagonal purity.
    Purity {
        #[arg(long, value_enum)]
        model: Option<Model>,
        #[arg(long)]
        particles: Option<usize>,
        /// B/Λ (LMG) or h/J (Ising chain).
        #[arg(long, default_value_t = 0.0)]
        field: f64,
        #[arg(long)]
        representation: Option<String>,
        /// Observable descriptor, e.g. sz^2, proj-sx:1/2, partition:3, pauli:x1*z2.
        #[arg(long = "family")]
        families: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Lmg,
    Tim,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = cli.threads;
    match with_threads(threads, || execute(cli)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn require_config(cli: &Cli) -> CliResult<ScenarioConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Input("this command needs --config <file>".into()))?;
    config::load(path)
}

fn out_dir(cli: &Cli, config: &ScenarioConfig) -> PathBuf {
    cli.out
        .clone()
        .unwrap_or_else(|| config.output.directory.join(&config.id))
}

fn execute(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Validate {
            inject_goe_offdiag_variance,
        } => {
            let faults = Faults {
                goe_offdiag_variance: *inject_goe_offdiag_variance,
            };
            let report = run_validate(cli.seed.unwrap_or(purity_cli::scenario::DEFAULT_SEED), faults);
            print!("{}", report.render());
            if let Some(dir) = &cli.out {
                create(dir)?;
                report.to_table()?.write(&dir.join("validate.csv"))?;
            }
            let uncovered = report.uncovered();
            if !uncovered.is_empty() {
                return Err(CliError::Input(format!("formulas without a check: {}", uncovered.join(", "))));
            }
            gate(report.failures())
        }
        Command::Static | Command::Dynamics | Command::Run => {
            let config = require_config(&cli)?;
            let studies = match cli.command {
                Command::Static => Studies {
                    static_study: true,
                    dynamics: false,
                },
                Command::Dynamics => Studies {
                    static_study: false,
                    dynamics: true,
                },
                _ => Studies::ALL,
            };
            let output = run_scenario(&config, cli.seed, studies)?;
            let dir = out_dir(&cli, &config);
            output.write(&dir)?;
            for g in &output.gates {
                println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
            }
            log::info!("wrote {}", dir.display());
            gate(output.failed_gates())
        }
        Command::Sweep => {
            let config = require_config(&cli)?;
            let output = run_sweep(&config, cli.seed)?;
            let dir = out_dir(&cli, &config);
            output.write(&dir)?;
            let mut failed = 0;
            for (value, g) in output.gates() {
                failed += usize::from(!g.passed);
                println!(
                    "{} {}={value} {}: {}",
                    if g.passed { "PASS" } else { "FAIL" },
                    output.parameter,
                    g.name,
                    g.detail
                );
            }
            let failures = output.failures();
            if !failures.is_empty() {
                log::warn!("{} of {} sweep points failed; see failures.txt", failures.len(), output.points.len());
            }
            log::info!("wrote {}", dir.display());
            gate(failed + failures.len())
        }
        Command::FitLambda { input, s0 } => {
            let data = fit::read_series(input)?;
            let s0 = match s0 {
                Some(s) => *s,
                None => fit::scenario_s0(&require_config(&cli)?, cli.seed)?,
            };
            let result = fit::fit(&data, s0)?;
            println!("lambda {:.10e}", result.lambda);
            println!("s0 {s0:.10e}");
            println!("residual {:.6e}", result.residual);
            if let Some(note) = &result.note {
                log::warn!("{note}");
            }
            if let Some(dir) = &cli.out {
                create(dir)?;
                fit::curve_table(&data, &result)?.write(&dir.join("fit.csv"))?;
            }
            Ok(())
        }
        Command::Purity {
            model,
            particles,
            field,
            representation,
            families,
        } => {
            let config = match (&cli.config, model) {
                (Some(_), _) => require_config(&cli)?,
                (None, Some(m)) => {
                    let particles = particles.ok_or_else(|| CliError::Input("--particles is required with --model".into()))?;
                    inline_config(*m, particles, *field, representation.clone(), families.clone())?
                }
                (None, None) => return Err(CliError::Input("give --config or --model".into())),
            };
            let table = purity_table(&config)?;
            std::io::Write::write_all(&mut std::io::stdout(), &table.to_csv_bytes()?)
                .map_err(|e| CliError::io("stdout", e))?;
            if let Some(dir) = &cli.out {
                create(dir)?;
                table.write(&dir.join("purity.csv"))?;
            }
            Ok(())
        }
    }
}

fn inline_config(
    model: Model,
    particles: usize,
    field: f64,
    representation: Option<String>,
    families: Vec<String>,
) -> CliResult<ScenarioConfig> {
    let config = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        id: "inline".into(),
        seed: None,
        model: ModelConfig {
            kind: match model {
                Model::Lmg => ModelKind::Lmg,
                Model::Tim => ModelKind::Tim,
            },
            particles,
            representation,
            field_per_coupling: field,
            coupling: 1.0,
        },
        observables: ObservablesConfig { families },
        ensemble: Default::default(),
        dynamics: None,
        static_study: None,
        sweep: None,
        gates: Default::default(),
        output: Default::default(),
    };
    config.validate().map_err(|m| CliError::config("command line", m))?;
    Ok(config)
}

fn create(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))
}

fn gate(failed: usize) -> CliResult<()> {
    if failed > 0 {
        Err(CliError::Gate(failed))
    } else {
        Ok(())
    }
}
