//! Scenario files, result tables and the `purity` command line.

pub mod config;
pub mod error;
pub mod fit;
pub mod scenario;
pub mod sweep;
pub mod table;
pub mod validate;

use error::{CliError, CliResult};

/// Runs `f` on a dedicated rayon pool. Results do not depend on the thread
/// count because every parallel reduction is formed in index order.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Input(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}
