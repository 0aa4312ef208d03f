//! Command-line pipeline over `footprint-core`: targets, fusion, extraction,
//! scoring, tiling and the training numerics.
//!
//! Every stage reads all of its inputs before writing anything, writes each
//! output atomically and leaves a JSON run manifest beside its outputs.

pub mod config;
pub mod error;
pub mod io;
pub mod stages;

pub use config::{parse_invocation, resolve, Cli, Invocation};
pub use error::{CliError, CliResult};
pub use stages::{RunOutput, StageConfig};

/// Runs a resolved invocation on a pool of the requested size.
pub fn run_stage(inv: &Invocation) -> CliResult<RunOutput> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = inv.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    pool.install(|| inv.stage.run())
}

/// Full command-line entry point; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_invocation(args).and_then(|inv| run_stage(&inv));
    match result {
        Ok(out) => {
            print!("{}", out.stdout);
            0
        }
        Err(CliError::Info(text)) => {
            print!("{text}");
            0
        }
        Err(CliError::Parse(text)) => {
            eprint!("{text}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
