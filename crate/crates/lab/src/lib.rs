//! Parallel drivers, file formats and the `kylepriv` command line built on
//! [`kylepriv_core`].

#![deny(missing_debug_implementations, rust_2018_idioms)]

pub mod cli;
pub mod error;
pub mod io;
pub mod report;
pub mod runner;

pub use error::{LabError, Result};
pub use report::Report;

/// Parses `args`, runs the command and returns the report as pretty JSON.
pub fn run_args<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = cli::parse(args)?;
    Ok(cli::run(&cli)?.to_json()?)
}
