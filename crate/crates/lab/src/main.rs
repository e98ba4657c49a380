use std::process::ExitCode;

use kylepriv_lab::LabError;

fn main() -> ExitCode {
    match kylepriv_lab::run_args(std::env::args_os()) {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(LabError::Usage(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
