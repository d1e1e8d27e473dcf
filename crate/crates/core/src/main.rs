use clap::error::ErrorKind;
use clap::Parser;

use robust_ik::cli::{self, Cli};

fn main() {
    // clap's default error exit code (2) would collide with the
    // "unreachable target" code, so map usage errors to 1 ourselves.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => cli::EXIT_INPUT_ERROR,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(cli::run(cli));
}
