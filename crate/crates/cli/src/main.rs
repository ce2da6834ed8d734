use clap::Parser;
use ffno_cli::{log, run, Cli, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests exit 0; malformed command lines exit 2
            let code = if e.use_stderr() { CliError::Usage(String::new()).exit_code() } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        log::error(
            "failed",
            serde_json::json!({"category": e.category(), "exit_code": e.exit_code(), "message": e.to_string()}),
        );
        std::process::exit(e.exit_code());
    }
}
