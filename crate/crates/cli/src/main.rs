use clap::error::ErrorKind;
use clap::Parser;
use nl2stl_cli::{run, Cli, CliError};

fn fail(e: &CliError, json: bool) -> ! {
    if json {
        eprintln!("{}", e.to_json());
    } else {
        eprintln!("error: {e}");
    }
    std::process::exit(e.exit_code())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) if json_errors => fail(&CliError::Usage(e.kind().to_string()), true),
        Err(e) => {
            let _ = e.print();
            std::process::exit(1)
        }
    };
    if let Err(e) = run(cli) {
        fail(&e, json_errors);
    }
}
