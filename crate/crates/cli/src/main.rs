use clap::Parser;
use quasicross_cli::commands::{execute, Cli, Command, EXIT_USAGE};

fn main() {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    if let Command::Serve { port } = cli.command {
        let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
        if let Err(e) = runtime.block_on(quasicross_cli::service::serve(port)) {
            eprintln!(
                "{}",
                serde_json::json!({"error": "io", "message": e.to_string()})
            );
            std::process::exit(EXIT_USAGE);
        }
        return;
    }
    let outcome = execute(cli.command);
    outcome.emit();
    std::process::exit(outcome.code);
}
