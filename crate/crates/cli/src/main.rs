use clap::Parser;

fn main() {
    let cli = bvarch_cli::Cli::parse();
    if let Err(e) = bvarch_cli::run(&cli) {
        let payload = serde_json::json!({ "error": e.payload() });
        eprintln!("{payload}");
        std::process::exit(e.exit_code());
    }
}
