use clap::Parser;

use secest_cli::{exit_code, run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    let stdout = std::io::stdout();
    if let Err(err) = run(&cfg, &mut stdout.lock()) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
