use clap::Parser;
use mallows_dpm_cli::{run, Cli};

fn main() {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
