use clap::Parser;
use volpot_cli::{run_cli, Flags};

fn main() {
    if let Err(e) = run_cli(Flags::parse()) {
        eprintln!("volpot: {e}");
        std::process::exit(e.exit_code());
    }
}
