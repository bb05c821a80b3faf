use clap::Parser;
use dimabsa_cli::{execute, exit, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            std::process::exit(exit::OK);
        }
        Err(e) => {
            eprintln!("dimabsa: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
