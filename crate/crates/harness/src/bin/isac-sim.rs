//! `isac-sim`: batch experiments from the command line.
//!
//! `ISAC_WORKERS` sets the number of worker threads.

use clap::Parser;
use isac_harness::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("ISAC_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("isac-sim: cannot size worker pool: {e}");
        }
    }
    if let Err(e) = run(&cli) {
        eprintln!("isac-sim: {e}");
        std::process::exit(e.exit_code());
    }
}
