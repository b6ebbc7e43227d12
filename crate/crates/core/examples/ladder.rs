//! Prints the four-scenario report for the bundled manifest.

use ips_core::{fixture, render_ladder_text, run_ladder};

fn main() {
    let config = fixture::config();
    let results = run_ladder(&fixture::dataset(), &config, config.seed).expect("fixture runs");
    print!("{}", render_ladder_text(&results));
}
