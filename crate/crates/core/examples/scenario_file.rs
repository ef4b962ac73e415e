//! Load a scenario file and print the stochastic allocation report as JSON.
//!
//! cargo run -p sigma-alloc --example scenario_file -- scenarios/scenario1.json

use sigma_alloc::cli::report::to_json;
use sigma_alloc::cli::{allocate_report, parse_scenario, Mode};
use sigma_alloc::pipeline::InterpretConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/scenario1.json").to_string());
    let loaded = parse_scenario(&path)?;
    println!("{} robots, sha256 {}", loaded.scenario.size(), loaded.sha256);
    let report = allocate_report(&loaded, Mode::Stoch, &loaded.ut, &InterpretConfig::default())?;
    print!("{}", to_json(&report)?);
    Ok(())
}
