//! Load a scenario file and run the solve pipeline in process.
//!
//! ```text
//! cargo run --release --example run_scenario -- crates/core/examples/scenarios/desk.toml
//! ```

use std::path::PathBuf;

use enskog::cli::solve_scenario;
use enskog::config::ScenarioConfig;

fn main() -> enskog::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/desk.toml")
    });
    let scenario = ScenarioConfig::load(&path)?;
    let out = solve_scenario(&scenario)?;
    println!("{}", serde_json::to_string_pretty(&out.summary).expect("serializable"));
    out.diagnostics
        .write_csv(std::io::stdout().lock())
        .map_err(|e| enskog::Error::Format(e.to_string()))?;
    Ok(())
}
