//! Enskog solutions with a^2 Y = lambda held fixed approach the Boltzmann
//! solution as the diameter a shrinks.

use enskog::cli::boltzmann_limit;
use enskog::config::ScenarioConfig;

fn main() -> enskog::Result<()> {
    let mut scenario = ScenarioConfig::default();
    scenario.operator.lambda = 0.04;
    scenario.limit_a_values = vec![0.4, 0.2, 0.1, 0.05];
    let table = boltzmann_limit(&scenario)?;
    println!("K = {:.4e}, R = {:.4e}", table.k_const, table.radius);
    print!("{}", table.to_csv());
    for w in table.rows.windows(2) {
        println!(
            "a {} -> {}: difference ratio {:.3}",
            w[0].a,
            w[1].a,
            w[1].diff_norm / w[0].diff_norm
        );
    }
    Ok(())
}
