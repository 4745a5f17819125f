//! Measured kernel constant K, its growth with the time horizon, and the
//! resulting smallness threshold.

use enskog::hypotheses::{estimate_k, k_growth, sigma_tilde_ratio};
use enskog::lattice::GridSpec;
use enskog::operator::OperatorConfig;
use enskog::solver::{lipschitz_bound, smallness_threshold, SolverParams};
use enskog::Vec3;

fn main() -> enskog::Result<()> {
    let grid = GridSpec::desk();
    let cfg = OperatorConfig::default();
    let report = estimate_k(&cfg.kernel, &grid, cfg.a, 200, 0)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));

    for len in [0.01, 1.0, 100.0] {
        println!(
            "|z| = {len:>6}: |z| * int sigma/(1+|z.w|) = {:.4}",
            sigma_tilde_ratio(&cfg.kernel, &Vec3::new(0.0, 0.0, len))
        );
    }

    let (rows, increments) = k_growth(&cfg.kernel, &grid, cfg.a, 100, 0, &[2.0, 4.0, 8.0])?;
    for r in &rows {
        println!("t_max = {:>3}  n_t = {:>2}  K1 = {:.4e}  K2 = {:.4e}", r.t_max, r.n_t, r.k1, r.k2);
    }
    println!("increments between doublings: {increments:?}");

    let params = SolverParams {
        radius: 1.0,
        lipschitz: lipschitz_bound(&grid, &cfg),
        k_const: report.k,
        max_iter: 1,
        tol: 1.0,
    };
    println!(
        "L = {:.4e}, smallness threshold R0 = {:.4e}",
        params.lipschitz,
        smallness_threshold(&params, &cfg)
    );
    Ok(())
}
