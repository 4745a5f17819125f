//! Near-vacuum Picard solve on the desk grid: measure K and L, take half the
//! smallness threshold as R, start from a Gaussian with |||f0||| = R/2.

use std::time::Instant;

use enskog::hypotheses::estimate_k;
use enskog::lattice::{GridSpec, NodalWeight};
use enskog::operator::{gaussian_field, OperatorConfig};
use enskog::solver::{lipschitz_bound, positivity_check, smallness_threshold, JMap, SolverParams};

fn main() -> enskog::Result<()> {
    let grid = GridSpec::desk();
    let cfg = OperatorConfig::default();

    let clock = Instant::now();
    let report = estimate_k(&cfg.kernel, &grid, cfg.a, 100, 0)?;
    let lipschitz = lipschitz_bound(&grid, &cfg);
    println!(
        "K1 = {:.4e}  K2 = {:.4e}  L = {:.4e}  ({:.1?})",
        report.k1_estimate,
        report.k2_estimate,
        lipschitz,
        clock.elapsed()
    );

    let mut params = SolverParams {
        radius: 1.0,
        lipschitz,
        k_const: report.k,
        max_iter: 60,
        tol: 1e-12,
    };
    let threshold = smallness_threshold(&params, &cfg);
    params.radius = 0.5 * threshold;

    let shape = gaussian_field(grid, 1.0, 1.5, 1.0);
    let norm = NodalWeight::new(&grid, &cfg.kernel).slice_norm(&shape);
    let f0 = shape.scaled(0.5 * params.radius / norm);
    println!("threshold = {threshold:.4e}  R = {:.4e}", params.radius);

    let map = JMap::new(grid, cfg)?;
    let clock = Instant::now();
    let (traj, diag) = map.solve(&f0, &params)?;
    println!("solved in {:.1?}", clock.elapsed());
    println!("{:>4} {:>12} {:>12} {:>10} {:>12}", "n", "norm", "residual", "ratio", "min f");
    for r in &diag.iterations {
        println!(
            "{:>4} {:>12.4e} {:>12.4e} {:>10.4} {:>12.4e}",
            r.iteration, r.norm, r.residual, r.ratio, r.min_value
        );
    }
    let pos = positivity_check(&traj, &cfg);
    println!("min f = {:.3e}, nonnegative: {}", pos.min_value, pos.ok);
    Ok(())
}
