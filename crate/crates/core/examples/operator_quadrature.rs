//! Gain and loss at a few points by the deterministic quadrature and by the
//! Monte Carlo estimator, then a full lattice sweep.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use enskog::lattice::GridSpec;
use enskog::operator::{density, gaussian_field, sweep_slice, CollisionOperator, OperatorConfig};
use enskog::Vec3;

fn main() {
    let grid = GridSpec {
        n_omega: 200,
        quad_order: 4,
        quad_panels: 6,
        ..GridSpec::default()
    };
    let f = gaussian_field(grid, 0.5, 1.5, 1.0);
    let cfg = OperatorConfig::default();
    let t = 0.5;
    println!("rho(t, 0) = {:.6e}", density(&f, t, &Vec3::zeros()));

    let op = CollisionOperator::new(&f, t, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!(
        "{:>34} {:>12} {:>22} {:>6} {:>12} {:>22} {:>6}",
        "point", "gain", "MC gain", "z", "loss", "MC loss", "z"
    );
    for (x, p) in [
        (Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.3, 0.0, 0.0)),
        (Vec3::new(0.5, -0.5, 0.2), Vec3::new(-0.4, 0.6, 0.1)),
        (Vec3::new(1.0, 1.0, -1.0), Vec3::new(0.0, 0.0, 0.8)),
    ] {
        let mc = op.monte_carlo(&x, &p, 200_000, &mut rng);
        let (gain, loss) = (op.gain(&x, &p), op.loss(&x, &p));
        println!(
            "{:>34} {:>12.5e} {:>12.5e}+-{:.1e} {:>6.2} {:>12.5e} {:>12.5e}+-{:.1e} {:>6.2}",
            format!("{:?}", [x.x, x.y, x.z, p.x, p.y, p.z]),
            gain,
            mc.gain.mean,
            mc.gain.std_err,
            mc.gain.z_score(gain),
            loss,
            mc.loss.mean,
            mc.loss.std_err,
            mc.loss.z_score(loss)
        );
    }

    let coarse = GridSpec::desk();
    let clock = Instant::now();
    let parts = sweep_slice(&gaussian_field(coarse, 0.5, 1.5, 1.0), t, &cfg);
    let q = parts.collision();
    println!(
        "desk-grid sweep over {} nodes in {:.2?}: max gain {:.4e}, max loss {:.4e}, net mass {:.4e}",
        coarse.len(),
        clock.elapsed(),
        parts.gain.values().iter().cloned().fold(0.0, f64::max),
        parts.loss.values().iter().cloned().fold(0.0, f64::max),
        q.mass()
    );
}
