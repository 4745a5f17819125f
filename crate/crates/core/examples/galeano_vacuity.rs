//! The velocity-dependent condition R^2 < beta^4 |v| / (16 pi^2 c L a)
//! admits no radius uniformly in v; at a fixed speed it does.

use enskog::hypotheses::{galeano_bound, vacuity, GaleanoParams};
use enskog::Vec3;

fn main() -> enskog::Result<()> {
    let params = GaleanoParams {
        beta: 1.0,
        c: 1.0,
        l: 1.0,
        a: 0.2,
    };
    for speed in [1.0, 0.1, 0.01, 0.0] {
        let b = galeano_bound(&params, &Vec3::new(speed, 0.0, 0.0));
        println!("|v| = {speed:<5} bound = {b:.6e}  sup R = {:.6e}", b.sqrt());
    }
    let report = vacuity(&params, 0.5)?;
    println!("inf over v of the bound: {}", report.infimum);
    println!("radii admissible for every v: {:?}", report.uniform_radii);
    println!("radii admissible at v0 = {}: {:?}", report.fixed_speed, report.fixed_speed_radii);
    Ok(())
}
