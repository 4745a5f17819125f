//! Two-body elastic collisions: invariants, the S+ hemisphere, post-collision
//! momenta, the scattering angle and a random identity sweep.

use enskog::kinematics::{
    collision_invariants, identity_sweep, in_s_plus, omega_flux, post_collision, CollisionGeometry,
};
use enskog::{Momentum3, Vec3};

fn main() -> enskog::Result<()> {
    let p = Momentum3::new(1.0, 0.0, 0.0);
    let p1 = Momentum3::zero();
    let inv = collision_invariants(&p, &p1);
    println!("p = (1,0,0), p1 = 0");
    println!("  s = {:.12}  g = {:.12}  v_M = {:.12}", inv.s, inv.g, inv.moller);
    println!("  s - 4 - 4g^2 = {:.1e}", inv.s - 4.0 - 4.0 * inv.g * inv.g);

    // head-on: full exchange
    let omega = Vec3::new(-1.0, 0.0, 0.0);
    println!("  omega = (-1,0,0) in S+: {}", in_s_plus(&p, &p1, &omega)?);
    let post = post_collision(&p, &p1, &omega)?;
    println!(
        "  q = {}  p' = {:?}  p1' = {:?}",
        post.q,
        post.p_prime.0.as_slice(),
        post.p1_prime.0.as_slice()
    );
    let geom = CollisionGeometry::new(p, p1, omega)?;
    println!("  theta = {:.6} (pi = {:.6})", geom.theta, std::f64::consts::PI);
    println!("  omega flux = {:.6}, g/sqrt(s) = {:.6}", omega_flux(&p, &p1, &omega)?, inv.g / inv.s.sqrt());

    // the opposite hemisphere is outside the collision domain
    match post_collision(&p, &p1, &-omega) {
        Err(e) => println!("  omega = (1,0,0): {e}"),
        Ok(_) => unreachable!(),
    }

    let d = identity_sweep(200_000, 10.0, 7);
    println!("random sweep over {} collisions, |p|, |p1| <= 10:", d.samples);
    println!("  momentum {:.2e}  energy {:.2e}", d.momentum, d.energy);
    println!("  s identity {:.2e}  v_M^2 identity {:.2e}", d.s_identity, d.moller_identity);
    Ok(())
}
