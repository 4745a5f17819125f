//! Build a trajectory on the lattice, interpolate off-grid, take the
//! weighted norm and round-trip it through both payload encodings.

use enskog::kernel::KernelSpec;
use enskog::lattice::io::{read_trajectory, write_trajectory, Encoding};
use enskog::lattice::{weighted_norm, FieldLattice, GridSpec, Trajectory};
use enskog::Vec3;

fn main() -> enskog::Result<()> {
    let grid = GridSpec {
        n_t: 3,
        ..GridSpec::desk()
    };
    let f = FieldLattice::from_fn(grid, |x, p| 0.1 * (-x.norm_squared() / 2.0 - p.norm_squared()).exp());
    println!("{} nodes, spacing dx = {}, dp = {}", grid.len(), grid.dx(), grid.dp());
    println!("mass = {:.6e}", f.mass());
    let x = Vec3::new(0.3, -0.7, 1.1);
    let p = Vec3::new(0.2, 0.0, -0.4);
    println!(
        "f at {:?}, {:?}: interpolated {:.6e}, exact {:.6e}",
        x.as_slice(),
        p.as_slice(),
        f.interpolate(&x, &p),
        0.1 * (-x.norm_squared() / 2.0 - p.norm_squared()).exp()
    );
    println!("outside the box: {}", f.interpolate(&Vec3::new(9.0, 0.0, 0.0), &p));

    let traj = Trajectory::constant(grid, &f);
    println!("|||f||| = {:.6e}", weighted_norm(&traj, &KernelSpec::default()));

    let dir = std::env::temp_dir().join("enskog-lattice-io");
    std::fs::create_dir_all(&dir).map_err(|e| enskog::Error::Format(e.to_string()))?;
    for (encoding, name) in [(Encoding::F64Le, "trajectory.bin"), (Encoding::Csv, "trajectory.csv")] {
        let (header, payload) = (dir.join("header.json"), dir.join(name));
        write_trajectory(&traj, &header, &payload, encoding)?;
        let back = read_trajectory(&header, &payload)?;
        let exact = back
            .slices()
            .iter()
            .zip(traj.slices())
            .all(|(a, b)| a.values().iter().zip(b.values()).all(|(u, v)| u.to_bits() == v.to_bits()));
        println!("{encoding:?}: {} bit-exact round trip: {exact}", payload.display());
    }
    Ok(())
}
