//! The weight m(x, p), the kernel B along a family of pairs, and the
//! geometric factor Y.

use enskog::kernel::{cross_section, kernel_b, weight_m, y_factor, KernelSpec, SigmaTilde, YFactorSpec};
use enskog::{Momentum3, Vec3};

fn main() -> enskog::Result<()> {
    let kernel = KernelSpec::new(0.5, SigmaTilde::Constant { value: 1.0 })?;

    println!("m(x, p) along x = (r, 0, 0), p = (0, 1, 0):");
    for r in [0.0, 1.0, 2.0, 4.0, 8.0] {
        let m = weight_m(&Vec3::new(r, 0.0, 0.0), &Momentum3::new(0.0, 1.0, 0.0), &kernel);
        println!("  r = {r:>3}  m = {m:.6e}");
    }

    let omega = Vec3::new(0.0, 0.0, 1.0);
    let p = Momentum3::new(1.0, 0.0, 0.0);
    println!("B(p, p1, omega) for p = (1,0,0), p1 = (0, k, 0), omega = e_z:");
    for k in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let p1 = Momentum3::new(0.0, k, 0.0);
        println!(
            "  k = {k:>3}  sigma = {:.6e}  B = {:.6e}",
            cross_section(&p, &p1, &omega, &kernel),
            kernel_b(&p, &p1, &omega, &kernel)
        );
    }

    let axial = KernelSpec::new(0.5, SigmaTilde::Axial { base: 0.5, amplitude: 1.0 })?;
    let p1 = Momentum3::new(0.0, 1.0, 0.0);
    println!(
        "axial sigma: B at omega = e_z {:.6e}, omega = e_x {:.6e}",
        kernel_b(&p, &p1, &omega, &axial),
        kernel_b(&p, &p1, &Vec3::new(1.0, 0.0, 0.0), &axial)
    );

    let linear = YFactorSpec::Linear { b: 0.3 };
    for rho in [0.0, 0.5, 2.0] {
        println!("Y({rho}) = {}", y_factor(rho, &linear)?);
    }
    Ok(())
}
