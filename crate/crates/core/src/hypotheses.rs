//! Measured kernel constant `K` and the vacuity of the older smallness
//! conditions.
//!
//! `K1` bounds the time-integrated gain convolution of the weight divided by
//! the weight,
//!
//! ```text
//! ∫_0^T dt ∫ d³p1/p10 ∫_{S+²} dω (1/p0) m#(x + tv − tv', p') m#(x + aω + tv − tv1', p1') B  ≤  K m(x, p)
//! ```
//!
//! and `K2` the time-integrated loss frequency of the weight,
//!
//! ```text
//! ∫_0^T dt ∫ d³p1/p10 ∫_{S+²} dω (1/p0) m#(x − aω + tv − tv1, p1) B  ≤  K.
//! ```
//!
//! Both are measured with the lattice interpolant `m̂` of the weight, the
//! operator quadrature and the trapezoid rule in time, at every lattice node
//! plus seeded off-grid samples. Taking the sup over all nodes makes the
//! discrete collision bounds used by the solver hold exactly on the lattice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{weight_m, KernelSpec};
use crate::kinematics::{Momentum3, Vec3};
use crate::lattice::quadrature::{cumulative_trapezoid, orthogonal_unit, HemisphereRule};
use crate::lattice::{FieldLattice, GridSpec};
use crate::operator::{sweep_raw, CollisionOperator, CollisionQuadrature, FSource, SweepSlice};

pub const K_LABEL: &str = "empirical K (truncated domain)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub label: String,
    pub k1_estimate: f64,
    pub k2_estimate: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Off-grid samples on top of the lattice nodes.
    pub samples: usize,
    pub lattice_nodes: usize,
    pub t_probe: Vec<f64>,
    pub a: f64,
    pub seed: u64,
    /// `sup |z| ∫_{S+²} σ̃(ω) / (1 + |z·ω|) dω` over the probed `z`.
    pub sigma_tilde_ratio_sup: f64,
}

/// `(K1, K2)` contributions of one probe point.
#[derive(Clone, Copy, Debug, Default)]
struct Probe {
    k1: f64,
    k2: f64,
}

impl Probe {
    fn max(self, other: Probe) -> Probe {
        Probe {
            k1: self.k1.max(other.k1),
            k2: self.k2.max(other.k2),
        }
    }
}

/// Random probe point: `x` uniform on the box; `p` alternately uniform on
/// the box and on the shell `0.75 p_max ≤ |p| ≤ p_max`.
fn probe_point(rng: &mut ChaCha8Rng, grid: &GridSpec, heavy: bool) -> (Vec3, Vec3) {
    let (xm, pm) = (grid.x_max, grid.p_max);
    let x = Vec3::new(
        rng.random_range(-xm..=xm),
        rng.random_range(-xm..=xm),
        rng.random_range(-xm..=xm),
    );
    let p = if heavy {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        let len = pm * rng.random_range(0.75..=1.0);
        len * Vec3::new(r * phi.cos(), r * phi.sin(), z)
    } else {
        Vec3::new(
            rng.random_range(-pm..=pm),
            rng.random_range(-pm..=pm),
            rng.random_range(-pm..=pm),
        )
    };
    (x, p)
}

/// Estimates `K` on the time grid of `grid` with collision diameter `a`
/// (use `a = 0` for the Boltzmann operator).
pub fn estimate_k(kernel: &KernelSpec, grid: &GridSpec, a: f64, n_samples: usize, seed: u64) -> Result<HypothesisReport> {
    grid.validate()?;
    kernel.validate()?;
    if n_samples < 100 {
        return Err(Error::InvalidInput(format!("n_samples must be >= 100, got {n_samples}")));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(format!("a must be >= 0, got {a}")));
    }
    let weight = FieldLattice::weight(*grid, kernel);
    let quad = CollisionQuadrature::new(grid, kernel);
    let times = grid.times();
    let trapezoid = cumulative_trapezoid(grid.n_t, grid.dt());
    let w_t = trapezoid.last().expect("n_t >= 2");

    let slices: Vec<SweepSlice<'_>> = times
        .iter()
        .map(|&t| SweepSlice {
            field: &weight,
            t,
            f: FSource::Unit,
        })
        .collect();
    let raw = sweep_raw(&slices, &quad, 1.0, a);
    let mut nodes = Probe::default();
    for i in 0..grid.len() {
        let gain: f64 = w_t.iter().zip(&raw).map(|(w, r)| w * r.gain[i]).sum();
        let freq: f64 = w_t.iter().zip(&raw).map(|(w, r)| w * r.freq[i]).sum();
        nodes = nodes.max(Probe {
            k1: gain / weight.values()[i],
            k2: freq,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(Vec3, Vec3)> = (0..n_samples)
        .map(|i| probe_point(&mut rng, grid, i % 2 == 1))
        .collect();
    let ops: Vec<CollisionOperator<'_>> = times
        .iter()
        .map(|&t| CollisionOperator::with_parts(&weight, t, &quad, 1.0, a, FSource::Unit))
        .collect();
    let sampled = points
        .par_iter()
        .map(|(x, p)| {
            let (mut gain, mut freq) = (0.0, 0.0);
            for (w, op) in w_t.iter().zip(&ops) {
                let (g, nu) = op.gain_and_frequency(x, p);
                gain += w * g;
                freq += w * nu;
            }
            Probe {
                k1: gain / weight_m(x, &Momentum3(*p), kernel),
                k2: freq,
            }
        })
        .reduce(Probe::default, Probe::max);

    let sup = nodes.max(sampled);
    Ok(HypothesisReport {
        label: K_LABEL.to_string(),
        k1_estimate: sup.k1,
        k2_estimate: sup.k2,
        k: sup.k1.max(sup.k2),
        samples: n_samples,
        lattice_nodes: grid.len(),
        t_probe: times,
        a,
        seed,
        sigma_tilde_ratio_sup: sigma_tilde_ratio_sup(kernel),
    })
}

/// `|z| ∫ σ̃(ω) / (1 + |z·ω|) dω` over the hemisphere `ω·z ≥ 0`.
pub fn sigma_tilde_ratio(kernel: &KernelSpec, z: &Vec3) -> f64 {
    let len = z.norm();
    let n = z / len;
    let rule = HemisphereRule::new(20_000);
    let integral: f64 = rule
        .oriented(&n, &orthogonal_unit(&n))
        .map(|(omega, w)| w * kernel.sigma_tilde.eval(&omega) / (1.0 + z.dot(&omega).abs()))
        .sum();
    len * integral
}

/// Sup of [`sigma_tilde_ratio`] over `|z| ∈ [1e-2, 1e2]` (41 log-spaced
/// magnitudes) along the axes and a diagonal, in both orientations.
pub fn sigma_tilde_ratio_sup(kernel: &KernelSpec) -> f64 {
    let dirs = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(0.0, 0.0, -1.0),
        Vec3::new(1.0, 1.0, 1.0).normalize(),
    ];
    (0..=40)
        .flat_map(|i| {
            let len = 10f64.powf(-2.0 + 0.1 * i as f64);
            dirs.iter().map(move |d| sigma_tilde_ratio(kernel, &(len * d)))
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub t_max: f64,
    pub n_t: usize,
    pub k1: f64,
    pub k2: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

/// `K` for each `t_max` at fixed time step `grid.dt()`, and the increments
/// `K(t_{i+1}) − K(t_i)` between successive rows.
pub fn k_growth(
    kernel: &KernelSpec,
    grid: &GridSpec,
    a: f64,
    n_samples: usize,
    seed: u64,
    t_maxes: &[f64],
) -> Result<(Vec<GrowthRow>, Vec<f64>)> {
    let dt = grid.dt();
    let rows = t_maxes
        .iter()
        .map(|&t_max| {
            let n_t = (t_max / dt).round() as usize + 1;
            let g = GridSpec { t_max, n_t, ..*grid };
            let r = estimate_k(kernel, &g, a, n_samples, seed)?;
            Ok(GrowthRow {
                t_max,
                n_t,
                k1: r.k1_estimate,
                k2: r.k2_estimate,
                k: r.k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let increments = rows.windows(2).map(|w| w[1].k - w[0].k).collect();
    Ok((rows, increments))
}

/// Constants of the earlier smallness conditions `R² < β⁴|v| / (16π² c L a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaleanoParams {
    pub beta: f64,
    pub c: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
}

impl GaleanoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("c", self.c), ("L", self.l), ("a", self.a)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// `β⁴ / (16π² c L a)`: the bound per unit `|v|`.
    pub fn slope(&self) -> f64 {
        self.beta.powi(4) / (16.0 * std::f64::consts::PI.powi(2) * self.c * self.l * self.a)
    }
}

/// `β⁴ |v| / (16π² c L a)`.
pub fn galeano_bound(params: &GaleanoParams, v: &Vec3) -> f64 {
    params.slope() * v.norm()
}

/// Open interval `(0, sqrt(bound))` of radii with `R² < bound`, if nonempty.
pub fn admissible_radii(bound: f64) -> Option<(f64, f64)> {
    (bound > 0.0).then(|| (0.0, bound.sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vacuity {
    pub slope: f64,
    /// `inf_v bound(v) = slope · inf |v| = 0`.
    pub infimum: f64,
    pub bound_at_zero: f64,
    /// Radii admissible for every `v` at once; `None` means the set is empty.
    pub uniform_radii: Option<(f64, f64)>,
    pub fixed_speed: f64,
    /// Radii admissible at the fixed speed `v0`.
    pub fixed_speed_radii: Option<(f64, f64)>,
}

/// The bound is linear in `|v|` and `|v|` ranges over `[0, ∞)`, so the
/// infimum over velocities is exactly 0 and no `R > 0` satisfies the
/// condition uniformly; at a fixed speed `v0 > 0` the interval is nonempty.
pub fn vacuity(params: &GaleanoParams, v0: f64) -> Result<Vacuity> {
    params.validate()?;
    let slope = params.slope();
    let infimum = slope * 0.0;
    let fixed = slope * v0;
    Ok(Vacuity {
        slope,
        infimum,
        bound_at_zero: galeano_bound(params, &Vec3::zeros()),
        uniform_radii: admissible_radii(infimum),
        fixed_speed: v0,
        fixed_speed_radii: admissible_radii(fixed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SigmaTilde;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec {
            n_x: 3,
            n_p: 3,
            n_omega: 8,
            n_t: 3,
            t_max: 1.0,
            quad_order: 3,
            ..GridSpec::default()
        }
    }

    #[test]
    fn zero_kernel_gives_zero_k() {
        let kernel = KernelSpec {
            sigma_tilde: SigmaTilde::Constant { value: 0.0 },
            ..KernelSpec::default()
        };
        let r = estimate_k(&kernel, &grid(), 0.2, 100, 0).unwrap();
        assert_eq!((r.k1_estimate, r.k2_estimate, r.k), (0.0, 0.0, 0.0));
    }

    #[test]
    fn report_invariants() {
        let r = estimate_k(&KernelSpec::default(), &grid(), 0.2, 100, 3).unwrap();
        assert!(r.k1_estimate.is_finite() && r.k1_estimate > 0.0);
        assert!(r.k2_estimate.is_finite() && r.k2_estimate > 0.0);
        assert!(r.k >= r.k1_estimate.max(r.k2_estimate));
        assert_eq!(r.t_probe.last(), Some(&1.0));
        assert!(estimate_k(&KernelSpec::default(), &grid(), 0.2, 99, 3).is_err());
        let again = estimate_k(&KernelSpec::default(), &grid(), 0.2, 100, 3).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn k_grows_with_horizon() {
        let (rows, inc) = k_growth(&KernelSpec::default(), &grid(), 0.2, 100, 1, &[1.0, 2.0]).unwrap();
        assert_eq!(rows[1].n_t, 5);
        assert!(inc[0] >= 0.0, "{rows:?}");
    }

    #[test]
    fn sigma_ratio_constant_closed_form() {
        // |z| · 2π ln(1 + |z|)/|z|
        let kernel = KernelSpec::default();
        for len in [0.01, 1.0, 100.0] {
            let got = sigma_tilde_ratio(&kernel, &Vec3::new(0.0, len, 0.0));
            let exact = 2.0 * PI * (1.0 + len).ln();
            assert!((got - exact).abs() < 1e-6 * exact, "{len}: {got} vs {exact}");
        }
        let sup = sigma_tilde_ratio_sup(&kernel);
        assert!((sup - 2.0 * PI * 101f64.ln()).abs() < 1e-5);
    }

    fn galeano() -> GaleanoParams {
        GaleanoParams {
            beta: 1.3,
            c: 0.7,
            l: 2.0,
            a: 0.1,
        }
    }

    #[test]
    fn bound_vanishes_at_rest() {
        assert_eq!(galeano_bound(&galeano(), &Vec3::zeros()), 0.0);
        let v = vacuity(&galeano(), 0.5).unwrap();
        assert_eq!(v.infimum, 0.0);
        assert_eq!(v.uniform_radii, None);
        let (lo, hi) = v.fixed_speed_radii.unwrap();
        assert!(lo < hi && hi * hi < galeano().slope() * 0.5 * (1.0 + 1e-15));
    }

    proptest! {
        #[test]
        fn bound_is_linear_in_speed(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0, k in 0u32..20) {
            let v = Vec3::new(x, y, z);
            let s = 2f64.powi(k as i32);
            let p = galeano();
            prop_assert_eq!(galeano_bound(&p, &(s * v)), s * galeano_bound(&p, &v));
        }
    }
}
