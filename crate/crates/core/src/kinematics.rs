//! Relativistic elastic two-body collisions in dimensionless units (m = c = 1).
//!
//! A pre-collision pair `(p, p1)` and an impact direction `ω` on the
//! admissible hemisphere
//!
//! ```text
//! S+² = { ω ∈ S² : ω·(p1/p10 − p/p0) ≥ 0 }
//! ```
//!
//! determine the post-collision momenta `p' = p + qω`, `p1' = p1 − qω` with
//!
//! ```text
//! q = 2 (p0 + p10) p0 p10 ω·(p1/p10 − p/p0) / ((p0 + p10)² − (ω·(p + p1))²)
//! ```
//!
//! which conserves total momentum and energy.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `|ω| − 1` for direction arguments.
pub const UNIT_TOL: f64 = 1e-12;

/// Largest excursion of an arccos argument outside `[-1, 1]` that is
/// silently clamped.
pub const ACOS_CLAMP_TOL: f64 = 1e-12;

/// Dimensionless 3-momentum; the energy is `p0 = sqrt(1 + |p|²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Momentum3(pub Vec3);

impl Momentum3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Momentum3(Vec3::new(x, y, z))
    }

    pub fn zero() -> Self {
        Momentum3(Vec3::zeros())
    }

    #[inline]
    pub fn vec(&self) -> Vec3 {
        self.0
    }

    #[inline]
    pub fn energy(&self) -> f64 {
        (1.0 + self.0.norm_squared()).sqrt()
    }

    /// Velocity `p / p0`.
    #[inline]
    pub fn velocity(&self) -> Vec3 {
        self.0 / self.energy()
    }
}

impl From<Vec3> for Momentum3 {
    fn from(v: Vec3) -> Self {
        Momentum3(v)
    }
}

impl From<[f64; 3]> for Momentum3 {
    fn from(v: [f64; 3]) -> Self {
        Momentum3(Vec3::from(v))
    }
}

pub fn energy(p: &Momentum3) -> f64 {
    p.energy()
}

/// `p10 − p0` without cancellation: `(|p1|² − |p|²) / (p10 + p0)`.
#[inline]
pub(crate) fn energy_difference(p1: &Vec3, p10: f64, p: &Vec3, p0: f64) -> f64 {
    (p1.norm_squared() - p.norm_squared()) / (p10 + p0)
}

/// Collision invariants of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    /// `s = (p0 + p10)² − |p + p1|²`
    pub s: f64,
    /// `g = sqrt(|p1 − p|² − (p10 − p0)²) / 2`
    pub g: f64,
    /// Møller velocity `g sqrt(s) / (p0 p10)`.
    pub moller: f64,
}

pub fn collision_invariants(p: &Momentum3, p1: &Momentum3) -> Invariants {
    let (p0, p10) = (p.energy(), p1.energy());
    let total = p.0 + p1.0;
    let s = (p0 + p10).powi(2) - total.norm_squared();
    let de = energy_difference(&p1.0, p10, &p.0, p0);
    let radicand = (p1.0 - p.0).norm_squared() - de * de;
    let g = radicand.max(0.0).sqrt() / 2.0;
    let moller = g * s.sqrt() / (p0 * p10);
    Invariants { s, g, moller }
}

fn check_unit(omega: &Vec3) -> Result<()> {
    let n = omega.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidInput(format!(
            "omega must be a unit vector, |omega| = {n}"
        )));
    }
    Ok(())
}

/// `ω·(p1/p10 − p/p0)`; the sign decides membership in S+².
#[inline]
pub fn impact_projection(p: &Momentum3, p1: &Momentum3, omega: &Vec3) -> f64 {
    omega.dot(&(p1.velocity() - p.velocity()))
}

pub fn in_s_plus(p: &Momentum3, p1: &Momentum3, omega: &Vec3) -> Result<bool> {
    check_unit(omega)?;
    Ok(impact_projection(p, p1, omega) >= 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PostCollision {
    pub p_prime: Momentum3,
    pub p1_prime: Momentum3,
    pub q: f64,
}

/// Momentum transfer `q(p, p1, ω)` with no domain check.
#[inline]
pub(crate) fn transfer(p: &Vec3, p0: f64, p1: &Vec3, p10: f64, omega: &Vec3) -> f64 {
    let e = p0 + p10;
    let proj = omega.dot(&(p1 / p10 - p / p0));
    let w = omega.dot(&(p + p1));
    2.0 * e * p0 * p10 * proj / (e * e - w * w)
}

pub fn post_collision(p: &Momentum3, p1: &Momentum3, omega: &Vec3) -> Result<PostCollision> {
    if !in_s_plus(p, p1, omega)? {
        return Err(Error::Domain(format!(
            "omega {:?} is not in S+ for p = {:?}, p1 = {:?}",
            omega.as_slice(),
            p.0.as_slice(),
            p1.0.as_slice()
        )));
    }
    let q = transfer(&p.0, p.energy(), &p1.0, p1.energy(), omega);
    Ok(PostCollision {
        p_prime: Momentum3(p.0 + q * omega),
        p1_prime: Momentum3(p1.0 - q * omega),
        q,
    })
}

/// The ω-flux factor
/// `8 (p0 + p10)² |ω·(p1/p10 − p/p0)| / ((p0 + p10)² − (ω·(p + p1))²)²`.
///
/// This is the Jacobian-type factor of the ω-parametrised collision
/// integral. It is ω-dependent and is not equal to `g / sqrt(s)`.
pub fn omega_flux(p: &Momentum3, p1: &Momentum3, omega: &Vec3) -> Result<f64> {
    check_unit(omega)?;
    let (p0, p10) = (p.energy(), p1.energy());
    let e2 = (p0 + p10).powi(2);
    let w = omega.dot(&(p.0 + p1.0));
    let bracket = e2 - w * w;
    Ok(8.0 * e2 * impact_projection(p, p1, omega).abs() / (bracket * bracket))
}

/// Full geometry of one collision `(p, p1, ω)` with `ω ∈ S+²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionGeometry {
    pub p: Momentum3,
    pub p1: Momentum3,
    pub omega: Vec3,
    pub s: f64,
    pub g: f64,
    pub q: f64,
    pub moller: f64,
    /// Scattering angle; 0 by convention when `g = 0`.
    pub theta: f64,
    pub p_prime: Momentum3,
    pub p1_prime: Momentum3,
}

impl CollisionGeometry {
    pub fn new(p: Momentum3, p1: Momentum3, omega: Vec3) -> Result<Self> {
        let post = post_collision(&p, &p1, &omega)?;
        let inv = collision_invariants(&p, &p1);
        let mut geom = CollisionGeometry {
            p,
            p1,
            omega,
            s: inv.s,
            g: inv.g,
            q: post.q,
            moller: inv.moller,
            theta: 0.0,
            p_prime: post.p_prime,
            p1_prime: post.p1_prime,
        };
        geom.theta = match scattering_angle(&geom) {
            Ok(theta) => theta,
            Err(Error::DegenerateCollision) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(geom)
    }
}

/// Relative size of `g` below which the pair counts as degenerate.
const DEGENERATE_G: f64 = 1e-12;

/// `θ = arccos(1 − 2[(p0 − p10)(p0 − p0') − (p − p1)·(p − p')] / (4 − s))`.
pub fn scattering_angle(geom: &CollisionGeometry) -> Result<f64> {
    let (p, p1, pp) = (geom.p.0, geom.p1.0, geom.p_prime.0);
    let (p0, p10, pp0) = (geom.p.energy(), geom.p1.energy(), geom.p_prime.energy());
    let scale = 1.0 + p.norm().max(p1.norm());
    if geom.g <= DEGENERATE_G * scale {
        return Err(Error::DegenerateCollision);
    }
    let d0 = -energy_difference(&p1, p10, &p, p0);
    let dp0 = -energy_difference(&pp, pp0, &p, p0);
    let numer = d0 * dp0 - (p - p1).dot(&(p - pp));
    // 4 − s = −4g²
    let denom = -4.0 * geom.g * geom.g;
    let cos = 1.0 - 2.0 * numer / denom;
    clamped_acos(cos)
}

pub(crate) fn clamped_acos(cos: f64) -> Result<f64> {
    if !cos.is_finite() || cos.abs() > 1.0 + ACOS_CLAMP_TOL {
        return Err(Error::Domain(format!(
            "arccos argument {cos} outside [-1, 1] beyond tolerance"
        )));
    }
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Largest deviations seen by [`identity_sweep`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityDeviations {
    pub samples: usize,
    /// `max |p' + p1' − p − p1|`
    pub momentum: f64,
    /// `max |p0' + p10' − p0 − p10|`
    pub energy: f64,
    /// `max |s − 4 − 4g²|`
    pub s_identity: f64,
    /// `max |v_M² − (|v − v1|² − |p × p1|² / (p0 p10)²)|`
    pub moller_identity: f64,
    /// `max (v_M − |v − v1|)`, nonpositive when the bound holds.
    pub moller_excess: f64,
}

/// Uniform point of the ball of radius `r`.
fn ball_point<R: rand::Rng>(rng: &mut R, r: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return r * v;
        }
    }
}

/// Random collisions with `|p|, |p1| ≤ radius` and `ω` uniform on `S+²`;
/// returns the largest violations of conservation and of the invariant
/// identities.
pub fn identity_sweep(samples: usize, radius: f64, seed: u64) -> IdentityDeviations {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = IdentityDeviations {
        samples,
        moller_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    for _ in 0..samples {
        let p = Momentum3(ball_point(&mut rng, radius));
        let p1 = Momentum3(ball_point(&mut rng, radius));
        let mut omega = ball_point(&mut rng, 1.0);
        while omega.norm() < 1e-3 {
            omega = ball_point(&mut rng, 1.0);
        }
        omega /= omega.norm();
        if impact_projection(&p, &p1, &omega) < 0.0 {
            omega = -omega;
        }
        let Ok(post) = post_collision(&p, &p1, &omega) else {
            continue;
        };
        let inv = collision_invariants(&p, &p1);
        let (p0, p10) = (p.energy(), p1.energy());
        out.momentum = out
            .momentum
            .max((post.p_prime.0 + post.p1_prime.0 - p.0 - p1.0).norm());
        out.energy = out
            .energy
            .max((post.p_prime.energy() + post.p1_prime.energy() - p0 - p10).abs());
        out.s_identity = out.s_identity.max((inv.s - 4.0 - 4.0 * inv.g * inv.g).abs());
        let rel = (p.velocity() - p1.velocity()).norm_squared();
        let cross = p.0.cross(&p1.0).norm_squared() / (p0 * p10).powi(2);
        out.moller_identity = out
            .moller_identity
            .max((inv.moller * inv.moller - (rel - cross)).abs());
        out.moller_excess = out.moller_excess.max(inv.moller - rel.sqrt());
    }
    out
}
