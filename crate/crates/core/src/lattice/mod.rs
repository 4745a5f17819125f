//! Discrete surrogate of the weighted space of `f#`.
//!
//! A [`FieldLattice`] stores `f#(t_k, x, p)` at the nodes of a uniform grid on
//! `[−x_max, x_max]³ × [−p_max, p_max]³`; off-grid values come from 6-D
//! multilinear interpolation and are zero outside the box. A [`Trajectory`]
//! is the sequence of slices on the uniform time grid `t_k = k t_max/(n_t − 1)`.

pub mod io;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{weight_m, KernelSpec};
use crate::kinematics::{Momentum3, Vec3};

fn default_quad_order() -> usize {
    7
}

fn default_quad_panels() -> usize {
    1
}

fn default_density_refine() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_max: f64,
    pub p_max: f64,
    /// Nodes per spatial axis (odd).
    pub n_x: usize,
    /// Nodes per momentum axis (odd).
    pub n_p: usize,
    /// Node budget of the sphere rule.
    pub n_omega: usize,
    pub t_max: f64,
    pub n_t: usize,
    /// Gauss–Legendre points per panel of the momentum rule.
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    /// Panels per axis of the momentum rule.
    #[serde(default = "default_quad_panels")]
    pub quad_panels: usize,
    /// Density table spacing is `dx / density_refine`.
    #[serde(default = "default_density_refine")]
    pub density_refine: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_max: 4.0,
            p_max: 4.0,
            n_x: 7,
            n_p: 7,
            n_omega: 32,
            t_max: 2.0,
            n_t: 9,
            quad_order: 7,
            quad_panels: 1,
            density_refine: 2,
        }
    }
}

impl GridSpec {
    /// The 5-nodes-per-axis grid used for desk-scale solver runs.
    pub fn desk() -> Self {
        GridSpec {
            n_x: 5,
            n_p: 5,
            n_omega: 16,
            n_t: 5,
            quad_order: 5,
            ..GridSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("grid: {what}")));
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return bad("x_max must be positive");
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return bad("p_max must be positive");
        }
        if self.n_x < 3 || self.n_x % 2 == 0 {
            return bad("n_x must be odd and >= 3");
        }
        if self.n_p < 3 || self.n_p % 2 == 0 {
            return bad("n_p must be odd and >= 3");
        }
        if self.n_omega < 6 {
            return bad("n_omega must be >= 6");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if self.n_t < 2 {
            return bad("n_t must be >= 2");
        }
        if self.quad_order == 0 || self.quad_panels == 0 || self.density_refine == 0 {
            return bad("quad_order, quad_panels and density_refine must be positive");
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_max / (self.n_x - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / (self.n_p - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.n_t - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|k| self.time(k)).collect()
    }

    pub fn x_axis(&self) -> Axis {
        Axis::new(self.x_max, self.n_x)
    }

    pub fn p_axis(&self) -> Axis {
        Axis::new(self.p_max, self.n_p)
    }

    pub fn x_count(&self) -> usize {
        self.n_x.pow(3)
    }

    pub fn p_count(&self) -> usize {
        self.n_p.pow(3)
    }

    /// Nodes per slice.
    pub fn len(&self) -> usize {
        self.x_count() * self.p_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_node(&self, ix: usize) -> Vec3 {
        let a = self.x_axis();
        let n = self.n_x;
        Vec3::new(a.node(ix / (n * n)), a.node((ix / n) % n), a.node(ix % n))
    }

    pub fn p_node(&self, ip: usize) -> Vec3 {
        let a = self.p_axis();
        let n = self.n_p;
        Vec3::new(a.node(ip / (n * n)), a.node((ip / n) % n), a.node(ip % n))
    }

    /// `(x, p)` of a flat node index (x-major, then p).
    pub fn node(&self, index: usize) -> (Vec3, Vec3) {
        let pc = self.p_count();
        (self.x_node(index / pc), self.p_node(index % pc))
    }

    /// Trapezoid cell volume weight of a flat node for `∫∫ dx dp`.
    pub fn node_volume(&self, index: usize) -> f64 {
        let pc = self.p_count();
        let (ix, ip) = (index / pc, index % pc);
        let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let axis_w = |flat: usize, n: usize| {
            edge(flat / (n * n), n) * edge((flat / n) % n, n) * edge(flat % n, n)
        };
        axis_w(ix, self.n_x) * axis_w(ip, self.n_p) * self.dx().powi(3) * self.dp().powi(3)
    }

    pub fn same_lattice(&self, other: &GridSpec) -> bool {
        self.x_max == other.x_max
            && self.p_max == other.p_max
            && self.n_x == other.n_x
            && self.n_p == other.n_p
    }
}

/// Uniform axis `−half_width + i·step`, `i = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub half_width: f64,
    pub n: usize,
    pub step: f64,
}

impl Axis {
    pub fn new(half_width: f64, n: usize) -> Self {
        Axis {
            half_width,
            n,
            step: 2.0 * half_width / (n - 1) as f64,
        }
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step
    }

    /// Cell index and fractional offset of `c`, or `None` outside the axis.
    #[inline]
    pub fn locate(&self, c: f64) -> Option<(usize, f64)> {
        if !(c >= -self.half_width && c <= self.half_width) {
            return None;
        }
        let last = (self.n - 1) as f64;
        let u = ((c + self.half_width) / self.step).clamp(0.0, last);
        let i = (u.floor() as usize).min(self.n - 2);
        Some((i, u - i as f64))
    }
}

/// `f#` at one time node on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldLattice {
    spec: GridSpec,
    values: Vec<f64>,
}

impl FieldLattice {
    pub fn zeros(spec: GridSpec) -> Self {
        FieldLattice {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite lattice value {v}")));
        }
        Ok(FieldLattice { spec, values })
    }

    /// Samples `f(x, p)` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&Vec3, &Vec3) -> f64) -> Self {
        let values = (0..spec.len())
            .map(|i| {
                let (x, p) = spec.node(i);
                f(&x, &p)
            })
            .collect();
        FieldLattice { spec, values }
    }

    /// Nodal values of the weight `m(x, p)`.
    pub fn weight(spec: GridSpec, kernel: &KernelSpec) -> Self {
        Self::from_fn(spec, |x, p| weight_m(x, &Momentum3(*p), kernel))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.spec.p_count() + ip]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FieldLattice {
            spec: self.spec,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `alpha·self + beta·other`.
    pub fn combine(&self, alpha: f64, other: &FieldLattice, beta: f64) -> Result<Self> {
        if !self.spec.same_lattice(&other.spec) {
            return Err(Error::GridMismatch("slices on different lattices".into()));
        }
        Ok(FieldLattice {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Multilinear interpolation; 0 outside the truncation box.
    pub fn interpolate(&self, x: &Vec3, p: &Vec3) -> f64 {
        let (xa, pa) = (self.spec.x_axis(), self.spec.p_axis());
        let mut cells = [(0usize, 0.0f64); 6];
        for (d, c) in [x.x, x.y, x.z].into_iter().enumerate() {
            match xa.locate(c) {
                Some(loc) => cells[d] = loc,
                None => return 0.0,
            }
        }
        for (d, c) in [p.x, p.y, p.z].into_iter().enumerate() {
            match pa.locate(c) {
                Some(loc) => cells[3 + d] = loc,
                None => return 0.0,
            }
        }
        let (nx, np) = (self.spec.n_x, self.spec.n_p);
        let strides = [
            nx * nx * np * np * np,
            nx * np * np * np,
            np * np * np,
            np * np,
            np,
            1,
        ];
        let base: usize = cells.iter().zip(&strides).map(|(c, s)| c.0 * s).sum();
        let mut acc = 0.0;
        for corner in 0..64usize {
            let mut w = 1.0;
            let mut offset = base;
            for d in 0..6 {
                let frac = cells[d].1;
                if corner >> (5 - d) & 1 == 1 {
                    w *= frac;
                    offset += strides[d];
                } else {
                    w *= 1.0 - frac;
                }
            }
            if w != 0.0 {
                acc += w * self.values[offset];
            }
        }
        acc
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫∫ f# dx dp` by the trapezoid rule on the box.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.spec.node_volume(i))
            .sum()
    }
}

/// Slices of `f#` on the uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    spec: GridSpec,
    slices: Vec<FieldLattice>,
}

impl Trajectory {
    pub fn new(spec: GridSpec, slices: Vec<FieldLattice>) -> Result<Self> {
        if slices.len() != spec.n_t {
            return Err(Error::GridMismatch(format!(
                "expected {} slices, got {}",
                spec.n_t,
                slices.len()
            )));
        }
        if slices.iter().any(|s| !s.spec.same_lattice(&spec)) {
            return Err(Error::GridMismatch("slice lattice differs from trajectory".into()));
        }
        Ok(Trajectory { spec, slices })
    }

    /// `f0` held constant in time.
    pub fn constant(spec: GridSpec, f0: &FieldLattice) -> Self {
        Trajectory {
            spec,
            slices: vec![f0.clone(); spec.n_t],
        }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, &FieldLattice::zeros(spec))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn slices(&self) -> &[FieldLattice] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &FieldLattice {
        &self.slices[k]
    }

    pub fn into_slices(self) -> Vec<FieldLattice> {
        self.slices
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Trajectory {
            spec: self.spec,
            slices: self.slices.iter().map(|s| s.scaled(factor)).collect(),
        }
    }

    pub fn combine(&self, alpha: f64, other: &Trajectory, beta: f64) -> Result<Self> {
        if self.slices.len() != other.slices.len() {
            return Err(Error::GridMismatch("trajectories differ in length".into()));
        }
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.combine(alpha, b, beta))
            .collect::<Result<_>>()?;
        Ok(Trajectory {
            spec: self.spec,
            slices,
        })
    }

    pub fn min_value(&self) -> f64 {
        self.slices
            .iter()
            .map(FieldLattice::min_value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Nodal `m(x, p)` cached for repeated norm evaluations.
#[derive(Clone, Debug)]
pub struct NodalWeight {
    inverse: Vec<f64>,
}

impl NodalWeight {
    pub fn new(spec: &GridSpec, kernel: &KernelSpec) -> Self {
        NodalWeight {
            inverse: FieldLattice::weight(*spec, kernel)
                .values
                .into_iter()
                .map(|m| 1.0 / m)
                .collect(),
        }
    }

    pub fn slice_norm(&self, field: &FieldLattice) -> f64 {
        field
            .values
            .iter()
            .zip(&self.inverse)
            .map(|(v, w)| v.abs() * w)
            .fold(0.0, f64::max)
    }

    pub fn norm(&self, traj: &Trajectory) -> f64 {
        traj.slices
            .iter()
            .map(|s| self.slice_norm(s))
            .fold(0.0, f64::max)
    }
}

/// `max_k max_nodes |f#(t_k, x, p)| / m(x, p)`.
pub fn weighted_norm(traj: &Trajectory, kernel: &KernelSpec) -> f64 {
    NodalWeight::new(&traj.spec, kernel).norm(traj)
}

pub fn interpolate(field: &FieldLattice, x: &Vec3, p: &Vec3) -> f64 {
    field.interpolate(x, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn small() -> GridSpec {
        GridSpec {
            n_x: 3,
            n_p: 5,
            n_t: 3,
            x_max: 2.0,
            p_max: 3.0,
            ..GridSpec::default()
        }
    }

    fn affine(x: &Vec3, p: &Vec3) -> f64 {
        0.3 + 1.5 * x.x - 0.25 * x.y + 0.7 * x.z + 2.0 * p.x - 1.1 * p.y + 0.05 * p.z
    }

    #[test]
    fn validation() {
        assert!(GridSpec::default().validate().is_ok());
        assert!(GridSpec { n_x: 4, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec { n_p: 1, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec { n_omega: 5, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec { n_t: 1, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec { x_max: 0.0, ..GridSpec::default() }.validate().is_err());
    }

    #[test]
    fn origin_is_a_node() {
        let spec = GridSpec::default();
        assert_eq!(spec.x_axis().node(spec.n_x / 2), 0.0);
        assert_eq!(spec.p_axis().node(spec.n_p / 2), 0.0);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_affine() {
        let spec = small();
        let field = FieldLattice::from_fn(spec, affine);
        for i in (0..spec.len()).step_by(7) {
            let (x, p) = spec.node(i);
            assert_abs_diff_eq!(field.interpolate(&x, &p), field.values()[i], epsilon = 1e-13);
        }
        let x = Vec3::new(0.3, -1.7, 1.2);
        let p = Vec3::new(-2.9, 0.4, 2.2);
        assert_abs_diff_eq!(field.interpolate(&x, &p), affine(&x, &p), epsilon = 1e-12);

        let constant = FieldLattice::from_fn(spec, |_, _| 2.5);
        assert_abs_diff_eq!(constant.interpolate(&x, &p), 2.5, epsilon = 1e-14);
    }

    #[test]
    fn zero_outside_box() {
        let spec = small();
        let field = FieldLattice::from_fn(spec, |_, _| 1.0);
        assert_eq!(field.interpolate(&Vec3::new(2.01, 0.0, 0.0), &Vec3::zeros()), 0.0);
        assert_eq!(field.interpolate(&Vec3::zeros(), &Vec3::new(0.0, -3.5, 0.0)), 0.0);
        assert_eq!(field.interpolate(&Vec3::new(2.0, -2.0, 2.0), &Vec3::new(3.0, 3.0, -3.0)), 1.0);
    }

    #[test]
    fn norm_cases() {
        let spec = small();
        let kernel = KernelSpec::default();
        assert_eq!(weighted_norm(&Trajectory::zeros(spec), &kernel), 0.0);
        let m = FieldLattice::weight(spec, &kernel).scaled(0.37);
        let traj = Trajectory::constant(spec, &m);
        assert_abs_diff_eq!(weighted_norm(&traj, &kernel), 0.37, epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_mass_of_constant() {
        let spec = small();
        let field = FieldLattice::from_fn(spec, |_, _| 1.0);
        let vol = (2.0 * spec.x_max).powi(3) * (2.0 * spec.p_max).powi(3);
        assert_abs_diff_eq!(field.mass(), vol, epsilon = 1e-9);
    }

    fn random_field(spec: GridSpec, seed: u64) -> FieldLattice {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        FieldLattice::from_values(spec, values).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn interpolation_is_linear(
            seed in 0u64..1000,
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
            x in prop::array::uniform3(-2.2f64..2.2),
            p in prop::array::uniform3(-3.2f64..3.2),
        ) {
            let spec = small();
            let (f, g) = (random_field(spec, seed), random_field(spec, seed + 7919));
            let h = f.combine(alpha, &g, beta).unwrap();
            let (x, p) = (Vec3::from(x), Vec3::from(p));
            let lhs = h.interpolate(&x, &p);
            let rhs = alpha * f.interpolate(&x, &p) + beta * g.interpolate(&x, &p);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn norm_axioms(seed in 0u64..1000, lambda in -5.0f64..5.0) {
            let spec = small();
            let kernel = KernelSpec::default();
            let f = Trajectory::constant(spec, &random_field(spec, seed));
            let g = Trajectory::constant(spec, &random_field(spec, seed + 1));
            let (nf, ng) = (weighted_norm(&f, &kernel), weighted_norm(&g, &kernel));
            let sum = weighted_norm(&f.combine(1.0, &g, 1.0).unwrap(), &kernel);
            prop_assert!(sum <= nf + ng + 1e-12 * (nf + ng));
            let scaled = weighted_norm(&f.scaled(lambda), &kernel);
            prop_assert!((scaled - lambda.abs() * nf).abs() <= 1e-12 * nf.max(1.0));
        }
    }
}
