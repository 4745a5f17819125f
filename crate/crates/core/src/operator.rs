//! Enskog gain and loss operators in the free-streaming frame.
//!
//! For `f#` at time `t`, with `v = p/p0`,
//!
//! ```text
//! Q+(f)#(t,x,p) = a²/p0 ∫ d³p1/p10 ∫_{S+²} dω F+ f#(t, x + tv − tv', p') f#(t, x + aω + tv − tv1', p1') B
//! Q−(f)#(t,x,p) = a²/p0 ∫ d³p1/p10 ∫_{S+²} dω F− f#(t, x, p) f#(t, x − aω + tv − tv1, p1) B
//! F± = Y(ρ(t, x + tv ± aω/2)),   ρ(t, y) = ∫ f#(t, y − t v1, p1) d³p1
//! ```
//!
//! In Boltzmann mode `a² F±` is replaced by the constant `λ` and the `aω`
//! shifts are dropped.
//!
//! Quadrature: the momentum rule of the grid times a hemisphere rule whose
//! pole is the relative velocity `v1 − v` of each pair, so `S+²` is covered
//! exactly and the `|ω·(p1 × p)|` kink of `B` sits on a panel boundary.
//! `ρ` inside `F±` is read from a [`DensityTable`] tabulated on a cube
//! around the box and interpolated trilinearly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_b_raw, KernelSpec, YFactorSpec};
use crate::kinematics::{self, collision_invariants, Momentum3, Vec3};
use crate::lattice::quadrature::{momentum_rule, HemisphereRule};
use crate::lattice::{Axis, FieldLattice, GridSpec, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Enskog,
    Boltzmann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    /// Hard-sphere diameter.
    pub a: f64,
    pub mode: Mode,
    /// Constant replacing `a² F±` in Boltzmann mode.
    pub lambda: f64,
    pub kernel: KernelSpec,
    pub y: YFactorSpec,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            a: 0.2,
            mode: Mode::Enskog,
            lambda: 0.04,
            kernel: KernelSpec::default(),
            y: YFactorSpec::default(),
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidInput(format!("a must be >= 0, got {}", self.a)));
        }
        if self.mode == Mode::Boltzmann && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda must be > 0 in boltzmann mode, got {}",
                self.lambda
            )));
        }
        self.kernel.validate()?;
        self.y.validate()
    }

    /// Spatial offset scale of the collision partners.
    pub fn shift(&self) -> f64 {
        match self.mode {
            Mode::Enskog => self.a,
            Mode::Boltzmann => 0.0,
        }
    }

    /// Factor multiplying `F±` in front of the integrals.
    pub fn prefactor(&self) -> f64 {
        match self.mode {
            Mode::Enskog => self.a * self.a,
            Mode::Boltzmann => self.lambda,
        }
    }

    /// `|F+(0)|`, `|F−(0)|`.
    pub fn f_at_zero(&self) -> (f64, f64) {
        match self.mode {
            Mode::Enskog => {
                let y = self.y.value(0.0).abs();
                (y, y)
            }
            Mode::Boltzmann => (1.0, 1.0),
        }
    }
}

/// `ρ(t, x) = Σ w f#(t, x − t p1/p10, p1)` over the momentum rule.
pub fn density(slice: &FieldLattice, t: f64, x: &Vec3) -> f64 {
    density_with_rule(slice, t, x, &momentum_rule(slice.spec()))
}

fn density_with_rule(slice: &FieldLattice, t: f64, x: &Vec3, rule: &[(Vec3, f64)]) -> f64 {
    rule.iter()
        .map(|(p1, w)| {
            let v1 = p1 / (1.0 + p1.norm_squared()).sqrt();
            w * slice.interpolate(&(x - t * v1), p1)
        })
        .sum()
}

/// `F+ = Y(ρ(t, x + aω/2))`; 1 in Boltzmann mode.
pub fn f_plus(slice: &FieldLattice, t: f64, x: &Vec3, omega: &Vec3, cfg: &OperatorConfig) -> f64 {
    contact_factor(slice, t, &(x + 0.5 * cfg.a * omega), cfg)
}

/// `F− = Y(ρ(t, x − aω/2))`; 1 in Boltzmann mode.
pub fn f_minus(slice: &FieldLattice, t: f64, x: &Vec3, omega: &Vec3, cfg: &OperatorConfig) -> f64 {
    contact_factor(slice, t, &(x - 0.5 * cfg.a * omega), cfg)
}

fn contact_factor(slice: &FieldLattice, t: f64, y: &Vec3, cfg: &OperatorConfig) -> f64 {
    match cfg.mode {
        Mode::Boltzmann => 1.0,
        Mode::Enskog if !cfg.y.depends_on_density() => cfg.y.value(0.0),
        Mode::Enskog => cfg.y.value(density(slice, t, y)),
    }
}

/// Space density tabulated on a cube `[−L, L]³`; zero outside.
#[derive(Clone, Debug)]
pub struct DensityTable {
    axis: Axis,
    values: Vec<f64>,
}

impl DensityTable {
    /// Tabulates `ρ(t, ·)`. Outside `[−(x_max + t), x_max + t]³` the density
    /// vanishes because `|v1| < 1` and `f#` is supported in the box.
    pub fn build(slice: &FieldLattice, t: f64, rule: &[(Vec3, f64)]) -> Self {
        let spec = slice.spec();
        let half = spec.x_max + t;
        let h = spec.dx() / spec.density_refine as f64;
        let n = ((2.0 * half / h).ceil() as usize + 1).max(3);
        let axis = Axis::new(half, n);
        let values = (0..n * n * n)
            .into_par_iter()
            .map(|i| {
                let y = Vec3::new(axis.node(i / (n * n)), axis.node((i / n) % n), axis.node(i % n));
                density_with_rule(slice, t, &y, rule)
            })
            .collect();
        DensityTable { axis, values }
    }

    #[inline]
    pub fn eval(&self, y: &Vec3) -> f64 {
        let (Some(a), Some(b), Some(c)) = (self.axis.locate(y.x), self.axis.locate(y.y), self.axis.locate(y.z))
        else {
            return 0.0;
        };
        let n = self.axis.n;
        let mut acc = 0.0;
        for (di, wi) in [(0, 1.0 - a.1), (1, a.1)] {
            for (dj, wj) in [(0, 1.0 - b.1), (1, b.1)] {
                for (dk, wk) in [(0, 1.0 - c.1), (1, c.1)] {
                    let w = wi * wj * wk;
                    if w != 0.0 {
                        acc += w * self.values[((a.0 + di) * n + b.0 + dj) * n + c.0 + dk];
                    }
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub(crate) enum FSource {
    Unit,
    Constant(f64),
    Table(DensityTable, YFactorSpec),
}

impl FSource {
    fn for_config(slice: &FieldLattice, t: f64, cfg: &OperatorConfig, rule: &[(Vec3, f64)]) -> Self {
        match cfg.mode {
            Mode::Boltzmann => FSource::Unit,
            Mode::Enskog if !cfg.y.depends_on_density() => FSource::Constant(cfg.y.value(0.0)),
            Mode::Enskog => FSource::Table(DensityTable::build(slice, t, rule), cfg.y),
        }
    }

    #[inline]
    fn at(&self, y: &Vec3) -> f64 {
        match self {
            FSource::Unit => 1.0,
            FSource::Constant(c) => *c,
            FSource::Table(table, spec) => spec.value(table.eval(y)),
        }
    }

    fn is_uniform(&self) -> bool {
        !matches!(self, FSource::Table(..))
    }
}

#[derive(Clone, Copy, Debug)]
struct QNode {
    p: Vec3,
    p0: f64,
    v: Vec3,
    /// Momentum-rule weight divided by `p10`.
    w: f64,
}

/// Momentum rule and hemisphere rule shared by every evaluation on a grid.
#[derive(Clone, Debug)]
pub struct CollisionQuadrature {
    nodes: Vec<QNode>,
    rule: Vec<(Vec3, f64)>,
    hemi: HemisphereRule,
    kernel: KernelSpec,
}

impl CollisionQuadrature {
    pub fn new(spec: &GridSpec, kernel: &KernelSpec) -> Self {
        let rule = momentum_rule(spec);
        let nodes = rule
            .iter()
            .map(|&(p, w)| {
                let p0 = (1.0 + p.norm_squared()).sqrt();
                QNode { p, p0, v: p / p0, w: w / p0 }
            })
            .collect();
        CollisionQuadrature {
            nodes,
            rule,
            hemi: HemisphereRule::new(spec.n_omega),
            kernel: *kernel,
        }
    }

    pub fn momentum_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn rule(&self) -> &[(Vec3, f64)] {
        &self.rule
    }

    /// Quadrature entries `(p1, ω)` for a fixed `p`.
    fn entries(&self, p: &Vec3, out: &mut Vec<Entry>) {
        out.clear();
        let p0 = (1.0 + p.norm_squared()).sqrt();
        let v = p / p0;
        let pm = Momentum3(*p);
        let sigma_zero = self.kernel.sigma_tilde.is_zero();
        for (j, node) in self.nodes.iter().enumerate() {
            let u = node.v - v;
            let cross = node.p.cross(p);
            let (un, cn) = (u.norm(), cross.norm());
            // p1 ∥ p: B vanishes on the whole hemisphere
            if un == 0.0 || cn == 0.0 || sigma_zero {
                continue;
            }
            let (n, e1) = (u / un, cross / cn);
            let inv = collision_invariants(&pm, &Momentum3(node.p));
            for (omega, w_omega) in self.hemi.oriented(&n, &e1) {
                let sigma = self.kernel.sigma_tilde.eval(&omega);
                let b = kernel_b_raw(inv.s, inv.g, node.p0, omega.dot(&cross).abs(), sigma, self.kernel.delta);
                let weight = node.w * w_omega * b;
                if weight == 0.0 {
                    continue;
                }
                let q = kinematics::transfer(p, p0, &node.p, node.p0, &omega);
                let p_prime = p + q * omega;
                let p1_prime = node.p - q * omega;
                out.push(Entry {
                    node: j,
                    omega,
                    weight,
                    p_prime,
                    v_prime: p_prime / (1.0 + p_prime.norm_squared()).sqrt(),
                    p1_prime,
                    v1_prime: p1_prime / (1.0 + p1_prime.norm_squared()).sqrt(),
                });
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    node: usize,
    omega: Vec3,
    /// `w(p1)/p10 · w(ω) · B`
    weight: f64,
    p_prime: Vec3,
    v_prime: Vec3,
    p1_prime: Vec3,
    v1_prime: Vec3,
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.mean) / self.std_err
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub gain: Estimate,
    pub loss: Estimate,
}

/// Gain/loss evaluator for one slice at one time.
#[derive(Clone, Debug)]
pub struct CollisionOperator<'a> {
    slice: &'a FieldLattice,
    t: f64,
    quad: std::borrow::Cow<'a, CollisionQuadrature>,
    prefactor: f64,
    shift: f64,
    f: FSource,
}

impl<'a> CollisionOperator<'a> {
    pub fn new(slice: &'a FieldLattice, t: f64, cfg: &OperatorConfig) -> Self {
        let quad = CollisionQuadrature::new(slice.spec(), &cfg.kernel);
        let f = FSource::for_config(slice, t, cfg, quad.rule());
        CollisionOperator {
            slice,
            t,
            quad: std::borrow::Cow::Owned(quad),
            prefactor: cfg.prefactor(),
            shift: cfg.shift(),
            f,
        }
    }

    pub fn with_quadrature(
        slice: &'a FieldLattice,
        t: f64,
        cfg: &OperatorConfig,
        quad: &'a CollisionQuadrature,
    ) -> Self {
        let f = FSource::for_config(slice, t, cfg, quad.rule());
        CollisionOperator {
            slice,
            t,
            quad: std::borrow::Cow::Borrowed(quad),
            prefactor: cfg.prefactor(),
            shift: cfg.shift(),
            f,
        }
    }

    /// Operator with explicit coupling: `prefactor · F±` in front, `shift`
    /// in place of `a` in the partner positions.
    pub(crate) fn with_parts(
        slice: &'a FieldLattice,
        t: f64,
        quad: &'a CollisionQuadrature,
        prefactor: f64,
        shift: f64,
        f: FSource,
    ) -> Self {
        CollisionOperator {
            slice,
            t,
            quad: std::borrow::Cow::Borrowed(quad),
            prefactor,
            shift,
            f,
        }
    }

    /// Returns `(Q+#, Q−# / f#(t, x, p))` at an arbitrary point.
    pub(crate) fn gain_and_frequency(&self, x: &Vec3, p: &Vec3) -> (f64, f64) {
        let mut entries = Vec::new();
        self.quad.entries(p, &mut entries);
        let (t, a) = (self.t, self.shift);
        let p0 = (1.0 + p.norm_squared()).sqrt();
        let xv = x + t * p / p0;
        let (mut gain, mut freq) = (0.0, 0.0);
        for e in &entries {
            let node = &self.quad.nodes[e.node];
            let first = self.slice.interpolate(&(xv - t * e.v_prime), &e.p_prime);
            if first != 0.0 {
                let second = self
                    .slice
                    .interpolate(&(xv + a * e.omega - t * e.v1_prime), &e.p1_prime);
                gain += e.weight * self.f.at(&(xv + 0.5 * a * e.omega)) * first * second;
            }
            let partner = self.slice.interpolate(&(xv - a * e.omega - t * node.v), &node.p);
            freq += e.weight * self.f.at(&(xv - 0.5 * a * e.omega)) * partner;
        }
        let scale = self.prefactor / p0;
        (scale * gain, scale * freq)
    }

    pub fn gain(&self, x: &Vec3, p: &Vec3) -> f64 {
        self.gain_and_frequency(x, p).0
    }

    pub fn loss(&self, x: &Vec3, p: &Vec3) -> f64 {
        let own = self.slice.interpolate(x, p);
        if own == 0.0 {
            return 0.0;
        }
        own * self.gain_and_frequency(x, p).1
    }

    pub fn collision(&self, x: &Vec3, p: &Vec3) -> f64 {
        let (gain, freq) = self.gain_and_frequency(x, p);
        gain - self.slice.interpolate(x, p) * freq
    }

    /// Integrands of `Q+#` and `Q−#` at one `(p1, ω)` on the full sphere,
    /// zero off `S+²`.
    fn point_integrand(&self, x: &Vec3, p: &Vec3, p1: &Vec3, omega: &Vec3) -> (f64, f64) {
        let (pm, p1m) = (Momentum3(*p), Momentum3(*p1));
        let Ok(post) = kinematics::post_collision(&pm, &p1m, omega) else {
            return (0.0, 0.0);
        };
        let (p0, p10) = (pm.energy(), p1m.energy());
        let inv = collision_invariants(&pm, &p1m);
        let sigma = self.quad.kernel.sigma_tilde.eval(omega);
        let b = kernel_b_raw(inv.s, inv.g, p10, omega.dot(&p1.cross(p)).abs(), sigma, self.quad.kernel.delta);
        if b == 0.0 {
            return (0.0, 0.0);
        }
        let (t, a) = (self.t, self.shift);
        let xv = x + t * pm.velocity();
        let scale = self.prefactor * b / (p0 * p10);
        let gain = self.f.at(&(xv + 0.5 * a * omega))
            * self.slice.interpolate(&(xv - t * post.p_prime.velocity()), &post.p_prime.0)
            * self
                .slice
                .interpolate(&(xv + a * omega - t * post.p1_prime.velocity()), &post.p1_prime.0);
        let loss = self.f.at(&(xv - 0.5 * a * omega))
            * self.slice.interpolate(x, p)
            * self.slice.interpolate(&(xv - a * omega - t * p1m.velocity()), p1);
        (scale * gain, scale * loss)
    }

    /// Monte Carlo estimate of `Q±#(t, x, p)`: `p1` uniform on the momentum
    /// box, `ω` uniform on the sphere, `S+²` by indicator.
    pub fn monte_carlo<R: Rng>(&self, x: &Vec3, p: &Vec3, samples: usize, rng: &mut R) -> McEstimate {
        let p_max = self.slice.spec().p_max;
        let volume = (2.0 * p_max).powi(3) * 4.0 * std::f64::consts::PI;
        let (mut sg, mut sg2, mut sl, mut sl2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..samples {
            let p1 = Vec3::new(
                rng.random_range(-p_max..=p_max),
                rng.random_range(-p_max..=p_max),
                rng.random_range(-p_max..=p_max),
            );
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).max(0.0).sqrt();
            let omega = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            let (g, l) = self.point_integrand(x, p, &p1, &omega);
            let (g, l) = (g * volume, l * volume);
            sg += g;
            sg2 += g * g;
            sl += l;
            sl2 += l * l;
        }
        let n = samples as f64;
        let est = |s: f64, s2: f64| {
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            Estimate {
                mean,
                std_err: (var / n).sqrt(),
            }
        };
        McEstimate {
            gain: est(sg, sg2),
            loss: est(sl, sl2),
        }
    }
}

pub fn gain_sharp(slice: &FieldLattice, t: f64, x: &Vec3, p: &Momentum3, cfg: &OperatorConfig) -> f64 {
    CollisionOperator::new(slice, t, cfg).gain(x, &p.0)
}

pub fn loss_sharp(slice: &FieldLattice, t: f64, x: &Vec3, p: &Momentum3, cfg: &OperatorConfig) -> f64 {
    CollisionOperator::new(slice, t, cfg).loss(x, &p.0)
}

pub fn collision_sharp(slice: &FieldLattice, t: f64, x: &Vec3, p: &Momentum3, cfg: &OperatorConfig) -> f64 {
    CollisionOperator::new(slice, t, cfg).collision(x, &p.0)
}

/// `Q+#` and `Q−#` at every node of one slice.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorParts {
    pub gain: FieldLattice,
    pub loss: FieldLattice,
}

impl OperatorParts {
    pub fn collision(&self) -> FieldLattice {
        self.gain
            .combine(1.0, &self.loss, -1.0)
            .expect("parts share a lattice")
    }
}

/// Raw sweep output: `Q+#` and the loss frequency `Q−# / f#` per node.
pub(crate) struct RawParts {
    pub gain: Vec<f64>,
    pub freq: Vec<f64>,
}

/// Per-axis cell locations of `x_i + s` for every node `i`.
struct AxisShift {
    cells: Vec<Option<(usize, f64)>>,
}

impl AxisShift {
    fn fill(&mut self, axis: &Axis, s: f64) {
        self.cells.clear();
        self.cells.extend((0..axis.n).map(|i| axis.locate(axis.node(i) + s)));
    }
}

struct Scratch {
    contracted: Vec<f64>,
    factor: Vec<f64>,
    shifts: [AxisShift; 3],
}

impl Scratch {
    fn new(nx3: usize) -> Self {
        Scratch {
            contracted: vec![0.0; nx3],
            factor: vec![0.0; nx3],
            shifts: std::array::from_fn(|_| AxisShift { cells: Vec::new() }),
        }
    }
}

/// Corners and weights of an off-grid momentum.
fn p_corners(axis: &Axis, n_p: usize, p: &Vec3) -> Option<([usize; 8], [f64; 8])> {
    let a = axis.locate(p.x)?;
    let b = axis.locate(p.y)?;
    let c = axis.locate(p.z)?;
    let mut idx = [0usize; 8];
    let mut w = [0.0; 8];
    let mut k = 0;
    for (di, wi) in [(0, 1.0 - a.1), (1, a.1)] {
        for (dj, wj) in [(0, 1.0 - b.1), (1, b.1)] {
            for (dk, wk) in [(0, 1.0 - c.1), (1, c.1)] {
                idx[k] = ((a.0 + di) * n_p + b.0 + dj) * n_p + c.0 + dk;
                w[k] = wi * wj * wk;
                k += 1;
            }
        }
    }
    Some((idx, w))
}

/// `f#(x_node + shift, p)` at every x node, with `p` given by its corners.
fn shifted_factor(
    values: &[f64],
    spec: &GridSpec,
    corners: &([usize; 8], [f64; 8]),
    shift: &Vec3,
    scratch: &mut Scratch,
) -> bool {
    let (nx, pc) = (spec.n_x, spec.p_count());
    let axis = spec.x_axis();
    for (d, s) in [shift.x, shift.y, shift.z].into_iter().enumerate() {
        scratch.shifts[d].fill(&axis, s);
    }
    if scratch.shifts.iter().any(|sh| sh.cells.iter().all(Option::is_none)) {
        return false;
    }
    let (idx, w) = corners;
    for (ix, g) in scratch.contracted.iter_mut().enumerate() {
        let row = &values[ix * pc..];
        let mut acc = 0.0;
        for k in 0..8 {
            acc += w[k] * row[idx[k]];
        }
        *g = acc;
    }
    let [sx, sy, sz] = &scratch.shifts;
    let mut any = false;
    for i in 0..nx {
        for j in 0..nx {
            for l in 0..nx {
                let out = &mut scratch.factor[(i * nx + j) * nx + l];
                let (Some(a), Some(b), Some(c)) = (sx.cells[i], sy.cells[j], sz.cells[l]) else {
                    *out = 0.0;
                    continue;
                };
                let mut acc = 0.0;
                for (di, wi) in [(0, 1.0 - a.1), (1, a.1)] {
                    for (dj, wj) in [(0, 1.0 - b.1), (1, b.1)] {
                        for (dk, wk) in [(0, 1.0 - c.1), (1, c.1)] {
                            let wt = wi * wj * wk;
                            if wt != 0.0 {
                                acc += wt * scratch.contracted[((a.0 + di) * nx + b.0 + dj) * nx + c.0 + dk];
                            }
                        }
                    }
                }
                *out = acc;
                any |= acc != 0.0;
            }
        }
    }
    any
}

/// One slice of a sweep: which field, at which time, with which `F`.
pub(crate) struct SweepSlice<'a> {
    pub field: &'a FieldLattice,
    pub t: f64,
    pub f: FSource,
}

/// Gain and loss frequency at every lattice node of every slice.
///
/// Work is split over momentum nodes; the quadrature entries of a momentum
/// node are built once and reused for all x nodes and all slices.
pub(crate) fn sweep_raw(
    slices: &[SweepSlice<'_>],
    quad: &CollisionQuadrature,
    prefactor: f64,
    shift: f64,
) -> Vec<RawParts> {
    let Some(first) = slices.first() else {
        return Vec::new();
    };
    let spec = *first.field.spec();
    let (nx3, pc) = (spec.x_count(), spec.p_count());
    let p_axis = spec.p_axis();
    let x_nodes: Vec<Vec3> = (0..nx3).map(|ix| spec.x_node(ix)).collect();

    // columns[ip][k] = (gain over x, freq over x)
    let columns: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..pc)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Scratch::new(nx3), vec![0.0; nx3], vec![0.0; nx3]),
            |(entries, scratch, first_factor, partner), ip| {
                let p = spec.p_node(ip);
                let p0 = (1.0 + p.norm_squared()).sqrt();
                let v = p / p0;
                quad.entries(&p, entries);
                let corners: Vec<_> = entries
                    .iter()
                    .map(|e| {
                        (
                            p_corners(&p_axis, spec.n_p, &e.p_prime),
                            p_corners(&p_axis, spec.n_p, &e.p1_prime),
                            p_corners(&p_axis, spec.n_p, &quad.nodes[e.node].p),
                        )
                    })
                    .collect();
                let scale = prefactor / p0;
                slices
                    .iter()
                    .map(|sl| {
                        let values = sl.field.values();
                        let t = sl.t;
                        let mut gain = vec![0.0; nx3];
                        let mut freq = vec![0.0; nx3];
                        for (e, (cp, cp1, cn)) in entries.iter().zip(&corners) {
                            let node = &quad.nodes[e.node];
                            if let (Some(cp), Some(cp1)) = (cp, cp1) {
                                let s1 = t * (v - e.v_prime);
                                if shifted_factor(values, &spec, cp, &s1, scratch) {
                                    first_factor.copy_from_slice(&scratch.factor);
                                    let s2 = shift * e.omega + t * (v - e.v1_prime);
                                    if shifted_factor(values, &spec, cp1, &s2, scratch) {
                                        let contact = t * v + 0.5 * shift * e.omega;
                                        for ix in 0..nx3 {
                                            let prod = first_factor[ix] * scratch.factor[ix];
                                            if prod != 0.0 {
                                                let fp = if sl.f.is_uniform() {
                                                    sl.f.at(&contact)
                                                } else {
                                                    sl.f.at(&(x_nodes[ix] + contact))
                                                };
                                                gain[ix] += e.weight * fp * prod;
                                            }
                                        }
                                    }
                                }
                            }
                            if let Some(cn) = cn {
                                let s3 = -shift * e.omega + t * (v - node.v);
                                if shifted_factor(values, &spec, cn, &s3, scratch) {
                                    partner.copy_from_slice(&scratch.factor);
                                    let contact = t * v - 0.5 * shift * e.omega;
                                    for ix in 0..nx3 {
                                        if partner[ix] != 0.0 {
                                            let fm = if sl.f.is_uniform() {
                                                sl.f.at(&contact)
                                            } else {
                                                sl.f.at(&(x_nodes[ix] + contact))
                                            };
                                            freq[ix] += e.weight * fm * partner[ix];
                                        }
                                    }
                                }
                            }
                        }
                        gain.iter_mut().for_each(|g| *g *= scale);
                        freq.iter_mut().for_each(|g| *g *= scale);
                        (gain, freq)
                    })
                    .collect()
            },
        )
        .collect();

    (0..slices.len())
        .map(|k| {
            let mut gain = vec![0.0; spec.len()];
            let mut freq = vec![0.0; spec.len()];
            for (ip, col) in columns.iter().enumerate() {
                let (g, f) = &col[k];
                for ix in 0..nx3 {
                    gain[ix * pc + ip] = g[ix];
                    freq[ix * pc + ip] = f[ix];
                }
            }
            RawParts { gain, freq }
        })
        .collect()
}

/// `Q±#` at every node of every slice of `traj`.
pub fn sweep_trajectory(traj: &Trajectory, cfg: &OperatorConfig) -> Vec<OperatorParts> {
    let spec = *traj.spec();
    let quad = CollisionQuadrature::new(&spec, &cfg.kernel);
    sweep_with_quadrature(traj, cfg, &quad)
}

pub fn sweep_with_quadrature(
    traj: &Trajectory,
    cfg: &OperatorConfig,
    quad: &CollisionQuadrature,
) -> Vec<OperatorParts> {
    let spec = *traj.spec();
    let slices: Vec<SweepSlice<'_>> = traj
        .slices()
        .iter()
        .enumerate()
        .map(|(k, field)| SweepSlice {
            field,
            t: spec.time(k),
            f: FSource::for_config(field, spec.time(k), cfg, quad.rule()),
        })
        .collect();
    let raw = sweep_raw(&slices, quad, cfg.prefactor(), cfg.shift());
    raw.into_iter()
        .zip(traj.slices())
        .map(|(r, field)| {
            let loss: Vec<f64> = r.freq.iter().zip(field.values()).map(|(nu, f)| nu * f).collect();
            OperatorParts {
                gain: FieldLattice::from_values(spec, r.gain).expect("finite sweep output"),
                loss: FieldLattice::from_values(spec, loss).expect("finite sweep output"),
            }
        })
        .collect()
}

/// `Q±#` at every node of a single slice at time `t`.
pub fn sweep_slice(slice: &FieldLattice, t: f64, cfg: &OperatorConfig) -> OperatorParts {
    let mut spec = *slice.spec();
    spec.n_t = 2;
    spec.t_max = if t > 0.0 { t } else { 1.0 };
    let quad = CollisionQuadrature::new(&spec, &cfg.kernel);
    let sl = SweepSlice {
        field: slice,
        t,
        f: FSource::for_config(slice, t, cfg, quad.rule()),
    };
    let raw = sweep_raw(std::slice::from_ref(&sl), &quad, cfg.prefactor(), cfg.shift())
        .pop()
        .expect("one slice");
    let loss = raw.freq.iter().zip(slice.values()).map(|(nu, f)| nu * f).collect();
    OperatorParts {
        gain: FieldLattice::from_values(*slice.spec(), raw.gain).expect("finite sweep output"),
        loss: FieldLattice::from_values(*slice.spec(), loss).expect("finite sweep output"),
    }
}

/// Isotropic-in-`x` Gaussian `A exp(−|x|²/wx² − |p|²/wp²)` sampled on the grid.
pub fn gaussian_field(spec: GridSpec, amplitude: f64, x_width: f64, p_width: f64) -> FieldLattice {
    FieldLattice::from_fn(spec, |x, p| {
        amplitude * (-x.norm_squared() / (x_width * x_width) - p.norm_squared() / (p_width * p_width)).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn grid() -> GridSpec {
        GridSpec {
            n_x: 3,
            n_p: 5,
            n_omega: 16,
            n_t: 3,
            t_max: 1.0,
            quad_order: 4,
            ..GridSpec::default()
        }
    }

    fn gaussian() -> FieldLattice {
        gaussian_field(grid(), 0.5, 1.5, 1.2)
    }

    fn constant_y() -> OperatorConfig {
        OperatorConfig {
            y: YFactorSpec::Constant { y0: 1.0 },
            ..OperatorConfig::default()
        }
    }

    #[test]
    fn density_cases() {
        let zero = FieldLattice::zeros(grid());
        assert_eq!(density(&zero, 0.3, &Vec3::zeros()), 0.0);
        let f = gaussian();
        let x = Vec3::new(0.4, -0.2, 0.1);
        assert_abs_diff_eq!(
            density(&f.scaled(3.0), 0.0, &x),
            3.0 * density(&f, 0.0, &x),
            epsilon = 1e-13
        );
    }

    #[test]
    fn density_gaussian_closed_form() {
        // ∫ e^{−|p|²} d³p = π^{3/2}; the rule reads the field at its own
        // nodes, so sample on a fine momentum grid.
        let spec = GridSpec {
            n_x: 3,
            n_p: 81,
            p_max: 4.0,
            quad_order: 6,
            quad_panels: 8,
            ..GridSpec::default()
        };
        let f = FieldLattice::from_fn(spec, |x, p| (-x.norm_squared() - p.norm_squared()).exp());
        let rho = density(&f, 0.0, &Vec3::zeros());
        assert!((rho - std::f64::consts::PI.powf(1.5)).abs() < 1e-3 * rho, "{rho}");
    }

    #[test]
    fn contact_factors() {
        let f = gaussian();
        let omega = Vec3::new(0.0, 0.6, 0.8);
        let x = Vec3::new(0.1, 0.2, -0.3);
        assert_eq!(f_plus(&f, 0.0, &x, &omega, &constant_y()), 1.0);
        let linear = OperatorConfig {
            y: YFactorSpec::Linear { b: 0.3 },
            ..OperatorConfig::default()
        };
        let zero = FieldLattice::zeros(grid());
        assert_eq!(f_plus(&zero, 0.0, &x, &omega, &linear), 1.0);
        assert_eq!(f_minus(&zero, 0.0, &x, &omega, &linear), 1.0);
        let rho_p = density(&f, 0.0, &(x + 0.1 * omega));
        let rho_m = density(&f, 0.0, &(x - 0.1 * omega));
        assert_abs_diff_eq!(f_plus(&f, 0.0, &x, &omega, &linear), 1.0 + 0.3 * rho_p, epsilon = 1e-14);
        assert_abs_diff_eq!(f_minus(&f, 0.0, &x, &omega, &linear), 1.0 + 0.3 * rho_m, epsilon = 1e-14);
        let boltz = OperatorConfig {
            mode: Mode::Boltzmann,
            ..linear
        };
        assert_eq!(f_plus(&f, 0.0, &x, &omega, &boltz), 1.0);
    }

    #[test]
    fn density_table_matches_direct_at_nodes() {
        let f = gaussian();
        let quad = CollisionQuadrature::new(f.spec(), &KernelSpec::default());
        let table = DensityTable::build(&f, 0.5, quad.rule());
        let y = Vec3::new(table.axis.node(2), table.axis.node(4), table.axis.node(5));
        assert_abs_diff_eq!(table.eval(&y), density(&f, 0.5, &y), epsilon = 1e-13);
        assert_eq!(table.eval(&Vec3::new(100.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn zero_field_and_zero_diameter() {
        let zero = FieldLattice::zeros(grid());
        let x = Vec3::new(0.5, 0.0, -0.5);
        let p = Momentum3::new(0.3, 1.0, 0.0);
        let cfg = OperatorConfig::default();
        assert_eq!(gain_sharp(&zero, 0.5, &x, &p, &cfg), 0.0);
        assert_eq!(loss_sharp(&zero, 0.5, &x, &p, &cfg), 0.0);
        assert_eq!(collision_sharp(&zero, 0.5, &x, &p, &cfg), 0.0);
        let no_diameter = OperatorConfig { a: 0.0, ..cfg };
        assert_eq!(gain_sharp(&gaussian(), 0.5, &x, &p, &no_diameter), 0.0);
        assert_eq!(loss_sharp(&gaussian(), 0.5, &x, &p, &no_diameter), 0.0);
    }

    #[test]
    fn loss_vanishes_where_field_vanishes() {
        let spec = grid();
        let target = spec.node(spec.len() / 2 + 3);
        let f = FieldLattice::from_fn(spec, |x, p| {
            if (x - target.0).norm() < 1e-12 && (p - target.1).norm() < 1e-12 {
                0.0
            } else {
                0.3
            }
        });
        let loss = loss_sharp(&f, 0.2, &target.0, &Momentum3(target.1), &OperatorConfig::default());
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn parts_are_nonnegative_and_quadratic() {
        let f = gaussian();
        let cfg = constant_y();
        let x = Vec3::new(0.2, -0.4, 0.3);
        let p = Vec3::new(0.5, 0.1, -0.7);
        let op = CollisionOperator::new(&f, 0.4, &cfg);
        let (g, l) = (op.gain(&x, &p), op.loss(&x, &p));
        assert!(g > 0.0 && l > 0.0);
        let f2 = f.scaled(2.0);
        let op2 = CollisionOperator::new(&f2, 0.4, &cfg);
        assert!((op2.gain(&x, &p) / g - 4.0).abs() < 1e-10);
        assert!((op2.loss(&x, &p) / l - 4.0).abs() < 1e-10);
        assert!((op2.collision(&x, &p) - 4.0 * op.collision(&x, &p)).abs() < 1e-10 * g);
    }

    #[test]
    fn isotropic_homogeneous_boltzmann_is_finite() {
        let f = FieldLattice::from_fn(grid(), |_, p| (-p.norm()).exp());
        let cfg = OperatorConfig {
            mode: Mode::Boltzmann,
            ..OperatorConfig::default()
        };
        let q = collision_sharp(&f, 0.0, &Vec3::zeros(), &Momentum3::new(0.5, 0.0, 0.0), &cfg);
        assert!(q.is_finite());
    }

    #[test]
    fn sweep_matches_pointwise() {
        let spec = grid();
        let f = gaussian();
        for cfg in [OperatorConfig::default(), constant_y()] {
            let t = 0.7;
            let parts = sweep_slice(&f, t, &cfg);
            let op = CollisionOperator::new(&f, t, &cfg);
            for i in (0..spec.len()).step_by(37) {
                let (x, p) = spec.node(i);
                let (g, l) = (op.gain(&x, &p), op.loss(&x, &p));
                assert!((parts.gain.values()[i] - g).abs() <= 1e-12 * g.abs().max(1e-300), "gain at {i}");
                assert!((parts.loss.values()[i] - l).abs() <= 1e-12 * l.abs().max(1e-300), "loss at {i}");
            }
        }
    }

    #[test]
    fn boltzmann_matches_unshifted_enskog() {
        let f = gaussian();
        let (a, y0) = (0.2, 1.7);
        let boltz = OperatorConfig {
            mode: Mode::Boltzmann,
            lambda: a * a * y0,
            ..OperatorConfig::default()
        };
        let quad = CollisionQuadrature::new(f.spec(), &boltz.kernel);
        let b_op = CollisionOperator::with_quadrature(&f, 0.6, &boltz, &quad);
        let e_op = CollisionOperator::with_parts(&f, 0.6, &quad, a * a, 0.0, FSource::Constant(y0));
        for (x, p) in [
            (Vec3::new(0.3, 0.1, -0.2), Vec3::new(0.4, -1.0, 0.2)),
            (Vec3::new(-1.0, 0.5, 0.0), Vec3::new(1.5, 0.5, 0.5)),
        ] {
            let (gb, lb) = (b_op.gain(&x, &p), b_op.loss(&x, &p));
            let (ge, le) = (e_op.gain(&x, &p), e_op.loss(&x, &p));
            assert!((gb - ge).abs() <= 1e-12 * gb.abs());
            assert!((lb - le).abs() <= 1e-12 * lb.abs());
        }
    }

    #[test]
    fn monte_carlo_is_unbiased_on_a_small_case() {
        let spec = GridSpec {
            quad_order: 4,
            quad_panels: 4,
            n_omega: 64,
            ..grid()
        };
        let f = gaussian_field(spec, 0.5, 1.5, 1.2);
        let cfg = OperatorConfig::default();
        let op = CollisionOperator::new(&f, 0.3, &cfg);
        let x = Vec3::new(0.2, 0.1, -0.1);
        let p = Vec3::new(0.3, -0.2, 0.4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mc = op.monte_carlo(&x, &p, 200_000, &mut rng);
        assert!(mc.gain.z_score(op.gain(&x, &p)).abs() < 4.0, "{mc:?} {}", op.gain(&x, &p));
        assert!(mc.loss.z_score(op.loss(&x, &p)).abs() < 4.0, "{mc:?} {}", op.loss(&x, &p));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn small() -> GridSpec {
            GridSpec {
                n_x: 3,
                n_p: 3,
                n_omega: 8,
                quad_order: 3,
                ..GridSpec::default()
            }
        }

        fn field() -> impl Strategy<Value = FieldLattice> {
            prop::collection::vec(0.0f64..1.0, small().len())
                .prop_map(|v| FieldLattice::from_values(small(), v).unwrap())
        }

        fn point() -> impl Strategy<Value = (Vec3, Vec3, f64)> {
            ((-3.0..3.0, -3.0..3.0, -3.0..3.0), (-3.0..3.0, -3.0..3.0, -3.0..3.0), 0.0f64..2.0)
                .prop_map(|(x, p, t)| (Vec3::new(x.0, x.1, x.2), Vec3::new(p.0, p.1, p.2), t))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn parts_nonnegative(f in field(), (x, p, t) in point()) {
                let op = CollisionOperator::new(&f, t, &OperatorConfig::default());
                prop_assert!(op.gain(&x, &p) >= 0.0);
                prop_assert!(op.loss(&x, &p) >= 0.0);
            }

            #[test]
            fn quadratic_homogeneity(f in field(), (x, p, t) in point(), scale in 0.1f64..10.0) {
                let cfg = OperatorConfig { y: YFactorSpec::Constant { y0: 1.3 }, ..OperatorConfig::default() };
                let scaled = f.scaled(scale);
                let (a, b) = (CollisionOperator::new(&f, t, &cfg), CollisionOperator::new(&scaled, t, &cfg));
                let s2 = scale * scale;
                let (g, l) = (a.gain(&x, &p), a.loss(&x, &p));
                prop_assert!((b.gain(&x, &p) - s2 * g).abs() <= 1e-10 * s2 * g);
                prop_assert!((b.loss(&x, &p) - s2 * l).abs() <= 1e-10 * s2 * l);
            }
        }
    }
}
