//! Fixed-point map `J`, Picard iteration and the smallness threshold.
//!
//! On the lattice, `J(f#)(t_k) = f0 + Σ_j w_kj Q(f)#(t_j)` with cumulative
//! trapezoid weights `w_kj`. The iteration starts from `f0` held constant in
//! time and runs in the weighted norm `|||f||| = max |f#| / m`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::quadrature::cumulative_trapezoid;
use crate::lattice::{FieldLattice, GridSpec, NodalWeight, Trajectory};
use crate::operator::{
    sweep_with_quadrature, CollisionQuadrature, DensityTable, Mode, OperatorConfig, OperatorParts,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Ball radius `R`.
    pub radius: f64,
    /// Lipschitz constant `L(R)` of `F±` on the ball.
    pub lipschitz: f64,
    /// Hypothesis constant `K`.
    pub k_const: f64,
    pub max_iter: usize,
    /// Residual tolerance in the weighted norm.
    pub tol: f64,
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidInput(format!("R must be > 0, got {}", self.radius)));
        }
        if !(self.lipschitz >= 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::InvalidInput(format!("L must be >= 0, got {}", self.lipschitz)));
        }
        if !(self.k_const >= 0.0 && self.k_const.is_finite()) {
            return Err(Error::InvalidInput(format!("K must be >= 0, got {}", self.k_const)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// `L̃(R) = L R + |F+(0)| + |F−(0)|`.
pub fn l_tilde(params: &SolverParams, cfg: &OperatorConfig, r: f64) -> f64 {
    let (fp, fm) = cfg.f_at_zero();
    params.lipschitz * r + fp + fm
}

/// `C(R) = L̃(R) a² K`; in Boltzmann mode `λ` replaces `a²`.
pub fn c_of_r(params: &SolverParams, cfg: &OperatorConfig, r: f64) -> f64 {
    l_tilde(params, cfg, r) * cfg.prefactor() * params.k_const
}

/// Largest `R` with `4 C(R) R ≤ 1`, by bisection. Infinite when `C ≡ 0`.
pub fn smallness_threshold(params: &SolverParams, cfg: &OperatorConfig) -> f64 {
    let c0 = c_of_r(params, cfg, 0.0);
    if c0 <= 0.0 {
        return f64::INFINITY;
    }
    let excess = |r: f64| 4.0 * c_of_r(params, cfg, r) * r - 1.0;
    // C is nondecreasing, so 4 C(R) R ≥ 4 C(0) R and the root lies below hi
    let (mut lo, mut hi) = (0.0, 1.0 / (4.0 * c0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `b · sup ρ(m̂)` over the time grid: a Lipschitz constant of `F±` in the
/// weighted norm, `m̂` being the lattice interpolant of `m`. Zero when `Y`
/// does not depend on the density.
pub fn lipschitz_bound(grid: &GridSpec, cfg: &OperatorConfig) -> f64 {
    if cfg.mode == Mode::Boltzmann || !cfg.y.depends_on_density() {
        return 0.0;
    }
    let weight = FieldLattice::weight(*grid, &cfg.kernel);
    let quad = CollisionQuadrature::new(grid, &cfg.kernel);
    let sup = grid
        .times()
        .into_iter()
        .map(|t| DensityTable::build(&weight, t, quad.rule()).max_abs())
        .fold(0.0, f64::max);
    cfg.y.slope() * sup
}

/// The map `J` on one grid with its quadrature and weights cached.
#[derive(Clone, Debug)]
pub struct JMap {
    spec: GridSpec,
    cfg: OperatorConfig,
    quad: CollisionQuadrature,
    weight: NodalWeight,
    trapezoid: Vec<Vec<f64>>,
}

impl JMap {
    pub fn new(spec: GridSpec, cfg: OperatorConfig) -> Result<Self> {
        spec.validate()?;
        cfg.validate()?;
        Ok(JMap {
            spec,
            cfg,
            quad: CollisionQuadrature::new(&spec, &cfg.kernel),
            weight: NodalWeight::new(&spec, &cfg.kernel),
            trapezoid: cumulative_trapezoid(spec.n_t, spec.dt()),
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn config(&self) -> &OperatorConfig {
        &self.cfg
    }

    pub fn norm(&self, traj: &Trajectory) -> f64 {
        self.weight.norm(traj)
    }

    fn check(&self, traj: &Trajectory) -> Result<()> {
        if !traj.spec().same_lattice(&self.spec) || traj.slices().len() != self.spec.n_t {
            return Err(Error::GridMismatch("trajectory does not match the solver grid".into()));
        }
        Ok(())
    }

    /// `Q±#` at every node of every slice.
    pub fn parts(&self, traj: &Trajectory) -> Result<Vec<OperatorParts>> {
        self.check(traj)?;
        Ok(sweep_with_quadrature(traj, &self.cfg, &self.quad))
    }

    /// `∫_0^{t_k} Q(f)# dτ` for every `k`.
    pub fn integrated_collision(&self, traj: &Trajectory) -> Result<Trajectory> {
        let q: Vec<FieldLattice> = self.parts(traj)?.iter().map(OperatorParts::collision).collect();
        let slices = self
            .trapezoid
            .iter()
            .map(|weights| {
                let mut acc = vec![0.0; self.spec.len()];
                for (w, qj) in weights.iter().zip(&q) {
                    if *w != 0.0 {
                        acc.iter_mut().zip(qj.values()).for_each(|(a, v)| *a += w * v);
                    }
                }
                FieldLattice::from_values(self.spec, acc)
            })
            .collect::<Result<_>>()?;
        Trajectory::new(self.spec, slices)
    }

    /// `Σ_k w_k |Q±#(t_k)|` over the whole interval, per node.
    pub fn integrated_abs_parts(&self, traj: &Trajectory) -> Result<(FieldLattice, FieldLattice)> {
        let parts = self.parts(traj)?;
        let weights = self.trapezoid.last().expect("n_t >= 2");
        let mut gain = vec![0.0; self.spec.len()];
        let mut loss = vec![0.0; self.spec.len()];
        for (w, part) in weights.iter().zip(&parts) {
            for (a, v) in gain.iter_mut().zip(part.gain.values()) {
                *a += w * v.abs();
            }
            for (a, v) in loss.iter_mut().zip(part.loss.values()) {
                *a += w * v.abs();
            }
        }
        Ok((
            FieldLattice::from_values(self.spec, gain)?,
            FieldLattice::from_values(self.spec, loss)?,
        ))
    }

    /// `J(f#)`; slice 0 equals `f0` exactly.
    pub fn apply(&self, traj: &Trajectory, f0: &FieldLattice) -> Result<Trajectory> {
        if !f0.spec().same_lattice(&self.spec) {
            return Err(Error::GridMismatch("f0 does not match the solver grid".into()));
        }
        let integral = self.integrated_collision(traj)?;
        let slices = integral
            .into_slices()
            .into_iter()
            .enumerate()
            .map(|(k, s)| if k == 0 { Ok(f0.clone()) } else { f0.combine(1.0, &s, 1.0) })
            .collect::<Result<_>>()?;
        Trajectory::new(self.spec, slices)
    }

    /// `|||J(f) − J(g)||| / |||f − g|||`, 0 when `f = g`.
    pub fn contraction_ratio(&self, f: &Trajectory, g: &Trajectory) -> Result<f64> {
        let diff = self.norm(&f.combine(1.0, g, -1.0)?);
        if diff == 0.0 {
            return Ok(0.0);
        }
        // f0 cancels in the difference
        let jf = self.integrated_collision(f)?;
        let jg = self.integrated_collision(g)?;
        Ok(self.norm(&jf.combine(1.0, &jg, -1.0)?) / diff)
    }

    /// Picard iteration with the convergence outcome left in
    /// [`SolverDiagnostics::converged`]; fails only on the smallness gate.
    pub fn iterate(&self, f0: &FieldLattice, params: &SolverParams) -> Result<(Trajectory, SolverDiagnostics)> {
        params.validate()?;
        let threshold = smallness_threshold(params, &self.cfg);
        let start = Trajectory::constant(self.spec, f0);
        let f0_norm = self.norm(&start);
        if f0_norm > 0.5 * params.radius * (1.0 + 1e-12) || params.radius > threshold {
            return Err(Error::SmallnessViolated {
                f0_norm,
                radius: params.radius,
                threshold,
            });
        }
        let mut diag = SolverDiagnostics {
            radius: params.radius,
            threshold,
            converged: false,
            iterations: Vec::new(),
        };
        let mut current = start;
        let mut previous_residual = f64::NAN;
        for n in 1..=params.max_iter {
            let next = self.apply(&current, f0)?;
            let residual = self.norm(&next.combine(1.0, &current, -1.0)?);
            let ratio = if n == 1 || previous_residual == 0.0 {
                f64::NAN
            } else {
                residual / previous_residual
            };
            let norm = self.norm(&next);
            diag.iterations.push(IterationRecord {
                iteration: n,
                norm,
                residual,
                ratio,
                min_value: next.min_value(),
                confined: norm <= params.radius,
                mass: next.slices().iter().map(FieldLattice::mass).collect(),
            });
            current = next;
            previous_residual = residual;
            if residual < params.tol {
                diag.converged = true;
                break;
            }
        }
        Ok((current, diag))
    }

    pub fn solve(&self, f0: &FieldLattice, params: &SolverParams) -> Result<(Trajectory, SolverDiagnostics)> {
        let (traj, diag) = self.iterate(f0, params)?;
        if !diag.converged {
            return Err(Error::NoConvergence {
                iterations: diag.iterations.len(),
                residual: diag.final_residual(),
                ratio: diag.last_ratio(),
            });
        }
        Ok((traj, diag))
    }
}

pub fn apply_j(traj: &Trajectory, f0: &FieldLattice, cfg: &OperatorConfig) -> Result<Trajectory> {
    JMap::new(*traj.spec(), *cfg)?.apply(traj, f0)
}

pub fn picard_solve(
    f0: &FieldLattice,
    grid: GridSpec,
    params: &SolverParams,
    cfg: &OperatorConfig,
) -> Result<(Trajectory, SolverDiagnostics)> {
    JMap::new(grid, *cfg)?.solve(f0, params)
}

pub fn contraction_estimate(f: &Trajectory, g: &Trajectory, cfg: &OperatorConfig) -> Result<f64> {
    JMap::new(*f.spec(), *cfg)?.contraction_ratio(f, g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub min_value: f64,
    pub ok: bool,
}

/// Minimum over all nodes; `ok` iff it is `≥ −1e-10 |||traj|||`.
pub fn positivity_check(traj: &Trajectory, cfg: &OperatorConfig) -> Positivity {
    let min_value = traj.min_value().min(0.0);
    let norm = NodalWeight::new(traj.spec(), &cfg.kernel).norm(traj);
    Positivity {
        min_value: traj.min_value(),
        ok: min_value >= -1e-10 * norm,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub norm: f64,
    pub residual: f64,
    /// Residual over the previous residual; NaN on the first iteration.
    pub ratio: f64,
    pub min_value: f64,
    pub confined: bool,
    /// `∫∫ f# dx dp` per time slice.
    pub mass: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub radius: f64,
    pub threshold: f64,
    pub converged: bool,
    pub iterations: Vec<IterationRecord>,
}

impl SolverDiagnostics {
    pub fn final_residual(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.residual)
    }

    pub fn last_ratio(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.ratio)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.residual).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n_mass = self.iterations.first().map_or(0, |r| r.mass.len());
        write!(out, "iteration,norm,residual,ratio,min_value,confined")?;
        for k in 0..n_mass {
            write!(out, ",mass_{k}")?;
        }
        writeln!(out)?;
        for r in &self.iterations {
            write!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                r.iteration, r.norm, r.residual, r.ratio, r.min_value, r.confined
            )?;
            for m in &r.mass {
                write!(out, ",{m:.17e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::YFactorSpec;
    use crate::operator::gaussian_field;
    use proptest::prelude::*;

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

    fn constant_y() -> OperatorConfig {
        OperatorConfig {
            a: 0.1,
            y: YFactorSpec::Constant { y0: 1.0 },
            ..OperatorConfig::default()
        }
    }

    fn params(k: f64, l: f64) -> SolverParams {
        SolverParams {
            radius: 1.0,
            lipschitz: l,
            k_const: k,
            max_iter: 50,
            tol: 1e-12,
        }
    }

    #[test]
    fn threshold_closed_form() {
        let t = smallness_threshold(&params(5.0, 0.0), &constant_y());
        assert!((t - 2.5).abs() < 1e-12 * 2.5, "{t}");
        let wide = OperatorConfig { a: 0.2, ..constant_y() };
        let t2 = smallness_threshold(&params(5.0, 0.0), &wide);
        assert!((t2 - t / 4.0).abs() < 1e-12 * t);
        assert_eq!(smallness_threshold(&params(0.0, 0.0), &constant_y()), f64::INFINITY);
    }

    #[test]
    fn threshold_with_lipschitz_term() {
        // 4 (L R + 2) a² K R = 1
        let (l, a2k) = (3.0, 0.01 * 5.0);
        let t = smallness_threshold(&params(5.0, l), &constant_y());
        let exact = (-2.0 + (4.0 + l / a2k).sqrt()) / (2.0 * l);
        assert!((t - exact).abs() < 1e-12 * exact, "{t} vs {exact}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn threshold_decreases_in_k(k in 0.01f64..100.0, l in 0.0f64..10.0, scale in 1.01f64..10.0) {
            let cfg = constant_y();
            let lo = smallness_threshold(&params(k, l), &cfg);
            let hi = smallness_threshold(&params(k * scale, l), &cfg);
            prop_assert!(hi < lo);
            prop_assert!(4.0 * c_of_r(&params(k, l), &cfg, lo) * lo <= 1.0 + 1e-12);
        }

        #[test]
        fn c_of_r_nondecreasing(l in 0.0f64..10.0, r1 in 0.0f64..5.0, dr in 0.0f64..5.0) {
            let cfg = OperatorConfig::default();
            let p = params(2.0, l);
            prop_assert!(c_of_r(&p, &cfg, r1) <= c_of_r(&p, &cfg, r1 + dr));
            prop_assert!(c_of_r(&p, &cfg, r1) > 0.0);
        }
    }

    #[test]
    fn j_of_zero_and_zero_diameter() {
        let spec = grid();
        let f0 = gaussian_field(spec, 0.3, 1.5, 1.0);
        let out = apply_j(&Trajectory::zeros(spec), &f0, &constant_y()).unwrap();
        assert!(out.slices().iter().all(|s| s == &f0));
        let no_diameter = OperatorConfig { a: 0.0, ..constant_y() };
        let out = apply_j(&Trajectory::constant(spec, &f0), &f0, &no_diameter).unwrap();
        assert!(out.slices().iter().all(|s| s == &f0));
    }

    #[test]
    fn slice_zero_is_f0() {
        let spec = grid();
        let f0 = gaussian_field(spec, 0.3, 1.5, 1.0);
        let out = apply_j(&Trajectory::constant(spec, &f0), &f0, &OperatorConfig::default()).unwrap();
        assert_eq!(out.slice(0), &f0);
        assert_ne!(out.slice(2), &f0);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let spec = grid();
        let other = GridSpec { n_x: 5, ..spec };
        let f0 = FieldLattice::zeros(other);
        assert!(matches!(
            apply_j(&Trajectory::zeros(spec), &f0, &constant_y()),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn zero_data_converges_in_one_step() {
        let spec = grid();
        let (traj, diag) = picard_solve(&FieldLattice::zeros(spec), spec, &params(1.0, 0.0), &constant_y()).unwrap();
        assert!(diag.converged);
        assert_eq!(diag.iterations.len(), 1);
        assert_eq!(diag.final_residual(), 0.0);
        assert_eq!(traj.min_value(), 0.0);
    }

    #[test]
    fn oversized_data_is_rejected() {
        let spec = grid();
        let f0 = FieldLattice::weight(spec, &constant_y().kernel).scaled(100.0);
        assert!(matches!(
            picard_solve(&f0, spec, &params(1.0, 0.0), &constant_y()),
            Err(Error::SmallnessViolated { .. })
        ));
    }

    #[test]
    fn positivity_cases() {
        let spec = grid();
        let cfg = constant_y();
        let zero = Trajectory::zeros(spec);
        assert_eq!(positivity_check(&zero, &cfg), Positivity { min_value: 0.0, ok: true });
        let mut slices = Trajectory::constant(spec, &gaussian_field(spec, 0.3, 1.5, 1.0)).into_slices();
        slices[1].values_mut()[4] = -1.0;
        let bad = Trajectory::new(spec, slices).unwrap();
        let check = positivity_check(&bad, &cfg);
        assert!(!check.ok && check.min_value == -1.0);
    }

    #[test]
    fn contraction_of_equal_trajectories_is_zero() {
        let spec = grid();
        let f = Trajectory::constant(spec, &gaussian_field(spec, 0.3, 1.5, 1.0));
        assert_eq!(contraction_estimate(&f, &f, &constant_y()).unwrap(), 0.0);
    }

    #[test]
    fn diagnostics_csv_layout() {
        let diag = SolverDiagnostics {
            radius: 1.0,
            threshold: 2.0,
            converged: true,
            iterations: vec![IterationRecord {
                iteration: 1,
                norm: 0.5,
                residual: 0.0,
                ratio: f64::NAN,
                min_value: 0.0,
                confined: true,
                mass: vec![1.0, 2.0],
            }],
        };
        let mut buf = Vec::new();
        diag.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "iteration,norm,residual,ratio,min_value,confined,mass_0,mass_1");
        assert!(lines.next().unwrap().starts_with("1,5.00000000000000000e-1,"));
    }
}
