//! Quadrature rules over momentum space, the unit sphere and time.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use super::GridSpec;
use crate::kinematics::Vec3;

/// Gauss–Legendre nodes and weights on `[a, b]`, nodes ascending.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
    let rule = GaussLegendre::new(order);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    out.sort_by(|l, r| l.0.total_cmp(&r.0));
    out
}

/// Composite Gauss–Legendre rule: `panels` equal panels of `order` points.
pub fn composite_gauss_legendre(order: usize, panels: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|k| {
            let lo = a + k as f64 * width;
            gauss_legendre(order, lo, lo + width)
        })
        .collect()
}

/// Product rule over the full sphere: Gauss–Legendre in `cos θ` times a
/// uniform rule in `ψ`. Uses at most `n_omega` nodes; weights sum to 4π.
pub fn sphere_rule(n_omega: usize) -> Vec<(Vec3, f64)> {
    let n_c = ((n_omega as f64 / 2.0).sqrt().round() as usize).max(2);
    let n_psi = (n_omega / n_c).max(3);
    let dpsi = 2.0 * PI / n_psi as f64;
    let mut out = Vec::with_capacity(n_c * n_psi);
    for (c, wc) in gauss_legendre(n_c, -1.0, 1.0) {
        let sin = (1.0 - c * c).max(0.0).sqrt();
        for j in 0..n_psi {
            let psi = (j as f64 + 0.5) * dpsi;
            out.push((Vec3::new(sin * psi.cos(), sin * psi.sin(), c), wc * dpsi));
        }
    }
    out
}

/// Rule over a hemisphere `{ω : ω·n ≥ 0}` in a local frame `(e1, e2, n)`.
///
/// Gauss–Legendre in the polar angle `θ ∈ [0, π/2]` measured from `n`
/// (weights carry the `sin θ` Jacobian); in the azimuth, one Gauss–Legendre
/// panel on each side of the plane `ω·e1 = 0`, so integrands with a kink in
/// `|ω·e1|` are integrated panel-wise. Weights sum to 2π up to the polar
/// rule's error on `sin θ`.
#[derive(Clone, Debug)]
pub struct HemisphereRule {
    /// `(local ω, weight)`; the third component is `ω·n`.
    nodes: Vec<([f64; 3], f64)>,
}

impl HemisphereRule {
    /// Rule with the node budget of a full-sphere rule of `n_omega` points.
    pub fn new(n_omega: usize) -> Self {
        let h = (n_omega / 2).max(2);
        let n_c = ((h as f64 / 2.0).sqrt().floor() as usize).max(1);
        let n_pp = (h / (2 * n_c)).max(1);
        let thetas = gauss_legendre(n_c, 0.0, PI / 2.0);
        let mut psis = gauss_legendre(n_pp, -PI / 2.0, PI / 2.0);
        psis.extend(gauss_legendre(n_pp, PI / 2.0, 1.5 * PI));
        let mut nodes = Vec::with_capacity(thetas.len() * psis.len());
        for &(theta, wt) in &thetas {
            let (sin, c) = theta.sin_cos();
            let wc = wt * sin;
            for &(psi, wp) in &psis {
                nodes.push(([sin * psi.cos(), sin * psi.sin(), c], wc * wp));
            }
        }
        HemisphereRule { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn local_nodes(&self) -> &[([f64; 3], f64)] {
        &self.nodes
    }

    /// Nodes mapped to the frame with pole `n` and first axis `e1`
    /// (both unit, orthogonal).
    pub fn oriented(&self, n: &Vec3, e1: &Vec3) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        let (n, e1) = (*n, *e1);
        let e2 = n.cross(&e1);
        self.nodes
            .iter()
            .map(move |&([a, b, c], w)| (a * e1 + b * e2 + c * n, w))
    }
}

/// Any unit vector orthogonal to the unit vector `n`.
pub fn orthogonal_unit(n: &Vec3) -> Vec3 {
    let trial = if n.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let v = trial - n.dot(&trial) * n;
    v / v.norm()
}

/// Tensorized (composite) Gauss–Legendre rule on `[−p_max, p_max]³`.
pub fn momentum_rule(spec: &GridSpec) -> Vec<(Vec3, f64)> {
    let axis = composite_gauss_legendre(spec.quad_order, spec.quad_panels, -spec.p_max, spec.p_max);
    let mut out = Vec::with_capacity(axis.len().pow(3));
    for &(a, wa) in &axis {
        for &(b, wb) in &axis {
            for &(c, wc) in &axis {
                out.push((Vec3::new(a, b, c), wa * wb * wc));
            }
        }
    }
    out
}

/// Cumulative trapezoid weights on a uniform grid: `out[k][j]` is the weight
/// of node `j` in `∫_0^{t_k}`.
pub fn cumulative_trapezoid(n_t: usize, dt: f64) -> Vec<Vec<f64>> {
    (0..n_t)
        .map(|k| {
            (0..n_t)
                .map(|j| {
                    if k == 0 || j > k {
                        0.0
                    } else if j == 0 || j == k {
                        0.5 * dt
                    } else {
                        dt
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn integrate(rule: &[(Vec3, f64)], f: impl Fn(&Vec3) -> f64) -> f64 {
        rule.iter().map(|(w, wt)| wt * f(w)).sum()
    }

    #[test]
    fn sphere_rule_moments() {
        for n in [6, 16, 32, 64, 200] {
            let rule = sphere_rule(n);
            assert!(rule.len() <= n.max(6));
            assert_abs_diff_eq!(integrate(&rule, |_| 1.0), 4.0 * PI, epsilon = 1e-10);
            let first = rule.iter().fold(Vec3::zeros(), |acc, (w, wt)| acc + *wt * w);
            assert_abs_diff_eq!(first, Vec3::zeros(), epsilon = 1e-10);
            for (w, _) in &rule {
                assert_abs_diff_eq!(w.norm(), 1.0, epsilon = 1e-14);
            }
        }
        let rule = sphere_rule(32);
        let e = Vec3::new(0.3, -0.5, 0.8).normalize();
        assert_abs_diff_eq!(
            integrate(&rule, |w| w.dot(&e).powi(2)),
            4.0 * PI / 3.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn sphere_refinement_converges() {
        let e = Vec3::new(0.2, 0.7, -0.4).normalize();
        let f = |w: &Vec3| (0.5 * w.dot(&e)).exp() + w.x * w.x * w.y;
        let coarse = integrate(&sphere_rule(16), f);
        let fine = integrate(&sphere_rule(64), f);
        assert!(((coarse - fine) / fine).abs() < 1e-4);
    }

    #[test]
    fn hemisphere_rule_mass_and_orientation() {
        for (n, tol) in [(6, 0.12), (16, 2e-3), (32, 2e-3), (100, 1e-10), (200, 1e-14)] {
            let rule = HemisphereRule::new(n);
            assert!(rule.len() <= n / 2);
            let n_axis = Vec3::new(1.0, 1.0, 1.0).normalize();
            let e1 = orthogonal_unit(&n_axis);
            let mut total = 0.0;
            for (w, wt) in rule.oriented(&n_axis, &e1) {
                assert!(w.dot(&n_axis) >= 0.0);
                assert_abs_diff_eq!(w.norm(), 1.0, epsilon = 1e-14);
                total += wt;
            }
            assert!((total / (2.0 * PI) - 1.0).abs() < tol, "n = {n}: {total}");
        }
        // |ω·e1| over the hemisphere is π, integrated exactly panel-wise.
        let rule = HemisphereRule::new(200);
        let total: f64 = rule.local_nodes().iter().map(|(w, wt)| wt * w[0].abs()).sum();
        assert_abs_diff_eq!(total, PI, epsilon = 1e-8);
    }

    #[test]
    fn momentum_rule_moments() {
        let spec = GridSpec::default();
        let rule = momentum_rule(&spec);
        let vol: f64 = rule.iter().map(|(_, w)| w).sum();
        assert_abs_diff_eq!(vol, (2.0 * spec.p_max).powi(3), epsilon = 1e-10);
        let first = rule.iter().fold(Vec3::zeros(), |acc, (p, w)| acc + *w * p);
        assert_abs_diff_eq!(first, Vec3::zeros(), epsilon = 1e-10);
    }

    #[test]
    fn trapezoid_weights() {
        let w = cumulative_trapezoid(4, 0.5);
        assert!(w[0].iter().all(|&x| x == 0.0));
        assert_eq!(w[1], vec![0.25, 0.25, 0.0, 0.0]);
        assert_eq!(w[3], vec![0.25, 0.5, 0.5, 0.25]);
    }
}
