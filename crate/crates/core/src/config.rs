//! Scenario files: TOML with dotted keys.
//!
//! ```toml
//! seed = 0
//! threads = 0
//! output_dir = "out"
//!
//! grid.n_x = 5
//! grid.n_p = 5
//! kernel.delta = 0.5
//! y.kind = "linear"
//! y.b = 0.3
//! operator.a = 0.2
//! operator.mode = "enskog"
//! solver.R = "auto"
//! initial_data.kind = "gaussian"
//! initial_data.amplitude = "auto"
//! ```
//!
//! Every key is optional; unknown keys are rejected and every error names
//! the offending key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hypotheses::GaleanoParams;
use crate::kernel::{KernelSpec, SigmaTilde, YFactorSpec};
use crate::lattice::GridSpec;
use crate::operator::{Mode, OperatorConfig};

/// A number or `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

impl Auto {
    pub fn resolve(self, auto: impl FnOnce() -> Result<f64>) -> Result<f64> {
        match self {
            Auto::Auto => auto(),
            Auto::Value(v) => Ok(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub radius: Auto,
    pub lipschitz: Auto,
    pub k_const: Auto,
    /// `R = radius_fraction × threshold` when `R` is automatic.
    pub radius_fraction: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Zero,
    /// `A exp(−|x|²/wx² − |p|²/wp²)`; `"auto"` amplitude puts `|||f0|||` at `R/2`.
    Gaussian { amplitude: Auto, x_width: f64, p_width: f64 },
    /// Lattice header; the payload path is read from `initial_data.payload`.
    FromFile { header: PathBuf, payload: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub grid: GridSpec,
    pub operator: OperatorConfig,
    pub solver: SolverSettings,
    pub n_samples: usize,
    pub initial_data: InitialData,
    pub galeano: GaleanoParams,
    pub galeano_v0: f64,
    pub limit_a_values: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            threads: 0,
            output_dir: PathBuf::from("out"),
            grid: GridSpec::desk(),
            operator: OperatorConfig::default(),
            solver: SolverSettings {
                radius: Auto::Auto,
                lipschitz: Auto::Auto,
                k_const: Auto::Auto,
                radius_fraction: 0.5,
                tol: 1e-10,
                max_iter: 60,
            },
            n_samples: 100,
            initial_data: InitialData::Gaussian {
                amplitude: Auto::Auto,
                x_width: 1.5,
                p_width: 1.0,
            },
            galeano: GaleanoParams {
                beta: 1.0,
                c: 1.0,
                l: 1.0,
                a: 0.2,
            },
            galeano_v0: 0.5,
            limit_a_values: vec![0.2, 0.1, 0.05],
        }
    }
}

/// Dotted-key view of a parsed document that tracks consumed keys.
struct Keys {
    map: BTreeMap<String, toml::Value>,
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other);
            }
        }
    }
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<toml::Value> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(toml::Value::Float(v)) => Ok(v),
            Some(toml::Value::Integer(v)) => Ok(v as f64),
            Some(v) => Err(Error::config(key, format!("expected a number, found `{v}`"))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some(toml::Value::Integer(v)) if v >= 0 => Ok(v as usize),
            Some(v) => Err(Error::config(key, format!("expected a nonnegative integer, found `{v}`"))),
        }
    }

    fn string(&mut self, key: &str, default: &str) -> Result<String> {
        match self.take(key) {
            None => Ok(default.to_string()),
            Some(toml::Value::String(s)) => Ok(s),
            Some(v) => Err(Error::config(key, format!("expected a string, found `{v}`"))),
        }
    }

    fn auto(&mut self, key: &str, default: Auto) -> Result<Auto> {
        match self.take(key) {
            None => Ok(default),
            Some(toml::Value::String(s)) if s == "auto" => Ok(Auto::Auto),
            Some(toml::Value::Float(v)) => Ok(Auto::Value(v)),
            Some(toml::Value::Integer(v)) => Ok(Auto::Value(v as f64)),
            Some(v) => Err(Error::config(key, format!("expected a number or \"auto\", found `{v}`"))),
        }
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(x),
                    toml::Value::Integer(x) => Ok(x as f64),
                    other => Err(Error::config(key, format!("expected numbers, found `{other}`"))),
                })
                .collect(),
            Some(v) => Err(Error::config(key, format!("expected an array, found `{v}`"))),
        }
    }
}

fn require(key: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, what))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
        let mut map = BTreeMap::new();
        flatten("", table, &mut map);
        let mut keys = Keys { map };
        let cfg = Self::read(&mut keys)?;
        if let Some(key) = keys.map.keys().next() {
            return Err(Error::config(key.clone(), "unknown key"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn read(k: &mut Keys) -> Result<Self> {
        let d = ScenarioConfig::default();
        let seed = k.usize("seed", 0)? as u64;
        let threads = k.usize("threads", 0)?;
        let output_dir = PathBuf::from(k.string("output_dir", "out")?);

        let g = d.grid;
        let grid = GridSpec {
            x_max: k.f64("grid.x_max", g.x_max)?,
            p_max: k.f64("grid.p_max", g.p_max)?,
            n_x: k.usize("grid.n_x", g.n_x)?,
            n_p: k.usize("grid.n_p", g.n_p)?,
            n_omega: k.usize("grid.n_omega", g.n_omega)?,
            t_max: k.f64("grid.t_max", g.t_max)?,
            n_t: k.usize("grid.n_t", g.n_t)?,
            quad_order: k.usize("grid.quad_order", g.quad_order)?,
            quad_panels: k.usize("grid.quad_panels", g.quad_panels)?,
            density_refine: k.usize("grid.density_refine", g.density_refine)?,
        };
        require("grid.x_max", grid.x_max > 0.0 && grid.x_max.is_finite(), "must be positive")?;
        require("grid.p_max", grid.p_max > 0.0 && grid.p_max.is_finite(), "must be positive")?;
        require("grid.n_x", grid.n_x >= 3 && grid.n_x % 2 == 1, "must be odd and >= 3")?;
        require("grid.n_p", grid.n_p >= 3 && grid.n_p % 2 == 1, "must be odd and >= 3")?;
        require("grid.n_omega", grid.n_omega >= 6, "must be >= 6")?;
        require("grid.t_max", grid.t_max > 0.0 && grid.t_max.is_finite(), "must be positive")?;
        require("grid.n_t", grid.n_t >= 2, "must be >= 2")?;
        require("grid.quad_order", grid.quad_order >= 1, "must be >= 1")?;
        require("grid.quad_panels", grid.quad_panels >= 1, "must be >= 1")?;
        require("grid.density_refine", grid.density_refine >= 1, "must be >= 1")?;

        let kd = KernelSpec::default();
        let delta = k.f64("kernel.delta", kd.delta)?;
        require("kernel.delta", delta > 0.0 && delta < 1.0, "must lie in (0, 1)")?;
        let sigma_kind = k.string("kernel.sigma_kind", "constant")?;
        let sigma_tilde = match sigma_kind.as_str() {
            "constant" => {
                let value = k.f64("kernel.sigma_value", 1.0)?;
                require("kernel.sigma_value", value >= 0.0 && value.is_finite(), "must be >= 0")?;
                SigmaTilde::Constant { value }
            }
            "axial" => {
                let base = k.f64("kernel.sigma_value", 1.0)?;
                let amplitude = k.f64("kernel.sigma_amplitude", 0.0)?;
                require("kernel.sigma_value", base >= 0.0 && base.is_finite(), "must be >= 0")?;
                require(
                    "kernel.sigma_amplitude",
                    amplitude.is_finite() && base + amplitude.min(0.0) >= 0.0,
                    "sigma_value + min(0, sigma_amplitude) must be >= 0",
                )?;
                SigmaTilde::Axial { base, amplitude }
            }
            other => return Err(Error::config("kernel.sigma_kind", format!("unknown kind `{other}`"))),
        };
        let c0 = k.f64("kernel.c0", kd.c0)?;
        require("kernel.c0", c0 > 0.0 && c0.is_finite(), "must be positive")?;
        let kernel = KernelSpec { delta, sigma_tilde, c0 };

        let y = match k.string("y.kind", "linear")?.as_str() {
            "constant" => {
                let y0 = k.f64("y.y0", 1.0)?;
                require("y.y0", y0 > 0.0 && y0.is_finite(), "must be positive")?;
                YFactorSpec::Constant { y0 }
            }
            "linear" => {
                let b = k.f64("y.b", 0.3)?;
                require("y.b", b >= 0.0 && b.is_finite(), "must be >= 0")?;
                YFactorSpec::Linear { b }
            }
            other => return Err(Error::config("y.kind", format!("unknown kind `{other}`"))),
        };

        let od = d.operator;
        let a = k.f64("operator.a", od.a)?;
        require("operator.a", a >= 0.0 && a.is_finite(), "must be >= 0")?;
        let mode = match k.string("operator.mode", "enskog")?.as_str() {
            "enskog" => Mode::Enskog,
            "boltzmann" => Mode::Boltzmann,
            other => return Err(Error::config("operator.mode", format!("unknown mode `{other}`"))),
        };
        let lambda = k.f64("operator.lambda", od.lambda)?;
        require("operator.lambda", lambda > 0.0 && lambda.is_finite(), "must be positive")?;
        let operator = OperatorConfig { a, mode, lambda, kernel, y };

        let sd = &d.solver;
        let solver = SolverSettings {
            radius: k.auto("solver.R", sd.radius)?,
            lipschitz: k.auto("solver.L", sd.lipschitz)?,
            k_const: k.auto("solver.K", sd.k_const)?,
            radius_fraction: k.f64("solver.radius_fraction", sd.radius_fraction)?,
            tol: k.f64("solver.tol", sd.tol)?,
            max_iter: k.usize("solver.max_iter", sd.max_iter)?,
        };
        if let Auto::Value(r) = solver.radius {
            require("solver.R", r > 0.0 && r.is_finite(), "must be positive")?;
        }
        if let Auto::Value(l) = solver.lipschitz {
            require("solver.L", l >= 0.0 && l.is_finite(), "must be >= 0")?;
        }
        if let Auto::Value(kc) = solver.k_const {
            require("solver.K", kc >= 0.0 && kc.is_finite(), "must be >= 0")?;
        }
        require(
            "solver.radius_fraction",
            solver.radius_fraction > 0.0 && solver.radius_fraction <= 1.0,
            "must lie in (0, 1]",
        )?;
        require("solver.tol", solver.tol > 0.0, "must be positive")?;
        require("solver.max_iter", solver.max_iter >= 1, "must be >= 1")?;

        let n_samples = k.usize("hypotheses.n_samples", d.n_samples)?;
        require("hypotheses.n_samples", n_samples >= 100, "must be >= 100")?;

        let initial_data = match k.string("initial_data.kind", "gaussian")?.as_str() {
            "zero" => InitialData::Zero,
            "gaussian" => {
                let amplitude = k.auto("initial_data.amplitude", Auto::Auto)?;
                if let Auto::Value(v) = amplitude {
                    require("initial_data.amplitude", v >= 0.0 && v.is_finite(), "must be >= 0")?;
                }
                let x_width = k.f64("initial_data.x_width", 1.5)?;
                let p_width = k.f64("initial_data.p_width", 1.0)?;
                require("initial_data.x_width", x_width > 0.0, "must be positive")?;
                require("initial_data.p_width", p_width > 0.0, "must be positive")?;
                InitialData::Gaussian { amplitude, x_width, p_width }
            }
            "from_file" => {
                let header = k.string("initial_data.path", "")?;
                require("initial_data.path", !header.is_empty(), "required for from_file")?;
                let payload = k.string("initial_data.payload", "")?;
                require("initial_data.payload", !payload.is_empty(), "required for from_file")?;
                InitialData::FromFile {
                    header: header.into(),
                    payload: payload.into(),
                }
            }
            other => return Err(Error::config("initial_data.kind", format!("unknown kind `{other}`"))),
        };

        let gd = d.galeano;
        let galeano = GaleanoParams {
            beta: k.f64("galeano.beta", gd.beta)?,
            c: k.f64("galeano.c", gd.c)?,
            l: k.f64("galeano.L", gd.l)?,
            a: k.f64("galeano.a", gd.a)?,
        };
        for (key, v) in [
            ("galeano.beta", galeano.beta),
            ("galeano.c", galeano.c),
            ("galeano.L", galeano.l),
            ("galeano.a", galeano.a),
        ] {
            require(key, v > 0.0 && v.is_finite(), "must be positive")?;
        }
        let galeano_v0 = k.f64("galeano.v0", d.galeano_v0)?;
        require("galeano.v0", galeano_v0 > 0.0 && galeano_v0.is_finite(), "must be positive")?;

        let limit_a_values = k.f64_list("boltzmann_limit.a_values", &d.limit_a_values)?;
        require(
            "boltzmann_limit.a_values",
            !limit_a_values.is_empty() && limit_a_values.iter().all(|a| *a > 0.0 && a.is_finite()),
            "must be a nonempty list of positive numbers",
        )?;

        Ok(ScenarioConfig {
            seed,
            threads,
            output_dir,
            grid,
            operator,
            solver,
            n_samples,
            initial_data,
            galeano,
            galeano_v0,
            limit_a_values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(text: &str) -> String {
        match ScenarioConfig::from_toml_str(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn dotted_and_sectioned_keys() {
        let text = "seed = 7\ngrid.n_x = 3\n[operator]\na = 0.1\nmode = \"boltzmann\"\n[solver]\nR = 0.25\nK = \"auto\"\n";
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.grid.n_x, 3);
        assert_eq!(cfg.operator.mode, Mode::Boltzmann);
        assert_eq!(cfg.solver.radius, Auto::Value(0.25));
        assert_eq!(cfg.solver.k_const, Auto::Auto);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of("grid.n_x = 4"), "grid.n_x");
        assert_eq!(key_of("kernel.delta = 1.5"), "kernel.delta");
        assert_eq!(key_of("solver.tol = -1"), "solver.tol");
        assert_eq!(key_of("solver.R = \"big\""), "solver.R");
        assert_eq!(key_of("operator.mode = \"dense\""), "operator.mode");
        assert_eq!(key_of("grid.nx = 5"), "grid.nx");
        assert_eq!(key_of("initial_data.kind = \"from_file\""), "initial_data.path");
    }
}
