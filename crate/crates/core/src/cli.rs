//! The `enskog` command line tool.
//!
//! ```text
//! enskog solve <config.toml>              diagnostics.csv, header.json, trajectory.bin, summary.json, report.json
//! enskog check-hypotheses <config.toml>   report.json
//! enskog kinematics-selftest              prints max deviations
//! enskog boltzmann-limit <config.toml>    boltzmann_limit.csv
//! ```
//!
//! Exit codes: 1 invalid input (the message names the config key), 2
//! smallness violated, 3 no convergence.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{Auto, InitialData, ScenarioConfig};
use crate::error::{Error, Result};
use crate::hypotheses::{estimate_k, vacuity, HypothesisReport, Vacuity};
use crate::kernel::YFactorSpec;
use crate::kinematics::{identity_sweep, IdentityDeviations};
use crate::lattice::io::{read_field, write_trajectory, Encoding};
use crate::lattice::{FieldLattice, GridSpec, NodalWeight, Trajectory};
use crate::operator::{gaussian_field, Mode, OperatorConfig};
use crate::solver::{lipschitz_bound, positivity_check, smallness_threshold, JMap, SolverDiagnostics, SolverParams};

#[derive(Debug, Parser)]
#[command(name = "enskog", version, about = "Relativistic Enskog operator and near-vacuum Picard solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 = all cores. Overrides the config value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Picard iteration from the configured initial data.
    Solve { config: PathBuf },
    /// Measure K and run the vacuity check on the older smallness condition.
    CheckHypotheses { config: PathBuf },
    /// Conservation and invariant identities over random collisions.
    KinematicsSelftest {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
    },
    /// Enskog against Boltzmann solutions as the diameter shrinks at fixed `a² Y`.
    BoltzmannLimit { config: PathBuf },
}

/// Constants resolved from the config, `"auto"` entries measured.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub params: SolverParams,
    pub threshold: f64,
    pub hypotheses: Option<HypothesisReport>,
}

/// Resolves `K`, `L` and `R` for `cfg` on `grid`.
pub fn resolve_params(scenario: &ScenarioConfig, cfg: &OperatorConfig) -> Result<Resolved> {
    let s = &scenario.solver;
    let mut report = None;
    let k_const = s.k_const.resolve(|| {
        let r = estimate_k(&cfg.kernel, &scenario.grid, cfg.shift(), scenario.n_samples, scenario.seed)?;
        let k = r.k;
        report = Some(r);
        Ok(k)
    })?;
    let lipschitz = s.lipschitz.resolve(|| Ok(lipschitz_bound(&scenario.grid, cfg)))?;
    let mut params = SolverParams {
        radius: 1.0,
        lipschitz,
        k_const,
        max_iter: s.max_iter,
        tol: s.tol,
    };
    let threshold = smallness_threshold(&params, cfg);
    params.radius = s.radius.resolve(|| {
        if threshold.is_finite() {
            Ok(s.radius_fraction * threshold)
        } else {
            Err(Error::config("solver.R", "threshold is infinite; give R explicitly"))
        }
    })?;
    Ok(Resolved {
        params,
        threshold,
        hypotheses: report,
    })
}

/// Initial data on the scenario grid; an automatic amplitude puts
/// `|||f0|||` at `R/2`.
pub fn initial_field(scenario: &ScenarioConfig, cfg: &OperatorConfig, radius: f64) -> Result<FieldLattice> {
    let grid = scenario.grid;
    match &scenario.initial_data {
        InitialData::Zero => Ok(FieldLattice::zeros(grid)),
        InitialData::Gaussian {
            amplitude,
            x_width,
            p_width,
        } => {
            let shape = gaussian_field(grid, 1.0, *x_width, *p_width);
            let amp = amplitude.resolve(|| {
                let norm = NodalWeight::new(&grid, &cfg.kernel).slice_norm(&shape);
                Ok(0.5 * radius / norm)
            })?;
            Ok(shape.scaled(amp))
        }
        InitialData::FromFile { header, payload } => {
            let f = read_field(header, payload)?;
            if !f.spec().same_lattice(&grid) {
                return Err(Error::config("initial_data.path", "lattice differs from the configured grid"));
            }
            Ok(FieldLattice::from_values(grid, f.into_values())?)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_norm: f64,
    pub positivity_min: f64,
    pub positivity_ok: bool,
    pub radius: f64,
    pub threshold: f64,
    #[serde(rename = "K")]
    pub k_const: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub seed: u64,
}

pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub diagnostics: SolverDiagnostics,
    pub summary: SolveSummary,
    pub resolved: Resolved,
}

/// Runs the `solve` scenario without touching the file system.
pub fn solve_scenario(scenario: &ScenarioConfig) -> Result<SolveOutcome> {
    let cfg = scenario.operator;
    let resolved = resolve_params(scenario, &cfg)?;
    let f0 = initial_field(scenario, &cfg, resolved.params.radius)?;
    let map = JMap::new(scenario.grid, cfg)?;
    let (trajectory, diagnostics) = map.iterate(&f0, &resolved.params)?;
    let pos = positivity_check(&trajectory, &cfg);
    let summary = SolveSummary {
        converged: diagnostics.converged,
        iterations: diagnostics.iterations.len(),
        final_residual: diagnostics.final_residual(),
        final_norm: map.norm(&trajectory),
        positivity_min: pos.min_value,
        positivity_ok: pos.ok,
        radius: resolved.params.radius,
        threshold: resolved.threshold,
        k_const: resolved.params.k_const,
        lipschitz: resolved.params.lipschitz,
        seed: scenario.seed,
    };
    Ok(SolveOutcome {
        trajectory,
        diagnostics,
        summary,
        resolved,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn run_solve(scenario: &ScenarioConfig) -> Result<SolveSummary> {
    let out = solve_scenario(scenario)?;
    let dir = &scenario.output_dir;
    create_dir(dir)?;
    out.diagnostics.save_csv(&dir.join("diagnostics.csv"))?;
    write_trajectory(
        &out.trajectory,
        &dir.join("header.json"),
        &dir.join("trajectory.bin"),
        Encoding::F64Le,
    )?;
    write_json(&dir.join("summary.json"), &out.summary)?;
    if let Some(report) = &out.resolved.hypotheses {
        write_json(&dir.join("report.json"), report)?;
    }
    if !out.summary.converged {
        return Err(Error::NoConvergence {
            iterations: out.summary.iterations,
            residual: out.summary.final_residual,
            ratio: out.diagnostics.last_ratio(),
        });
    }
    Ok(out.summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesesOutput {
    pub hypotheses: HypothesisReport,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub smallness_threshold: f64,
    pub galeano: Vacuity,
}

pub fn run_check_hypotheses(scenario: &ScenarioConfig) -> Result<HypothesesOutput> {
    let cfg = scenario.operator;
    let hypotheses = estimate_k(&cfg.kernel, &scenario.grid, cfg.shift(), scenario.n_samples, scenario.seed)?;
    let lipschitz = lipschitz_bound(&scenario.grid, &cfg);
    let params = SolverParams {
        radius: 1.0,
        lipschitz,
        k_const: hypotheses.k,
        max_iter: 1,
        tol: 1.0,
    };
    let output = HypothesesOutput {
        smallness_threshold: smallness_threshold(&params, &cfg),
        hypotheses,
        lipschitz,
        galeano: vacuity(&scenario.galeano, scenario.galeano_v0)?,
    };
    create_dir(&scenario.output_dir)?;
    write_json(&scenario.output_dir.join("report.json"), &output)?;
    Ok(output)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitRow {
    pub a: f64,
    pub y0: f64,
    pub lambda: f64,
    pub diff_norm: f64,
    pub enskog_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitTable {
    pub radius: f64,
    #[serde(rename = "K")]
    pub k_const: f64,
    pub boltzmann_iterations: usize,
    pub rows: Vec<LimitRow>,
}

impl LimitTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,y0,lambda,diff_norm,enskog_iterations,boltzmann_iterations\n");
        for r in &self.rows {
            out += &format!(
                "{:?},{:.17e},{:.17e},{:.17e},{},{}\n",
                r.a, r.y0, r.lambda, r.diff_norm, r.enskog_iterations, self.boltzmann_iterations
            );
        }
        out
    }

    /// Differences strictly decrease along the sweep.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].diff_norm < w[0].diff_norm)
    }
}

/// Enskog solutions with `Y ≡ λ/a²` against the Boltzmann solution with
/// `λ`, one common `K`, `R` and `f0` for the whole sweep.
pub fn boltzmann_limit(scenario: &ScenarioConfig) -> Result<LimitTable> {
    let grid: GridSpec = scenario.grid;
    let lambda = scenario.operator.lambda;
    let base = OperatorConfig {
        lambda,
        ..scenario.operator
    };
    let boltz = OperatorConfig {
        mode: Mode::Boltzmann,
        ..base
    };
    let enskog: Vec<OperatorConfig> = scenario
        .limit_a_values
        .iter()
        .map(|&a| OperatorConfig {
            a,
            mode: Mode::Enskog,
            y: YFactorSpec::Constant { y0: lambda / (a * a) },
            ..base
        })
        .collect();

    // one K bounding every operator of the sweep
    let k_const = match scenario.solver.k_const {
        Auto::Value(k) => k,
        Auto::Auto => std::iter::once(0.0)
            .chain(scenario.limit_a_values.iter().copied())
            .map(|a| estimate_k(&base.kernel, &grid, a, scenario.n_samples, scenario.seed).map(|r| r.k))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max),
    };
    let mut params = SolverParams {
        radius: 1.0,
        lipschitz: 0.0,
        k_const,
        max_iter: scenario.solver.max_iter,
        tol: scenario.solver.tol,
    };
    // C = 2 λ K in every mode of the sweep
    let threshold = smallness_threshold(&params, &boltz);
    params.radius = scenario
        .solver
        .radius
        .resolve(|| Ok(scenario.solver.radius_fraction * threshold))?;
    let f0 = initial_field(scenario, &boltz, params.radius)?;

    let reference_map = JMap::new(grid, boltz)?;
    let (reference, ref_diag) = reference_map.solve(&f0, &params)?;
    let rows = enskog
        .iter()
        .map(|cfg| {
            let map = JMap::new(grid, *cfg)?;
            let (traj, diag) = map.solve(&f0, &params)?;
            Ok(LimitRow {
                a: cfg.a,
                y0: lambda / (cfg.a * cfg.a),
                lambda,
                diff_norm: map.norm(&traj.combine(1.0, &reference, -1.0)?),
                enskog_iterations: diag.iterations.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitTable {
        radius: params.radius,
        k_const,
        boltzmann_iterations: ref_diag.iterations.len(),
        rows,
    })
}

pub fn run_boltzmann_limit(scenario: &ScenarioConfig) -> Result<LimitTable> {
    let table = boltzmann_limit(scenario)?;
    create_dir(&scenario.output_dir)?;
    let path = scenario.output_dir.join("boltzmann_limit.csv");
    std::fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
    Ok(table)
}

pub fn kinematics_selftest(samples: usize, radius: f64, seed: u64) -> IdentityDeviations {
    identity_sweep(samples, radius, seed)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SmallnessViolated { .. } => 2,
        Error::NoConvergence { .. } => 3,
        _ => 1,
    }
}

fn load(path: &Path, cli: &Cli) -> Result<ScenarioConfig> {
    let mut scenario = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    if let Some(threads) = cli.threads {
        scenario.threads = threads;
    }
    init_threads(scenario.threads);
    Ok(scenario)
}

fn init_threads(threads: usize) {
    // the global pool can only be built once per process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve { config } => {
            let s = run_solve(&load(config, cli)?)?;
            println!(
                "converged in {} iterations, residual {:e}, |||f||| = {:e}, R = {:e}, min f = {:e}",
                s.iterations, s.final_residual, s.final_norm, s.radius, s.positivity_min
            );
        }
        Command::CheckHypotheses { config } => {
            let out = run_check_hypotheses(&load(config, cli)?)?;
            let h = &out.hypotheses;
            println!("{}: K1 = {:e}, K2 = {:e}, K = {:e}", h.label, h.k1_estimate, h.k2_estimate, h.k);
            println!("sigma_tilde_ratio_sup = {:e}", h.sigma_tilde_ratio_sup);
            println!("L = {:e}, smallness threshold = {:e}", out.lipschitz, out.smallness_threshold);
            println!(
                "galeano bound at v = 0: {:e}; uniform radii: {}",
                out.galeano.bound_at_zero,
                if out.galeano.uniform_radii.is_none() { "empty" } else { "nonempty" }
            );
        }
        Command::KinematicsSelftest { samples, radius } => {
            init_threads(cli.threads.unwrap_or(0));
            let d = kinematics_selftest(*samples, *radius, cli.seed.unwrap_or(0));
            println!("samples            {}", d.samples);
            println!("momentum           {:e}", d.momentum);
            println!("energy             {:e}", d.energy);
            println!("s - 4 - 4g^2       {:e}", d.s_identity);
            println!("v_M^2 identity     {:e}", d.moller_identity);
            println!("v_M - |v - v1|     {:e}", d.moller_excess);
        }
        Command::BoltzmannLimit { config } => {
            let table = run_boltzmann_limit(&load(config, cli)?)?;
            print!("{}", table.to_csv());
            println!("monotone: {}", table.is_monotone());
        }
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
