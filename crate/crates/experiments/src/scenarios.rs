//! Scenario kinds and the shared run context.

use serde_json::json;

use coopmag_core::bath::{probe_grid, Component};
use coopmag_core::couplings::{build_coupling_matrices, coupling_gamma, coupling_gamma_tilde, coupling_j, coupling_jz, CouplingMatrices, JMode};
use coopmag_core::dynamics::{default_time_grid, dynamics_solver, DynamicsProblem, DynamicsResult};
use coopmag_core::params::{beta_hbar_omega, derive_scales, dimensionless_config, DerivedScales, DimensionlessConfig, Preset};
use coopmag_core::spectrum::{band_method, chain_modes, BAND_METHODS};
use coopmag_core::Error;

use crate::config::ScenarioConfig;
use crate::disorder::run_disorder_ensemble;
use crate::error::RunError;
use crate::output::{num, Artifact, Table};

/// A configuration resolved against its preset.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ScenarioConfig,
    pub preset: Preset,
    pub scales: DerivedScales,
    /// Geometry and temperature as configured, before any sweep.
    pub base: DimensionlessConfig,
}

impl Context {
    pub fn resolve(config: &ScenarioConfig) -> Result<Self, RunError> {
        config.validate()?;
        let mut preset = config.preset_with_overrides()?;
        let scales = derive_scales(&preset.bath, &preset.qubits, &preset.environment)?;
        let q = &config.qubits;
        if let Some(a) = q.a_over_lambda {
            preset.qubits.lattice_constant = a * scales.lambda;
        }
        if let Some(pos) = &q.positions_over_lambda {
            if q.n_qubits.is_some_and(|n| n != pos.len()) {
                return Err(RunError::Config(format!(
                    "qubits.positions_over_lambda: {} coordinates for n_qubits = {}",
                    pos.len(),
                    q.n_qubits.unwrap_or_default()
                )));
            }
            preset.qubits.n_qubits = pos.len();
            preset.qubits.positions = Some(pos.iter().map(|p| p * scales.lambda).collect());
        }
        preset.qubits.validate().map_err(|e| RunError::Config(format!("qubits: {e}")))?;
        let base = dimensionless_config(&scales, &preset.qubits);
        Ok(Context { config: config.clone(), preset, scales, base })
    }

    pub fn n_qubits(&self) -> usize {
        self.base.n_qubits()
    }

    pub fn spacings(&self) -> Vec<f64> {
        if self.config.sweep.a_over_lambda.is_empty() {
            vec![self.base.a_over_lambda]
        } else {
            self.config.sweep.a_over_lambda.clone()
        }
    }

    pub fn temperatures(&self) -> Vec<f64> {
        if self.config.sweep.temperature.is_empty() {
            vec![self.preset.environment.temperature]
        } else {
            self.config.sweep.temperature.clone()
        }
    }

    /// Coordinates (units of λ) at spacing `a`; explicit positions ignore `a`.
    pub fn positions(&self, a_over_lambda: f64) -> Vec<f64> {
        if self.config.qubits.positions_over_lambda.is_some() {
            self.base.positions.clone()
        } else {
            (0..self.n_qubits()).map(|i| i as f64 * a_over_lambda).collect()
        }
    }

    /// Kernel configuration at spacing `a` and temperature `t` (K).
    pub fn at(&self, a_over_lambda: f64, temperature: f64) -> DimensionlessConfig {
        let beta = beta_hbar_omega(self.scales.omega_qi, temperature);
        let mut cfg = self.base.clone().with_beta_hbar_omega(beta);
        cfg.a_over_lambda = a_over_lambda;
        cfg.positions = self.positions(a_over_lambda);
        cfg
    }
}

pub struct ScenarioOutput {
    pub artifacts: Vec<Artifact>,
    pub realization_seeds: Vec<u64>,
}

impl ScenarioOutput {
    fn files(artifacts: Vec<Artifact>) -> Self {
        ScenarioOutput { artifacts, realization_seeds: Vec::new() }
    }
}

pub trait Scenario: Send + Sync {
    fn kind(&self) -> &'static str;
    fn run(&self, ctx: &Context) -> Result<ScenarioOutput, RunError>;
}

pub const SCENARIO_KINDS: [&str; 6] = ["couplings", "bands", "spectrum", "dynamics", "correlations", "bath-probe"];

pub fn scenario(kind: &str) -> Result<Box<dyn Scenario>, RunError> {
    match kind {
        "couplings" => Ok(Box::new(Couplings)),
        "bands" => Ok(Box::new(Bands)),
        "spectrum" => Ok(Box::new(Spectrum)),
        "dynamics" => Ok(Box::new(Dynamics { correlations: false })),
        "correlations" => Ok(Box::new(Dynamics { correlations: true })),
        "bath-probe" => Ok(Box::new(BathProbe)),
        other => Err(RunError::Config(format!("kind: unknown scenario '{other}' (available: {})", SCENARIO_KINDS.join(", ")))),
    }
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    (0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect()
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> serde_json::Value {
    json!((0..m.nrows()).map(|r| m.row(r).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

// ---------------------------------------------------------------------------

struct Couplings;

impl Scenario for Couplings {
    fn kind(&self) -> &'static str {
        "couplings"
    }

    fn run(&self, ctx: &Context) -> Result<ScenarioOutput, RunError> {
        let c = &ctx.config.couplings;
        let cfg = &ctx.base;
        let g0 = cfg.gamma0();
        let mut table = Table::new(
            "couplings.csv",
            "pair couplings vs separation; rho in lambda, rates in Gamma0",
            &["rho_over_lambda", "J_full", "J_asymptotic", "Jz", "Gamma", "GammaTilde"],
        );
        for rho in linspace(c.rho_min, c.rho_max, c.n_points) {
            let full = coupling_j(rho, cfg, JMode::Full, &c.quadrature)?;
            let asym = coupling_j(rho, cfg, JMode::Asymptotic, &c.quadrature)?;
            let jz = coupling_jz(rho, cfg, &c.quadrature)?;
            table.push(
                [rho, full / g0, asym / g0, jz / g0, coupling_gamma(rho, cfg) / g0, coupling_gamma_tilde(rho, cfg) / g0]
                    .map(num)
                    .to_vec(),
            );
        }
        let m = build_coupling_matrices(&cfg.positions, cfg, &ctx.config.coupling_options(true)?)?.in_gamma0_units();
        let matrices = json!({
            "units": "Gamma0",
            "j_mode": ctx.config.couplings.j_mode,
            "positions_over_lambda": cfg.positions,
            "J": matrix_json(&m.j),
            "Jz": matrix_json(&m.jz),
            "Gamma": matrix_json(&m.gamma),
            "GammaTilde": matrix_json(&m.gamma_tilde),
            "psd_clip_applied": m.psd_clip_applied,
        });
        Ok(ScenarioOutput::files(vec![
            Artifact::Csv(table),
            Artifact::Json { name: "coupling_matrices.json".into(), value: matrices },
        ]))
    }
}

// ---------------------------------------------------------------------------

struct Bands;

impl Scenario for Bands {
    fn kind(&self) -> &'static str {
        "bands"
    }

    fn run(&self, ctx: &Context) -> Result<ScenarioOutput, RunError> {
        let b = &ctx.config.bands;
        for m in &b.methods {
            if !BAND_METHODS.contains(&m.as_str()) {
                return Err(RunError::Config(format!("bands.methods: unknown '{m}' (available: {})", BAND_METHODS.join(", "))));
            }
        }
        let mut table = Table::new(
            "bands.csv",
            "infinite-chain band structure; k in pi/a and 1/lambda, J_k and Gamma_k in Gamma0, NaN where a method is undefined",
            &["a_over_lambda", "method", "ka_over_pi", "k_lambda", "J_k", "Gamma_k"],
        );
        for a in ctx.spacings() {
            let cfg = ctx.at(a, ctx.preset.environment.temperature);
            let g0 = cfg.gamma0();
            let ks: Vec<f64> = linspace(-1.0, 1.0, b.n_k).iter().map(|x| x * std::f64::consts::PI / a).collect();
            for name in &b.methods {
                let method = band_method(name, b.n_max, b.taper)?;
                // points on a square-root singularity are reported as NaN
                let values: Vec<(f64, f64)> = match method.evaluate(&ks, a, &cfg) {
                    Ok(band) => (0..ks.len())
                        .map(|i| (band.j_k.as_ref().map_or(f64::NAN, |j| j[i]), band.gamma_k[i]))
                        .collect(),
                    Err(Error::SingularPoint { .. }) => ks
                        .iter()
                        .map(|&k| match method.evaluate(&[k], a, &cfg) {
                            Ok(band) => Ok((band.j_k.map_or(f64::NAN, |j| j[0]), band.gamma_k[0])),
                            Err(Error::SingularPoint { .. }) => Ok((f64::NAN, f64::NAN)),
                            Err(e) => Err(e),
                        })
                        .collect::<Result<_, _>>()?,
                    Err(e) => return Err(e.into()),
                };
                for (&k, (j, g)) in ks.iter().zip(values) {
                    table.push(vec![num(a), name.clone(), num(k * a / std::f64::consts::PI), num(k), num(j / g0), num(g / g0)]);
                }
            }
        }
        Ok(ScenarioOutput::files(vec![Artifact::Csv(table)]))
    }
}

// ---------------------------------------------------------------------------

struct Spectrum;

impl Scenario for Spectrum {
    fn kind(&self) -> &'static str {
        "spectrum"
    }

    fn run(&self, ctx: &Context) -> Result<ScenarioOutput, RunError> {
        let n = ctx.n_qubits();
        let t = ctx.preset.environment.temperature;
        let mut modes = Table::new(
            "modes.csv",
            "single-excitation modes ascending in decay rate; shift and Gamma_m in Gamma0",
            &["a_over_lambda", "mode", "shift", "Gamma_m"],
        );
        for a in ctx.spacings() {
            let cfg = ctx.at(a, t);
            let spec = modes_at(ctx, &cfg)?;
            let g0 = cfg.gamma0();
            for (m, e) in spec.eigenvalues.iter().enumerate() {
                modes.push(vec![num(a), m.to_string(), num(e.re / g0), num(-e.im / g0)]);
            }
        }
        let mut summary = Table::new(
            "spectrum_sweep.csv",
            "decay-rate extremes vs spacing; rates in Gamma0, trace_sum = sum_m Gamma_m / (N Gamma0)",
            &["a_over_lambda", "min_Gamma", "max_Gamma", "trace_sum", "max_relative_residual"],
        );
        let sweep: Vec<f64> = match &ctx.config.spectrum.range {
            Some(r) => r.values(),
            None => ctx.spacings(),
        };
        for a in sweep {
            let cfg = ctx.at(a, t);
            let spec = modes_at(ctx, &cfg)?;
            let g0 = cfg.gamma0();
            let rates = spec.decay_rates();
            let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = rates.iter().sum();
            summary.push(vec![
                num(a),
                num(spec.min_decay_rate() / g0),
                num(max / g0),
                num(sum / (n as f64 * g0)),
                num(spec.max_relative_residual),
            ]);
        }
        Ok(ScenarioOutput::files(vec![Artifact::Csv(modes), Artifact::Csv(summary)]))
    }
}

fn modes_at(ctx: &Context, cfg: &DimensionlessConfig) -> Result<coopmag_core::spectrum::SingleExcitationSpectrum, RunError> {
    if ctx.config.qubits.positions_over_lambda.is_none() && ctx.config.j_mode()? == JMode::Asymptotic {
        return Ok(chain_modes(ctx.n_qubits(), cfg.a_over_lambda, cfg)?);
    }
    let c = build_coupling_matrices(&cfg.positions, cfg, &ctx.config.coupling_options(false)?)?;
    Ok(coopmag_core::spectrum::single_excitation_modes(&coopmag_core::spectrum::effective_hamiltonian(&c))?)
}

// ---------------------------------------------------------------------------

/// Coupling matrices in units of Γ₀ for the given coordinates.
pub fn dynamics_couplings(ctx: &Context, positions: &[f64], temperature: f64) -> Result<CouplingMatrices, RunError> {
    let cfg = ctx.at(ctx.base.a_over_lambda, temperature).with_positions(positions.to_vec());
    Ok(build_coupling_matrices(positions, &cfg, &ctx.config.coupling_options(false)?)?.in_gamma0_units())
}

/// One dynamics run (or disorder ensemble) at spacing `a` and temperature `t`.
pub struct DynamicsPoint {
    pub a_over_lambda: f64,
    pub temperature: f64,
    pub gamma0_over_nu: f64,
    pub result: DynamicsResult,
    pub realizations: Vec<DynamicsResult>,
    pub seeds: Vec<u64>,
}

pub fn solve_dynamics_point(ctx: &Context, a: f64, temperature: f64, correlations: bool) -> Result<DynamicsPoint, RunError> {
    let d = &ctx.config.dynamics;
    let settings = d.solver_settings(ctx.config.seed);
    let solver = dynamics_solver(&d.solver, settings)?;
    let grid = default_time_grid(d.t_max);
    let solve = |positions: &[f64]| -> Result<DynamicsResult, RunError> {
        let couplings = dynamics_couplings(ctx, positions, temperature)?;
        let problem =
            DynamicsProblem { couplings, initial: d.initial.clone(), t_grid: grid.clone(), record_correlations: correlations };
        Ok(solver.solve(&problem)?)
    };
    let base = ctx.positions(a);
    let gamma0_over_nu = ctx.at(a, temperature).gamma0();
    let dis = &ctx.config.disorder;
    if dis.is_active() {
        let ens = run_disorder_ensemble(&base, a, dis.xi, dis.n_realizations, ctx.config.seed, solve)?;
        Ok(DynamicsPoint {
            a_over_lambda: a,
            temperature,
            gamma0_over_nu,
            result: ens.mean,
            realizations: ens.realizations,
            seeds: ens.seeds,
        })
    } else {
        let result = solve(&base)?;
        Ok(DynamicsPoint { a_over_lambda: a, temperature, gamma0_over_nu, result, realizations: Vec::new(), seeds: Vec::new() })
    }
}

struct Dynamics {
    correlations: bool,
}

fn opt(v: Option<f64>) -> String {
    num(v.unwrap_or(f64::NAN))
}

impl Scenario for Dynamics {
    fn kind(&self) -> &'static str {
        if self.correlations {
            "correlations"
        } else {
            "dynamics"
        }
    }

    fn run(&self, ctx: &Context) -> Result<ScenarioOutput, RunError> {
        let mut points = Vec::new();
        for a in ctx.spacings() {
            for t in ctx.temperatures() {
                log::info!("{}: a/lambda = {a}, T = {t} K", self.kind());
                points.push(solve_dynamics_point(ctx, a, t, self.correlations)?);
            }
        }
        let mut curves = Table::new(
            "dynamics.csv",
            "collective relaxation; t in 1/Gamma0(T), total_sigma_z dimensionless, R in Gamma0(T), \
             gamma0_over_nu is Gamma0(T)/nu, stderr NaN for deterministic solvers",
            &[
                "a_over_lambda",
                "temperature_K",
                "gamma0_over_nu",
                "t",
                "total_sigma_z",
                "total_sigma_z_stderr",
                "R",
                "R_stderr",
            ],
        );
        let mut per_qubit = Table::new(
            "sigma_z.csv",
            "single-qubit inversion; t in 1/Gamma0(T)",
            &["a_over_lambda", "temperature_K", "t", "qubit", "sigma_z", "sigma_z_stderr"],
        );
        let mut realizations = Table::new(
            "realizations.csv",
            "per-realization disorder curves; t in 1/Gamma0(T), R in Gamma0(T)",
            &["a_over_lambda", "temperature_K", "realization", "seed", "t", "total_sigma_z", "R"],
        );
        let mut corr = Table::new(
            "correlations.csv",
            "two-excitation correlations c_ab = <s+_a s+_b s-_b s-_a>, zero on the diagonal; t in 1/Gamma0(T)",
            &["a_over_lambda", "temperature_K", "t", "alpha", "beta", "c"],
        );
        let mut seeds = Vec::new();
        for p in &points {
            let r = &p.result;
            let (a, temp) = (num(p.a_over_lambda), num(p.temperature));
            for (k, &t) in r.t_grid.iter().enumerate() {
                curves.push(vec![
                    a.clone(),
                    temp.clone(),
                    num(p.gamma0_over_nu),
                    num(t),
                    num(r.total_sigma_z[k]),
                    opt(r.total_sigma_z_stderr.as_ref().map(|s| s[k])),
                    num(r.emission_rate[k]),
                    opt(r.emission_rate_stderr.as_ref().map(|s| s[k])),
                ]);
                for q in 0..r.n_qubits() {
                    per_qubit.push(vec![
                        a.clone(),
                        temp.clone(),
                        num(t),
                        q.to_string(),
                        num(r.sigma_z[k][q]),
                        opt(r.sigma_z_stderr.as_ref().map(|s| s[k][q])),
                    ]);
                }
                if let Some(c) = r.correlations.get(k) {
                    for i in 0..c.nrows() {
                        for j in 0..c.ncols() {
                            corr.push(vec![a.clone(), temp.clone(), num(t), i.to_string(), j.to_string(), num(c[(i, j)])]);
                        }
                    }
                }
            }
            for (i, (real, seed)) in p.realizations.iter().zip(&p.seeds).enumerate() {
                for (k, &t) in real.t_grid.iter().enumerate() {
                    realizations.push(vec![
                        a.clone(),
                        temp.clone(),
                        i.to_string(),
                        seed.to_string(),
                        num(t),
                        num(real.total_sigma_z[k]),
                        num(real.emission_rate[k]),
                    ]);
                }
            }
            seeds.extend(&p.seeds);
        }
        let mut artifacts = vec![Artifact::Csv(curves), Artifact::Csv(per_qubit)];
        if self.correlations {
            artifacts.push(Artifact::Csv(corr));
        }
        if ctx.config.disorder.is_active() {
            artifacts.push(Artifact::Csv(realizations));
        }
        let diagnostics: Vec<_> = points
            .iter()
            .map(|p| {
                json!({
                    "a_over_lambda": p.a_over_lambda,
                    "temperature_K": p.temperature,
                    "solver": p.result.solver,
                    "trajectory_count": p.result.trajectory_count,
                    "max_trace_drift": p.result.max_trace_drift,
                    "min_eigenvalue": p.result.min_eigenvalue,
                    "peak_R": p.result.peak_emission().1,
                    "peak_t": p.result.t_grid[p.result.peak_emission().0],
                })
            })
            .collect();
        artifacts.push(Artifact::Json { name: "diagnostics.json".into(), value: json!(diagnostics) });
        Ok(ScenarioOutput { artifacts, realization_seeds: seeds })
    }
}

// ---------------------------------------------------------------------------

struct BathProbe;

impl Scenario for BathProbe {
    fn kind(&self) -> &'static str {
        "bath-probe"
    }

    fn run(&self, ctx: &Context) -> Result<ScenarioOutput, RunError> {
        let p = &ctx.config.bath_probe;
        let (omega_qi, lambda) = (ctx.scales.omega_qi, ctx.scales.lambda);
        let omegas: Vec<f64> = p.omega.values().iter().map(|w| w * omega_qi).collect();
        let ks: Vec<f64> = p.k_lambda.values().iter().map(|k| k / lambda).collect();
        let mut table = Table::new(
            "susceptibility.csv",
            "film spin susceptibilities; omega in omega_qi, k in 1/lambda, chi in 1/erg for the transverse and dimensionless-chi0 units for zz",
            &["component", "omega_over_omega_qi", "k_lambda", "re_chi", "im_chi"],
        );
        for name in &p.components {
            let component = Component::from_name(name)?;
            for point in probe_grid(component, &omegas, &ks, &ctx.preset.bath, ctx.scales.applied_field)? {
                table.push(vec![
                    name.clone(),
                    num(point.omega / omega_qi),
                    num(point.k * lambda),
                    num(point.value.re),
                    num(point.value.im),
                ]);
            }
        }
        Ok(ScenarioOutput::files(vec![Artifact::Csv(table)]))
    }
}
