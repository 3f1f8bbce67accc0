//! Many-body relaxation of the qubit register.
//!
//! Two solvers share one [`Generator`]: exact integration of the density
//! matrix (`dense`) and Monte-Carlo wavefunction trajectories
//! (`trajectories`). Rates and times are in whatever units the coupling
//! matrices carry; the experiments layer hands in matrices scaled by Γ₀.

mod channels;
mod dense;
mod dopri;
mod generator;
mod state;
mod trajectories;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use channels::{build_jump_channels, Channel, JumpChannels, CHANNEL_CUTOFF};
pub use dense::{evolve_density_matrix, DenseOptions, DEFAULT_DENSE_MAX_QUBITS};
pub use dopri::{Dopri5, Tolerances};
pub use generator::{Generator, MAX_QUBITS};
pub use state::{DensityMatrix, SectorLayout};
pub use trajectories::{
    no_jump_evolution, run_trajectories, trajectory_seed, TrajectoryOptions, TrajectoryStart,
    DEFAULT_TRAJECTORY_MAX_QUBITS, JUMP_TIME_TOLERANCE,
};

use crate::couplings::CouplingMatrices;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsResult {
    pub solver: String,
    pub t_grid: Vec<f64>,
    /// ⟨σ^z_α⟩ per grid point, indexed [time][qubit].
    pub sigma_z: Vec<Vec<f64>>,
    pub total_sigma_z: Vec<f64>,
    /// R = −½ dΣ⟨σ^z⟩/dt from the generator.
    pub emission_rate: Vec<f64>,
    /// c_αβ per grid point when requested.
    pub correlations: Vec<DMatrix<f64>>,
    pub sigma_z_stderr: Option<Vec<Vec<f64>>>,
    pub total_sigma_z_stderr: Option<Vec<f64>>,
    pub emission_rate_stderr: Option<Vec<f64>>,
    pub trajectory_count: Option<usize>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: Option<f64>,
}

impl DynamicsResult {
    pub(crate) fn empty(solver: &str, t_grid: &[f64]) -> Self {
        DynamicsResult {
            solver: solver.into(),
            t_grid: t_grid.to_vec(),
            sigma_z: Vec::with_capacity(t_grid.len()),
            total_sigma_z: Vec::with_capacity(t_grid.len()),
            emission_rate: Vec::with_capacity(t_grid.len()),
            correlations: Vec::new(),
            sigma_z_stderr: None,
            total_sigma_z_stderr: None,
            emission_rate_stderr: None,
            trajectory_count: None,
            max_trace_drift: 0.0,
            min_eigenvalue: None,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.sigma_z.first().map_or(0, Vec::len)
    }

    pub fn is_stochastic(&self) -> bool {
        self.trajectory_count.is_some()
    }

    /// (index, value) of the largest emission rate.
    pub fn peak_emission(&self) -> (usize, f64) {
        self.emission_rate
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, r)| if r > best.1 { (k, r) } else { best })
    }
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "empty time grid".into() });
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "times must be finite and strictly increasing".into() });
    }
    Ok(())
}

/// 200 points on [0, t_max]: t = 0, 60 logarithmic points on
/// [t_max/5000, t_max/10), then 139 linear points on [t_max/10, t_max].
pub fn default_time_grid(t_max: f64) -> Vec<f64> {
    let (lo, mid) = (t_max / 5000.0, t_max / 10.0);
    let mut grid = vec![0.0];
    let ratio = (mid / lo).ln() / 60.0;
    grid.extend((0..60).map(|k| lo * (ratio * k as f64).exp()));
    grid.extend((0..139).map(|k| mid + (t_max - mid) * k as f64 / 138.0));
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialState {
    AllExcited,
    Ground,
    /// Independent qubits with the given excited-state populations.
    Product { p_excited: Vec<f64> },
    /// Thermal product state at the bath temperature.
    Thermal,
    /// Pure state, amplitudes over the bit basis.
    Pure { amplitudes: Vec<Complex64> },
}

impl InitialState {
    /// Excited-state populations of a product initial state, or `None` for a pure state.
    pub fn product_populations(&self, n: usize, boltzmann_factor: f64) -> Option<Vec<f64>> {
        match self {
            InitialState::AllExcited => Some(vec![1.0; n]),
            InitialState::Ground => Some(vec![0.0; n]),
            InitialState::Product { p_excited } => Some(p_excited.clone()),
            InitialState::Thermal => Some(vec![boltzmann_factor / (1.0 + boltzmann_factor); n]),
            InitialState::Pure { .. } => None,
        }
    }

    pub fn density_matrix(&self, n: usize, boltzmann_factor: f64) -> Result<DensityMatrix> {
        match self {
            InitialState::Pure { amplitudes } => {
                if amplitudes.len() != 1 << n {
                    return Err(Error::DimensionMismatch { expected: 1 << n, got: amplitudes.len() });
                }
                DensityMatrix::pure(amplitudes)
            }
            other => {
                let p = other.product_populations(n, boltzmann_factor).expect("product state");
                check_populations(&p, n)?;
                Ok(DensityMatrix::product(&p))
            }
        }
    }

    pub fn trajectory_start(&self, n: usize, boltzmann_factor: f64) -> Result<TrajectoryStart> {
        match self {
            InitialState::Pure { amplitudes } => Ok(TrajectoryStart::Pure(amplitudes.clone())),
            other => {
                let p = other.product_populations(n, boltzmann_factor).expect("product state");
                check_populations(&p, n)?;
                // a deterministic product state is a single pure basis state
                if p.iter().all(|&x| x == 0.0 || x == 1.0) {
                    let idx = p.iter().enumerate().fold(0usize, |acc, (a, &x)| if x == 1.0 { acc | 1 << a } else { acc });
                    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
                    psi[idx] = Complex64::new(1.0, 0.0);
                    Ok(TrajectoryStart::Pure(psi))
                } else {
                    Ok(TrajectoryStart::ProductMixture(p))
                }
            }
        }
    }
}

fn check_populations(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidParameter { name: "p_excited", reason: "populations must lie in [0, 1]".into() });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DynamicsProblem {
    pub couplings: CouplingMatrices,
    pub initial: InitialState,
    pub t_grid: Vec<f64>,
    pub record_correlations: bool,
}

impl DynamicsProblem {
    pub fn generator(&self) -> Result<Generator> {
        Generator::new(&self.couplings.j, &build_jump_channels(&self.couplings))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub rtol: f64,
    pub atol: f64,
    pub dense_max_qubits: usize,
    pub trajectory_max_qubits: usize,
    pub check_positivity: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let tol = Tolerances::default();
        SolverSettings {
            n_trajectories: 2000,
            master_seed: 0,
            rtol: tol.rtol,
            atol: tol.atol,
            dense_max_qubits: DEFAULT_DENSE_MAX_QUBITS,
            trajectory_max_qubits: DEFAULT_TRAJECTORY_MAX_QUBITS,
            check_positivity: false,
        }
    }
}

impl SolverSettings {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rtol: self.rtol, atol: self.atol }
    }
}

pub trait DynamicsSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &DynamicsProblem) -> Result<DynamicsResult>;
}

pub struct DenseSolver(pub SolverSettings);
pub struct TrajectorySolver(pub SolverSettings);

impl DynamicsSolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn solve(&self, problem: &DynamicsProblem) -> Result<DynamicsResult> {
        let n = problem.couplings.n_qubits();
        let rho0 = problem.initial.density_matrix(n, problem.couplings.boltzmann_factor)?;
        let options = DenseOptions {
            tolerances: self.0.tolerances(),
            max_qubits: self.0.dense_max_qubits,
            check_positivity: self.0.check_positivity,
            record_correlations: problem.record_correlations,
        };
        evolve_density_matrix(&rho0, &problem.generator()?, &problem.t_grid, &options).map(|(r, _)| r)
    }
}

impl DynamicsSolver for TrajectorySolver {
    fn name(&self) -> &'static str {
        "trajectories"
    }

    fn solve(&self, problem: &DynamicsProblem) -> Result<DynamicsResult> {
        let n = problem.couplings.n_qubits();
        let start = problem.initial.trajectory_start(n, problem.couplings.boltzmann_factor)?;
        let options = TrajectoryOptions {
            n_trajectories: self.0.n_trajectories,
            master_seed: self.0.master_seed,
            tolerances: self.0.tolerances(),
            max_qubits: self.0.trajectory_max_qubits,
            record_correlations: problem.record_correlations,
        };
        run_trajectories(&start, &problem.generator()?, &problem.t_grid, &options)
    }
}

pub const DYNAMICS_SOLVERS: [&str; 2] = ["dense", "trajectories"];

pub fn dynamics_solver(name: &str, settings: SolverSettings) -> Result<Box<dyn DynamicsSolver>> {
    match name {
        "dense" => Ok(Box::new(DenseSolver(settings))),
        "trajectories" => Ok(Box::new(TrajectorySolver(settings))),
        _ => Err(Error::UnknownName { what: "dynamics solver", name: name.into(), available: DYNAMICS_SOLVERS.join(", ") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = default_time_grid(5.0);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-3).abs() < 1e-15);
        assert_eq!(g[61], 0.5);
        assert_eq!(*g.last().unwrap(), 5.0);
        assert!(check_grid(&g).is_ok());
    }

    #[test]
    fn solver_registry() {
        for name in DYNAMICS_SOLVERS {
            assert_eq!(dynamics_solver(name, SolverSettings::default()).unwrap().name(), name);
        }
        assert!(matches!(dynamics_solver("rk4", SolverSettings::default()), Err(Error::UnknownName { .. })));
    }

    #[test]
    fn initial_states() {
        let thermal = InitialState::Thermal.product_populations(2, 0.5).unwrap();
        assert!((thermal[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(InitialState::AllExcited.trajectory_start(3, 0.0).unwrap(), TrajectoryStart::Pure(_)));
        assert!(matches!(InitialState::Thermal.trajectory_start(3, 0.2).unwrap(), TrajectoryStart::ProductMixture(_)));
        assert!(InitialState::Product { p_excited: vec![1.5] }.density_matrix(1, 0.0).is_err());
    }
}
