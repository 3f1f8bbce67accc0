use num_complex::Complex64;

use super::dopri::{Dopri5, Tolerances};
use super::generator::Generator;
use super::state::{correlations_from_populations, hermitize_data, sigma_z_from_populations, DensityMatrix};
use super::{check_grid, DynamicsResult};
use crate::error::{Error, Result};

type C = Complex64;

pub const DEFAULT_DENSE_MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct DenseOptions {
    pub tolerances: Tolerances,
    pub max_qubits: usize,
    /// Track the smallest eigenvalue of ρ at every output time.
    pub check_positivity: bool,
    pub record_correlations: bool,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions {
            tolerances: Tolerances::default(),
            max_qubits: DEFAULT_DENSE_MAX_QUBITS,
            check_positivity: false,
            record_correlations: false,
        }
    }
}

/// Integrates the master equation from `rho0` at `t_grid[0]` and samples the
/// observables on the grid through the integrator's dense output.
pub fn evolve_density_matrix(
    rho0: &DensityMatrix,
    generator: &Generator,
    t_grid: &[f64],
    options: &DenseOptions,
) -> Result<(DynamicsResult, DensityMatrix)> {
    let n = generator.n_qubits();
    if rho0.n_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rho0.n_qubits() });
    }
    if n > options.max_qubits {
        return Err(Error::DimensionTooLarge { n, max: options.max_qubits });
    }
    options.tolerances.validate()?;
    check_grid(t_grid)?;

    let layout = rho0.layout.clone();
    let rhs = |y: &[C], dy: &mut [C]| generator.apply_density_data(&layout, y, dy);
    let mut ode = Dopri5::new(rhs, t_grid[0], rho0.data.clone(), options.tolerances);

    let trace0 = rho0.trace();
    let mut result = DynamicsResult::empty("dense", t_grid);
    let mut sample = rho0.clone();
    let mut min_eig = f64::INFINITY;
    let mut record = |sample: &mut DensityMatrix, result: &mut DynamicsResult| {
        hermitize_data(&sample.layout, &mut sample.data);
        let pop = sample.populations();
        let sz = sigma_z_from_populations(&pop, n);
        result.total_sigma_z.push(sz.iter().sum());
        result.sigma_z.push(sz);
        result.emission_rate.push(generator.emission_rate_density(&sample.layout, &sample.data));
        result.max_trace_drift = result.max_trace_drift.max((sample.trace() - trace0).norm());
        if options.record_correlations {
            result.correlations.push(correlations_from_populations(&pop, n));
        }
        if options.check_positivity {
            min_eig = min_eig.min(sample.min_eigenvalue());
        }
    };

    record(&mut sample, &mut result);
    for &t in &t_grid[1..] {
        while ode.t() < t {
            ode.step(t_grid[t_grid.len() - 1])?;
            hermitize_data(&layout, ode.state_mut());
        }
        ode.interpolate(t, &mut sample.data);
        record(&mut sample, &mut result);
    }
    if options.check_positivity {
        result.min_eigenvalue = Some(min_eig);
    }
    let final_state = DensityMatrix { layout: layout.clone(), data: ode.state().to_vec() };
    Ok((result, final_state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::channels::{Channel, JumpChannels};
    use nalgebra::DMatrix;

    fn single_qubit(beta_factor: f64) -> Generator {
        let channels = JumpChannels {
            n_qubits: 1,
            emission: vec![Channel { rate: 2.0, coefficients: vec![1.0] }],
            absorption: if beta_factor > 0.0 {
                vec![Channel { rate: 2.0 * beta_factor, coefficients: vec![1.0] }]
            } else {
                vec![]
            },
        };
        Generator::new(&DMatrix::zeros(1, 1), &channels).unwrap()
    }

    #[test]
    fn single_qubit_exponential() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let (r, _) =
            evolve_density_matrix(&DensityMatrix::product(&[1.0]), &single_qubit(0.0), &grid, &Default::default())
                .unwrap();
        for (k, &t) in grid.iter().enumerate() {
            assert!((r.total_sigma_z[k] - (2.0 * (-2.0 * t).exp() - 1.0)).abs() < 1e-8);
            assert!((r.emission_rate[k] - 2.0 * (-2.0 * t).exp()).abs() < 1e-8);
        }
        assert!(r.max_trace_drift < 1e-14);
    }

    #[test]
    fn single_qubit_thermal_steady_state() {
        let x: f64 = 1.0;
        let grid = [0.0, 20.0];
        let (r, _) = evolve_density_matrix(
            &DensityMatrix::product(&[1.0]),
            &single_qubit((-x).exp()),
            &grid,
            &Default::default(),
        )
        .unwrap();
        let want = (1.0 - (-x).exp()) / (1.0 + (-x).exp());
        assert!((r.total_sigma_z[1].abs() - want).abs() < 1e-8);
        assert!((want - 0.4621).abs() < 1e-4);
    }

    #[test]
    fn frozen_system_is_bit_stable() {
        let g = Generator::new(&DMatrix::zeros(3, 3), &JumpChannels { n_qubits: 3, ..Default::default() }).unwrap();
        let rho0 = DensityMatrix::product(&[0.2, 0.9, 0.5]);
        let (r, fin) = evolve_density_matrix(&rho0, &g, &[0.0, 0.5, 3.0], &Default::default()).unwrap();
        assert_eq!(fin, rho0);
        assert!(r.sigma_z.iter().all(|s| *s == rho0.sigma_z()));
        assert_eq!(r.emission_rate, vec![0.0; 3]);
    }

    #[test]
    fn dimension_limit() {
        let c = JumpChannels { n_qubits: 3, ..Default::default() };
        let g = Generator::new(&DMatrix::zeros(3, 3), &c).unwrap();
        let opts = DenseOptions { max_qubits: 2, ..Default::default() };
        assert!(matches!(
            evolve_density_matrix(&DensityMatrix::product(&[1.0; 3]), &g, &[0.0, 1.0], &opts),
            Err(Error::DimensionTooLarge { n: 3, max: 2 })
        ));
    }
}
