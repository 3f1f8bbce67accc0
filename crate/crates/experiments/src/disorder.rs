//! Positional disorder along the chain axis and ensemble averaging.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use coopmag_core::couplings::RHO_MIN;
use coopmag_core::dynamics::{trajectory_seed, DynamicsResult};
use coopmag_core::{Error, Result};

pub const MAX_DISORDER_ATTEMPTS: usize = 1000;

/// Keeps realization seeds apart from trajectory seeds derived from the same master seed.
const REALIZATION_DOMAIN: u64 = 0x6469_736f_7264_6572;

pub fn realization_seed(master_seed: u64, realization: usize) -> u64 {
    trajectory_seed(master_seed ^ REALIZATION_DOMAIN, realization as u64)
}

/// Displaces every coordinate by an independent uniform draw on (−aξ/2, aξ/2).
///
/// Configurations with a pair closer than the coupling cutoff are redrawn as a
/// whole. With ξ = 0 the input is returned untouched.
pub fn sample_disordered_positions(base: &[f64], a: f64, xi: f64, seed: u64) -> Result<Vec<f64>> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::InvalidParameter { name: "xi", reason: format!("must be non-negative, got {xi}") });
    }
    if xi == 0.0 {
        return Ok(base.to_vec());
    }
    let half = 0.5 * a * xi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DISORDER_ATTEMPTS {
        let moved: Vec<f64> = base.iter().map(|r| r + rng.random_range(-half..half)).collect();
        let admissible =
            moved.iter().enumerate().all(|(i, x)| moved[i + 1..].iter().all(|y| (x - y).abs() >= RHO_MIN));
        if admissible {
            return Ok(moved);
        }
    }
    Err(Error::DisorderSamplingExhausted { attempts: MAX_DISORDER_ATTEMPTS })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderEnsemble {
    pub mean: DynamicsResult,
    pub realizations: Vec<DynamicsResult>,
    pub positions: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
}

/// Solves every realization (concurrently) and averages in realization order.
pub fn run_disorder_ensemble<F, E>(
    base: &[f64],
    a: f64,
    xi: f64,
    n_realizations: usize,
    master_seed: u64,
    solve: F,
) -> std::result::Result<DisorderEnsemble, E>
where
    F: Fn(&[f64]) -> std::result::Result<DynamicsResult, E> + Sync,
    E: From<Error> + Send,
{
    if n_realizations == 0 {
        return Err(Error::InvalidParameter { name: "n_realizations", reason: "must be at least 1".into() }.into());
    }
    let seeds: Vec<u64> = (0..n_realizations).map(|r| realization_seed(master_seed, r)).collect();
    let positions: Vec<Vec<f64>> =
        seeds.iter().map(|&s| sample_disordered_positions(base, a, xi, s)).collect::<Result<_>>()?;
    let realizations: Vec<DynamicsResult> = positions.par_iter().map(|p| solve(p)).collect::<std::result::Result<_, E>>()?;
    let mean = ensemble_mean(&realizations);
    Ok(DisorderEnsemble { mean, realizations, positions, seeds })
}

/// Running mean m_k = m_{k−1} + (x_k − m_{k−1})/k, which returns identical
/// inputs unchanged bit for bit.
fn running_mean<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    values.enumerate().fold(0.0, |m, (k, x)| m + (x - m) / (k + 1) as f64)
}

fn ensemble_mean(rs: &[DynamicsResult]) -> DynamicsResult {
    let first = &rs[0];
    let nt = first.t_grid.len();
    let nq = first.n_qubits();
    let mean_of = |f: &dyn Fn(&DynamicsResult) -> f64| {
        let xs: Vec<f64> = rs.iter().map(f).collect();
        running_mean(xs.iter())
    };
    let m = rs.len() as f64;
    // the standard error of a mean of independent estimates
    let stderr_of = |f: &dyn Fn(&DynamicsResult) -> Option<f64>| -> Option<f64> {
        rs.iter().map(f).try_fold(0.0, |acc, s| s.map(|s| acc + s * s)).map(|v| v.sqrt() / m)
    };
    let mut out = first.clone();
    out.solver = format!("{} (disorder mean)", first.solver);
    out.total_sigma_z = (0..nt).map(|k| mean_of(&|r| r.total_sigma_z[k])).collect();
    out.emission_rate = (0..nt).map(|k| mean_of(&|r| r.emission_rate[k])).collect();
    out.sigma_z = (0..nt).map(|k| (0..nq).map(|q| mean_of(&|r| r.sigma_z[k][q])).collect()).collect();
    out.correlations = (0..first.correlations.len())
        .map(|k| first.correlations[k].map_with_location(|i, j, _| mean_of(&|r| r.correlations[k][(i, j)])))
        .collect();
    out.total_sigma_z_stderr = first
        .total_sigma_z_stderr
        .as_ref()
        .map(|_| (0..nt).map(|k| stderr_of(&|r| r.total_sigma_z_stderr.as_ref().map(|s| s[k])).unwrap()).collect());
    out.emission_rate_stderr = first
        .emission_rate_stderr
        .as_ref()
        .map(|_| (0..nt).map(|k| stderr_of(&|r| r.emission_rate_stderr.as_ref().map(|s| s[k])).unwrap()).collect());
    out.sigma_z_stderr = first.sigma_z_stderr.as_ref().map(|_| {
        (0..nt)
            .map(|k| (0..nq).map(|q| stderr_of(&|r| r.sigma_z_stderr.as_ref().map(|s| s[k][q])).unwrap()).collect())
            .collect()
    });
    out.trajectory_count = first.trajectory_count.map(|c| c * rs.len());
    out.max_trace_drift = rs.iter().map(|r| r.max_trace_drift).fold(0.0, f64::max);
    out.min_eigenvalue = rs.iter().map(|r| r.min_eigenvalue).try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, a: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * a).collect()
    }

    #[test]
    fn zero_strength_leaves_positions_alone() {
        let base = chain(7, 0.5);
        assert_eq!(sample_disordered_positions(&base, 0.5, 0.0, 3).unwrap(), base);
    }

    #[test]
    fn deterministic_in_seed() {
        let base = chain(7, 0.5);
        let a = sample_disordered_positions(&base, 0.5, 2.0, 11).unwrap();
        assert_eq!(a, sample_disordered_positions(&base, 0.5, 2.0, 11).unwrap());
        assert_ne!(a, sample_disordered_positions(&base, 0.5, 2.0, 12).unwrap());
        assert_ne!(realization_seed(1, 0), realization_seed(1, 1));
    }

    #[test]
    fn displacements_cover_the_uniform_window() {
        let (a, xi) = (0.5, 10.0);
        let base = chain(7, a);
        let (mut lo, mut hi, mut sum, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0.0);
        for s in 0..10_000u64 {
            let moved = sample_disordered_positions(&base, a, xi, realization_seed(99, s as usize)).unwrap();
            for (m, b) in moved.iter().zip(&base) {
                let d = (m - b) / a;
                lo = lo.min(d);
                hi = hi.max(d);
                sum += d * d;
                count += 1.0;
            }
        }
        assert!((-5.0..-4.99).contains(&lo), "{lo}");
        assert!(hi < 5.0 && hi > 4.99, "{hi}");
        // variance of U(−5, 5) is 100/12
        assert!((sum / count - 100.0 / 12.0).abs() < 0.1);
    }

    #[test]
    fn negative_strength_is_rejected() {
        assert!(sample_disordered_positions(&[0.0, 1.0], 1.0, -0.1, 0).is_err());
    }

    #[test]
    fn crowded_windows_exhaust_the_retry_budget() {
        // 40 qubits in a window of width 0.01 cannot keep all pairs 1e-3 apart
        let base = vec![0.0; 40];
        assert!(matches!(
            sample_disordered_positions(&base, 0.01, 1.0, 0),
            Err(Error::DisorderSamplingExhausted { attempts: MAX_DISORDER_ATTEMPTS })
        ));
    }
}
