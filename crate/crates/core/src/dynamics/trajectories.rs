//! Quantum-jump unraveling.
//!
//! Each trajectory evolves an unnormalized state under −iK until its squared
//! norm falls to a uniform threshold, locates the crossing by bisection on the
//! dense output, applies a jump chosen in proportion to rate_m‖L_mψ‖², and
//! restarts. Trajectories run in fixed-size batches in parallel; statistics
//! are reduced in trajectory order so the result does not depend on scheduling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dopri::{Dopri5, Tolerances};
use super::generator::{apply_collective, Generator};
use super::state::{correlations_from_populations, sigma_z_from_populations};
use super::{check_grid, DynamicsResult};
use crate::error::{Error, Result};

type C = Complex64;

pub const DEFAULT_TRAJECTORY_MAX_QUBITS: usize = 14;
/// Jump times are located to this absolute accuracy.
pub const JUMP_TIME_TOLERANCE: f64 = 1e-6;
const BATCH: usize = 256;

/// Initial condition of a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryStart {
    Pure(Vec<C>),
    /// Independent qubits, each excited with the given probability; a basis
    /// state is drawn per trajectory.
    ProductMixture(Vec<f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOptions {
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub tolerances: Tolerances,
    pub max_qubits: usize,
    pub record_correlations: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            n_trajectories: 2000,
            master_seed: 0,
            tolerances: Tolerances::default(),
            max_qubits: DEFAULT_TRAJECTORY_MAX_QUBITS,
            record_correlations: false,
        }
    }
}

/// SplitMix64 finalizer over (master seed, trajectory index).
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Observables of one trajectory, flattened per grid point as
/// [σz_0..σz_{N−1}, R, c_αβ (upper triangle, if recorded)].
struct Record(Vec<f64>);

struct Layout {
    n: usize,
    per_point: usize,
    correlations: bool,
}

impl Layout {
    fn new(n: usize, correlations: bool) -> Self {
        let pairs = if correlations { n * n.saturating_sub(1) / 2 } else { 0 };
        Layout { n, per_point: n + 1 + pairs, correlations }
    }
}

pub fn run_trajectories(
    start: &TrajectoryStart,
    generator: &Generator,
    t_grid: &[f64],
    options: &TrajectoryOptions,
) -> Result<DynamicsResult> {
    let n = generator.n_qubits();
    let dim = generator.dim();
    if n > options.max_qubits {
        return Err(Error::DimensionTooLarge { n, max: options.max_qubits });
    }
    if options.n_trajectories == 0 {
        return Err(Error::NonPositiveParameter { name: "n_trajectories", value: 0.0 });
    }
    options.tolerances.validate()?;
    check_grid(t_grid)?;
    match start {
        TrajectoryStart::Pure(psi) => {
            if psi.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
            }
            let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter {
                    name: "initial_state",
                    reason: format!("pure state has squared norm {norm}"),
                });
            }
        }
        TrajectoryStart::ProductMixture(p) => {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::InvalidParameter {
                    name: "p_excited",
                    reason: "probabilities must lie in [0, 1]".into(),
                });
            }
        }
    }

    let layout = Layout::new(n, options.record_correlations);
    let width = layout.per_point * t_grid.len();
    let mut sum = vec![0.0; width];
    let mut sum_sq = vec![0.0; width];
    let mut totals = vec![(0.0, 0.0); t_grid.len()];

    let mut first = 0;
    while first < options.n_trajectories {
        let last = (first + BATCH).min(options.n_trajectories);
        let records: Vec<Result<Record>> = (first..last)
            .into_par_iter()
            .map(|idx| {
                let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(options.master_seed, idx as u64));
                single_trajectory(start, generator, t_grid, &options.tolerances, &layout, &mut rng)
            })
            .collect();
        for record in records {
            let Record(values) = record?;
            for (k, (s, q)) in sum.iter_mut().zip(&mut sum_sq).enumerate() {
                *s += values[k];
                *q += values[k] * values[k];
            }
            for (p, tot) in totals.iter_mut().enumerate() {
                let z: f64 = values[p * layout.per_point..p * layout.per_point + n].iter().sum();
                tot.0 += z;
                tot.1 += z * z;
            }
        }
        first = last;
    }

    let m = options.n_trajectories as f64;
    let stats = |s: f64, q: f64| {
        let mean = s / m;
        let var = if m > 1.0 { ((q - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
        (mean, (var / m).sqrt())
    };

    let mut result = DynamicsResult::empty("trajectories", t_grid);
    let (mut sz_err, mut tot_err, mut rate_err) = (Vec::new(), Vec::new(), Vec::new());
    for (p, tot) in totals.iter().enumerate() {
        let base = p * layout.per_point;
        let (sz, err): (Vec<f64>, Vec<f64>) = (0..n).map(|a| stats(sum[base + a], sum_sq[base + a])).unzip();
        result.sigma_z.push(sz);
        sz_err.push(err);
        let (t_mean, t_err) = stats(tot.0, tot.1);
        result.total_sigma_z.push(t_mean);
        tot_err.push(t_err);
        let (r_mean, r_err) = stats(sum[base + n], sum_sq[base + n]);
        result.emission_rate.push(r_mean);
        rate_err.push(r_err);
        if layout.correlations {
            let mut c = DMatrix::zeros(n, n);
            let mut k = base + n + 1;
            for a in 0..n {
                for b in a + 1..n {
                    c[(a, b)] = sum[k] / m;
                    c[(b, a)] = c[(a, b)];
                    k += 1;
                }
            }
            result.correlations.push(c);
        }
    }
    result.sigma_z_stderr = Some(sz_err);
    result.total_sigma_z_stderr = Some(tot_err);
    result.emission_rate_stderr = Some(rate_err);
    result.trajectory_count = Some(options.n_trajectories);
    Ok(result)
}

fn norm_sqr(psi: &[C]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum()
}

fn initial_state(start: &TrajectoryStart, dim: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
    match start {
        TrajectoryStart::Pure(psi) => psi.clone(),
        TrajectoryStart::ProductMixture(p) => {
            let basis = p.iter().enumerate().fold(0usize, |acc, (a, &pa)| {
                if rng.random::<f64>() < pa {
                    acc | 1 << a
                } else {
                    acc
                }
            });
            let mut psi = vec![C::new(0.0, 0.0); dim];
            psi[basis] = C::new(1.0, 0.0);
            psi
        }
    }
}

fn observe(psi: &[C], generator: &Generator, layout: &Layout, scratch: &mut [C], out: &mut Vec<f64>) {
    let norm = norm_sqr(psi);
    let pop: Vec<f64> = psi.iter().map(|c| c.norm_sqr() / norm).collect();
    out.extend(sigma_z_from_populations(&pop, layout.n));
    out.push(generator.emission_rate_pure(psi, scratch));
    if layout.correlations {
        let c = correlations_from_populations(&pop, layout.n);
        for a in 0..layout.n {
            for b in a + 1..layout.n {
                out.push(c[(a, b)]);
            }
        }
    }
}

fn single_trajectory(
    start: &TrajectoryStart,
    generator: &Generator,
    t_grid: &[f64],
    tol: &Tolerances,
    layout: &Layout,
    rng: &mut ChaCha8Rng,
) -> Result<Record> {
    let dim = generator.dim();
    let psi0 = initial_state(start, dim, rng);
    let mut scratch = vec![C::new(0.0, 0.0); dim];
    let mut probe = vec![C::new(0.0, 0.0); dim];
    let mut values = Vec::with_capacity(layout.per_point * t_grid.len());
    observe(&psi0, generator, layout, &mut scratch, &mut values);

    let t_end = t_grid[t_grid.len() - 1];
    let mut ode = Dopri5::new(|y: &[C], dy: &mut [C]| generator.drift(y, dy), t_grid[0], psi0, *tol);
    let mut threshold: f64 = rng.random();
    let mut next = 1;
    while next < t_grid.len() {
        ode.step(t_end)?;
        let jump_at = if norm_sqr(ode.state()) <= threshold {
            // the norm decreases monotonically along the drift
            let (mut lo, mut hi) = (ode.t_prev(), ode.t());
            while hi - lo > JUMP_TIME_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                ode.interpolate(mid, &mut probe);
                if norm_sqr(&probe) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(hi)
        } else {
            None
        };
        let reached = jump_at.unwrap_or(ode.t());
        while next < t_grid.len() && t_grid[next] <= reached {
            ode.interpolate(t_grid[next], &mut probe);
            observe(&probe, generator, layout, &mut scratch, &mut values);
            next += 1;
        }
        if let Some(t_jump) = jump_at {
            ode.interpolate(t_jump, &mut probe);
            jump(generator, &mut probe, &mut scratch, rng);
            ode.reset(t_jump, Some(&probe));
            threshold = rng.random();
        }
    }
    Ok(Record(values))
}

/// Replaces `psi` by the normalized post-jump state.
fn jump(generator: &Generator, psi: &mut [C], scratch: &mut [C], rng: &mut ChaCha8Rng) {
    let (emit, absorb) = generator.channel_weights(psi, scratch);
    let total: f64 = emit.iter().chain(&absorb).sum();
    let channels = generator.channels();
    if total <= 0.0 {
        // no decay channel is populated; the state only needs renormalizing
        let norm = norm_sqr(psi).sqrt();
        psi.iter_mut().for_each(|c| *c /= norm);
        return;
    }
    let mut target = rng.random::<f64>() * total;
    let mut chosen = None;
    for (m, w) in emit.iter().chain(&absorb).enumerate() {
        if *w > 0.0 {
            chosen = Some(m);
        }
        if target < *w {
            break;
        }
        target -= w;
    }
    let m = chosen.expect("positive total weight");
    let (channel, raise) = if m < emit.len() {
        (&channels.emission[m], false)
    } else {
        (&channels.absorption[m - emit.len()], true)
    };
    apply_collective(channel, raise, psi, scratch);
    let norm = norm_sqr(scratch).sqrt();
    for (p, s) in psi.iter_mut().zip(scratch.iter()) {
        *p = *s / norm;
    }
}

/// Unnormalized conditional (no-jump) evolution ψ(t) = e^{−iKt}ψ₀ sampled on
/// `times`, starting at `times[0]`.
pub fn no_jump_evolution(generator: &Generator, psi0: &[C], times: &[f64], tol: Tolerances) -> Result<Vec<Vec<C>>> {
    check_grid(times)?;
    if psi0.len() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), got: psi0.len() });
    }
    let mut ode = Dopri5::new(|y: &[C], dy: &mut [C]| generator.drift(y, dy), times[0], psi0.to_vec(), tol);
    let mut out = vec![psi0.to_vec()];
    for &t in &times[1..] {
        while ode.t() < t {
            ode.step(times[times.len() - 1])?;
        }
        let mut v = vec![C::new(0.0, 0.0); psi0.len()];
        ode.interpolate(t, &mut v);
        out.push(v);
    }
    Ok(out)
}
