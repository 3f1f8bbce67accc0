//! Single-excitation sector: the non-Hermitian chain Hamiltonian, its
//! eigenmodes, and the band structure of the infinite chain.
//!
//! Band-structure wavenumbers are given as kλ; the first Brillouin zone is
//! |kλ| ≤ π/(a/λ).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{coupling_gamma, coupling_j, CouplingMatrices, JMode};
use crate::error::{Error, Result};
use crate::params::DimensionlessConfig;
use crate::specfun::QuadratureSettings;

/// H = diag(ω) + J − iΓ restricted to one excitation. Complex symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub matrix: DMatrix<Complex64>,
    /// Real diagonal offset; 0 in the frame rotating at ω_qi.
    pub omega_offset: f64,
}

pub fn effective_hamiltonian(c: &CouplingMatrices) -> EffectiveHamiltonian {
    effective_hamiltonian_with_offset(c, 0.0)
}

pub fn effective_hamiltonian_with_offset(c: &CouplingMatrices, omega_offset: f64) -> EffectiveHamiltonian {
    let n = c.n_qubits();
    let matrix = DMatrix::from_fn(n, n, |a, b| {
        let re = if a == b { omega_offset } else { c.j[(a, b)] };
        Complex64::new(re, -c.gamma[(a, b)])
    });
    EffectiveHamiltonian { matrix, omega_offset }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationSpectrum {
    /// E_m = shift − i·Γ_m, ascending in Γ_m.
    pub eigenvalues: Vec<Complex64>,
    /// Column m is the unit-norm right eigenvector of E_m.
    pub right_eigenvectors: DMatrix<Complex64>,
    /// max_m ‖Hv_m − E_m v_m‖ / ‖H‖_F
    pub max_relative_residual: f64,
}

impl SingleExcitationSpectrum {
    pub fn decay_rates(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| -e.im).collect()
    }

    pub fn min_decay_rate(&self) -> f64 {
        self.eigenvalues.first().map_or(f64::NAN, |e| -e.im)
    }
}

const RESIDUAL_BOUND: f64 = 1e-10;

/// Diagonalizes H by complex Schur decomposition, triangular back-substitution
/// and one step of inverse iteration per eigenvector.
pub fn single_excitation_modes(h: &EffectiveHamiltonian) -> Result<SingleExcitationSpectrum> {
    let m = &h.matrix;
    let n = m.nrows();
    let norm = m.norm();
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    if norm == 0.0 {
        return Ok(SingleExcitationSpectrum {
            eigenvalues: vec![Complex64::new(0.0, 0.0); n],
            right_eigenvectors: DMatrix::identity(n, n),
            max_relative_residual: 0.0,
        });
    }

    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::EigensolverFailure(format!("Schur iteration did not converge (n = {n})")))?;
    let (q, t) = schur.unpack();
    let small = f64::EPSILON * norm;

    let mut modes: Vec<(Complex64, DVector<Complex64>)> = (0..n)
        .map(|k| {
            let e = t[(k, k)];
            let mut y = DVector::<Complex64>::zeros(n);
            y[k] = Complex64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = Complex64::new(0.0, 0.0);
                for j in i + 1..=k {
                    s += t[(i, j)] * y[j];
                }
                let mut denom = t[(i, i)] - e;
                if denom.norm() < small {
                    denom = Complex64::new(small, 0.0);
                }
                y[i] = -s / denom;
            }
            let v = refine(m, e, &q * y, small);
            (e, v)
        })
        .collect();

    modes.sort_by(|(a, _), (b, _)| (-a.im).total_cmp(&-b.im).then(a.re.total_cmp(&b.re)));

    let mut vectors = DMatrix::zeros(n, n);
    let mut worst = 0.0_f64;
    for (col, (e, v)) in modes.iter().enumerate() {
        let r = (m * v - v * *e).norm() / norm;
        worst = worst.max(r);
        vectors.set_column(col, v);
    }
    if worst > RESIDUAL_BOUND {
        return Err(Error::EigensolverFailure(format!("eigenpair residual {worst:e} exceeds {RESIDUAL_BOUND:e}")));
    }
    Ok(SingleExcitationSpectrum {
        eigenvalues: modes.into_iter().map(|(e, _)| e).collect(),
        right_eigenvectors: vectors,
        max_relative_residual: worst,
    })
}

/// One inverse-iteration step, then unit norm with the largest component real
/// and positive.
fn refine(m: &DMatrix<Complex64>, e: Complex64, v: DVector<Complex64>, small: f64) -> DVector<Complex64> {
    let n = m.nrows();
    let shifted = m - DMatrix::from_diagonal_element(n, n, e + Complex64::new(small, 0.0));
    let candidate = shifted.lu().solve(&v).filter(|x| x.iter().all(|c| c.is_finite()) && x.norm() > 0.0);
    let mut x = candidate.unwrap_or(v);
    let pivot = x.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if pivot.norm() > 0.0 {
        x *= pivot.conj() / pivot.norm();
    }
    x.normalize()
}

/// Eigenmodes of a uniform chain of `n` qubits.
pub fn chain_modes(n: usize, a_over_lambda: f64, cfg: &DimensionlessConfig) -> Result<SingleExcitationSpectrum> {
    let cfg = cfg.clone().with_uniform_chain(n, a_over_lambda);
    let options = crate::couplings::CouplingOptions { with_jz: false, ..Default::default() };
    let c = crate::couplings::build_coupling_matrices(&cfg.positions, &cfg, &options)?;
    single_excitation_modes(&effective_hamiltonian(&c))
}

// ---------------------------------------------------------------------------
// infinite chain

/// Band structure on a set of wavenumbers. Rates are in units of ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub method: String,
    pub a_over_lambda: f64,
    pub k_lambda: Vec<f64>,
    /// Absent for methods that only provide the decay rates.
    pub j_k: Option<Vec<f64>>,
    pub gamma_k: Vec<f64>,
    /// Γ₀/ν used for normalization.
    pub gamma0: f64,
    pub n_max: Option<usize>,
    /// |Γ(n_max·a)|/Γ₀, a convergence indicator for lattice sums.
    pub last_term: Option<f64>,
}

/// A way of evaluating the band structure of the infinite chain.
pub trait BandMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, k_lambda: &[f64], a_over_lambda: f64, cfg: &DimensionlessConfig) -> Result<BandStructure>;
}

/// Real-space lattice sums over |n| ≤ n_max, Kahan-compensated in fixed order.
///
/// The raw sums converge only conditionally (terms fall off as n^{−1/2}). With
/// `taper` the terms beyond n_max/2 are rolled off by a C∞ window, which turns
/// the truncation error from O(n_max^{−1/2}) into faster than any power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSum {
    pub n_max: usize,
    pub taper: bool,
}

impl Default for TruncatedSum {
    fn default() -> Self {
        TruncatedSum { n_max: 100_000, taper: true }
    }
}

/// Reciprocal-lattice form of the Γ_k sum; provides Γ_k only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoissonSum;

/// Builds a band method by name ("truncated-sum" or "poisson").
pub fn band_method(name: &str, n_max: usize, taper: bool) -> Result<Box<dyn BandMethod>> {
    match name {
        "truncated-sum" => Ok(Box::new(TruncatedSum { n_max, taper })),
        "poisson" => Ok(Box::new(PoissonSum)),
        _ => Err(Error::UnknownName { what: "band method", name: name.into(), available: BAND_METHODS.join(", ") }),
    }
}

pub const BAND_METHODS: [&str; 2] = ["truncated-sum", "poisson"];

#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// 1 up to n_max/2, then a smooth step down to 0 at n_max.
fn taper_weight(n: usize, n_max: usize) -> f64 {
    let half = 0.5 * n_max as f64;
    let t = (n as f64 - half) / half;
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let rise = (-1.0 / t).exp();
    let fall = (-1.0 / (1.0 - t)).exp();
    fall / (rise + fall)
}

impl TruncatedSum {
    /// (J_k, Γ_k) at one wavenumber.
    pub fn at(&self, k_lambda: f64, a_over_lambda: f64, cfg: &DimensionlessConfig) -> Result<(f64, f64)> {
        let b = self.evaluate(&[k_lambda], a_over_lambda, cfg)?;
        Ok((b.j_k.expect("lattice sums provide J_k")[0], b.gamma_k[0]))
    }
}

impl BandMethod for TruncatedSum {
    fn name(&self) -> &'static str {
        "truncated-sum"
    }

    fn evaluate(&self, k_lambda: &[f64], a_over_lambda: f64, cfg: &DimensionlessConfig) -> Result<BandStructure> {
        if self.n_max < 1 {
            return Err(Error::InvalidParameter { name: "n_max", reason: "must be at least 1".into() });
        }
        if !(a_over_lambda > 0.0) {
            return Err(Error::NonPositiveParameter { name: "a_over_lambda", value: a_over_lambda });
        }
        let settings = QuadratureSettings::default();
        let terms: Vec<(f64, f64)> = (1..=self.n_max)
            .map(|n| {
                let rho = n as f64 * a_over_lambda;
                let w = if self.taper { taper_weight(n, self.n_max) } else { 1.0 };
                Ok((w * coupling_j(rho, cfg, JMode::Asymptotic, &settings)?, w * coupling_gamma(rho, cfg)))
            })
            .collect::<Result<_>>()?;
        let gamma0 = cfg.gamma0();

        let (j_k, gamma_k): (Vec<f64>, Vec<f64>) = k_lambda
            .par_iter()
            .map(|&k| {
                let phase = k * a_over_lambda;
                let (mut j, mut g) = (Kahan::default(), Kahan::default());
                for (i, &(tj, tg)) in terms.iter().enumerate() {
                    let c = ((i + 1) as f64 * phase).cos();
                    j.add(tj * c);
                    g.add(tg * c);
                }
                (2.0 * j.sum, gamma0 + 2.0 * g.sum)
            })
            .unzip();

        let last = coupling_gamma(self.n_max as f64 * a_over_lambda, cfg).abs() / gamma0;
        Ok(BandStructure {
            method: self.name().into(),
            a_over_lambda,
            k_lambda: k_lambda.to_vec(),
            j_k: Some(j_k),
            gamma_k,
            gamma0,
            n_max: Some(self.n_max),
            last_term: Some(last),
        })
    }
}

/// Distance from the square-root singularity below which the closed form is refused.
pub const SINGULAR_MARGIN: f64 = 1e-9;

/// Γ_k/ν = Γ₀(λ/a)·Σ_m 2/√(1 − q_m²), q_m = kλ + 2πm/(a/λ), over |q_m| < 1.
pub fn band_structure_poisson(k_lambda: f64, a_over_lambda: f64, cfg: &DimensionlessConfig) -> Result<f64> {
    if !(a_over_lambda > 0.0) {
        return Err(Error::NonPositiveParameter { name: "a_over_lambda", value: a_over_lambda });
    }
    let g = 2.0 * PI / a_over_lambda;
    let lo = ((-1.0 - k_lambda) / g).ceil() as i64;
    let hi = ((1.0 - k_lambda) / g).floor() as i64;
    let mut sum = 0.0;
    for m in lo - 1..=hi + 1 {
        let q = k_lambda + m as f64 * g;
        let gap = 1.0 - q.abs();
        if gap.abs() < SINGULAR_MARGIN {
            return Err(Error::SingularPoint { k_lambda });
        }
        if gap > 0.0 {
            sum += 2.0 / (1.0 - q * q).sqrt();
        }
    }
    Ok(cfg.gamma0() * sum / a_over_lambda)
}

/// Tapered truncated-sum Γ_k at one wavenumber.
pub fn band_structure_sum(k_lambda: f64, a_over_lambda: f64, cfg: &DimensionlessConfig, n_max: usize) -> Result<(f64, f64)> {
    TruncatedSum { n_max, taper: true }.at(k_lambda, a_over_lambda, cfg)
}

impl BandMethod for PoissonSum {
    fn name(&self) -> &'static str {
        "poisson"
    }

    fn evaluate(&self, k_lambda: &[f64], a_over_lambda: f64, cfg: &DimensionlessConfig) -> Result<BandStructure> {
        let gamma_k = k_lambda
            .iter()
            .map(|&k| band_structure_poisson(k, a_over_lambda, cfg))
            .collect::<Result<_>>()?;
        Ok(BandStructure {
            method: self.name().into(),
            a_over_lambda,
            k_lambda: k_lambda.to_vec(),
            j_k: None,
            gamma_k,
            gamma0: cfg.gamma0(),
            n_max: None,
            last_term: None,
        })
    }
}

/// `m` equispaced wavenumbers covering the first zone, kλ ∈ (−π/(a/λ), π/(a/λ)].
pub fn zone_grid(m: usize, a_over_lambda: f64) -> Vec<f64> {
    let edge = PI / a_over_lambda;
    (1..=m).map(|i| -edge + 2.0 * edge * i as f64 / m as f64).collect()
}

/// (a/2π)∫Γ_k dk over the zone by the trapezoid rule on [`zone_grid`].
///
/// For a lattice sum truncated at n_max this is exact once m > 2·n_max.
pub fn zone_average(band: &BandStructure) -> f64 {
    band.gamma_k.iter().sum::<f64>() / band.gamma_k.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{build_coupling_matrices, CouplingOptions};

    fn cfg() -> DimensionlessConfig {
        DimensionlessConfig::from_ratios(3.484e-3, 1.17, 1.17, 0.375, f64::INFINITY)
    }

    fn matrices(positions: &[f64]) -> CouplingMatrices {
        let c = cfg();
        build_coupling_matrices(positions, &c, &CouplingOptions { with_jz: false, ..Default::default() }).unwrap()
    }

    #[test]
    fn hamiltonian_layout() {
        let c = matrices(&[0.0]);
        let h = effective_hamiltonian(&c);
        assert_eq!(h.matrix[(0, 0)], Complex64::new(0.0, -c.gamma0));

        let c = matrices(&[0.0, 0.8]);
        let h = effective_hamiltonian(&c).matrix;
        assert_eq!(h[(0, 1)], Complex64::new(c.j[(0, 1)], -c.gamma[(0, 1)]));
        assert_eq!(h[(0, 1)], h[(1, 0)]);
        assert_eq!(h[(1, 1)], Complex64::new(0.0, -c.gamma0));

        let shifted = effective_hamiltonian_with_offset(&c, 5.0).matrix;
        assert_eq!(shifted[(0, 0)].re, 5.0);
    }

    #[test]
    fn two_qubit_modes() {
        let c = matrices(&[0.0, 0.8]);
        let s = single_excitation_modes(&effective_hamiltonian(&c)).unwrap();
        let (j, g, g0) = (c.j[(0, 1)], c.gamma[(0, 1)], c.gamma0);
        // Γ₁₂ > 0 here: the symmetric state is the superradiant one
        assert!(g > 0.0);
        let sub = Complex64::new(-j, -(g0 - g));
        let sup = Complex64::new(j, -(g0 + g));
        assert!((s.eigenvalues[0] - sub).norm() < 1e-14 * g0.max(j.abs()) * 10.0);
        assert!((s.eigenvalues[1] - sup).norm() < 1e-14 * g0.max(j.abs()) * 10.0);
        let v = s.right_eigenvectors.column(1);
        assert!((v[0] - v[1]).norm() < 1e-12);
    }

    #[test]
    fn trace_identity_and_residuals() {
        let c0 = cfg();
        for (n, a) in [(5, 0.3), (17, 1.1), (40, 0.1), (40, 2.9)] {
            let s = chain_modes(n, a, &c0).unwrap();
            let total: f64 = s.decay_rates().iter().sum();
            let g0 = c0.gamma0();
            assert!((total - n as f64 * g0).abs() <= 1e-10 * n as f64 * g0, "n={n} a={a}");
            assert!(s.decay_rates().iter().all(|&r| r >= -1e-12 * g0));
            assert!(s.max_relative_residual <= 1e-10);
            let rates = s.decay_rates();
            assert!(rates.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn left_and_right_eigenvectors_coincide() {
        // disordered positions
        let mut pos = vec![0.0];
        let mut state = 0x9e37_79b9_7f4a_7c15_u64;
        for _ in 1..40 {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            let step = 0.05 + 0.6 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            pos.push(pos.last().unwrap() + step);
        }
        let c = matrices(&pos);
        let h = effective_hamiltonian(&c);
        assert_eq!(h.matrix, h.matrix.transpose());
        let s = single_excitation_modes(&h).unwrap();
        let norm = h.matrix.norm();
        for (m, e) in s.eigenvalues.iter().enumerate() {
            let v = s.right_eigenvectors.column(m);
            // vᵀH = E vᵀ
            let left = (v.transpose() * &h.matrix - v.transpose() * *e).norm();
            assert!(left <= 1e-10 * norm);
        }
        // biorthogonality under the unconjugated product
        let gram = s.right_eigenvectors.transpose() * &s.right_eigenvectors;
        for a in 0..pos.len() {
            for b in 0..pos.len() {
                if a != b {
                    assert!(gram[(a, b)].norm() < 1e-8 * (gram[(a, a)].norm() * gram[(b, b)].norm()).sqrt().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn poisson_band_windows() {
        let c = cfg();
        assert_eq!(band_structure_poisson(0.3, 4.0, &c).unwrap(), band_structure_poisson(-0.3, 4.0, &c).unwrap());
        // a/λ > π: the images overlap and every k radiates
        for k in zone_grid(101, 4.0) {
            if (k.abs() - 1.0).abs() > 1e-3 {
                assert!(band_structure_poisson(k, 4.0, &c).unwrap() > 0.0);
            }
        }
        // a/λ < π: 1 < |kλ| < 2π/(a/λ) − 1 has no image inside the light cone
        assert_eq!(band_structure_poisson(1.5, 1.0, &c).unwrap(), 0.0);
        assert_eq!(band_structure_poisson(-3.0, 1.0, &c).unwrap(), 0.0);
        assert!(band_structure_poisson(0.5, 1.0, &c).unwrap() > 0.0);
        assert!(matches!(band_structure_poisson(1.0, 0.5, &c), Err(Error::SingularPoint { .. })));
        assert!(band_structure_poisson(0.0, 0.1, &c).unwrap() / c.gamma0() > 1.0);
    }

    #[test]
    fn lattice_sum_agrees_with_poisson() {
        let c = cfg();
        let sum = TruncatedSum { n_max: 20_000, taper: true };
        for &a in &[0.1, 1.0] {
            let ks: Vec<f64> = [0.0, 0.37, -0.62, 0.81].to_vec();
            let b = sum.evaluate(&ks, a, &c).unwrap();
            for (i, &k) in ks.iter().enumerate() {
                let p = band_structure_poisson(k, a, &c).unwrap();
                assert!((b.gamma_k[i] - p).abs() <= 1e-6 * p.abs(), "a={a} k={k}: {} vs {p}", b.gamma_k[i]);
            }
        }
    }

    #[test]
    fn band_evenness_and_zone_average() {
        let c = cfg();
        let sum = TruncatedSum { n_max: 500, taper: true };
        let a = 0.7;
        let ks = [0.2, 1.7, 3.1];
        let neg: Vec<f64> = ks.iter().map(|k| -k).collect();
        let p = sum.evaluate(&ks, a, &c).unwrap();
        let m = sum.evaluate(&neg, a, &c).unwrap();
        assert_eq!(p.gamma_k, m.gamma_k);
        assert_eq!(p.j_k, m.j_k);

        let grid = zone_grid(2 * sum.n_max + 1, a);
        let b = sum.evaluate(&grid, a, &c).unwrap();
        assert!((zone_average(&b) / c.gamma0() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taper_is_smooth_step() {
        assert_eq!(taper_weight(10, 100), 1.0);
        assert_eq!(taper_weight(50, 100), 1.0);
        assert_eq!(taper_weight(100, 100), 0.0);
        assert!((taper_weight(75, 100) - 0.5).abs() < 1e-15);
        let w: Vec<f64> = (50..=100).map(|n| taper_weight(n, 100)).collect();
        assert!(w.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn registry() {
        for name in BAND_METHODS {
            assert_eq!(band_method(name, 10, true).unwrap().name(), name);
        }
        assert!(band_method("ewald", 10, true).is_err());
    }
}
