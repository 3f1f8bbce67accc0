//! Pairwise qubit couplings mediated by the film, in units of ν.
//!
//! Distances are in units of λ throughout. The coherent flip-flop coupling J
//! comes in two flavours: the full kernel (principal-value integral plus the
//! counter-rotating λ' term) and its far-field Bessel-Y₀ form. Dissipative
//! rates are closed-form and carry the thermal factors.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DimensionlessConfig;
use crate::specfun::{bessel_j0, bessel_y0, pv_kernel, regular_kernel, QuadratureSettings};

/// Pairs closer than this (in units of λ) are rejected.
pub const RHO_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JMode {
    Full,
    #[default]
    Asymptotic,
}

impl JMode {
    pub const ALL: [JMode; 2] = [JMode::Full, JMode::Asymptotic];

    pub fn name(self) -> &'static str {
        match self {
            JMode::Full => "full",
            JMode::Asymptotic => "asymptotic",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name).ok_or_else(|| Error::UnknownName {
            what: "coupling mode",
            name: name.into(),
            available: Self::ALL.map(|m| m.name()).join(", "),
        })
    }
}

/// J(ρ)/ν.
pub fn coupling_j(rho: f64, cfg: &DimensionlessConfig, mode: JMode, settings: &QuadratureSettings) -> Result<f64> {
    let rho = rho.abs();
    match mode {
        JMode::Asymptotic => {
            if rho == 0.0 {
                return Err(Error::DomainError {
                    function: "coupling_j",
                    reason: "the asymptotic kernel diverges at zero separation".into(),
                });
            }
            Ok(FRAC_PI_4 * cfg.detuning_ratio * bessel_y0(rho)?)
        }
        JMode::Full => {
            let resonant = pv_kernel(rho, 2.0 * cfg.d_over_lambda, settings)?;
            let scale = cfg.lambda_over_lambda_prime();
            let counter = regular_kernel(rho * scale, 2.0 * cfg.d_over_lambda_prime, settings)?;
            Ok(-0.5 * (cfg.detuning_ratio * resonant + cfg.sum_ratio * counter))
        }
    }
}

/// Ising coupling J^z(ρ)/ν. Reported only; the dynamics never uses it.
pub fn coupling_jz(rho: f64, cfg: &DimensionlessConfig, settings: &QuadratureSettings) -> Result<f64> {
    let x = rho.abs() * cfg.lambda_over_lambda_exc();
    Ok(-cfg.gap_ratio * regular_kernel(x, 2.0 * cfg.d_over_lambda_exc, settings)?)
}

/// Emission rate Γ(ρ)/ν, including the stimulated factor n_B + 1.
pub fn coupling_gamma(rho: f64, cfg: &DimensionlessConfig) -> f64 {
    cfg.gamma0() * bessel_j0(rho)
}

/// Absorption rate Γ̃(ρ)/ν = e^{−βℏω}Γ(ρ)/ν.
pub fn coupling_gamma_tilde(rho: f64, cfg: &DimensionlessConfig) -> f64 {
    cfg.boltzmann_factor() * coupling_gamma(rho, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingOptions {
    pub j_mode: JMode,
    /// Skip the J^z quadratures (the matrix is then left at zero).
    pub with_jz: bool,
    pub quadrature: QuadratureSettings,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions { j_mode: JMode::Asymptotic, with_jz: true, quadrature: QuadratureSettings::default() }
    }
}

/// Coupling matrices of one geometry, all in units of ν.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrices {
    pub j: DMatrix<f64>,
    pub jz: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub gamma_tilde: DMatrix<f64>,
    /// Magnitude of the most negative eigenvalue of Γ removed by clipping (0 if none).
    pub psd_clip_applied: f64,
    /// Single-qubit rate Γ₀/ν at this temperature.
    pub gamma0: f64,
    /// e^{−βℏω_qi}
    pub boltzmann_factor: f64,
}

impl CouplingMatrices {
    pub fn n_qubits(&self) -> usize {
        self.j.nrows()
    }

    /// Same matrices divided by Γ₀, so that time is measured in 1/Γ₀.
    pub fn in_gamma0_units(&self) -> CouplingMatrices {
        let s = 1.0 / self.gamma0;
        CouplingMatrices {
            j: &self.j * s,
            jz: &self.jz * s,
            gamma: &self.gamma * s,
            gamma_tilde: &self.gamma_tilde * s,
            psd_clip_applied: self.psd_clip_applied * s,
            gamma0: 1.0,
            boltzmann_factor: self.boltzmann_factor,
        }
    }
}

/// Assembles all coupling matrices for qubits at `positions` (units of λ).
pub fn build_coupling_matrices(
    positions: &[f64],
    cfg: &DimensionlessConfig,
    options: &CouplingOptions,
) -> Result<CouplingMatrices> {
    options.quadrature.validate()?;
    let n = positions.len();
    if n == 0 {
        return Err(Error::InvalidParameter { name: "positions", reason: "no qubits".into() });
    }
    if let Some(bad) = positions.iter().find(|r| !r.is_finite()) {
        return Err(Error::InvalidParameter { name: "positions", reason: format!("non-finite coordinate {bad}") });
    }

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    for &(a, b) in &pairs {
        let distance = (positions[a] - positions[b]).abs();
        if distance < RHO_MIN {
            return Err(Error::CoincidentQubits { first: a, second: b, distance, min: RHO_MIN });
        }
    }

    // each unordered pair is evaluated once and mirrored, so the result does
    // not depend on scheduling
    let values: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let rho = (positions[a] - positions[b]).abs();
            let j = coupling_j(rho, cfg, options.j_mode, &options.quadrature)?;
            let jz = if options.with_jz { coupling_jz(rho, cfg, &options.quadrature)? } else { 0.0 };
            Ok((j, jz, coupling_gamma(rho, cfg)))
        })
        .collect::<Result<_>>()?;

    let gamma0 = cfg.gamma0();
    let mut j = DMatrix::zeros(n, n);
    let mut jz = DMatrix::zeros(n, n);
    let mut gamma = DMatrix::from_diagonal_element(n, n, gamma0);
    for (&(a, b), &(vj, vjz, vg)) in pairs.iter().zip(&values) {
        j[(a, b)] = vj;
        j[(b, a)] = vj;
        jz[(a, b)] = vjz;
        jz[(b, a)] = vjz;
        gamma[(a, b)] = vg;
        gamma[(b, a)] = vg;
    }

    let psd_clip_applied = clip_to_psd(&mut gamma);
    if psd_clip_applied > 1e-8 * gamma0 {
        log::warn!("dissipative matrix had a negative eigenvalue of {psd_clip_applied:e} (Γ₀ = {gamma0:e})");
    }
    let boltzmann_factor = cfg.boltzmann_factor();
    let gamma_tilde = &gamma * boltzmann_factor;
    Ok(CouplingMatrices { j, jz, gamma, gamma_tilde, psd_clip_applied, gamma0, boltzmann_factor })
}

/// Replaces negative eigenvalues of a symmetric matrix by zero. Returns the
/// magnitude of the most negative one. The matrix is untouched when it is
/// already PSD.
fn clip_to_psd(m: &mut DMatrix<f64>) -> f64 {
    if m.nrows() < 2 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(m.clone());
    let worst = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::min);
    if worst >= 0.0 {
        return 0.0;
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let n = m.nrows();
    for a in 0..n {
        for b in a..n {
            let v = 0.5 * (rebuilt[(a, b)] + rebuilt[(b, a)]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    -worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_scales, dimensionless_config, yig_nv};

    fn preset_cfg() -> DimensionlessConfig {
        let p = yig_nv();
        let s = derive_scales(&p.bath, &p.qubits, &p.environment).unwrap();
        dimensionless_config(&s, &p.qubits)
    }

    fn fig2_cfg() -> DimensionlessConfig {
        let cfg = preset_cfg();
        DimensionlessConfig::from_ratios(3.484e-3, cfg.sum_ratio, cfg.gap_ratio, 0.375, f64::INFINITY)
    }

    #[test]
    fn gamma_at_zero_is_single_qubit_rate() {
        let p = yig_nv();
        let s = derive_scales(&p.bath, &p.qubits, &p.environment).unwrap();
        let cfg = dimensionless_config(&s, &p.qubits);
        assert!((coupling_gamma(0.0, &cfg) - s.gamma0).abs() <= 1e-12 * s.gamma0);
    }

    #[test]
    fn closed_form_values() {
        let cfg = fig2_cfg();
        let g = coupling_gamma(0.0, &cfg);
        // quoted to four figures
        assert!((g / 1.292e-3 - 1.0).abs() < 1e-3, "{g}");
        let j = coupling_j(1.0, &cfg, JMode::Asymptotic, &QuadratureSettings::default()).unwrap();
        assert!((j - 2.415e-4).abs() < 5e-8, "{j}");
        assert!(coupling_gamma(2.404_825_557_695_773, &cfg).abs() < 1e-9);
        assert!(matches!(
            coupling_j(0.0, &cfg, JMode::Asymptotic, &QuadratureSettings::default()),
            Err(Error::DomainError { .. })
        ));
    }

    #[test]
    fn thermal_factors() {
        let cold = fig2_cfg();
        let warm = cold.clone().with_beta_hbar_omega(1.0);
        for rho in [0.0, 0.3, 1.1, 2.0] {
            let g0 = coupling_gamma(rho, &cold);
            let g1 = coupling_gamma(rho, &warm);
            if g0.abs() > 1e-12 {
                assert!((g1 / g0 - 1.581_976_706_869_326).abs() < 1e-12);
                let ratio = coupling_gamma_tilde(rho, &warm) / g1;
                assert!((ratio - (-1.0f64).exp()).abs() < 1e-15);
            }
            assert_eq!(coupling_gamma_tilde(rho, &cold), 0.0);
        }
        assert!((coupling_gamma_tilde(0.0, &warm) / coupling_gamma(0.0, &warm) - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn ising_coupling() {
        let s = QuadratureSettings::default();
        let base = fig2_cfg();
        // λ_exc = λ/16
        let gap_ratio = base.detuning_ratio * 256.0;
        let cfg = DimensionlessConfig::from_ratios(base.detuning_ratio, base.sum_ratio, gap_ratio, 0.375, f64::INFINITY);
        assert!((cfg.lambda_over_lambda_exc() - 16.0).abs() < 1e-12);
        let at0 = coupling_jz(0.0, &cfg, &s).unwrap();
        assert!(at0 < 0.0);
        let direct = -cfg.gap_ratio * regular_kernel(0.0, 2.0 * cfg.d_over_lambda_exc, &s).unwrap();
        assert_eq!(at0, direct);

        // With 2d/λ_exc = 12 the kernel mass sits at ξ ≪ 1, where it reduces to
        // ∫ξ³J₀(xξ)e^{−δξ}dξ = 3δ(2δ² − 3x²)/(δ² + x²)^{7/2}. The decay over one λ
        // is therefore a power law set by d.
        let delta = 2.0 * cfg.d_over_lambda_exc;
        let laplace = |x: f64| 3.0 * delta * (2.0 * delta * delta - 3.0 * x * x) / (delta * delta + x * x).powf(3.5);
        let near = coupling_jz(0.05, &cfg, &s).unwrap();
        let far = coupling_jz(1.0, &cfg, &s).unwrap();
        let ratio = far / near;
        let expected = laplace(16.0) / laplace(0.8);
        assert!((ratio / expected - 1.0).abs() < 0.15, "{ratio} vs {expected}");
        assert!(ratio.abs() < 0.06);
        // still faster than the flip-flop coupling
        let j_near = coupling_j(0.05, &cfg, JMode::Full, &s).unwrap();
        let j_far = coupling_j(1.0, &cfg, JMode::Full, &s).unwrap();
        assert!(ratio.abs() < (j_far / j_near).abs());
    }

    #[test]
    fn full_coupling_far_field() {
        let cfg = fig2_cfg();
        let s = QuadratureSettings::default();
        assert!(coupling_j(0.0, &cfg, JMode::Full, &s).unwrap().is_finite());
        // far from the qubit only the pole survives, damped by e^{−2d/λ}
        let attenuation = (-2.0 * cfg.d_over_lambda).exp();
        for rho in [20.0, 40.0] {
            let full = coupling_j(rho, &cfg, JMode::Full, &s).unwrap();
            let asym = coupling_j(rho, &cfg, JMode::Asymptotic, &s).unwrap();
            assert!((full / (attenuation * asym) - 1.0).abs() < 0.01, "ρ={rho}: {full} vs {asym}");
        }
        // ρ^{−1/2} envelope
        let envelope = |r: f64| FRAC_PI_4 * cfg.detuning_ratio * (2.0 / (std::f64::consts::PI * r)).sqrt();
        for i in 0..40 {
            let rho = 5.0 + 0.9 * i as f64;
            assert!(coupling_j(rho, &cfg, JMode::Full, &s).unwrap().abs() <= 1.05 * envelope(rho));
        }
    }

    #[test]
    fn two_qubit_eigenvalues() {
        let cfg = fig2_cfg().with_uniform_chain(2, 0.7);
        let m = build_coupling_matrices(&cfg.positions, &cfg, &CouplingOptions::default()).unwrap();
        let g0 = cfg.gamma0();
        let g12 = coupling_gamma(0.7, &cfg);
        let mut eig: Vec<f64> = SymmetricEigen::new(m.gamma.clone()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - (g0 - g12)).abs() < 1e-15);
        assert!((eig[1] - (g0 + g12)).abs() < 1e-15);
        assert_eq!(m.j[(0, 0)], 0.0);
        assert_eq!(m.psd_clip_applied, 0.0);
    }

    #[test]
    fn single_qubit() {
        let cfg = fig2_cfg().with_uniform_chain(1, 1.0);
        let m = build_coupling_matrices(&cfg.positions, &cfg, &CouplingOptions::default()).unwrap();
        assert_eq!(m.gamma[(0, 0)], cfg.gamma0());
        assert_eq!(m.j[(0, 0)], 0.0);
    }

    #[test]
    fn dense_chain_is_numerically_psd() {
        let cfg = fig2_cfg().with_uniform_chain(40, 0.1);
        let opts = CouplingOptions { with_jz: false, ..Default::default() };
        let m = build_coupling_matrices(&cfg.positions, &cfg, &opts).unwrap();
        assert!(m.psd_clip_applied < 1e-8 * m.gamma0);
        let min = SymmetricEigen::new(m.gamma.clone()).eigenvalues.min();
        assert!(min >= -1e-14 * m.gamma0, "{min}");
    }

    #[test]
    fn clipping_reports_and_removes_negative_modes() {
        let mut m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let clip = clip_to_psd(&mut m);
        assert!((clip - 1.0).abs() < 1e-14);
        let eig = SymmetricEigen::new(m.clone()).eigenvalues;
        assert!(eig.min() > -1e-14);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn coincident_qubits_rejected() {
        let cfg = fig2_cfg();
        let r = build_coupling_matrices(&[0.0, 1.0, 1.0005], &cfg, &CouplingOptions::default());
        assert!(matches!(r, Err(Error::CoincidentQubits { first: 1, second: 2, .. })));
    }

    #[test]
    fn geometric_invariances() {
        let cfg = fig2_cfg();
        let opts = CouplingOptions::default();
        // dyadic offsets keep differences exact
        let pos = [0.0, 0.375, 1.25, 1.5, 2.875];
        let shifted: Vec<f64> = pos.iter().map(|r| r + 4.0).collect();
        let a = build_coupling_matrices(&pos, &cfg, &opts).unwrap();
        let b = build_coupling_matrices(&shifted, &cfg, &opts).unwrap();
        assert_eq!(a, b);

        let reversed: Vec<f64> = pos.iter().rev().map(|r| -r).collect();
        let c = build_coupling_matrices(&reversed, &cfg, &opts).unwrap();
        let n = pos.len();
        for i in 0..n {
            for k in 0..n {
                assert_eq!(a.j[(i, k)], c.j[(n - 1 - i, n - 1 - k)]);
                assert_eq!(a.gamma[(i, k)], c.gamma[(n - 1 - i, n - 1 - k)]);
                assert_eq!(a.jz[(i, k)], c.jz[(n - 1 - i, n - 1 - k)]);
            }
        }
        assert_eq!(a.j, a.j.transpose());
        assert_eq!(a.gamma, a.gamma.transpose());
        assert_eq!(a.jz, a.jz.transpose());
    }

    #[test]
    fn mode_names() {
        for m in JMode::ALL {
            assert_eq!(JMode::from_name(m.name()).unwrap(), m);
        }
        assert!(JMode::from_name("exact").is_err());
    }
}
