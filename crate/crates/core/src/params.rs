//! Physical parameters (CGS) and the dimensionless scales derived from them.
//!
//! Frequencies are angular (rad/s) throughout. Energies quoted in erg are
//! converted with [`HBAR`]. The qubit-bath detuning ω_qi − Δ_F is the primary
//! knob: every kernel depends on it through λ, so [`Bias::Detuning`] is the
//! preferred way to pin the working point, and [`Bias::Field`] resolves the
//! detuning from an applied field instead.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, erg·s.
pub const HBAR: f64 = 1.054_571_817e-27;
/// Boltzmann constant, erg/K.
pub const K_B: f64 = 1.380_649e-16;
/// Gyromagnetic ratio of a free electron spin, rad/(s·G) (28 GHz/T).
pub const GAMMA_ELECTRON: f64 = 2.0 * PI * 2.8e6;

/// Longitudinal spin-transport coefficients of the film (diffusive regime).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalTransport {
    pub spin_conductivity: f64,
    pub spin_relaxation_time: f64,
    pub static_susceptibility: f64,
}

impl LongitudinalTransport {
    /// Spin diffusion length l_s = sqrt(σ τ_s / χ₀).
    pub fn diffusion_length(&self) -> f64 {
        (self.spin_conductivity * self.spin_relaxation_time / self.static_susceptibility).sqrt()
    }

    fn validate(&self) -> Result<()> {
        positive("spin_conductivity", self.spin_conductivity)?;
        positive("spin_relaxation_time", self.spin_relaxation_time)?;
        positive("static_susceptibility", self.static_susceptibility)?;
        if !self.diffusion_length().is_finite() {
            return Err(Error::InvalidParameter {
                name: "longitudinal",
                reason: "spin diffusion length is not finite".into(),
            });
        }
        Ok(())
    }
}

/// Ferromagnetic film acting as the bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Spin stiffness D, erg·cm².
    pub spin_stiffness: f64,
    /// Saturation surface spin density s.
    pub surface_spin_density: f64,
    /// Gilbert damping α.
    pub gilbert_alpha: f64,
    /// Zero-field spin-wave gap K, erg.
    pub zero_field_gap: f64,
    /// Film gyromagnetic ratio γ, rad/(s·G).
    pub gyromagnetic_ratio: f64,
    /// Film thickness L, cm. Informational only.
    pub film_thickness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitudinal: Option<LongitudinalTransport>,
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        positive("spin_stiffness", self.spin_stiffness)?;
        positive("surface_spin_density", self.surface_spin_density)?;
        positive("gilbert_alpha", self.gilbert_alpha)?;
        non_negative("zero_field_gap", self.zero_field_gap)?;
        positive("gyromagnetic_ratio", self.gyromagnetic_ratio)?;
        positive("film_thickness", self.film_thickness)?;
        if self.gilbert_alpha > 0.05 {
            log::warn!(
                "Gilbert damping {} is not small; the weak-damping kernels assume alpha << 1",
                self.gilbert_alpha
            );
        }
        if let Some(lt) = &self.longitudinal {
            lt.validate()?;
        }
        Ok(())
    }
}

/// Collinear 1d array of two-level spin qubits above the film.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitArraySpec {
    pub n_qubits: usize,
    /// Lattice constant a, cm.
    pub lattice_constant: f64,
    /// Qubit-film distance d, cm.
    pub standoff: f64,
    /// Zero-field splitting Δ₀, erg.
    pub zero_field_splitting: f64,
    /// Qubit gyromagnetic ratio γ̃, rad/(s·G).
    pub gyromagnetic_ratio: f64,
    /// Explicit coordinates along the chain (cm); overrides the uniform lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
}

impl QubitArraySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidParameter {
                name: "n_qubits",
                reason: "at least one qubit is required".into(),
            });
        }
        positive("lattice_constant", self.lattice_constant)?;
        positive("standoff", self.standoff)?;
        positive("zero_field_splitting", self.zero_field_splitting)?;
        positive("gyromagnetic_ratio", self.gyromagnetic_ratio)?;
        if let Some(pos) = &self.positions {
            if pos.len() != self.n_qubits {
                return Err(Error::InvalidParameter {
                    name: "positions",
                    reason: format!("{} coordinates for {} qubits", pos.len(), self.n_qubits),
                });
            }
            if pos.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "positions",
                    reason: "coordinates must be finite".into(),
                });
            }
            if pos.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter {
                    name: "positions",
                    reason: "coordinates must be strictly increasing".into(),
                });
            }
        }
        Ok(())
    }

    /// Qubit coordinates in cm: explicit positions, or `α·a` for α = 0..N.
    pub fn coordinates(&self) -> Vec<f64> {
        match &self.positions {
            Some(p) => p.clone(),
            None => (0..self.n_qubits).map(|i| i as f64 * self.lattice_constant).collect(),
        }
    }
}

/// How the working point is pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bias {
    /// Applied field B₀ along the qubit axis, Gauss.
    Field { gauss: f64 },
    /// Detuning ω_qi − Δ_F, rad/s. B₀ is solved for.
    Detuning { angular_frequency: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub bias: Bias,
    /// Temperature, K.
    pub temperature: f64,
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        non_negative("temperature", self.temperature)?;
        match self.bias {
            Bias::Field { gauss } => non_negative("applied_field", gauss),
            Bias::Detuning { angular_frequency } => positive("detuning", angular_frequency),
        }
    }
}

/// Characteristic scales of the qubit-bath problem, in CGS and as ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Resolved applied field B₀, Gauss.
    pub applied_field: f64,
    /// Qubit frequency ω_qi = Δ₀/ℏ − γ̃B₀, rad/s.
    pub omega_qi: f64,
    /// Spin-wave gap Δ_F = K/ℏ + γB₀, rad/s.
    pub gap: f64,
    /// (ω_qi − Δ_F)/Δ₀
    pub detuning_ratio: f64,
    /// (ω_qi + Δ_F)/Δ₀
    pub sum_ratio: f64,
    /// Δ_F/Δ₀
    pub gap_ratio: f64,
    /// λ = sqrt(D/ℏ(ω_qi − Δ_F)), cm.
    pub lambda: f64,
    /// λ' = sqrt(D/ℏ(ω_qi + Δ_F)), cm.
    pub lambda_prime: f64,
    /// λ_exc = sqrt(D/ℏΔ_F), cm.
    pub lambda_exc: f64,
    /// ν = πℏ²(γγ̃)²sΔ₀/D². The unit of s makes the absolute magnitude
    /// informational only; every downstream quantity is ν-normalized.
    pub nu: f64,
    pub d_over_lambda: f64,
    pub d_over_lambda_prime: f64,
    pub d_over_lambda_exc: f64,
    /// Bose occupation n_B(ω_qi).
    pub n_bose: f64,
    /// βℏω_qi (infinite at T = 0).
    pub beta_hbar_omega: f64,
    /// Single-qubit emission rate Γ₀ in units of ν.
    pub gamma0: f64,
    /// Γ₀ in rad/s (ν-dependent, see [`DerivedScales::nu`]).
    pub gamma0_abs: f64,
}

impl DerivedScales {
    /// e^{−βℏω_qi}; zero at T = 0.
    pub fn boltzmann_factor(&self) -> f64 {
        boltzmann_factor(self.beta_hbar_omega)
    }
}

pub fn bose_occupation(beta_hbar_omega: f64) -> f64 {
    if beta_hbar_omega.is_infinite() {
        0.0
    } else {
        1.0 / beta_hbar_omega.exp_m1()
    }
}

pub fn boltzmann_factor(beta_hbar_omega: f64) -> f64 {
    if beta_hbar_omega.is_infinite() {
        0.0
    } else {
        (-beta_hbar_omega).exp()
    }
}

/// βℏω for an angular frequency (rad/s) at temperature T (K); infinite at T = 0.
pub fn beta_hbar_omega(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        f64::INFINITY
    } else {
        HBAR * omega / (K_B * temperature)
    }
}

/// Single-qubit rate Γ₀/ν = (π/4)(n_B + 1)·detuning_ratio·e^{−2d/λ}.
pub(crate) fn gamma0_over_nu(n_bose: f64, detuning_ratio: f64, d_over_lambda: f64) -> f64 {
    0.25 * PI * (n_bose + 1.0) * detuning_ratio * (-2.0 * d_over_lambda).exp()
}

pub fn derive_scales(bath: &BathSpec, qubits: &QubitArraySpec, env: &Environment) -> Result<DerivedScales> {
    bath.validate()?;
    qubits.validate()?;
    env.validate()?;

    let delta0 = qubits.zero_field_splitting / HBAR;
    let k_gap = bath.zero_field_gap / HBAR;
    let (gamma_f, gamma_q) = (bath.gyromagnetic_ratio, qubits.gyromagnetic_ratio);

    let applied_field = match env.bias {
        Bias::Field { gauss } => gauss,
        Bias::Detuning { angular_frequency } => {
            // ω_qi − Δ_F = Δ₀ − K − (γ + γ̃)B₀
            let b0 = (delta0 - k_gap - angular_frequency) / (gamma_f + gamma_q);
            if b0 < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "detuning",
                    reason: format!(
                        "detuning {angular_frequency:e} rad/s needs a negative applied field ({b0:e} G)"
                    ),
                });
            }
            b0
        }
    };

    let omega_qi = delta0 - gamma_q * applied_field;
    let gap = k_gap + gamma_f * applied_field;
    if omega_qi <= gap {
        return Err(Error::GapExceedsQubitFrequency { omega_qi, gap });
    }

    let d = bath.spin_stiffness;
    let lambda = (d / (HBAR * (omega_qi - gap))).sqrt();
    let lambda_prime = (d / (HBAR * (omega_qi + gap))).sqrt();
    let lambda_exc = (d / (HBAR * gap)).sqrt();

    let nu = PI * HBAR * HBAR * (gamma_f * gamma_q).powi(2) * bath.surface_spin_density
        * qubits.zero_field_splitting
        / (d * d);

    let beta_hbar_omega = beta_hbar_omega(omega_qi, env.temperature);
    let n_bose = bose_occupation(beta_hbar_omega);

    let detuning_ratio = (omega_qi - gap) / delta0;
    let d_over_lambda = qubits.standoff / lambda;
    let gamma0 = gamma0_over_nu(n_bose, detuning_ratio, d_over_lambda);

    Ok(DerivedScales {
        applied_field,
        omega_qi,
        gap,
        detuning_ratio,
        sum_ratio: (omega_qi + gap) / delta0,
        gap_ratio: gap / delta0,
        lambda,
        lambda_prime,
        lambda_exc,
        nu,
        d_over_lambda,
        d_over_lambda_prime: qubits.standoff / lambda_prime,
        d_over_lambda_exc: qubits.standoff / lambda_exc,
        n_bose,
        beta_hbar_omega,
        gamma0,
        gamma0_abs: gamma0 * nu,
    })
}

/// Everything the coupling kernels need, expressed in units of λ and Δ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessConfig {
    pub a_over_lambda: f64,
    pub d_over_lambda: f64,
    pub d_over_lambda_prime: f64,
    pub d_over_lambda_exc: f64,
    pub detuning_ratio: f64,
    pub sum_ratio: f64,
    pub gap_ratio: f64,
    pub n_bose: f64,
    pub beta_hbar_omega: f64,
    /// Qubit coordinates in units of λ.
    pub positions: Vec<f64>,
}

impl DimensionlessConfig {
    /// Builds a self-consistent configuration from frequency ratios alone.
    ///
    /// λ'/λ and λ_exc/λ follow from the ratios, so the standoff only needs to be
    /// given once (as d/λ).
    pub fn from_ratios(
        detuning_ratio: f64,
        sum_ratio: f64,
        gap_ratio: f64,
        d_over_lambda: f64,
        beta_hbar_omega: f64,
    ) -> Self {
        let mut cfg = DimensionlessConfig {
            a_over_lambda: 1.0,
            d_over_lambda,
            d_over_lambda_prime: 0.0,
            d_over_lambda_exc: 0.0,
            detuning_ratio,
            sum_ratio,
            gap_ratio,
            n_bose: bose_occupation(beta_hbar_omega),
            beta_hbar_omega,
            positions: vec![0.0],
        };
        cfg.d_over_lambda_prime = d_over_lambda * cfg.lambda_over_lambda_prime();
        cfg.d_over_lambda_exc = d_over_lambda * cfg.lambda_over_lambda_exc();
        cfg
    }

    /// Replaces the geometry with a uniform chain of `n` qubits at spacing `a_over_lambda`.
    pub fn with_uniform_chain(mut self, n: usize, a_over_lambda: f64) -> Self {
        self.a_over_lambda = a_over_lambda;
        self.positions = (0..n).map(|i| i as f64 * a_over_lambda).collect();
        self
    }

    pub fn with_positions(mut self, positions: Vec<f64>) -> Self {
        self.positions = positions;
        self
    }

    /// Same couplings at a different temperature (βℏω_qi).
    pub fn with_beta_hbar_omega(mut self, beta_hbar_omega: f64) -> Self {
        self.beta_hbar_omega = beta_hbar_omega;
        self.n_bose = bose_occupation(beta_hbar_omega);
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.positions.len()
    }

    /// λ/λ' = sqrt((ω_qi + Δ_F)/(ω_qi − Δ_F)).
    pub fn lambda_over_lambda_prime(&self) -> f64 {
        (self.sum_ratio / self.detuning_ratio).sqrt()
    }

    /// λ/λ_exc = sqrt(Δ_F/(ω_qi − Δ_F)).
    pub fn lambda_over_lambda_exc(&self) -> f64 {
        (self.gap_ratio / self.detuning_ratio).sqrt()
    }

    pub fn boltzmann_factor(&self) -> f64 {
        boltzmann_factor(self.beta_hbar_omega)
    }

    /// Single-qubit emission rate Γ₀ in units of ν.
    pub fn gamma0(&self) -> f64 {
        gamma0_over_nu(self.n_bose, self.detuning_ratio, self.d_over_lambda)
    }
}

pub fn dimensionless_config(scales: &DerivedScales, qubits: &QubitArraySpec) -> DimensionlessConfig {
    let lambda = scales.lambda;
    DimensionlessConfig {
        a_over_lambda: qubits.lattice_constant / lambda,
        d_over_lambda: scales.d_over_lambda,
        d_over_lambda_prime: scales.d_over_lambda_prime,
        d_over_lambda_exc: scales.d_over_lambda_exc,
        detuning_ratio: scales.detuning_ratio,
        sum_ratio: scales.sum_ratio,
        gap_ratio: scales.gap_ratio,
        n_bose: scales.n_bose,
        beta_hbar_omega: scales.beta_hbar_omega,
        positions: qubits.coordinates().iter().map(|r| r / lambda).collect(),
    }
}

/// A named, complete parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub bath: BathSpec,
    pub qubits: QubitArraySpec,
    pub environment: Environment,
}

/// YIG film (L = 10 nm) under a chain of NV centers at d = 30 nm, with the
/// detuning pinned at 2π·10 MHz and T = 0.
pub fn yig_nv() -> Preset {
    let planck = 2.0 * PI * HBAR;
    Preset {
        bath: BathSpec {
            spin_stiffness: 4.3e-30,
            surface_spin_density: 8e-12,
            gilbert_alpha: 1e-4,
            zero_field_gap: 3.296e-18,
            gyromagnetic_ratio: GAMMA_ELECTRON,
            film_thickness: 10e-7,
            longitudinal: None,
        },
        qubits: QubitArraySpec {
            n_qubits: 9,
            lattice_constant: 40e-7,
            standoff: 30e-7,
            zero_field_splitting: planck * 2.87e9,
            gyromagnetic_ratio: GAMMA_ELECTRON,
            positions: None,
        },
        environment: Environment {
            bias: Bias::Detuning { angular_frequency: 2.0 * PI * 10e6 },
            temperature: 0.0,
        },
    }
}

type PresetFn = fn() -> Preset;

const PRESETS: &[(&str, PresetFn)] = &[("yig-nv", yig_nv)];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f())
        .ok_or_else(|| Error::UnknownName {
            what: "preset",
            name: name.to_string(),
            available: preset_names().join(", "),
        })
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be >= 0 (got {value:e})") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_scales() -> DerivedScales {
        let p = yig_nv();
        derive_scales(&p.bath, &p.qubits, &p.environment).unwrap()
    }

    #[test]
    fn preset_lambda_is_about_80_nm() {
        let s = default_scales();
        let lambda_nm = s.lambda * 1e7;
        assert!((lambda_nm - 80.0).abs() / 80.0 < 0.05, "lambda = {lambda_nm} nm");
        // direct: D / ħ(2π·10 MHz)
        let direct = (4.3e-30 / (HBAR * 2.0 * PI * 1e7)).sqrt();
        assert!((s.lambda - direct).abs() / direct < 1e-12);
        assert!((s.detuning_ratio - 3.484e-3).abs() < 1e-6);
    }

    #[test]
    fn length_scales_are_ordered() {
        let s = default_scales();
        assert!(s.lambda_prime < s.lambda_exc && s.lambda_exc < s.lambda);
        assert!(s.lambda_prime * 1e7 > 3.0 && s.lambda_prime * 1e7 < 6.0);
    }

    #[test]
    fn field_and_detuning_bias_agree() {
        let p = yig_nv();
        let s = default_scales();
        let env = Environment { bias: Bias::Field { gauss: s.applied_field }, temperature: 0.0 };
        let s2 = derive_scales(&p.bath, &p.qubits, &env).unwrap();
        assert!((s2.lambda - s.lambda).abs() / s.lambda < 1e-9);
        // ~42 mT for the preset
        assert!(s.applied_field > 400.0 && s.applied_field < 450.0);
    }

    #[test]
    fn closed_gap_is_rejected() {
        let p = yig_nv();
        let s = default_scales();
        // field at which ω_qi = Δ_F exactly
        let b_eq = (s.omega_qi + p.qubits.gyromagnetic_ratio * s.applied_field
            - p.bath.zero_field_gap / HBAR)
            / (p.bath.gyromagnetic_ratio + p.qubits.gyromagnetic_ratio);
        for b in [b_eq, b_eq * 1.01] {
            let env = Environment { bias: Bias::Field { gauss: b }, temperature: 0.0 };
            match derive_scales(&p.bath, &p.qubits, &env) {
                Err(Error::GapExceedsQubitFrequency { .. }) => {}
                other => panic!("expected GapExceedsQubitFrequency, got {other:?}"),
            }
        }
        // λ grows without bound as the detuning shrinks
        let mut last = 0.0;
        for det in [1e8, 1e7, 1e6, 1e5, 1e4] {
            let env = Environment { bias: Bias::Detuning { angular_frequency: det }, temperature: 0.0 };
            let l = derive_scales(&p.bath, &p.qubits, &env).unwrap().lambda;
            assert!(l > last);
            last = l;
        }
    }

    #[test]
    fn bose_factor_at_unit_beta_hbar_omega() {
        // ħ·2π·2 GHz / k_B ≈ 0.0959 K
        let omega = 2.0 * PI * 2e9;
        let t = HBAR * omega / K_B;
        assert!((t - 0.0959).abs() < 1e-4, "T = {t}");
        let x = beta_hbar_omega(omega, t);
        assert!((x - 1.0).abs() < 1e-12);
        assert!((bose_occupation(x) - 0.5820).abs() < 1e-4);
        assert!((bose_occupation(x) - 1.0 / (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn bose_occupation_monotone_in_temperature() {
        let omega = 2.0 * PI * 1.7e9;
        assert_eq!(bose_occupation(beta_hbar_omega(omega, 0.0)), 0.0);
        let mut last = 0.0;
        for t in [1e-3, 1e-2, 0.05, 0.1, 0.3, 1.0, 10.0] {
            let n = bose_occupation(beta_hbar_omega(omega, t));
            assert!(n > last);
            last = n;
        }
    }

    #[test]
    fn invalid_inputs_are_reported() {
        let mut p = yig_nv();
        p.bath.spin_stiffness = 0.0;
        assert!(matches!(
            derive_scales(&p.bath, &p.qubits, &p.environment),
            Err(Error::NonPositiveParameter { name: "spin_stiffness", .. })
        ));
        let mut p = yig_nv();
        p.qubits.n_qubits = 3;
        p.qubits.positions = Some(vec![0.0, 2e-6, 1e-6]);
        assert!(matches!(
            derive_scales(&p.bath, &p.qubits, &p.environment),
            Err(Error::InvalidParameter { name: "positions", .. })
        ));
        let mut p = yig_nv();
        p.environment.temperature = -1.0;
        assert!(derive_scales(&p.bath, &p.qubits, &p.environment).is_err());
    }

    #[test]
    fn derivation_is_deterministic() {
        assert_eq!(default_scales(), default_scales());
    }

    #[test]
    fn dimensionless_geometry() {
        let p = yig_nv();
        let s = default_scales();
        let mut q = p.qubits.clone();
        q.n_qubits = 3;
        q.lattice_constant = 0.5 * s.lambda;
        let cfg = dimensionless_config(&s, &q);
        assert!((cfg.a_over_lambda - 0.5).abs() < 1e-15);
        for (got, want) in cfg.positions.iter().zip([0.0, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        q.lattice_constant = s.lambda;
        assert_eq!(dimensionless_config(&s, &q).a_over_lambda, 1.0);
        // d = 30 nm against λ = 80 nm
        let r = DimensionlessConfig::from_ratios(3.484e-3, 1.17, 0.585, 30.0 / 80.0, f64::INFINITY);
        assert_eq!(r.d_over_lambda, 0.375);
        assert!((cfg.d_over_lambda_prime / cfg.d_over_lambda - cfg.lambda_over_lambda_prime()).abs() < 1e-9);
    }

    #[test]
    fn unknown_preset() {
        assert!(preset("yig-nv").is_ok());
        assert!(matches!(preset("nope"), Err(Error::UnknownName { .. })));
    }
}
