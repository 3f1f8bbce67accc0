//! Spin-wave dispersion and spin susceptibilities of the film.
//!
//! These are diagnostics: the master equation is assembled from the closed-form
//! kernels in [`crate::couplings`], and the longitudinal susceptibility never
//! enters it (two-magnon processes are neglected). Wavenumbers are in 1/cm,
//! frequencies in rad/s, and the susceptibility denominators in erg.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{BathSpec, HBAR};

/// Δ_F = K/ℏ + γB₀, rad/s.
pub fn spin_wave_gap(bath: &BathSpec, applied_field: f64) -> f64 {
    bath.zero_field_gap / HBAR + bath.gyromagnetic_ratio * applied_field
}

/// ω_F(k) = (D/ℏ)k² + Δ_F.
pub fn dispersion_omega_f(k: f64, bath: &BathSpec, applied_field: f64) -> f64 {
    bath.spin_stiffness / HBAR * k * k + spin_wave_gap(bath, applied_field)
}

/// χ^{−+}(ω, k) = s / (D(k² − 1/λ²) − iαℏω) with D/λ² = ℏ(ω − Δ_F).
///
/// Below the gap 1/λ² is negative and the same expression applies.
pub fn chi_minus_plus(omega: f64, k: f64, bath: &BathSpec, applied_field: f64) -> Complex64 {
    let detuning = HBAR * (omega - spin_wave_gap(bath, applied_field));
    let denom = Complex64::new(bath.spin_stiffness * k * k - detuning, -bath.gilbert_alpha * HBAR * omega);
    bath.surface_spin_density / denom
}

/// χ^{+−}(ω, k) = s / (D(k² + 1/λ'²) − iαℏω) with D/λ'² = ℏ(ω + Δ_F).
pub fn chi_plus_minus(omega: f64, k: f64, bath: &BathSpec, applied_field: f64) -> Complex64 {
    let sum = HBAR * (omega + spin_wave_gap(bath, applied_field));
    let denom = Complex64::new(bath.spin_stiffness * k * k + sum, -bath.gilbert_alpha * HBAR * omega);
    bath.surface_spin_density / denom
}

/// Diffusive longitudinal susceptibility
/// χ^{zz}(ω, k) = χ₀(l_s⁻² + k²) / (−iωχ₀/σ + l_s⁻² + k²).
pub fn chi_zz(omega: f64, k: f64, bath: &BathSpec) -> Result<Complex64> {
    let lt = bath.longitudinal.as_ref().ok_or(Error::MissingTransportParameters)?;
    let ls = lt.diffusion_length();
    let relax = 1.0 / (ls * ls) + k * k;
    let chi0 = lt.static_susceptibility;
    Ok(chi0 * relax / Complex64::new(relax, -omega * chi0 / lt.spin_conductivity))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityPoint {
    pub omega: f64,
    pub k: f64,
    pub value: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    MinusPlus,
    PlusMinus,
    Zz,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::MinusPlus, Component::PlusMinus, Component::Zz];

    pub fn name(self) -> &'static str {
        match self {
            Component::MinusPlus => "minus-plus",
            Component::PlusMinus => "plus-minus",
            Component::Zz => "zz",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name).ok_or_else(|| Error::UnknownName {
            what: "susceptibility component",
            name: name.into(),
            available: Self::ALL.map(|c| c.name()).join(", "),
        })
    }

    pub fn evaluate(self, omega: f64, k: f64, bath: &BathSpec, applied_field: f64) -> Result<Complex64> {
        match self {
            Component::MinusPlus => Ok(chi_minus_plus(omega, k, bath, applied_field)),
            Component::PlusMinus => Ok(chi_plus_minus(omega, k, bath, applied_field)),
            Component::Zz => chi_zz(omega, k, bath),
        }
    }
}

/// Evaluates one component on the outer product of `omegas` × `ks` (ω-major).
pub fn probe_grid(
    component: Component,
    omegas: &[f64],
    ks: &[f64],
    bath: &BathSpec,
    applied_field: f64,
) -> Result<Vec<SusceptibilityPoint>> {
    let mut out = Vec::with_capacity(omegas.len() * ks.len());
    for &omega in omegas {
        for &k in ks {
            let value = component.evaluate(omega, k, bath, applied_field)?;
            out.push(SusceptibilityPoint { omega, k, value });
        }
    }
    Ok(out)
}
