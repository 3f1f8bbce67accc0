//! Bessel functions of order zero and the two magnon-kernel integrals.
//!
//! The kernels are
//!
//! ```text
//! pv_kernel(x, δ)      = P.V. ∫₀^∞ dξ ξ³ J₀(xξ) e^{−δξ} / (ξ² − 1)
//! regular_kernel(x, δ) =      ∫₀^∞ dξ ξ³ J₀(xξ) e^{−δξ} / (ξ² + 1)
//! ```
//!
//! with x a distance and δ twice the standoff, both in units of the relevant
//! magnon wavelength.

pub mod quad;

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use quad::{adaptive, Integral};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this |x| the power series is used.
const SERIES_LIMIT: f64 = 4.0;
/// Above this x the Hankel asymptotic expansion is used; in between, Miller's
/// backward recurrence.
const ASYMPTOTIC_LIMIT: f64 = 30.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        j0_series(ax)
    } else if ax <= ASYMPTOTIC_LIMIT {
        miller(ax).0
    } else {
        let (p, q) = hankel_pq(ax);
        let chi = ax - FRAC_PI_4;
        (2.0 / (PI * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Bessel function of the second kind, order zero. Defined for x > 0.
pub fn bessel_y0(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::DomainError { function: "bessel_y0", reason: format!("requires x > 0, got {x}") });
    }
    Ok(if x <= SERIES_LIMIT {
        y0_series(x)
    } else if x <= ASYMPTOTIC_LIMIT {
        let (j0, neumann) = miller(x);
        2.0 / PI * ((0.5 * x).ln() + EULER_GAMMA) * j0 + 4.0 / PI * neumann
    } else {
        let (p, q) = hankel_pq(x);
        let chi = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * chi.sin() + q * chi.cos())
    })
}

fn j0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        term *= -y / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn y0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0; // (y^k / (k!)^2) with sign (−1)^k
    let mut harmonic = 0.0;
    let mut j0 = 1.0;
    let mut tail = 0.0; // Σ (−1)^{k+1} H_k y^k/(k!)^2
    let mut k = 1.0;
    loop {
        term *= -y / (k * k);
        harmonic += 1.0 / k;
        j0 += term;
        tail -= harmonic * term;
        if (harmonic * term).abs() < 1e-18 {
            break;
        }
        k += 1.0;
    }
    2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + tail)
}

/// Miller backward recurrence. Returns (J₀(x), Σ_{k≥1} (−1)^{k+1} J_{2k}(x)/k),
/// the second being the Neumann-series piece of Y₀.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * (((x + 40.0 + (40.0 * x).sqrt()) / 2.0) as usize);
    let two_over_x = 2.0 / x;
    let (mut above, mut current) = (0.0_f64, 1e-30_f64);
    let mut norm = 0.0; // J₀ + 2 Σ J_{2k}
    let mut neumann = 0.0;
    // `current` holds the unnormalized J_m while walking m = start .. 0
    for m in (1..=start).rev() {
        if m % 2 == 0 {
            norm += 2.0 * current;
            let k = (m / 2) as f64;
            let sign = if (m / 2) % 2 == 1 { 1.0 } else { -1.0 };
            neumann += sign * current / k;
        }
        let below = m as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            neumann *= 1e-250;
        }
    }
    norm += current;
    (current / norm, neumann / norm)
}

/// Hankel asymptotic series P₀(x), Q₀(x), truncated at the smallest term.
fn hankel_pq(x: f64) -> (f64, f64) {
    let (mut p, mut q) = (1.0, 0.0);
    let mut u = 1.0;
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        let next = u * (2.0 * mf - 1.0).powi(2) / (8.0 * mf * x);
        if next > u || next < 1e-18 {
            break;
        }
        u = next;
        // P gets (−1)^k u_{2k}, Q gets −(−1)^k u_{2k+1}
        let k = m / 2;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        if m.is_multiple_of(2) {
            p += sign * u;
        } else {
            q -= sign * u;
        }
        m += 1;
    }
    (p, q)
}

/// Approximate k-th positive zero of J₀ (McMahon expansion). Off by 2e-3 for
/// k = 1 and below 1e-5 from k = 2 on; only used to place panel boundaries.
pub(crate) fn j0_zero_estimate(k: usize) -> f64 {
    let beta = (k as f64 - 0.25) * PI;
    let b8 = 8.0 * beta;
    beta + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3)) + 120_928.0 / (15.0 * b8.powi(5))
}

/// Tolerances and geometry of the kernel quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Half-width h of the window [1 − h, 1 + h] around the pole.
    pub pole_excision_halfwidth: f64,
    /// The integration range is cut at ξ = tail_cutoff_multiplier/δ.
    pub tail_cutoff_multiplier: f64,
    /// Interval budget per adaptive integration.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            pole_excision_halfwidth: 1e-3,
            tail_cutoff_multiplier: 50.0,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("pole_excision_halfwidth", self.pole_excision_halfwidth),
            ("tail_cutoff_multiplier", self.tail_cutoff_multiplier),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        if self.pole_excision_halfwidth >= 0.5 {
            return Err(Error::InvalidParameter {
                name: "pole_excision_halfwidth",
                reason: "must be below 0.5".into(),
            });
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter { name: "max_subdivisions", reason: "must be >= 1".into() });
        }
        Ok(())
    }
}

fn check_kernel_args(function: &'static str, delta: f64, settings: &QuadratureSettings) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::DomainError { function, reason: format!("requires delta > 0, got {delta}") });
    }
    settings.validate()
}

/// Cauchy principal value of ∫₀^∞ ξ³ J₀(xξ) e^{−δξ}/(ξ² − 1) dξ.
///
/// The pole at ξ = 1 is handled by pairing ξ = 1 ± u inside [1 − h, 1 + h], where
/// the 1/u part cancels exactly and the remaining integrand is smooth.
pub fn pv_kernel(x: f64, delta: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_kernel_args("pv_kernel", delta, settings)?;
    let x = x.abs();
    let h = settings.pole_excision_halfwidth;
    let numerator = |xi: f64| xi * xi * xi * bessel_j0(x * xi) * (-delta * xi).exp();

    let inner = adaptive(
        |xi| numerator(xi) / (xi * xi - 1.0),
        0.0,
        1.0 - h,
        settings.abs_tol,
        settings.rel_tol,
        settings.max_subdivisions,
    )?;

    // P.V.∫_{1−h}^{1+h} F(ξ)/(ξ − 1) with F(ξ) = numerator/(ξ + 1)
    let reduced = |xi: f64| numerator(xi) / (xi + 1.0);
    let window = adaptive(
        |u| (reduced(1.0 + u) - reduced(1.0 - u)) / u,
        0.0,
        h,
        settings.abs_tol,
        settings.rel_tol,
        settings.max_subdivisions,
    )?;

    let cutoff = (settings.tail_cutoff_multiplier / delta).max(1.0 + 2.0 * h);
    let outer = oscillatory(|xi| numerator(xi) / (xi * xi - 1.0), x, 1.0 + h, cutoff, settings)?;

    Ok(inner.value + window.value + outer.value)
}

/// ∫₀^∞ ξ³ J₀(xξ) e^{−δξ}/(ξ² + 1) dξ.
pub fn regular_kernel(x: f64, delta: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_kernel_args("regular_kernel", delta, settings)?;
    let x = x.abs();
    let cutoff = settings.tail_cutoff_multiplier / delta;
    let integrand = |xi: f64| xi * xi * xi * bessel_j0(x * xi) * (-delta * xi).exp() / (xi * xi + 1.0);
    Ok(oscillatory(integrand, x, 0.0, cutoff, settings)?.value)
}

/// Integrates `f` over [a, b] where f carries a J₀(xξ) factor. Long oscillatory
/// ranges are split at the zeros of J₀(xξ) and summed in order.
fn oscillatory<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<Integral> {
    if b <= a {
        return Ok(Integral::default());
    }
    if x * b <= 20.0 {
        return adaptive(&f, a, b, settings.abs_tol, settings.rel_tol, settings.max_subdivisions);
    }
    let mut total = Integral::default();
    let mut lo = a;
    let mut k = ((x * a / PI + 0.25).floor() as usize).max(1);
    let panel_tol = settings.abs_tol * 1e-2;
    while lo < b {
        let mut hi = j0_zero_estimate(k) / x;
        k += 1;
        if hi <= lo {
            continue;
        }
        hi = hi.min(b);
        let piece = adaptive(&f, lo, hi, panel_tol, settings.rel_tol, settings.max_subdivisions)?;
        total.accumulate(&piece);
        lo = hi;
    }
    Ok(total)
}
