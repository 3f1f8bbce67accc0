//! Dormand–Prince 5(4) with FSAL and Hairer's fourth-order continuous
//! extension, on complex state vectors of an autonomous linear-in-time system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-8, atol: 1e-10 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("rtol", self.rtol), ("atol", self.atol)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        Ok(())
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Adaptive integrator for y' = f(y).
///
/// After every accepted step the previous interval [t_prev, t] can be sampled
/// with [`Dopri5::interpolate`].
pub struct Dopri5<F> {
    f: F,
    tol: Tolerances,
    t: f64,
    h: f64,
    t_prev: f64,
    h_prev: f64,
    y: Vec<C>,
    k: [Vec<C>; 7],
    stage: Vec<C>,
    y_new: Vec<C>,
    /// Continuous-extension coefficients r1..r5 of the last accepted step.
    cont: [Vec<C>; 5],
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl<F: Fn(&[C], &mut [C])> Dopri5<F> {
    pub fn new(f: F, t0: f64, y0: Vec<C>, tol: Tolerances) -> Self {
        let n = y0.len();
        let zeros = || vec![C::new(0.0, 0.0); n];
        let mut s = Dopri5 {
            f,
            tol,
            t: t0,
            h: 0.0,
            t_prev: t0,
            h_prev: 0.0,
            y: y0,
            k: std::array::from_fn(|_| zeros()),
            stage: zeros(),
            y_new: zeros(),
            cont: std::array::from_fn(|_| zeros()),
            accepted_steps: 0,
            rejected_steps: 0,
        };
        s.reset(t0, None);
        s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[C] {
        &self.y
    }

    /// Replaces the current state (e.g. after a quantum jump) and restarts the
    /// FSAL derivative. The step size is kept unless it was never set.
    pub fn reset(&mut self, t: f64, y: Option<&[C]>) {
        if let Some(y) = y {
            self.y.copy_from_slice(y);
        }
        self.t = t;
        self.t_prev = t;
        self.h_prev = 0.0;
        (self.f)(&self.y, &mut self.k[0]);
        if self.h == 0.0 {
            self.h = self.initial_step();
        }
    }

    /// Overwrites the current state in place without touching the FSAL
    /// derivative. Intended for round-off level corrections only.
    pub fn state_mut(&mut self) -> &mut [C] {
        &mut self.y
    }

    fn scale(&self, a: C, b: C) -> f64 {
        self.tol.atol + self.tol.rtol * a.norm().max(b.norm())
    }

    fn initial_step(&self) -> f64 {
        let (mut d0, mut d1) = (0.0_f64, 0.0_f64);
        for (y, f) in self.y.iter().zip(&self.k[0]) {
            let sc = self.scale(*y, *y);
            d0 = d0.max(y.norm() / sc);
            d1 = d1.max(f.norm() / sc);
        }
        if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            (0.01 * d0 / d1).min(1.0)
        }
    }

    /// Advances by one accepted step, never past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<()> {
        let Dopri5 { f, tol, t, h: h_next, t_prev, h_prev, y, k, stage, y_new, cont, accepted_steps, rejected_steps } =
            self;
        let n = y.len();
        let scale = |a: C, b: C| tol.atol + tol.rtol * a.norm().max(b.norm());
        loop {
            let remaining = t_end - *t;
            let mut h = h_next.min(remaining);
            // avoid leaving a sliver of the interval for the next step
            if remaining - h < 1e-3 * h {
                h = remaining;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: *t });
            }

            macro_rules! combine {
                ($($c:expr => $idx:expr),+) => {
                    for i in 0..n {
                        stage[i] = y[i] $(+ k[$idx][i] * ($c * h))+;
                    }
                };
            }
            combine!(A21 => 0);
            f(stage, &mut k[1]);
            combine!(A31 => 0, A32 => 1);
            f(stage, &mut k[2]);
            combine!(A41 => 0, A42 => 1, A43 => 2);
            f(stage, &mut k[3]);
            combine!(A51 => 0, A52 => 1, A53 => 2, A54 => 3);
            f(stage, &mut k[4]);
            combine!(A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
            f(stage, &mut k[5]);
            for i in 0..n {
                y_new[i] =
                    y[i] + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76) * h;
            }
            f(y_new, &mut k[6]);

            let mut err = 0.0_f64;
            for i in 0..n {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
                err = err.max(e.norm() / scale(y[i], y_new[i]));
            }
            if !err.is_finite() {
                *h_next = 0.1 * h;
                *rejected_steps += 1;
                continue;
            }

            let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if err <= 1.0 {
                for i in 0..n {
                    let r2 = y_new[i] - y[i];
                    let r3 = k[0][i] * h - r2;
                    let r4 = r2 - k[6][i] * h - r3;
                    let r5 =
                        (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6 + k[6][i] * D7) * h;
                    cont[0][i] = y[i];
                    cont[1][i] = r2;
                    cont[2][i] = r3;
                    cont[3][i] = r4;
                    cont[4][i] = r5;
                }
                *t_prev = *t;
                *h_prev = h;
                *t = if h == remaining { t_end } else { *t + h };
                std::mem::swap(y, y_new);
                k.swap(0, 6);
                *h_next = h * factor;
                *accepted_steps += 1;
                return Ok(());
            }
            *h_next = h * factor.min(1.0);
            *rejected_steps += 1;
        }
    }

    /// Start of the last accepted step.
    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    /// Dense output at `t` ∈ [t_prev, t].
    pub fn interpolate(&self, t: f64, out: &mut [C]) {
        if self.h_prev == 0.0 || t >= self.t {
            out.copy_from_slice(&self.y);
            return;
        }
        let theta = ((t - self.t_prev) / self.h_prev).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.cont;
        for i in 0..out.len() {
            out[i] = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * theta1) * theta) * theta1) * theta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_with_rotation() {
        let rate = C::new(-2.0, 5.0);
        let f = |y: &[C], dy: &mut [C]| dy[0] = rate * y[0];
        let tol = Tolerances { rtol: 1e-10, atol: 1e-12 };
        let mut ode = Dopri5::new(f, 0.0, vec![C::new(1.0, 0.0)], tol);
        let mut worst = 0.0_f64;
        let mut out = [C::new(0.0, 0.0)];
        while ode.t() < 3.0 {
            ode.step(3.0).unwrap();
            for j in 0..=10 {
                let t = ode.t_prev() + (ode.t() - ode.t_prev()) * j as f64 / 10.0;
                ode.interpolate(t, &mut out);
                worst = worst.max((out[0] - (rate * t).exp()).norm());
            }
        }
        assert_eq!(ode.t(), 3.0);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn static_state_is_bit_stable() {
        let f = |_: &[C], dy: &mut [C]| dy.iter_mut().for_each(|d| *d = C::new(0.0, 0.0));
        let y0 = vec![C::new(0.3, -0.1), C::new(1.0 / 3.0, 0.7)];
        let mut ode = Dopri5::new(f, 0.0, y0.clone(), Tolerances::default());
        let mut out = vec![C::new(0.0, 0.0); 2];
        while ode.t() < 5.0 {
            ode.step(5.0).unwrap();
            ode.interpolate(0.5 * (ode.t() + ode.t_prev()), &mut out);
            assert_eq!(out, y0);
        }
        assert_eq!(ode.state(), &y0[..]);
    }

    #[test]
    fn invalid_tolerances() {
        assert!(Tolerances { rtol: 0.0, atol: 1.0 }.validate().is_err());
        assert!(Tolerances::default().validate().is_ok());
    }
}
