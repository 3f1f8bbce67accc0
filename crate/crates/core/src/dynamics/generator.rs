//! The Lindblad generator in the qubit bit basis.
//!
//! With K = H − iΣ_αβ[Γ_αβ σ⁺_ασ⁻_β + Γ̃_αβ σ⁻_ασ⁺_β] the master equation reads
//!
//!   ρ̇ = −i(Kρ − ρK†) + 2Σ_αβ Γ_αβ σ⁻_β ρ σ⁺_α + 2Σ_αβ Γ̃_αβ σ⁺_β ρ σ⁻_α,
//!
//! and K acts on a basis state through flip-flops (α ≠ β) plus a diagonal
//! decay term. Γ and Γ̃ are rebuilt from the jump channels so that the dense
//! generator and the trajectory unraveling share the same rates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::channels::{Channel, JumpChannels};
use super::state::{DensityMatrix, SectorLayout};
use crate::error::{Error, Result};

type C = Complex64;

/// Hard ceiling on the register size (the basis index must fit the layout).
pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    emission: Vec<f64>,
    absorption: Vec<f64>,
    has_absorption: bool,
    /// Diagonal of K on every basis state.
    decay: Vec<C>,
    /// Off-diagonal action of K, CSR over basis states: for each (α ∈ i, β ∉ i)
    /// the source state i^α^β and the element J − i(Γ + Γ̃) at (α, β).
    flip_start: Vec<u32>,
    flip_source: Vec<u32>,
    flip_value: Vec<C>,
    /// Unset bits of every basis state, CSR.
    hole_start: Vec<u32>,
    holes: Vec<u8>,
    channels: JumpChannels,
}

impl Generator {
    pub fn new(j: &DMatrix<f64>, channels: &JumpChannels) -> Result<Self> {
        let n = channels.n_qubits;
        if j.nrows() != n || j.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: j.nrows() });
        }
        if n > MAX_QUBITS {
            return Err(Error::DimensionTooLarge { n, max: MAX_QUBITS });
        }
        for ch in channels.emission.iter().chain(&channels.absorption) {
            if ch.coefficients.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: ch.coefficients.len() });
            }
        }
        let g = channels.emission_matrix();
        let gt = channels.absorption_matrix();
        let dim = 1usize << n;
        let mut decay = Vec::with_capacity(dim);
        let (mut flip_start, mut flip_source, mut flip_value) = (vec![0u32], Vec::new(), Vec::new());
        let (mut hole_start, mut holes) = (vec![0u32], Vec::new());
        for i in 0..dim {
            let rate: f64 = (0..n).map(|a| if i >> a & 1 == 1 { g[(a, a)] } else { gt[(a, a)] }).sum();
            decay.push(C::new(0.0, -rate));
            for a in (0..n).filter(|a| i >> a & 1 == 1) {
                for b in (0..n).filter(|b| i >> b & 1 == 0) {
                    flip_source.push((i ^ (1 << a) ^ (1 << b)) as u32);
                    flip_value.push(C::new(j[(a, b)], -(g[(a, b)] + gt[(a, b)])));
                }
            }
            flip_start.push(flip_source.len() as u32);
            holes.extend((0..n as u8).filter(|b| i >> b & 1 == 0));
            hole_start.push(holes.len() as u32);
        }
        Ok(Generator {
            n,
            emission: g.as_slice().to_vec(),
            absorption: gt.as_slice().to_vec(),
            has_absorption: !channels.absorption.is_empty(),
            decay,
            flip_start,
            flip_source,
            flip_value,
            hole_start,
            holes,
            channels: channels.clone(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn channels(&self) -> &JumpChannels {
        &self.channels
    }

    #[inline]
    fn flips(&self, i: usize) -> impl Iterator<Item = (usize, C)> + '_ {
        let range = self.flip_start[i] as usize..self.flip_start[i + 1] as usize;
        self.flip_source[range.clone()].iter().zip(&self.flip_value[range]).map(|(&s, &v)| (s as usize, v))
    }

    #[inline]
    fn holes(&self, i: usize) -> &[u8] {
        &self.holes[self.hole_start[i] as usize..self.hole_start[i + 1] as usize]
    }

    /// (Kψ)(i)
    #[inline]
    fn k_row(&self, psi: &[C], i: usize) -> C {
        self.flips(i).fold(self.decay[i] * psi[i], |acc, (s, v)| acc + v * psi[s])
    }

    /// out = Kψ
    pub fn apply_effective(&self, psi: &[C], out: &mut [C]) {
        out.iter_mut().enumerate().for_each(|(i, o)| *o = self.k_row(psi, i));
    }

    /// No-jump drift ψ̇ = −iKψ.
    pub fn drift(&self, psi: &[C], out: &mut [C]) {
        let minus_i = C::new(0.0, -1.0);
        if psi.len() >= 1 << 10 {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = minus_i * self.k_row(psi, i));
        } else {
            out.iter_mut().enumerate().for_each(|(i, o)| *o = minus_i * self.k_row(psi, i));
        }
    }

    /// One entry of the generator applied to a stored density matrix.
    fn density_entry(&self, layout: &SectorLayout, rho: &[C], i: usize, j: usize) -> C {
        let n = self.n;
        let at = |r: usize, c: usize| rho[layout.at(r, c)];
        let here = at(i, j);
        let k_rho = self.flips(i).fold(self.decay[i] * here, |acc, (s, v)| acc + v * at(s, j));
        let rho_kd = self.flips(j).fold(self.decay[j].conj() * here, |acc, (s, v)| acc + v.conj() * at(i, s));
        let mut emit = C::new(0.0, 0.0);
        let (hi, hj) = (self.holes(i), self.holes(j));
        for &b in hi {
            let row = i | 1 << b;
            for &a in hj {
                emit += self.emission[a as usize * n + b as usize] * at(row, j | 1 << a);
            }
        }
        let mut absorb = C::new(0.0, 0.0);
        if self.has_absorption {
            for b in (0..n).filter(|b| i >> b & 1 == 1) {
                let row = i & !(1 << b);
                for a in (0..n).filter(|a| j >> a & 1 == 1) {
                    absorb += self.absorption[a * n + b] * at(row, j & !(1 << a));
                }
            }
        }
        C::new(0.0, -1.0) * (k_rho - rho_kd) + 2.0 * (emit + absorb)
    }

    /// out = L(ρ) on the stored entries of `layout`.
    pub fn apply_density_data(&self, layout: &SectorLayout, rho: &[C], out: &mut [C]) {
        debug_assert_eq!(layout.n_qubits, self.n);
        out.par_iter_mut().with_min_len(256).zip(&layout.entries).for_each(|(o, &(i, j))| {
            *o = self.density_entry(layout, rho, i as usize, j as usize);
        });
    }

    /// L(ρ) as a new density-shaped object.
    pub fn apply_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: rho.n_qubits() });
        }
        let mut out = DensityMatrix::zeros(rho.layout.clone());
        self.apply_density_data(&rho.layout, &rho.data, &mut out.data);
        Ok(out)
    }

    /// R = −½ d/dt Σ_α⟨σ^z_α⟩ = −½ tr(Σσ^z L(ρ)), from the diagonal of L(ρ).
    pub fn emission_rate_density(&self, layout: &SectorLayout, rho: &[C]) -> f64 {
        let n = self.n as i32;
        (0..self.dim())
            .map(|i| {
                let sz = 2 * (i as u32).count_ones() as i32 - n;
                -0.5 * sz as f64 * self.density_entry(layout, rho, i, i).re
            })
            .sum()
    }

    /// ⟨ψ|R̂|ψ⟩/⟨ψ|ψ⟩ with R̂ = Σ_m rate_m L_m†L_m − Σ_m rate_m L̃_m†L̃_m.
    pub fn emission_rate_pure(&self, psi: &[C], scratch: &mut [C]) -> f64 {
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let (emit, absorb) = self.channel_weights(psi, scratch);
        (emit.iter().sum::<f64>() - absorb.iter().sum::<f64>()) / norm2
    }

    /// rate_m‖L_mψ‖² for every emission and absorption channel.
    pub fn channel_weights(&self, psi: &[C], scratch: &mut [C]) -> (Vec<f64>, Vec<f64>) {
        let weigh = |chs: &[Channel], raise: bool, scratch: &mut [C]| -> Vec<f64> {
            chs.iter()
                .map(|ch| {
                    apply_collective(ch, raise, psi, scratch);
                    ch.rate * scratch.iter().map(|c| c.norm_sqr()).sum::<f64>()
                })
                .collect()
        };
        (weigh(&self.channels.emission, false, scratch), weigh(&self.channels.absorption, true, scratch))
    }
}

/// out = Σ_β c_β σ_β ψ with σ = σ⁺ when `raise`, else σ⁻.
pub(crate) fn apply_collective(ch: &Channel, raise: bool, psi: &[C], out: &mut [C]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C::new(0.0, 0.0);
        for (b, &c) in ch.coefficients.iter().enumerate() {
            let set = i >> b & 1 == 1;
            if raise && set {
                acc += c * psi[i & !(1 << b)];
            } else if !raise && !set {
                acc += c * psi[i | 1 << b];
            }
        }
        *o = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{build_coupling_matrices, CouplingOptions};
    use crate::dynamics::channels::build_jump_channels;
    use crate::params::DimensionlessConfig;
    use std::sync::Arc;

    fn generator(n: usize, a: f64, beta: f64) -> (Generator, crate::couplings::CouplingMatrices) {
        let cfg = DimensionlessConfig::from_ratios(3.484e-3, 1.17, 1.17, 0.375, beta).with_uniform_chain(n, a);
        let c = build_coupling_matrices(&cfg.positions, &cfg, &CouplingOptions { with_jz: false, ..Default::default() })
            .unwrap()
            .in_gamma0_units();
        (Generator::new(&c.j, &build_jump_channels(&c)).unwrap(), c)
    }

    /// Reference: the same generator assembled from explicit 2^N matrices.
    fn brute_force(c: &crate::couplings::CouplingMatrices, rho: &DMatrix<C>) -> DMatrix<C> {
        let n = c.n_qubits();
        let dim = 1 << n;
        let lower = |a: usize| DMatrix::from_fn(dim, dim, |r, s| if s == r | 1 << a && r >> a & 1 == 0 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) });
        let sm: Vec<DMatrix<C>> = (0..n).map(lower).collect();
        let sp: Vec<DMatrix<C>> = sm.iter().map(|m| m.adjoint()).collect();
        let mut h = DMatrix::<C>::zeros(dim, dim);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    h += &sp[a] * &sm[b] * C::new(c.j[(a, b)], 0.0);
                }
            }
        }
        let mi = C::new(0.0, -1.0);
        let mut out = (&h * rho - rho * &h) * mi;
        for a in 0..n {
            for b in 0..n {
                let g = C::new(c.gamma[(a, b)], 0.0);
                let gt = C::new(c.gamma_tilde[(a, b)], 0.0);
                let ab = &sp[a] * &sm[b];
                out += (&sm[b] * rho * &sp[a] * C::new(2.0, 0.0) - &ab * rho - rho * &ab) * g;
                let ba = &sm[a] * &sp[b];
                out += (&sp[b] * rho * &sm[a] * C::new(2.0, 0.0) - &ba * rho - rho * &ba) * gt;
            }
        }
        out
    }

    fn random_hermitian(dim: usize, seed: u64) -> DMatrix<C> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::from_fn(dim, dim, |_, _| C::new(next(), next()));
        let h = &a + a.adjoint();
        let tr = h.trace();
        h / tr
    }

    #[test]
    fn matches_explicit_operator_algebra() {
        let (g, c) = generator(3, 0.45, 0.7);
        let rho = random_hermitian(8, 7);
        let want = brute_force(&c, &rho);
        let got = g.apply_density(&DensityMatrix::from_dense(&rho).unwrap()).unwrap().to_dense();
        assert!((got - want).camax() < 1e-13);
    }

    #[test]
    fn trace_and_hermiticity() {
        let (g, _) = generator(4, 0.5, 1.3);
        let rho = DensityMatrix::from_dense(&random_hermitian(16, 11)).unwrap();
        let d = g.apply_density(&rho).unwrap();
        assert!(d.trace().norm() < 1e-14);
        let m = d.to_dense();
        assert!((&m - m.adjoint()).camax() < 1e-14);
    }

    #[test]
    fn single_qubit_decay_rate() {
        let (g, _) = generator(1, 1.0, f64::INFINITY);
        let rho = DensityMatrix::product(&[1.0]);
        let d = g.apply_density(&rho).unwrap();
        // d⟨σz⟩/dt = dρ_ee − dρ_gg
        let dsz = d.get(1, 1).re - d.get(0, 0).re;
        assert!((dsz + 4.0).abs() < 1e-14);
        assert!((g.emission_rate_density(&rho.layout, &rho.data) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_product_is_stationary() {
        let beta = 0.9;
        let (g, _) = generator(5, 0.35, beta);
        let p = (-beta).exp() / (1.0 + (-beta).exp());
        let rho = DensityMatrix::product(&[p; 5]);
        let d = g.apply_density(&rho).unwrap();
        assert!(d.data.iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn emission_rate_forms_agree() {
        let (g, _) = generator(4, 0.3, 1.1);
        let mut psi: Vec<C> = (0..16).map(|i| C::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|c| *c /= norm);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let mut scratch = vec![C::new(0.0, 0.0); 16];
        let a = g.emission_rate_pure(&psi, &mut scratch);
        let b = g.emission_rate_density(&rho.layout, &rho.data);
        assert!((a - b).abs() < 1e-13, "{a} vs {b}");
    }

    #[test]
    fn no_channels_no_dissipation() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]);
        let g = Generator::new(&j, &JumpChannels { n_qubits: 2, ..Default::default() }).unwrap();
        let layout = Arc::new(SectorLayout::block_diagonal(2));
        let rho = DensityMatrix::product(&[1.0, 0.0]);
        assert_eq!(rho.layout, layout);
        let d = g.apply_density(&rho).unwrap();
        assert_eq!(d.trace(), C::new(0.0, 0.0));
        assert!(matches!(
            Generator::new(&DMatrix::zeros(3, 3), &JumpChannels { n_qubits: 2, ..Default::default() }),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
