//! Density matrices stored sector-sparse.
//!
//! Basis state `i` is a bitmask with bit α set when qubit α is excited. The
//! generator conserves Δ = popcount(i) − popcount(j) for every entry (i, j), so
//! only the Δ-sectors present in the initial state are stored.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const INACTIVE: u32 = u32::MAX;

#[derive(Debug, PartialEq)]
pub struct SectorLayout {
    pub n_qubits: usize,
    pub dim: usize,
    /// Stored entries (row, column), row-major.
    pub entries: Vec<(u32, u32)>,
    index: Vec<u32>,
    transpose: Vec<u32>,
    diagonal: Vec<u32>,
}

impl SectorLayout {
    /// Layout holding every entry whose excitation difference is in `deltas`
    /// (closed under negation; Δ = 0 is always included).
    pub fn new(n_qubits: usize, deltas: &[i32]) -> Self {
        let dim = 1usize << n_qubits;
        let mut allowed = vec![false; 2 * n_qubits + 1];
        allowed[n_qubits] = true;
        for &d in deltas {
            let d = d.unsigned_abs() as usize;
            if d <= n_qubits {
                allowed[n_qubits + d] = true;
                allowed[n_qubits - d] = true;
            }
        }
        let pop: Vec<i32> = (0..dim).map(|i| (i as u32).count_ones() as i32).collect();
        let mut index = vec![INACTIVE; dim * dim];
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if allowed[(pop[i] - pop[j] + n_qubits as i32) as usize] {
                    index[i * dim + j] = entries.len() as u32;
                    entries.push((i as u32, j as u32));
                }
            }
        }
        let transpose = entries.iter().map(|&(i, j)| index[j as usize * dim + i as usize]).collect();
        let diagonal = (0..dim).map(|i| index[i * dim + i]).collect();
        SectorLayout { n_qubits, dim, entries, index, transpose, diagonal }
    }

    pub fn block_diagonal(n_qubits: usize) -> Self {
        Self::new(n_qubits, &[0])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Storage position of (i, j); `None` outside the stored sectors.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let p = self.index[i * self.dim + j];
        (p != INACTIVE).then_some(p as usize)
    }

    /// Storage position of an entry known to be stored.
    #[inline]
    pub(crate) fn at(&self, i: usize, j: usize) -> usize {
        self.index[i * self.dim + j] as usize
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.entries.iter().all(|&(i, j)| i.count_ones() == j.count_ones())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub layout: Arc<SectorLayout>,
    pub data: Vec<C>,
}

impl DensityMatrix {
    pub fn n_qubits(&self) -> usize {
        self.layout.n_qubits
    }

    pub fn zeros(layout: Arc<SectorLayout>) -> Self {
        let data = vec![C::new(0.0, 0.0); layout.len()];
        DensityMatrix { layout, data }
    }

    pub fn from_dense(m: &DMatrix<C>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: dim.next_power_of_two(), got: m.ncols() });
        }
        let n = dim.trailing_zeros() as usize;
        let mut deltas = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if m[(i, j)] != C::new(0.0, 0.0) {
                    deltas.push(i.count_ones() as i32 - j.count_ones() as i32);
                }
            }
        }
        deltas.sort_unstable();
        deltas.dedup();
        let layout = Arc::new(SectorLayout::new(n, &deltas));
        let data = layout.entries.iter().map(|&(i, j)| m[(i as usize, j as usize)]).collect();
        Ok(DensityMatrix { layout, data })
    }

    /// Product of diagonal single-qubit states with excited-state populations `p`.
    pub fn product(p_excited: &[f64]) -> Self {
        let n = p_excited.len();
        let mut rho = Self::zeros(Arc::new(SectorLayout::block_diagonal(n)));
        for i in 0..1usize << n {
            let w: f64 = p_excited
                .iter()
                .enumerate()
                .map(|(a, &p)| if i >> a & 1 == 1 { p } else { 1.0 - p })
                .product();
            let pos = rho.layout.at(i, i);
            rho.data[pos] = C::new(w, 0.0);
        }
        rho
    }

    /// |ψ⟩⟨ψ| for a normalized amplitude vector.
    pub fn pure(psi: &[C]) -> Result<Self> {
        let m = DMatrix::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj());
        Self::from_dense(&m)
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let dim = self.layout.dim;
        let mut m = DMatrix::zeros(dim, dim);
        for (&(i, j), v) in self.layout.entries.iter().zip(&self.data) {
            m[(i as usize, j as usize)] = *v;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.layout.position(i, j).map_or(C::new(0.0, 0.0), |p| self.data[p])
    }

    pub fn trace(&self) -> C {
        self.layout.diagonal.iter().map(|&p| self.data[p as usize]).sum()
    }

    /// Diagonal (populations), real part.
    pub fn populations(&self) -> Vec<f64> {
        self.layout.diagonal.iter().map(|&p| self.data[p as usize].re).collect()
    }

    /// ρ ← (ρ + ρ†)/2
    pub fn hermitize(&mut self) {
        hermitize_data(&self.layout, &mut self.data);
    }

    pub fn sigma_z(&self) -> Vec<f64> {
        sigma_z_from_populations(&self.populations(), self.n_qubits())
    }

    /// c_αβ = ⟨n_α n_β⟩ for α ≠ β, zero on the diagonal.
    pub fn correlation_map(&self) -> DMatrix<f64> {
        correlations_from_populations(&self.populations(), self.n_qubits())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.n_qubits();
        if self.layout.is_block_diagonal() {
            (0..=n)
                .map(|k| {
                    let states: Vec<usize> = (0..1usize << n).filter(|i| i.count_ones() as usize == k).collect();
                    let block = DMatrix::from_fn(states.len(), states.len(), |a, b| {
                        let (x, y) = (self.get(states[a], states[b]), self.get(states[b], states[a]));
                        0.5 * (x + y.conj())
                    });
                    hermitian_min_eigenvalue(&block)
                })
                .fold(f64::INFINITY, f64::min)
        } else {
            let m = self.to_dense();
            hermitian_min_eigenvalue(&((&m + m.adjoint()) * C::new(0.5, 0.0)))
        }
    }
}

pub(crate) fn hermitize_data(layout: &SectorLayout, data: &mut [C]) {
    for (p, &q) in layout.transpose.iter().enumerate() {
        let q = q as usize;
        if q > p {
            let avg = 0.5 * (data[p] + data[q].conj());
            data[p] = avg;
            data[q] = avg.conj();
        } else if q == p {
            data[p].im = 0.0;
        }
    }
}

/// The eigenvalues of the real symmetric 2n×2n embedding of a Hermitian
/// matrix are its eigenvalues, each doubled.
fn hermitian_min_eigenvalue(h: &DMatrix<C>) -> f64 {
    let n = h.nrows();
    let mut real = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let z = h[(a, b)];
            real[(a, b)] = z.re;
            real[(a + n, b + n)] = z.re;
            real[(a, b + n)] = -z.im;
            real[(a + n, b)] = z.im;
        }
    }
    SymmetricEigen::new(real).eigenvalues.min()
}

pub(crate) fn sigma_z_from_populations(pop: &[f64], n: usize) -> Vec<f64> {
    let mut sz = vec![0.0; n];
    for (i, &p) in pop.iter().enumerate() {
        for (a, s) in sz.iter_mut().enumerate() {
            *s += if i >> a & 1 == 1 { p } else { -p };
        }
    }
    sz
}

pub(crate) fn correlations_from_populations(pop: &[f64], n: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(n, n);
    for (i, &p) in pop.iter().enumerate() {
        if p == 0.0 || (i as u32).count_ones() < 2 {
            continue;
        }
        for a in 0..n {
            if i >> a & 1 == 0 {
                continue;
            }
            for b in a + 1..n {
                if i >> b & 1 == 1 {
                    c[(a, b)] += p;
                }
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            c[(b, a)] = c[(a, b)];
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes() {
        // Σ_k C(4,k)² = C(8,4)
        assert_eq!(SectorLayout::block_diagonal(4).len(), 70);
        assert_eq!(SectorLayout::new(4, &[0, 1, 2, 3, 4]).len(), 256);
        assert_eq!(SectorLayout::new(3, &[1]).len(), 20 + 2 * 15);
    }

    #[test]
    fn product_state_observables() {
        let rho = DensityMatrix::product(&[1.0, 1.0, 1.0]);
        assert_eq!(rho.trace(), C::new(1.0, 0.0));
        assert_eq!(rho.sigma_z(), vec![1.0; 3]);
        let c = rho.correlation_map();
        for a in 0..3 {
            assert_eq!(c[(a, a)], 0.0);
            for b in 0..3 {
                if a != b {
                    assert_eq!(c[(a, b)], 1.0);
                }
            }
        }
        let mixed = DensityMatrix::product(&[0.25, 0.5]);
        assert!((mixed.sigma_z()[0] + 0.5).abs() < 1e-15);
        assert!((mixed.correlation_map()[(0, 1)] - 0.125).abs() < 1e-15);
        // populations 0.375, 0.125, 0.375, 0.125
        assert!((mixed.min_eigenvalue() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn pure_state_round_trip() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // (|01⟩ + i|10⟩)/√2 lives in the one-excitation block
        let psi = [C::new(0.0, 0.0), C::new(s, 0.0), C::new(0.0, s), C::new(0.0, 0.0)];
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!(rho.layout.is_block_diagonal());
        assert!((rho.trace() - 1.0).norm() < 1e-15);
        assert!(rho.min_eigenvalue().abs() < 1e-14);
        assert_eq!(rho.get(1, 2), psi[1] * psi[2].conj());

        // |0⟩ + |1⟩ on one qubit carries a coherence between sectors
        let plus = DensityMatrix::pure(&[C::new(s, 0.0), C::new(s, 0.0)]).unwrap();
        assert!(!plus.layout.is_block_diagonal());
        assert_eq!(plus.to_dense().nrows(), 2);
    }

    #[test]
    fn hermitize_averages_pairs() {
        let m = DMatrix::from_row_slice(2, 2, &[C::new(1.0, 0.3), C::new(0.2, 0.1), C::new(0.4, 0.5), C::new(0.0, 0.0)]);
        let mut rho = DensityMatrix::from_dense(&m).unwrap();
        rho.hermitize();
        let h = rho.to_dense();
        assert_eq!(h, h.adjoint());
        assert_eq!(h[(0, 0)], C::new(1.0, 0.0));
        assert!((h[(0, 1)] - C::new(0.3, -0.2)).norm() < 1e-15);
    }
}
