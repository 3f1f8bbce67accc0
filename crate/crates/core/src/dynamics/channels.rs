use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::couplings::CouplingMatrices;

/// One collective jump L = Σ_β c_β σ_β (σ⁻ for emission, σ⁺ for absorption),
/// applied at `rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub rate: f64,
    pub coefficients: Vec<f64>,
}

/// Diagonal form of the dissipative matrices: Γ = Σ_m (rate_m/2) c_m c_mᵀ.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JumpChannels {
    pub n_qubits: usize,
    pub emission: Vec<Channel>,
    pub absorption: Vec<Channel>,
}

/// Relative rate (to Γ₀) below which a channel is dropped.
pub const CHANNEL_CUTOFF: f64 = 1e-14;

pub fn build_jump_channels(c: &CouplingMatrices) -> JumpChannels {
    let reference = c.gamma.diagonal().max();
    JumpChannels {
        n_qubits: c.n_qubits(),
        emission: diagonalize(&c.gamma, reference),
        absorption: diagonalize(&c.gamma_tilde, reference),
    }
}

fn diagonalize(m: &DMatrix<f64>, reference: f64) -> Vec<Channel> {
    let eig = SymmetricEigen::new(m.clone());
    let mut channels: Vec<Channel> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > CHANNEL_CUTOFF * reference && g > 0.0)
        .map(|(i, &g)| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // sign convention: largest component positive
            let pivot = v.iter().copied().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            Channel { rate: 2.0 * g, coefficients: v }
        })
        .collect();
    channels.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    channels
}

impl JumpChannels {
    /// Σ_m (rate_m/2) c_m c_mᵀ for one channel family.
    pub fn rate_matrix(channels: &[Channel], n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for ch in channels {
            let g = 0.5 * ch.rate;
            for a in 0..n {
                for b in 0..n {
                    m[(a, b)] += g * ch.coefficients[a] * ch.coefficients[b];
                }
            }
        }
        m
    }

    pub fn emission_matrix(&self) -> DMatrix<f64> {
        Self::rate_matrix(&self.emission, self.n_qubits)
    }

    pub fn absorption_matrix(&self) -> DMatrix<f64> {
        Self::rate_matrix(&self.absorption, self.n_qubits)
    }

    pub fn is_empty(&self) -> bool {
        self.emission.is_empty() && self.absorption.is_empty()
    }
}
