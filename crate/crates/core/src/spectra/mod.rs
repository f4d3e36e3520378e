//! Eigensolvers producing [`Spectrum`]s for response-function sums.

mod dense;
mod lanczos;

pub use dense::{dense_eigenvalues, dense_eigh, dense_eigh_capped, DEFAULT_DENSE_CAP};
pub use lanczos::{krylov_ritz_basis, lanczos, LanczosConfig, Sector};

use num_complex::Complex64;
use serde::Serialize;

use crate::spin::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Lanczos,
    /// Ground states plus Ritz pairs of a Krylov space built from `O|ψ_0⟩`.
    ResponseKrylov,
}

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are the columns
/// of `eigenvectors`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<CMatrix>,
    /// ‖H v − ε v‖ per pair.
    pub residuals: Vec<f64>,
    /// Per-pair convergence flag (always true for dense).
    pub converged: Vec<bool>,
    pub method: Method,
    pub krylov_dim: Option<usize>,
    /// Every eigenstate with energy ≤ this value is present. `+∞` for a
    /// complete spectrum.
    pub covered_up_to: f64,
    /// Largest |V†V − 1| seen in the Krylov basis (Lanczos only).
    pub gram_defect: Option<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.covered_up_to == f64::INFINITY
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn vector(&self, i: usize) -> Option<Vec<Complex64>> {
        self.eigenvectors.as_ref().map(|v| v.column(i).iter().copied().collect())
    }

    /// Largest |⟨v_i|v_j⟩ − δ_ij|.
    pub fn orthonormality_defect(&self) -> f64 {
        match &self.eigenvectors {
            None => 0.0,
            Some(v) => {
                let g = v.adjoint() * v;
                let mut worst = 0.0f64;
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
                    }
                }
                worst
            }
        }
    }
}
