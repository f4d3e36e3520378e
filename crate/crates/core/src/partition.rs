//! Thermodynamic bounds relating the full cavity–spin partition function to
//! the coherent-state (classical photon) one:
//!
//! ```text
//! Z̄ ≤ Z ≤ e^{βΩ} Z̄,   Z̄ = (1/π) ∫ d²α Tr_S e^{−β H(α)},
//! H(α) = H_S + Ω|α|² + (α + α*) O.
//! ```
//!
//! The imaginary part of α integrates out analytically, leaving
//! `Z̄ = (βΩπ)^{−1/2} ∫ dx Tr e^{−β(H_S + Ωx² + 2xO)}`, done by trapezoid
//! refinement (spectrally accurate for Gaussian-decaying integrands).
//! When `[H_S, O] = 0` this reduces to `Tr e^{−β H_eff}/(βΩ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::build_full_hamiltonian;
use crate::sparse::{LinearOperator, SparseOperator};
use crate::spectra::{dense_eigenvalues, dense_eigh_capped};
use crate::spin::CMatrix;
use crate::units::Thermal;

/// Fock truncation is doubled until the thermal weight of the top photon
/// level drops below this.
pub const FOCK_TAIL_TOL: f64 = 1e-10;

/// Largest block handed to the dense solver while growing the Fock space.
pub const MAX_BLOCK_DIM: usize = 6144;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionBounds {
    pub beta_omega: f64,
    /// ln Z of the truncated full Hamiltonian.
    pub ln_z: f64,
    /// ln Z̄ of the coherent-state integral.
    pub ln_z_bar: f64,
    pub n_fock: usize,
    /// Thermal probability of the highest retained photon level.
    pub top_occupation: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl PartitionBounds {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Evaluates both sides of the bounds with adaptive Fock truncation.
/// `rel_slack` absorbs round-off in the comparison (log-space, relative).
pub fn partition_bounds(
    h_s: &SparseOperator,
    coupling: &SparseOperator,
    omega: f64,
    thermal: Thermal,
    rel_slack: f64,
) -> Result<PartitionBounds> {
    let beta = thermal.beta().ok_or_else(|| Error::invalid("partition bounds need T > 0"))?;
    let ln_z_bar = ln_coherent_partition(&h_s.dense(), &coupling.dense(), omega, beta)?;
    let mut n_fock = 8;
    let (ln_z, top) = loop {
        let (ln_z, top) = ln_full_partition(h_s, coupling, omega, beta, n_fock)?;
        if top < FOCK_TAIL_TOL {
            break (ln_z, top);
        }
        n_fock *= 2;
    };
    let slack = rel_slack * ln_z.abs().max(1.0);
    Ok(PartitionBounds {
        beta_omega: beta * omega,
        ln_z,
        ln_z_bar,
        n_fock,
        top_occupation: top,
        lower_holds: ln_z_bar <= ln_z + slack,
        upper_holds: ln_z <= beta * omega + ln_z_bar + slack,
    })
}

/// `(ln Z, p_top)` for photon numbers 0..=n_fock. The joint space is split
/// into the connected components of the Hamiltonian's sparsity graph (the
/// parity sectors for Ising chains) before dense diagonalization.
pub fn ln_full_partition(
    h_s: &SparseOperator,
    coupling: &SparseOperator,
    omega: f64,
    beta: f64,
    n_fock: usize,
) -> Result<(f64, f64)> {
    let h = build_full_hamiltonian(h_s, coupling, omega, n_fock)?;
    let levels = n_fock + 1;
    let blocks = components(&h);
    let mut energies = Vec::new();
    let mut top_weights = Vec::new();
    for block in &blocks {
        let m = CMatrix::from_fn(block.len(), block.len(), |r, c| h.get(block[r], block[c]));
        let spec = dense_eigh_capped(&m, MAX_BLOCK_DIM)?;
        let vecs = spec.eigenvectors.as_ref().expect("dense solver returns vectors");
        for (i, &e) in spec.eigenvalues.iter().enumerate() {
            let top: f64 = block
                .iter()
                .enumerate()
                .filter(|(_, &g)| g % levels == n_fock)
                .map(|(r, _)| vecs[(r, i)].norm_sqr())
                .sum();
            energies.push(e);
            top_weights.push(top);
        }
    }
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let top = w.iter().zip(&top_weights).map(|(a, b)| a * b).sum::<f64>() / z;
    Ok((z.ln() - beta * e0, top))
}

fn components(h: &SparseOperator) -> Vec<Vec<usize>> {
    let n = h.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (r, c, _) in h.entries() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// `ln Z̄` by trapezoid quadrature over the real quadrature x, refined until
/// successive estimates agree to 1e-13.
pub fn ln_coherent_partition(h_s: &CMatrix, coupling: &CMatrix, omega: f64, beta: f64) -> Result<f64> {
    if h_s.shape() != coupling.shape() || h_s.nrows() != h_s.ncols() {
        return Err(Error::invalid("H_S and O must be square and of equal size"));
    }
    if !(omega > 0.0) || !(beta > 0.0) {
        return Err(Error::invalid("Ω and β must be > 0"));
    }
    let o_norm = dense_eigenvalues(coupling, usize::MAX)?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // Integrand ∝ exp(−βΩ(x + o/Ω)² + …): cover every displaced Gaussian
    // out to 10 widths.
    let half = o_norm / omega + 10.0 / (beta * omega).sqrt();
    let log_integrand = |x: f64| -> Result<f64> {
        let hx = h_s + coupling.scale(2.0 * x);
        let ev = dense_eigenvalues(&hx, usize::MAX)?;
        let e0 = ev[0];
        let s: f64 = ev.iter().map(|e| (-beta * (e - e0)).exp()).sum();
        Ok(s.ln() - beta * (e0 + omega * x * x))
    };

    let mut n = 64usize;
    let mut logs: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;
    loop {
        let h = 2.0 * half / n as f64;
        // Reuse previous nodes: new nodes sit at odd indices.
        let mut next = Vec::with_capacity(n + 1);
        for i in 0..=n {
            if !logs.is_empty() && i % 2 == 0 {
                next.push(logs[i / 2]);
            } else {
                next.push(log_integrand(-half + h * i as f64)?);
            }
        }
        logs = next;
        let lmax = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs
            .iter()
            .enumerate()
            .map(|(i, l)| if i == 0 || i == n { 0.5 } else { 1.0 } * (l - lmax).exp())
            .sum();
        let est = lmax + (sum * h).ln() - 0.5 * (std::f64::consts::PI * beta * omega).ln();
        if (est - prev).abs() <= 1e-13 * est.abs().max(1.0) {
            return Ok(est);
        }
        if n >= 1 << 16 {
            return Err(Error::ResourceLimit("coherent-state quadrature did not converge".into()));
        }
        prev = est;
        n *= 2;
    }
}

/// `ln Tr e^{−β H}` of a dense hermitian matrix.
pub fn ln_trace_exp(h: &CMatrix, beta: f64) -> Result<f64> {
    let ev = dense_eigenvalues(h, usize::MAX)?;
    let e0 = ev[0];
    Ok(ev.iter().map(|e| (-beta * (e - e0)).exp()).sum::<f64>().ln() - beta * e0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_chain_hamiltonian, Geometry, IsingChainModel};

    fn chain(n: usize, omega_z: f64, j: f64, lambda: f64) -> (SparseOperator, SparseOperator) {
        let m = IsingChainModel::uniform(n, omega_z, j, Geometry::NearestNeighborPbc, lambda);
        let ops = build_chain_hamiltonian(&m).unwrap();
        (ops.h_s, ops.coupling)
    }

    #[test]
    fn commuting_case_matches_effective_trace() {
        // ω_z = 0: O commutes with H_S and Z̄ = Tr e^{−βH_eff}/(βΩ).
        let (h, o) = chain(2, 0.0, 0.4, 0.7);
        for beta in [0.3, 1.0, 4.0] {
            let heff = h.dense() - o.dense() * o.dense();
            let expect = ln_trace_exp(&heff, beta).unwrap() - (beta * 1.0f64).ln();
            let got = ln_coherent_partition(&h.dense(), &o.dense(), 1.0, beta).unwrap();
            assert!((got - expect).abs() < 1e-11, "β={beta}: {got} vs {expect}");
        }
    }

    #[test]
    fn decoupled_full_partition_is_product() {
        let (h, o) = chain(2, 1.0, 0.0, 0.0);
        let beta = 2.0;
        let (ln_z, top) = ln_full_partition(&h, &o, 1.5, beta, 40).unwrap();
        let spins = ln_trace_exp(&h.dense(), beta).unwrap();
        let photons = -(-(-beta * 1.5f64).exp()).ln_1p();
        assert!((ln_z - spins - photons).abs() < 1e-12);
        assert!(top < 1e-20);
    }

    #[test]
    fn bounds_hold_for_small_chain() {
        let (h, o) = chain(2, 1.0, 0.3, 0.5);
        let b = partition_bounds(&h, &o, 1.0, Thermal::from_energy(1.0).unwrap(), 1e-12).unwrap();
        assert!(b.holds(), "{b:?}");
        assert!(b.top_occupation < FOCK_TAIL_TOL);
    }

    #[test]
    fn zero_temperature_rejected() {
        let (h, o) = chain(2, 1.0, 0.3, 0.5);
        assert!(partition_bounds(&h, &o, 1.0, Thermal::ZERO, 0.0).is_err());
    }

    #[test]
    fn components_split_parity_sectors() {
        let (h, o) = chain(2, 1.0, 0.3, 0.5);
        let full = build_full_hamiltonian(&h, &o, 1.0, 5).unwrap();
        let blocks = components(&full);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks.iter().map(Vec::len).sum::<usize>(), 24);
    }
}
