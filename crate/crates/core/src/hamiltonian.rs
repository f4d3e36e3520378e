//! Model definitions and Hamiltonian builders.
//!
//! Spin-1/2 chains use the computational basis with site 0 as the most
//! significant bit; bit value 0 is spin up (σ_z = +1). The light–matter
//! coupling operator is `O = Σ_j (λ_j/√N)(e^{iθ_j} S⁺_j + h.c.)`, which for
//! spin 1/2 and θ_j = 0 equals `Σ_j (λ_j/√N) σ_x^j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{LinearOperator, SparseOperator};
use crate::spin::{CMatrix, SpinOperatorSet};
use crate::units::PhysicalConstants;

pub const DEFAULT_MAX_SITES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteCoupling {
    /// rad/s
    pub lambda: f64,
    /// rad
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// Bonds (j, j+1 mod N), each counted once.
    NearestNeighborPbc,
    /// Every pair i < j with coupling J/N.
    AllToAllNormalized,
}

/// `H_S = (ω_z/2) Σ σ_z^j − (J/2) Σ_{bonds} J_b/J · σ_x^i σ_x^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingChainModel {
    pub n_sites: usize,
    pub omega_z: f64,
    pub j: f64,
    pub geometry: Geometry,
    pub site_couplings: Vec<SiteCoupling>,
}

impl IsingChainModel {
    pub fn uniform(n_sites: usize, omega_z: f64, j: f64, geometry: Geometry, lambda: f64) -> Self {
        IsingChainModel {
            n_sites,
            omega_z,
            j,
            geometry,
            site_couplings: vec![SiteCoupling { lambda, theta: 0.0 }; n_sites],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::invalid("n_sites must be >= 1"));
        }
        if self.site_couplings.len() != self.n_sites {
            return Err(Error::invalid(format!(
                "site_couplings has {} entries for {} sites",
                self.site_couplings.len(),
                self.n_sites
            )));
        }
        if !self.omega_z.is_finite() || !self.j.is_finite() {
            return Err(Error::invalid("omega_z and J must be finite"));
        }
        if self.site_couplings.iter().any(|c| !c.lambda.is_finite() || !c.theta.is_finite()) {
            return Err(Error::invalid("site couplings must be finite"));
        }
        Ok(())
    }

    /// Weighted bond list (i, j, weight) with weight multiplying J.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_sites;
        match self.geometry {
            Geometry::NearestNeighborPbc => match n {
                1 => Vec::new(),
                2 => vec![(0, 1, 1.0)],
                _ => (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect(),
            },
            Geometry::AllToAllNormalized => {
                let w = 1.0 / n as f64;
                (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k, w))).collect()
            }
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        1usize << self.n_sites
    }
}

/// Bare spin Hamiltonian and light–matter coupling operator of a chain.
#[derive(Clone, Debug)]
pub struct ChainOperators {
    pub h_s: SparseOperator,
    pub coupling: SparseOperator,
}

pub fn build_chain_hamiltonian(model: &IsingChainModel) -> Result<ChainOperators> {
    build_chain_hamiltonian_capped(model, DEFAULT_MAX_SITES)
}

pub fn build_chain_hamiltonian_capped(model: &IsingChainModel, max_sites: usize) -> Result<ChainOperators> {
    model.validate()?;
    let n = model.n_sites;
    if n > max_sites {
        return Err(Error::ResourceLimit(format!(
            "{n} sites exceeds the configured cap of {max_sites} (dimension 2^{n})"
        )));
    }
    let dim = 1usize << n;
    let bit = |j: usize| 1usize << (n - 1 - j);
    let bonds = model.bonds();

    let mut h = Vec::with_capacity(dim * (1 + bonds.len()));
    let mut o = Vec::with_capacity(dim * n);
    for state in 0..dim {
        let zsum: f64 = (0..n).map(|j| if state & bit(j) == 0 { 1.0 } else { -1.0 }).sum();
        h.push((state, state, Complex64::new(0.5 * model.omega_z * zsum, 0.0)));
        for &(a, b, w) in &bonds {
            let flipped = state ^ bit(a) ^ bit(b);
            h.push((flipped, state, Complex64::new(-0.5 * model.j * w, 0.0)));
        }
        for (j, c) in model.site_couplings.iter().enumerate() {
            let amp = c.lambda / (n as f64).sqrt();
            let flipped = state ^ bit(j);
            // S⁺ raises a down spin (bit 1) to up (bit 0) with amplitude e^{iθ}.
            let phase = if state & bit(j) != 0 { c.theta } else { -c.theta };
            o.push((flipped, state, Complex64::from_polar(amp, phase)));
        }
    }
    Ok(ChainOperators {
        h_s: SparseOperator::from_triplets(dim, h)?,
        coupling: SparseOperator::from_triplets(dim, o)?,
    })
}

/// Eigenvalues (±1) of the parity `Π = Π_j σ_z^j` on the chain basis.
pub fn parity_signs(n_sites: usize) -> Vec<f64> {
    (0..1usize << n_sites)
        .map(|s| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Matrix-free `H_eff = H_S − O²/Ω`.
#[derive(Clone, Copy, Debug)]
pub struct EffectiveHamiltonian<'a> {
    h_s: &'a SparseOperator,
    coupling: &'a SparseOperator,
    omega: f64,
}

pub fn build_effective_hamiltonian<'a>(
    h_s: &'a SparseOperator,
    coupling: &'a SparseOperator,
    omega: f64,
) -> Result<EffectiveHamiltonian<'a>> {
    if h_s.dim() != coupling.dim() {
        return Err(Error::invalid(format!(
            "H_S has dimension {} but O has {}",
            h_s.dim(),
            coupling.dim()
        )));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid(format!("cavity frequency must be > 0, got {omega}")));
    }
    Ok(EffectiveHamiltonian { h_s, coupling, omega })
}

impl EffectiveHamiltonian<'_> {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Assembled sparse form, for callers that need many products.
    pub fn assemble(&self) -> Result<SparseOperator> {
        let o2 = self.coupling.matmul(self.coupling)?;
        self.h_s.combine(1.0, &o2, -1.0 / self.omega)
    }
}

impl LinearOperator for EffectiveHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.h_s.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut ox = vec![Complex64::new(0.0, 0.0); x.len()];
        let mut oox = vec![Complex64::new(0.0, 0.0); x.len()];
        self.h_s.apply(x, y);
        self.coupling.apply(x, &mut ox);
        self.coupling.apply(&ox, &mut oox);
        let inv = 1.0 / self.omega;
        for (yi, v) in y.iter_mut().zip(&oox) {
            *yi -= v * inv;
        }
    }
}

/// `H = H_S ⊗ 1 + Ω 1 ⊗ a†a + O ⊗ (a† + a)` with photon numbers 0..=n_fock.
/// The photon index is the fast (inner) index.
pub fn build_full_hamiltonian(
    h_s: &SparseOperator,
    coupling: &SparseOperator,
    omega: f64,
    n_fock: usize,
) -> Result<SparseOperator> {
    if n_fock < 1 {
        return Err(Error::invalid("n_fock must be >= 1"));
    }
    if h_s.dim() != coupling.dim() {
        return Err(Error::invalid("H_S and O dimensions differ"));
    }
    let levels = n_fock + 1;
    let total = h_s.dim().checked_mul(levels).filter(|&d| d <= 1 << DEFAULT_MAX_SITES);
    let Some(total) = total else {
        return Err(Error::ResourceLimit(format!(
            "joint dimension {} x {levels} exceeds 2^{DEFAULT_MAX_SITES}",
            h_s.dim()
        )));
    };
    let number = SparseOperator::from_triplets(
        levels,
        (0..levels).map(|k| (k, k, Complex64::new(omega * k as f64, 0.0))).collect(),
    )?;
    let quadrature = SparseOperator::from_triplets(
        levels,
        (0..n_fock)
            .flat_map(|k| {
                let a = ((k + 1) as f64).sqrt();
                [(k, k + 1, Complex64::new(a, 0.0)), (k + 1, k, Complex64::new(a, 0.0))]
            })
            .collect(),
    )?;
    let spin_part = h_s.kron(&SparseOperator::identity(levels));
    let photon_part = SparseOperator::identity(h_s.dim()).kron(&number);
    let coupling_part = coupling.kron(&quadrature);
    let h = spin_part.combine(1.0, &photon_part, 1.0)?.combine(1.0, &coupling_part, 1.0)?;
    debug_assert_eq!(h.dim(), total);
    Ok(h)
}

/// Multimode reduction: the effective coupling seen by the spins depends only
/// on `Σ_k λ_k²/Ω_k`. Returns the single-mode λ that reproduces that sum at
/// the reference frequency `omega_ref`.
pub fn multimode_effective_lambda(modes: &[(f64, f64)], omega_ref: f64) -> Result<f64> {
    if !(omega_ref > 0.0) {
        return Err(Error::invalid("reference frequency must be > 0"));
    }
    let mut g = 0.0;
    for &(lambda, omega) in modes {
        if !(omega > 0.0) || lambda < 0.0 {
            return Err(Error::invalid("each mode needs Ω_k > 0 and λ_k >= 0"));
        }
        g += lambda * lambda / omega;
    }
    Ok((g * omega_ref).sqrt())
}

/// Single-molecule giant-spin model with an easy axis along x and a field
/// along (0, sin φ, −cos φ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GiantSpinModel {
    pub s: f64,
    /// Uniaxial anisotropy, rad/s (> 0 for easy axis x).
    pub d: f64,
    /// Transverse anisotropy, rad/s.
    pub e: f64,
    /// Applied field magnitude, tesla.
    pub b_mag: f64,
    /// Field angle, rad.
    pub phi: f64,
    /// Mean-field exchange, rad/s.
    pub j: f64,
}

impl GiantSpinModel {
    /// Fe8 parameters: S = 10, D/k_B = 0.294 K, E/k_B = 0.046 K,
    /// J/k_B = 2.85 mK, φ = 68°, at zero field.
    pub fn fe8(consts: &PhysicalConstants) -> Self {
        GiantSpinModel {
            s: 10.0,
            d: consts.kelvin_to_rad_s(0.294),
            e: consts.kelvin_to_rad_s(0.046),
            b_mag: 0.0,
            phi: 68f64.to_radians(),
            j: consts.kelvin_to_rad_s(2.85e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) {
            return Err(Error::invalid("giant-spin D must be > 0 (easy axis x)"));
        }
        if ![self.e, self.b_mag, self.phi, self.j].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("giant-spin parameters must be finite"));
        }
        SpinOperatorSet::new(self.s).map(|_| ())
    }

    /// `−D S_x² + E(S_z² − S_y²) − (g μ_B/ħ) B·S`, without exchange.
    pub fn single_ion_hamiltonian(&self, consts: &PhysicalConstants) -> Result<CMatrix> {
        self.validate()?;
        let ops = SpinOperatorSet::new(self.s)?;
        let zeeman = consts.tesla_to_rad_s(self.b_mag);
        let h = (&ops.sx * &ops.sx).scale(-self.d)
            + (&ops.sz * &ops.sz - &ops.sy * &ops.sy).scale(self.e)
            - (ops.sy.scale(self.phi.sin()) - ops.sz.scale(self.phi.cos())).scale(zeeman);
        Ok(h)
    }
}

/// A cavity mode with collective rms coupling λ̄.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// rad/s
    pub omega: f64,
    /// rad/s
    pub lambda_bar: f64,
    pub material: Option<Material>,
}

/// Spin density (per m³) and filling factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub rho: f64,
    pub nu: f64,
}

impl CavitySpec {
    pub fn new(omega: f64, lambda_bar: f64) -> Result<Self> {
        let c = CavitySpec { omega, lambda_bar, material: None };
        c.validate()?;
        Ok(c)
    }

    pub fn from_material(omega: f64, material: Material, consts: &PhysicalConstants) -> Result<Self> {
        let lambda_bar = crate::response::lambda_bar_from_material(material.rho, material.nu, omega, consts)?;
        let c = CavitySpec { omega, lambda_bar, material: Some(material) };
        c.validate_with(consts)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(&PhysicalConstants::default())
    }

    pub fn validate_with(&self, consts: &PhysicalConstants) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid(format!("cavity Ω must be > 0, got {}", self.omega)));
        }
        if !(self.lambda_bar.is_finite() && self.lambda_bar >= 0.0) {
            return Err(Error::invalid(format!("λ̄ must be >= 0, got {}", self.lambda_bar)));
        }
        if let Some(m) = self.material {
            let expect = crate::response::lambda_bar_from_material(m.rho, m.nu, self.omega, consts)?;
            let scale = expect.abs().max(f64::MIN_POSITIVE);
            if (expect - self.lambda_bar).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "λ̄ = {} disagrees with the material value {expect}",
                    self.lambda_bar
                )));
            }
        }
        Ok(())
    }

    /// Cavity-mediated exchange shift in the S-operator convention
    /// (`S⁺ + S⁻ = 2 S_x`): `4 λ̄²/Ω`.
    pub fn exchange_shift_spin(&self) -> f64 {
        4.0 * self.lambda_bar * self.lambda_bar / self.omega
    }

    /// Same shift in the Pauli convention (σ_x = 2 S_x): `λ̄²/Ω`.
    pub fn exchange_shift_pauli(&self) -> f64 {
        self.lambda_bar * self.lambda_bar / self.omega
    }
}

/// Free spin S in a field along z with coupling λ along x:
/// `H = ω_z S_z`, `O = λ (S⁺ + S⁻)`.
pub fn single_spin_dicke(s: f64, omega_z: f64, lambda: f64) -> Result<(CMatrix, CMatrix)> {
    let ops = SpinOperatorSet::new(s)?;
    Ok((ops.sz.scale(omega_z), (&ops.splus + &ops.sminus).scale(lambda)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::max_abs;

    fn pauli() -> (CMatrix, CMatrix, CMatrix) {
        let s = SpinOperatorSet::new(0.5).unwrap();
        (s.sx.scale(2.0), s.sz.scale(2.0), s.identity())
    }

    fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a.kronecker(b)
    }

    /// Operator `op` acting on site `j` of an n-site chain, by explicit Kronecker products.
    fn site_op(op: &CMatrix, j: usize, n: usize) -> CMatrix {
        let (_, _, id) = pauli();
        let mut out = if j == 0 { op.clone() } else { id.clone() };
        for k in 1..n {
            out = kron(&out, if k == j { op } else { &id });
        }
        out
    }

    #[test]
    fn two_free_spins_spectrum() {
        let m = IsingChainModel::uniform(2, 1.0, 0.0, Geometry::NearestNeighborPbc, 0.0);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let mut ev: Vec<f64> = ops.h_s.dense().symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(ops.coupling.nnz(), 0);
    }

    #[test]
    fn coupling_matches_kronecker_construction() {
        let (sx, sz, _) = pauli();
        let n = 3;
        let lam = 0.7;
        let m = IsingChainModel::uniform(n, 1.3, 0.4, Geometry::NearestNeighborPbc, lam);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let mut o = CMatrix::zeros(8, 8);
        let mut h = CMatrix::zeros(8, 8);
        for j in 0..n {
            o += site_op(&sx, j, n).scale(lam / (n as f64).sqrt());
            h += site_op(&sz, j, n).scale(0.65);
            h -= (site_op(&sx, j, n) * site_op(&sx, (j + 1) % n, n)).scale(0.2);
        }
        assert!(max_abs(&(ops.coupling.dense() - o)) < 1e-14);
        assert!(max_abs(&(ops.h_s.dense() - h)) < 1e-14);
    }

    #[test]
    fn all_to_all_uses_j_over_n() {
        let (sx, _, _) = pauli();
        let n = 4;
        let m = IsingChainModel::uniform(n, 0.0, 2.0, Geometry::AllToAllNormalized, 0.0);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let mut h = CMatrix::zeros(16, 16);
        for i in 0..n {
            for k in i + 1..n {
                h -= (site_op(&sx, i, n) * site_op(&sx, k, n)).scale(0.5 * 2.0 / n as f64);
            }
        }
        assert!(max_abs(&(ops.h_s.dense() - h)) < 1e-14);
    }

    #[test]
    fn phases_enter_as_ladder_operators() {
        let n = 2;
        let mut m = IsingChainModel::uniform(n, 1.0, 0.0, Geometry::NearestNeighborPbc, 1.0);
        m.site_couplings[1].theta = 0.9;
        let ops = build_chain_hamiltonian(&m).unwrap();
        let s = SpinOperatorSet::new(0.5).unwrap();
        let e = Complex64::from_polar(1.0, 0.9);
        let single = s.splus.map(|z| z * e) + s.sminus.map(|z| z * e.conj());
        let mut o = site_op(&(&s.splus + &s.sminus), 0, n);
        o += site_op(&single, 1, n);
        o = o.scale(1.0 / 2f64.sqrt());
        assert!(max_abs(&(ops.coupling.dense() - o)) < 1e-14);
        assert!(ops.coupling.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn site_cap_is_enforced() {
        let m = IsingChainModel::uniform(5, 1.0, 0.0, Geometry::NearestNeighborPbc, 0.0);
        assert!(matches!(build_chain_hamiltonian_capped(&m, 4), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn fourteen_site_chain_dimension() {
        let m = IsingChainModel::uniform(14, 1.0, 0.3, Geometry::NearestNeighborPbc, 0.5);
        let ops = build_chain_hamiltonian(&m).unwrap();
        assert_eq!(ops.h_s.dim(), 16384);
        assert!(ops.h_s.hermiticity_defect() <= 1e-12);
        assert!(ops.coupling.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn parity_commutes_and_anticommutes() {
        let m = IsingChainModel::uniform(4, 1.0, 0.7, Geometry::NearestNeighborPbc, 0.4);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let signs = parity_signs(4);
        let p = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            16,
            signs.iter().map(|&s| Complex64::new(s, 0.0)),
        ));
        let h = ops.h_s.dense();
        let o = ops.coupling.dense();
        let heff = build_effective_hamiltonian(&ops.h_s, &ops.coupling, 2.0).unwrap().to_dense();
        assert!(max_abs(&(&h * &p - &p * &h)) < 1e-10);
        assert!(max_abs(&(&heff * &p - &p * &heff)) < 1e-10);
        assert!(max_abs(&(&o * &p + &p * &o)) < 1e-10);
    }

    #[test]
    fn effective_hamiltonian_single_spin_closed_form() {
        let m = IsingChainModel::uniform(1, 1.5, 0.0, Geometry::NearestNeighborPbc, 0.8);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let heff = build_effective_hamiltonian(&ops.h_s, &ops.coupling, 2.0).unwrap().to_dense();
        let (_, sz, id) = pauli();
        let expect = sz.scale(0.75) - id.scale(0.64 / 2.0);
        assert!(max_abs(&(heff - expect)) < 1e-14);
    }

    #[test]
    fn effective_hamiltonian_rejects_mismatch() {
        let a = SparseOperator::identity(2);
        let b = SparseOperator::identity(4);
        assert!(build_effective_hamiltonian(&a, &b, 1.0).is_err());
        assert!(build_effective_hamiltonian(&a, &a, 0.0).is_err());
    }

    #[test]
    fn effective_hamiltonian_decoupled_limit() {
        let m = IsingChainModel::uniform(3, 1.0, 0.5, Geometry::NearestNeighborPbc, 0.0);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let heff = build_effective_hamiltonian(&ops.h_s, &ops.coupling, 1.0).unwrap();
        assert!(max_abs(&(heff.to_dense() - ops.h_s.dense())) == 0.0);
    }

    #[test]
    fn full_hamiltonian_decoupled_is_direct_sum() {
        let m = IsingChainModel::uniform(2, 1.0, 0.3, Geometry::NearestNeighborPbc, 0.0);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let h = build_full_hamiltonian(&ops.h_s, &ops.coupling, 0.7, 3).unwrap();
        let mut got: Vec<f64> = h.dense().symmetric_eigen().eigenvalues.iter().cloned().collect();
        got.sort_by(f64::total_cmp);
        let spin: Vec<f64> = ops.h_s.dense().symmetric_eigen().eigenvalues.iter().cloned().collect();
        let mut expect: Vec<f64> =
            spin.iter().flat_map(|e| (0..4).map(move |k| e + 0.7 * k as f64)).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(build_full_hamiltonian(&ops.h_s, &ops.coupling, 0.7, 0).is_err());
    }

    #[test]
    fn full_hamiltonian_second_order_shift() {
        // One spin: ground |↓,0⟩ couples only to |↑,1⟩ at energy ω_z + Ω.
        let (wz, om, lam) = (1.0, 1.3, 1e-3);
        let m = IsingChainModel::uniform(1, wz, 0.0, Geometry::NearestNeighborPbc, lam);
        let ops = build_chain_hamiltonian(&m).unwrap();
        let h = build_full_hamiltonian(&ops.h_s, &ops.coupling, om, 2).unwrap();
        let e0 = h.dense().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        let expect = -wz / 2.0 - lam * lam / (wz + om);
        assert!((e0 - expect).abs() < 1e-11, "{e0} vs {expect}");
    }

    #[test]
    fn multimode_reduction() {
        let l = multimode_effective_lambda(&[(1.0, 2.0), (2.0, 4.0)], 3.0).unwrap();
        assert!((l * l / 3.0 - 1.5).abs() < 1e-14);
        assert!(multimode_effective_lambda(&[(1.0, 0.0)], 1.0).is_err());
    }

    #[test]
    fn fe8_single_ion_is_hermitian_with_21_levels() {
        let consts = PhysicalConstants::default();
        let mut fe8 = GiantSpinModel::fe8(&consts);
        fe8.b_mag = 1.0;
        let h = fe8.single_ion_hamiltonian(&consts).unwrap();
        assert_eq!(h.nrows(), 21);
        assert!(max_abs(&(&h - h.adjoint())) < 1e-12 * consts.kelvin_to_rad_s(1.0));
    }

    #[test]
    fn cavity_spec_checks_material_consistency() {
        let consts = PhysicalConstants::default();
        let mat = Material { rho: 5.1e26, nu: 0.5 };
        let c = CavitySpec::from_material(1.4e9, mat, &consts).unwrap();
        assert!(c.validate().is_ok());
        let mut bad = c;
        bad.lambda_bar *= 1.0 + 1e-9;
        assert!(bad.validate().is_err());
        assert!(CavitySpec::new(0.0, 1.0).is_err());
        assert!(CavitySpec::new(1.0, -1.0).is_err());
    }
}
