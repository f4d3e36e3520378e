//! Cavity transmission through a spin-1/2 ensemble, linearized around the
//! mean-field equilibrium:
//!
//! ```text
//! t(ω) = −iκ / [(ω − Ω) + iκ + 4λ̄² χ⊥(ω)],
//! χ⊥(ω) = ω_z ⟨σ_z⟩₀ / [(ω + iγ)² − ω_z² − 16 λ̄⁴ ⟨σ_x⟩₀² / Ω²].
//! ```
//!
//! The spin damping enters with the same sign as the cavity loss `+iκ`, so
//! the system is passive and `|t| ≤ 1`. The normalization is fixed by the
//! empty-cavity limit `t(Ω) = −1`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{CavitySpec, Geometry};
use crate::meanfield::{solve_selfconsistent, MeanFieldModel, MeanFieldProblem, Sublattices};
use crate::response::{dicke_bracket, dicke_critical_coupling};
use crate::units::Thermal;

/// `t(ω)` for one spin column; `sz0 = ⟨σ_z⟩₀`, `sx0 = ⟨σ_x⟩₀`.
#[allow(clippy::too_many_arguments)]
pub fn transmission_point(
    omega: f64,
    omega_z: f64,
    cavity_omega: f64,
    lambda_bar: f64,
    kappa: f64,
    gamma: f64,
    sz0: f64,
    sx0: f64,
) -> Result<Complex64> {
    if !(kappa >= 0.0) || !(gamma >= 0.0) {
        return Err(Error::invalid("κ and γ must be >= 0"));
    }
    if !(cavity_omega > 0.0) {
        return Err(Error::invalid("cavity frequency must be > 0"));
    }
    if !(-1.0..=1.0).contains(&sz0) || !(-1.0..=1.0).contains(&sx0) {
        return Err(Error::invalid(format!("Pauli expectations out of range: σ_z={sz0}, σ_x={sx0}")));
    }
    let l2 = lambda_bar * lambda_bar;
    let w = Complex64::new(omega, gamma);
    let chi_den = w * w - omega_z * omega_z - 16.0 * l2 * l2 * sx0 * sx0 / (cavity_omega * cavity_omega);
    let spin = if l2 == 0.0 || omega_z * sz0 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        if chi_den.norm() == 0.0 {
            return Err(Error::invalid("spin susceptibility denominator vanishes"));
        }
        4.0 * l2 * omega_z * sz0 / chi_den
    };
    let den = Complex64::new(omega - cavity_omega, kappa) + spin;
    if den.norm() == 0.0 {
        return Err(Error::invalid("transmission denominator vanishes"));
    }
    Ok(Complex64::new(0.0, -kappa) / den)
}

/// Complex poles of `t(ω)`, sorted by real part: the roots of
/// `[(ω − Ω) + iκ]·[(ω + iγ)² − ω_z² − Δ²] + 4λ̄² ω_z ⟨σ_z⟩₀` with
/// `Δ² = 16 λ̄⁴ ⟨σ_x⟩₀²/Ω²`. Poles with `Re ω > 0` and `|Im ω| < Re ω` show
/// up as resonances, though weak ones may not produce a visible maximum.
#[allow(clippy::too_many_arguments)]
pub fn transmission_poles(
    omega_z: f64,
    cavity_omega: f64,
    lambda_bar: f64,
    kappa: f64,
    gamma: f64,
    sz0: f64,
    sx0: f64,
) -> Result<[Complex64; 3]> {
    if ![omega_z, cavity_omega, lambda_bar, kappa, gamma, sz0, sx0].iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("pole inputs must be finite"));
    }
    let l2 = lambda_bar * lambda_bar;
    let a = Complex64::new(-cavity_omega, kappa);
    let b = Complex64::new(0.0, 2.0 * gamma);
    let d = Complex64::from(-gamma * gamma - omega_z * omega_z - 16.0 * l2 * l2 * sx0 * sx0 / (cavity_omega * cavity_omega));
    // Monic cubic ω³ + c2 ω² + c1 ω + c0 from (ω + a)(ω² + bω + d) + e.
    let c = [a * d + 4.0 * l2 * omega_z * sz0, d + a * b, a + b];
    let companion = faer::Mat::<Complex64>::from_fn(3, 3, |r, k| match (r, k) {
        (0, k) => -c[2 - k],
        (r, k) if r == k + 1 => Complex64::new(1.0, 0.0),
        _ => Complex64::new(0.0, 0.0),
    });
    let mut roots = companion
        .eigenvalues()
        .map_err(|e| Error::invalid(format!("pole computation failed: {e:?}")))?;
    roots.sort_by(|x, y| x.re.total_cmp(&y.re));
    Ok([roots[0], roots[1], roots[2]])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnInfo {
    pub omega_z: f64,
    /// ⟨σ_z⟩₀.
    pub sz0: f64,
    /// ⟨σ_x⟩₀.
    pub sx0: f64,
    /// λ̄ at or above the closed-form critical coupling at this ω_z and T.
    pub superradiant: bool,
    pub mean_field_converged: bool,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransmissionGrid {
    pub omega_grid: Vec<f64>,
    pub omega_z_grid: Vec<f64>,
    /// k_BT/ħ, rad/s.
    pub thermal: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub cavity_omega: f64,
    pub lambda_bar: f64,
    /// `t[i][k]` at ω_z = omega_z_grid[i], ω = omega_grid[k].
    pub t: Vec<Vec<Complex64>>,
    pub columns: Vec<ColumnInfo>,
}

impl TransmissionGrid {
    pub fn abs_column(&self, i: usize) -> Vec<f64> {
        self.t[i].iter().map(|z| z.norm()).collect()
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|x| x.is_finite())
}

/// Fills `t(ω, ω_z)` from the spin-1/2 Dicke mean field at temperature T.
pub fn transmission_map(
    omega_grid: &[f64],
    omega_z_grid: &[f64],
    thermal: Thermal,
    cavity: &CavitySpec,
    kappa: f64,
    gamma: f64,
) -> Result<TransmissionGrid> {
    cavity.validate()?;
    if omega_grid.is_empty() || omega_z_grid.is_empty() {
        return Err(Error::invalid("grids must be non-empty"));
    }
    if !strictly_increasing(omega_grid) || !strictly_increasing(omega_z_grid) {
        return Err(Error::invalid("grids must be strictly increasing"));
    }
    if omega_z_grid[0] <= 0.0 {
        return Err(Error::invalid("ω_z grid must be > 0"));
    }
    let rows: Vec<(Vec<Complex64>, ColumnInfo)> = omega_z_grid
        .par_iter()
        .map(|&omega_z| -> Result<_> {
            let info = column_equilibrium(omega_z, thermal, cavity)?;
            let row = omega_grid
                .iter()
                .map(|&w| {
                    transmission_point(w, omega_z, cavity.omega, cavity.lambda_bar, kappa, gamma, info.sz0, info.sx0)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((row, info))
        })
        .collect::<Result<_>>()?;
    let (t, columns) = rows.into_iter().unzip();
    Ok(TransmissionGrid {
        omega_grid: omega_grid.to_vec(),
        omega_z_grid: omega_z_grid.to_vec(),
        thermal: thermal.energy(),
        kappa,
        gamma,
        cavity_omega: cavity.omega,
        lambda_bar: cavity.lambda_bar,
        t,
        columns,
    })
}

/// Equilibrium Pauli expectations of one column.
pub fn column_equilibrium(omega_z: f64, thermal: Thermal, cavity: &CavitySpec) -> Result<ColumnInfo> {
    let lc = dicke_critical_coupling(omega_z, cavity.omega, 0.5, thermal)?;
    let superradiant = cavity.lambda_bar >= lc;
    let problem = MeanFieldProblem::new(
        MeanFieldModel::Ising { omega_z, j: 0.0, geometry: Geometry::AllToAllNormalized },
        *cavity,
        thermal,
        Sublattices::One,
    );
    let sol = solve_selfconsistent(&problem)?;
    if sol.converged {
        let (sx0, sz0) = sol.pauli();
        Ok(ColumnInfo { omega_z, sz0, sx0, superradiant, mean_field_converged: true, warning: None })
    } else {
        // Normal-phase values: ⟨σ_z⟩ = −tanh(βω_z/2), which is −bracket for S = 1/2.
        Ok(ColumnInfo {
            omega_z,
            sz0: -dicke_bracket(0.5, omega_z, thermal),
            sx0: 0.0,
            superradiant,
            mean_field_converged: false,
            warning: Some(format!("mean field unconverged at ω_z = {omega_z:e}; m = 0 branch used")),
        })
    }
}

/// Interior local maxima of a sampled curve, as `(x, y)` pairs, keeping
/// only peaks at least `min_height` high.
pub fn local_maxima(x: &[f64], y: &[f64], min_height: f64) -> Vec<(f64, f64)> {
    (1..y.len().saturating_sub(1))
        .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] >= min_height)
        .map(|k| (x[k], y[k]))
        .collect()
}
