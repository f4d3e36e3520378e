//! Static response of the bare spin system to the light–matter coupling
//! operator and the superradiance criterion `|R(T)| ≥ Ω/2` (ħ = 1).
//!
//! ```text
//! R(T) = −Σ_{m,n} p_m |O_mn|² (e^{βΔ_mn} − 1)/Δ_mn / Σ_m p_m,   Δ_mn = ε_m − ε_n
//! ```
//!
//! Each ordered pair contributes `(p_n − p_m)/(ε_m − ε_n)`, which is symmetric
//! in (m, n) and is evaluated as `p_low·(1 − e^{−β|Δ|})/|Δ|` with `p_low` the
//! weight of the lower level; it tends to `p·β` at Δ = 0.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::LinearOperator;
use crate::spectra::{krylov_ritz_basis, Method, Spectrum};
use crate::spin::CMatrix;
use crate::units::{PhysicalConstants, Thermal};

/// Boltzmann weights below this (relative to the ground state) are dropped.
pub const BOLTZMANN_CUTOFF: f64 = 1e-12;

/// Relative energy window treated as an exact ground-state degeneracy at T = 0.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResponseResult {
    /// rad/s, ≤ 0. `-∞` when a degenerate ground manifold is connected by O at T = 0.
    pub r: f64,
    /// k_B T/ħ, rad/s.
    pub thermal: f64,
    /// |R|/(Ω/2).
    pub margin: f64,
    pub superradiant: bool,
    pub truncation_warning: bool,
}

impl ResponseResult {
    fn new(r: f64, thermal: Thermal, omega: f64, truncation_warning: bool) -> Self {
        let margin = r.abs() / (0.5 * omega);
        ResponseResult { r, thermal: thermal.energy(), margin, superradiant: margin >= 1.0, truncation_warning }
    }
}

/// `R(T)` from a spectrum of the bare spin Hamiltonian.
pub fn static_response<O: LinearOperator + ?Sized>(
    spec: &Spectrum,
    coupling: &O,
    thermal: Thermal,
    omega: f64,
) -> Result<ResponseResult> {
    if !(omega > 0.0) {
        return Err(Error::invalid("cavity frequency must be > 0"));
    }
    let vecs = spec
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::invalid("static_response needs eigenvectors"))?;
    if vecs.nrows() != coupling.dim() {
        return Err(Error::invalid("spectrum and coupling operator dimensions differ"));
    }
    if spec.is_empty() {
        return Err(Error::invalid("empty spectrum"));
    }
    let elements = matrix_elements_sq(vecs, coupling);
    let energies = &spec.eigenvalues;
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = energies.iter().fold(0.0f64, |a, e| a.max(e.abs())).max(f64::MIN_POSITIVE);

    match thermal.beta() {
        None => {
            let ground: Vec<bool> = energies.iter().map(|&e| e - e0 <= DEGENERACY_TOL * scale).collect();
            let g = ground.iter().filter(|&&x| x).count() as f64;
            let mut sum = 0.0;
            let mut intra = 0.0;
            let mut total = 0.0;
            for m in 0..energies.len() {
                if !ground[m] {
                    continue;
                }
                for n in 0..energies.len() {
                    let w = elements[(m, n)];
                    total += w;
                    if ground[n] {
                        intra += w;
                    } else {
                        sum += 2.0 * w / (energies[n] - energies[m]);
                    }
                }
            }
            let r = if intra > 1e-16 * total.max(f64::MIN_POSITIVE) { f64::NEG_INFINITY } else { -sum / g };
            Ok(ResponseResult::new(r, thermal, omega, false))
        }
        Some(beta) => {
            let weights: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
            let warn = !spec.is_complete() && (-beta * (spec.covered_up_to - e0)).exp() > BOLTZMANN_CUTOFF;
            let z: f64 = weights.iter().sum();
            let mut sum = 0.0;
            for m in 0..energies.len() {
                for n in 0..energies.len() {
                    let w = elements[(m, n)];
                    if w == 0.0 {
                        continue;
                    }
                    sum += w * pair_kernel(beta, energies[m], weights[m], energies[n], weights[n]);
                }
            }
            Ok(ResponseResult::new(-sum / z, thermal, omega, warn))
        }
    }
}

/// `(p_n − p_m)/(ε_m − ε_n)` in overflow-free form.
fn pair_kernel(beta: f64, em: f64, pm: f64, en: f64, pn: f64) -> f64 {
    let gap = (em - en).abs();
    let p_low = if em <= en { pm } else { pn };
    if gap == 0.0 {
        p_low * beta
    } else {
        p_low * (-(-beta * gap).exp_m1()) / gap
    }
}

/// `|⟨v_m|O|v_n⟩|²` for all pairs of columns.
fn matrix_elements_sq<O: LinearOperator + ?Sized>(vecs: &CMatrix, coupling: &O) -> nalgebra::DMatrix<f64> {
    let k = vecs.ncols();
    let mut ov = CMatrix::zeros(vecs.nrows(), k);
    let mut buf = vec![Complex64::new(0.0, 0.0); vecs.nrows()];
    for c in 0..k {
        let col: Vec<Complex64> = vecs.column(c).iter().copied().collect();
        coupling.apply(&col, &mut buf);
        ov.column_mut(c).iter_mut().zip(&buf).for_each(|(d, s)| *d = *s);
    }
    let m = vecs.adjoint() * ov;
    m.map(|z| z.norm_sqr())
}

/// Spectrum suitable for the T = 0 response of a large chain: the ground
/// manifold of `ground` plus the Ritz pairs of the Krylov space grown from
/// `O|ψ_g⟩` (orthogonal to the ground manifold). This captures all spectral
/// weight that enters the zero-temperature sum.
pub fn response_spectrum<H: LinearOperator + ?Sized, O: LinearOperator + ?Sized>(
    h: &H,
    coupling: &O,
    ground: &Spectrum,
    krylov_dim: usize,
) -> Result<Spectrum> {
    let vecs = ground
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::invalid("ground spectrum needs eigenvectors"))?;
    if ground.is_empty() {
        return Err(Error::invalid("empty ground spectrum"));
    }
    let e0 = ground.eigenvalues[0];
    let scale = ground.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs())).max(1.0);
    let g = ground.eigenvalues.iter().take_while(|&&e| e - e0 <= DEGENERACY_TOL * scale).count();
    let ground_vecs: Vec<Vec<Complex64>> = (0..g).map(|c| vecs.column(c).iter().copied().collect()).collect();
    let starts: Vec<Vec<Complex64>> = ground_vecs.iter().map(|v| coupling.apply_vec(v)).collect();
    let locked: Vec<&[Complex64]> = ground_vecs.iter().map(|v| v.as_slice()).collect();
    let (values, ritz, residuals, gram) = krylov_ritz_basis(h, &starts, krylov_dim, &locked)?;

    let dim = h.dim();
    let total = g + values.len();
    let mut all = CMatrix::zeros(dim, total);
    for (c, v) in ground_vecs.iter().enumerate() {
        all.column_mut(c).iter_mut().zip(v).for_each(|(d, s)| *d = *s);
    }
    for c in 0..values.len() {
        all.column_mut(g + c).copy_from(&ritz.column(c));
    }
    let mut eigenvalues: Vec<f64> = ground.eigenvalues[..g].to_vec();
    eigenvalues.extend(&values);
    let mut res: Vec<f64> = ground.residuals[..g].to_vec();
    res.extend(&residuals);
    let mut converged: Vec<bool> = ground.converged[..g].to_vec();
    converged.extend(std::iter::repeat_n(true, values.len()));
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(all),
        residuals: res,
        converged,
        method: Method::ResponseKrylov,
        krylov_dim: Some(krylov_dim),
        covered_up_to: if total >= dim { f64::INFINITY } else { e0 },
        gram_defect: Some(gram.max(ground.gram_defect.unwrap_or(0.0))),
    })
}

/// Closed-form critical coupling of free spins S (Dicke model):
/// `λ̄_c² = (ω_z Ω/4)·[(2S+1) coth(βω_z(2S+1)/2) − coth(βω_z/2)]⁻¹`.
pub fn dicke_critical_coupling(omega_z: f64, omega: f64, s: f64, thermal: Thermal) -> Result<f64> {
    if !(omega_z > 0.0 && omega_z.is_finite()) || !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid("ω_z and Ω must be > 0"));
    }
    let two_s = 2.0 * s;
    if !(two_s >= 1.0) || (two_s - two_s.round()).abs() > 1e-12 {
        return Err(Error::invalid(format!("spin must be a positive half-integer, got {s}")));
    }
    let bracket = dicke_bracket(s, omega_z, thermal);
    Ok((omega_z * omega / (4.0 * bracket)).sqrt())
}

/// `(2S+1) coth((2S+1)x) − coth(x)` with `x = βω_z/2`; equals `−2⟨S_z⟩` of
/// a free spin in `H = ω_z S_z`.
pub fn dicke_bracket(s: f64, omega_z: f64, thermal: Thermal) -> f64 {
    let a = 2.0 * s + 1.0;
    let Some(beta) = thermal.beta() else { return 2.0 * s };
    let x = 0.5 * beta * omega_z;
    let ax = a * x;
    if ax < 1e-2 {
        // coth y = 1/y + y/3 − y³/45 + 2y⁵/945 − …
        let (a2, x2) = (a * a, x * x);
        x * ((a2 - 1.0) / 3.0 - (a2 * a2 - 1.0) * x2 / 45.0 + 2.0 * (a2 * a2 * a2 - 1.0) * x2 * x2 / 945.0)
    } else {
        a / ax.tanh() - 1.0 / x.tanh()
    }
}

/// ω_z below which free spins S are superradiant at temperature T, or `None`
/// if they are normal for every ω_z > 0.
pub fn dicke_critical_omega_z(lambda_bar: f64, omega: f64, s: f64, thermal: Thermal) -> Result<Option<f64>> {
    if !(lambda_bar >= 0.0) {
        return Err(Error::invalid("λ̄ must be >= 0"));
    }
    if lambda_bar == 0.0 {
        return Ok(None);
    }
    let target = lambda_bar * lambda_bar;
    // λ̄_c²(ω_z) increases with ω_z; its ω_z → 0 limit is the Curie value.
    let curie = thermal.beta().map_or(0.0, |b| 3.0 * omega / (8.0 * b * s * (s + 1.0)));
    if target <= curie {
        return Ok(None);
    }
    let hi = 8.0 * s * target / omega;
    let f = |wz: f64| -> Result<f64> { Ok(dicke_critical_coupling(wz, omega, s, thermal)?.powi(2) - target) };
    if thermal.is_zero() {
        return Ok(Some(hi));
    }
    let (mut lo, mut hi) = (hi * 1e-300_f64.max(f64::MIN_POSITIVE), hi);
    // f(hi) >= 0 always (finite T only raises λ̄_c).
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Temperature (as thermal energy) at which free spins with coupling λ̄ leave
/// the superradiant phase, or `None` if λ̄ < λ̄_c(T = 0).
pub fn dicke_critical_temperature(lambda_bar: f64, omega_z: f64, omega: f64, s: f64) -> Result<Option<Thermal>> {
    let lc0 = dicke_critical_coupling(omega_z, omega, s, Thermal::ZERO)?;
    if lambda_bar < lc0 {
        return Ok(None);
    }
    let below = |kt: f64| -> Result<bool> {
        Ok(dicke_critical_coupling(omega_z, omega, s, Thermal::from_energy(kt)?)? <= lambda_bar)
    };
    // Upper bracket from the Curie law, widened until normal.
    let mut hi = 8.0 * s * (s + 1.0) * lambda_bar * lambda_bar / (3.0 * omega) * 2.0 + omega_z;
    while below(hi)? {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(Some(Thermal::from_energy(0.5 * (lo + hi))?))
}

/// `λ̄ = sqrt(g_e² μ_B² μ_0 ρ ν Ω / (8ħ))` with ρ in spins/m³.
pub fn lambda_bar_from_material(rho: f64, nu: f64, omega: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("spin density must be > 0, got {rho}")));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::invalid(format!("filling factor must lie in [0, 1], got {nu}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid("cavity frequency must be > 0"));
    }
    let ge = consts.g_e;
    let lambda2 = ge * ge * consts.mu_b * consts.mu_b * consts.mu_0 * rho * nu * omega / (8.0 * consts.hbar);
    Ok(lambda2.sqrt())
}

/// Root-mean-square coupling and the Cauchy–Schwarz gap `λ̄² − (mean λ)²`.
pub fn rms_reduce(couplings: &[f64]) -> Result<(f64, f64)> {
    if couplings.is_empty() {
        return Err(Error::invalid("empty coupling list"));
    }
    if couplings.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(Error::invalid("couplings must be finite and >= 0"));
    }
    let n = couplings.len() as f64;
    let mean_sq = couplings.iter().map(|l| l * l).sum::<f64>() / n;
    let mean = couplings.iter().sum::<f64>() / n;
    Ok((mean_sq.sqrt(), (mean_sq - mean * mean).max(0.0)))
}
