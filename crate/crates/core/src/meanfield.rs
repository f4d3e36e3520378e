//! Self-consistent thermal mean field for the cavity-dressed effective
//! Hamiltonian.
//!
//! Every model is reduced to a set of sublattices `s` with weight `w_s`,
//! site Hamiltonian `h0_s`, order-parameter operator `X = S_x` and a
//! symmetric exchange kernel `K`:
//!
//! ```text
//! H_s(m) = h0_s − (Σ_t K_st m_t) X + ½ Σ_t K_st m_s m_t,
//! F/N    = Σ_s w_s f_s(m),   f = −k_BT ln Tr e^{−βH_s}.
//! ```
//!
//! The cavity adds `4λ̄²/Ω` to every entry of K (the `−O²/Ω` term of the
//! effective Hamiltonian with `O = (λ̄/√N) Σ 2S_x`). Order parameters are
//! always `⟨S_x⟩` in the spin-S convention, so spin-1/2 values lie in
//! [−1/2, 1/2].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{CavitySpec, Geometry, GiantSpinModel, IsingChainModel};
use crate::spectra::dense_eigh;
use crate::spin::{CMatrix, SpinOperatorSet};
use crate::units::{PhysicalConstants, Thermal};

pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Tolerance per unit spin; the solver uses `tol = DEFAULT_TOL_PER_SPIN·S`.
pub const DEFAULT_TOL_PER_SPIN: f64 = 1e-10;
/// History length of the Anderson accelerator.
const ANDERSON_DEPTH: usize = 5;
/// Free energies closer than this (relative) count as degenerate branches.
const BRANCH_TIE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeanFieldModel {
    /// Spin-1/2 transverse-field Ising model `(ω_z/2)Σσ_z − (J/2)Σ w σ_xσ_x`.
    Ising { omega_z: f64, j: f64, geometry: Geometry },
    GiantSpin(GiantSpinModel),
}

impl From<&IsingChainModel> for MeanFieldModel {
    fn from(m: &IsingChainModel) -> Self {
        MeanFieldModel::Ising { omega_z: m.omega_z, j: m.j, geometry: m.geometry }
    }
}

impl MeanFieldModel {
    pub fn spin(&self) -> f64 {
        match self {
            MeanFieldModel::Ising { .. } => 0.5,
            MeanFieldModel::GiantSpin(g) => g.s,
        }
    }

    /// Bare exchange entering `H_s` as `−2J m X` for uniform order.
    fn bare_exchange(&self) -> f64 {
        match self {
            MeanFieldModel::Ising { j, .. } => *j,
            MeanFieldModel::GiantSpin(g) => g.j,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sublattices {
    One,
    Two,
}

impl Sublattices {
    pub fn count(self) -> usize {
        match self {
            Sublattices::One => 1,
            Sublattices::Two => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldProblem {
    pub model: MeanFieldModel,
    pub cavity: CavitySpec,
    pub thermal: Thermal,
    pub sublattices: Sublattices,
    /// Extra starting points; each must have one entry per sublattice.
    pub init: Vec<Vec<f64>>,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub consts: PhysicalConstants,
}

impl MeanFieldProblem {
    pub fn new(model: MeanFieldModel, cavity: CavitySpec, thermal: Thermal, sublattices: Sublattices) -> Self {
        let tol = DEFAULT_TOL_PER_SPIN * model.spin();
        MeanFieldProblem {
            model,
            cavity,
            thermal,
            sublattices,
            init: Vec::new(),
            damping: DEFAULT_DAMPING,
            tol,
            max_iter: DEFAULT_MAX_ITER,
            consts: crate::units::SI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        let k = self.sublattices.count();
        if let Some(bad) = self.init.iter().find(|m| m.len() != k || m.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid(format!("initial order parameter {bad:?} must have {k} finite entries")));
        }
        match &self.model {
            MeanFieldModel::Ising { omega_z, j, .. } => {
                if !omega_z.is_finite() || !j.is_finite() {
                    return Err(Error::invalid("ω_z and J must be finite"));
                }
            }
            MeanFieldModel::GiantSpin(g) => g.validate()?,
        }
        Ok(())
    }
}

/// The reduced sublattice problem the fixed-point engine works on.
#[derive(Clone, Debug)]
struct Reduced {
    h0: CMatrix,
    x: CMatrix,
    z: CMatrix,
    weights: Vec<f64>,
    kernel: DMatrix<f64>,
    spin: f64,
}

fn reduce(p: &MeanFieldProblem) -> Result<Reduced> {
    p.validate()?;
    let spin = p.model.spin();
    let ops = SpinOperatorSet::new(spin)?;
    let h0 = match &p.model {
        MeanFieldModel::Ising { omega_z, .. } => ops.sz.scale(*omega_z),
        MeanFieldModel::GiantSpin(g) => g.single_ion_hamiltonian(&p.consts)?,
    };
    let j = p.model.bare_exchange();
    let cav = p.cavity.exchange_shift_spin();
    // Two-sublattice kernel; the one-sublattice kernel is its row sum.
    let (same, cross) = match &p.model {
        // Nearest-neighbour chain: every bond joins A and B, coordination 2.
        MeanFieldModel::Ising { geometry: Geometry::NearestNeighborPbc, .. } => (cav, 4.0 * j + cav),
        _ => (j + cav, j + cav),
    };
    let (weights, kernel) = match p.sublattices {
        Sublattices::One => (vec![1.0], DMatrix::from_element(1, 1, same + cross)),
        Sublattices::Two => (vec![0.5, 0.5], DMatrix::from_row_slice(2, 2, &[same, cross, cross, same])),
    };
    Ok(Reduced { h0, x: ops.sx, z: ops.sz, weights, kernel, spin })
}

/// Per-sublattice site Hamiltonians at fixed order parameters, including the
/// constant double-counting term.
pub fn site_hamiltonian(problem: &MeanFieldProblem, m: &[f64]) -> Result<Vec<CMatrix>> {
    let r = reduce(problem)?;
    if m.len() != r.weights.len() || m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("order parameters must be finite, one per sublattice"));
    }
    Ok(r.site_hamiltonians(m))
}

impl Reduced {
    fn site_hamiltonians(&self, m: &[f64]) -> Vec<CMatrix> {
        let mv = DVector::from_column_slice(m);
        let field = &self.kernel * &mv;
        let id = CMatrix::identity(self.h0.nrows(), self.h0.ncols());
        (0..m.len())
            .map(|s| {
                let constant = 0.5 * m[s] * field[s];
                &self.h0 - self.x.scale(field[s]) + id.scale(constant)
            })
            .collect()
    }

    /// `(⟨X⟩_s, ⟨Z⟩_s, f_s)` per sublattice.
    fn evaluate(&self, m: &[f64], thermal: Thermal) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut xs = Vec::with_capacity(m.len());
        let mut zs = Vec::with_capacity(m.len());
        let mut fs = Vec::with_capacity(m.len());
        for h in self.site_hamiltonians(m) {
            let th = ThermalState::new(&h, thermal)?;
            xs.push(th.expectation(&self.x));
            zs.push(th.expectation(&self.z));
            fs.push(th.free_energy);
        }
        Ok((xs, zs, fs))
    }
}

/// Boltzmann-weighted eigenbasis of a site Hamiltonian.
struct ThermalState {
    vectors: CMatrix,
    weights: Vec<f64>,
    free_energy: f64,
}

impl ThermalState {
    fn new(h: &CMatrix, thermal: Thermal) -> Result<Self> {
        let spec = dense_eigh(h)?;
        let e = &spec.eigenvalues;
        let e0 = e[0];
        let (weights, free_energy) = match thermal.beta() {
            None => {
                let scale = e.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
                let g = e.iter().take_while(|&&v| v - e0 <= 1e-10 * scale).count();
                let w = (0..e.len()).map(|i| if i < g { 1.0 / g as f64 } else { 0.0 }).collect();
                (w, e0)
            }
            Some(beta) => {
                let raw: Vec<f64> = e.iter().map(|v| (-beta * (v - e0)).exp()).collect();
                let z: f64 = raw.iter().sum();
                (raw.iter().map(|w| w / z).collect(), e0 - z.ln() / beta)
            }
        };
        Ok(ThermalState { vectors: spec.eigenvectors.expect("dense eigenvectors"), weights, free_energy })
    }

    fn expectation(&self, op: &CMatrix) -> f64 {
        let mut total = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = self.vectors.column(i);
            let ov = op * v;
            total += w * v.iter().zip(ov.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        }
        total
    }
}

/// `Tr(O e^{−βH})/Tr e^{−βH}`; the ground manifold average at T = 0.
pub fn thermal_expectation(h: &CMatrix, op: &CMatrix, thermal: Thermal) -> Result<f64> {
    if h.shape() != op.shape() {
        return Err(Error::invalid("H and O must have the same shape"));
    }
    Ok(ThermalState::new(h, thermal)?.expectation(op))
}

/// `−k_BT ln Tr e^{−βH}` (ground energy at T = 0).
pub fn free_energy(h: &CMatrix, thermal: Thermal) -> Result<f64> {
    Ok(ThermalState::new(h, thermal)?.free_energy)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    /// ⟨S_x⟩ per sublattice.
    pub m: Vec<f64>,
    /// Weighted mean of `m`; the order parameter that couples to the cavity.
    pub m_uniform: f64,
    /// `(m_A − m_B)/2` for two sublattices, 0 otherwise.
    pub m_stag: f64,
    /// Weighted ⟨S_z⟩.
    pub sz: f64,
    /// rad/s.
    pub free_energy_per_spin: f64,
    /// `|α|/√N = 2λ̄|m_uniform|/Ω`.
    pub alpha_per_sqrt_n: f64,
    pub photons_per_spin: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `max_s |⟨S_x⟩_s(m) − m_s|` at the returned point.
    pub residual: f64,
    pub spin: f64,
}

impl MeanFieldSolution {
    /// Pauli expectations `(⟨σ_x⟩, ⟨σ_z⟩)` of a spin-1/2 solution.
    pub fn pauli(&self) -> (f64, f64) {
        (2.0 * self.m_uniform, 2.0 * self.sz)
    }
}

/// Solves the self-consistency from the mandatory and user starting points
/// and returns the branch with the lowest free energy. Non-convergence is
/// reported through `converged`, never as an error.
pub fn solve_selfconsistent(problem: &MeanFieldProblem) -> Result<MeanFieldSolution> {
    let r = reduce(problem)?;
    let k = r.weights.len();
    let s = r.spin;
    let nudge = 1e-3 * s;
    let mut inits: Vec<Vec<f64>> = vec![vec![0.0; k], vec![nudge; k], vec![s; k], vec![-s; k]];
    if k == 2 {
        inits.push(vec![s, -s]);
        inits.push(vec![nudge, -nudge]);
    }
    inits.extend(problem.init.iter().cloned());

    let mut best: Option<MeanFieldSolution> = None;
    for init in &inits {
        let cand = iterate(&r, problem, init)?;
        best = Some(match best {
            None => cand,
            Some(b) => prefer(b, cand),
        });
    }
    Ok(best.expect("at least one start"))
}

fn prefer(a: MeanFieldSolution, b: MeanFieldSolution) -> MeanFieldSolution {
    if a.converged != b.converged {
        return if a.converged { a } else { b };
    }
    let scale = a.free_energy_per_spin.abs().max(b.free_energy_per_spin.abs()).max(f64::MIN_POSITIVE);
    let df = b.free_energy_per_spin - a.free_energy_per_spin;
    if df < -BRANCH_TIE * scale {
        b
    } else if df > BRANCH_TIE * scale {
        a
    } else {
        // Degenerate (symmetry-related) branches: keep the lexicographically
        // largest order parameter so the positive branch wins.
        let ord = b.m.iter().zip(&a.m).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne());
        if ord == Some(std::cmp::Ordering::Greater) {
            b
        } else {
            a
        }
    }
}

/// Anderson-accelerated damped fixed-point iteration `m ← m + d(G(m) − m)`.
fn iterate(r: &Reduced, p: &MeanFieldProblem, init: &[f64]) -> Result<MeanFieldSolution> {
    let k = init.len();
    let s = r.spin;
    let d = p.damping;
    let clamp = |v: f64| v.clamp(-s, s);
    let mut m: Vec<f64> = init.iter().map(|&v| clamp(v)).collect();
    let mut hist_m: Vec<Vec<f64>> = Vec::new();
    let mut hist_r: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut last = r.evaluate(&m, p.thermal)?;
    let mut residual;
    loop {
        let res: Vec<f64> = last.0.iter().zip(&m).map(|(g, x)| g - x).collect();
        residual = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if residual <= p.tol {
            converged = true;
            break;
        }
        if iterations >= p.max_iter {
            break;
        }
        iterations += 1;

        hist_m.push(m.clone());
        hist_r.push(res.clone());
        if hist_m.len() > ANDERSON_DEPTH + 1 {
            hist_m.remove(0);
            hist_r.remove(0);
        }
        let damped: Vec<f64> = m.iter().zip(&res).map(|(x, r)| clamp(x + d * r)).collect();
        let mut next = anderson_step(&hist_m, &hist_r, d).map(|v| v.into_iter().map(clamp).collect::<Vec<_>>());
        // Accept the accelerated step only if it reduces the residual.
        if let Some(cand) = next.take() {
            let eval = r.evaluate(&cand, p.thermal)?;
            let cand_res = eval.0.iter().zip(&cand).fold(0.0f64, |a, (g, x)| a.max((g - x).abs()));
            if cand_res.is_finite() && cand_res < residual {
                m = cand;
                last = eval;
                continue;
            }
            hist_m.clear();
            hist_r.clear();
        }
        m = damped;
        last = r.evaluate(&m, p.thermal)?;
    }
    let (_, zs, fs) = &last;
    let w = &r.weights;
    let m_uniform: f64 = w.iter().zip(&m).map(|(a, b)| a * b).sum();
    let m_stag = if k == 2 { 0.5 * (m[0] - m[1]) } else { 0.0 };
    let alpha = 2.0 * p.cavity.lambda_bar * m_uniform.abs() / p.cavity.omega;
    Ok(MeanFieldSolution {
        m,
        m_uniform,
        m_stag,
        sz: w.iter().zip(zs).map(|(a, b)| a * b).sum(),
        free_energy_per_spin: w.iter().zip(fs).map(|(a, b)| a * b).sum(),
        alpha_per_sqrt_n: alpha,
        photons_per_spin: alpha * alpha,
        converged,
        iterations,
        residual,
        spin: s,
    })
}

/// Type-II Anderson update from the history of iterates and residuals.
fn anderson_step(hm: &[Vec<f64>], hr: &[Vec<f64>], d: f64) -> Option<Vec<f64>> {
    let n = hm.len();
    if n < 2 {
        return None;
    }
    let k = hm[0].len();
    let cols = n - 1;
    let dr = DMatrix::from_fn(k, cols, |i, j| hr[j + 1][i] - hr[j][i]);
    let dm = DMatrix::from_fn(k, cols, |i, j| hm[j + 1][i] - hm[j][i]);
    let rk = DVector::from_column_slice(&hr[n - 1]);
    let gamma = dr.clone().svd(true, true).solve(&rk, 1e-14).ok()?;
    let mk = DVector::from_column_slice(&hm[n - 1]);
    let next = mk + rk.scale(d) - (dm + dr.scale(d)) * gamma;
    next.iter().all(|v| v.is_finite()).then(|| next.iter().copied().collect())
}
