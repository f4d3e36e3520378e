//! Phase-boundary tracing by bisection on a boolean detector.
//!
//! For every value of the slice variable the scan variable is sampled on
//! its grid; each place where the detector flips is then bisected until the
//! bracket is narrower than `bisection_tol·|value|`.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_chain_hamiltonian, CavitySpec, Geometry, IsingChainModel};
use crate::meanfield::{solve_selfconsistent, MeanFieldModel, MeanFieldProblem, Sublattices};
use crate::response::{dicke_critical_coupling, response_spectrum, static_response};
use crate::spectra::{dense_eigh, lanczos, LanczosConfig};
use crate::units::{PhysicalConstants, Thermal};

/// Sweep variables. Internal units: J, λ̄, ω_z and T (as k_BT/ħ) in rad/s,
/// B in tesla.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Var {
    J,
    LambdaBar,
    B,
    T,
    OmegaZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    JVsLambda,
    BVsT,
    OmegaZVsT,
}

impl Plane {
    fn vars(self) -> (Var, Var) {
        match self {
            Plane::JVsLambda => (Var::J, Var::LambdaBar),
            Plane::BVsT => (Var::B, Var::T),
            Plane::OmegaZVsT => (Var::OmegaZ, Var::T),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub var: Var,
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(var: Var, min: f64, max: f64, n_points: usize) -> Self {
        Axis { var, min, max, n_points, spacing: Spacing::Linear }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid(format!("axis {:?}: needs finite bounds and n_points >= 1", self.var)));
        }
        if self.n_points > 1 && !(self.max > self.min) {
            return Err(Error::invalid(format!("axis {:?}: max must exceed min", self.var)));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            return Err(Error::invalid(format!("axis {:?}: log spacing needs min > 0", self.var)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.min];
        }
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Which mean-field order parameter marks the ordered phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    /// Uniform magnetization, equivalently a macroscopic photon field.
    Uniform,
    Staggered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorSpec {
    /// `|m| > threshold·S`.
    MeanFieldOrderParameter { threshold: f64, sublattices: Sublattices, order: OrderKind },
    /// `|R(T)| ≥ Ω/2` from exact diagonalization of an Ising chain.
    ResponseCriterion { n_sites: usize, krylov_dim: usize, seed: u64 },
    /// `λ̄ ≥ λ̄_c(T)` of the free-spin closed form.
    FreeSpinClosedForm,
}

impl DetectorSpec {
    pub fn label(&self) -> &'static str {
        match self {
            DetectorSpec::MeanFieldOrderParameter { .. } => "mean_field_order_parameter",
            DetectorSpec::ResponseCriterion { .. } => "response_criterion",
            DetectorSpec::FreeSpinClosedForm => "free_spin_closed_form",
        }
    }
}

/// Parameters held fixed across the sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixed {
    pub model: MeanFieldModel,
    pub cavity: CavitySpec,
    pub thermal: Thermal,
    pub consts: PhysicalConstants,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub plane: Plane,
    pub fixed: Fixed,
    /// Outer variable, one boundary search per grid value.
    pub slice: Axis,
    /// Variable bisected within each slice.
    pub scan: Axis,
    pub detector: DetectorSpec,
    pub bisection_tol: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.slice.validate()?;
        self.scan.validate()?;
        let (a, b) = self.plane.vars();
        let pair = (self.slice.var, self.scan.var);
        if pair != (a, b) && pair != (b, a) {
            return Err(Error::invalid(format!("axes {pair:?} do not span plane {:?}", self.plane)));
        }
        if self.scan.n_points < 2 {
            return Err(Error::invalid("scan axis needs at least 2 points"));
        }
        if !(self.bisection_tol > 0.0 && self.bisection_tol <= 1e-2) {
            return Err(Error::invalid("bisection_tol must lie in (0, 1e-2]"));
        }
        self.fixed.cavity.validate()?;
        let is_giant = matches!(self.fixed.model, MeanFieldModel::GiantSpin(_));
        for v in [a, b] {
            match v {
                Var::B if !is_giant => return Err(Error::invalid("B axis needs the giant-spin model")),
                Var::OmegaZ if is_giant => return Err(Error::invalid("ω_z axis needs the Ising model")),
                _ => {}
            }
        }
        let scan_needs_positive = matches!(self.scan.var, Var::T | Var::LambdaBar | Var::OmegaZ);
        if scan_needs_positive && self.scan.min < 0.0 {
            return Err(Error::invalid(format!("{:?} cannot be negative", self.scan.var)));
        }
        match &self.detector {
            DetectorSpec::MeanFieldOrderParameter { threshold, .. } if !(*threshold > 0.0) => {
                Err(Error::invalid("order-parameter threshold must be > 0"))
            }
            DetectorSpec::FreeSpinClosedForm => match self.fixed.model {
                MeanFieldModel::Ising { j, .. } if j == 0.0 && self.slice.var != Var::J && self.scan.var != Var::J => {
                    Ok(())
                }
                _ => Err(Error::invalid("the closed-form detector applies only to free spins (J = 0)")),
            },
            DetectorSpec::ResponseCriterion { n_sites, krylov_dim, .. } => {
                if is_giant {
                    return Err(Error::invalid("the response detector needs the Ising model"));
                }
                if *n_sites == 0 || *krylov_dim == 0 {
                    return Err(Error::invalid("n_sites and krylov_dim must be >= 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub slice: f64,
    /// `None` marks a slice without a detector flip on the scan grid.
    pub critical: Option<f64>,
    pub width: f64,
    pub detector: &'static str,
    /// Whether the ordered side lies above the critical value.
    pub ordered_above: Option<bool>,
    /// Some probe failed to converge (mean field) or was truncated (ED).
    pub flagged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseBoundary {
    pub points: Vec<BoundaryPoint>,
    pub spec: SweepSpec,
}

impl PhaseBoundary {
    /// First critical value found in the slice closest to `slice`.
    pub fn critical_at(&self, slice: f64) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.critical.is_some())
            .min_by(|a, b| (a.slice - slice).abs().total_cmp(&(b.slice - slice).abs()))
            .and_then(|p| p.critical)
    }
}

#[derive(Clone, Copy, Debug)]
struct Probe {
    ordered: bool,
    flagged: bool,
}

/// Stateful detector with per-sweep caches.
struct Detector<'a> {
    spec: &'a SweepSpec,
    /// ED: R at λ̄ = 1 keyed by (J, ω_z, T) bit patterns; R scales as λ̄².
    response_cache: Mutex<HashMap<[u64; 3], (f64, bool)>>,
}

impl<'a> Detector<'a> {
    fn new(spec: &'a SweepSpec) -> Self {
        Detector { spec, response_cache: Mutex::new(HashMap::new()) }
    }

    fn probe(&self, vars: &[(Var, f64)]) -> Result<Probe> {
        let mut fixed = self.spec.fixed.clone();
        for &(var, value) in vars {
            apply(&mut fixed, var, value)?;
        }
        match &self.spec.detector {
            DetectorSpec::MeanFieldOrderParameter { threshold, sublattices, order } => {
                let p = MeanFieldProblem {
                    consts: fixed.consts,
                    ..MeanFieldProblem::new(fixed.model.clone(), fixed.cavity, fixed.thermal, *sublattices)
                };
                let sol = solve_selfconsistent(&p)?;
                let m = match order {
                    OrderKind::Uniform => sol.m_uniform,
                    OrderKind::Staggered => sol.m_stag,
                };
                Ok(Probe { ordered: m.abs() > threshold * sol.spin, flagged: !sol.converged })
            }
            DetectorSpec::FreeSpinClosedForm => {
                let MeanFieldModel::Ising { omega_z, .. } = fixed.model else { unreachable!("validated") };
                let lc = dicke_critical_coupling(omega_z, fixed.cavity.omega, 0.5, fixed.thermal)?;
                Ok(Probe { ordered: fixed.cavity.lambda_bar >= lc, flagged: false })
            }
            DetectorSpec::ResponseCriterion { n_sites, krylov_dim, seed } => {
                let MeanFieldModel::Ising { omega_z, j, .. } = fixed.model else { unreachable!("validated") };
                let key = [j.to_bits(), omega_z.to_bits(), fixed.thermal.energy().to_bits()];
                let cached = self.response_cache.lock().expect("cache lock").get(&key).copied();
                let (r1, warn) = match cached {
                    Some(v) => v,
                    None => {
                        let v = unit_response(*n_sites, omega_z, j, fixed.thermal, *krylov_dim, *seed)?;
                        self.response_cache.lock().expect("cache lock").insert(key, v);
                        v
                    }
                };
                let lambda = fixed.cavity.lambda_bar;
                let r = r1 * lambda * lambda;
                Ok(Probe { ordered: r.abs() >= 0.5 * fixed.cavity.omega, flagged: warn })
            }
        }
    }
}

/// Chains up to this Hilbert dimension use the full dense spectrum (exact at
/// any T); larger ones use the ground-state Krylov route.
pub const DENSE_RESPONSE_DIM: usize = 1 << 10;

/// `R(T)` of a nearest-neighbour Ising chain at unit coupling λ = 1 (Ω only
/// enters the criterion, not R).
pub fn unit_response(
    n_sites: usize,
    omega_z: f64,
    j: f64,
    thermal: Thermal,
    krylov_dim: usize,
    seed: u64,
) -> Result<(f64, bool)> {
    let model = IsingChainModel::uniform(n_sites, omega_z, j, Geometry::NearestNeighborPbc, 1.0);
    let ops = build_chain_hamiltonian(&model)?;
    let dim = model.hilbert_dim();
    let spec = if dim <= DENSE_RESPONSE_DIM {
        dense_eigh(&ops.h_s.dense())?
    } else {
        let ground = lanczos(&ops.h_s, &LanczosConfig::new(2, krylov_dim.max(4), seed))?;
        response_spectrum(&ops.h_s, &ops.coupling, &ground, krylov_dim)?
    };
    let r = static_response(&spec, &ops.coupling, thermal, 1.0)?;
    Ok((r.r, r.truncation_warning || !spec.all_converged()))
}

fn apply(fixed: &mut Fixed, var: Var, value: f64) -> Result<()> {
    match var {
        Var::LambdaBar => {
            fixed.cavity.lambda_bar = value;
            fixed.cavity.material = None;
        }
        Var::T => fixed.thermal = Thermal::from_energy(value)?,
        Var::J => match &mut fixed.model {
            MeanFieldModel::Ising { j, .. } => *j = value,
            MeanFieldModel::GiantSpin(g) => g.j = value,
        },
        Var::B => match &mut fixed.model {
            MeanFieldModel::GiantSpin(g) => g.b_mag = value,
            _ => return Err(Error::invalid("B needs the giant-spin model")),
        },
        Var::OmegaZ => match &mut fixed.model {
            MeanFieldModel::Ising { omega_z, .. } => *omega_z = value,
            _ => return Err(Error::invalid("ω_z needs the Ising model")),
        },
    }
    Ok(())
}

/// Traces the boundary; slices run in parallel and are returned in grid
/// order.
pub fn trace_boundary(spec: &SweepSpec) -> Result<PhaseBoundary> {
    spec.validate()?;
    let detector = Detector::new(spec);
    let slices = spec.slice.values();
    let points: Vec<Vec<BoundaryPoint>> = slices.par_iter().map(|&s| trace_slice(&detector, s)).collect();
    Ok(PhaseBoundary { points: points.into_iter().flatten().collect(), spec: spec.clone() })
}

fn trace_slice(det: &Detector, slice: f64) -> Vec<BoundaryPoint> {
    let spec = det.spec;
    let label = spec.detector.label();
    let blank = |error: Option<String>, flagged: bool| BoundaryPoint {
        slice,
        critical: None,
        width: 0.0,
        detector: label,
        ordered_above: None,
        flagged,
        error,
    };
    let probe = |x: f64| det.probe(&[(spec.slice.var, slice), (spec.scan.var, x)]);
    let grid = spec.scan.values();
    let mut samples = Vec::with_capacity(grid.len());
    let mut flagged = false;
    for &x in &grid {
        match probe(x) {
            Ok(p) => {
                flagged |= p.flagged;
                samples.push(p.ordered);
            }
            Err(e) => return vec![blank(Some(e.to_string()), true)],
        }
    }
    let floor = 1e-12 * (spec.scan.max - spec.scan.min).abs();
    let mut out = Vec::new();
    for i in 1..grid.len() {
        if samples[i] == samples[i - 1] {
            continue;
        }
        let (mut lo, mut hi) = (grid[i - 1], grid[i]);
        let lo_state = samples[i - 1];
        let mut point_flag = flagged;
        let mut error = None;
        while hi - lo > spec.bisection_tol * (0.5 * (lo + hi)).abs().max(floor) {
            let mid = 0.5 * (lo + hi);
            match probe(mid) {
                Ok(p) => {
                    point_flag |= p.flagged;
                    if p.ordered == lo_state {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Err(e) => {
                    error = Some(e.to_string());
                    point_flag = true;
                    break;
                }
            }
        }
        out.push(BoundaryPoint {
            slice,
            critical: Some(0.5 * (lo + hi)),
            width: hi - lo,
            detector: label,
            ordered_above: Some(!lo_state),
            flagged: point_flag,
            error,
        });
    }
    if out.is_empty() {
        out.push(blank(None, flagged));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::GiantSpinModel;
    use crate::response::dicke_critical_omega_z;
    use crate::units::SI;

    fn dicke_fixed(lambda: f64) -> Fixed {
        Fixed {
            model: MeanFieldModel::Ising { omega_z: 1.0, j: 0.0, geometry: Geometry::AllToAllNormalized },
            cavity: CavitySpec::new(1.0, lambda).unwrap(),
            thermal: Thermal::ZERO,
            consts: SI,
        }
    }

    fn dicke_sweep(detector: DetectorSpec, tol: f64) -> SweepSpec {
        SweepSpec {
            plane: Plane::OmegaZVsT,
            fixed: dicke_fixed(0.3),
            slice: Axis::linear(Var::T, 0.0, 0.15, 6),
            scan: Axis::linear(Var::OmegaZ, 0.01, 1.0, 12),
            detector,
            bisection_tol: tol,
        }
    }

    const MF: DetectorSpec =
        DetectorSpec::MeanFieldOrderParameter { threshold: 1e-4, sublattices: Sublattices::One, order: OrderKind::Uniform };

    #[test]
    fn axis_values() {
        assert_eq!(Axis::linear(Var::J, 0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        let log = Axis { var: Var::T, min: 1.0, max: 100.0, n_points: 3, spacing: Spacing::Log }.values();
        assert!((log[1] - 10.0).abs() < 1e-12);
        assert!(Axis { spacing: Spacing::Log, ..Axis::linear(Var::T, 0.0, 1.0, 3) }.validate().is_err());
        assert!(Axis::linear(Var::T, 1.0, 0.0, 3).validate().is_err());
    }

    #[test]
    fn closed_form_and_mean_field_agree_on_dicke_plane() {
        // The order-parameter threshold biases the mean-field crossing by
        // O(threshold²); at 1e-5 that stays well inside the tolerance.
        let tol = 1e-5;
        let a = trace_boundary(&dicke_sweep(DetectorSpec::FreeSpinClosedForm, tol)).unwrap();
        let b = trace_boundary(&dicke_sweep(MF, tol)).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            let (x, y) = (p.critical.unwrap(), q.critical.unwrap());
            assert!((x - y).abs() <= 2.0 * tol * x, "T={}: {x} vs {y}", p.slice);
            assert!(p.width <= tol * x);
            // Ordered (superradiant) side is small ω_z.
            assert_eq!(p.ordered_above, Some(false));
            let inv = dicke_critical_omega_z(0.3, 1.0, 0.5, Thermal::from_energy(p.slice).unwrap()).unwrap().unwrap();
            assert!((x - inv).abs() <= tol * x);
        }
    }

    #[test]
    fn halving_tolerance_stays_inside_bracket() {
        let coarse = trace_boundary(&dicke_sweep(MF, 1e-4)).unwrap();
        let fine = trace_boundary(&dicke_sweep(MF, 5e-5)).unwrap();
        for (c, f) in coarse.points.iter().zip(&fine.points) {
            assert!((c.critical.unwrap() - f.critical.unwrap()).abs() < c.width);
        }
    }

    #[test]
    fn no_boundary_marker() {
        let mut spec = dicke_sweep(DetectorSpec::FreeSpinClosedForm, 1e-6);
        spec.scan = Axis::linear(Var::OmegaZ, 0.5, 1.0, 4);
        spec.fixed.cavity.lambda_bar = 0.01;
        let b = trace_boundary(&spec).unwrap();
        assert!(b.points.iter().all(|p| p.critical.is_none() && p.error.is_none()));
        assert_eq!(b.points.len(), 6);
    }

    #[test]
    fn antiferromagnetic_side_has_finite_boundary() {
        let spec = SweepSpec {
            plane: Plane::JVsLambda,
            fixed: Fixed {
                model: MeanFieldModel::Ising { omega_z: 1.0, j: 0.0, geometry: Geometry::NearestNeighborPbc },
                ..dicke_fixed(0.0)
            },
            slice: Axis::linear(Var::J, -0.2, 0.2, 5),
            scan: Axis::linear(Var::LambdaBar, 0.0, 1.5, 16),
            detector: DetectorSpec::MeanFieldOrderParameter {
                threshold: 1e-4,
                sublattices: Sublattices::Two,
                order: OrderKind::Uniform,
            },
            bisection_tol: 1e-6,
        };
        let b = trace_boundary(&spec).unwrap();
        let crit: Vec<f64> = b.points.iter().map(|p| p.critical.unwrap()).collect();
        assert!(crit.windows(2).all(|w| w[1] < w[0]), "{crit:?}");
        // At J = 0 the Dicke value ½ is recovered.
        assert!((crit[2] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn response_detector_matches_closed_form_for_free_spins() {
        let spec = SweepSpec {
            plane: Plane::JVsLambda,
            fixed: Fixed {
                model: MeanFieldModel::Ising { omega_z: 1.0, j: 0.0, geometry: Geometry::NearestNeighborPbc },
                ..dicke_fixed(0.0)
            },
            slice: Axis::linear(Var::J, 0.0, 0.0, 1),
            scan: Axis::linear(Var::LambdaBar, 0.1, 1.0, 4),
            detector: DetectorSpec::ResponseCriterion { n_sites: 4, krylov_dim: 20, seed: 1 },
            bisection_tol: 1e-8,
        };
        let b = trace_boundary(&spec).unwrap();
        assert!((b.points[0].critical.unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn validation_rejects_mismatches() {
        let mut spec = dicke_sweep(MF, 1e-4);
        spec.scan.var = Var::B;
        assert!(trace_boundary(&spec).is_err());
        let mut spec = dicke_sweep(MF, 0.1);
        assert!(spec.validate().is_err());
        spec.bisection_tol = 1e-4;
        spec.fixed.model = MeanFieldModel::GiantSpin(GiantSpinModel::fe8(&SI));
        spec.detector = DetectorSpec::FreeSpinClosedForm;
        assert!(spec.validate().is_err());
    }
}
