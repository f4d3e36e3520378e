//! C ABI over `cavity_spt`.
//!
//! Every fallible function returns an `int32_t` status (`CSPT_OK` on
//! success) and writes results through out-pointers. On failure the message
//! is kept per thread and read with `cspt_last_error`. Results too rich for
//! plain structs come back as opaque handles owned by the caller and
//! released with the matching `*_free`.
//!
//! All quantities are in rad/s (temperatures as k_BT/ħ) except the giant-spin
//! field, which is in tesla.
//!
//! Pointer arguments must be null or valid for the access implied by their
//! type; handles must come from this library and be freed at most once.

// Entry points are meant for C callers; null is checked, the rest is the
// documented contract above.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cavity_spt::cli::{self, RunArgs};
use cavity_spt::hamiltonian::{CavitySpec, Geometry, GiantSpinModel};
use cavity_spt::meanfield::{solve_selfconsistent, MeanFieldModel, MeanFieldProblem, MeanFieldSolution, Sublattices};
use cavity_spt::phase::{
    trace_boundary, Axis, DetectorSpec, Fixed, OrderKind, PhaseBoundary, Plane, SweepSpec, Var,
};
use cavity_spt::response::{dicke_critical_coupling, lambda_bar_from_material};
use cavity_spt::transmission::transmission_point;
use cavity_spt::units::SI;
use cavity_spt::{Error, Thermal};

pub const CSPT_OK: i32 = 0;
pub const CSPT_ERR_INVALID_ARGUMENT: i32 = 1;
pub const CSPT_ERR_RESOURCE_LIMIT: i32 = 2;
pub const CSPT_ERR_CONFIG: i32 = 3;
pub const CSPT_ERR_OUTPUT_EXISTS: i32 = 4;
pub const CSPT_ERR_IO: i32 = 5;
pub const CSPT_ERR_SERIALIZATION: i32 = 6;
pub const CSPT_ERR_NULL_POINTER: i32 = 7;
pub const CSPT_ERR_PANIC: i32 = 8;

pub const CSPT_GEOMETRY_NEAREST_NEIGHBOR_PBC: i32 = 0;
pub const CSPT_GEOMETRY_ALL_TO_ALL: i32 = 1;

/// Opaque mean-field solution.
pub struct CsptMeanField(MeanFieldSolution);

/// Opaque traced phase boundary.
pub struct CsptBoundary(PhaseBoundary);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CsptMeanFieldSummary {
    /// ⟨S_x⟩ averaged over sublattices.
    pub m_uniform: f64,
    pub m_staggered: f64,
    pub sz: f64,
    pub free_energy_per_spin: f64,
    pub alpha_per_sqrt_n: f64,
    pub photons_per_spin: f64,
    pub residual: f64,
    pub iterations: u64,
    pub sublattices: u32,
    pub converged: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CsptBoundaryPoint {
    pub slice: f64,
    /// NaN when the slice has no detector flip.
    pub critical: f64,
    pub width: f64,
    pub has_critical: bool,
    /// Ordered phase lies above `critical` on the scan axis.
    pub ordered_above: bool,
    pub flagged: bool,
    pub failed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => CSPT_ERR_INVALID_ARGUMENT,
        Error::ResourceLimit(_) => CSPT_ERR_RESOURCE_LIMIT,
        Error::Config { .. } => CSPT_ERR_CONFIG,
        Error::OutputExists(_) => CSPT_ERR_OUTPUT_EXISTS,
        Error::Io { .. } => CSPT_ERR_IO,
        Error::Csv(_) | Error::Json(_) => CSPT_ERR_SERIALIZATION,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CSPT_OK,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CSPT_ERR_NULL_POINTER
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            CSPT_ERR_PANIC
        }
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a pointer valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn thermal(kt: f64) -> Result<Thermal, Failure> {
    Ok(Thermal::from_energy(kt)?)
}

fn geometry(code: i32) -> Result<Geometry, Failure> {
    match code {
        CSPT_GEOMETRY_NEAREST_NEIGHBOR_PBC => Ok(Geometry::NearestNeighborPbc),
        CSPT_GEOMETRY_ALL_TO_ALL => Ok(Geometry::AllToAllNormalized),
        _ => Err(Error::InvalidArgument(format!("unknown geometry code {code}")).into()),
    }
}

fn sublattices(n: u32) -> Result<Sublattices, Failure> {
    match n {
        1 => Ok(Sublattices::One),
        2 => Ok(Sublattices::Two),
        _ => Err(Error::InvalidArgument(format!("sublattice count must be 1 or 2, got {n}")).into()),
    }
}

fn cstr(p: *const c_char, what: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and, per the contract, NUL-terminated.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| Error::InvalidArgument(format!("{what} is not valid UTF-8")).into())
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cspt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cspt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Free-spin critical coupling λ̄_c(ω_z, Ω, S, T).
#[no_mangle]
pub extern "C" fn cspt_dicke_critical_coupling(omega_z: f64, omega: f64, spin: f64, kt: f64, lambda_c: *mut f64) -> i32 {
    guard(|| {
        let o = out(lambda_c, "lambda_c")?;
        *o = dicke_critical_coupling(omega_z, omega, spin, thermal(kt)?)?;
        Ok(())
    })
}

/// Collective coupling λ̄ from spin density (per m³), filling factor and Ω.
#[no_mangle]
pub extern "C" fn cspt_lambda_bar_from_material(rho_per_m3: f64, nu: f64, omega: f64, lambda_bar: *mut f64) -> i32 {
    guard(|| {
        let o = out(lambda_bar, "lambda_bar")?;
        *o = lambda_bar_from_material(rho_per_m3, nu, omega, &SI)?;
        Ok(())
    })
}

/// Complex transmission t(ω) for given equilibrium Pauli expectations.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn cspt_transmission_point(
    omega: f64,
    omega_z: f64,
    cavity_omega: f64,
    lambda_bar: f64,
    kappa: f64,
    gamma: f64,
    sz0: f64,
    sx0: f64,
    re: *mut f64,
    im: *mut f64,
) -> i32 {
    guard(|| {
        let re = out(re, "re")?;
        let im = out(im, "im")?;
        let t = transmission_point(omega, omega_z, cavity_omega, lambda_bar, kappa, gamma, sz0, sx0)?;
        *re = t.re;
        *im = t.im;
        Ok(())
    })
}

fn solve(
    setup: impl FnOnce() -> Result<(MeanFieldModel, Sublattices), Failure>,
    omega: f64,
    lambda_bar: f64,
    kt: f64,
    handle: *mut *mut CsptMeanField,
) -> i32 {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        let (model, subl) = setup()?;
        let p = MeanFieldProblem::new(model, CavitySpec::new(omega, lambda_bar)?, thermal(kt)?, subl);
        let sol = solve_selfconsistent(&p)?;
        *h = Box::into_raw(Box::new(CsptMeanField(sol)));
        Ok(())
    })
}

/// Self-consistent mean field of the cavity-dressed transverse Ising model.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn cspt_meanfield_solve_ising(
    omega_z: f64,
    j: f64,
    geometry_code: i32,
    n_sublattices: u32,
    cavity_omega: f64,
    lambda_bar: f64,
    kt: f64,
    handle: *mut *mut CsptMeanField,
) -> i32 {
    let setup = || {
        let geometry = geometry(geometry_code)?;
        Ok((MeanFieldModel::Ising { omega_z, j, geometry }, sublattices(n_sublattices)?))
    };
    solve(setup, cavity_omega, lambda_bar, kt, handle)
}

/// Self-consistent mean field of a giant spin (easy axis x, field in the
/// y–z plane at angle `phi` in radians, `b_tesla` in tesla).
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn cspt_meanfield_solve_giant_spin(
    spin: f64,
    d: f64,
    e: f64,
    j: f64,
    b_tesla: f64,
    phi: f64,
    cavity_omega: f64,
    lambda_bar: f64,
    kt: f64,
    handle: *mut *mut CsptMeanField,
) -> i32 {
    let model = GiantSpinModel { s: spin, d, e, b_mag: b_tesla, phi, j };
    solve(|| Ok((MeanFieldModel::GiantSpin(model), Sublattices::One)), cavity_omega, lambda_bar, kt, handle)
}

#[no_mangle]
pub extern "C" fn cspt_meanfield_summary(handle: *const CsptMeanField, summary: *mut CsptMeanFieldSummary) -> i32 {
    guard(|| {
        // SAFETY: handle is null or came from a cspt_meanfield_solve_* call.
        let h = unsafe { handle.as_ref() }.ok_or(Failure::Null("handle"))?;
        let s = &h.0;
        *out(summary, "summary")? = CsptMeanFieldSummary {
            m_uniform: s.m_uniform,
            m_staggered: s.m_stag,
            sz: s.sz,
            free_energy_per_spin: s.free_energy_per_spin,
            alpha_per_sqrt_n: s.alpha_per_sqrt_n,
            photons_per_spin: s.photons_per_spin,
            residual: s.residual,
            iterations: s.iterations as u64,
            sublattices: s.m.len() as u32,
            converged: s.converged,
        };
        Ok(())
    })
}

/// ⟨S_x⟩ on sublattice `index`.
#[no_mangle]
pub extern "C" fn cspt_meanfield_sublattice_m(handle: *const CsptMeanField, index: u32, m: *mut f64) -> i32 {
    guard(|| {
        // SAFETY: as in cspt_meanfield_summary.
        let h = unsafe { handle.as_ref() }.ok_or(Failure::Null("handle"))?;
        let v = h.0.m.get(index as usize).ok_or_else(|| {
            Error::InvalidArgument(format!("sublattice index {index} out of range ({})", h.0.m.len()))
        })?;
        *out(m, "m")? = *v;
        Ok(())
    })
}

/// Releases a mean-field handle; null is ignored.
#[no_mangle]
pub extern "C" fn cspt_meanfield_free(handle: *mut CsptMeanField) {
    if !handle.is_null() {
        // SAFETY: created by Box::into_raw in this crate and freed once.
        drop(unsafe { Box::from_raw(handle) });
    }
}

fn boundary(spec: impl FnOnce() -> Result<SweepSpec, Failure>, handle: *mut *mut CsptBoundary) -> i32 {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        let b = trace_boundary(&spec()?)?;
        *h = Box::into_raw(Box::new(CsptBoundary(b)));
        Ok(())
    })
}

fn ising_fixed(omega_z: f64, geometry: Geometry, omega: f64, kt: f64) -> Result<Fixed, Failure> {
    Ok(Fixed {
        model: MeanFieldModel::Ising { omega_z, j: 0.0, geometry },
        cavity: CavitySpec::new(omega, 0.0)?,
        thermal: thermal(kt)?,
        consts: SI,
    })
}

/// Mean-field λ̄_c(J) of the transverse Ising model: one boundary search per
/// J on the grid, each bisected on the λ̄ grid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn cspt_boundary_ising_mean_field(
    omega_z: f64,
    geometry_code: i32,
    n_sublattices: u32,
    staggered: bool,
    cavity_omega: f64,
    kt: f64,
    j_min: f64,
    j_max: f64,
    j_points: usize,
    lambda_min: f64,
    lambda_max: f64,
    lambda_points: usize,
    threshold: f64,
    bisection_tol: f64,
    handle: *mut *mut CsptBoundary,
) -> i32 {
    let spec = || {
        let subl = sublattices(n_sublattices)?;
        Ok(SweepSpec {
            plane: Plane::JVsLambda,
            fixed: ising_fixed(omega_z, geometry(geometry_code)?, cavity_omega, kt)?,
            slice: Axis::linear(Var::J, j_min, j_max, j_points),
            scan: Axis::linear(Var::LambdaBar, lambda_min, lambda_max, lambda_points),
            detector: DetectorSpec::MeanFieldOrderParameter {
                threshold,
                sublattices: subl,
                order: if staggered { OrderKind::Staggered } else { OrderKind::Uniform },
            },
            bisection_tol,
        })
    };
    boundary(spec, handle)
}

/// Response-criterion λ̄_c(J) from exact diagonalization of an
/// `n_sites` nearest-neighbour chain.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn cspt_boundary_ising_response(
    n_sites: usize,
    krylov_dim: usize,
    seed: u64,
    omega_z: f64,
    cavity_omega: f64,
    kt: f64,
    j_min: f64,
    j_max: f64,
    j_points: usize,
    lambda_min: f64,
    lambda_max: f64,
    lambda_points: usize,
    bisection_tol: f64,
    handle: *mut *mut CsptBoundary,
) -> i32 {
    let spec = || {
        Ok(SweepSpec {
            plane: Plane::JVsLambda,
            fixed: ising_fixed(omega_z, Geometry::NearestNeighborPbc, cavity_omega, kt)?,
            slice: Axis::linear(Var::J, j_min, j_max, j_points),
            scan: Axis::linear(Var::LambdaBar, lambda_min, lambda_max, lambda_points),
            detector: DetectorSpec::ResponseCriterion { n_sites, krylov_dim, seed },
            bisection_tol,
        })
    };
    boundary(spec, handle)
}

#[no_mangle]
pub extern "C" fn cspt_boundary_len(handle: *const CsptBoundary, len: *mut usize) -> i32 {
    guard(|| {
        // SAFETY: handle is null or came from a cspt_boundary_* call.
        let h = unsafe { handle.as_ref() }.ok_or(Failure::Null("handle"))?;
        *out(len, "len")? = h.0.points.len();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn cspt_boundary_point(handle: *const CsptBoundary, index: usize, point: *mut CsptBoundaryPoint) -> i32 {
    guard(|| {
        // SAFETY: as in cspt_boundary_len.
        let h = unsafe { handle.as_ref() }.ok_or(Failure::Null("handle"))?;
        let p = h.0.points.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!("point index {index} out of range ({})", h.0.points.len()))
        })?;
        *out(point, "point")? = CsptBoundaryPoint {
            slice: p.slice,
            critical: p.critical.unwrap_or(f64::NAN),
            width: p.width,
            has_critical: p.critical.is_some(),
            ordered_above: p.ordered_above.unwrap_or(false),
            flagged: p.flagged,
            failed: p.error.is_some(),
        };
        Ok(())
    })
}

/// Releases a boundary handle; null is ignored.
#[no_mangle]
pub extern "C" fn cspt_boundary_free(handle: *mut CsptBoundary) {
    if !handle.is_null() {
        // SAFETY: created by Box::into_raw in this crate and freed once.
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Runs a config file like the `cavity-spt run` command. `out_prefix` may be
/// null to use the config's `output`. On success `manifest_path` receives a
/// string to release with `cspt_string_free`.
#[no_mangle]
pub extern "C" fn cspt_run_config(
    config_path: *const c_char,
    out_prefix: *const c_char,
    overwrite: bool,
    manifest_path: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let dst = out(manifest_path, "manifest_path")?;
        *dst = ptr::null_mut();
        let config = PathBuf::from(cstr(config_path, "config_path")?);
        let prefix = if out_prefix.is_null() { None } else { Some(PathBuf::from(cstr(out_prefix, "out_prefix")?)) };
        let args = RunArgs { config: Some(config), out: prefix, overwrite, ..Default::default() };
        let manifest = cli::run(&args)?;
        let s = CString::new(manifest.to_string_lossy().into_owned())
            .map_err(|_| Error::InvalidArgument("manifest path contains NUL".into()))?;
        *dst = s.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
#[no_mangle]
pub extern "C" fn cspt_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: created by CString::into_raw in this crate and freed once.
        drop(unsafe { CString::from_raw(s) });
    }
}
