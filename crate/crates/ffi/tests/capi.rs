use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use cavity_spt_ffi::*;

fn last_error() -> String {
    let p = cspt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn critical_coupling_matches_zero_temperature_form() {
    let mut lc = 0.0;
    assert_eq!(cspt_dicke_critical_coupling(2.0, 0.5, 0.5, 0.0, &mut lc), CSPT_OK);
    assert!((lc - 0.5).abs() < 1e-14);
}

#[test]
fn errors_map_to_status_and_message() {
    let mut lc = 0.0;
    assert_eq!(cspt_dicke_critical_coupling(1.0, -1.0, 0.5, 0.0, &mut lc), CSPT_ERR_INVALID_ARGUMENT);
    assert!(last_error().starts_with("invalid argument"));

    assert_eq!(cspt_dicke_critical_coupling(1.0, 1.0, 0.5, 0.0, ptr::null_mut()), CSPT_ERR_NULL_POINTER);
    assert!(last_error().contains("lambda_c"));

    let mut lb = 0.0;
    assert_eq!(cspt_lambda_bar_from_material(1e26, 2.0, 1e9, &mut lb), CSPT_ERR_INVALID_ARGUMENT);
}

#[test]
fn transmission_is_passive_and_resonant_dip_is_deep() {
    let (mut re, mut im) = (0.0, 0.0);
    // Empty cavity on resonance transmits fully.
    assert_eq!(cspt_transmission_point(1.0, 1.0, 1.0, 0.0, 0.01, 0.01, -1.0, 0.0, &mut re, &mut im), CSPT_OK);
    assert!((re * re + im * im - 1.0).abs() < 1e-12);
    // Strong coupling splits the line: the bare cavity frequency is suppressed.
    assert_eq!(cspt_transmission_point(1.0, 1.0, 1.0, 0.2, 0.01, 0.01, -1.0, 0.0, &mut re, &mut im), CSPT_OK);
    assert!((re * re + im * im).sqrt() < 0.1);
}

#[test]
fn mean_field_handle_lifecycle() {
    let mut h: *mut CsptMeanField = ptr::null_mut();
    // Dicke limit above λ̄_c = 0.5: ordered, m² = ¼ − (ω_zΩ/(8λ̄²))².
    let s = cspt_meanfield_solve_ising(1.0, 0.0, CSPT_GEOMETRY_ALL_TO_ALL, 1, 1.0, 0.8, 0.0, &mut h);
    assert_eq!(s, CSPT_OK, "{}", last_error());
    assert!(!h.is_null());
    let mut sum = CsptMeanFieldSummary::default();
    assert_eq!(cspt_meanfield_summary(h, &mut sum), CSPT_OK);
    assert!(sum.converged);
    assert_eq!(sum.sublattices, 1);
    let expect = (0.25 - (1.0f64 / (8.0 * 0.64)).powi(2)).sqrt();
    assert!((sum.m_uniform.abs() - expect).abs() < 1e-6, "{} vs {expect}", sum.m_uniform);

    let mut m0 = 0.0;
    assert_eq!(cspt_meanfield_sublattice_m(h, 0, &mut m0), CSPT_OK);
    assert_eq!(m0, sum.m_uniform);
    assert_eq!(cspt_meanfield_sublattice_m(h, 1, &mut m0), CSPT_ERR_INVALID_ARGUMENT);
    cspt_meanfield_free(h);
    cspt_meanfield_free(ptr::null_mut());

    assert_eq!(cspt_meanfield_solve_ising(1.0, 0.0, 7, 1, 1.0, 0.8, 0.0, &mut h), CSPT_ERR_INVALID_ARGUMENT);
    assert!(h.is_null());
    assert_eq!(cspt_meanfield_summary(ptr::null(), &mut sum), CSPT_ERR_NULL_POINTER);
}

#[test]
fn giant_spin_handle_is_disordered_without_cavity() {
    let mut h = ptr::null_mut();
    let s = cspt_meanfield_solve_giant_spin(10.0, 38.5e9, 6.0e9, 0.0, 3.0, 68f64.to_radians(), 1e10, 0.0, 1.0e11, &mut h);
    assert_eq!(s, CSPT_OK, "{}", last_error());
    let mut sum = CsptMeanFieldSummary::default();
    assert_eq!(cspt_meanfield_summary(h, &mut sum), CSPT_OK);
    assert!(sum.m_uniform.abs() < 1e-6);
    cspt_meanfield_free(h);
}

#[test]
fn mean_field_boundary_follows_cavity_shifted_criterion() {
    // Uniform order on the all-to-all chain sets in at 4λ̄²/Ω + J = ω_z.
    let mut h = ptr::null_mut();
    let s = cspt_boundary_ising_mean_field(
        1.0, CSPT_GEOMETRY_ALL_TO_ALL, 1, false, 1.0, 0.0, -0.2, 0.2, 3, 0.0, 1.0, 11, 1e-4, 1e-8, &mut h,
    );
    assert_eq!(s, CSPT_OK, "{}", last_error());
    let mut n = 0;
    assert_eq!(cspt_boundary_len(h, &mut n), CSPT_OK);
    assert_eq!(n, 3);
    for i in 0..n {
        let mut p = CsptBoundaryPoint::default();
        assert_eq!(cspt_boundary_point(h, i, &mut p), CSPT_OK);
        assert!(p.has_critical && p.ordered_above && !p.failed);
        let expect = ((1.0 - p.slice) / 4.0).sqrt();
        assert!((p.critical - expect).abs() < 1e-3, "J={} {} vs {expect}", p.slice, p.critical);
    }
    let mut p = CsptBoundaryPoint::default();
    assert_eq!(cspt_boundary_point(h, n, &mut p), CSPT_ERR_INVALID_ARGUMENT);
    cspt_boundary_free(h);
}

#[test]
fn response_boundary_reaches_free_spin_value_at_zero_exchange() {
    let mut h = ptr::null_mut();
    let s = cspt_boundary_ising_response(4, 16, 1, 1.0, 1.0, 0.0, 0.0, 0.0, 1, 0.1, 1.0, 10, 1e-6, &mut h);
    assert_eq!(s, CSPT_OK, "{}", last_error());
    let mut p = CsptBoundaryPoint::default();
    assert_eq!(cspt_boundary_point(h, 0, &mut p), CSPT_OK);
    assert!((p.critical - 0.5).abs() < 1e-4, "{}", p.critical);
    cspt_boundary_free(h);
}

#[test]
fn run_config_writes_manifest_and_refuses_collisions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lb.toml");
    std::fs::write(
        &cfg,
        "experiment = \"lambda-bar\"\n[lambda-bar]\nrho_per_cm3 = 5.1e20\nomega_per_s = 1.4e9\nfilling_factors = [1.0]\n",
    )
    .unwrap();
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let prefix = CString::new(dir.path().join("lb").to_str().unwrap()).unwrap();

    let mut manifest = ptr::null_mut();
    assert_eq!(cspt_run_config(c.as_ptr(), prefix.as_ptr(), false, &mut manifest), CSPT_OK, "{}", last_error());
    let path = unsafe { CStr::from_ptr(manifest) }.to_str().unwrap().to_owned();
    assert!(Path::new(&path).exists());
    cspt_string_free(manifest);

    let mut again = ptr::null_mut();
    assert_eq!(cspt_run_config(c.as_ptr(), prefix.as_ptr(), false, &mut again), CSPT_ERR_OUTPUT_EXISTS);
    assert!(again.is_null());
    assert_eq!(cspt_run_config(c.as_ptr(), prefix.as_ptr(), true, &mut again), CSPT_OK);
    cspt_string_free(again);

    assert_eq!(cspt_run_config(ptr::null(), ptr::null(), false, &mut again), CSPT_ERR_NULL_POINTER);
    // No prefix and no `output` key in the config.
    assert_eq!(cspt_run_config(c.as_ptr(), ptr::null(), false, &mut again), CSPT_ERR_INVALID_ARGUMENT);
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(cspt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cavity_spt.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["cspt_meanfield_solve_ising", "cspt_boundary_free", "cspt_run_config", "CSPT_ERR_PANIC"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; header syntax check skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        "#include \"cavity_spt.h\"\nint main(void) {\n  double lc;\n  CsptMeanField *h = NULL;\n  \
         cspt_meanfield_free(h);\n  return cspt_dicke_critical_coupling(1.0, 1.0, 0.5, 0.0, &lc);\n}\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
