use num_complex::Complex64;

use super::{Method, Spectrum};
use crate::error::{Error, Result};
use crate::spin::CMatrix;

pub const DEFAULT_DENSE_CAP: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-10;

pub fn dense_eigh(h: &CMatrix) -> Result<Spectrum> {
    dense_eigh_capped(h, DEFAULT_DENSE_CAP)
}

/// Full eigendecomposition of a hermitian matrix. Purely real input takes the
/// real symmetric path.
pub fn dense_eigh_capped(h: &CMatrix, cap: usize) -> Result<Spectrum> {
    let n = check(h, cap)?;
    let real = h.iter().all(|z| z.im == 0.0);

    let (eigenvalues, eigenvectors, residuals) = if real {
        let a = faer::Mat::<f64>::from_fn(n, n, |r, c| 0.5 * (h[(r, c)].re + h[(c, r)].re));
        let eig = a.self_adjoint_eigen(faer::Side::Lower).map_err(evd_error)?;
        let u = eig.U();
        let values: Vec<f64> = (0..n).map(|i| eig.S()[i]).collect();
        let au = &a * u;
        let res = (0..n)
            .map(|c| (0..n).map(|r| (au[(r, c)] - values[c] * u[(r, c)]).powi(2)).sum::<f64>().sqrt())
            .collect();
        (values, CMatrix::from_fn(n, n, |r, c| Complex64::new(u[(r, c)], 0.0)), res)
    } else {
        let a = faer::Mat::<Complex64>::from_fn(n, n, |r, c| 0.5 * (h[(r, c)] + h[(c, r)].conj()));
        let eig = a.self_adjoint_eigen(faer::Side::Lower).map_err(evd_error)?;
        let u = eig.U();
        let values: Vec<f64> = (0..n).map(|i| eig.S()[i].re).collect();
        let au = &a * u;
        let res = (0..n)
            .map(|c| (0..n).map(|r| (au[(r, c)] - u[(r, c)] * values[c]).norm_sqr()).sum::<f64>().sqrt())
            .collect();
        (values, CMatrix::from_fn(n, n, |r, c| u[(r, c)]), res)
    };

    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(eigenvectors),
        residuals,
        converged: vec![true; n],
        method: Method::Dense,
        krylov_dim: None,
        covered_up_to: f64::INFINITY,
        gram_defect: None,
    })
}

/// Ascending eigenvalues only.
pub fn dense_eigenvalues(h: &CMatrix, cap: usize) -> Result<Vec<f64>> {
    let n = check(h, cap)?;
    let mut values: Vec<f64> = if h.iter().all(|z| z.im == 0.0) {
        let a = faer::Mat::<f64>::from_fn(n, n, |r, c| 0.5 * (h[(r, c)].re + h[(c, r)].re));
        a.self_adjoint_eigenvalues(faer::Side::Lower).map_err(evd_error)?
    } else {
        let a = faer::Mat::<Complex64>::from_fn(n, n, |r, c| 0.5 * (h[(r, c)] + h[(c, r)].conj()));
        a.self_adjoint_eigenvalues(faer::Side::Lower).map_err(evd_error)?
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn evd_error(e: faer::linalg::evd::EvdError) -> Error {
    Error::invalid(format!("eigendecomposition failed: {e:?}"))
}

fn check(h: &CMatrix, cap: usize) -> Result<usize> {
    if h.nrows() != h.ncols() {
        return Err(Error::invalid("matrix must be square"));
    }
    let n = h.nrows();
    if n > cap {
        return Err(Error::ResourceLimit(format!("dense dimension {n} exceeds cap {cap}")));
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let defect = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::invalid(format!("matrix is not hermitian (defect {defect:.3e})")));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::GiantSpinModel;
    use crate::spin::{max_abs, SpinOperatorSet};
    use crate::units::PhysicalConstants;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_sigma_z() {
        let s = SpinOperatorSet::new(0.5).unwrap();
        let spec = dense_eigh(&s.sz).unwrap();
        assert_eq!(spec.eigenvalues, vec![-0.5, 0.5]);
        assert!(spec.is_complete());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(dense_eigh(&m), Err(Error::InvalidArgument(_))));
        assert!(matches!(dense_eigh_capped(&CMatrix::zeros(3, 3), 2), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn random_hermitian_is_diagonalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let a = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let h = &a + a.adjoint();
        let spec = dense_eigh(&h).unwrap();
        let v = spec.eigenvectors.as_ref().unwrap();
        let d = v.adjoint() * &h * v;
        let off = CMatrix::from_fn(n, n, |r, c| if r == c { Complex64::new(0.0, 0.0) } else { d[(r, c)] });
        assert!(max_abs(&off) < 1e-10);
        assert!(spec.orthonormality_defect() < 1e-10);
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let only = dense_eigenvalues(&h, 100).unwrap();
        for (a, b) in only.iter().zip(&spec.eigenvalues) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fe8_zero_field_spectrum_regression() {
        // Frozen from the first dense diagonalization of the Fe8 single-ion
        // Hamiltonian at B = 0 (energies in kelvin).
        let consts = PhysicalConstants::default();
        let fe8 = GiantSpinModel::fe8(&consts);
        let h = fe8.single_ion_hamiltonian(&consts).unwrap();
        let spec = dense_eigh(&h).unwrap();
        assert_eq!(spec.len(), 21);
        let k: Vec<f64> = spec.eigenvalues.iter().map(|&e| consts.rad_s_to_kelvin(e)).collect();
        let splitting = k[1] - k[0];
        assert!((k[0] - FE8_GROUND_K).abs() < 1e-9, "ground {}", k[0]);
        assert!((splitting - FE8_GROUND_SPLITTING_K).abs() < 1e-12 + 1e-6 * FE8_GROUND_SPLITTING_K, "splitting {splitting:e}");
        assert!((k[2] - FE8_THIRD_K).abs() < 1e-9, "third {}", k[2]);
        assert!(spec.residuals.iter().all(|&r| r < 1e-6 * consts.kelvin_to_rad_s(1.0)));
    }

    const FE8_GROUND_K: f64 = -2.9438222757968095e1;
    const FE8_GROUND_SPLITTING_K: f64 = 3.721822849911405e-10;
    const FE8_THIRD_K: f64 = -2.393011952322005e1;
}
