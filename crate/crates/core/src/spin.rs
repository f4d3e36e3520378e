//! Dense spin-S operators in the |S, m⟩ basis ordered m = S, S−1, …, −S (ħ = 1).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Clone, Debug)]
pub struct SpinOperatorSet {
    two_s: u32,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub splus: CMatrix,
    pub sminus: CMatrix,
}

impl SpinOperatorSet {
    /// Builds the operators for spin `s`; `2s` must be a non-negative integer.
    pub fn new(s: f64) -> Result<Self> {
        let two_s = 2.0 * s;
        if !two_s.is_finite() || two_s < 0.0 || (two_s - two_s.round()).abs() > 1e-12 {
            return Err(Error::invalid(format!("spin must be a non-negative half-integer, got {s}")));
        }
        Ok(Self::from_twice(two_s.round() as u32))
    }

    pub fn from_twice(two_s: u32) -> Self {
        let s = two_s as f64 / 2.0;
        let dim = two_s as usize + 1;
        let m = |i: usize| s - i as f64;

        let sz = CMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                Complex64::new(m(r), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        // ⟨m+1|S⁺|m⟩ = sqrt(S(S+1) − m(m+1)); row index r has m(r) = m(c) + 1.
        let splus = CMatrix::from_fn(dim, dim, |r, c| {
            if r + 1 == c {
                let mc = m(c);
                Complex64::new((s * (s + 1.0) - mc * (mc + 1.0)).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let sminus = splus.adjoint();
        let sx = (&splus + &sminus).scale(0.5);
        let sy = (&splus - &sminus) * Complex64::new(0.0, -0.5);

        SpinOperatorSet { two_s, sx, sy, sz, splus, sminus }
    }

    pub fn spin(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    pub fn dim(&self) -> usize {
        self.two_s as usize + 1
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }
}

/// Largest elementwise modulus of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a * b - b * a
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let s = SpinOperatorSet::new(0.5).unwrap();
        assert_eq!(s.sz[(0, 0)].re, 0.5);
        assert_eq!(s.sz[(1, 1)].re, -0.5);
        assert_eq!(s.sx[(0, 1)].re, 0.5);
        assert_eq!(s.sx[(1, 0)].re, 0.5);
        assert_eq!(s.sy[(0, 1)], Complex64::new(0.0, -0.5));
    }

    #[test]
    fn spin_one_ladder() {
        let s = SpinOperatorSet::new(1.0).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| s.sz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        // ⟨1|S⁺|0⟩
        assert!((s.splus[(0, 1)].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_half_integer() {
        assert!(SpinOperatorSet::new(0.3).is_err());
        assert!(SpinOperatorSet::new(-0.5).is_err());
    }

    #[test]
    fn algebra_holds_for_many_spins() {
        for two_s in 0..=20 {
            let s = SpinOperatorSet::from_twice(two_s);
            let i = Complex64::i();
            assert!(max_abs(&(commutator(&s.sx, &s.sy) - s.sz.map(|z| z * i))) < 1e-12);
            assert!(max_abs(&(commutator(&s.sy, &s.sz) - s.sx.map(|z| z * i))) < 1e-12);
            assert!(max_abs(&(commutator(&s.sz, &s.sx) - s.sy.map(|z| z * i))) < 1e-12);
            let casimir = &s.sx * &s.sx + &s.sy * &s.sy + &s.sz * &s.sz;
            let sp = s.spin();
            let expect = s.identity().scale(sp * (sp + 1.0));
            assert!(max_abs(&(casimir - expect)) < 1e-12 * (1.0 + sp * sp));
            let sum = &s.sx + s.sy.map(|z| z * i);
            assert!(max_abs(&(sum - &s.splus)) < 1e-12);
            assert!(max_abs(&(s.splus.adjoint() - &s.sminus)) < 1e-15);
        }
    }

    #[test]
    fn spin_ten_sx_extremal_eigenvalue() {
        let s = SpinOperatorSet::new(10.0).unwrap();
        assert_eq!(s.dim(), 21);
        let eig = s.sx.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - 10.0).abs() < 1e-12);
    }
}
