//! Physical constants and conversions between laboratory units and the
//! internal energy unit (angular frequency, rad/s, with ħ = 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 SI constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Vacuum permeability, T²·m³/J.
    pub mu_0: f64,
    /// Landé g-factor.
    pub g_e: f64,
}

pub const SI: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    mu_b: 9.274_010_078_3e-24,
    mu_0: 1.256_637_062_12e-6,
    g_e: 2.0,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        SI
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hbar", self.hbar),
            ("k_b", self.k_b),
            ("mu_b", self.mu_b),
            ("mu_0", self.mu_0),
            ("g_e", self.g_e),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// k_B·T/ħ in rad/s.
    pub fn kelvin_to_rad_s(&self, kelvin: f64) -> f64 {
        kelvin * self.k_b / self.hbar
    }

    pub fn rad_s_to_kelvin(&self, omega: f64) -> f64 {
        omega * self.hbar / self.k_b
    }

    /// Zeeman frequency per unit spin, g·μ_B·B/ħ in rad/s.
    pub fn tesla_to_rad_s(&self, tesla: f64) -> f64 {
        tesla * self.g_e * self.mu_b / self.hbar
    }

    pub fn rad_s_to_tesla(&self, omega: f64) -> f64 {
        omega * self.hbar / (self.g_e * self.mu_b)
    }
}

/// Spin densities are quoted per cm³ in configs.
pub fn per_cm3_to_per_m3(rho: f64) -> f64 {
    rho * 1e6
}

/// Thermal energy k_B·T/ħ in rad/s. Zero is the ground-state limit and is
/// handled by dedicated code paths rather than a large-β limit.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Thermal(f64);

impl Thermal {
    pub const ZERO: Thermal = Thermal(0.0);

    pub fn from_energy(kt: f64) -> Result<Self> {
        if !kt.is_finite() || kt < 0.0 {
            return Err(Error::invalid(format!("temperature must be finite and >= 0, got {kt}")));
        }
        Ok(Thermal(kt))
    }

    pub fn from_kelvin(kelvin: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !kelvin.is_finite() || kelvin < 0.0 {
            return Err(Error::invalid(format!(
                "temperature must be finite and >= 0 K, got {kelvin}"
            )));
        }
        Ok(Thermal(consts.kelvin_to_rad_s(kelvin)))
    }

    pub fn energy(self) -> f64 {
        self.0
    }

    pub fn kelvin(self, consts: &PhysicalConstants) -> f64 {
        consts.rad_s_to_kelvin(self.0)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// Inverse temperature, `None` at T = 0.
    pub fn beta(self) -> Option<f64> {
        if self.0 > 0.0 {
            Some(1.0 / self.0)
        } else {
            None
        }
    }
}
