//! Experiment configuration files.
//!
//! TOML, parsed strictly: unknown keys are errors. Every physical quantity
//! carries its unit in the key name (`_per_s` for rad/s, `_k` for kelvin,
//! `_t` for tesla, `_per_cm3` for spin density, `_deg` for angles).
//!
//! ```toml
//! experiment = "dicke-critical"
//! output = "out/dicke"
//!
//! [dicke-critical]
//! omega_z_per_s = 1.4e9
//! omega_per_s = 1.4e9
//! spin = 0.5
//! temperatures_k = [0.0, 1e-3]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Geometry;
use crate::meanfield::Sublattices;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DickeCritical,
    IsingPhaseDiagram,
    EdBoundary,
    Fe8Boundary,
    TransmissionMap,
    LambdaBar,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::DickeCritical => "dicke-critical",
            Experiment::IsingPhaseDiagram => "ising-phase-diagram",
            Experiment::EdBoundary => "ed-boundary",
            Experiment::Fe8Boundary => "fe8-boundary",
            Experiment::TransmissionMap => "transmission-map",
            Experiment::LambdaBar => "lambda-bar",
        }
    }

    /// Suffixes of the CSV tables the experiment writes.
    pub fn tables(self) -> &'static [&'static str] {
        match self {
            Experiment::DickeCritical => &["critical"],
            Experiment::IsingPhaseDiagram => &["grid", "boundary"],
            Experiment::EdBoundary | Experiment::Fe8Boundary => &["boundary"],
            Experiment::TransmissionMap => &["map", "columns"],
            Experiment::LambdaBar => &["lambda_bar"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Output path prefix; `--out` takes precedence.
    pub output: Option<PathBuf>,
    /// Seed for randomized starts (Lanczos); `--seed` takes precedence.
    pub seed: Option<u64>,
    #[serde(rename = "dicke-critical")]
    pub dicke_critical: Option<DickeCriticalConfig>,
    #[serde(rename = "ising-phase-diagram")]
    pub ising_phase_diagram: Option<IsingPhaseDiagramConfig>,
    #[serde(rename = "ed-boundary")]
    pub ed_boundary: Option<EdBoundaryConfig>,
    #[serde(rename = "fe8-boundary")]
    pub fe8_boundary: Option<Fe8BoundaryConfig>,
    #[serde(rename = "transmission-map")]
    pub transmission_map: Option<TransmissionMapConfig>,
    #[serde(rename = "lambda-bar")]
    pub lambda_bar: Option<LambdaBarConfig>,
}

/// Inclusive linear grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self, key: &str) -> Result<()> {
        if self.points == 0 || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid(format!("{key}: needs finite bounds and points >= 1")));
        }
        if self.points > 1 && !(self.max > self.min) {
            return Err(Error::invalid(format!("{key}: max must exceed min")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + (self.max - self.min) * i as f64 / last).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DickeCriticalConfig {
    pub omega_z_per_s: f64,
    pub omega_per_s: f64,
    pub spin: f64,
    pub temperatures_k: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaBarConfig {
    pub rho_per_cm3: f64,
    pub omega_per_s: f64,
    pub filling_factors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingPhaseDiagramConfig {
    pub omega_z_per_s: f64,
    pub omega_per_s: f64,
    pub temperature_k: f64,
    pub geometry: Geometry,
    pub sublattices: Sublattices,
    pub j_per_s: Grid,
    pub lambda_bar_per_s: Grid,
    /// Order parameter threshold, as a fraction of S, for the boundary trace.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_bisection_tol")]
    pub bisection_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdBoundaryConfig {
    pub n_sites: usize,
    pub krylov_dim: usize,
    pub omega_z_per_s: f64,
    pub omega_per_s: f64,
    pub temperature_k: f64,
    pub j_per_s: Grid,
    pub lambda_bar_per_s: Grid,
    #[serde(default = "default_bisection_tol")]
    pub bisection_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fe8BoundaryConfig {
    pub spin: f64,
    pub d_k: f64,
    pub e_k: f64,
    pub j_k: f64,
    pub phi_deg: f64,
    pub omega_per_s: f64,
    pub rho_per_cm3: f64,
    pub filling_factors: Vec<f64>,
    /// Slices for B_c(T); also the scan window for T_c(B).
    pub temperature_k: Grid,
    /// Slices for T_c(B); also the scan window for B_c(T).
    pub field_t: Grid,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_bisection_tol")]
    pub bisection_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionMapConfig {
    pub omega_per_s: f64,
    pub rho_per_cm3: f64,
    pub filling_factor: f64,
    pub kappa_per_s: f64,
    pub gamma_per_s: f64,
    pub temperature_k: f64,
    pub probe_per_s: Grid,
    pub omega_z_per_s: Grid,
}

fn default_threshold() -> f64 {
    1e-4
}

fn default_bisection_tol() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.check_sections().map_err(|message| Error::Config { path: path.to_path_buf(), message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    /// Exactly the section named by `experiment` must be present.
    fn check_sections(&self) -> std::result::Result<(), String> {
        let present = [
            (Experiment::DickeCritical, self.dicke_critical.is_some()),
            (Experiment::IsingPhaseDiagram, self.ising_phase_diagram.is_some()),
            (Experiment::EdBoundary, self.ed_boundary.is_some()),
            (Experiment::Fe8Boundary, self.fe8_boundary.is_some()),
            (Experiment::TransmissionMap, self.transmission_map.is_some()),
            (Experiment::LambdaBar, self.lambda_bar.is_some()),
        ];
        for (exp, is_set) in present {
            if exp == self.experiment && !is_set {
                return Err(format!("missing section [{}]", exp.name()));
            }
            if exp != self.experiment && is_set {
                return Err(format!(
                    "section [{}] does not belong to experiment \"{}\"",
                    exp.name(),
                    self.experiment.name()
                ));
            }
        }
        Ok(())
    }
}
