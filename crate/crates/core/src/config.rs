//! JSON run configuration: one document with optional `lattice`,
//! `geometry`, and `manufactured` sections plus solver parameters.
//! Unknown keys are rejected everywhere.

use std::path::Path;

use num::rational::Rational64;
use serde::Deserialize;

use crate::error::PipelineError;
use crate::lattice::{parse_rat, BundleTopologyData};
use crate::solver::SolverParams;

type Rat = Rational64;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub geometry: Option<GeometryConfig>,
    #[serde(default)]
    pub manufactured: Option<ManufacturedConfig>,
    #[serde(default)]
    pub solver: SolverParams,
}

/// Description of the blown-up orbifold lattice and the integrability
/// budget inputs. `h_self` may be given directly as "p/q" or through
/// `weights`/`degrees` of a weighted complete intersection.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub h_self: Option<String>,
    #[serde(default)]
    pub weights: Option<Vec<i64>>,
    #[serde(default)]
    pub degrees: Option<Vec<i64>>,
    #[serde(alias = "num_A1")]
    pub num_a1: u32,
    #[serde(default)]
    pub k_blown: u32,
    #[serde(default)]
    pub bundle: Option<BundleTopologyData>,
    #[serde(default)]
    pub q1: Option<String>,
    #[serde(default)]
    pub q2: Option<String>,
    /// alpha' values ("p/q") for the integrability budget table.
    #[serde(default)]
    pub alpha_grid: Vec<String>,
}

fn default_name() -> String {
    "lattice".to_string()
}

impl LatticeConfig {
    pub fn resolve_h_self(&self) -> Result<Rat, PipelineError> {
        match (&self.h_self, &self.weights, &self.degrees) {
            (Some(s), None, None) => parse_rat(s).map_err(PipelineError::Lattice),
            (None, Some(w), Some(d)) => {
                crate::lattice::weighted_ci_h_self(w, d).map_err(PipelineError::Lattice)
            }
            _ => Err(PipelineError::Config(
                "lattice needs either h_self or both weights and degrees".to_string(),
            )),
        }
    }
}

/// Constant anti-self-dual geometry on the flat base, given by integer
/// coefficients in the eta basis.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n: usize,
    pub omega1: [i64; 3],
    pub omega2: [i64; 3],
    pub charges: Vec<[i64; 3]>,
    /// Exact rational "p/q", kept exact for the lattice-side check.
    pub alpha_prime: String,
    #[serde(default = "default_sign_rho")]
    pub sign_rho: f64,
}

fn default_sign_rho() -> f64 {
    crate::solver::SIGN_RHO_DEFAULT
}

impl GeometryConfig {
    pub fn alpha_rat(&self) -> Result<Rat, PipelineError> {
        parse_rat(&self.alpha_prime).map_err(PipelineError::Lattice)
    }
}

/// A manufactured instance: the target solution as a sum of cosine modes,
/// a constant real (1,1)-form rho, and a plain floating alpha'.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedConfig {
    pub n: usize,
    pub u_modes: Vec<CosMode>,
    /// rho = rho_omega * omega_B + sum_a rho_eta[a] * eta_a.
    #[serde(default)]
    pub rho_omega: f64,
    #[serde(default)]
    pub rho_eta: [f64; 3],
    pub alpha_prime: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosMode {
    pub k: [i64; 4],
    pub amp: f64,
}

pub fn load_config(path: &Path) -> Result<RunConfig, PipelineError> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    Ok(cfg)
}
