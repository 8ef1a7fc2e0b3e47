//! Flat TOML run configuration. Keys mirror the long flag names with `-`
//! replaced by `_`; flags given on the command line win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::units::{ConstantOverrides, PhysicalConstants};

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub hbar_J_s: Option<f64>,
    pub kB_J_per_K: Option<f64>,
    pub m_kg: Option<f64>,
    pub a0_m: Option<f64>,

    pub kappa_star_inv_a0: Option<f64>,
    pub eta_star: Option<f64>,
    pub n_max: Option<u32>,

    pub T_nK: Option<f64>,
    pub T_K: Option<f64>,
    pub B_G: Option<f64>,
    pub N: Option<f64>,
    pub trap: Option<String>,
    pub nu_x_Hz: Option<f64>,
    pub nu_y_Hz: Option<f64>,
    pub nu_z_Hz: Option<f64>,

    pub Gamma_per_s: Option<f64>,
    pub L3_cm6_per_s: Option<f64>,
    pub N0: Option<f64>,
    pub T0_nK: Option<f64>,
    pub t_max_s: Option<f64>,
    pub n_points: Option<usize>,
    pub noise_frac: Option<f64>,
    pub seed: Option<u64>,
    pub anti_evaporation: Option<bool>,

    pub table: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub B_min_G: Option<f64>,
    pub B_max_G: Option<f64>,
    pub B_step_G: Option<f64>,
    pub L3sat_cm6_per_s: Option<f64>,
    pub unitarized: Option<bool>,
    pub lvdw_a0: Option<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn constants(&self) -> Result<PhysicalConstants> {
        PhysicalConstants::default().with_overrides(&ConstantOverrides {
            hbar: self.hbar_J_s,
            k_b: self.kB_J_per_K,
            mass: self.m_kg,
            a0: self.a0_m,
        })
    }
}
