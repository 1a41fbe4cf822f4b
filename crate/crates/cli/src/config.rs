//! Scenario configuration: JSON document with CLI flag overrides. Units at
//! the boundary are nm (wavelength), um (waists, MFD), mm (axial positions);
//! everything becomes SI meters at the library boundary.

use serde::{Deserialize, Serialize};
use std::path::Path;

use gouysim_core::beamgeom::{BeamParams, FiberMode};
use gouysim_core::interference::NoonConfig;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub wavelength_nm: f64,
    pub waist_um: f64,
    pub z0_mm: f64,
    pub fiber_mfd_um: f64,
    #[serde(rename = "N")]
    pub photons: u32,
    pub p: u32,
    pub p_prime: u32,
    pub theta_rad: f64,
    /// [min, max] in mm.
    pub z_range_mm: [f64; 2],
    pub samples: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: 810.0,
            waist_um: 25.0,
            z0_mm: 0.0,
            fiber_mfd_um: 5.0,
            photons: 2,
            p: 0,
            p_prime: 2,
            theta_rad: 0.0,
            z_range_mm: [-10.0, 10.0],
            samples: 401,
        }
    }
}

/// Flag-level overrides applied on top of the JSON document.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// Scenario JSON file; flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, value_name = "NM")]
    pub wavelength_nm: Option<f64>,
    #[arg(long, value_name = "UM")]
    pub waist_um: Option<f64>,
    #[arg(long, value_name = "MM")]
    pub z0_mm: Option<f64>,
    #[arg(long, value_name = "UM")]
    pub fiber_mfd_um: Option<f64>,
    /// Photon number N.
    #[arg(long, short = 'N', value_name = "N")]
    pub photons: Option<u32>,
    #[arg(long, short = 'p', value_name = "P")]
    pub p: Option<u32>,
    #[arg(long, value_name = "P")]
    pub p_prime: Option<u32>,
    #[arg(long, value_name = "RAD")]
    pub theta_rad: Option<f64>,
    #[arg(long, value_name = "MM")]
    pub z_min_mm: Option<f64>,
    #[arg(long, value_name = "MM")]
    pub z_max_mm: Option<f64>,
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
}

impl ScenarioConfig {
    /// Load the JSON file (when given), apply flag overrides, validate.
    pub fn resolve(overrides: &ConfigOverrides) -> Result<Self, CliError> {
        let mut cfg = match &overrides.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(v) = overrides.wavelength_nm {
            cfg.wavelength_nm = v;
        }
        if let Some(v) = overrides.waist_um {
            cfg.waist_um = v;
        }
        if let Some(v) = overrides.z0_mm {
            cfg.z0_mm = v;
        }
        if let Some(v) = overrides.fiber_mfd_um {
            cfg.fiber_mfd_um = v;
        }
        if let Some(v) = overrides.photons {
            cfg.photons = v;
        }
        if let Some(v) = overrides.p {
            cfg.p = v;
        }
        if let Some(v) = overrides.p_prime {
            cfg.p_prime = v;
        }
        if let Some(v) = overrides.theta_rad {
            cfg.theta_rad = v;
        }
        if let Some(v) = overrides.z_min_mm {
            cfg.z_range_mm[0] = v;
        }
        if let Some(v) = overrides.z_max_mm {
            cfg.z_range_mm[1] = v;
        }
        if let Some(v) = overrides.samples {
            cfg.samples = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!(
                "{}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("wavelength_nm", self.wavelength_nm),
            ("waist_um", self.waist_um),
            ("fiber_mfd_um", self.fiber_mfd_um),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(CliError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.samples < 2 {
            return Err(CliError::Config(format!("samples must be >= 2, got {}", self.samples)));
        }
        let [z_min, z_max] = self.z_range_mm;
        if z_min.is_nan() || z_max.is_nan() || z_min >= z_max {
            return Err(CliError::Config(format!(
                "z_range_mm must satisfy min < max, got [{z_min}, {z_max}]"
            )));
        }
        if self.photons < 1 {
            return Err(CliError::Config("N must be >= 1".into()));
        }
        Ok(())
    }

    pub fn beam(&self) -> Result<BeamParams, CliError> {
        BeamParams::new(self.wavelength_nm * 1e-9, self.waist_um * 1e-6, self.z0_mm * 1e-3)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn fiber(&self) -> Result<FiberMode, CliError> {
        FiberMode::from_mode_field_diameter(self.fiber_mfd_um * 1e-6)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn noon(&self) -> Result<NoonConfig, CliError> {
        NoonConfig::new(
            self.photons,
            self.p,
            self.p_prime,
            self.theta_rad,
            self.beam()?,
            self.fiber()?,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn z_grid(&self) -> Vec<f64> {
        gouysim_core::numerics::linspace(
            self.z_range_mm[0] * 1e-3,
            self.z_range_mm[1] * 1e-3,
            self.samples,
        )
    }

    /// Canonical single-line JSON for the `# gouysim-config:` stamp.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Comment preamble for CSV outputs.
    pub fn preamble(&self) -> Vec<String> {
        vec![format!("# gouysim-config: {}", self.canonical_json())]
    }
}
