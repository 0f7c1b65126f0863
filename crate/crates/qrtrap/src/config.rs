//! Run configuration: numerical defaults, the reference/fast profiles, and
//! the strict TOML schema the CLI accepts.

use serde::{Deserialize, Serialize};

use crate::error::{QrError, Result};
use crate::model::{AbsorberSpec, GridSpec, StepTrap};
use crate::propagator::PropagatorConfig;

/// Resolution profile: `Reference` reproduces the headline survival tables, `Fast` is for
/// CI and quick scans with loosened tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Reference,
    Fast,
}

impl std::str::FromStr for Profile {
    type Err = QrError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reference" => Ok(Profile::Reference),
            "fast" => Ok(Profile::Fast),
            other => Err(QrError::Config(format!(
                "unknown profile '{other}' (expected 'reference' or 'fast')"
            ))),
        }
    }
}

/// All numerical knobs of a run, with schema-checked TOML representation.
/// Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Outer edge of the computational domain.
    pub x_max: f64,
    /// Interior grid points.
    pub n_points: usize,
    /// Time step in scaled units.
    pub dt: f64,
    /// Relative tolerance of the nonlinear fixed-point iteration.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    /// Absorbing layer: onset position, peak magnitude, polynomial order.
    pub absorber_start: f64,
    pub absorber_strength: f64,
    pub absorber_exponent: u32,
    /// Diffuseness of the initial packet.
    pub a: f64,
    /// Steps between recorded samples.
    pub sample_every: usize,
    /// Collapse-detection thresholds.
    pub collapse_density_factor: f64,
    pub collapse_kinetic_factor: f64,
    pub collapse_cliff_fraction: f64,
    pub collapse_cliff_window: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_profile(Profile::Reference)
    }
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (n_points, dt) = match profile {
            // dx = 1e-3, dt/dx^2 = 2.5
            Profile::Reference => (3999, 2.5e-6),
            // dx = 2e-3
            Profile::Fast => (1999, 1.0e-5),
        };
        Self {
            x_max: 4.0,
            n_points,
            dt,
            fixed_point_tol: 1e-10,
            max_fixed_point_iters: 25,
            absorber_start: 1.5,
            // calibrated so escaping waves up to k ~ 50 do not return:
            // sigma = 50, gamma = 0 on this domain matches a 30x wider
            // reference domain to 5 digits
            absorber_strength: 600.0,
            absorber_exponent: 2,
            a: 5.0,
            sample_every: 400,
            collapse_density_factor: 50.0,
            collapse_kinetic_factor: 20.0,
            collapse_cliff_fraction: 0.25,
            collapse_cliff_window: 0.01,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| QrError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("RunConfig serializes")
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.x_max, self.n_points)
    }

    pub fn absorber(&self) -> Result<AbsorberSpec> {
        AbsorberSpec::new(
            self.absorber_start,
            self.absorber_strength,
            self.absorber_exponent,
        )
    }

    pub fn collapse_thresholds(&self) -> crate::observables::CollapseThresholds {
        crate::observables::CollapseThresholds {
            density_factor: self.collapse_density_factor,
            kinetic_factor: self.collapse_kinetic_factor,
            cliff_fraction: self.collapse_cliff_fraction,
            cliff_window: self.collapse_cliff_window,
        }
    }

    /// Builds a propagator configuration for one (sigma, gamma) point.
    pub fn propagator(&self, sigma: f64, gamma: f64) -> Result<PropagatorConfig> {
        let cfg = PropagatorConfig {
            grid: self.grid()?,
            dt: self.dt,
            fixed_point_tol: self.fixed_point_tol,
            max_fixed_point_iters: self.max_fixed_point_iters,
            trap: StepTrap::new(sigma)?,
            absorber: self.absorber()?,
            gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
