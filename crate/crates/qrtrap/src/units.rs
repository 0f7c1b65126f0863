//! Conversion between physical quantities in atomic units and the
//! dimensionless scaled variables of the trap, plus the bundled alkali
//! species data.
//!
//! Scaling: x = r/L, sigma = L/beta4, tau = t*hbar/(2 m L^2), and the
//! radial coupling gamma = 2 a_int / L.

use serde::{Deserialize, Serialize};

use crate::error::{QrError, Result};
use crate::quad;

/// Electron masses per unified atomic mass unit (CODATA 2018).
pub const ELECTRON_MASSES_PER_AMU: f64 = 1822.888486209;

/// One atomic time unit in seconds (CODATA 2018).
pub const ATOMIC_TIME_SECONDS: f64 = 2.4188843265857e-17;

/// Physical data for one atomic species, in atomic units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeciesParams {
    pub name: String,
    /// Atomic mass in electron masses.
    pub mass: f64,
    /// Atom-surface strength beta_4 in Bohr radii.
    pub beta4: f64,
    /// s-wave scattering length in Bohr radii; negative for attractive
    /// interactions.
    pub a_int: f64,
    pub a_int_uncertainty: Option<f64>,
    pub channel: String,
}

impl SpeciesParams {
    fn validate(&self) -> Result<()> {
        if self.mass <= 0.0 || self.beta4 <= 0.0 {
            return Err(QrError::InvalidParameter(format!(
                "species '{}': mass and beta4 must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

/// Dimensionless trap parameters together with the physical radius they
/// were derived from.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScaledParams {
    pub sigma: f64,
    pub gamma: f64,
    /// Trap radius L in Bohr radii.
    pub trap_radius_l: f64,
}

impl ScaledParams {
    pub fn from_species(species: &SpeciesParams, trap_radius_l: f64) -> Result<Self> {
        species.validate()?;
        Ok(Self {
            sigma: scaled_sigma(trap_radius_l, species.beta4)?,
            gamma: radial_gamma(species.a_int, trap_radius_l)?,
            trap_radius_l,
        })
    }

    /// Linear propagation of the scattering-length uncertainty into gamma.
    pub fn gamma_uncertainty(species: &SpeciesParams, trap_radius_l: f64) -> Option<f64> {
        species
            .a_int_uncertainty
            .map(|err| 2.0 * err / trap_radius_l)
    }
}

/// sigma = L / beta4.
pub fn scaled_sigma(trap_radius_l: f64, beta4: f64) -> Result<f64> {
    if trap_radius_l <= 0.0 || beta4 <= 0.0 {
        return Err(QrError::InvalidParameter(format!(
            "scaled_sigma requires L > 0 and beta4 > 0, got L = {trap_radius_l}, beta4 = {beta4}"
        )));
    }
    Ok(trap_radius_l / beta4)
}

/// gamma = 2 a_int / L; the sign follows the scattering length.
pub fn radial_gamma(a_int: f64, trap_radius_l: f64) -> Result<f64> {
    if trap_radius_l <= 0.0 {
        return Err(QrError::InvalidParameter(format!(
            "radial_gamma requires L > 0, got {trap_radius_l}"
        )));
    }
    Ok(2.0 * a_int / trap_radius_l)
}

/// Converts a scaled time tau to SI seconds: t = 2 m L^2 tau in atomic
/// time units.
pub fn scaled_time_to_seconds(tau: f64, mass: f64, trap_radius_l: f64) -> Result<f64> {
    if mass <= 0.0 || trap_radius_l <= 0.0 {
        return Err(QrError::InvalidParameter(format!(
            "scaled_time_to_seconds requires mass > 0 and L > 0, got mass = {mass}, L = {trap_radius_l}"
        )));
    }
    Ok(2.0 * mass * trap_radius_l * trap_radius_l * tau * ATOMIC_TIME_SECONDS)
}

/// Kinetic energy of the initial packet x*exp(-a x) truncated at x = 1,
/// in physical atomic units.
///
/// The scaled expectation is computed by quadrature on the truncated,
/// renormalized packet and multiplied by hbar^2/(2 m L^2) = 1/(2 m L^2)
/// in atomic units.
pub fn initial_kinetic_energy_physical(a: f64, mass: f64, trap_radius_l: f64) -> Result<f64> {
    if mass <= 0.0 || trap_radius_l <= 0.0 {
        return Err(QrError::InvalidParameter(format!(
            "initial_kinetic_energy_physical requires mass > 0 and L > 0, got mass = {mass}, L = {trap_radius_l}"
        )));
    }
    let scaled = initial_kinetic_energy_scaled(a)?;
    Ok(scaled / (2.0 * mass * trap_radius_l * trap_radius_l))
}

/// Scaled kinetic expectation <|psi'|^2> of the truncated initial packet.
pub fn initial_kinetic_energy_scaled(a: f64) -> Result<f64> {
    if a <= 0.0 {
        return Err(QrError::InvalidParameter(format!(
            "diffuseness a must be positive, got {a}"
        )));
    }
    let tol = 1e-13;
    let norm = quad::integrate(|x| (x * (-a * x).exp()).powi(2), 0.0, 1.0, tol)?;
    let kin = quad::integrate(
        |x| {
            let d = (1.0 - a * x) * (-a * x).exp();
            d * d
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(kin / norm)
}

#[derive(Debug, Deserialize)]
struct SpeciesRecord {
    name: String,
    mass_amu: f64,
    beta4_au: f64,
    a_int_au: f64,
    a_int_err_au: Option<f64>,
    channel: String,
}

#[derive(Debug, Deserialize)]
struct SpeciesFile {
    #[allow(dead_code)]
    schema_version: u32,
    species: Vec<SpeciesRecord>,
}

/// Lookup table of species, loaded from the bundled data file or a
/// user-provided one.
#[derive(Debug, Clone)]
pub struct SpeciesTable {
    entries: Vec<SpeciesParams>,
}

pub const BUNDLED_SPECIES: &str = include_str!("../data/species.toml");

impl SpeciesTable {
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED_SPECIES).expect("bundled species data must parse")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SpeciesFile =
            toml::from_str(text).map_err(|e| QrError::Config(format!("species file: {e}")))?;
        let entries = file
            .species
            .into_iter()
            .map(|r| SpeciesParams {
                name: r.name,
                mass: r.mass_amu * ELECTRON_MASSES_PER_AMU,
                beta4: r.beta4_au,
                a_int: r.a_int_au,
                a_int_uncertainty: r.a_int_err_au,
                channel: r.channel,
            })
            .collect::<Vec<_>>();
        for s in &entries {
            s.validate()?;
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn entries(&self) -> &[SpeciesParams] {
        &self.entries
    }

    /// Case-insensitive lookup that also accepts names without the mass
    /// prefix ("Na" matches "23Na").
    pub fn get(&self, name: &str) -> Result<&SpeciesParams> {
        let lower = name.to_ascii_lowercase();
        self.entries
            .iter()
            .find(|s| {
                let n = s.name.to_ascii_lowercase();
                n == lower || n.trim_start_matches(|c: char| c.is_ascii_digit()) == lower
            })
            .ok_or_else(|| QrError::UnknownSpecies {
                name: name.to_string(),
                available: self
                    .entries
                    .iter()
                    .map(|s| s.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }
}
