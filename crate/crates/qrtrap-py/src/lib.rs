//! Python bindings for the trap simulator: unit conversions, single runs,
//! the variational phase diagram, and the dynamic critical coupling.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use qrtrap::config::{Profile, RunConfig};
use qrtrap::model::initial_packet;
use qrtrap::observables::detect_collapse;
use qrtrap::propagator::evolve;
use qrtrap::units::{ScaledParams, SpeciesTable};
use qrtrap::QrError;

fn err(e: QrError) -> PyErr {
    match e {
        QrError::InvalidParameter(_) | QrError::Config(_) | QrError::UnknownSpecies { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn profile_config(profile: &str, overrides: Option<&str>) -> PyResult<RunConfig> {
    let mut cfg = match overrides {
        Some(toml) => RunConfig::from_toml(toml).map_err(err)?,
        None => RunConfig::default(),
    };
    if overrides.is_none() {
        let p: Profile = profile
            .parse()
            .map_err(|_| PyValueError::new_err(format!("unknown profile '{profile}'")))?;
        cfg = RunConfig::for_profile(p);
    }
    Ok(cfg)
}

/// sigma = L / beta4.
#[pyfunction]
fn scaled_sigma(trap_radius_l: f64, beta4: f64) -> PyResult<f64> {
    qrtrap::units::scaled_sigma(trap_radius_l, beta4).map_err(err)
}

/// gamma = 2 a_int / L.
#[pyfunction]
fn radial_gamma(a_int: f64, trap_radius_l: f64) -> PyResult<f64> {
    qrtrap::units::radial_gamma(a_int, trap_radius_l).map_err(err)
}

/// Converts a scaled time to seconds for a given mass (electron masses)
/// and trap radius (Bohr radii).
#[pyfunction]
fn scaled_time_to_seconds(tau: f64, mass: f64, trap_radius_l: f64) -> PyResult<f64> {
    qrtrap::units::scaled_time_to_seconds(tau, mass, trap_radius_l).map_err(err)
}

/// Kinetic energy of the initial packet, in Hartree.
#[pyfunction]
fn initial_kinetic_energy(a: f64, mass: f64, trap_radius_l: f64) -> PyResult<f64> {
    qrtrap::units::initial_kinetic_energy_physical(a, mass, trap_radius_l).map_err(err)
}

/// Looks up a bundled species and returns its raw and scaled parameters.
#[pyfunction]
#[pyo3(signature = (name, trap_radius_l = 4.47e5))]
fn species(py: Python<'_>, name: &str, trap_radius_l: f64) -> PyResult<Py<PyDict>> {
    let table = SpeciesTable::bundled();
    let sp = table.get(name).map_err(err)?;
    let scaled = ScaledParams::from_species(sp, trap_radius_l).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("name", &sp.name)?;
    d.set_item("mass", sp.mass)?;
    d.set_item("beta4", sp.beta4)?;
    d.set_item("a_int", sp.a_int)?;
    d.set_item("a_int_uncertainty", sp.a_int_uncertainty)?;
    d.set_item("channel", &sp.channel)?;
    d.set_item("sigma", scaled.sigma)?;
    d.set_item("gamma", scaled.gamma)?;
    d.set_item(
        "gamma_uncertainty",
        ScaledParams::gamma_uncertainty(sp, trap_radius_l),
    )?;
    d.set_item("trap_radius_l", trap_radius_l)?;
    Ok(d.into())
}

/// Names of the bundled species.
#[pyfunction]
fn species_names() -> Vec<String> {
    SpeciesTable::bundled()
        .entries()
        .iter()
        .map(|s| s.name.clone())
        .collect()
}

/// Propagates one (sigma, gamma) run and returns the sampled series plus a
/// collapse report. `config_toml` overrides the profile when given.
#[pyfunction]
#[pyo3(signature = (sigma, gamma, a = 5.0, tau_end = 1.0, profile = "reference", config_toml = None))]
fn simulate(
    py: Python<'_>,
    sigma: f64,
    gamma: f64,
    a: f64,
    tau_end: f64,
    profile: &str,
    config_toml: Option<&str>,
) -> PyResult<Py<PyDict>> {
    let numerics = profile_config(profile, config_toml)?;
    let cfg = numerics.propagator(sigma, gamma).map_err(err)?;
    let psi = initial_packet(a, &cfg.grid).map_err(err)?;
    let series = evolve(&psi, &cfg, tau_end, numerics.sample_every).map_err(err)?;
    let report = detect_collapse(&series, &numerics.collapse_thresholds());

    let d = PyDict::new(py);
    for (key, get) in [
        (
            "tau",
            (|s: &qrtrap::observables::Sample| s.tau) as fn(&qrtrap::observables::Sample) -> f64,
        ),
        ("rho_s", |s| s.rho_s),
        ("e_kin", |s| s.e_kin),
        ("e_pot", |s| s.e_pot),
        ("e_int", |s| s.e_int),
        ("e_tot", |s| s.e_tot),
        ("norm_total", |s| s.norm_total),
        ("peak_density", |s| s.peak_density),
    ] {
        let col: Vec<f64> = series.samples.iter().map(get).collect();
        d.set_item(key, PyList::new(py, col)?)?;
    }
    d.set_item("collapsed", report.collapsed)?;
    d.set_item("tau_collapse", report.tau_collapse)?;
    d.set_item("trigger", report.trigger.map(|t| format!("{t:?}")))?;
    d.set_item("terminated_early", series.termination.is_some())?;
    Ok(d.into())
}

/// Stationary-coupling curves gamma(alpha) for each sigma, from both the
/// closed-form route and the quadrature route.
#[pyfunction]
#[pyo3(signature = (sigmas, alpha_min = 0.05, alpha_max = 1.0, n_alpha = 96))]
fn phase_diagram(
    py: Python<'_>,
    sigmas: Vec<f64>,
    alpha_min: f64,
    alpha_max: f64,
    n_alpha: usize,
) -> PyResult<Py<PyList>> {
    let diagram =
        qrtrap::variational::phase_diagram(&sigmas, (alpha_min, alpha_max), n_alpha).map_err(err)?;
    let rows = PyList::empty(py);
    for row in &diagram.rows {
        let d = PyDict::new(py);
        d.set_item("sigma", row.sigma)?;
        d.set_item("alpha", row.alpha)?;
        d.set_item("gamma_printed", row.gamma_printed)?;
        d.set_item("gamma_numeric", row.gamma_numeric)?;
        rows.append(d)?;
    }
    Ok(rows.into())
}

/// Running coupling from the closed-form expression.
#[pyfunction]
fn running_gamma(alpha: f64, sigma: f64) -> PyResult<f64> {
    qrtrap::variational::running_gamma_printed(alpha, sigma).map_err(err)
}

/// Stationary coupling from quadrature and numeric differentiation.
#[pyfunction]
fn stationary_gamma(alpha: f64, sigma: f64) -> PyResult<f64> {
    qrtrap::variational::stationary_gamma_numeric(alpha, sigma).map_err(err)
}

/// Bisects the dynamical stability boundary in gamma at fixed sigma.
#[pyfunction]
#[pyo3(signature = (sigma, bracket = (-0.70, -0.40), tol = 0.005, tau_horizon = 0.3, a = 5.0, profile = "fast"))]
fn critical_gamma(
    sigma: f64,
    bracket: (f64, f64),
    tol: f64,
    tau_horizon: f64,
    a: f64,
    profile: &str,
) -> PyResult<f64> {
    let numerics = profile_config(profile, None)?;
    let cfg = numerics.propagator(sigma, 0.0).map_err(err)?;
    qrtrap::variational::critical_gamma_dynamic(
        sigma,
        &cfg,
        a,
        bracket,
        tol,
        tau_horizon,
        &numerics.collapse_thresholds(),
    )
    .map_err(err)
}

/// Default run configuration for a profile, as TOML.
#[pyfunction]
#[pyo3(signature = (profile = "reference"))]
fn default_config(profile: &str) -> PyResult<String> {
    Ok(profile_config(profile, None)?.to_toml())
}

#[pymodule]
fn qrtrap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(scaled_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(radial_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_time_to_seconds, m)?)?;
    m.add_function(wrap_pyfunction!(initial_kinetic_energy, m)?)?;
    m.add_function(wrap_pyfunction!(species, m)?)?;
    m.add_function(wrap_pyfunction!(species_names, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(phase_diagram, m)?)?;
    m.add_function(wrap_pyfunction!(running_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(critical_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
