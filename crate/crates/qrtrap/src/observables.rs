//! Diagnostics computed from wave states and time series: surviving
//! density, energy decomposition, conserved-energy check, and collapse
//! detection.

use serde::{Deserialize, Serialize};

use crate::model::{GridSpec, StepTrap, WaveState};
use crate::propagator::PropagatorConfig;

/// One sampled instant of an evolve run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sample {
    pub tau: f64,
    pub rho_s: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_int: f64,
    pub e_tot: f64,
    pub norm_total: f64,
    pub peak_density: f64,
}

/// Why an evolve run stopped before reaching its requested horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// Fixed-point iteration of the nonlinear step stopped converging.
    CollapseSuspected { tau: f64 },
    /// Amplitudes left the representable range.
    NumericalBlowup { tau: f64 },
}

/// Time series of samples from a single run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub samples: Vec<Sample>,
    pub termination: Option<Termination>,
}

impl ObservableSeries {
    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Surviving particle density: trapezoidal integral of |psi|^2 over the
/// trap interior x in [0, 1]. If x = 1 is not a grid point the density is
/// linearly interpolated there.
pub fn surviving_density(state: &WaveState, grid: &GridSpec) -> f64 {
    integrate_interior(grid, |j| state.amplitudes[j].norm_sqr())
}

/// Trapezoid of a per-gridpoint density over [0, 1], with the x = 0
/// boundary value zero.
fn integrate_interior(grid: &GridSpec, density: impl Fn(usize) -> f64) -> f64 {
    let dx = grid.dx;
    let mut sum = 0.0;
    let mut j = 0;
    // full trapezoids while the right edge stays inside [0, 1]
    let mut prev = 0.0; // density at x = 0
    while j < grid.n_points && grid.x(j) <= 1.0 + 1e-12 {
        let d = density(j);
        sum += 0.5 * (prev + d) * dx;
        prev = d;
        j += 1;
    }
    let x_last = j as f64 * dx; // right edge handled so far
    if x_last < 1.0 && j < grid.n_points {
        // partial trapezoid up to x = 1 with interpolated density
        let rest = 1.0 - x_last;
        let next = density(j);
        let at_one = prev + (next - prev) * rest / dx;
        sum += 0.5 * (prev + at_one) * rest;
    }
    sum
}

/// Scaled energies of the trap interior.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_int: f64,
    pub e_tot: f64,
    pub norm_inside: f64,
    pub norm_total: f64,
}

/// Energy decomposition over the trap interior x in [0, 1].
///
/// The kinetic term uses the density form int |psi'|^2 dx, which is
/// nonnegative; it differs from -int psi* psi'' dx by a boundary term at
/// x = 1 (see [`kinetic_form_difference`]). The interaction term carries
/// the full coupling gamma, matching the i psi* d_tau psi definition of
/// the reported energy; the absorber is excluded.
pub fn energy_breakdown(state: &WaveState, config: &PropagatorConfig) -> EnergyBreakdown {
    let grid = &config.grid;
    let e_kin = interior_kinetic(state, grid);
    // the step potential vanishes on [0, 1); the single boundary node at
    // x = 1 has measure zero in the interior integral, so it is excluded
    let e_pot = integrate_interior(grid, |j| {
        let x = grid.x(j);
        if x < 1.0 {
            config.trap.value(x) * state.amplitudes[j].norm_sqr()
        } else {
            0.0
        }
    });
    let e_int = config.gamma
        * integrate_interior(grid, |j| {
            let x = grid.x(j);
            let d = state.amplitudes[j].norm_sqr();
            d * d / (x * x)
        });
    EnergyBreakdown {
        e_kin,
        e_pot,
        e_int,
        e_tot: e_kin + e_pot + e_int,
        norm_inside: surviving_density(state, grid),
        norm_total: state.norm_total(grid),
    }
}

/// Kinetic-density integral over [0, 1]. Central differences at interior
/// nodes; at a node sitting exactly on x = 1 the derivative is one-sided
/// from the left, because the truncated initial packet is discontinuous
/// across the trap edge and a centered stencil there integrates the jump.
fn interior_kinetic(state: &WaveState, grid: &GridSpec) -> f64 {
    let dx = grid.dx;
    let n = grid.n_points;
    integrate_interior(grid, |j| {
        let here = state.amplitudes[j];
        let prev = if j == 0 {
            num_complex::Complex64::ZERO
        } else {
            state.amplitudes[j - 1]
        };
        if (grid.x(j) - 1.0).abs() < 1e-12 {
            return ((here - prev) / dx).norm_sqr();
        }
        let next = if j + 1 == n {
            num_complex::Complex64::ZERO
        } else {
            state.amplitudes[j + 1]
        };
        ((next - prev) / (2.0 * dx)).norm_sqr()
    })
}

/// Boundary-term diagnostic: -Re int_0^1 psi* psi'' dx minus
/// int_0^1 |psi'|^2 dx. The two kinetic forms agree up to a surface term
/// at x = 1.
pub fn kinetic_form_difference(state: &WaveState, grid: &GridSpec) -> f64 {
    let dx = grid.dx;
    let n = grid.n_points;
    let second_form = integrate_interior(grid, |j| {
        let prev = if j == 0 {
            num_complex::Complex64::ZERO
        } else {
            state.amplitudes[j - 1]
        };
        let next = if j + 1 == n {
            num_complex::Complex64::ZERO
        } else {
            state.amplitudes[j + 1]
        };
        let lap = (next - 2.0 * state.amplitudes[j] + prev) / (dx * dx);
        -(state.amplitudes[j].conj() * lap).re
    });
    second_form - interior_kinetic(state, grid)
}

/// The conserved Gross-Pitaevskii energy functional over the full domain,
/// with the interaction counted at gamma/2. Constant in time when the
/// absorber is off; distinct from the reported interior energy, which
/// uses the full gamma and is not conserved.
///
/// The kinetic term is the forward-difference sum over grid links,
/// which is the exact quadratic form of the -D2 stencil the propagator
/// uses; the centered form is only equivalent on smooth states.
pub fn conserved_energy(state: &WaveState, grid: &GridSpec, trap: &StepTrap, gamma: f64) -> f64 {
    let dx = grid.dx;
    let n = grid.n_points;
    let mut e = 0.0;
    let mut prev = num_complex::Complex64::ZERO; // psi at x = 0
    for j in 0..n {
        let x = grid.x(j);
        let here = state.amplitudes[j];
        let d = here.norm_sqr();
        e += ((here - prev).norm_sqr() / (dx * dx)
            + trap.value(x) * d
            + 0.5 * gamma * d * d / (x * x))
            * dx;
        prev = here;
    }
    // closing link to the Dirichlet zero at x_max
    e += prev.norm_sqr() / dx;
    e
}

/// Thresholds of the collapse triggers, relative to the first sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollapseThresholds {
    /// Peak density exceeding this multiple of the initial peak.
    pub density_factor: f64,
    /// Interior kinetic energy exceeding this multiple of its start value.
    pub kinetic_factor: f64,
    /// Fractional drop of rho_S within `cliff_window` that counts as a cliff.
    pub cliff_fraction: f64,
    pub cliff_window: f64,
}

impl Default for CollapseThresholds {
    fn default() -> Self {
        Self {
            density_factor: 50.0,
            kinetic_factor: 20.0,
            cliff_fraction: 0.25,
            cliff_window: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseTrigger {
    DensitySpike,
    KineticSpike,
    FixedPointFailure,
    DensityCliff,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollapseReport {
    pub collapsed: bool,
    pub tau_collapse: Option<f64>,
    pub trigger: Option<CollapseTrigger>,
}

impl CollapseReport {
    fn none() -> Self {
        Self {
            collapsed: false,
            tau_collapse: None,
            trigger: None,
        }
    }
}

/// Scans a series for the earliest collapse signature: a density spike, a
/// kinetic-energy spike, a fixed-point failure of the propagator, or a
/// sudden cliff in the surviving density.
pub fn detect_collapse(series: &ObservableSeries, thresholds: &CollapseThresholds) -> CollapseReport {
    if series.samples.len() < 2 {
        return CollapseReport::none();
    }
    let first = &series.samples[0];
    let density_limit = thresholds.density_factor * first.peak_density;
    let kinetic_limit = thresholds.kinetic_factor * first.e_kin.abs();
    let mut earliest: Option<(f64, CollapseTrigger)> = None;
    let consider = |tau: f64, trig: CollapseTrigger, earliest: &mut Option<(f64, CollapseTrigger)>| {
        if earliest.map_or(true, |(t, _)| tau < t) {
            *earliest = Some((tau, trig));
        }
    };

    for (i, s) in series.samples.iter().enumerate().skip(1) {
        if s.peak_density > density_limit {
            consider(s.tau, CollapseTrigger::DensitySpike, &mut earliest);
            break;
        }
        if first.e_kin > 0.0 && s.e_kin > kinetic_limit {
            consider(s.tau, CollapseTrigger::KineticSpike, &mut earliest);
            break;
        }
        // density cliff: compare with every earlier sample within the window
        let mut k = i;
        while k > 0 && s.tau - series.samples[k - 1].tau <= thresholds.cliff_window {
            k -= 1;
            let r0 = series.samples[k].rho_s;
            if r0 > 0.0 && (r0 - s.rho_s) > thresholds.cliff_fraction * r0 {
                consider(s.tau, CollapseTrigger::DensityCliff, &mut earliest);
                break;
            }
        }
        if earliest.is_some() {
            break;
        }
    }

    if let Some(Termination::CollapseSuspected { tau }) = series.termination {
        if earliest.map_or(true, |(t, _)| tau < t) {
            earliest = Some((tau, CollapseTrigger::FixedPointFailure));
        }
    }

    match earliest {
        Some((tau, trigger)) => CollapseReport {
            collapsed: true,
            tau_collapse: Some(tau),
            trigger: Some(trigger),
        },
        None => CollapseReport::none(),
    }
}
