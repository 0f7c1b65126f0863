//! The boundary absorber must remove an outgoing probe without sending a
//! visible reflection back into the trap region. The oracle is the same
//! probe on a doubled domain whose absorber is too far away to matter.

use num_complex::Complex64;
use qrtrap::config::{Profile, RunConfig};
use qrtrap::model::{GridSpec, WaveState};
use qrtrap::propagator::evolve_with_final;

fn outgoing_probe(grid: &GridSpec, k: f64, center: f64, width: f64) -> WaveState {
    let mut amplitudes: Vec<Complex64> = (0..grid.n_points)
        .map(|j| {
            let x = grid.x(j);
            let env = (-((x - center) / width).powi(2) / 2.0).exp();
            Complex64::from_polar(env, k * x)
        })
        .collect();
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr() * grid.dx).sum();
    let scale = norm.sqrt().recip();
    for a in &mut amplitudes {
        *a *= scale;
    }
    WaveState { amplitudes, tau: 0.0 }
}

fn norm_below(state: &WaveState, grid: &GridSpec, x_lim: f64) -> f64 {
    (0..grid.n_points)
        .filter(|&j| grid.x(j) < x_lim)
        .map(|j| state.amplitudes[j].norm_sqr() * grid.dx)
        .sum()
}

#[test]
fn absorber_reflection_below_tolerance() {
    let k = 15.0;
    let tau_end = 0.15;

    let run = |numerics: &RunConfig| {
        let cfg = numerics.propagator(0.0, 0.0).unwrap();
        let psi0 = outgoing_probe(&cfg.grid, k, 0.8, 0.2);
        let (_, last) = evolve_with_final(&psi0, &cfg, tau_end, usize::MAX).unwrap();
        norm_below(&last, &cfg.grid, 1.5)
    };

    let compact = fast_config(4.0, 1999, 1.5);
    let wide = fast_config(8.0, 3999, 5.5);

    let survived = run(&compact);
    let reference = run(&wide);
    let leak = (survived - reference).abs();
    assert!(
        leak < 1e-3,
        "reflected norm {leak:.2e} (compact {survived:.3e}, wide {reference:.3e})"
    );
}

fn fast_config(x_max: f64, n_points: usize, absorber_start: f64) -> RunConfig {
    let mut c = RunConfig::for_profile(Profile::Fast);
    c.x_max = x_max;
    c.n_points = n_points;
    c.absorber_start = absorber_start;
    c
}
