//! Scripted reproduction harness: parameter sweeps over (sigma, gamma),
//! the free-packet baseline, and collapse studies, each written out as
//! a result bundle (summary.csv + per-run series + manifest.json).

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{QrError, Result};
use crate::model::initial_packet;
use crate::observables::{detect_collapse, CollapseReport, ObservableSeries, Sample, Termination};
use crate::propagator::evolve;

/// A grid of (sigma, gamma) runs sharing one numerical setup.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub sigmas: Vec<f64>,
    pub gammas: Vec<f64>,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_tau_end")]
    pub tau_end: f64,
    #[serde(default)]
    pub numerics: RunConfig,
}

fn default_a() -> f64 {
    5.0
}

fn default_tau_end() -> f64 {
    1.0
}

impl SweepPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: SweepPlan = toml::from_str(text).map_err(|e| QrError::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.gammas.is_empty() {
            return Err(QrError::Plan("sigma and gamma lists must be non-empty".into()));
        }
        if !(self.tau_end > 0.0) {
            return Err(QrError::Plan(format!(
                "tau_end must be positive, got {}",
                self.tau_end
            )));
        }
        if !(self.a > 0.0) {
            return Err(QrError::Plan(format!("a must be positive, got {}", self.a)));
        }
        Ok(())
    }

    /// Stable hash over the plan's canonical JSON form; used in file names
    /// and the manifest so identical plans share per-run caches.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plan serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex_prefix(&digest, 12)
    }
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

/// Summary of one completed (sigma, gamma) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub sigma: f64,
    pub gamma: f64,
    pub a: f64,
    pub tau_end: f64,
    pub rho_s_final: f64,
    pub collapsed: bool,
    pub tau_collapse: Option<f64>,
    /// Set when the run could not be completed; sibling runs continue.
    pub error: Option<String>,
}

/// Everything a sweep produced, mirrored to the output directory.
#[derive(Debug)]
pub struct ResultBundle {
    pub out_dir: PathBuf,
    pub summaries: Vec<RunSummary>,
    pub reports: Vec<Option<CollapseReport>>,
    pub config_hash: String,
}

pub fn series_to_csv(series: &ObservableSeries) -> String {
    let mut out = String::from("tau,rho_s,e_kin,e_pot,e_int,e_tot,norm_total\n");
    for s in &series.samples {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.tau, s.rho_s, s.e_kin, s.e_pot, s.e_int, s.e_tot, s.norm_total
        ));
    }
    out
}

fn parse_series_csv(text: &str) -> Result<ObservableSeries> {
    let mut samples = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(QrError::Config(format!("malformed series row: {line}")));
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|e| QrError::Config(format!("bad number in series row: {e}")))
        };
        samples.push(Sample {
            tau: f(0)?,
            rho_s: f(1)?,
            e_kin: f(2)?,
            e_pot: f(3)?,
            e_int: f(4)?,
            e_tot: f(5)?,
            norm_total: f(6)?,
            // peak density is not part of the on-disk schema; cached runs
            // fall back to the cliff and termination triggers
            peak_density: f64::NAN,
        });
    }
    Ok(ObservableSeries {
        samples,
        termination: None,
    })
}

fn run_file_name(sigma: f64, gamma: f64, a: f64, hash: &str) -> String {
    format!("run_s{sigma}_g{gamma}_a{a}_{hash}.csv")
}

/// Runs every (sigma, gamma) point of the plan, concurrently up to the
/// ambient rayon worker count, and writes the bundle under `out_dir`.
/// Existing per-run series files from the same plan hash are reused.
pub fn run_sweep(plan: &SweepPlan, out_dir: &Path) -> Result<ResultBundle> {
    plan.validate()?;
    let hash = plan.config_hash();
    let series_dir = out_dir.join("series");
    fs::create_dir_all(&series_dir)?;

    let points: Vec<(f64, f64)> = plan
        .sigmas
        .iter()
        .flat_map(|&s| plan.gammas.iter().map(move |&g| (s, g)))
        .collect();

    let results: Vec<(RunSummary, Option<CollapseReport>)> = points
        .par_iter()
        .map(|&(sigma, gamma)| run_point(plan, sigma, gamma, &series_dir, &hash))
        .collect();

    let (summaries, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    write_bundle(plan, out_dir, &hash, &summaries)?;
    Ok(ResultBundle {
        out_dir: out_dir.to_path_buf(),
        summaries,
        reports,
        config_hash: hash,
    })
}

fn run_point(
    plan: &SweepPlan,
    sigma: f64,
    gamma: f64,
    series_dir: &Path,
    hash: &str,
) -> (RunSummary, Option<CollapseReport>) {
    let file = series_dir.join(run_file_name(sigma, gamma, plan.a, hash));
    let thresholds = plan.numerics.collapse_thresholds();
    let series = if file.exists() {
        fs::read_to_string(&file)
            .map_err(QrError::Io)
            .and_then(|t| parse_series_csv(&t))
    } else {
        compute_series(plan, sigma, gamma).and_then(|series| {
            fs::write(&file, series_to_csv(&series))?;
            Ok(series)
        })
    };
    match series {
        Ok(series) => {
            let report = detect_collapse(&series, &thresholds);
            let rho = series.final_sample().map_or(f64::NAN, |s| s.rho_s);
            (
                RunSummary {
                    sigma,
                    gamma,
                    a: plan.a,
                    tau_end: plan.tau_end,
                    rho_s_final: rho,
                    collapsed: report.collapsed,
                    tau_collapse: report.tau_collapse,
                    error: None,
                },
                Some(report),
            )
        }
        Err(e) => (
            RunSummary {
                sigma,
                gamma,
                a: plan.a,
                tau_end: plan.tau_end,
                rho_s_final: f64::NAN,
                collapsed: false,
                tau_collapse: None,
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

fn compute_series(plan: &SweepPlan, sigma: f64, gamma: f64) -> Result<ObservableSeries> {
    let cfg = plan.numerics.propagator(sigma, gamma)?;
    let psi = initial_packet(plan.a, &cfg.grid)?;
    evolve(&psi, &cfg, plan.tau_end, plan.numerics.sample_every)
}

fn write_bundle(plan: &SweepPlan, out_dir: &Path, hash: &str, summaries: &[RunSummary]) -> Result<()> {
    let mut csv = String::from("sigma,gamma,a,tau_end,rho_s_final,collapsed,tau_collapse\n");
    for s in summaries {
        csv.push_str(&format!(
            "{},{},{},{},{:.16e},{},{}\n",
            s.sigma,
            s.gamma,
            s.a,
            s.tau_end,
            s.rho_s_final,
            s.collapsed,
            s.tau_collapse.map_or(String::new(), |t| format!("{t:.16e}")),
        ));
    }
    fs::write(out_dir.join("summary.csv"), csv)?;

    let manifest = serde_json::json!({
        "plan": plan,
        "provenance": {
            "config_hash": hash,
            "code_version": env!("CARGO_PKG_VERSION"),
            "created_unix": std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    });
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(())
}

/// Free-space baseline: the same packet with the trap and interaction off.
pub fn run_free_baseline(a: f64, tau_end: f64, numerics: &RunConfig) -> Result<ObservableSeries> {
    let cfg = numerics.propagator(0.0, 0.0)?;
    let psi = initial_packet(a, &cfg.grid)?;
    evolve(&psi, &cfg, tau_end, numerics.sample_every)
}

/// Collapse study: one sigma, several gammas, with collapse reports kept
/// alongside the series files.
pub fn run_collapse_study(
    sigma: f64,
    gammas: &[f64],
    a: f64,
    tau_end: f64,
    numerics: &RunConfig,
    out_dir: &Path,
) -> Result<ResultBundle> {
    let plan = SweepPlan {
        sigmas: vec![sigma],
        gammas: gammas.to_vec(),
        a,
        tau_end,
        numerics: numerics.clone(),
    };
    run_sweep(&plan, out_dir)
}

/// Reads a series back from its bundle file, if the run was cached.
pub fn load_series(
    plan: &SweepPlan,
    out_dir: &Path,
    sigma: f64,
    gamma: f64,
) -> Result<ObservableSeries> {
    let file = out_dir
        .join("series")
        .join(run_file_name(sigma, gamma, plan.a, &plan.config_hash()));
    parse_series_csv(&fs::read_to_string(file)?)
}

/// Marks a series termination in a cached representation. Exposed for the
/// CLI exit-code logic.
pub fn terminated_by_blowup(series: &ObservableSeries) -> bool {
    matches!(series.termination, Some(Termination::NumericalBlowup { .. }))
}
