//! Command-line front end: units | simulate | sweep | phase-diagram |
//! critical-gamma.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Profile, RunConfig};
use crate::error::{QrError, Result};
use crate::experiments::{self, SweepPlan};
use crate::model::initial_packet;
use crate::observables::{detect_collapse, Termination};
use crate::propagator::evolve;
use crate::units::{
    initial_kinetic_energy_physical, scaled_time_to_seconds, ScaledParams, SpeciesTable,
};
use crate::variational;

pub const TABLE2_PLAN: &str = include_str!("../plans/table2.plan");
pub const TABLE3_PLAN: &str = include_str!("../plans/table3.plan");

#[derive(Debug, Parser)]
#[command(
    name = "qrtrap",
    about = "Radial Gross-Pitaevskii simulation of a spherical quantum-reflection trap",
    version
)]
pub struct Cli {
    /// Print the default run configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_defaults: bool,

    /// Worker threads for sweeps (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct NumericsArgs {
    /// Resolution profile: reference or fast.
    #[arg(long, default_value = "reference")]
    pub profile: Profile,

    /// TOML run-configuration file; overrides the profile defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl NumericsArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?),
            None => Ok(RunConfig::for_profile(self.profile)),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scaled trap parameters for a species or explicit inputs.
    Units {
        /// Species name from the data file (e.g. Na, 6Li).
        #[arg(long)]
        species: Option<String>,
        /// Atom-surface strength beta4 in Bohr radii (with --a-int instead of --species).
        #[arg(long)]
        beta4: Option<f64>,
        /// Scattering length in Bohr radii.
        #[arg(long, allow_hyphen_values = true)]
        a_int: Option<f64>,
        /// Atomic mass in electron masses (explicit-input mode).
        #[arg(long)]
        mass: Option<f64>,
        /// Trap radius L in Bohr radii.
        #[arg(long, default_value_t = 4.47e5)]
        trap_radius: f64,
        /// Packet diffuseness for the kinetic-energy estimate.
        #[arg(long, default_value_t = 5.0)]
        a: f64,
        /// Alternative species data file.
        #[arg(long)]
        species_file: Option<PathBuf>,
    },
    /// Propagate one (sigma, gamma) run and emit the series CSV.
    Simulate {
        #[arg(long)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 5.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_end: f64,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        numerics: NumericsArgs,
    },
    /// Run a sweep plan and write a result bundle.
    Sweep {
        /// Plan file path, or a bundled plan name: table2, table3.
        #[arg(long)]
        plan: String,
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
        #[command(flatten)]
        numerics: NumericsArgs,
        /// Replace the plan's numerics with the selected profile/config.
        #[arg(long, default_value_t = false)]
        override_numerics: bool,
    },
    /// Variational phase diagram (stationary coupling per sigma).
    PhaseDiagram {
        /// Comma-separated sigma values.
        #[arg(long, default_value = "10,20,30,40,50", value_delimiter = ',')]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        alpha_min: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 96)]
        n_alpha: usize,
        /// Output directory for phase_diagram.csv and discrepancy_audit.csv;
        /// stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical coupling by bisection on dynamical collapse runs.
    CriticalGamma {
        #[arg(long)]
        sigma: f64,
        /// Bracket gamma_lo,gamma_hi (collapse expected at gamma_lo).
        #[arg(long, default_value = "-0.70,-0.40", allow_hyphen_values = true)]
        bracket: String,
        #[arg(long, default_value_t = 0.005)]
        tol: f64,
        #[arg(long, default_value_t = 0.3)]
        tau_horizon: f64,
        #[arg(long, default_value_t = 5.0)]
        a: f64,
        #[command(flatten)]
        numerics: NumericsArgs,
    },
}

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_BRACKET_OR_PLAN: i32 = 4;

pub fn exit_code_for(err: &QrError) -> i32 {
    match err {
        QrError::Bracket(_) | QrError::Plan(_) => EXIT_BRACKET_OR_PLAN,
        QrError::NumericalBlowup { .. } => EXIT_BLOWUP,
        _ => EXIT_USAGE,
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_toml());
        return Ok(EXIT_OK);
    }
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| QrError::Config(e.to_string()))?;
    }
    let Some(command) = cli.command else {
        return Err(QrError::Config(
            "no subcommand given (try --help)".into(),
        ));
    };
    match command {
        Command::Units {
            species,
            beta4,
            a_int,
            mass,
            trap_radius,
            a,
            species_file,
        } => cmd_units(species, beta4, a_int, mass, trap_radius, a, species_file),
        Command::Simulate {
            sigma,
            gamma,
            a,
            tau_end,
            out,
            numerics,
        } => cmd_simulate(sigma, gamma, a, tau_end, out, &numerics),
        Command::Sweep {
            plan,
            out,
            numerics,
            override_numerics,
        } => cmd_sweep(&plan, &out, &numerics, override_numerics),
        Command::PhaseDiagram {
            sigmas,
            alpha_min,
            alpha_max,
            n_alpha,
            out,
        } => cmd_phase_diagram(&sigmas, (alpha_min, alpha_max), n_alpha, out),
        Command::CriticalGamma {
            sigma,
            bracket,
            tol,
            tau_horizon,
            a,
            numerics,
        } => cmd_critical_gamma(sigma, &bracket, tol, tau_horizon, a, &numerics),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_units(
    species: Option<String>,
    beta4: Option<f64>,
    a_int: Option<f64>,
    mass: Option<f64>,
    trap_radius: f64,
    a: f64,
    species_file: Option<PathBuf>,
) -> Result<i32> {
    let (name, mass, beta4, a_int) = match (species, beta4, a_int) {
        (Some(name), None, None) => {
            let table = match species_file {
                Some(path) => SpeciesTable::from_path(&path)?,
                None => SpeciesTable::bundled(),
            };
            let s = table.get(&name)?;
            (s.name.clone(), Some(s.mass), s.beta4, s.a_int)
        }
        (None, Some(beta4), Some(a_int)) => ("explicit".to_string(), mass, beta4, a_int),
        _ => {
            return Err(QrError::Config(
                "give either --species, or both --beta4 and --a-int".into(),
            ))
        }
    };
    let sigma = crate::units::scaled_sigma(trap_radius, beta4)?;
    let gamma = crate::units::radial_gamma(a_int, trap_radius)?;
    println!("species        {name}");
    println!("trap_radius_L  {trap_radius:.4e} a.u.");
    println!("sigma          {sigma:.4}");
    println!("gamma          {gamma:.4e}");
    if let Some(mass) = mass {
        let seconds = scaled_time_to_seconds(1.0, mass, trap_radius)?;
        let e_kin = initial_kinetic_energy_physical(a, mass, trap_radius)?;
        println!("tau=1 in SI    {seconds:.4e} s");
        println!("E_kin(a={a})   {e_kin:.4e} a.u.");
    }
    let _ = ScaledParams {
        sigma,
        gamma,
        trap_radius_l: trap_radius,
    };
    Ok(EXIT_OK)
}

fn cmd_simulate(
    sigma: f64,
    gamma: f64,
    a: f64,
    tau_end: f64,
    out: Option<PathBuf>,
    numerics: &NumericsArgs,
) -> Result<i32> {
    let run = numerics.resolve()?;
    let cfg = run.propagator(sigma, gamma)?;
    let psi = initial_packet(a, &cfg.grid)?;
    let series = evolve(&psi, &cfg, tau_end, run.sample_every)?;
    let report = detect_collapse(&series, &run.collapse_thresholds());
    let mut text = format!(
        "# sigma={sigma} gamma={gamma} a={a} tau_end={tau_end}\n# collapsed={}{}\n",
        report.collapsed,
        report
            .tau_collapse
            .map_or(String::new(), |t| format!(" tau_collapse={t:.6}")),
    );
    text.push_str(&experiments::series_to_csv(&series));
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    if matches!(series.termination, Some(Termination::NumericalBlowup { .. })) {
        eprintln!("run terminated by numerical blowup");
        return Ok(EXIT_BLOWUP);
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(
    plan_arg: &str,
    out: &std::path::Path,
    numerics: &NumericsArgs,
    override_numerics: bool,
) -> Result<i32> {
    let mut plan = match plan_arg {
        "table2" => SweepPlan::from_toml(TABLE2_PLAN)?,
        "table3" => SweepPlan::from_toml(TABLE3_PLAN)?,
        path if std::path::Path::new(path).exists() => {
            SweepPlan::from_path(std::path::Path::new(path))?
        }
        other => {
            return Err(QrError::Plan(format!(
                "plan '{other}' is neither a bundled name (table2, table3) nor an existing file"
            )))
        }
    };
    if override_numerics || numerics.config.is_some() || numerics.profile == Profile::Fast {
        plan.numerics = numerics.resolve()?;
    }
    eprintln!(
        "sweep: {} sigma x {} gamma points to tau = {}",
        plan.sigmas.len(),
        plan.gammas.len(),
        plan.tau_end
    );
    let bundle = experiments::run_sweep(&plan, out)?;
    let failures: Vec<_> = bundle.summaries.iter().filter(|s| s.error.is_some()).collect();
    for f in &failures {
        eprintln!(
            "point (sigma={}, gamma={}) failed: {}",
            f.sigma,
            f.gamma,
            f.error.as_deref().unwrap_or("")
        );
    }
    eprintln!(
        "wrote {} ({} points, hash {})",
        bundle.out_dir.display(),
        bundle.summaries.len(),
        bundle.config_hash
    );
    Ok(EXIT_OK)
}

fn cmd_phase_diagram(
    sigmas: &[f64],
    alpha_range: (f64, f64),
    n_alpha: usize,
    out: Option<PathBuf>,
) -> Result<i32> {
    let diagram = variational::phase_diagram(sigmas, alpha_range, n_alpha)?;
    let csv = diagram.to_csv();
    let audit = variational::discrepancy_audit(&diagram)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("phase_diagram.csv"), csv)?;
            std::fs::write(dir.join("discrepancy_audit.csv"), audit)?;
            eprintln!("wrote {}", dir.display());
        }
        None => {
            print!("{csv}");
            let mut err = std::io::stderr().lock();
            let _ = write!(err, "{audit}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_critical_gamma(
    sigma: f64,
    bracket: &str,
    tol: f64,
    tau_horizon: f64,
    a: f64,
    numerics: &NumericsArgs,
) -> Result<i32> {
    let parts: Vec<&str> = bracket.split(',').collect();
    if parts.len() != 2 {
        return Err(QrError::Config(format!(
            "bracket must be 'lo,hi', got '{bracket}'"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| QrError::Config(format!("bad bracket value: {e}")))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| QrError::Config(format!("bad bracket value: {e}")))?;
    let run = numerics.resolve()?;
    let probe = run.propagator(sigma, 0.0)?;
    let gamma_c = variational::critical_gamma_dynamic(
        sigma,
        &probe,
        a,
        (lo, hi),
        tol,
        tau_horizon,
        &run.collapse_thresholds(),
    )?;
    println!("gamma_c = {gamma_c:.4}");
    Ok(EXIT_OK)
}
