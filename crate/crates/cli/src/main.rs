//! `wqed`: batch runs of spectra, sweeps, dark-state counts, perturbation
//! reports and dynamics for driven qubit arrays in a waveguide.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use config::{RangeSpec, RunConfig};
use wqed_core::dynamics::{
    evolve_with, fully_excited_state, write_trajectory_csv, EvolveOptions, DEFAULT_SAMPLES,
};
use wqed_core::operators::{ArrayParams, Incidence};
use wqed_core::perturbation::pt_report;
use wqed_core::spectra::{
    spectrum_auto, subradiant_count_from, sweep, targeted_spectrum_with, write_eigenvalues_csv,
    write_sweep_csv, Observable, SpectrumOptions, TargetedOptions, DEFAULT_SUBRADIANT_THRESHOLD,
    DEFAULT_ZERO_TOL,
};
use wqed_core::{build_liouvillian, Complex64};

#[derive(Parser, Debug)]
#[command(
    name = "wqed",
    version,
    about = "Spectra, dark states and dynamics of driven qubit arrays in a waveguide"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Liouvillian eigenvalues as `index,re,im` CSV.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Only the K eigenvalues nearest zero, via the shift-invert solver.
        #[arg(long, value_name = "K")]
        targeted: Option<usize>,
        /// Also write the assembled Liouvillian in the binary triplet format.
        #[arg(long, value_name = "PATH")]
        dump_liouvillian: Option<PathBuf>,
    },
    /// One CSV row per (d/λ, ΩR) grid point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "second_slowest_rate")]
        observable: Observable,
    },
    /// Kernel dimension and subradiant count as JSON.
    Darkcount {
        #[command(flatten)]
        common: Common,
    },
    /// Strong-drive perturbation report as JSON.
    Pt {
        #[command(flatten)]
        common: Common,
        /// Skip the cross-check against a power-law fit of the exact rates.
        #[arg(long)]
        no_fit: bool,
    },
    /// Correlators along a trajectory from the fully excited state, as CSV.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Number of qubits.
    #[arg(long = "n")]
    n: usize,
    /// Lattice period in wavelengths, a value or start:stop:count.
    #[arg(long, default_value = "0.25")]
    d_over_lambda: RangeSpec,
    /// Drive amplitude in units of gamma, a value or start:stop:count.
    #[arg(long, default_value = "0")]
    omega_r: RangeSpec,
    /// Radiative rate into the waveguide; all rates scale with it.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = IncidenceArg::Left)]
    incidence: IncidenceArg,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    zero_tol: f64,
    #[arg(long, default_value_t = DEFAULT_SUBRADIANT_THRESHOLD)]
    subradiant_threshold: f64,
    #[arg(long, default_value_t = wqed_core::dynamics::DEFAULT_TOLERANCE)]
    tol_integrator: f64,
    /// Seed for the random start block of the targeted solver.
    #[arg(long, default_value_t = TargetedOptions::default().seed)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IncidenceArg {
    Left,
    Right,
}

impl IncidenceArg {
    fn core(self) -> Incidence {
        match self {
            Self::Left => Incidence::Left,
            Self::Right => Incidence::Right,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Left => "left",
            Self::Right => "right",
        }
    }
}

impl Common {
    fn config(&self, command: &'static str) -> RunConfig {
        RunConfig {
            command,
            n_qubits: self.n,
            phi: (self.d_over_lambda.count == 1).then(|| {
                (2.0 * std::f64::consts::PI * self.d_over_lambda.start)
                    .rem_euclid(2.0 * std::f64::consts::PI)
            }),
            d_over_lambda: self.d_over_lambda.clone(),
            omega_r: self.omega_r.clone(),
            gamma_1d: self.gamma,
            incidence: self.incidence.name(),
            zero_tol: self.zero_tol,
            subradiant_threshold: self.subradiant_threshold,
            tol_integrator: self.tol_integrator,
            seed: self.seed,
            observable: None,
            targeted: None,
            fit: None,
            t_max: None,
            samples: None,
            out: self.out.clone(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    fn single_params(&self) -> Result<ArrayParams> {
        let d = self
            .d_over_lambda
            .scalar("d-over-lambda")
            .map_err(UsageError)?;
        let omega = self.omega_r.scalar("omega-r").map_err(UsageError)?;
        Ok(ArrayParams::from_period(self.n, d, omega * self.gamma)?
            .with_gamma(self.gamma)?
            .with_incidence(self.incidence.core()))
    }

    fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            zero_tol: self.zero_tol,
            subradiant_threshold: self.subradiant_threshold,
            ..SpectrumOptions::default()
        }
    }
}

/// Invalid command-line input, reported with exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_csv_header(w: &mut dyn Write, config: &RunConfig) -> Result<()> {
    writeln!(w, "# wqed {}", config.command)?;
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    Ok(())
}

fn write_json(out: &Option<PathBuf>, config: &RunConfig, result: Value) -> Result<()> {
    let mut doc = json!({ "config": config });
    if let (Some(obj), Value::Object(fields)) = (doc.as_object_mut(), result) {
        obj.extend(fields);
    }
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Spectrum {
            common,
            targeted,
            dump_liouvillian,
        } => {
            let mut config = common.config("spectrum");
            config.targeted = targeted;
            let params = common.single_params()?;
            let l = build_liouvillian(&params)?;
            if let Some(path) = &dump_liouvillian {
                let f = File::create(path)
                    .with_context(|| format!("cannot create {}", path.display()))?;
                l.write_binary(BufWriter::new(f))?;
            }
            let spec = match targeted {
                Some(k) => {
                    let opts = TargetedOptions {
                        seed: common.seed,
                        ..TargetedOptions::default()
                    };
                    targeted_spectrum_with(&l, Complex64::new(0.0, 0.0), k, &opts)?
                }
                None => spectrum_auto(&l, false, &common.spectrum_options())?,
            };
            let mut w = open_output(&common.out)?;
            write_csv_header(&mut w, &config)?;
            write_eigenvalues_csv(&mut w, &spec)?;
            w.flush()?;
        }
        Command::Sweep { common, observable } => {
            let mut config = common.config("sweep");
            config.observable = Some(observable.to_string());
            let d = common.d_over_lambda.values();
            let omegas: Vec<f64> = common
                .omega_r
                .values()
                .iter()
                .map(|w| w * common.gamma)
                .collect();
            let rows = sweep(
                common.n,
                &d,
                &omegas,
                common.gamma,
                observable,
                &common.spectrum_options(),
            );
            let mut w = open_output(&common.out)?;
            write_csv_header(&mut w, &config)?;
            write_sweep_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Command::Darkcount { common } => {
            let config = common.config("darkcount");
            let params = common.single_params()?;
            let opts = common.spectrum_options();
            let (first, second) = rayon::join(
                || spectrum_auto(&build_liouvillian(&params)?, false, &opts),
                || {
                    let doubled = params.with_omega_r(2.0 * params.omega_r)?;
                    spectrum_auto(&build_liouvillian(&doubled)?, false, &opts)
                },
            );
            let (first, second) = (first?, second?);
            let count = subradiant_count_from(&params, &first, &second, &opts);
            let result = json!({
                "n_qubits": params.n_qubits,
                "phi": params.phi,
                "d_over_lambda": params.d_over_lambda(),
                "omega_r": params.omega_r,
                "kernel_dimension": first.zero_multiplicity(opts.zero_tol * params.gamma_1d),
                "subradiant_count": count.count,
                "doubled_drive_count": count.doubled_count,
                "stable": count.is_stable(),
            });
            write_json(&common.out, &config, result)?;
        }
        Command::Pt { common, no_fit } => {
            let mut config = common.config("pt");
            config.fit = Some(!no_fit);
            let params = common.single_params()?;
            let report = pt_report(&params, !no_fit)?;
            write_json(&common.out, &config, serde_json::to_value(report)?)?;
        }
        Command::Evolve {
            common,
            t_max,
            samples,
        } => {
            let mut config = common.config("evolve");
            config.t_max = Some(t_max);
            config.samples = Some(samples);
            let params = common.single_params()?;
            let rho0 = fully_excited_state(params.n_qubits)?;
            let opts = EvolveOptions {
                tol: common.tol_integrator,
                ..EvolveOptions::default()
            };
            let traj = evolve_with(&params, rho0.as_ref(), t_max, samples, &opts)?;
            let mut w = open_output(&common.out)?;
            write_csv_header(&mut w, &config)?;
            write_trajectory_csv(&mut w, &traj)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn jobs(command: &Command) -> Option<usize> {
    match command {
        Command::Spectrum { common, .. }
        | Command::Sweep { common, .. }
        | Command::Darkcount { common }
        | Command::Pt { common, .. }
        | Command::Evolve { common, .. } => common.jobs,
    }
}

fn report_error(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_error("usage", e.to_string().trim(), 2),
    };
    let outcome = match jobs(&cli.command) {
        Some(0) => Err(anyhow::Error::new(UsageError(
            "--jobs must be at least 1".into(),
        ))),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start worker pool")
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                report_error("usage", &message, 2)
            } else if let Some(core) = e.downcast_ref::<wqed_core::Error>() {
                report_error(core.kind(), &message, 1)
            } else {
                report_error("io", &message, 1)
            }
        }
    }
}
