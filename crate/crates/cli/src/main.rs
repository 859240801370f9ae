//! Command-line front end: declarative scenario configs in, plot-ready
//! tables out.
//!
//! Exit codes: 0 success; 1 i/o or schema errors (message names the
//! offending key); 2 numerical errors (singular point, non-convergence)
//! with the axis location when known.

use clap::{Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use tripod_xpm::calibration::{calibrate_dipole, rabi_from_power, BeamSpec};
use tripod_xpm::config::{self, ScenarioConfig};
use tripod_xpm::kerr::{conditional_phase, xpm_at_point, xpm_phase_shift};
use tripod_xpm::model::FieldRole;
use tripod_xpm::oracle::{equivalence_scan, max_equivalence_error};
use tripod_xpm::scan::{fig4_scan, fit_parameters, sweep, FitOptions, FitProblem};
use tripod_xpm::table_io::{emit_fig4, emit_panel, emit_table, TableFormat};
use tripod_xpm::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tripod-xpm",
    about = "Steady-state double-EIT / cross-phase-modulation simulator for a tripod atomic medium",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a detuning sweep from a scenario config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Reconstruct a figure preset (fig2a, fig2b, fig3a..fig3h, fig4).
    Fig {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Extract XPM coefficients and phase shifts at the operating point.
    Xpm {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the analytic susceptibilities against the Lindblad oracle.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Least-squares fit of free parameters to measured data.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the dipole scale to (power, diameter, rabi) calibration pairs.
    Calibrate {
        #[arg(long)]
        pairs: PathBuf,
    },
}

fn read_config(path: &PathBuf) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_json(&text)
}

fn run_sweep(config: &PathBuf, out: &PathBuf, format: &str) -> Result<()> {
    let cfg = read_config(config)?;
    let format: TableFormat = format.parse()?;
    let spec = cfg.scan_spec()?;
    let table = sweep(&spec)?;
    std::fs::write(out, emit_table(&table, format, &cfg.provenance))?;
    eprintln!("wrote {} rows to {}", table.rows.len(), out.display());
    Ok(())
}

fn run_fig(preset_name: &str, out: &PathBuf, format: &str) -> Result<()> {
    let cfg = config::preset(preset_name)?;
    let format: TableFormat = format.parse()?;
    let text = if preset_name == "fig4" {
        let rows = fig4_scan(&cfg.fig4_spec()?)?;
        emit_fig4(&rows, format, &cfg.provenance)
    } else {
        let emit = cfg
            .emit
            .as_ref()
            .ok_or_else(|| Error::Schema(format!("preset {preset_name} lacks an emit section")))?
            .clone();
        let main = sweep(&cfg.scan_spec()?)?;
        let baseline = if emit.lambda_baseline {
            Some(sweep(&cfg.lambda_scan_spec(emit.field)?)?)
        } else {
            None
        };
        emit_panel(&main, baseline.as_ref(), emit.field, emit.quantity, format, &cfg.provenance)?
    };
    std::fs::write(out, text)?;
    eprintln!("wrote preset {preset_name} to {}", out.display());
    Ok(())
}

fn run_xpm(config: &PathBuf) -> Result<()> {
    let cfg = read_config(config)?;
    let xpm = cfg
        .xpm
        .as_ref()
        .ok_or_else(|| Error::Schema("missing required section `xpm`".into()))?
        .clone();
    if let Some(n2) = xpm.n2_cm2_per_w {
        // Arithmetic mode: phase from a given coefficient and intensity.
        let intensity = xpm.intensity_w_per_cm2.ok_or_else(|| {
            Error::Schema("xpm.intensity_w_per_cm2 is required with xpm.n2_cm2_per_w".into())
        })?;
        let params = cfg.base_params()?;
        let phi = xpm_phase_shift(n2, intensity, params.wavelength_nm, params.cell_length_cm);
        println!("n2_cm2_per_w = {n2}");
        println!("intensity_w_per_cm2 = {intensity}");
        println!("phase_rad = {phi}");
        println!("phase_deg = {}", phi.to_degrees());
        return Ok(());
    }
    let drives = cfg.drives()?;
    let params = cfg.params_for_branch(&drives)?;
    let intensity_for = |role: FieldRole| -> Result<f64> {
        if let Some(i) = xpm.perturbing_intensity_w_per_cm2 {
            return Ok(i);
        }
        let rabi = drives.get(role).rabi_mhz;
        let i = tripod_xpm::calibration::intensity_from_rabi(rabi, params.dipole_cm);
        if i <= 0.0 {
            return Err(Error::ZeroIntensity(i));
        }
        Ok(i)
    };
    let targets: Vec<FieldRole> = match xpm.target {
        Some(t) => vec![t],
        None => vec![FieldRole::Probe, FieldRole::Trigger],
    };
    for target in &targets {
        let perturber = match target {
            FieldRole::Probe => FieldRole::Trigger,
            _ => FieldRole::Probe,
        };
        let result = xpm_at_point(*target, &params, &drives, intensity_for(perturber)?)?;
        println!("[{target}]");
        println!("n2_cm2_per_w = {}", result.n2_cm2_per_w);
        println!("phase_rad = {}", result.phase_shift_rad);
        println!("phase_deg = {}", result.phase_shift_rad.to_degrees());
        println!("transmission = {}", result.transmission_at_point);
        if cfg.populations.mode == tripod_xpm::config::PopulationsMode::Oracle {
            // Blocked-beam protocol: the perturber-off branch carries its
            // own steady-state populations.
            let measured = cfg.measured_xpm_phase(*target, None)?;
            println!("measured_phase_rad = {measured}");
            println!("measured_phase_deg = {}", measured.to_degrees());
        }
    }
    if targets.len() == 2 {
        let phi = conditional_phase(&params, &drives, &drives)?;
        println!("conditional_phase_rad = {phi}");
    }
    Ok(())
}

fn run_oracle_check(config: &PathBuf) -> Result<()> {
    let cfg = read_config(config)?;
    let check = cfg
        .oracle_check
        .as_ref()
        .ok_or_else(|| Error::Schema("missing required section `oracle_check`".into()))?;
    if check.points < 3 {
        return Err(Error::Schema("oracle_check.points must be >= 3".into()));
    }
    let drives = cfg.drives()?;
    let params = cfg.base_params()?;
    let grid: Vec<f64> = (0..check.points)
        .map(|i| {
            check.start_mhz
                + (i as f64 * (check.stop_mhz - check.start_mhz)) / ((check.points - 1) as f64)
        })
        .collect();
    let points = equivalence_scan(
        &params,
        &drives,
        &cfg.decay_model_options(),
        &grid,
        cfg.oracle.weights,
    )?;
    let (max_p, max_t) = max_equivalence_error(&points);
    println!("grid_points = {}", points.len());
    println!("max_rel_err_probe = {max_p}");
    println!("max_rel_err_trigger = {max_t}");
    println!("max_rel_err = {}", max_p.max(max_t));
    Ok(())
}

fn run_fit(config: &PathBuf, data: &PathBuf, out: &Option<PathBuf>) -> Result<()> {
    let cfg = read_config(config)?;
    let fit_cfg = cfg
        .fit
        .as_ref()
        .ok_or_else(|| Error::Schema("missing required section `fit`".into()))?
        .clone();
    let text = std::fs::read_to_string(data)?;
    let rows = tripod_xpm::scan::fit::parse_data_csv(&text)?;
    let problem = FitProblem {
        spec: cfg.scan_spec()?,
        observable: fit_cfg.observable,
        free: fit_cfg.free.iter().map(|b| b.param).collect(),
        bounds: fit_cfg.free.iter().map(|b| (b.lower, b.upper)).collect(),
        data: rows,
    };
    let mut options = FitOptions::default();
    if let Some(n) = fit_cfg.max_iterations {
        options.max_iterations = n;
    }
    let result = fit_parameters(&problem, &options)?;
    println!("converged = {}", result.converged);
    println!("iterations = {}", result.iterations);
    println!("residual = {}", result.residual);
    for (cfg_entry, value) in fit_cfg.free.iter().zip(&result.values) {
        println!("{:?} = {value}", cfg_entry.param);
    }
    if let Some(path) = out {
        let mut doc = BTreeMap::new();
        doc.insert("converged".to_string(), serde_json::json!(result.converged));
        doc.insert("iterations".to_string(), serde_json::json!(result.iterations));
        doc.insert("residual".to_string(), serde_json::json!(result.residual));
        let values: BTreeMap<String, f64> = fit_cfg
            .free
            .iter()
            .zip(&result.values)
            .map(|(b, v)| (format!("{:?}", b.param), *v))
            .collect();
        doc.insert("values".to_string(), serde_json::json!(values));
        std::fs::write(path, serde_json::to_string_pretty(&doc).expect("serializes"))?;
    }
    if !result.converged {
        return Err(Error::InvalidFit(format!(
            "fit did not converge after {} iterations (residual {})",
            result.iterations, result.residual
        )));
    }
    Ok(())
}

fn run_calibrate(pairs_path: &PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(pairs_path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Schema(format!(
                "pairs line {}: expected power_w,diameter_cm,rabi_mhz",
                lineno + 1
            )));
        }
        let parse = |s: &str| s.parse::<f64>().ok();
        match (parse(fields[0]), parse(fields[1]), parse(fields[2])) {
            (Some(p), Some(d), Some(r)) => pairs.push((BeamSpec::new(p, d)?, r)),
            _ if lineno == 0 => {} // header line
            _ => {
                return Err(Error::Schema(format!("pairs line {}: non-numeric value", lineno + 1)))
            }
        }
    }
    let mu = calibrate_dipole(&pairs)?;
    println!("dipole_cm = {mu}");
    for (beam, quoted) in &pairs {
        let model = rabi_from_power(beam, mu);
        println!(
            "P = {} W, d = {} cm: model {model} MHz vs quoted {quoted} MHz",
            beam.power_w, beam.diameter_cm
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Sweep { config, out, format } => run_sweep(config, out, format),
        Command::Fig { preset, out, format } => run_fig(preset, out, format),
        Command::Xpm { config } => run_xpm(config),
        Command::OracleCheck { config } => run_oracle_check(config),
        Command::Fit { config, data, out } => run_fit(config, data, out),
        Command::Calibrate { pairs } => run_calibrate(pairs),
    }
}

fn main() -> ExitCode {
    // Worker cap: TRIPOD_XPM_THREADS = 0 or unset means automatic.
    if let Ok(threads) = std::env::var("TRIPOD_XPM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
