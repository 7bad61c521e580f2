//! Batch command-line surface: `fit`, `reconstruct`, `ratio`, `cycle`, `sweep`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{MachineSource, RunConfig};

use crate::cycle_analysis::{compare, energy_usage, simulate, write_trace, RatioPolicy};
use crate::loss_model::{d_from_c, LossCoefficients};
use crate::map_fit::{
    fit_from_points, load_map, reconstruct_map, reference_peak_point, save_map, scan_second_point, DesignPoint,
};
use crate::ratio_opt::{
    cvt_bounds, cycle_optimal_ratios, fgt_sweep, optimal_ratio_closed_form, optimal_ratio_numeric, quartic_residual,
    ratio_grid, ratio_histogram, verify_ratio_optimality, RatioQuery,
};
use crate::units::{kmh_to_m_s, rad_s_to_rpm};
use crate::vehicle::{road_load_stationary, DriveCycle};
use crate::{Error, Result};

/// Closed form and numeric roots must agree to this relative tolerance.
pub const RATIO_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "gearopt", version, about = "E-machine loss model and optimal transmission ratio analyses")]
pub struct Cli {
    /// JSON run configuration; i3 presets are used for missing sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Fgt,
    Cvt,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the loss model against the reference map.
    Fit,
    /// Write the analytical efficiency map on the configured grid.
    Reconstruct,
    /// Optimal ratio for one wheel demand.
    Ratio {
        /// Wheel torque, Nm (negative for braking).
        #[arg(long, allow_hyphen_values = true)]
        tau_t: Option<f64>,
        /// Wheel speed, rad/s.
        #[arg(long)]
        omega_t: Option<f64>,
        /// Use the stationary road load at this speed instead.
        #[arg(long, conflicts_with_all = ["tau_t", "omega_t"])]
        v_kmh: Option<f64>,
    },
    /// Cycle efficiency and energy for the fixed gear and/or the CVT.
    Cycle {
        /// Drive cycle CSV (`t_s,v_kmh`); overrides the config.
        #[arg(long)]
        cycle: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PolicyArg::Both)]
        policy: PolicyArg,
        /// Fixed ratio; defaults to the vehicle's production ratio.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Fixed-ratio sweep, CVT reference, stationary bounds and ratio histogram.
    Sweep {
        #[arg(long)]
        cycle: Option<PathBuf>,
    },
}

impl Error {
    /// 2 configuration, 3 infeasible, 4 numeric validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidCoefficient { .. }
            | Error::InvalidParameter { .. }
            | Error::EmptyInput(_)
            | Error::Parse { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::UndefinedOperatingPoint { .. }
            | Error::NegativeBeta { .. }
            | Error::NoInteriorMaximum { .. }
            | Error::SingularSystem
            | Error::InfeasibleDesignPoints(_)
            | Error::NoFeasibleCandidate
            | Error::NoPositiveRoot
            | Error::EnvelopeViolation(_)
            | Error::ZeroTractionEnergy => 3,
            Error::ClosedFormDegenerate(_) | Error::NumericValidation(_) => 4,
        }
    }
}

/// Runs one command and returns the summary that was printed.
pub fn run(cli: &Cli) -> Result<Value> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let summary = match &cli.command {
        Command::Fit => cmd_fit(&cfg, &cli.out)?,
        Command::Reconstruct => cmd_reconstruct(&cfg, &cli.out)?,
        Command::Ratio { tau_t, omega_t, v_kmh } => cmd_ratio(&cfg, &cli.out, *tau_t, *omega_t, *v_kmh)?,
        Command::Cycle { cycle, policy, gamma } => cmd_cycle(&cfg, &cli.out, cycle.as_deref(), *policy, *gamma)?,
        Command::Sweep { cycle } => cmd_sweep(&cfg, &cli.out, cycle.as_deref())?,
    };
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&summary)? + "\n",
        Format::Csv => flatten_csv(&summary),
    };
    print!("{text}");
    Ok(summary)
}

fn write_json(dir: &Path, name: &str, v: &impl Serialize) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(v)? + "\n";
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    let path = dir.join(name);
    fs::File::create(&path).map_err(|e| Error::io(path, e))
}

/// `key,value` lines with dotted keys for nested objects.
fn flatten_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, out);
                }
            }
            Value::String(s) => out.push_str(&format!("{prefix},{s}\n")),
            other => out.push_str(&format!("{prefix},{other}\n")),
        }
    }
    let mut out = String::from("key,value\n");
    walk("", v, &mut out);
    out
}

/// Loss model from the configured source. Fitting sources also return the
/// fit itself.
fn resolve_machine(cfg: &RunConfig) -> Result<(LossCoefficients, Option<crate::map_fit::FitResult>)> {
    let fit = match cfg.machine_source()? {
        MachineSource::Coefficients(c) => return Ok((c, None)),
        MachineSource::Points { points, reference } => {
            let map = reference.as_deref().map(load_map).transpose()?;
            fit_from_points(map.as_ref(), points)?
        }
        MachineSource::ReferenceMap(path) => {
            let map = load_map(&path)?;
            best_fit(&scan_second_point(&map, DesignPoint::origin(), reference_peak_point(&map)?)?)?
        }
    };
    Ok((fit.c, Some(fit)))
}

fn best_fit(scan: &[crate::map_fit::FitResult]) -> Result<crate::map_fit::FitResult> {
    scan.iter()
        .fold(None, |best: Option<&crate::map_fit::FitResult>, f| match best {
            Some(b) if b.rmse <= f.rmse => Some(b),
            _ => Some(f),
        })
        .cloned()
        .ok_or(Error::NoFeasibleCandidate)
}

fn cmd_fit(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let (map_path, points) = match cfg.machine_source()? {
        MachineSource::ReferenceMap(p) => (p, None),
        MachineSource::Points {
            points,
            reference: Some(p),
        } => (p, Some(points)),
        _ => return Err(Error::param("machine.reference_map", "fit needs a reference map")),
    };
    let map = load_map(&map_path)?;
    let (fit, scan) = match points {
        Some(p) => (fit_from_points(Some(&map), p)?, Vec::new()),
        None => {
            let scan = scan_second_point(&map, DesignPoint::origin(), reference_peak_point(&map)?)?;
            (best_fit(&scan)?, scan)
        }
    };
    write_json(out, "fit.json", &fit)?;
    let mut w = csv::Writer::from_writer(create(out, "fit_scan.csv")?);
    w.write_record(["omega2_rpm", "tau2_nm", "eta2", "rmse", "samples"])?;
    for f in &scan {
        let p = f.design_points[1];
        w.write_record([
            rad_s_to_rpm(p.omega_star).to_string(),
            p.tau_star.to_string(),
            p.eta_star.to_string(),
            f.rmse.to_string(),
            f.samples.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out.join("fit_scan.csv"), e))?;
    Ok(json!({
        "fit": fit,
        "rmse_percent": fit.rmse * 100.0,
        "candidates": scan.len(),
    }))
}

fn cmd_reconstruct(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let (c, _) = resolve_machine(cfg)?;
    let limits = cfg.limits()?;
    let map = reconstruct_map(&c, &limits, &cfg.grid(&limits)?)?;
    save_map(out.join("map.csv"), &map)?;
    let argmax = map.argmax().map(|(i, j, eta)| {
        json!({
            "omega_rpm": map.speed_rpm()[i],
            "tau_nm": map.torque()[j],
            "eta": eta,
        })
    });
    Ok(json!({
        "speeds": map.n_speed(),
        "torques": map.n_torque(),
        "argmax": argmax,
    }))
}

fn cmd_ratio(
    cfg: &RunConfig,
    out: &Path,
    tau_t: Option<f64>,
    omega_t: Option<f64>,
    v_kmh: Option<f64>,
) -> Result<Value> {
    let (c, _) = resolve_machine(cfg)?;
    let d = d_from_c(&c)?;
    let limits = cfg.limits()?;
    let vehicle = cfg.vehicle()?;
    let (tau_t, omega_t) = match (tau_t.or(cfg.ratio.tau_t_nm), omega_t.or(cfg.ratio.omega_t_rad_s)) {
        (Some(t), Some(w)) if v_kmh.is_none() => (t, w),
        _ => {
            let v = v_kmh
                .or(cfg.ratio.v_kmh)
                .ok_or_else(|| Error::param("ratio", "give --tau-t and --omega-t, or --v-kmh"))?;
            let w = road_load_stationary(&vehicle, kmh_to_m_s(v));
            (w.tau_t, w.omega_t)
        }
    };
    let q = RatioQuery::new(tau_t, omega_t, vehicle.eta_t, d)?;
    let numeric = optimal_ratio_numeric(&q)?;
    let closed = match optimal_ratio_closed_form(&q) {
        Ok(g) => Some(g),
        Err(Error::ClosedFormDegenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let disagreement = closed.map(|g| (g - numeric).abs() / numeric);
    if let Some(dev) = disagreement.filter(|&d| !(d < RATIO_AGREEMENT_TOL)) {
        return Err(Error::NumericValidation(format!(
            "closed form {} and numeric {numeric} disagree by {dev:e}",
            closed.unwrap_or(f64::NAN)
        )));
    }
    let gamma = closed.unwrap_or(numeric);
    let optimal = match verify_ratio_optimality(&q, gamma, &c, Some(&limits)) {
        Ok(b) => json!(b),
        Err(Error::EnvelopeViolation(m)) => json!(format!("envelope violation: {m}")),
        Err(e) => return Err(e),
    };
    let summary = json!({
        "tau_t_nm": tau_t,
        "omega_t_rad_s": omega_t,
        "kappa": q.kappa(),
        "gamma": gamma,
        "gamma_closed_form": closed,
        "gamma_numeric": numeric,
        "relative_disagreement": disagreement,
        "residual_closed_form": closed.map(|g| quartic_residual(&q, g)),
        "residual_numeric": quartic_residual(&q, numeric),
        "omega_m_rpm": rad_s_to_rpm(omega_t * gamma),
        "local_efficiency_max": optimal,
    });
    write_json(out, "ratio.json", &summary)?;
    Ok(summary)
}

fn load_cycle(cfg: &RunConfig, cli_path: Option<&Path>) -> Result<DriveCycle> {
    let path = cli_path
        .map(Path::to_path_buf)
        .or_else(|| cfg.cycle.clone())
        .ok_or_else(|| Error::param("cycle", "no drive cycle given (config `cycle` or --cycle)"))?;
    DriveCycle::load_csv(path)
}

fn cmd_cycle(
    cfg: &RunConfig,
    out: &Path,
    cycle: Option<&Path>,
    policy: PolicyArg,
    gamma: Option<f64>,
) -> Result<Value> {
    let (c, _) = resolve_machine(cfg)?;
    let limits = cfg.limits()?;
    let vehicle = cfg.vehicle()?;
    let cyc = load_cycle(cfg, cycle)?;
    let fixed = RatioPolicy::Fixed(gamma.unwrap_or(vehicle.gamma_fgt));
    let cvt = RatioPolicy::Cvt {
        ool: d_from_c(&c)?,
        range: None,
    };
    let mut summary = serde_json::Map::new();
    summary.insert("cycle".into(), json!(cyc.name));
    let mut reports = Vec::new();
    for (name, p, wanted) in [
        ("fgt", fixed, policy != PolicyArg::Cvt),
        ("cvt", cvt, policy != PolicyArg::Fgt),
    ] {
        if !wanted {
            continue;
        }
        let run = simulate(&c, &limits, &vehicle, &cyc, &p)?;
        write_trace(create(out, &format!("trace_{name}.csv"))?, &run.trace)?;
        summary.insert(name.into(), json!(run.report));
        summary.insert(format!("{name}_energy_usage"), json!(energy_usage(&run.report)?));
        reports.push(run.report);
    }
    if let [f, v] = reports.as_slice() {
        summary.insert("comparison".into(), json!(compare(f, v, 0.0)));
    }
    let summary = Value::Object(summary);
    write_json(out, "report.json", &summary)?;
    Ok(summary)
}

fn cmd_sweep(cfg: &RunConfig, out: &Path, cycle: Option<&Path>) -> Result<Value> {
    let (c, _) = resolve_machine(cfg)?;
    let d = d_from_c(&c)?;
    let limits = cfg.limits()?;
    let vehicle = cfg.vehicle()?;
    let cyc = load_cycle(cfg, cycle)?;
    let s = cfg.sweep;
    let grid = ratio_grid(s.gamma_min, s.gamma_max, s.gamma_step)?;
    let sweep = fgt_sweep(&c, &limits, &vehicle, &cyc, &grid)?;

    let mut w = csv::Writer::from_writer(create(out, "sweep.csv")?);
    w.write_record(["gamma", "eta_avg"])?;
    for (g, e) in sweep.gamma_grid.iter().zip(&sweep.eta_avg_fgt) {
        w.write_record([g.to_string(), e.map(|e| e.to_string()).unwrap_or_default()])?;
    }
    w.flush().map_err(|e| Error::io(out.join("sweep.csv"), e))?;

    let hist = ratio_histogram(&cycle_optimal_ratios(&d, &vehicle, &cyc)?, s.hist_bin_width, s.hist_threshold)?;
    let mut w = csv::Writer::from_writer(create(out, "histogram.csv")?);
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for b in &hist.bins {
        w.write_record([b.bin_lo.to_string(), b.bin_hi.to_string(), b.count.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(out.join("histogram.csv"), e))?;

    let bounds = cvt_bounds(&d, &vehicle, 0.0, s.bounds_v_max_kmh)?;
    let summary = json!({
        "cycle": cyc.name,
        "bounds": {
            "gamma_min": bounds.gamma_min,
            "gamma_max": bounds.gamma_max,
            "v_at_min_kmh": bounds.v_at_min_kmh(),
            "v_at_max_kmh": bounds.v_at_max_kmh(),
        },
        "gamma_fgt_opt": sweep.gamma_fgt_opt,
        "eta_fgt_opt": sweep.eta_fgt_opt,
        "eta_avg_cvt": sweep.eta_avg_cvt,
        "cvt_mean_ratio": sweep.cvt_mean_ratio,
        "cvt_clamp_events": sweep.cvt_clamp_events,
        "masked_ratios": sweep.eta_avg_fgt.iter().filter(|e| e.is_none()).count(),
        "histogram_samples": hist.samples,
        "fraction_below_threshold": hist.fraction_below,
        "threshold": hist.threshold,
    });
    write_json(out, "summary.json", &summary)?;
    Ok(summary)
}
