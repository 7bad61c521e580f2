//! Cycle-level machine efficiency and energy figures for a transmission
//! policy.
//!
//! `eta_avg_*` are time averages of the per-sample machine efficiency over
//! samples with non-zero wheel power; `eta_energy_*` are the energy-weighted
//! counterparts (useful out over total in).

use std::io::Write;

use serde::Serialize;

use crate::loss_model::{flow_efficiency, loss_power, LossCoefficients, MachineLimits, OolCoefficients};
use crate::ratio_opt::{optimal_ratio, RatioQuery};
use crate::units::J_PER_KWH;
use crate::vehicle::{cycle_to_wheel, wheel_to_machine, DriveCycle, VehicleParams, WheelDemand};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RatioPolicy {
    /// Single-speed transmission.
    Fixed(f64),
    /// Per-sample OOL ratio, optionally restricted to `(lo, hi)` before the
    /// envelope clamp.
    Cvt {
        ool: OolCoefficients,
        range: Option<(f64, f64)>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub eta_avg_motoring: f64,
    pub eta_avg_combined: f64,
    pub eta_energy_motoring: f64,
    pub eta_energy_combined: f64,
    /// Net AC energy drawn by the machine, regeneration subtracted.
    pub energy_ac_kwh: f64,
    pub energy_ac_motoring_kwh: f64,
    pub energy_mech_kwh: f64,
    pub energy_loss_motoring_kwh: f64,
    /// Mechanical energy fed into the machine while braking.
    pub energy_regen_mech_kwh: f64,
    /// AC energy returned while braking.
    pub energy_regen_ac_kwh: f64,
    pub energy_per_100km: f64,
    pub distance_km: f64,
    pub mean_ratio: f64,
    pub clamp_events: usize,
    pub envelope_violations: usize,
    pub samples_used: usize,
    pub samples_motoring: usize,
    pub samples_regen: usize,
}

/// One trace row; machine fields are `None` for idle samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub v: f64,
    pub omega_t: f64,
    pub tau_t: f64,
    pub gamma: Option<f64>,
    pub omega_m: Option<f64>,
    pub tau_m: Option<f64>,
    pub eta_m: Option<f64>,
    pub p_ac: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleRun {
    pub report: CycleReport,
    pub trace: Vec<TraceRow>,
}

/// Ratio for one sample and whether a bound moved it.
fn choose_ratio(policy: &RatioPolicy, w: WheelDemand, vehicle: &VehicleParams, limits: &MachineLimits) -> Result<(f64, bool)> {
    let (ool, range) = match *policy {
        RatioPolicy::Fixed(g) => return Ok((g, false)),
        RatioPolicy::Cvt { ool, range } => (ool, range),
    };
    let raw = optimal_ratio(&RatioQuery::new(w.tau_t, w.omega_t, vehicle.eta_t, ool)?)?;
    let mut g = raw;
    if let Some((lo, hi)) = range {
        g = g.clamp(lo, hi);
    }
    let torque_lo = if w.tau_t > 0.0 {
        w.tau_t / (vehicle.eta_t * limits.tau_peak_max)
    } else {
        -w.tau_t * vehicle.eta_t / limits.tau_peak_max
    };
    let speed_hi = limits.omega_max / w.omega_t;
    if g < torque_lo {
        g = torque_lo;
    }
    // Over-speed is the harder limit when both cannot hold.
    if g > speed_hi {
        g = speed_hi;
    }
    Ok((g, g != raw))
}

/// Runs the cycle under `policy` and keeps the per-sample trace.
pub fn simulate(
    c: &LossCoefficients,
    limits: &MachineLimits,
    vehicle: &VehicleParams,
    cyc: &DriveCycle,
    policy: &RatioPolicy,
) -> Result<CycleRun> {
    vehicle.validate()?;
    match *policy {
        RatioPolicy::Fixed(g) if !(g > 0.0 && g.is_finite()) => {
            return Err(Error::param("gamma", format!("must be positive, got {g}")));
        }
        RatioPolicy::Cvt { range: Some((lo, hi)), .. } if !(lo > 0.0 && lo <= hi) => {
            return Err(Error::param("cvt range", format!("need 0 < {lo} <= {hi}")));
        }
        _ => {}
    }
    let dt = cyc.dt();
    let n = cyc.len();
    // Trapezoidal weights, matching the distance integration.
    let weight = |i: usize| if i == 0 || i + 1 == n { 0.5 * dt } else { dt };
    let demands = cycle_to_wheel(vehicle, cyc);
    let mut trace = Vec::with_capacity(demands.len());
    let (mut e_mech, mut e_ac_mot, mut e_loss_mot) = (0.0, 0.0, 0.0);
    let (mut e_regen_mech, mut e_regen_ac) = (0.0, 0.0);
    let (mut eta_sum_mot, mut eta_sum_all, mut ratio_sum) = (0.0, 0.0, 0.0);
    let (mut n_mot, mut n_regen, mut clamps, mut violations) = (0, 0, 0, 0);

    for (i, w) in demands.into_iter().enumerate() {
        let mut row = TraceRow {
            t: cyc.time()[i],
            v: cyc.speed()[i],
            omega_t: w.omega_t,
            tau_t: w.tau_t,
            gamma: None,
            omega_m: None,
            tau_m: None,
            eta_m: None,
            p_ac: None,
        };
        if w.power() == 0.0 {
            trace.push(row);
            continue;
        }
        let (g, clamped) = choose_ratio(policy, w, vehicle, limits)?;
        clamps += clamped as usize;
        let p = wheel_to_machine(w, g, vehicle.eta_t)?;
        violations += limits.check(p).is_some() as usize;
        let loss = loss_power(c, p);
        let pm = p.mechanical_power();
        let eta = flow_efficiency(c, p)?;
        let p_ac = pm + loss;
        let dt = weight(i);
        if pm > 0.0 {
            n_mot += 1;
            eta_sum_mot += eta;
            e_mech += pm * dt;
            e_ac_mot += p_ac * dt;
            e_loss_mot += loss * dt;
        } else {
            n_regen += 1;
            e_regen_mech += -pm * dt;
            e_regen_ac += -p_ac * dt;
        }
        eta_sum_all += eta;
        ratio_sum += g;
        row.gamma = Some(g);
        row.omega_m = Some(p.omega);
        row.tau_m = Some(p.tau);
        row.eta_m = Some(eta);
        row.p_ac = Some(p_ac);
        trace.push(row);
    }

    if n_mot == 0 || e_mech <= 0.0 {
        return Err(Error::ZeroTractionEnergy);
    }
    let used = n_mot + n_regen;
    let distance_km = cyc.distance() / 1000.0;
    let energy_ac_kwh = (e_ac_mot - e_regen_ac) / J_PER_KWH;
    let report = CycleReport {
        eta_avg_motoring: eta_sum_mot / n_mot as f64,
        eta_avg_combined: eta_sum_all / used as f64,
        eta_energy_motoring: e_mech / e_ac_mot,
        eta_energy_combined: (e_mech + e_regen_ac.max(0.0)) / (e_ac_mot + e_regen_mech),
        energy_ac_kwh,
        energy_ac_motoring_kwh: e_ac_mot / J_PER_KWH,
        energy_mech_kwh: e_mech / J_PER_KWH,
        energy_loss_motoring_kwh: e_loss_mot / J_PER_KWH,
        energy_regen_mech_kwh: e_regen_mech / J_PER_KWH,
        energy_regen_ac_kwh: e_regen_ac / J_PER_KWH,
        energy_per_100km: if distance_km > 0.0 { 100.0 * energy_ac_kwh / distance_km } else { f64::NAN },
        distance_km,
        mean_ratio: ratio_sum / used as f64,
        clamp_events: clamps,
        envelope_violations: violations,
        samples_used: used,
        samples_motoring: n_mot,
        samples_regen: n_regen,
    };
    Ok(CycleRun { report, trace })
}

pub fn average_efficiency(
    c: &LossCoefficients,
    limits: &MachineLimits,
    vehicle: &VehicleParams,
    cyc: &DriveCycle,
    policy: &RatioPolicy,
) -> Result<CycleReport> {
    simulate(c, limits, vehicle, cyc, policy).map(|r| r.report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyUsage {
    pub kwh_per_100km: f64,
    pub distance_km: f64,
}

pub fn energy_usage(report: &CycleReport) -> Result<EnergyUsage> {
    if !(report.distance_km > 0.0) {
        return Err(Error::EmptyInput("cycle covers no distance"));
    }
    Ok(EnergyUsage {
        kwh_per_100km: 100.0 * report.energy_ac_kwh / report.distance_km,
        distance_km: report.distance_km,
    })
}

/// Field-wise `cvt - fgt`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub d_eta_avg_motoring: f64,
    pub d_eta_avg_combined: f64,
    pub d_eta_energy_motoring: f64,
    pub d_eta_energy_combined: f64,
    pub d_energy_ac_kwh: f64,
    pub d_energy_mech_kwh: f64,
    pub d_energy_per_100km: f64,
    pub d_mean_ratio: f64,
    pub d_clamp_events: i64,
    pub margin: f64,
    pub margin_met: bool,
}

/// `margin` is on `eta_avg_combined`, as a fraction (0.026 for 2.6 points).
pub fn compare(fgt: &CycleReport, cvt: &CycleReport, margin: f64) -> Comparison {
    let d_eta = cvt.eta_avg_combined - fgt.eta_avg_combined;
    Comparison {
        d_eta_avg_motoring: cvt.eta_avg_motoring - fgt.eta_avg_motoring,
        d_eta_avg_combined: d_eta,
        d_eta_energy_motoring: cvt.eta_energy_motoring - fgt.eta_energy_motoring,
        d_eta_energy_combined: cvt.eta_energy_combined - fgt.eta_energy_combined,
        d_energy_ac_kwh: cvt.energy_ac_kwh - fgt.energy_ac_kwh,
        d_energy_mech_kwh: cvt.energy_mech_kwh - fgt.energy_mech_kwh,
        d_energy_per_100km: cvt.energy_per_100km - fgt.energy_per_100km,
        d_mean_ratio: cvt.mean_ratio - fgt.mean_ratio,
        d_clamp_events: cvt.clamp_events as i64 - fgt.clamp_events as i64,
        margin,
        margin_met: d_eta >= margin,
    }
}

pub fn write_trace(out: impl Write, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "v", "omega_t", "tau_t", "gamma", "omega_m", "tau_m", "eta_m", "p_ac"])?;
    let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
    for r in trace {
        w.write_record([
            r.t.to_string(),
            r.v.to_string(),
            r.omega_t.to_string(),
            r.tau_t.to_string(),
            opt(r.gamma),
            opt(r.omega_m),
            opt(r.tau_m),
            opt(r.eta_m),
            opt(r.p_ac),
        ])?;
    }
    w.flush().map_err(|e| Error::io("trace", e))?;
    Ok(())
}
