//! Efficiency-optimal transmission ratio.
//!
//! Holding the wheel demand `(tau_t, omega_t)` fixed and asking the machine
//! to sit on its OOL gives `tau_t = tau*(omega_t g) g eta_t`, i.e. the quartic
//!
//! ```text
//! kappa - d00 g^2 - d01 omega_t g^3 - d02 omega_t^2 g^4 = 0,  kappa = (tau_t / eta_t)^2
//! ```
//!
//! solved here in closed form ([`optimal_ratio_closed_form`]) and by a
//! bracketed root finder ([`optimal_ratio_numeric`]).

mod closed_form;
mod numeric;

use serde::Serialize;

use crate::cycle_analysis::{average_efficiency, RatioPolicy};
use crate::loss_model::{d_from_c, flow_efficiency, LossCoefficients, MachineLimits, OolCoefficients};
use crate::units::{kmh_to_m_s, m_s_to_kmh};
use crate::vehicle::{cycle_to_wheel, road_load_stationary, wheel_to_machine, DriveCycle, VehicleParams, WheelDemand};
use crate::{Error, Result};

use closed_form::QuarticInput;

pub use closed_form::{IMAG_TOL, RESIDUAL_TOL};

/// Probe step for [`verify_ratio_optimality`].
pub const OPTIMALITY_PROBE: f64 = 0.01;

/// Wheel demand plus the OOL it should be mapped onto.
///
/// Negative `tau_t` is a braking demand; the transmission efficiency then
/// acts the other way round, so `kappa = (|tau_t| eta_t)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioQuery {
    pub tau_t: f64,
    pub omega_t: f64,
    pub eta_t: f64,
    pub d: OolCoefficients,
}

impl RatioQuery {
    pub fn new(tau_t: f64, omega_t: f64, eta_t: f64, d: OolCoefficients) -> Result<Self> {
        let q = Self { tau_t, omega_t, eta_t, d };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_t != 0.0 && self.tau_t.is_finite()) {
            return Err(Error::param("tau_t", format!("need non-zero finite wheel torque, got {}", self.tau_t)));
        }
        if !(self.omega_t > 0.0 && self.omega_t.is_finite()) {
            return Err(Error::param("omega_t", format!("need positive wheel speed, got {}", self.omega_t)));
        }
        if !(self.eta_t > 0.0 && self.eta_t <= 1.0) {
            return Err(Error::param("eta_t", format!("need 0 < eta_t <= 1, got {}", self.eta_t)));
        }
        Ok(())
    }

    /// Wheel torque referred through the transmission losses, `sqrt(kappa)`.
    pub fn machine_side_torque(&self) -> f64 {
        if self.tau_t > 0.0 {
            self.tau_t / self.eta_t
        } else {
            -self.tau_t * self.eta_t
        }
    }

    pub fn kappa(&self) -> f64 {
        self.machine_side_torque().powi(2)
    }

    pub fn demand(&self) -> WheelDemand {
        WheelDemand {
            omega_t: self.omega_t,
            tau_t: self.tau_t,
        }
    }

    fn input(&self) -> QuarticInput {
        QuarticInput {
            kappa_sqrt: self.machine_side_torque(),
            omega_t: self.omega_t,
            d00: self.d.d00,
            d01: self.d.d01,
            d02: self.d.d02,
        }
    }
}

/// Relative residual `|kappa - d00 g^2 - ...| / max(kappa, sum of terms)`.
pub fn quartic_residual(q: &RatioQuery, gamma: f64) -> f64 {
    closed_form::relative_residual(&q.input(), gamma)
}

/// Root from the radical expression, principal branches throughout,
/// evaluated in extended precision.
///
/// Fails with [`Error::ClosedFormDegenerate`] when the expression is
/// singular (`d02 = 0`, a vanishing sigma term) or its value does not
/// validate as a real positive root of the quartic.
pub fn optimal_ratio_closed_form(q: &RatioQuery) -> Result<f64> {
    q.validate()?;
    closed_form::solve(&q.input())
}

pub fn optimal_ratio_numeric(q: &RatioQuery) -> Result<f64> {
    q.validate()?;
    numeric::solve(&q.input())
}

/// Closed form, falling back to the numeric root when it degenerates.
pub fn optimal_ratio(q: &RatioQuery) -> Result<f64> {
    match optimal_ratio_closed_form(q) {
        Ok(g) => Ok(g),
        Err(Error::ClosedFormDegenerate(_)) => optimal_ratio_numeric(q),
        Err(e) => Err(e),
    }
}

/// True when the machine efficiency at `gamma` is at least that at
/// `gamma (1 +- 1 %)` for the same wheel demand.
///
/// When `limits` is given, a probe leaving the envelope is reported as
/// [`Error::EnvelopeViolation`] rather than compared.
pub fn verify_ratio_optimality(
    q: &RatioQuery,
    gamma: f64,
    c: &LossCoefficients,
    limits: Option<&MachineLimits>,
) -> Result<bool> {
    q.validate()?;
    let mut eta = [0.0; 3];
    for (slot, g) in eta
        .iter_mut()
        .zip([gamma, gamma * (1.0 - OPTIMALITY_PROBE), gamma * (1.0 + OPTIMALITY_PROBE)])
    {
        let p = wheel_to_machine(q.demand(), g, q.eta_t)?;
        if let Some(v) = limits.and_then(|l| l.check(p)) {
            return Err(Error::EnvelopeViolation(format!(
                "{v:?} at ratio {g} (tau_m = {}, omega_m = {})",
                p.tau, p.omega
            )));
        }
        *slot = flow_efficiency(c, p)?;
    }
    Ok(eta[0] >= eta[1] && eta[0] >= eta[2])
}

/// Extremes of the stationary optimal ratio over a speed range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioBounds {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// m/s
    pub v_at_min: f64,
    /// m/s
    pub v_at_max: f64,
}

/// Stationary optimal ratio on the 1 km/h grid of `[v_lo_kmh, v_hi_kmh]`,
/// standstill excluded. Returns `(v in m/s, gamma*)` pairs.
pub fn stationary_ratio_profile(
    d: &OolCoefficients,
    vehicle: &VehicleParams,
    v_lo_kmh: f64,
    v_hi_kmh: f64,
) -> Result<Vec<(f64, f64)>> {
    vehicle.validate()?;
    if !(v_lo_kmh >= 0.0 && v_hi_kmh >= v_lo_kmh && v_hi_kmh.is_finite()) {
        return Err(Error::param("v_range", format!("need 0 <= {v_lo_kmh} <= {v_hi_kmh}")));
    }
    let first = v_lo_kmh.ceil().max(1.0) as u64;
    let last = v_hi_kmh.floor() as u64;
    if first > last {
        return Err(Error::EmptyInput("speed range contains no positive 1 km/h grid point"));
    }
    (first..=last)
        .map(|kmh| {
            let v = kmh_to_m_s(kmh as f64);
            let w = road_load_stationary(vehicle, v);
            let g = optimal_ratio(&RatioQuery::new(w.tau_t, w.omega_t, vehicle.eta_t, *d)?)?;
            Ok((v, g))
        })
        .collect()
}

/// Range a CVT must cover for stationary driving over `[v_lo_kmh, v_hi_kmh]`.
///
/// The stationary optimum diverges as the vehicle crawls (road load tends
/// to a constant torque at vanishing speed), so the upper bound is taken
/// over speeds at or above the one attaining the minimum.
pub fn cvt_bounds(d: &OolCoefficients, vehicle: &VehicleParams, v_lo_kmh: f64, v_hi_kmh: f64) -> Result<RatioBounds> {
    let profile = stationary_ratio_profile(d, vehicle, v_lo_kmh, v_hi_kmh)?;
    let (i_min, &(v_at_min, gamma_min)) = profile
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("profile is non-empty");
    let &(v_at_max, gamma_max) = profile[i_min..]
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("slice contains the minimum");
    Ok(RatioBounds {
        gamma_min,
        gamma_max,
        v_at_min,
        v_at_max,
    })
}

impl RatioBounds {
    pub fn v_at_min_kmh(&self) -> f64 {
        m_s_to_kmh(self.v_at_min)
    }

    pub fn v_at_max_kmh(&self) -> f64 {
        m_s_to_kmh(self.v_at_max)
    }
}

/// `lo, lo + step, ...` up to `hi` (inclusive within half a step).
pub fn ratio_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && step > 0.0 && hi.is_finite()) {
        return Err(Error::param("gamma_grid", format!("need 0 < {lo} <= {hi} and step {step} > 0")));
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub gamma_grid: Vec<f64>,
    /// `None` where the ratio over-speeds the machine at cycle top speed.
    pub eta_avg_fgt: Vec<Option<f64>>,
    pub eta_avg_cvt: f64,
    pub gamma_fgt_opt: f64,
    pub eta_fgt_opt: f64,
    pub cvt_mean_ratio: f64,
    pub cvt_clamp_events: usize,
}

/// Average machine efficiency for each fixed ratio of `gamma_grid`, plus
/// the CVT reference run.
pub fn fgt_sweep(
    c: &LossCoefficients,
    limits: &MachineLimits,
    vehicle: &VehicleParams,
    cyc: &DriveCycle,
    gamma_grid: &[f64],
) -> Result<SweepResult> {
    if gamma_grid.is_empty() {
        return Err(Error::EmptyInput("ratio grid is empty"));
    }
    let omega_t_top = cyc.max_speed() / vehicle.rw;
    let eta_avg_fgt = gamma_grid
        .iter()
        .map(|&g| {
            if g * omega_t_top > limits.omega_max {
                return Ok(None);
            }
            average_efficiency(c, limits, vehicle, cyc, &RatioPolicy::Fixed(g)).map(|r| Some(r.eta_avg_combined))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best, eta_fgt_opt) = eta_avg_fgt
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|e| (i, e)))
        .fold(None, |acc: Option<(usize, f64)>, (i, e)| match acc {
            Some((_, b)) if b >= e => acc,
            _ => Some((i, e)),
        })
        .ok_or_else(|| Error::EnvelopeViolation("every ratio in the grid over-speeds the machine".into()))?;
    let cvt = average_efficiency(
        c,
        limits,
        vehicle,
        cyc,
        &RatioPolicy::Cvt {
            ool: d_from_c(c)?,
            range: None,
        },
    )?;
    Ok(SweepResult {
        gamma_grid: gamma_grid.to_vec(),
        eta_avg_fgt,
        eta_avg_cvt: cvt.eta_avg_combined,
        gamma_fgt_opt: gamma_grid[best],
        eta_fgt_opt,
        cvt_mean_ratio: cvt.mean_ratio,
        cvt_clamp_events: cvt.clamp_events,
    })
}

/// Unclamped optimal ratio for every traction sample of the cycle.
pub fn cycle_optimal_ratios(d: &OolCoefficients, vehicle: &VehicleParams, cyc: &DriveCycle) -> Result<Vec<f64>> {
    cycle_to_wheel(vehicle, cyc)
        .into_iter()
        .filter(|w| w.tau_t > 0.0 && w.omega_t > 0.0)
        .map(|w| optimal_ratio(&RatioQuery::new(w.tau_t, w.omega_t, vehicle.eta_t, *d)?))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioHistogram {
    pub bins: Vec<HistogramBin>,
    pub threshold: f64,
    pub fraction_below: f64,
    pub samples: usize,
}

/// Bins of width `bin_width` aligned to multiples of it, covering every
/// sample, and the share of samples strictly below `threshold`.
pub fn ratio_histogram(ratios: &[f64], bin_width: f64, threshold: f64) -> Result<RatioHistogram> {
    if ratios.is_empty() {
        return Err(Error::EmptyInput("no traction samples to bin"));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::param("bin_width", format!("must be positive, got {bin_width}")));
    }
    if let Some(bad) = ratios.iter().find(|r| !r.is_finite()) {
        return Err(Error::param("ratio", format!("non-finite sample {bad}")));
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k0 = (lo / bin_width).floor() as i64;
    let k1 = (hi / bin_width).floor() as i64;
    let mut bins: Vec<HistogramBin> = (k0..=k1)
        .map(|k| HistogramBin {
            bin_lo: k as f64 * bin_width,
            bin_hi: (k + 1) as f64 * bin_width,
            count: 0,
        })
        .collect();
    for &r in ratios {
        let k = ((r / bin_width).floor() as i64).clamp(k0, k1);
        bins[(k - k0) as usize].count += 1;
    }
    let below = ratios.iter().filter(|&&r| r < threshold).count();
    Ok(RatioHistogram {
        bins,
        threshold,
        fraction_below: below as f64 / ratios.len() as f64,
        samples: ratios.len(),
    })
}
