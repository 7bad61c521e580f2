//! Fitting the two-degree loss model from three OOL design points.
//!
//! The OOL triple `d` interpolates `tau*^2 = beta(omega*)` through the three
//! points; `c20` and `c11` then follow from the efficiencies at the two
//! points with positive power, via
//! `(1/eta - 1) omega = 2 c20 tau* + c11 omega`.

mod map;

use serde::Serialize;

pub use map::{load_map, reconstruct_map, save_map, EfficiencyMap, GridSpec};

use crate::linalg;
use crate::loss_model::{c_from_d, ool_efficiency, optimal_torque, LossCoefficients, OolCoefficients};
use crate::units::rad_s_to_rpm;
use crate::{Error, Result};

/// One `(tau*, omega*, eta*)` anchor on the optimal operation line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignPoint {
    pub tau_star: f64,
    pub omega_star: f64,
    pub eta_star: f64,
}

impl DesignPoint {
    pub fn origin() -> Self {
        Self {
            tau_star: 0.0,
            omega_star: 0.0,
            eta_star: 0.0,
        }
    }

    pub fn is_origin(&self) -> bool {
        self.tau_star == 0.0 && self.omega_star == 0.0
    }
}

impl Serialize for DesignPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            tau_nm: f64,
            omega_rad_s: f64,
            omega_rpm: f64,
            eta: f64,
        }
        Repr {
            tau_nm: self.tau_star,
            omega_rad_s: self.omega_star,
            omega_rpm: rad_s_to_rpm(self.omega_star),
            eta: self.eta_star,
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub d: OolCoefficients,
    pub c: LossCoefficients,
    pub design_points: [DesignPoint; 3],
    /// RMS OOL-efficiency error against the reference map.
    pub rmse: f64,
    /// Speed columns that entered the RMS.
    pub samples: usize,
}

impl Serialize for FitResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Coeffs {
            c00: f64,
            c01: f64,
            c02: f64,
            c11: f64,
            c20: f64,
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            d: [f64; 3],
            c: Coeffs,
            design_points: &'a [DesignPoint; 3],
            rmse: f64,
            samples: usize,
        }
        Repr {
            d: self.d.as_array(),
            c: Coeffs {
                c00: self.c.c00(),
                c01: self.c.c01(),
                c02: self.c.c02(),
                c11: self.c.c11(),
                c20: self.c.c20(),
            },
            design_points: &self.design_points,
            rmse: self.rmse,
            samples: self.samples,
        }
        .serialize(s)
    }
}

/// Interpolates `beta` through three design points.
///
/// An exact origin point pins `d00 = 0`; the remaining two points then
/// determine `d01, d02` directly.
pub fn solve_d(points: &[DesignPoint; 3]) -> Result<OolCoefficients> {
    for (k, p) in points.iter().enumerate() {
        if !(p.tau_star >= 0.0 && p.omega_star >= 0.0) {
            return Err(Error::param("design point", format!("point {} has negative torque or speed", k + 1)));
        }
    }
    let d = if let Some(k) = points.iter().position(DesignPoint::is_origin) {
        let rest: Vec<&DesignPoint> = points.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, p)| p).collect();
        let row = |p: &DesignPoint| [p.omega_star, p.omega_star * p.omega_star];
        let [d01, d02] = linalg::solve(
            [row(rest[0]), row(rest[1])],
            [rest[0].tau_star.powi(2), rest[1].tau_star.powi(2)],
        )?;
        [0.0, d01, d02]
    } else {
        let row = |p: &DesignPoint| [1.0, p.omega_star, p.omega_star * p.omega_star];
        linalg::solve(
            [row(&points[0]), row(&points[1]), row(&points[2])],
            [points[0].tau_star.powi(2), points[1].tau_star.powi(2), points[2].tau_star.powi(2)],
        )?
    };
    if d.iter().any(|v| *v < 0.0) {
        return Err(Error::InfeasibleDesignPoints(format!(
            "negative OOL coefficient in {d:?}; move the second point"
        )));
    }
    let d = OolCoefficients::new(d[0], d[1], d[2])?;
    if !d.has_real_roots() {
        return Err(Error::InfeasibleDesignPoints(
            "d01^2 - 4 d00 d02 <= 0; move the second point".into(),
        ));
    }
    Ok(d)
}

/// Solves for `(c20, c11)` from the efficiencies at two positive-power points.
/// The OOL torque at each point is taken from `d`, which keeps the fitted
/// model exact at both design speeds.
pub fn solve_c(d: &OolCoefficients, points: &[DesignPoint; 2]) -> Result<(f64, f64)> {
    let mut a = [[0.0; 2]; 2];
    let mut b = [0.0; 2];
    for (k, p) in points.iter().enumerate() {
        if !(p.tau_star * p.omega_star > 0.0) || !(p.eta_star > 0.0 && p.eta_star < 1.0) {
            return Err(Error::param(
                "design point",
                "efficiency points need positive power and 0 < eta < 1",
            ));
        }
        let tau = optimal_torque(d, p.omega_star)?;
        a[k] = [2.0 * tau, p.omega_star];
        b[k] = (1.0 / p.eta_star - 1.0) * p.omega_star;
    }
    let [c20, c11] = linalg::solve(a, b)?;
    if !(c20 > 0.0) || c11 < 0.0 {
        return Err(Error::InfeasibleDesignPoints(format!(
            "efficiencies give c20 = {c20}, c11 = {c11}"
        )));
    }
    Ok((c20, c11))
}

/// RMS difference between the model's OOL efficiency and the reference
/// map evaluated at the model's OOL torque, over speed columns where that
/// torque lands on valid cells. Returns `(rmse, samples)`.
pub fn ool_rmse(reference: &EfficiencyMap, c: &LossCoefficients, d: &OolCoefficients) -> Option<(f64, usize)> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..reference.n_speed() {
        let omega = reference.omega(i);
        if !(omega > 0.0) {
            continue;
        }
        let Ok(tau) = optimal_torque(d, omega) else { continue };
        if let Some(l) = reference.limits() {
            if tau > l.peak_torque(omega) {
                continue;
            }
        }
        let (Some(data), Ok(model)) = (reference.interpolate(i, tau), ool_efficiency(c, omega)) else {
            continue;
        };
        sum += (model - data).powi(2);
        n += 1;
    }
    (n > 0).then(|| ((sum / n as f64).sqrt(), n))
}

/// Design point at the efficiency maximum of `reference`, taken over
/// column maxima that are not pinned to the torque envelope (at high speed
/// the envelope can cut below the OOL, and such cells are not OOL points).
pub fn reference_peak_point(reference: &EfficiencyMap) -> Result<DesignPoint> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..reference.n_speed() {
        if let Some((j, e)) = reference.interior_column_argmax(i) {
            if best.is_none_or(|(_, _, b)| e > b) {
                best = Some((i, j, e));
            }
        }
    }
    let (i, j, eta) = best.ok_or(Error::NoFeasibleCandidate)?;
    Ok(DesignPoint {
        tau_star: reference.torque()[j],
        omega_star: reference.omega(i),
        eta_star: eta,
    })
}

/// Fits the full model from explicit design points; the RMS is measured
/// against `reference`.
pub fn fit_from_points(reference: Option<&EfficiencyMap>, points: [DesignPoint; 3]) -> Result<FitResult> {
    let d = solve_d(&points)?;
    let positive: Vec<DesignPoint> = points.iter().copied().filter(|p| p.tau_star * p.omega_star > 0.0).collect();
    let pair: [DesignPoint; 2] = positive
        .try_into()
        .map_err(|_| Error::InfeasibleDesignPoints("need exactly two positive-power design points".into()))?;
    let (c20, c11) = solve_c(&d, &pair)?;
    let c = c_from_d(&d, c20, c11)?;
    let (rmse, samples) = reference.and_then(|r| ool_rmse(r, &c, &d)).unwrap_or((0.0, 0));
    Ok(FitResult {
        d,
        c,
        design_points: points,
        rmse,
        samples,
    })
}

/// Every feasible second-point candidate on the reference speed grid, in
/// ascending speed order.
pub fn scan_second_point(
    reference: &EfficiencyMap,
    point1: DesignPoint,
    point3: DesignPoint,
) -> Result<Vec<FitResult>> {
    if !point1.is_origin() {
        return Err(Error::param("point1", "the first design point must be the origin"));
    }
    let mut out = Vec::new();
    for i in 0..reference.n_speed() {
        let omega = reference.omega(i);
        if !(omega > 0.0) || omega == point3.omega_star {
            continue;
        }
        let Some((j, eta)) = reference.interior_column_argmax(i) else { continue };
        let p2 = DesignPoint {
            tau_star: reference.torque()[j],
            omega_star: omega,
            eta_star: eta,
        };
        if !(p2.tau_star > 0.0 && eta > 0.0 && eta < 1.0) {
            continue;
        }
        let Ok(fit) = fit_from_points(Some(reference), [point1, p2, point3]) else { continue };
        if fit.samples > 0 {
            out.push(fit);
        }
    }
    Ok(out)
}

/// Chooses the second design point minimising the OOL RMS error. Ties go to
/// the lowest speed.
pub fn fit_second_point(reference: &EfficiencyMap, point1: DesignPoint, point3: DesignPoint) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    for fit in scan_second_point(reference, point1, point3)? {
        if best.as_ref().is_none_or(|b| fit.rmse < b.rmse) {
            best = Some(fit);
        }
    }
    best.ok_or(Error::NoFeasibleCandidate)
}
