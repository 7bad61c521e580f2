//! Polynomial machine loss model and the optimal operation line (OOL).
//!
//! Losses are `P_loss(tau, omega) = sum c_mn |tau|^m omega^n` for `m, n <= 2`,
//! which regroups as `alpha1(omega) + alpha2(omega) |tau| + alpha3(omega) tau^2`.
//! The OOL is the torque maximising efficiency at each speed,
//! `tau*(omega) = sqrt(alpha1 / alpha3)`. For the modified two-degree
//! variant (`c00, c01, c02, c11, c20` active) this reduces to
//! `tau*(omega) = sqrt(beta(omega))` with `beta = d00 + d01 omega + d02 omega^2`
//! and `d0j = c0j / c20`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which coefficients of the 3x3 `c_mn` matrix may be nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Only `c00, c01, c02, c11, c20`. All closed-form OOL results
    /// (`beta`, the speed-for-efficiency inversion, the ratio quartic) assume this.
    ModifiedTwoDegree,
    /// All nine coefficients.
    Full,
}

impl ModelVariant {
    fn allows(self, m: usize, n: usize) -> bool {
        match self {
            ModelVariant::Full => true,
            ModelVariant::ModifiedTwoDegree => {
                matches!((m, n), (0, 0) | (0, 1) | (0, 2) | (1, 1) | (2, 0))
            }
        }
    }
}

/// Non-negative loss coefficients `c[m][n]` multiplying `|tau|^m omega^n`
/// (torque in Nm, speed in rad/s, loss in W).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCoefficients {
    c: [[f64; 3]; 3],
    variant: ModelVariant,
}

const NAMES: [[&str; 3]; 3] = [["c00", "c01", "c02"], ["c10", "c11", "c12"], ["c20", "c21", "c22"]];

impl LossCoefficients {
    pub fn new(c: [[f64; 3]; 3], variant: ModelVariant) -> Result<Self> {
        for (m, row) in c.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                let name = NAMES[m][n];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidCoefficient {
                        name,
                        reason: format!("must be finite and non-negative, got {v}"),
                    });
                }
                if v != 0.0 && !variant.allows(m, n) {
                    return Err(Error::InvalidCoefficient {
                        name,
                        reason: format!("not in the active set of {variant:?}"),
                    });
                }
            }
        }
        Ok(Self { c, variant })
    }

    /// Modified two-degree model.
    pub fn two_degree(c00: f64, c01: f64, c02: f64, c11: f64, c20: f64) -> Result<Self> {
        Self::new(
            [[c00, c01, c02], [0.0, c11, 0.0], [c20, 0.0, 0.0]],
            ModelVariant::ModifiedTwoDegree,
        )
    }

    pub fn zero() -> Self {
        Self {
            c: [[0.0; 3]; 3],
            variant: ModelVariant::ModifiedTwoDegree,
        }
    }

    /// Coefficient of `|tau|^m omega^n`.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.c[m][n]
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn c00(&self) -> f64 {
        self.c[0][0]
    }
    pub fn c01(&self) -> f64 {
        self.c[0][1]
    }
    pub fn c02(&self) -> f64 {
        self.c[0][2]
    }
    pub fn c11(&self) -> f64 {
        self.c[1][1]
    }
    pub fn c20(&self) -> f64 {
        self.c[2][0]
    }

    fn require_two_degree(&self) -> Result<()> {
        match self.variant {
            ModelVariant::ModifiedTwoDegree => Ok(()),
            v => Err(Error::InvalidCoefficient {
                name: "variant",
                reason: format!("closed form requires the modified two-degree model, got {v:?}"),
            }),
        }
    }
}

/// Reduced OOL coefficients of `beta(omega) = d00 + d01 omega + d02 omega^2`
/// (Nm^2, Nm^2 s/rad, Nm^2 s^2/rad^2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OolCoefficients {
    pub d00: f64,
    pub d01: f64,
    pub d02: f64,
}

impl OolCoefficients {
    pub fn new(d00: f64, d01: f64, d02: f64) -> Result<Self> {
        for (name, v) in [("d00", d00), ("d01", d01), ("d02", d02)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidCoefficient {
                    name,
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(Self { d00, d01, d02 })
    }

    /// `d01^2 - 4 d00 d02 > 0`, the fit feasibility condition on the OOL.
    pub fn has_real_roots(&self) -> bool {
        self.d01 * self.d01 - 4.0 * self.d00 * self.d02 > 0.0
    }

    pub fn beta(&self, omega: f64) -> f64 {
        self.d00 + omega * (self.d01 + omega * self.d02)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.d00, self.d01, self.d02]
    }
}

/// Rated and peak machine limits in SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineLimits {
    pub tau_cont_max: f64,
    pub tau_peak_max: f64,
    pub omega_rated: f64,
    pub omega_max: f64,
    pub p_cont_max: f64,
    pub p_peak_max: f64,
}

/// Why a point left the machine envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeViolation {
    OverSpeed,
    OverTorque,
}

impl MachineLimits {
    pub fn new(
        tau_cont_max: f64,
        tau_peak_max: f64,
        omega_rated: f64,
        omega_max: f64,
        p_cont_max: f64,
        p_peak_max: f64,
    ) -> Result<Self> {
        let ordered = |name: &'static str, lo: f64, hi: f64| {
            if lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi {
                Ok(())
            } else {
                Err(Error::param(name, format!("need 0 < {lo} <= {hi}")))
            }
        };
        ordered("torque limits", tau_cont_max, tau_peak_max)?;
        ordered("speed limits", omega_rated, omega_max)?;
        ordered("power limits", p_cont_max, p_peak_max)?;
        Ok(Self {
            tau_cont_max,
            tau_peak_max,
            omega_rated,
            omega_max,
            p_cont_max,
            p_peak_max,
        })
    }

    /// Peak torque available at `omega`: constant up to rated speed, then
    /// additionally power limited.
    pub fn peak_torque(&self, omega: f64) -> f64 {
        if omega <= self.omega_rated {
            self.tau_peak_max
        } else {
            self.tau_peak_max.min(self.p_peak_max / omega)
        }
    }

    pub fn continuous_torque(&self, omega: f64) -> f64 {
        if omega <= self.omega_rated {
            self.tau_cont_max
        } else {
            self.tau_cont_max.min(self.p_cont_max / omega)
        }
    }

    /// Checks `p` against the peak envelope. A relative slack of `1e-12`
    /// absorbs round-off for points placed exactly on the boundary.
    pub fn check(&self, p: MachinePoint) -> Option<EnvelopeViolation> {
        const SLACK: f64 = 1.0 + 1e-12;
        if p.omega > self.omega_max * SLACK {
            Some(EnvelopeViolation::OverSpeed)
        } else if p.tau.abs() > self.peak_torque(p.omega) * SLACK {
            Some(EnvelopeViolation::OverTorque)
        } else {
            None
        }
    }
}

/// Shaft operating point; negative torque means generating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MachinePoint {
    pub tau: f64,
    pub omega: f64,
}

impl MachinePoint {
    pub fn new(tau: f64, omega: f64) -> Result<Self> {
        if !(omega >= 0.0) || !tau.is_finite() || !omega.is_finite() {
            return Err(Error::param("omega", format!("need finite omega >= 0, got {omega}")));
        }
        Ok(Self { tau, omega })
    }

    pub fn mechanical_power(&self) -> f64 {
        self.tau * self.omega
    }
}

/// Speed-dependent coefficients of the loss quadratic in torque.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaTerms {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

pub fn alpha_terms(c: &LossCoefficients, omega: f64) -> AlphaTerms {
    let poly = |row: &[f64; 3]| row[0] + omega * (row[1] + omega * row[2]);
    AlphaTerms {
        alpha1: poly(&c.c[0]),
        alpha2: poly(&c.c[1]),
        alpha3: poly(&c.c[2]),
    }
}

/// Machine losses in W. The map is symmetric in torque, so `|tau|` is used.
pub fn loss_power(c: &LossCoefficients, p: MachinePoint) -> f64 {
    let a = alpha_terms(c, p.omega);
    let t = p.tau.abs();
    a.alpha1 + t * (a.alpha2 + t * a.alpha3)
}

/// Motoring efficiency `tau omega / (tau omega + P_loss)`, using `|tau|`.
///
/// Zero mechanical power is an error here; cycle averaging skips such samples.
pub fn efficiency(c: &LossCoefficients, p: MachinePoint) -> Result<f64> {
    let pm = p.mechanical_power().abs();
    if pm == 0.0 {
        return Err(Error::UndefinedOperatingPoint {
            tau: p.tau,
            omega: p.omega,
        });
    }
    Ok(pm / (pm + loss_power(c, p)))
}

/// Efficiency in the direction of power flow: motoring as [`efficiency`],
/// generating (`tau < 0`) as `max(0, (P - P_loss) / P)`.
pub fn flow_efficiency(c: &LossCoefficients, p: MachinePoint) -> Result<f64> {
    if p.tau >= 0.0 {
        return efficiency(c, p);
    }
    let pm = p.mechanical_power().abs();
    if pm == 0.0 {
        return Err(Error::UndefinedOperatingPoint {
            tau: p.tau,
            omega: p.omega,
        });
    }
    Ok(((pm - loss_power(c, p)) / pm).max(0.0))
}

/// `tau*(omega) = sqrt(beta(omega))`.
pub fn optimal_torque(d: &OolCoefficients, omega: f64) -> Result<f64> {
    let beta = d.beta(omega);
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::NegativeBeta { omega, beta });
    }
    Ok(beta.sqrt())
}

/// OOL torque from the loss coefficients directly, `sqrt(alpha1 / alpha3)`.
/// Agrees with [`optimal_torque`] on `d_from_c(c)` for the two-degree model.
pub fn ool_torque(c: &LossCoefficients, omega: f64) -> Result<f64> {
    let a = alpha_terms(c, omega);
    if !(a.alpha3 > 0.0) {
        return Err(Error::InvalidCoefficient {
            name: "alpha3",
            reason: format!("must be positive at omega = {omega}"),
        });
    }
    Ok((a.alpha1 / a.alpha3).sqrt())
}

/// Efficiency along the OOL, `omega / (omega + 2 alpha3 tau* + alpha2)`.
pub fn ool_efficiency(c: &LossCoefficients, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::param("omega", format!("OOL efficiency needs omega > 0, got {omega}")));
    }
    let tau = ool_torque(c, omega)?;
    let a = alpha_terms(c, omega);
    Ok(omega / (omega + 2.0 * a.alpha3 * tau + a.alpha2))
}

/// Speed at which the OOL efficiency equals `eta` (closed-form inverse of
/// [`ool_efficiency`] for the two-degree model).
///
/// The full radicand is evaluated even when `d00 = 0` makes it a perfect
/// square; the positive root is taken.
pub fn ool_speed_for_efficiency(c: &LossCoefficients, eta: f64) -> Result<f64> {
    c.require_two_degree()?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("need 0 < eta < 1, got {eta}")));
    }
    let d = d_from_c(c)?;
    let (c11, c20) = (c.c11(), c.c20());
    let (d00, d01, d02) = (d.d00, d.d01, d.d02);
    let e = eta;
    let e2 = e * e;
    let radicand = d00 * c11 * c11 * e2 + 2.0 * d00 * c11 * e2 - 2.0 * d00 * c11 * e
        + c20 * c20 * d01 * d01 * e2
        - 4.0 * d00 * d02 * c20 * c20 * e2
        + d00 * e2
        - 2.0 * d00 * e
        + d00;
    let den = c11 * c11 * e2 + 2.0 * c11 * e2 - 2.0 * c11 * e - 4.0 * d02 * c20 * c20 * e2 + e2
        - 2.0 * e
        + 1.0;
    if radicand < 0.0 || !(den > 0.0) {
        return Err(Error::NumericValidation(format!(
            "efficiency {eta} is not attained on the OOL (radicand {radicand}, denominator {den})"
        )));
    }
    let omega = 2.0 * c20 * e * (radicand.sqrt() + c20 * d01 * e) / den;
    // Squaring to reach the closed form admits roots of the mirrored
    // equation; keep only a genuine preimage.
    if !(omega > 0.0) || (ool_efficiency(c, omega)? - eta).abs() > 1e-9 {
        return Err(Error::NumericValidation(format!("efficiency {eta} is not attained on the OOL")));
    }
    Ok(omega)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakEfficiency {
    pub omega: f64,
    pub eta: f64,
}

/// Speed of maximum OOL efficiency on `(0, omega_max]`, by golden-section search.
///
/// Returns [`Error::NoInteriorMaximum`] when the maximiser sits on the upper
/// (or lower) end of the interval. For two-degree models the result is
/// cross-checked against [`ool_speed_for_efficiency`].
pub fn peak_efficiency_point(c: &LossCoefficients, omega_max: f64) -> Result<PeakEfficiency> {
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::param("omega_max", "must be positive"));
    }
    let f = |w: f64| ool_efficiency(c, w);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let lo0 = omega_max * 1e-9;
    let (mut a, mut b) = (lo0, omega_max);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > 1e-12 * omega_max {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    let omega = 0.5 * (a + b);
    if omega >= omega_max * (1.0 - 1e-6) || omega <= lo0 * (1.0 + 1e-3) {
        return Err(Error::NoInteriorMaximum { omega_max });
    }
    let eta = f(omega)?;
    if c.variant() == ModelVariant::ModifiedTwoDegree {
        let back = ool_speed_for_efficiency(c, eta)?;
        if ((back - omega) / omega).abs() > 1e-6 {
            return Err(Error::NumericValidation(format!(
                "speed-for-efficiency inversion gives {back}, search gives {omega}"
            )));
        }
    }
    Ok(PeakEfficiency { omega, eta })
}

/// Two-degree coefficients from the OOL triple and the two efficiency-fit
/// coefficients: `c0j = d0j c20`.
pub fn c_from_d(d: &OolCoefficients, c20: f64, c11: f64) -> Result<LossCoefficients> {
    if !(c20 > 0.0) {
        return Err(Error::InvalidCoefficient {
            name: "c20",
            reason: format!("must be positive, got {c20}"),
        });
    }
    LossCoefficients::two_degree(d.d00 * c20, d.d01 * c20, d.d02 * c20, c11, c20)
}

/// `d0j = c0j / c20`.
pub fn d_from_c(c: &LossCoefficients) -> Result<OolCoefficients> {
    c.require_two_degree()?;
    let c20 = c.c20();
    if !(c20 > 0.0) {
        return Err(Error::InvalidCoefficient {
            name: "c20",
            reason: format!("must be positive, got {c20}"),
        });
    }
    OolCoefficients::new(c.c00() / c20, c.c01() / c20, c.c02() / c20)
}
