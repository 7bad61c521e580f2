//! Longitudinal vehicle model and drive-cycle handling.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::loss_model::MachinePoint;
use crate::units::kmh_to_m_s;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Empty vehicle mass, kg.
    pub m0: f64,
    /// Payload, kg.
    pub mp: f64,
    /// Frontal area, m^2.
    pub frontal_area: f64,
    pub cd: f64,
    /// Rolling resistance coefficient as a fraction (1.74 % -> 0.0174).
    pub cr: f64,
    /// Wheel radius, m.
    pub rw: f64,
    /// Transmission efficiency.
    pub eta_t: f64,
    /// Rotating-mass factor applied to the inertial force.
    pub lambda: f64,
    /// Fraction of braking torque recuperated by the machine.
    pub kappa_r: f64,
    /// Production fixed-gear ratio.
    pub gamma_fgt: f64,
    pub rho_air: f64,
    pub g: f64,
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m0", self.m0),
            ("mp", self.mp),
            ("frontal_area", self.frontal_area),
            ("cd", self.cd),
            ("cr", self.cr),
            ("rw", self.rw),
            ("eta_t", self.eta_t),
            ("lambda", self.lambda),
            ("kappa_r", self.kappa_r),
            ("gamma_fgt", self.gamma_fgt),
            ("rho_air", self.rho_air),
            ("g", self.g),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if self.eta_t > 1.0 {
            return Err(Error::param("eta_t", "must be in (0, 1]"));
        }
        if self.kappa_r > 1.0 {
            return Err(Error::param("kappa_r", "must be in (0, 1]"));
        }
        if self.cr >= 0.1 {
            return Err(Error::param("cr", "must be a fraction below 0.1"));
        }
        if self.lambda < 1.0 {
            return Err(Error::param("lambda", "must be >= 1"));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.m0 + self.mp
    }

    /// Rolling resistance plus aerodynamic drag, N.
    pub fn road_load_force(&self, v: f64) -> f64 {
        self.mass() * self.g * self.cr + 0.5 * self.rho_air * self.cd * self.frontal_area * v * v
    }
}

/// Wheel-side torque/speed demand. Negative torque is braking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WheelDemand {
    pub omega_t: f64,
    pub tau_t: f64,
}

impl WheelDemand {
    pub fn power(&self) -> f64 {
        self.omega_t * self.tau_t
    }
}

/// Uniformly sampled speed trace (s, m/s).
#[derive(Clone, Debug, PartialEq)]
pub struct DriveCycle {
    pub name: String,
    t: Vec<f64>,
    v: Vec<f64>,
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::parse("drive cycle", "time and speed lengths differ"));
        }
        if t.is_empty() {
            return Err(Error::EmptyInput("drive cycle has no samples"));
        }
        if let Some(bad) = v.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::parse("drive cycle", format!("speed {bad} is not a finite value >= 0")));
        }
        if t.len() > 1 {
            let dt = t[1] - t[0];
            if !(dt > 0.0) {
                return Err(Error::parse("drive cycle", "time must be strictly increasing"));
            }
            for w in t.windows(2) {
                if ((w[1] - w[0]) - dt).abs() > 1e-9 {
                    return Err(Error::parse(
                        "drive cycle",
                        format!("non-uniform time step at t = {}", w[1]),
                    ));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            t,
            v,
        })
    }

    /// Constant-speed cycle of `n` samples at 1 Hz.
    pub fn constant(v: f64, n: usize) -> Result<Self> {
        Self::new("constant", (0..n).map(|i| i as f64).collect(), vec![v; n])
    }

    /// Reads a `t_s,v_kmh` CSV (lines starting with `#` are comments).
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read_csv(name, file)
    }

    pub fn read_csv(name: impl Into<String>, reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::parse("drive cycle", format!("missing column `{name}`")))
        };
        let (it, iv) = (col("t_s")?, col("v_kmh")?);
        let (mut t, mut v) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::parse("drive cycle", format!("bad number on data row {}", line + 1)))
            };
            t.push(num(it)?);
            v.push(kmh_to_m_s(num(iv)?));
        }
        Self::new(name, t, v)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn time(&self) -> &[f64] {
        &self.t
    }

    pub fn speed(&self) -> &[f64] {
        &self.v
    }

    pub fn dt(&self) -> f64 {
        if self.t.len() > 1 {
            self.t[1] - self.t[0]
        } else {
            1.0
        }
    }

    /// Backward-difference acceleration; the first sample is 0.
    pub fn acceleration(&self) -> Vec<f64> {
        let dt = self.dt();
        std::iter::once(0.0)
            .chain(self.v.windows(2).map(|w| (w[1] - w[0]) / dt))
            .collect()
    }

    /// Distance by trapezoidal integration, m.
    pub fn distance(&self) -> f64 {
        let dt = self.dt();
        self.v.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.v.iter().copied().fold(0.0, f64::max)
    }
}

/// Steady-state wheel demand at speed `v` (m/s) on a flat road.
pub fn road_load_stationary(p: &VehicleParams, v: f64) -> WheelDemand {
    WheelDemand {
        omega_t: v / p.rw,
        tau_t: p.road_load_force(v) * p.rw,
    }
}

/// Machine-side wheel demand for every cycle sample.
///
/// Braking torque is scaled by `kappa_r`; the remainder goes to the friction
/// brakes and never reaches the machine.
pub fn cycle_to_wheel(p: &VehicleParams, cyc: &DriveCycle) -> Vec<WheelDemand> {
    cyc.speed()
        .iter()
        .zip(cyc.acceleration())
        .map(|(&v, a)| {
            let force = p.road_load_force(v) + p.lambda * p.mass() * a;
            let tau = force * p.rw;
            WheelDemand {
                omega_t: v / p.rw,
                tau_t: if tau < 0.0 { tau * p.kappa_r } else { tau },
            }
        })
        .collect()
}

/// Machine point behind a transmission of ratio `gamma` and efficiency `eta_t`.
///
/// Transmission losses are charged against the power flow: motoring divides
/// by `eta_t`, regeneration multiplies.
pub fn wheel_to_machine(d: WheelDemand, gamma: f64, eta_t: f64) -> Result<MachinePoint> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("ratio must be positive, got {gamma}")));
    }
    let tau = if d.tau_t >= 0.0 {
        d.tau_t / (gamma * eta_t)
    } else {
        d.tau_t * eta_t / gamma
    };
    MachinePoint::new(tau, d.omega_t * gamma)
}
