//! JSON run configuration. Field names carry their units; everything is
//! converted to SI once, in the accessors on [`RunConfig`]. Missing sections fall back
//! to the i3 presets.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::loss_model::{LossCoefficients, MachineLimits};
use crate::map_fit::{DesignPoint, GridSpec};
use crate::presets;
use crate::units::{rad_s_to_rpm, rpm_to_rad_s};
use crate::vehicle::VehicleParams;
use crate::{Error, Result};

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub machine: MachineConfig,
    pub limits: Option<LimitsConfig>,
    pub vehicle: Option<VehicleConfig>,
    pub cycle: Option<PathBuf>,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub ratio: RatioConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineConfig {
    pub coefficients: Option<CoefficientsConfig>,
    pub design_points: Option<[PointConfig; 3]>,
    pub reference_map: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub c00: f64,
    pub c01: f64,
    pub c02: f64,
    pub c11: f64,
    pub c20: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub tau_nm: f64,
    pub omega_rpm: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub tau_cont_nm: f64,
    pub tau_peak_nm: f64,
    pub omega_rated_rpm: f64,
    pub omega_max_rpm: f64,
    pub p_cont_kw: f64,
    pub p_peak_kw: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub m0_kg: f64,
    pub mp_kg: f64,
    pub frontal_area_m2: f64,
    pub cd: f64,
    /// Rolling resistance in percent, as usually tabulated.
    pub cr_percent: f64,
    pub rw_m: f64,
    pub eta_t: f64,
    pub lambda: f64,
    pub kappa_r: f64,
    pub gamma_fgt: f64,
    pub rho_air_kg_m3: f64,
    pub g_m_s2: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub speed_max_rpm: Option<f64>,
    pub speed_step_rpm: f64,
    pub torque_max_nm: Option<f64>,
    pub torque_step_nm: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            speed_max_rpm: None,
            speed_step_rpm: 100.0,
            torque_max_nm: None,
            torque_step_nm: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    pub hist_bin_width: f64,
    pub hist_threshold: f64,
    pub bounds_v_max_kmh: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma_min: 2.0,
            gamma_max: 12.0,
            gamma_step: 0.05,
            hist_bin_width: 0.5,
            hist_threshold: 6.0,
            bounds_v_max_kmh: 155.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioConfig {
    pub tau_t_nm: Option<f64>,
    pub omega_t_rad_s: Option<f64>,
    /// Stationary road-load demand at this speed instead of explicit values.
    pub v_kmh: Option<f64>,
}

/// How the machine model is to be obtained.
#[derive(Clone, Debug)]
pub enum MachineSource {
    Coefficients(LossCoefficients),
    Points {
        points: [DesignPoint; 3],
        reference: Option<PathBuf>,
    },
    ReferenceMap(PathBuf),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.cycle.as_mut().map(rebase);
        cfg.machine.reference_map.as_mut().map(rebase);
        Ok(cfg)
    }

    pub fn machine_source(&self) -> Result<MachineSource> {
        let m = &self.machine;
        match (m.coefficients, m.design_points, &m.reference_map) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::param(
                "machine",
                "give either coefficients or design points / reference map, not both",
            )),
            (Some(c), None, None) => Ok(MachineSource::Coefficients(LossCoefficients::two_degree(
                c.c00, c.c01, c.c02, c.c11, c.c20,
            )?)),
            (None, Some(p), reference) => Ok(MachineSource::Points {
                points: p.map(|p| DesignPoint {
                    tau_star: p.tau_nm,
                    omega_star: rpm_to_rad_s(p.omega_rpm),
                    eta_star: p.eta,
                }),
                reference: reference.clone(),
            }),
            (None, None, Some(map)) => Ok(MachineSource::ReferenceMap(map.clone())),
            (None, None, None) => Ok(MachineSource::Coefficients(presets::i3_loss_coefficients())),
        }
    }

    pub fn limits(&self) -> Result<MachineLimits> {
        match self.limits {
            None => Ok(presets::i3_machine_limits()),
            Some(l) => MachineLimits::new(
                l.tau_cont_nm,
                l.tau_peak_nm,
                rpm_to_rad_s(l.omega_rated_rpm),
                rpm_to_rad_s(l.omega_max_rpm),
                l.p_cont_kw * 1e3,
                l.p_peak_kw * 1e3,
            ),
        }
    }

    pub fn vehicle(&self) -> Result<VehicleParams> {
        let v = match self.vehicle {
            None => presets::i3_vehicle(),
            Some(v) => VehicleParams {
                m0: v.m0_kg,
                mp: v.mp_kg,
                frontal_area: v.frontal_area_m2,
                cd: v.cd,
                cr: v.cr_percent / 100.0,
                rw: v.rw_m,
                eta_t: v.eta_t,
                lambda: v.lambda,
                kappa_r: v.kappa_r,
                gamma_fgt: v.gamma_fgt,
                rho_air: v.rho_air_kg_m3,
                g: v.g_m_s2,
            },
        };
        v.validate()?;
        Ok(v)
    }

    pub fn grid(&self, limits: &MachineLimits) -> Result<GridSpec> {
        let g = self.grid;
        let speed_max = g.speed_max_rpm.unwrap_or_else(|| {
            // Snap round-trip noise, otherwise stay inside the envelope.
            let rpm = rad_s_to_rpm(limits.omega_max);
            if (rpm - rpm.round()).abs() < 1e-6 {
                rpm.round()
            } else {
                rpm.floor()
            }
        });
        let torque_max = g.torque_max_nm.unwrap_or(limits.tau_peak_max);
        GridSpec::uniform(speed_max, g.speed_step_rpm, torque_max, g.torque_step_nm)
    }
}
