//! Reference data for the BMW i3 case study (PMSM with ~97 % peak efficiency).

use crate::loss_model::{LossCoefficients, MachineLimits, OolCoefficients};
use crate::map_fit::DesignPoint;
use crate::units::rpm_to_rad_s;
use crate::vehicle::VehicleParams;

/// Fitted loss coefficients (W, Nm, rad/s).
pub fn i3_loss_coefficients() -> LossCoefficients {
    LossCoefficients::two_degree(0.0, 0.5732, 3.069e-5, 0.0160, 0.0487).expect("valid preset")
}

/// Fitted OOL coefficients (Nm^2 and rad/s).
pub fn i3_ool_coefficients() -> OolCoefficients {
    OolCoefficients {
        d00: 0.0,
        d01: 11.7843,
        d02: 6.3048e-4,
    }
}

/// Origin, intermediate point and maximum-efficiency point of the OOL,
/// with torque rounded to 0.1 Nm and efficiency to 0.1 %.
pub fn i3_design_points() -> [DesignPoint; 3] {
    [
        DesignPoint::origin(),
        DesignPoint {
            tau_star: 41.7,
            omega_star: rpm_to_rad_s(1396.0),
            eta_star: 0.958,
        },
        DesignPoint {
            tau_star: 78.7,
            omega_star: rpm_to_rad_s(4886.0),
            eta_star: 0.970,
        },
    ]
}

pub fn i3_machine_limits() -> MachineLimits {
    MachineLimits {
        tau_cont_max: 150.0,
        tau_peak_max: 250.0,
        omega_rated: rpm_to_rad_s(4800.0),
        omega_max: rpm_to_rad_s(11400.0),
        p_cont_max: 75e3,
        p_peak_max: 125e3,
    }
}

/// Vehicle with one 100 kg occupant, standard air density and gravity.
pub fn i3_vehicle() -> VehicleParams {
    VehicleParams {
        m0: 1195.0,
        mp: 100.0,
        frontal_area: 2.38,
        cd: 0.29,
        cr: 0.0174,
        rw: 0.350,
        eta_t: 0.97,
        lambda: 1.05,
        kappa_r: 0.55,
        gamma_fgt: 9.665,
        rho_air: 1.2041,
        g: 9.81,
    }
}
