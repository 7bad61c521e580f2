//! Unit conversions used at I/O boundaries.

use std::f64::consts::PI;

pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * PI / 30.0
}

pub fn rad_s_to_rpm(omega: f64) -> f64 {
    omega * 30.0 / PI
}

pub fn kmh_to_m_s(kmh: f64) -> f64 {
    kmh / 3.6
}

pub fn m_s_to_kmh(v: f64) -> f64 {
    v * 3.6
}

pub const J_PER_KWH: f64 = 3.6e6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_point_speeds() {
        assert!((rpm_to_rad_s(1396.0) - 146.19).abs() < 0.01);
        assert!((rpm_to_rad_s(4886.0) - 511.66).abs() < 0.01);
        assert!((rad_s_to_rpm(rpm_to_rad_s(11400.0)) - 11400.0).abs() < 1e-9);
        assert!((kmh_to_m_s(155.0) - 43.0556).abs() < 1e-4);
    }
}
