#![allow(dead_code)]

use std::path::PathBuf;

use gearopt::loss_model::{LossCoefficients, OolCoefficients};
use gearopt::vehicle::DriveCycle;
use rand::Rng;

/// WLTC class 3b trace; `WLTC_CSV` points at a different copy.
pub fn wltc_path() -> PathBuf {
    std::env::var_os("WLTC_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/wltc_class3b.csv"))
}

pub fn wltc() -> DriveCycle {
    DriveCycle::load_csv(wltc_path()).expect("WLTC trace")
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Two-degree model with coefficients spread a decade either side of the
/// i3 fit.
pub fn random_model(rng: &mut impl Rng) -> LossCoefficients {
    let mut spread = |x: f64| x * 10f64.powf(rng.gen_range(-1.0..1.0));
    let (c01, c02, c11, c20) = (spread(0.5732), spread(3.069e-5), spread(0.0160), spread(0.0487));
    LossCoefficients::two_degree(0.0, c01, c02, c11, c20).unwrap()
}

pub fn i3_d() -> OolCoefficients {
    gearopt::presets::i3_ool_coefficients()
}

/// Noise-free map of `c` whose torque axis contains the OOL torque of every
/// speed column, so column maxima sit exactly on the OOL.
pub fn synthetic_map(c: &LossCoefficients) -> gearopt::map_fit::EfficiencyMap {
    use gearopt::loss_model::{efficiency, optimal_torque, MachinePoint};
    use gearopt::units::rpm_to_rad_s;

    let d = gearopt::loss_model::d_from_c(c).unwrap();
    let speeds: Vec<f64> = (0..=22).map(|k| k as f64 * 500.0).collect();
    let mut torques = vec![0.0];
    for &rpm in &speeds[1..] {
        let t = optimal_torque(&d, rpm_to_rad_s(rpm)).unwrap();
        torques.extend([0.5 * t, 0.8 * t, t, 1.25 * t, 2.0 * t]);
    }
    torques.sort_by(f64::total_cmp);
    torques.dedup();
    let mut eta = Vec::new();
    for &rpm in &speeds {
        let omega = rpm_to_rad_s(rpm);
        for &tau in &torques {
            eta.push(Some(if tau * omega == 0.0 {
                0.0
            } else {
                efficiency(c, MachinePoint { tau, omega }).unwrap()
            }));
        }
    }
    gearopt::map_fit::EfficiencyMap::new(speeds, torques, eta, None).unwrap()
}

/// Worst relative error over the five two-degree coefficients (absolute
/// where the reference is zero).
pub fn coefficient_error(a: &LossCoefficients, b: &LossCoefficients) -> f64 {
    [
        (a.c00(), b.c00()),
        (a.c01(), b.c01()),
        (a.c02(), b.c02()),
        (a.c11(), b.c11()),
        (a.c20(), b.c20()),
    ]
    .iter()
    .map(|&(x, y)| if y == 0.0 { x.abs() } else { rel(x, y) })
    .fold(0.0, f64::max)
}
