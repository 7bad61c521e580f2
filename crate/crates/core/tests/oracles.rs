//! Independent oracles for the closed-form results.

mod common;

use common::{i3_d, random_model, rel};
use gearopt::loss_model::{
    d_from_c, efficiency, ool_efficiency, ool_speed_for_efficiency, ool_torque, optimal_torque, peak_efficiency_point,
    LossCoefficients, MachinePoint, ModelVariant,
};
use gearopt::presets;
use gearopt::ratio_opt::{
    optimal_ratio, optimal_ratio_closed_form, optimal_ratio_numeric, quartic_residual, RatioQuery, RESIDUAL_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Golden-section maximiser of a unimodal `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

#[test]
fn ool_torque_maximises_efficiency_per_speed() {
    let c = presets::i3_loss_coefficients();
    for rpm in [200.0, 1396.0, 3000.0, 4886.0, 8000.0, 11400.0] {
        let w = gearopt::units::rpm_to_rad_s(rpm);
        let tau = golden_max(|t| efficiency(&c, MachinePoint { tau: t, omega: w }).unwrap(), 1e-3, 400.0);
        let star = ool_torque(&c, w).unwrap();
        assert!(rel(star, tau) < 1e-6, "{rpm} rpm: {star} vs {tau}");
    }
}

#[test]
fn ool_efficiency_equals_efficiency_at_ool_torque() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let c = random_model(&mut rng);
        let w = rng.gen_range(1.0..1500.0);
        let tau = optimal_torque(&d_from_c(&c).unwrap(), w).unwrap();
        let direct = efficiency(&c, MachinePoint { tau, omega: w }).unwrap();
        assert!((ool_efficiency(&c, w).unwrap() - direct).abs() < 1e-13);
    }
}

#[test]
fn speed_for_efficiency_matches_bisection() {
    let c = presets::i3_loss_coefficients();
    for eta in [0.90, 0.95, 0.958, 0.97, 0.975, 0.98] {
        let (mut lo, mut hi) = (1e-6, 1e7);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ool_efficiency(&c, mid).unwrap() < eta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = ool_speed_for_efficiency(&c, eta).unwrap();
        assert!(rel(w, lo) < 1e-9, "eta {eta}: {w} vs {lo}");
    }
}

#[test]
fn interior_peak_found_for_full_model() {
    // Copper loss that grows with speed bends the OOL efficiency back down.
    let mut m = [[0.0; 3]; 3];
    m[0][1] = 0.5;
    m[2][0] = 0.05;
    m[1][2] = 2e-5;
    let c = LossCoefficients::new(m, ModelVariant::Full).unwrap();
    let wmax = 1200.0;
    let p = peak_efficiency_point(&c, wmax).unwrap();
    let w = golden_max(|w| ool_efficiency(&c, w).unwrap(), 1e-6, wmax);
    assert!(rel(p.omega, w) < 1e-5, "{} vs {w}", p.omega);
}

#[test]
fn closed_form_agrees_with_numeric_on_random_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0f64;
    for _ in 0..10_000 {
        let q = RatioQuery::new(rng.gen_range(1.0..=600.0), rng.gen_range(1.0..=160.0), 0.97, i3_d()).unwrap();
        let a = optimal_ratio_closed_form(&q).unwrap();
        let b = optimal_ratio_numeric(&q).unwrap();
        assert!(quartic_residual(&q, a) < RESIDUAL_TOL);
        assert!(quartic_residual(&q, b) < 1e-10);
        worst = worst.max(rel(a, b));
    }
    assert!(worst < 1e-6, "worst disagreement {worst:e}");
}

#[test]
fn closed_form_on_random_ool_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let d = d_from_c(&random_model(&mut rng)).unwrap();
        let q = RatioQuery::new(rng.gen_range(1.0..=600.0), rng.gen_range(1.0..=160.0), 0.97, d).unwrap();
        let a = optimal_ratio_closed_form(&q).unwrap();
        let b = optimal_ratio_numeric(&q).unwrap();
        assert!(rel(a, b) < 1e-9, "{d:?} {q:?}: {a} vs {b}");
    }
}

#[test]
fn cubic_limit_as_d02_vanishes() {
    let d = gearopt::loss_model::OolCoefficients::new(0.0, 11.7843, 1e-14).unwrap();
    let q = RatioQuery::new(150.0, 40.0, 0.97, d).unwrap();
    let cubic = (q.kappa() / (d.d01 * 40.0)).cbrt();
    assert!(rel(optimal_ratio(&q).unwrap(), cubic) < 1e-9);
}

#[test]
fn ratio_vanishes_with_demand() {
    let mut last = f64::INFINITY;
    for tau in [10.0, 1.0, 1e-2, 1e-4, 1e-6] {
        let g = optimal_ratio_numeric(&RatioQuery::new(tau, 30.0, 0.97, i3_d()).unwrap()).unwrap();
        assert!(g < last);
        last = g;
    }
    assert!(last < 1e-3);
}
