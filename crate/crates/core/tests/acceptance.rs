//! Acceptance run: one PASS/FAIL line per criterion, details indented below.
//! Exits non-zero if any criterion fails.
//!
//! The WLTC class 3b trace defaults to the bundled fixture; set `WLTC_CSV`
//! to use another copy.

mod common;

use std::time::Instant;

use common::{coefficient_error, i3_d, random_model, rel, synthetic_map, wltc, wltc_path};
use gearopt::cycle_analysis::{average_efficiency, simulate, RatioPolicy};
use gearopt::loss_model::{
    d_from_c, efficiency, loss_power, ool_efficiency, ool_speed_for_efficiency, optimal_torque, peak_efficiency_point,
    MachinePoint,
};
use gearopt::map_fit::{fit_second_point, reference_peak_point, solve_c, solve_d, DesignPoint};
use gearopt::presets;
use gearopt::ratio_opt::{
    cvt_bounds, cycle_optimal_ratios, fgt_sweep, optimal_ratio, optimal_ratio_closed_form, optimal_ratio_numeric,
    quartic_residual, ratio_grid, ratio_histogram, RatioQuery,
};
use gearopt::units::{rad_s_to_rpm, rpm_to_rad_s};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn criterion(&mut self, n: u32, title: &str, run: impl FnOnce(&mut Vec<String>) -> bool) {
        let start = Instant::now();
        let mut lines = Vec::new();
        let ok = run(&mut lines);
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {n} [{}] {title} ({secs:.2} s)", if ok { "PASS" } else { "FAIL" });
        for l in lines {
            println!("    {l}");
        }
        if !ok {
            self.failed.push(n);
        }
    }
}

/// Appends a check line and returns its outcome.
fn check(lines: &mut Vec<String>, ok: bool, what: String) -> bool {
    lines.push(format!("{} {what}", if ok { "ok  " } else { "MISS" }));
    ok
}

fn within_pct(got: f64, want: f64, pct: f64) -> bool {
    (got / want - 1.0).abs() <= pct / 100.0
}

fn c1(lines: &mut Vec<String>) -> bool {
    let c = presets::i3_loss_coefficients();
    let d = i3_d();
    let mut ok = true;
    for (w, tau, eta) in [(146.2, 41.7, 95.8), (511.7, 78.7, 97.0)] {
        let t = optimal_torque(&d, w).unwrap();
        let e = ool_efficiency(&c, w).unwrap() * 100.0;
        ok &= check(lines, within_pct(t, tau, 0.25), format!("tau*({w}) = {t:.3} Nm, want {tau} +- 0.25 %"));
        ok &= check(lines, (e - eta).abs() <= 0.1, format!("eta*({w}) = {e:.3} %, want {eta} +- 0.1 pt"));
    }
    ok
}

fn c2(lines: &mut Vec<String>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let c = random_model(&mut rng);
        let map = synthetic_map(&c);
        match reference_peak_point(&map).and_then(|p3| fit_second_point(&map, DesignPoint::origin(), p3)) {
            Ok(fit) => worst = worst.max(coefficient_error(&fit.c, &c)),
            Err(_) => failures += 1,
        }
    }
    let mut ok = check(
        lines,
        failures == 0 && worst < 1e-6,
        format!("100 synthetic maps: worst coefficient error {worst:.2e}, {failures} failed fits (want < 1e-6)"),
    );

    let pts = presets::i3_design_points();
    let tab = presets::i3_loss_coefficients();
    let fitted = solve_d(&pts).and_then(|d| solve_c(&d, &[pts[1], pts[2]]).map(|(c20, c11)| (d, c20, c11)));
    match fitted {
        Err(e) => ok &= check(lines, false, format!("i3 design points: {e}")),
        Ok((d, c20, c11)) => {
            let reference = i3_d();
            for (name, got, want) in [
                ("d01", d.d01, reference.d01),
                ("d02", d.d02, reference.d02),
                ("c20", c20, tab.c20()),
                ("c11", c11, tab.c11()),
                ("c01", d.d01 * c20, tab.c01()),
                ("c02", d.d02 * c20, tab.c02()),
            ] {
                let dev = (got / want - 1.0) * 100.0;
                ok &= check(lines, dev.abs() <= 2.0, format!("i3 design points -> {name} = {got:.5e} ({dev:+.2} %, want +- 2 %)"));
            }
        }
    }
    ok
}

fn c3(lines: &mut Vec<String>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut worst_res, mut errors) = (0f64, 0f64, 0);
    for _ in 0..10_000 {
        let q = RatioQuery::new(rng.gen_range(1.0..=600.0), rng.gen_range(1.0..=160.0), 0.97, i3_d()).unwrap();
        match (optimal_ratio_closed_form(&q), optimal_ratio_numeric(&q)) {
            (Ok(a), Ok(b)) => {
                worst = worst.max(rel(a, b));
                worst_res = worst_res.max(quartic_residual(&q, a)).max(quartic_residual(&q, b));
            }
            _ => errors += 1,
        }
    }
    let a = check(lines, errors == 0 && worst < 1e-6, format!("10^4 queries: max disagreement {worst:.2e}, {errors} errors (want < 1e-6)"));
    let b = check(lines, worst_res < 1e-8, format!("max quartic residual {worst_res:.2e} (want < 1e-8)"));
    a && b
}

fn c4(lines: &mut Vec<String>) -> bool {
    let b = cvt_bounds(&i3_d(), &presets::i3_vehicle(), 0.0, 155.0).unwrap();
    let mut ok = check(lines, within_pct(b.gamma_min, 2.92, 2.0), format!("gamma_min = {:.4}, want 2.92 +- 2 %", b.gamma_min));
    ok &= check(lines, within_pct(b.gamma_max, 4.40, 2.0), format!("gamma_max = {:.4}, want 4.40 +- 2 %", b.gamma_max));
    ok &= check(lines, (b.v_at_min_kmh() - 49.0).abs() <= 2.0, format!("v at min = {:.0} km/h, want 49 +- 2", b.v_at_min_kmh()));
    ok &= check(lines, (b.v_at_max_kmh() - 155.0).abs() < 1e-9, format!("v at max = {:.0} km/h, want 155", b.v_at_max_kmh()));
    ok
}

fn c5(lines: &mut Vec<String>) -> bool {
    let c = presets::i3_loss_coefficients();
    let wmax = presets::i3_machine_limits().omega_max;
    let ok = match peak_efficiency_point(&c, wmax) {
        Ok(p) => {
            let rpm = rad_s_to_rpm(p.omega);
            let mut ok = check(lines, within_pct(rpm, 4886.0, 1.0), format!("omega* = {rpm:.0} rpm, want 4886 +- 1 %"));
            ok &= check(lines, (p.eta * 100.0 - 97.0).abs() <= 0.1, format!("eta* = {:.3} %, want 97.0 +- 0.1 pt", p.eta * 100.0));
            let w10 = ool_speed_for_efficiency(&c, p.eta).unwrap_or(f64::NAN);
            ok &= check(lines, within_pct(w10, p.omega, 1.0), format!("inverse at eta* = {w10:.2} rad/s vs {:.2}", p.omega));
            ok
        }
        Err(e) => check(lines, false, format!("peak_efficiency_point: {e}")),
    };
    // Context for the outcome: the OOL efficiency of these coefficients
    // rises monotonically towards 1 / (1 + c11 + 2 c20 sqrt(d02)).
    let d = i3_d();
    let limit = 1.0 / (1.0 + c.c11() + 2.0 * c.c20() * d.d02.sqrt());
    lines.push(format!(
        "info eta*(omega) at 4886 / 11400 rpm = {:.3} / {:.3} %, supremum {:.3} %",
        ool_efficiency(&c, rpm_to_rad_s(4886.0)).unwrap() * 100.0,
        ool_efficiency(&c, wmax).unwrap() * 100.0,
        limit * 100.0
    ));
    if let Ok(w) = ool_speed_for_efficiency(&c, 0.97) {
        lines.push(format!("info inverse at 97.0 % = {:.0} rpm", rad_s_to_rpm(w)));
    }
    ok
}

fn c6(lines: &mut Vec<String>) -> bool {
    lines.push(format!("info trace {}", wltc_path().display()));
    let c = presets::i3_loss_coefficients();
    let (l, v, cyc) = (presets::i3_machine_limits(), presets::i3_vehicle(), wltc());
    let fgt = average_efficiency(&c, &l, &v, &cyc, &RatioPolicy::Fixed(v.gamma_fgt)).unwrap();
    let sweep = fgt_sweep(&c, &l, &v, &cyc, &ratio_grid(2.0, 12.0, 0.05).unwrap()).unwrap();
    let ratios = cycle_optimal_ratios(&i3_d(), &v, &cyc).unwrap();
    let hist = ratio_histogram(&ratios, 0.5, 6.0).unwrap();
    let (e_fgt, e_cvt) = (fgt.eta_avg_combined * 100.0, sweep.eta_avg_cvt * 100.0);

    let mut ok = check(lines, (87.1..=90.1).contains(&e_fgt), format!("FGT 9.665: eta = {e_fgt:.2} %, want [87.1, 90.1]"));
    ok &= check(lines, (91.8..=94.8).contains(&e_cvt), format!("CVT: eta = {e_cvt:.2} %, want [91.8, 94.8]"));
    ok &= check(lines, e_cvt - e_fgt >= 3.0, format!("CVT - FGT = {:+.2} pt, want >= +3.0", e_cvt - e_fgt));
    ok &= check(
        lines,
        (4.5..=5.0).contains(&sweep.gamma_fgt_opt),
        format!("sweep argmax gamma = {:.2}, want [4.5, 5.0]", sweep.gamma_fgt_opt),
    );
    ok &= check(
        lines,
        (sweep.eta_fgt_opt * 100.0 - 90.7).abs() <= 1.5,
        format!("sweep peak eta = {:.2} %, want 90.7 +- 1.5", sweep.eta_fgt_opt * 100.0),
    );
    ok &= check(
        lines,
        (4.3..=5.0).contains(&sweep.cvt_mean_ratio),
        format!("mean CVT ratio = {:.3}, want [4.3, 5.0]", sweep.cvt_mean_ratio),
    );
    ok &= check(
        lines,
        hist.fraction_below >= 0.80,
        format!("fraction of gamma* < 6 = {:.3} over {} traction samples, want >= 0.80", hist.fraction_below, hist.samples),
    );
    let cvt_e = average_efficiency(&c, &l, &v, &cyc, &RatioPolicy::Cvt { ool: i3_d(), range: None }).unwrap();
    lines.push(format!(
        "info energy-weighted eta: FGT {:.2} %, CVT {:.2} %; CVT clamp events {}",
        fgt.eta_energy_combined * 100.0,
        cvt_e.eta_energy_combined * 100.0,
        sweep.cvt_clamp_events
    ));
    ok
}

fn c7(lines: &mut Vec<String>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut convex, mut stationary, mut identity, mut substitution, mut bookkeeping) = (0f64, 0f64, 0f64, 0f64, 0f64);
    for _ in 0..2000 {
        let c = random_model(&mut rng);
        let d = d_from_c(&c).unwrap();
        let w = rng.gen_range(1.0..1200.0);
        let t = rng.gen_range(0.0..250.0);
        let h = rng.gen_range(0.01..20.0);
        let l = |tau: f64| loss_power(&c, MachinePoint { tau, omega: w });
        convex = convex.min((l(t + 2.0 * h) - 2.0 * l(t + h) + l(t)) / l(t + 2.0 * h).max(1.0));

        let ts = optimal_torque(&d, w).unwrap();
        let eta = |tau: f64| efficiency(&c, MachinePoint { tau, omega: w }).unwrap();
        let dh = 1e-4 * ts;
        stationary = stationary.max(((eta(ts + dh) - eta(ts - dh)) / (2.0 * dh) * ts).abs());
        identity = identity.max((ool_efficiency(&c, w).unwrap() - eta(ts)).abs());

        let q = RatioQuery::new(rng.gen_range(1.0..=600.0), rng.gen_range(1.0..=160.0), 0.97, d).unwrap();
        let g = optimal_ratio(&q).unwrap();
        substitution = substitution.max(rel(d.beta(q.omega_t * g).sqrt() * g * q.eta_t, q.tau_t));

        let p = MachinePoint { tau: t, omega: w };
        let (pm, loss) = (p.mechanical_power(), loss_power(&c, p));
        bookkeeping = bookkeeping.max(((pm + loss) - loss - pm).abs() / (pm + loss).max(1.0));
    }
    let cvt = RatioPolicy::Cvt { ool: i3_d(), range: None };
    let c = presets::i3_loss_coefficients();
    let (l, v, cyc) = (presets::i3_machine_limits(), presets::i3_vehicle(), wltc());
    let a = simulate(&c, &l, &v, &cyc, &cvt).unwrap();
    let b = simulate(&c, &l, &v, &cyc, &cvt).unwrap();
    let r = &a.report;
    let energy = rel(r.energy_mech_kwh + r.energy_loss_motoring_kwh, r.energy_ac_motoring_kwh);
    let deterministic = serde_json::to_string(&a.report).unwrap() == serde_json::to_string(&b.report).unwrap() && a.trace == b.trace;

    let mut ok = check(lines, convex >= -1e-9, format!("loss convexity: min scaled second difference {convex:.2e}"));
    ok &= check(lines, stationary < 1e-6, format!("torque stationarity: max scaled slope at tau* {stationary:.2e} (want < 1e-6)"));
    ok &= check(lines, identity < 1e-12, format!("OOL efficiency identity: max deviation {identity:.2e}"));
    ok &= check(lines, substitution < 1e-8, format!("ratio substitution identity: max deviation {substitution:.2e} (want < 1e-8)"));
    ok &= check(lines, bookkeeping < 1e-12, format!("power bookkeeping: max deviation {bookkeeping:.2e} (want < 1e-12)"));
    ok &= check(lines, energy < 1e-9, format!("WLTC traction energy balance: {energy:.2e}"));
    ok &= check(lines, deterministic, "repeated WLTC run bitwise identical".to_string());
    ok
}

fn main() {
    // Under `cargo test -- <filter>` only run when asked for.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut r = Report { failed: Vec::new() };
    r.criterion(1, "design points on the fitted i3 model", c1);
    r.criterion(2, "fit round trip", c2);
    r.criterion(3, "closed-form vs numeric ratio", c3);
    r.criterion(4, "CVT stationary ratio bounds", c4);
    r.criterion(5, "peak-efficiency point", c5);
    r.criterion(6, "WLTC FGT vs CVT", c6);
    r.criterion(7, "property suite", c7);
    if r.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", r.failed);
        std::process::exit(1);
    }
}
