//! Bracketed root finder for the ratio quartic, used as the fallback and as
//! the independent check of the closed form.

use crate::{Error, Result};

use super::closed_form::QuarticInput;

/// Relative residual the numeric root must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn f(q: &QuarticInput, g: f64) -> f64 {
    let k = q.kappa_sqrt * q.kappa_sqrt;
    let w = q.omega_t;
    k - g * g * (q.d00 + g * w * (q.d01 + g * w * q.d02))
}

fn df(q: &QuarticInput, g: f64) -> f64 {
    let w = q.omega_t;
    -g * (2.0 * q.d00 + g * w * (3.0 * q.d01 + 4.0 * g * w * q.d02))
}

/// The single positive root. `f` is strictly decreasing on `(0, inf)` for
/// non-negative `d` with at least one positive entry, so bisection on a
/// doubled bracket is safe; Newton steps that stay inside the bracket speed
/// up the tail.
pub(crate) fn solve(q: &QuarticInput) -> Result<f64> {
    if q.d00 == 0.0 && q.d01 == 0.0 && q.d02 == 0.0 {
        return Err(Error::NoPositiveRoot);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut doublings = 0;
    while f(q, hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::NoPositiveRoot);
        }
    }
    let mut g = 0.5 * (lo + hi);
    for _ in 0..400 {
        let fg = f(q, g);
        if fg == 0.0 {
            break;
        }
        if fg > 0.0 {
            lo = g;
        } else {
            hi = g;
        }
        let newton = g - fg / df(q, g);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == g || hi - lo <= 2.0 * f64::EPSILON * hi {
            g = next;
            break;
        }
        g = next;
    }
    let res = super::closed_form::relative_residual(q, g);
    if !(res < RESIDUAL_TOL) {
        return Err(Error::NumericValidation(format!("quartic residual {res:e} at ratio {g}")));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_quadratic_case() {
        // d01 = d02 = 0: kappa = d00 g^2.
        let q = QuarticInput {
            kappa_sqrt: 30.0,
            omega_t: 10.0,
            d00: 4.0,
            d01: 0.0,
            d02: 0.0,
        };
        assert!((solve(&q).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn pure_quartic_case() {
        // d02 only: kappa = d02 w^2 g^4 -> g = sqrt(k_sqrt / (sqrt(d02) w)).
        let q = QuarticInput {
            kappa_sqrt: 200.0,
            omega_t: 50.0,
            d00: 0.0,
            d01: 0.0,
            d02: 1e-3,
        };
        let expected = (200.0 / (1e-3_f64.sqrt() * 50.0)).sqrt();
        assert!((solve(&q).unwrap() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn all_zero_has_no_root() {
        let q = QuarticInput {
            kappa_sqrt: 1.0,
            omega_t: 1.0,
            d00: 0.0,
            d01: 0.0,
            d02: 0.0,
        };
        assert!(matches!(solve(&q), Err(Error::NoPositiveRoot)));
    }
}
