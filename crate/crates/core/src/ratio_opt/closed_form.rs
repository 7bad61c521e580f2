//! Closed-form root of the ratio quartic
//! `kappa - d00 g^2 - d01 w g^3 - d02 w^2 g^4 = 0` via the sigma substitution
//! terms, evaluated in arbitrary-precision complex arithmetic.
//!
//! The nested radicals cancel catastrophically in f64 (the `d01^4 / d02^4`
//! terms dwarf `kappa / d02` by up to ~10 decades for slow wheels), so the
//! expression is evaluated with `PRECISION_BITS` of mantissa and the
//! precision is doubled until the result validates.

use astro_float::{BigFloat, Consts, RoundingMode};

use crate::{Error, Result};

const PRECISION_BITS: usize = 256;
const MAX_PRECISION_BITS: usize = 2048;
const RM: RoundingMode = RoundingMode::ToEven;

/// Imaginary part tolerated before the root is declared non-real.
pub const IMAG_TOL: f64 = 1e-9;
/// Relative quartic residual accepted for the closed-form root.
pub const RESIDUAL_TOL: f64 = 1e-8;

struct Ctx {
    p: usize,
    cc: Consts,
}

#[derive(Clone, Debug)]
struct Cx {
    re: BigFloat,
    im: BigFloat,
}

impl Ctx {
    fn new(p: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::NumericValidation(format!("precision context: {e:?}")))?;
        Ok(Self { p, cc })
    }

    fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    fn real(&self, x: BigFloat) -> Cx {
        Cx { re: x, im: self.f(0.0) }
    }

    fn add(&self, a: &Cx, b: &Cx) -> Cx {
        Cx {
            re: a.re.add(&b.re, self.p, RM),
            im: a.im.add(&b.im, self.p, RM),
        }
    }

    fn sub(&self, a: &Cx, b: &Cx) -> Cx {
        Cx {
            re: a.re.sub(&b.re, self.p, RM),
            im: a.im.sub(&b.im, self.p, RM),
        }
    }

    fn mul(&self, a: &Cx, b: &Cx) -> Cx {
        let p = self.p;
        Cx {
            re: a.re.mul(&b.re, p, RM).sub(&a.im.mul(&b.im, p, RM), p, RM),
            im: a.re.mul(&b.im, p, RM).add(&a.im.mul(&b.re, p, RM), p, RM),
        }
    }

    fn scale(&self, a: &Cx, s: &BigFloat) -> Cx {
        Cx {
            re: a.re.mul(s, self.p, RM),
            im: a.im.mul(s, self.p, RM),
        }
    }

    fn div(&self, a: &Cx, b: &Cx) -> Cx {
        let p = self.p;
        let den = b.re.mul(&b.re, p, RM).add(&b.im.mul(&b.im, p, RM), p, RM);
        let re = a.re.mul(&b.re, p, RM).add(&a.im.mul(&b.im, p, RM), p, RM);
        let im = a.im.mul(&b.re, p, RM).sub(&a.re.mul(&b.im, p, RM), p, RM);
        Cx {
            re: re.div(&den, p, RM),
            im: im.div(&den, p, RM),
        }
    }

    fn abs(&self, a: &Cx) -> BigFloat {
        let p = self.p;
        a.re.mul(&a.re, p, RM).add(&a.im.mul(&a.im, p, RM), p, RM).sqrt(p, RM)
    }

    fn is_zero(&self, a: &Cx) -> bool {
        a.re.is_zero() && a.im.is_zero()
    }

    /// Principal square root (branch cut on the negative real axis, where
    /// the result is taken on the positive imaginary side).
    fn sqrt(&self, a: &Cx) -> Cx {
        if self.is_zero(a) {
            return a.clone();
        }
        let p = self.p;
        let two = self.f(2.0);
        let r = self.abs(a);
        if !a.re.is_negative() {
            let re = r.add(&a.re, p, RM).div(&two, p, RM).sqrt(p, RM);
            let im = a.im.div(&re.mul(&two, p, RM), p, RM);
            Cx { re, im }
        } else {
            let mut im = r.sub(&a.re, p, RM).div(&two, p, RM).sqrt(p, RM);
            if a.im.is_negative() {
                im = im.neg();
            }
            let re = a.im.div(&im.mul(&two, p, RM), p, RM);
            Cx { re, im }
        }
    }

    /// Argument in (-pi, pi].
    fn arg(&mut self, a: &Cx) -> BigFloat {
        let p = self.p;
        let pi = self.cc.pi(p, RM);
        if a.re.is_zero() {
            let half = pi.div(&self.f(2.0), p, RM);
            return if a.im.is_negative() { half.neg() } else { half };
        }
        let base = a.im.div(&a.re, p, RM).atan(p, RM, &mut self.cc);
        if a.re.is_positive() {
            base
        } else if a.im.is_negative() {
            base.sub(&pi, p, RM)
        } else {
            base.add(&pi, p, RM)
        }
    }

    /// Principal cube root.
    fn cbrt(&mut self, a: &Cx) -> Cx {
        if self.is_zero(a) {
            return a.clone();
        }
        let p = self.p;
        let r = self.abs(a).cbrt(p, RM);
        let theta = self.arg(a).div(&self.f(3.0), p, RM);
        let (s, c) = (theta.sin(p, RM, &mut self.cc), theta.cos(p, RM, &mut self.cc));
        Cx {
            re: r.mul(&c, p, RM),
            im: r.mul(&s, p, RM),
        }
    }
}

fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    format!("{x}").parse().unwrap_or(f64::NAN)
}

/// Inputs of the quartic. `kappa_sqrt` is the machine-side wheel torque,
/// `tau_t / eta_t` when motoring.
#[derive(Clone, Copy, Debug)]
pub(crate) struct QuarticInput {
    pub kappa_sqrt: f64,
    pub omega_t: f64,
    pub d00: f64,
    pub d01: f64,
    pub d02: f64,
}

/// Closed-form value as `(re, im)` at `bits` of precision.
fn evaluate(q: &QuarticInput, bits: usize) -> Result<(f64, f64)> {
    let mut x = Ctx::new(bits)?;
    let p = bits;
    let d00 = x.f(q.d00);
    let d01 = x.f(q.d01);
    let d02 = x.f(q.d02);
    let w = x.f(q.omega_t);
    let kr = x.f(q.kappa_sqrt);
    let k = kr.mul(&kr, p, RM);

    let powi = |b: &BigFloat, n: usize| (1..n).fold(b.clone(), |acc, _| acc.mul(b, p, RM));
    let c = |v: f64| BigFloat::from_f64(v, p);
    let (w2, w3, w4) = (powi(&w, 2), powi(&w, 3), powi(&w, 4));
    let (d01_2, d01_3, d01_4) = (powi(&d01, 2), powi(&d01, 3), powi(&d01, 4));
    let (d02_2, d02_3, d02_4) = (powi(&d02, 2), powi(&d02, 3), powi(&d02, 4));
    let m = |a: &BigFloat, b: &BigFloat| a.mul(b, p, RM);
    let dv = |a: &BigFloat, b: &BigFloat| a.div(b, p, RM);

    // kappa / (d02 w^2): the depressed quartic's constant term carries w^2.
    let k_term = dv(&k, &m(&d02, &w2));
    let s5 = dv(&d00, &m(&d02, &w2)).sub(&dv(&m(&c(3.0), &d01_2), &m(&c(8.0), &m(&d02_2, &w2))), p, RM);
    let s6 = dv(&d01_3, &m(&c(8.0), &m(&d02_3, &w3))).sub(&dv(&m(&d00, &d01), &m(&c(2.0), &m(&d02_2, &w3))), p, RM);
    let s4 = k_term
        .add(&dv(&m(&c(3.0), &d01_4), &m(&c(256.0), &m(&d02_4, &w4))), p, RM)
        .sub(&dv(&m(&d00, &d01_2), &m(&c(16.0), &m(&d02_3, &w4))), p, RM);

    let s5_2 = m(&s5, &s5);
    let s5_3 = m(&s5_2, &s5);
    let s5_4 = m(&s5_3, &s5);
    let s6_2 = m(&s6, &s6);
    let s4_2 = m(&s4, &s4);
    let s4_3 = m(&s4_2, &s4);
    let disc = m(&c(256.0), &s4_3)
        .add(&m(&c(128.0), &m(&s5_2, &s4_2)), p, RM)
        .add(&m(&c(27.0), &m(&s6_2, &s6_2)), p, RM)
        .add(&m(&c(4.0), &m(&s5_3, &s6_2)), p, RM)
        .add(&m(&c(16.0), &m(&s5_4, &s4)), p, RM)
        .add(&m(&c(144.0), &m(&s5, &m(&s6_2, &s4))), p, RM);
    let s3 = x.sqrt(&x.real(disc));

    let sqrt3 = c(3.0).sqrt(p, RM);
    let sqrt6 = c(6.0).sqrt(p, RM);
    let s2_real = dv(&s6_2, &c(2.0))
        .add(&dv(&m(&c(4.0), &m(&s5, &s4)), &c(3.0)), p, RM)
        .add(&dv(&s5_3, &c(27.0)), p, RM);
    let s2 = x.add(&x.real(s2_real), &x.scale(&s3, &dv(&sqrt3, &c(18.0))));
    if x.is_zero(&s2) {
        return Err(Error::ClosedFormDegenerate("sigma2 vanishes".into()));
    }
    let s2_13 = x.cbrt(&s2);
    let s2_23 = x.mul(&s2_13, &s2_13);
    let s2_16 = x.sqrt(&s2_13);

    let s1_real = s5_2
        .sub(&m(&c(12.0), &k_term), p, RM)
        .sub(&dv(&m(&c(9.0), &d01_4), &m(&c(64.0), &m(&d02_4, &w4))), p, RM)
        .add(&dv(&m(&c(3.0), &m(&d00, &d01_2)), &m(&c(4.0), &m(&d02_3, &w4))), p, RM);
    let s1 = x.add(
        &x.sub(&x.scale(&s2_23, &c(9.0)), &x.scale(&s2_13, &m(&c(6.0), &s5))),
        &x.real(s1_real),
    );
    if x.is_zero(&s1) {
        return Err(Error::ClosedFormDegenerate("sigma1 vanishes".into()));
    }
    let r1 = x.sqrt(&s1);
    let s1_14 = x.sqrt(&r1);

    let inner_real = m(&c(27.0), &s6_2)
        .add(&m(&c(72.0), &m(&s5, &s4)), p, RM)
        .add(&m(&c(2.0), &s5_3), p, RM);
    let inner = x.sqrt(&x.add(&x.real(inner_real), &x.scale(&s3, &m(&c(3.0), &sqrt3))));

    // 12 s4 r1 - s5^2 r1 - 9 s2^(2/3) r1 + 3 sqrt6 s6 inner - 12 s5 s2^(1/3) r1
    let r1_coef = x.sub(
        &x.real(m(&c(12.0), &s4).sub(&s5_2, p, RM)),
        &x.add(&x.scale(&s2_23, &c(9.0)), &x.scale(&s2_13, &m(&c(12.0), &s5))),
    );
    let radicand = x.add(&x.mul(&r1_coef, &r1), &x.scale(&inner, &m(&m(&c(3.0), &sqrt6), &s6)));
    let num = x.sqrt(&radicand);

    let six = c(6.0);
    let den1 = x.scale(&x.mul(&s2_16, &s1_14), &six);
    let den2 = x.scale(&s2_16, &six);
    if x.is_zero(&den1) || x.is_zero(&den2) {
        return Err(Error::ClosedFormDegenerate("vanishing denominator".into()));
    }
    let shift = x.real(dv(&d01, &m(&c(4.0), &m(&d02, &w))));
    let g = x.sub(&x.sub(&x.div(&num, &den1), &shift), &x.div(&r1, &den2));
    Ok((to_f64(&g.re), to_f64(&g.im)))
}

pub(crate) fn relative_residual(q: &QuarticInput, g: f64) -> f64 {
    let k = q.kappa_sqrt * q.kappa_sqrt;
    let terms = [q.d00 * g * g, q.d01 * q.omega_t * g.powi(3), q.d02 * (q.omega_t * g).powi(2) * g * g];
    let scale = k.max(terms.iter().sum());
    (k - terms.iter().sum::<f64>()).abs() / scale
}

/// Evaluates the closed form, doubling precision until the result is real,
/// positive and satisfies the quartic.
pub(crate) fn solve(q: &QuarticInput) -> Result<f64> {
    if !(q.d02 > 0.0) {
        return Err(Error::ClosedFormDegenerate("d02 must be positive for a quartic".into()));
    }
    let mut bits = PRECISION_BITS;
    loop {
        let attempt = evaluate(q, bits).and_then(|(re, im)| {
            if !(re > 0.0) || !re.is_finite() {
                return Err(Error::ClosedFormDegenerate(format!("root {re}{im:+}i is not positive")));
            }
            if im.abs() > IMAG_TOL * re {
                return Err(Error::ClosedFormDegenerate(format!("imaginary residue {im} at root {re}")));
            }
            let res = relative_residual(q, re);
            if !(res < RESIDUAL_TOL) {
                return Err(Error::ClosedFormDegenerate(format!("quartic residual {res:e} at root {re}")));
            }
            Ok(re)
        });
        match attempt {
            Ok(g) => return Ok(g),
            Err(e) if bits >= MAX_PRECISION_BITS => return Err(e),
            Err(_) => bits *= 2,
        }
    }
}
