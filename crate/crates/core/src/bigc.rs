//! Minimal complex arithmetic over `astro_float::BigFloat`.

use astro_float::{BigFloat, Consts, RoundingMode};
use num_complex::Complex64;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Clone)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

/// Precision context: mantissa bits plus cached constants.
pub struct BigCtx {
    pub bits: usize,
    consts: Consts,
}

impl BigCtx {
    pub fn new(bits: u32) -> Self {
        // Work with a whole number of 64-bit words.
        let bits = (bits as usize).div_ceil(64) * 64;
        Self { bits, consts: Consts::new().expect("astro-float constants") }
    }

    pub fn zero(&self) -> BigComplex {
        BigComplex { re: BigFloat::from_i32(0, self.bits), im: BigFloat::from_i32(0, self.bits) }
    }

    pub fn from_i64(&self, v: i64) -> BigComplex {
        BigComplex { re: BigFloat::from_i64(v, self.bits), im: BigFloat::from_i32(0, self.bits) }
    }

    pub fn from_c64(&self, v: Complex64) -> BigComplex {
        BigComplex { re: BigFloat::from_f64(v.re, self.bits), im: BigFloat::from_f64(v.im, self.bits) }
    }

    /// e^{iπ n/d}.
    pub fn root_of_unity(&mut self, n: i64, d: i64) -> BigComplex {
        let p = self.bits;
        let pi = self.consts.pi(p, RM);
        let angle = pi.mul(&BigFloat::from_i64(n, p), p, RM).div(&BigFloat::from_i64(d, p), p, RM);
        BigComplex {
            re: angle.cos(p, RM, &mut self.consts),
            im: angle.sin(p, RM, &mut self.consts),
        }
    }

    /// sin(π n/d).
    pub fn sin_pi(&mut self, n: i64, d: i64) -> BigFloat {
        let p = self.bits;
        let pi = self.consts.pi(p, RM);
        let angle = pi.mul(&BigFloat::from_i64(n, p), p, RM).div(&BigFloat::from_i64(d, p), p, RM);
        angle.sin(p, RM, &mut self.consts)
    }

    /// √(n/d).
    pub fn sqrt_ratio(&self, n: i64, d: i64) -> BigFloat {
        let p = self.bits;
        BigFloat::from_i64(n, p).div(&BigFloat::from_i64(d, p), p, RM).sqrt(p, RM)
    }

    pub fn add(&self, a: &BigComplex, b: &BigComplex) -> BigComplex {
        BigComplex { re: a.re.add(&b.re, self.bits, RM), im: a.im.add(&b.im, self.bits, RM) }
    }

    pub fn sub(&self, a: &BigComplex, b: &BigComplex) -> BigComplex {
        BigComplex { re: a.re.sub(&b.re, self.bits, RM), im: a.im.sub(&b.im, self.bits, RM) }
    }

    pub fn mul(&self, a: &BigComplex, b: &BigComplex) -> BigComplex {
        let p = self.bits;
        let rr = a.re.mul(&b.re, p, RM);
        let ii = a.im.mul(&b.im, p, RM);
        let ri = a.re.mul(&b.im, p, RM);
        let ir = a.im.mul(&b.re, p, RM);
        BigComplex { re: rr.sub(&ii, p, RM), im: ri.add(&ir, p, RM) }
    }

    pub fn scale(&self, a: &BigComplex, s: &BigFloat) -> BigComplex {
        BigComplex { re: a.re.mul(s, self.bits, RM), im: a.im.mul(s, self.bits, RM) }
    }

    pub fn div_real(&self, a: &BigComplex, s: &BigFloat) -> BigComplex {
        BigComplex { re: a.re.div(s, self.bits, RM), im: a.im.div(s, self.bits, RM) }
    }

    pub fn one_minus(&self, a: &BigComplex) -> BigComplex {
        let one = BigFloat::from_i32(1, self.bits);
        BigComplex { re: one.sub(&a.re, self.bits, RM), im: a.im.neg() }
    }
}

pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    format!("{x}").parse().unwrap_or(f64::NAN)
}

pub fn to_c64(z: &BigComplex) -> Complex64 {
    Complex64::new(to_f64(&z.re), to_f64(&z.im))
}
