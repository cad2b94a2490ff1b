//! Principal logarithm, dilogarithm, Lobachevsky function and the quantum
//! dilogarithm `phi_r` together with its derivative.

use crate::error::{Error, Result};
use crate::quad::gl32;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);
const PI2_6: f64 = PI * PI / 6.0;

/// Arithmetic used by a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PrecisionMode {
    /// IEEE binary64.
    #[default]
    Standard,
    /// Software floating point with the given mantissa width (at least 64 bits).
    Extended { bits: u32 },
}

impl PrecisionMode {
    pub fn extended(bits: u32) -> Result<Self> {
        if bits < 64 {
            return Err(Error::InvalidInput(format!(
                "extended precision needs at least 64 mantissa bits, got {bits}"
            )));
        }
        Ok(PrecisionMode::Extended { bits })
    }

    pub fn mantissa_bits(&self) -> u32 {
        match self {
            PrecisionMode::Standard => 53,
            PrecisionMode::Extended { bits } => *bits,
        }
    }

    /// Decimal digits carried by the mantissa.
    pub fn digits(&self) -> f64 {
        self.mantissa_bits() as f64 * std::f64::consts::LOG10_2
    }
}

fn check_finite(z: C64, what: &str) -> Result<C64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Domain(format!("{what} produced a non-finite value")))
    }
}

/// Principal logarithm with arg in (-pi, pi); the cut (-inf, 0] is rejected.
pub fn principal_log(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("log of non-finite {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::Domain(format!("log({z}) lies on the branch cut")));
    }
    Ok(z.ln())
}

// B_n / (n+1)! for even n >= 2.
const LI2_BERNOULLI: [f64; 20] = [
    2.777_777_777_777_778e-2,
    -2.777_777_777_777_778e-4,
    4.724_111_866_969_01e-6,
    -9.185_773_074_661_964e-8,
    1.897_886_998_897_1e-9,
    -4.064_761_645_144_225_5e-11,
    8.921_691_020_456_452e-13,
    -1.993_929_586_072_107_6e-14,
    4.518_980_029_619_918e-16,
    -1.035_651_761_218_124_7e-17,
    2.395_218_621_026_186_7e-19,
    -5.581_785_874_325_009e-21,
    1.309_150_755_418_321_3e-22,
    -3.087_419_802_426_740_3e-24,
    7.315_975_652_702_203e-26,
    -1.740_845_657_234_001e-27,
    4.157_635_644_613_9e-29,
    -9.962_148_488_284_622e-31,
    2.394_034_424_896_165_3e-32,
    -5.768_347_355_367_39e-34,
];

// |B_2k| / (2k (2k+1)!) for k >= 1.
const CL2_COEFFS: [f64; 30] = [
    1.388_888_888_888_889e-2,
    6.944_444_444_444_444e-5,
    7.873_519_778_281_683e-7,
    1.148_221_634_332_745_4e-8,
    1.897_886_998_897_1e-10,
    3.387_301_370_953_521e-12,
    6.372_636_443_183_181e-14,
    1.246_205_991_295_067_2e-15,
    2.510_544_460_899_954_6e-17,
    5.178_258_806_090_623e-19,
    1.088_735_736_830_084_9e-20,
    2.325_744_114_302_087e-22,
    5.035_195_213_147_39e-24,
    1.102_649_929_438_121_5e-25,
    2.438_658_550_900_734_5e-27,
    5.440_142_678_856_253e-29,
    1.222_834_013_121_735_2e-30,
    2.767_263_468_967_951e-32,
    6.300_090_591_832_014e-34,
    1.442_086_838_841_847_5e-35,
    3.317_093_999_159_542_8e-37,
    7.663_913_557_920_658e-39,
    1.777_871_473_383_065_8e-40,
    4.139_605_898_234_137_3e-42,
    9.671_557_036_081_102e-44,
    2.266_718_701_676_612_4e-45,
    5.327_956_311_328_254e-47,
    1.255_724_838_956_433_6e-48,
    2.967_000_542_247_094e-50,
    7.026_787_317_600_742e-52,
];

fn li2_power_series(z: C64) -> C64 {
    let mut term = z;
    let mut acc = C64::new(0.0, 0.0);
    for n in 1..200 {
        let nf = n as f64;
        let t = term / (nf * nf);
        acc += t;
        if t.norm() < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
        term *= z;
    }
    acc
}

// Series in u = -log(1 - z); converges for |u| < 2 pi and is fast for
// |z| <= 1, Re z <= 1/2 where |u| <= pi/3 + small.
fn li2_bernoulli_series(z: C64) -> C64 {
    let u = -(C64::new(1.0, 0.0) - z).ln();
    let u2 = u * u;
    let mut acc = u - u2 * 0.25;
    let mut pow = u2 * u;
    for c in LI2_BERNOULLI {
        let t = pow * c;
        acc += t;
        if t.norm() < 1e-18 * acc.norm() {
            break;
        }
        pow *= u2;
    }
    acc
}

fn li2_unit_disk(z: C64) -> C64 {
    if z.norm() <= 0.5 {
        return li2_power_series(z);
    }
    if z.re <= 0.5 {
        return li2_bernoulli_series(z);
    }
    // Reflection: Li2(z) = -Li2(1-z) + pi^2/6 - log z log(1-z); 1-z is again in the disk.
    let w = C64::new(1.0, 0.0) - z;
    let lw = if w.norm() <= 0.5 {
        li2_power_series(w)
    } else {
        li2_bernoulli_series(w)
    };
    -lw + PI2_6 - z.ln() * w.ln()
}

/// The dilogarithm Li2 on C minus (1, inf).
pub fn dilog(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("Li2 of non-finite {z}")));
    }
    if z.im == 0.0 && z.re > 1.0 {
        return Err(Error::Domain(format!("Li2({z}) lies on the branch cut (1, inf)")));
    }
    if z.norm_sqr() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if z == C64::new(1.0, 0.0) {
        return Ok(C64::new(PI2_6, 0.0));
    }
    let v = if z.norm() <= 1.0 {
        li2_unit_disk(z)
    } else {
        let l = (-z).ln();
        -li2_unit_disk(z.inv()) - PI2_6 - 0.5 * l * l
    };
    check_finite(v, "Li2")
}

/// Clausen function Cl2(x) = -int_0^x log|2 sin(t/2)| dt for |x| <= pi.
fn clausen_reduced(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut acc = x - x * x.abs().ln();
    let mut pow = x * x2;
    for c in CL2_COEFFS {
        let t = c * pow;
        acc += t;
        if t.abs() < 1e-18 * acc.abs() {
            break;
        }
        pow *= x2;
    }
    acc
}

/// Lobachevsky function Λ(θ) = -∫_0^θ log|2 sin t| dt; odd and pi-periodic.
pub fn lobachevsky(theta: f64) -> f64 {
    if !theta.is_finite() {
        return f64::NAN;
    }
    let mut t = theta - PI * (theta / PI).round();
    if t > 0.5 * PI {
        t -= PI;
    } else if t < -0.5 * PI {
        t += PI;
    }
    0.5 * clausen_reduced(2.0 * t)
}

/// Faddeev-type quantum dilogarithm φ_r at an odd level r.
///
/// Inside the strip -π/r < Re z < π + π/r the value is the contour integral
/// (4πi/r) ∫_Ω e^{(2z-π)x} / (4x sinh(πx) sinh(2πx/r)) dx, with Ω the real line
/// indented by the upper semicircle of radius 1/2. Outside the strip the
/// finite-product relation shifts the argument back into [0, π].
#[derive(Debug, Clone)]
pub struct QuantumDilog {
    r: u32,
    tol: f64,
    max_panels: usize,
    guard: f64,
}

const SEMICIRCLE_RADIUS: f64 = 0.5;
const SEMICIRCLE_PANELS: usize = 4;

impl QuantumDilog {
    pub fn new(r: u32) -> Result<Self> {
        if r < 3 || r.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("r must be odd and >= 3, got {r}")));
        }
        Ok(Self {
            r,
            tol: 1e-17,
            max_panels: 1 << 22,
            guard: 10.0 * f64::EPSILON.sqrt(),
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Absolute truncation tolerance for the real tails.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Distance from z to the nearest pole (a+1)π + bπ/r or -aπ - bπ/r, b odd.
    pub fn pole_distance(&self, z: C64) -> f64 {
        let r = self.r as f64;
        let step = PI / r;
        // Poles at base + b*step for odd b >= 1, with bases first, first + π, ...
        let nearest = |s: f64, first: f64| -> f64 {
            let mut best = f64::INFINITY;
            let amax = ((s - first) / PI).floor().max(0.0) as i64 + 1;
            for a in 0..=amax {
                let base = first + a as f64 * PI;
                let t = (s - base) / step;
                let b = (2.0 * ((t - 1.0) / 2.0).round() + 1.0).max(1.0);
                best = best.min((s - (base + b * step)).abs());
            }
            best
        };
        let dr = nearest(z.re, PI).min(nearest(-z.re, 0.0));
        dr.hypot(z.im)
    }

    fn guard_pole(&self, z: C64) -> Result<()> {
        let d = self.pole_distance(z);
        if d < self.guard {
            return Err(Error::PoleProximity { z: format!("{z}"), distance: d });
        }
        Ok(())
    }

    /// φ_r(z).
    pub fn value(&self, z: C64) -> Result<C64> {
        self.eval(z, false)
    }

    /// φ_r'(z).
    pub fn derivative(&self, z: C64) -> Result<C64> {
        self.eval(z, true)
    }

    fn eval(&self, z: C64, deriv: bool) -> Result<C64> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("phi_r of non-finite {z}")));
        }
        self.guard_pole(z)?;
        let r = self.r as f64;
        let shift = 2.0 * PI / r;
        let pref = I * (4.0 * PI / r);
        if z.re > PI {
            let n = ((z.re - PI) / shift).ceil() as usize;
            let w = z - shift * n as f64;
            let mut acc = self.strip(w, deriv)?;
            for k in 1..=n {
                let e = (2.0 * I * (z - (2 * k - 1) as f64 * PI / r)).exp();
                acc -= pref * log_factor(e, deriv)?;
            }
            check_finite(acc, "phi_r")
        } else if z.re < 0.0 {
            let n = ((-z.re) / shift).ceil() as usize;
            let w = z + shift * n as f64;
            let mut acc = self.strip(w, deriv)?;
            for k in 1..=n {
                let e = (2.0 * I * (w - (2 * k - 1) as f64 * PI / r)).exp();
                acc += pref * log_factor(e, deriv)?;
            }
            check_finite(acc, "phi_r")
        } else {
            check_finite(self.strip(z, deriv)?, "phi_r")
        }
    }

    // Contour integral, valid for -π/r < Re z < π + π/r.
    fn strip(&self, z: C64, deriv: bool) -> Result<C64> {
        let r = self.r as f64;
        let g = gl32();
        let eps = SEMICIRCLE_RADIUS;
        let two_z = 2.0 * z;
        let kx = two_z - 2.0 * PI - 2.0 * PI / r;
        let kmx = -two_z - 2.0 * PI / r;
        let c = PI + 2.0 * PI / r - (2.0 * z.re - PI).abs();
        if c <= 0.0 {
            return Err(Error::Domain(format!("{z} is outside the integration strip")));
        }

        // Semicircle x = eps e^{it}, t from π to 0.
        let integrand = |x: C64| -> C64 {
            let v = ((two_z - PI) * x).exp() / (4.0 * x * (PI * x).sinh() * (2.0 * PI * x / r).sinh());
            if deriv {
                v * 2.0 * x
            } else {
                v
            }
        };
        let mut semi = C64::new(0.0, 0.0);
        let width = PI / SEMICIRCLE_PANELS as f64;
        for p in 0..SEMICIRCLE_PANELS {
            let a = p as f64 * width;
            semi += g.integrate(a, a + width, |t| {
                let x = C64::from_polar(eps, t);
                integrand(x) * I * x
            });
        }
        let semi = -semi;

        // Real tails folded onto [eps, T]: f(x) + f(-x), written with decaying exponentials.
        let tail = |x: f64| -> C64 {
            let d = x * (1.0 - (-2.0 * PI * x).exp()) * (1.0 - (-4.0 * PI * x / r).exp());
            let a = (kx * x).exp();
            let b = (kmx * x).exp();
            if deriv {
                (a + b) * (2.0 * x) / d
            } else {
                (a - b) / d
            }
        };
        let mut tails = C64::new(0.0, 0.0);
        let mut panel = 0usize;
        loop {
            let a = eps + panel as f64;
            let b = a + 1.0;
            tails += g.integrate(a, b, tail);
            panel += 1;
            let d = (1.0 - (-2.0 * PI * b).exp()) * (1.0 - (-4.0 * PI * b / r).exp());
            let mut bound = (-c * b).exp() / (c * b * d);
            if deriv {
                bound *= 2.0 * b + 2.0 / c;
            }
            if bound < self.tol {
                break;
            }
            if panel >= self.max_panels {
                return Err(Error::NonConvergence(format!(
                    "tail bound {bound:e} not met for z = {z} after {panel} panels"
                )));
            }
        }
        Ok(I * (4.0 * PI / r) * (semi + tails))
    }
}

// log(1 - e) or its z-derivative factor d/dz log(1 - e^{2iz}) = -2i e / (1 - e).
fn log_factor(e: C64, deriv: bool) -> Result<C64> {
    let one_minus = C64::new(1.0, 0.0) - e;
    if deriv {
        Ok(-2.0 * I * e / one_minus)
    } else {
        principal_log(one_minus)
    }
}

/// φ_r(z) at level r.
pub fn quantum_dilog(r: u32, z: C64) -> Result<C64> {
    QuantumDilog::new(r)?.value(z)
}

/// φ_r'(z) at level r.
pub fn quantum_dilog_prime(r: u32, z: C64) -> Result<C64> {
    QuantumDilog::new(r)?.derivative(z)
}

/// Values φ_r(πj/r) for j = 0..r-1, computed concurrently.
pub fn quantum_dilog_table(r: u32) -> Result<Vec<C64>> {
    use rayon::prelude::*;
    let qd = QuantumDilog::new(r)?;
    (0..r)
        .into_par_iter()
        .map(|j| qd.value(C64::new(PI * j as f64 / r as f64, 0.0)))
        .collect()
}
