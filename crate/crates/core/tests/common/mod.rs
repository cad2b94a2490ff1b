//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod cyclotomic;
pub mod gluing;

use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;

pub fn rel_gap(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Λ(θ) = -∫_0^θ log|2 sin t| dt by composite Simpson on the regular part.
///
/// θ is folded into [0, π/2] with oddness and π-periodicity; there
/// log|2 sin t| = log t + log(2 sin t / t), the first part integrated exactly.
pub fn lobachevsky_quadrature(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    let mut sign = 1.0;
    if t > PI / 2.0 {
        t = PI - t;
        sign = -1.0;
    }
    if t == 0.0 {
        return 0.0;
    }
    let smooth = |s: f64| if s == 0.0 { 2f64.ln() } else { (2.0 * s.sin() / s).ln() };
    let n = 4000;
    let h = t / n as f64;
    let mut acc = smooth(0.0) + smooth(t);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * smooth(j as f64 * h);
    }
    let regular = acc * h / 3.0;
    let log_part = t * t.ln() - t;
    -sign * (regular + log_part)
}

/// Volume of an ideal tetrahedron with shape z (Im z > 0): Λ(arg z) + Λ(arg z') + Λ(arg z'').
pub fn tetrahedron_volume(z: C64) -> f64 {
    let one = C64::new(1.0, 0.0);
    let z1 = one / (one - z);
    let z2 = one - one / z;
    lobachevsky_quadrature(z.arg()) + lobachevsky_quadrature(z1.arg()) + lobachevsky_quadrature(z2.arg())
}

/// p' and q' with p p' + q q' = 1 and -q < p' ≤ 0, by search.
pub fn inverse_pair_search(p: i64, q: i64) -> (i64, i64) {
    for pp in (-q + 1)..=0 {
        if (1 - p * pp) % q == 0 {
            return (pp, (1 - p * pp) / q);
        }
    }
    panic!("no inverse pair for ({p}, {q})");
}
