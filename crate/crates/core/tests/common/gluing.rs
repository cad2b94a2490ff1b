//! Newton solve of the edge and Dehn-filling equations directly in the shapes
//! (A, B) of the two ideal tetrahedra, continued in θ from the complete
//! structure A = B = e^{iπ/3}.

use super::{tetrahedron_volume, C64};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

fn ln(z: C64) -> C64 {
    z.ln()
}

/// (H(e) - 2πi, p H(m) + q H(l) - θi) with principal logarithms.
pub fn residual(p: f64, q: f64, theta: f64, a: C64, b: C64) -> [C64; 2] {
    let one = C64::new(1.0, 0.0);
    let a2 = one - one / a;
    let b2 = one - one / b;
    let b1 = one / (one - b);
    let e = ln(a) + 2.0 * ln(a2) + ln(b) + 2.0 * ln(b2) - 2.0 * PI * I;
    let hm = ln(b1) - ln(a2);
    let hl = 2.0 * PI * I - 2.0 * ln(a) - 4.0 * ln(a2);
    [e, p * hm + q * hl - theta * I]
}

fn jacobian(p: f64, q: f64, a: C64, b: C64) -> [[C64; 2]; 2] {
    let one = C64::new(1.0, 0.0);
    // d/dz log z = 1/z, d/dz log(1 - 1/z) = 1/(z(z-1)), d/dz log(1/(1-z)) = 1/(1-z).
    let da = one / a;
    let da2 = one / (a * (a - one));
    let db = one / b;
    let db2 = one / (b * (b - one));
    let db1 = one / (one - b);
    [[da + 2.0 * da2, db + 2.0 * db2], [-p * da2 - 2.0 * q * da - 4.0 * q * da2, p * db1]]
}

/// Shapes with Im A, Im B > 0 solving the gluing equations at cone angle θ.
pub fn solve_shapes(p: i64, q: i64, theta: f64) -> (C64, C64) {
    let (pf, qf) = (p as f64, q as f64);
    let mut a = C64::from_polar(1.0, PI / 3.0);
    let mut b = a;
    let steps = ((theta / 0.02).ceil() as usize).max(1);
    for s in 1..=steps {
        let t = theta * s as f64 / steps as f64;
        for _ in 0..100 {
            let f = residual(pf, qf, t, a, b);
            let j = jacobian(pf, qf, a, b);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let da = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
            let db = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
            a -= da;
            b -= db;
            if da.norm() + db.norm() < 1e-15 {
                break;
            }
        }
    }
    assert!(a.im > 0.0 && b.im > 0.0, "oracle left the geometric branch at θ = {theta}");
    (a, b)
}

/// Volume, meridian and longitude holonomies of the solved shapes.
pub struct OracleGeometry {
    pub a: C64,
    pub b: C64,
    pub vol: f64,
    pub hm: C64,
    pub hl: C64,
}

pub fn oracle_geometry(p: i64, q: i64, theta: f64) -> OracleGeometry {
    let (a, b) = solve_shapes(p, q, theta);
    let one = C64::new(1.0, 0.0);
    let a2 = one - one / a;
    let b1 = one / (one - b);
    OracleGeometry {
        a,
        b,
        vol: tetrahedron_volume(a) + tetrahedron_volume(b),
        hm: ln(b1) - ln(a2),
        hl: 2.0 * PI * I - 2.0 * ln(a) - 4.0 * ln(a2),
    }
}
