mod common;

use common::{lobachevsky_quadrature, C64};
use proptest::prelude::*;
use qvol_core::qinv::q_pochhammer;
use qvol_core::specfun::*;
use qvol_core::Error;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

#[test]
fn principal_log_examples() {
    assert_eq!(principal_log(C64::new(1.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
    assert!(close(principal_log(I).unwrap(), I * PI / 2.0, 1e-16));
    assert!(matches!(principal_log(C64::new(-1.0, 0.0)), Err(Error::Domain(_))));
    assert!(matches!(principal_log(C64::new(0.0, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn dilog_examples() {
    assert_eq!(dilog(C64::new(0.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
    assert!(close(dilog(C64::new(-1.0, 0.0)).unwrap(), C64::new(-PI * PI / 12.0, 0.0), 1e-15));
    let expected = C64::new(PI * PI / 36.0, 2.0 * lobachevsky_quadrature(PI / 6.0));
    assert!(close(dilog(C64::from_polar(1.0, PI / 3.0)).unwrap(), expected, 1e-12));
    assert!(matches!(dilog(C64::new(2.0, 0.0)), Err(Error::Domain(_))));
    // Li2(1) = π^2/6 sits at the end of the cut and is allowed.
    assert!(close(dilog(C64::new(1.0, 0.0)).unwrap(), C64::new(PI * PI / 6.0, 0.0), 1e-14));
}

#[test]
fn dilog_matches_series_near_origin() {
    for z in [C64::new(0.3, 0.1), C64::new(-0.2, 0.4), C64::new(0.0, -0.45)] {
        let series: C64 = (1..200).map(|n| z.powu(n) / (n as f64 * n as f64)).sum();
        assert!(close(dilog(z).unwrap(), series, 1e-15));
    }
}

#[test]
fn lobachevsky_examples() {
    assert_eq!(lobachevsky(0.0), 0.0);
    assert!(lobachevsky(PI / 2.0).abs() < 1e-15);
    let l6 = lobachevsky(PI / 6.0);
    let l3 = lobachevsky(PI / 3.0);
    assert!((l6 - 1.5 * l3).abs() < 1e-12);
    assert!((l6 - lobachevsky_quadrature(PI / 6.0)).abs() < 1e-12);
    assert!((l3 - lobachevsky_quadrature(PI / 3.0)).abs() < 1e-12);
    assert!((lobachevsky_quadrature(PI / 6.0) - 1.5 * lobachevsky_quadrature(PI / 3.0)).abs() < 1e-12);
    // Volume of the figure-eight complement.
    assert!((6.0 * l3 - 2.029883212819307).abs() < 1e-12);
}

#[test]
fn dilog_on_unit_circle_grid() {
    for j in 1..200 {
        let t = PI * j as f64 / 200.0;
        let lhs = dilog(C64::from_polar(1.0, 2.0 * t)).unwrap();
        let rhs = C64::new(PI * PI / 6.0 + t * (t - PI), 2.0 * lobachevsky(t));
        assert!(close(lhs, rhs, 1e-10), "θ = {t}");
    }
}

#[test]
fn lobachevsky_odd_and_periodic_grid() {
    for j in -100..=100 {
        let t = 0.0371 * j as f64;
        assert!((lobachevsky(-t) + lobachevsky(t)).abs() < 1e-12);
        assert!((lobachevsky(t + PI) - lobachevsky(t)).abs() < 1e-12);
    }
}

#[test]
fn precision_mode_bounds() {
    assert_eq!(PrecisionMode::Standard.mantissa_bits(), 53);
    assert!(PrecisionMode::extended(32).is_err());
    assert_eq!(PrecisionMode::extended(128).unwrap().mantissa_bits(), 128);
}

fn fund_residual(r: u32, z: C64) -> f64 {
    let h = PI / r as f64;
    let lhs = C64::new(1.0, 0.0) - (2.0 * I * z).exp();
    let d = quantum_dilog(r, z - h).unwrap() - quantum_dilog(r, z + h).unwrap();
    (lhs - (d * (r as f64 / (4.0 * PI)) * (-I)).exp()).norm()
}

#[test]
fn fundamental_relation() {
    assert!(fund_residual(5, C64::new(PI / 2.0, 0.0)) < 1e-8);
    for r in [5u32, 7, 11] {
        for z in [C64::new(0.9, 0.2), C64::new(2.1, -0.3), C64::new(1.4, 0.0)] {
            assert!(fund_residual(r, z) < 1e-8, "r = {r}, z = {z}");
        }
    }
}

#[test]
fn half_period_relation() {
    for r in [5u32, 7, 11] {
        let h = PI / r as f64;
        for z in [C64::new(0.5 * h, 0.1), C64::new(-0.7 * h, -0.2), C64::new(0.0, 0.3)] {
            let lhs = C64::new(1.0, 0.0) + (r as f64 * I * z).exp();
            let d = quantum_dilog(r, z).unwrap() - quantum_dilog(r, z + PI).unwrap();
            let rhs = (d * (r as f64 / (4.0 * PI)) * (-I)).exp();
            assert!(close(lhs, rhs, 1e-8), "r = {r}, z = {z}");
        }
    }
}

/// (q)_n = exp((r/4πi)(φ_r(π/r) - φ_r(2πn/r + π/r))), compared as exponentials.
#[test]
fn pochhammer_lattice_relation() {
    for r in [5u32, 7, 11] {
        let rf = r as f64;
        let base = quantum_dilog(r, C64::new(PI / rf, 0.0)).unwrap();
        for n in 0..=(r - 2) {
            let z = C64::new(2.0 * PI * n as f64 / rf + PI / rf, 0.0);
            let rhs = ((base - quantum_dilog(r, z).unwrap()) * (rf / (4.0 * PI)) * (-I)).exp();
            let lhs = q_pochhammer(r, n).unwrap();
            assert!(close(lhs, rhs, 1e-8 * lhs.norm().max(1.0)), "r = {r}, n = {n}");
        }
    }
    // r = 7, n = 3: the difference equals (4πi/7) log (q)_3 up to multiples of 2πi·4π/7.
    let d = quantum_dilog(7, C64::new(PI / 7.0, 0.0)).unwrap() - quantum_dilog(7, C64::new(7.0 * PI / 7.0, 0.0)).unwrap();
    let l = q_pochhammer(7, 3).unwrap().ln() * (4.0 * PI * I / 7.0);
    let k = (d - l) / (2.0 * PI * I * 4.0 * PI / 7.0);
    assert!((k.re - k.re.round()).abs() < 1e-9 && k.im.abs() < 1e-9, "k = {k}");
}

/// |φ_r(z) - Li2(e^{2iz}) - 2π^2 e^{2iz}/(3(1-e^{2iz})r^2)| falls like r^{-4}.
#[test]
fn asymptotic_expansion_order() {
    let z = C64::new(PI / 3.0, 0.1);
    let e = (2.0 * I * z).exp();
    let resid = |r: u32| {
        let rf = r as f64;
        (quantum_dilog(r, z).unwrap() - dilog(e).unwrap() - 2.0 * PI * PI * e / (3.0 * (1.0 - e)) / (rf * rf)).norm()
    };
    let ratio = resid(31) / resid(93);
    assert!((70.0..=95.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn derivative_limits() {
    let target = -2.0 * I * 2f64.ln();
    let e31 = (quantum_dilog_prime(31, C64::new(PI / 2.0, 0.0)).unwrap() - target).norm();
    let e93 = (quantum_dilog_prime(93, C64::new(PI / 2.0, 0.0)).unwrap() - target).norm();
    assert!(e31 < 5.0 / (31.0 * 31.0));
    assert!((6.0..=12.0).contains(&(e31 / e93)), "ratio {}", e31 / e93);

    let z = C64::new(PI / 3.0, 0.0);
    let rhs = -2.0 * I * (C64::new(1.0, 0.0) - (2.0 * I * z).exp()).ln();
    let got = quantum_dilog_prime(31, z).unwrap();
    assert!((got.im - rhs.im).abs() < 5.0 / (31.0 * 31.0));
}

#[test]
fn derivative_matches_finite_difference() {
    let h = 1e-5;
    for r in [7u32, 31] {
        for z in [C64::new(0.8, 0.15), C64::new(2.2, -0.1), C64::new(1.5, 0.0)] {
            let fd = (quantum_dilog(r, z + h).unwrap() - quantum_dilog(r, z - h).unwrap()) / (2.0 * h);
            let d = quantum_dilog_prime(r, z).unwrap();
            assert!((d - fd).norm() / d.norm() < 1e-6, "r = {r}, z = {z}");
        }
    }
}

#[test]
fn pole_guard() {
    let qd = QuantumDilog::new(7).unwrap();
    for z in [PI + PI / 7.0, -PI / 7.0, 2.0 * PI + 3.0 * PI / 7.0, -PI - PI / 7.0] {
        assert!(qd.pole_distance(C64::new(z, 0.0)) < 1e-12);
        assert!(matches!(qd.value(C64::new(z, 0.0)), Err(Error::PoleProximity { .. })), "z = {z}");
    }
    assert!(qd.value(C64::new(PI, 0.0)).is_ok());
    assert!(QuantumDilog::new(8).is_err());
}

#[test]
fn table_matches_direct_evaluation() {
    let t = quantum_dilog_table(9).unwrap();
    assert_eq!(t.len(), 9);
    for (j, v) in t.iter().enumerate() {
        let z = C64::new(PI * j as f64 / 9.0, 0.0);
        assert!(close(*v, quantum_dilog(9, z).unwrap(), 1e-12), "j = {j}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn inversion_relation(rho in 0.05f64..20.0, alpha in 0.02f64..(PI - 0.02), lower in any::<bool>()) {
        let z = C64::from_polar(rho, if lower { -alpha } else { alpha });
        let lhs = dilog(C64::new(1.0, 0.0) / z).unwrap() + dilog(z).unwrap() + PI * PI / 6.0
            + 0.5 * principal_log(-z).unwrap().powu(2);
        prop_assert!(lhs.norm() < 1e-12, "z = {}, residual {}", z, lhs.norm());
    }

    #[test]
    fn lobachevsky_symmetries(t in -20.0f64..20.0) {
        prop_assert!((lobachevsky(-t) + lobachevsky(t)).abs() < 1e-12);
        prop_assert!((lobachevsky(t + PI) - lobachevsky(t)).abs() < 1e-12);
        prop_assert!((lobachevsky(t) - lobachevsky_quadrature(t)).abs() < 1e-11);
    }

    #[test]
    fn dilog_conjugate_symmetry(re in -3.0f64..0.9, im in -3.0f64..3.0) {
        let z = C64::new(re, im);
        prop_assert!(close(dilog(z.conj()).unwrap(), dilog(z).unwrap().conj(), 1e-13));
    }
}
