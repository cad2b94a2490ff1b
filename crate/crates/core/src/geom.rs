//! Hyperbolic side: the potentials V^±, their critical points, and the cone
//! geometry of the p/q filling with cone angle θ along the core.
//!
//! V^±(x, y) = (-p x^2 ± θ x)/q - 2π x + 4 x y - Li2(e^{-2i(y+x)}) + Li2(e^{2i(y-x)})
//!             - (p'/q + a_0) θ^2/4,
//! with shapes A = e^{2i(y+x)}, B = e^{2i(y-x)} of the two ideal tetrahedra.

use crate::cfrac::{Sign, SurgeryPresentation};
use crate::error::{Error, Result};
use crate::specfun::{dilog, principal_log, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Which of the three squares in (u, v) = (y + x, y - x) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// 0 < u, v < π/2.
    D,
    /// 0 < u < π/2, π < v < 3π/2.
    Dprime,
    /// π < u < 3π/2, 0 < v < π/2.
    Dsecond,
}

impl Region {
    pub fn all() -> [Region; 3] {
        [Region::D, Region::Dprime, Region::Dsecond]
    }

    /// Lower corners (u, v) of the square.
    pub fn origin(self) -> (f64, f64) {
        match self {
            Region::D => (0.0, 0.0),
            Region::Dprime => (0.0, PI),
            Region::Dsecond => (PI, 0.0),
        }
    }
}

/// A region shrunk by δ on every side; membership is tested on real parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub which: Region,
    pub delta: f64,
}

impl RegionSpec {
    pub fn new(which: Region, delta: f64) -> Result<Self> {
        if !(0.0..PI / 4.0).contains(&delta) {
            return Err(Error::InvalidInput(format!("delta = {delta} outside [0, pi/4)")));
        }
        Ok(Self { which, delta })
    }

    pub fn d() -> Self {
        Self { which: Region::D, delta: 0.0 }
    }

    /// Open-square membership of (Re x, Re y).
    pub fn contains_real(&self, x: f64, y: f64) -> bool {
        let (u0, v0) = self.which.origin();
        let (u, v) = (y + x, y - x);
        let inside = |t: f64, lo: f64| t > lo + self.delta && t < lo + PI / 2.0 - self.delta;
        inside(u, u0) && inside(v, v0)
    }

    pub fn contains(&self, x: C64, y: C64) -> bool {
        self.contains_real(x.re, y.re)
    }

    fn check(&self, x: C64, y: C64) -> Result<()> {
        if self.contains(x, y) {
            Ok(())
        } else {
            Err(Error::RegionViolation {
                region: format!("{:?} (delta = {})", self.which, self.delta),
                x: format!("{x}"),
                y: format!("{y}"),
            })
        }
    }
}

fn theta_term(sign: Sign, theta: f64) -> f64 {
    sign.value() * theta
}

fn framing_constant(pres: &SurgeryPresentation, theta: f64) -> f64 {
    (pres.p_prime as f64 / pres.q as f64 + pres.a0 as f64) * theta * theta / 4.0
}

/// V^±(x, y) in the given region.
pub fn potential_v(
    sign: Sign,
    pres: &SurgeryPresentation,
    theta: f64,
    x: C64,
    y: C64,
    region: &RegionSpec,
) -> Result<C64> {
    region.check(x, y)?;
    let (p, q) = (pres.p as f64, pres.q as f64);
    let li_u = dilog((-2.0 * I * (y + x)).exp())?;
    let li_v = dilog((2.0 * I * (y - x)).exp())?;
    Ok((-p * x * x + theta_term(sign, theta) * x) / q - 2.0 * PI * x + 4.0 * x * y - li_u + li_v
        - framing_constant(pres, theta))
}

/// Symmetric form of V^+ on D:
/// (-p/q - 2) x^2 + θx/q - 2y^2 + 2πy - π^2/3 + Li2(e^{2i(y+x)}) + Li2(e^{2i(y-x)}) - (p'/q + a_0)θ^2/4.
///
/// The constant follows from Li2(1/z) = -Li2(z) - π^2/6 - log(-z)^2/2 with log(-e^{2iu}) = 2iu - πi.
pub fn potential_v_symmetric(pres: &SurgeryPresentation, theta: f64, x: C64, y: C64) -> Result<C64> {
    RegionSpec::d().check(x, y)?;
    let (p, q) = (pres.p as f64, pres.q as f64);
    let li_u = dilog((2.0 * I * (y + x)).exp())?;
    let li_v = dilog((2.0 * I * (y - x)).exp())?;
    Ok((-p / q - 2.0) * x * x + theta * x / q - 2.0 * y * y + 2.0 * PI * y - PI * PI / 3.0
        + li_u
        + li_v
        - framing_constant(pres, theta))
}

/// log(1 - e^{-2i(y+x)}) and log(1 - e^{2i(y-x)}).
fn edge_logs(x: C64, y: C64) -> Result<(C64, C64)> {
    let l1 = principal_log(1.0 - (-2.0 * I * (y + x)).exp())?;
    let l2 = principal_log(1.0 - (2.0 * I * (y - x)).exp())?;
    Ok((l1, l2))
}

/// (∂V^±/∂x, ∂V^±/∂y).
pub fn grad_v(sign: Sign, pres: &SurgeryPresentation, theta: f64, x: C64, y: C64) -> Result<[C64; 2]> {
    let (p, q) = (pres.p as f64, pres.q as f64);
    let (l1, l2) = edge_logs(x, y)?;
    let gx = (-2.0 * p * x + theta_term(sign, theta)) / q + 4.0 * y - 2.0 * PI - 2.0 * I * l1 + 2.0 * I * l2;
    let gy = 4.0 * x - 2.0 * I * l1 - 2.0 * I * l2;
    Ok([gx, gy])
}

/// Hessian of V^± (independent of the sign):
/// [[-2p/q - 4 - a - b, b - a], [b - a, -4 - a - b]], a = 4A/(1-A), b = 4B/(1-B).
pub fn hess_v(pres: &SurgeryPresentation, x: C64, y: C64) -> Result<[[C64; 2]; 2]> {
    let (p, q) = (pres.p as f64, pres.q as f64);
    let a_shape = (2.0 * I * (y + x)).exp();
    let b_shape = (2.0 * I * (y - x)).exp();
    let a = 4.0 * a_shape / (1.0 - a_shape);
    let b = 4.0 * b_shape / (1.0 - b_shape);
    let h = [[-2.0 * p / q - 4.0 - a - b, b - a], [b - a, -4.0 - a - b]];
    for row in &h {
        for v in row {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Domain(format!("Hessian is singular at ({x}, {y})")));
            }
        }
    }
    Ok(h)
}

pub fn det2(h: &[[C64; 2]; 2]) -> C64 {
    h[0][0] * h[1][1] - h[0][1] * h[1][0]
}

/// Residuals of the gluing equations for shapes (A, B):
/// log A + 2 log A'' + log B + 2 log B'' - 2πi and
/// p(log B' - log A'') + q(2πi - 2 log A - 4 log A'') - θi.
pub fn gluing_residual(p: i64, q: i64, theta: f64, a: C64, b: C64) -> Result<[C64; 2]> {
    let one = C64::new(1.0, 0.0);
    let log_a = principal_log(a)?;
    let log_b = principal_log(b)?;
    let log_a2 = principal_log(one - 1.0 / a)?;
    let log_b2 = principal_log(one - 1.0 / b)?;
    let log_b1 = principal_log(one / (one - b))?;
    let edge = log_a + 2.0 * log_a2 + log_b + 2.0 * log_b2 - 2.0 * PI * I;
    let fill = p as f64 * (log_b1 - log_a2) + q as f64 * (2.0 * PI * I - 2.0 * log_a - 4.0 * log_a2) - theta * I;
    Ok([edge, fill])
}

/// (x, y) = ((log A - log B)/4i, (log A + log B)/4i).
pub fn critical_from_shapes(a: C64, b: C64) -> Result<(C64, C64)> {
    let la = principal_log(a)?;
    let lb = principal_log(b)?;
    Ok(((la - lb) / (4.0 * I), (la + lb) / (4.0 * I)))
}

/// Solved cone geometry at cone angle θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeGeometry {
    pub p: i64,
    pub q: i64,
    pub a0: i64,
    pub theta: f64,
    /// Critical point of V^+.
    pub x0c: C64,
    pub y0c: C64,
    /// Shapes A = e^{2i(y0+x0)}, B = e^{2i(y0-x0)}.
    pub a: C64,
    pub b: C64,
    /// V^+(x0, y0) = i(Vol + i CS).
    pub critical_value: C64,
    pub vol: f64,
    /// -Re V^+ reduced to [0, π^2).
    pub cs: f64,
    /// -Re V^+ without reduction.
    pub cs_unreduced: f64,
    pub hess: [[C64; 2]; 2],
    pub hess_det: C64,
    pub hm: C64,
    pub hl: C64,
    pub hgamma: C64,
    pub core_length: f64,
    /// Largest modulus of the two gluing-equation residuals.
    pub gluing_residual: f64,
    /// |grad V^+| at the returned point.
    pub grad_norm: f64,
}

/// Logarithmic holonomies of the meridian, longitude and core framing curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holonomies {
    pub hm: C64,
    pub hl: C64,
    pub hgamma: C64,
    pub core_length: f64,
}

/// Hm = 2 x0 i, Hl = (θi - p Hm)/q, Hγ = -q' Hm + p' Hl + a_0 (p Hm + q Hl).
pub fn holonomies_at(pres: &SurgeryPresentation, theta: f64, x0: C64) -> Holonomies {
    let hm = 2.0 * x0 * I;
    let hl = (theta * I - pres.p as f64 * hm) / pres.q as f64;
    let hgamma = -(pres.q_prime as f64) * hm
        + pres.p_prime as f64 * hl
        + pres.a0 as f64 * (pres.p as f64 * hm + pres.q as f64 * hl);
    Holonomies { hm, hl, hgamma, core_length: hgamma.re.abs() }
}

pub fn holonomies(g: &ConeGeometry) -> Holonomies {
    Holonomies { hm: g.hm, hl: g.hl, hgamma: g.hgamma, core_length: g.core_length }
}

/// dH(l)/dH(m) along the edge-equation curve, -(U_xx - V_xy^2/V_yy)/2 with U_xx = V_xx + 2p/q.
pub fn dhl_dhm(pres: &SurgeryPresentation, x: C64, y: C64) -> Result<C64> {
    let h = hess_v(pres, x, y)?;
    let uxx = h[0][0] + 2.0 * pres.p as f64 / pres.q as f64;
    Ok(-(uxx - h[0][1] * h[0][1] / h[1][1]) / 2.0)
}

/// 2(1 - 2e^L - 2e^{-L}) / √(e^{2L} + e^{-2L} - 2e^L - 2e^{-L} - 1), principal root, with L = H(m).
pub fn nz_dhl_dhm(l: C64) -> C64 {
    let e = l.exp();
    let ei = (-l).exp();
    let num = 2.0 * (1.0 - 2.0 * e - 2.0 * ei);
    let den = (e * e + ei * ei - 2.0 * e - 2.0 * ei - 1.0).sqrt();
    num / den
}

/// Newton and continuation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub theta_start: f64,
    pub max_ratio: f64,
    pub min_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-13, max_iter: 50, theta_start: 1e-3, max_ratio: 1.1, min_step: 1e-8 }
    }
}

fn newton(
    sign: Sign,
    pres: &SurgeryPresentation,
    theta: f64,
    start: (C64, C64),
    opts: &SolverOptions,
) -> Result<(C64, C64)> {
    let region = RegionSpec::d();
    let (mut x, mut y) = start;
    for _ in 0..opts.max_iter {
        region.check(x, y)?;
        let g = grad_v(sign, pres, theta, x, y)?;
        let norm = g[0].norm().hypot(g[1].norm());
        if norm < opts.grad_tol {
            return Ok((x, y));
        }
        let h = hess_v(pres, x, y)?;
        let det = det2(&h);
        if det.norm() == 0.0 {
            return Err(Error::Domain("singular Hessian in Newton step".into()));
        }
        let dx = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dy = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
        x -= dx;
        y -= dy;
        // Converged to rounding level.
        if dx.norm().hypot(dy.norm()) < 1e-15 * (1.0 + x.norm() + y.norm()) {
            region.check(x, y)?;
            let g = grad_v(sign, pres, theta, x, y)?;
            if g[0].norm().hypot(g[1].norm()) < opts.grad_tol * 10.0 {
                return Ok((x, y));
            }
        }
    }
    Err(Error::NonConvergence(format!("Newton did not reach |grad| < {} at theta = {theta}", opts.grad_tol)))
}

/// Critical point of V^± at θ by continuation from the complete structure (0, π/6).
pub fn solve_critical_point(
    sign: Sign,
    pres: &SurgeryPresentation,
    theta: f64,
    opts: &SolverOptions,
) -> Result<(C64, C64)> {
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::InvalidInput(format!("theta = {theta} outside (0, 2pi)")));
    }
    let start = (C64::new(0.0, 0.0), C64::new(PI / 6.0, 0.0));
    let first = theta.min(opts.theta_start);
    let mut cur = newton(sign, pres, first, start, opts)
        .map_err(|e| Error::ContinuationFailed { last_good: 0.0, reason: e.to_string() })?;
    let mut t = first;
    let mut prev: Option<(f64, (C64, C64))> = None;
    let mut ratio = opts.max_ratio;
    while t < theta {
        let next = (t * ratio).min(theta);
        if next - t < opts.min_step && next < theta {
            return Err(Error::ContinuationFailed { last_good: t, reason: "step below minimum".into() });
        }
        // Secant predictor in θ.
        let guess = match prev {
            Some((tp, (xp, yp))) => {
                let s = (next - t) / (t - tp);
                (cur.0 + (cur.0 - xp) * s, cur.1 + (cur.1 - yp) * s)
            }
            None => cur,
        };
        let attempt = newton(sign, pres, next, guess, opts).or_else(|_| newton(sign, pres, next, cur, opts));
        match attempt {
            Ok(sol) => {
                prev = Some((t, cur));
                cur = sol;
                t = next;
                ratio = (ratio * ratio).min(opts.max_ratio);
            }
            Err(e) => {
                ratio = ratio.sqrt();
                if (ratio - 1.0) * t < opts.min_step {
                    return Err(Error::ContinuationFailed { last_good: t, reason: e.to_string() });
                }
            }
        }
    }
    Ok(cur)
}

/// Solves the critical equations of V^+ and assembles the cone geometry.
pub fn solve_critical(pres: &SurgeryPresentation, theta: f64) -> Result<ConeGeometry> {
    solve_critical_with(pres, theta, &SolverOptions::default())
}

pub fn solve_critical_with(pres: &SurgeryPresentation, theta: f64, opts: &SolverOptions) -> Result<ConeGeometry> {
    let (x0, y0) = solve_critical_point(Sign::Plus, pres, theta, opts)?;
    geometry_at(pres, theta, x0, y0)
}

fn geometry_at(pres: &SurgeryPresentation, theta: f64, x0: C64, y0: C64) -> Result<ConeGeometry> {
    let a = (2.0 * I * (y0 + x0)).exp();
    let b = (2.0 * I * (y0 - x0)).exp();
    if a.im <= 0.0 || b.im <= 0.0 {
        return Err(Error::NonGeometric(format!("Im A = {}, Im B = {}", a.im, b.im)));
    }
    let critical_value = potential_v(Sign::Plus, pres, theta, x0, y0, &RegionSpec::d())?;
    let hess = hess_v(pres, x0, y0)?;
    let hol = holonomies_at(pres, theta, x0);
    let res = gluing_residual(pres.p, pres.q, theta, a, b)?;
    let g = grad_v(Sign::Plus, pres, theta, x0, y0)?;
    let cs_unreduced = -critical_value.re;
    Ok(ConeGeometry {
        p: pres.p,
        q: pres.q,
        a0: pres.a0,
        theta,
        x0c: x0,
        y0c: y0,
        a,
        b,
        critical_value,
        vol: critical_value.im,
        cs: cs_unreduced.rem_euclid(PI * PI),
        cs_unreduced,
        hess,
        hess_det: det2(&hess),
        hm: hol.hm,
        hl: hol.hl,
        hgamma: hol.hgamma,
        core_length: hol.core_length,
        gluing_residual: res[0].norm().max(res[1].norm()),
        grad_norm: g[0].norm().hypot(g[1].norm()),
    })
}

/// Geometry along an increasing θ grid with shape diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeFamily {
    pub rows: Vec<ConeGeometry>,
    /// vol(θ_{i+1}) < vol(θ_i) for every i.
    pub strictly_decreasing: bool,
    /// Largest second difference of vol over the grid (≤ 0 for concavity).
    pub max_second_difference: f64,
    pub concave: bool,
    /// Smallest Im dH(l)/dH(m) along the grid.
    pub min_im_dhl_dhm: f64,
}

/// Continuation along the grid, each point seeded by its predecessor.
pub fn cone_family(pres: &SurgeryPresentation, grid: &[f64]) -> Result<ConeFamily> {
    cone_family_with(pres, grid, &SolverOptions::default())
}

pub fn cone_family_with(pres: &SurgeryPresentation, grid: &[f64], opts: &SolverOptions) -> Result<ConeFamily> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty theta grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("theta grid must be increasing".into()));
    }
    let mut rows: Vec<ConeGeometry> = Vec::with_capacity(grid.len());
    let mut min_im = f64::INFINITY;
    for &theta in grid {
        let point = match rows.last() {
            Some(g) => {
                // Continue from the previous grid point, falling back to a full sweep.
                continue_from(pres, g.theta, (g.x0c, g.y0c), theta, opts)
                    .or_else(|_| solve_critical_point(Sign::Plus, pres, theta, opts))?
            }
            None => solve_critical_point(Sign::Plus, pres, theta, opts)?,
        };
        let g = geometry_at(pres, theta, point.0, point.1)?;
        min_im = min_im.min(dhl_dhm(pres, g.x0c, g.y0c)?.im);
        rows.push(g);
    }
    let vols: Vec<f64> = rows.iter().map(|g| g.vol).collect();
    let strictly_decreasing = vols.windows(2).all(|w| w[1] < w[0]);
    let max_second_difference = if vols.len() >= 3 {
        vols.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::NEG_INFINITY
    };
    Ok(ConeFamily {
        rows,
        strictly_decreasing,
        max_second_difference,
        concave: max_second_difference <= 0.0,
        min_im_dhl_dhm: min_im,
    })
}

fn continue_from(
    pres: &SurgeryPresentation,
    from: f64,
    start: (C64, C64),
    to: f64,
    opts: &SolverOptions,
) -> Result<(C64, C64)> {
    let mut cur = start;
    let mut t = from;
    let mut h = to - from;
    while t < to {
        let next = (t + h).min(to);
        match newton(Sign::Plus, pres, next, cur, opts) {
            Ok(sol) => {
                cur = sol;
                t = next;
                h *= 2.0;
            }
            Err(e) => {
                h /= 2.0;
                if h < opts.min_step {
                    return Err(Error::ContinuationFailed { last_good: t, reason: e.to_string() });
                }
            }
        }
    }
    Ok(cur)
}
