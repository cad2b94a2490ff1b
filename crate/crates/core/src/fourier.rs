//! Poisson summation side: the bump function ψ, the discrete potential V_r^±,
//! lattice summands g_r^±, quadrature Fourier coefficients, the leading-term
//! prediction and end-to-end asymptotic reports.

use crate::cfrac::{Sign, SurgeryPresentation};
use crate::error::{Error, Result};
use crate::geom::{self, ConeGeometry, Region, RegionSpec};
use crate::qinv::{self, choose_color, ColorBranch, ColorParameters, RtOptions, SumMode};
use crate::quad::gl16;
use crate::specfun::{lobachevsky, QuantumDilog, C64};
use crate::sum::{pairwise_sum, par_pairwise_sum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const I: C64 = C64::new(0.0, 1.0);

/// Default collar parameter δ.
pub const DEFAULT_DELTA: f64 = 0.15;

/// Smooth bump parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub delta: f64,
    pub r: u32,
}

impl BumpSpec {
    pub fn new(delta: f64, r: u32) -> Result<Self> {
        if !(delta > 0.0 && delta < PI / 8.0) {
            return Err(Error::InvalidInput(format!("delta = {delta} outside (0, pi/8)")));
        }
        if r < 3 || r.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("r must be odd and >= 3, got {r}")));
        }
        Ok(Self { delta, r })
    }
}

fn mollifier(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for s ≤ 0, 1 for s ≥ 1.
pub fn smoothstep(s: f64) -> f64 {
    let a = mollifier(s);
    let b = mollifier(1.0 - s);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// 1 on [lo + w, hi - w], 0 outside (lo, hi), smooth in between.
fn window(t: f64, lo: f64, hi: f64, w: f64) -> f64 {
    smoothstep((t - lo) / w) * smoothstep((hi - t) / w)
}

/// ψ(x_1, .., x_k, y). `xs` holds x_1..x_k.
pub fn bump_psi(spec: &BumpSpec, xs: &[f64], y: f64) -> f64 {
    let Some((&x, interior)) = xs.split_last() else {
        return 0.0;
    };
    let collar = 2.0 * PI / spec.r as f64;
    let mut v: f64 = interior.iter().map(|&t| window(t, -PI, PI, collar)).product();
    if v == 0.0 {
        return 0.0;
    }
    v *= bump_uv(spec.delta, x, y);
    v
}

/// The (x_k, y) factor: a sum over the three squares of products of windows in u and v.
fn bump_uv(delta: f64, x: f64, y: f64) -> f64 {
    let (u, v) = (y + x, y - x);
    let w = delta / 2.0;
    Region::all()
        .iter()
        .map(|reg| {
            let (u0, v0) = reg.origin();
            window(u, u0, u0 + PI / 2.0, w) * window(v, v0, v0 + PI / 2.0, w)
        })
        .sum()
}

/// ε(x, y) of the lattice sum (boundaries at 0 included).
pub fn epsilon(x: f64, y: f64) -> f64 {
    qinv::epsilon_region(x, y) as f64
}

/// Chebyshev interpolant of a complex function on [a, b].
#[derive(Debug, Clone)]
struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<C64>,
}

impl Chebyshev {
    fn fit(a: f64, b: f64, n: usize, f: impl Fn(f64) -> Result<C64> + Sync) -> Result<Self> {
        let nodes: Vec<f64> = (0..n).map(|j| (PI * (j as f64 + 0.5) / n as f64).cos()).collect();
        let values: Vec<C64> = nodes
            .par_iter()
            .map(|&t| f(0.5 * (a + b) + 0.5 * (b - a) * t))
            .collect::<Result<_>>()?;
        let coeffs = (0..n)
            .map(|k| {
                let s: C64 = (0..n)
                    .map(|j| values[j] * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                    .sum();
                s * (if k == 0 { 1.0 } else { 2.0 } / n as f64)
            })
            .collect();
        Ok(Self { a, b, coeffs })
    }

    fn eval(&self, x: f64) -> C64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let mut b1 = C64::new(0.0, 0.0);
        let mut b2 = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + t * b1 - b2
    }
}

/// φ_r with a Chebyshev interpolant on the real interval reached from 𝒟.
#[derive(Debug, Clone)]
pub struct PhiEvaluator {
    qd: QuantumDilog,
    cheb: Chebyshev,
}

const CHEB_NODES: usize = 192;

impl PhiEvaluator {
    pub fn new(r: u32) -> Result<Self> {
        let qd = QuantumDilog::new(r)?;
        let h = PI / (2.0 * r as f64);
        let q2 = qd.clone();
        let cheb = Chebyshev::fit(h, PI - h, CHEB_NODES, move |t| q2.value(C64::new(t, 0.0)))?;
        Ok(Self { qd, cheb })
    }

    pub fn r(&self) -> u32 {
        self.qd.r()
    }

    /// φ_r(z); real arguments inside the fitted interval use the interpolant.
    pub fn value(&self, z: C64) -> Result<C64> {
        if z.im == 0.0 && z.re >= self.cheb.a && z.re <= self.cheb.b {
            Ok(self.cheb.eval(z.re))
        } else {
            self.qd.value(z)
        }
    }

    /// Direct contour evaluation.
    pub fn exact(&self, z: C64) -> Result<C64> {
        self.qd.value(z)
    }
}

/// Arguments (z1, z2) of -φ_r(z1) + φ_r(z2) in each square, with u = y + x, v = y - x.
fn phi_arguments(region: Region, r: f64, x: C64, y: C64) -> (C64, C64) {
    let shift = PI / r;
    match region {
        Region::D => (PI - y - x - shift, y - x + shift),
        Region::Dprime => (PI - y - x - shift, y - x - PI + shift),
        Region::Dsecond => (2.0 * PI - y - x - shift, y - x + shift),
    }
}

/// V_r^±(x, y) = (-p x^2 ± θ x)/q - 2πx + 4xy - φ_r(z1) + φ_r(z2) - (p'/q + a_0)θ^2/4,
/// which tends to `geom::potential_v` with the same sign as r → ∞.
pub fn vr_potential(
    sign: Sign,
    pres: &SurgeryPresentation,
    theta: f64,
    phi: &PhiEvaluator,
    x: C64,
    y: C64,
    region: &RegionSpec,
) -> Result<C64> {
    if !region.contains(x, y) {
        return Err(Error::RegionViolation {
            region: format!("{:?} (delta = {})", region.which, region.delta),
            x: format!("{x}"),
            y: format!("{y}"),
        });
    }
    let (p, q) = (pres.p as f64, pres.q as f64);
    let (z1, z2) = phi_arguments(region.which, phi.r() as f64, x, y);
    let c = (pres.p_prime as f64 / q + pres.a0 as f64) * theta * theta / 4.0;
    Ok((-p * x * x + sign.value() * theta * x) / q - 2.0 * PI * x + 4.0 * x * y - phi.value(z1)? + phi.value(z2)? - c)
}

/// The r → ∞ expansion V^± - 2πi(log(1 - e^{-2i(y+x)}) + log(1 - e^{2i(y-x)}))/r.
pub fn vr_first_order(
    sign: Sign,
    pres: &SurgeryPresentation,
    theta: f64,
    r: u32,
    x: C64,
    y: C64,
    region: &RegionSpec,
) -> Result<C64> {
    let v = geom::potential_v(sign, pres, theta, x, y, region)?;
    let l1 = (1.0 - (-2.0 * I * (y + x)).exp()).ln();
    let l2 = (1.0 - (2.0 * I * (y - x)).exp()).ln();
    Ok(v - 2.0 * PI * I * (l1 + l2) / r as f64)
}

fn lattice_region(x: f64, y: f64) -> Option<Region> {
    let (u, v) = (y + x, y - x);
    let low = |t: f64| (0.0..PI).contains(&t);
    let high = |t: f64| t > PI && t < 2.0 * PI;
    if low(u) && low(v) {
        Some(Region::D)
    } else if low(u) && high(v) {
        Some(Region::Dprime)
    } else if high(u) && low(v) {
        Some(Region::Dsecond)
    } else {
        None
    }
}

/// Exponent V_r^± of the lattice summand at (x_1..x_k, y) with x_0 from the color:
/// ±2x_0x_1 - Σ a_i x_i^2 - Σ 2x_i x_{i+1} - 2πx_k + 4x_k y - φ_r(z1) + φ_r(z2).
pub fn vr_lattice(
    sign: Sign,
    pres: &SurgeryPresentation,
    x0: f64,
    phi: &PhiEvaluator,
    xs: &[f64],
    y: f64,
) -> Result<Option<C64>> {
    let k = pres.k();
    if xs.len() != k {
        return Err(Error::InvalidInput(format!("expected {k} coordinates, got {}", xs.len())));
    }
    let xk = xs[k - 1];
    let Some(region) = lattice_region(xk, y) else {
        return Ok(None);
    };
    let mut quad = pres.a0 as f64 * x0 * x0;
    for i in 0..k {
        quad += pres.a[i] as f64 * xs[i] * xs[i];
        if i + 1 < k {
            quad += 2.0 * xs[i] * xs[i + 1];
        }
    }
    let (z1, z2) = phi_arguments(region, phi.r() as f64, C64::new(xk, 0.0), C64::new(y, 0.0));
    let v = sign.value() * 2.0 * x0 * xs[0] - quad - 2.0 * PI * xk + 4.0 * xk * y - phi.value(z1)? + phi.value(z2)?;
    Ok(Some(C64::new(v.re, v.im)))
}

/// g_r^±(m_1..m_k, m) = ε e^{-x_k i + (r/4πi) V_r^±} at x_i = 2πm_i/r, y = 2πm/r.
pub fn g_summand(
    sign: Sign,
    pres: &SurgeryPresentation,
    m0: u32,
    phi: &PhiEvaluator,
    xs: &[f64],
    y: f64,
) -> Result<C64> {
    let r = phi.r();
    let c = ColorParameters::new(r, m0)?;
    let xk = *xs.last().ok_or_else(|| Error::InvalidInput("empty coordinates".into()))?;
    let eps = epsilon(xk, y);
    if eps == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    match vr_lattice(sign, pres, c.x0, phi, xs, y)? {
        Some(v) => Ok(eps * (-I * xk + v * (r as f64 / (4.0 * PI)) * (-I)).exp()),
        None => Ok(C64::new(0.0, 0.0)),
    }
}

/// Σ over the finite lattice of g^+ + g^-; κ_r times this is RT_r.
pub fn lattice_sum(pres: &SurgeryPresentation, r: u32, m0: u32) -> Result<C64> {
    let phi = PhiEvaluator::new(r)?;
    let k = pres.k();
    let rf = r as f64;
    let half = (r as i64 - 2) as f64 / 2.0;
    let n = (r - 1) as usize;
    let coord = |i: usize| -> f64 { i as f64 - half };
    let total = n.pow(k as u32);
    let terms: Vec<C64> = (0..total)
        .into_par_iter()
        .map(|idx| -> Result<C64> {
            let mut ms = vec![0.0; k];
            let mut t = idx;
            for slot in ms.iter_mut().rev() {
                *slot = coord(t % n);
                t /= n;
            }
            let mk = ms[k - 1];
            let xs: Vec<f64> = ms.iter().map(|&m| 2.0 * PI * m / rf).collect();
            let mut acc = Vec::new();
            let mut m = mk.abs();
            while m <= half + 1e-9 {
                let y = 2.0 * PI * m / rf;
                for s in Sign::both() {
                    acc.push(g_summand(s, pres, m0, &phi, &xs, y)?);
                }
                m += 1.0;
            }
            Ok(pairwise_sum(&acc))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(par_pairwise_sum(&terms))
}

/// Quadrature settings for the Fourier integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub delta: f64,
    /// Relative change between successive refinements at which to stop.
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Largest allowed phase change (r/4π)|ΔRe V| across a panel.
    pub max_phase: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA, rel_tol: 1e-9, max_panels: 1 << 22, max_phase: PI / 2.0 }
    }
}

/// Splits [lo, hi] into pieces, refining the outer collars of width w separately.
fn axis_breaks(lo: f64, hi: f64, w: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let push_uniform = |out: &mut Vec<f64>, a: f64, b: f64, m: usize| {
        for j in 0..m {
            out.push(a + (b - a) * j as f64 / m as f64);
        }
    };
    if w > 0.0 {
        push_uniform(&mut out, lo, lo + w, n);
        push_uniform(&mut out, lo + w, hi - w, n);
        push_uniform(&mut out, hi - w, hi, n);
    } else {
        push_uniform(&mut out, lo, hi, n);
    }
    out.push(hi);
    out
}

/// ∫∫ over a (u, v) rectangle of f(x, y) e^{iω(a x + b y)} dx dy for each (a, b),
/// with tensor GL16 panels.
fn integrate_square<F>(ub: &[f64], vb: &[f64], omega: f64, freqs: &[(i64, i64)], f: &F) -> Result<Vec<C64>>
where
    F: Fn(f64, f64) -> Result<C64> + Sync,
{
    let g = gl16();
    let nmax = freqs.iter().map(|&(a, b)| a.abs().max(b.abs())).max().unwrap_or(0);
    let rows: Vec<Vec<C64>> = (0..ub.len() - 1)
        .into_par_iter()
        .map(|i| -> Result<Vec<C64>> {
            let (ua, uc) = (ub[i], ub[i + 1]);
            let mut cells: Vec<Vec<C64>> = vec![Vec::with_capacity(vb.len()); freqs.len()];
            let mut terms: Vec<Vec<C64>> = vec![Vec::with_capacity(g.order() * g.order()); freqs.len()];
            for j in 0..vb.len() - 1 {
                let (va, vc) = (vb[j], vb[j + 1]);
                terms.iter_mut().for_each(Vec::clear);
                for (&tu, &wu) in g.nodes().iter().zip(g.weights()) {
                    let u = 0.5 * (ua + uc) + 0.5 * (uc - ua) * tu;
                    for (&tv, &wv) in g.nodes().iter().zip(g.weights()) {
                        let v = 0.5 * (va + vc) + 0.5 * (vc - va) * tv;
                        let (x, y) = ((u - v) / 2.0, (u + v) / 2.0);
                        let base = f(x, y)? * (wu * wv);
                        if base == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let ex = powers(C64::from_polar(1.0, omega * x), nmax);
                        let ey = powers(C64::from_polar(1.0, omega * y), nmax);
                        for (slot, &(a, b)) in terms.iter_mut().zip(freqs) {
                            slot.push(base * ex[(a + nmax) as usize] * ey[(b + nmax) as usize]);
                        }
                    }
                }
                // dx dy = du dv / 2.
                let jac = 0.25 * (uc - ua) * (vc - va) * 0.5;
                for (cell, t) in cells.iter_mut().zip(&terms) {
                    cell.push(pairwise_sum(t) * jac);
                }
            }
            Ok(cells.iter().map(|c| pairwise_sum(c)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..freqs.len())
        .map(|j| pairwise_sum(&rows.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .collect())
}

/// z^{-n}, .., z^{n}.
fn powers(z: C64, n: i64) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0); (2 * n + 1) as usize];
    let zi = z.conj();
    for j in 1..=n as usize {
        out[n as usize + j] = out[n as usize + j - 1] * z;
        out[n as usize - j] = out[n as usize - j + 1] * zi;
    }
    out
}

/// Largest phase step (r/4π)|ΔRe V| between neighbouring break points.
fn max_phase_step<V>(ub: &[f64], vb: &[f64], r: f64, v: &V) -> Result<f64>
where
    V: Fn(f64, f64) -> Result<Option<C64>> + Sync,
{
    let vals: Vec<Vec<Option<f64>>> = ub
        .par_iter()
        .map(|&u| {
            vb.iter()
                .map(|&w| v((u - w) / 2.0, (u + w) / 2.0).map(|o| o.map(|z| z.re)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 0..ub.len() {
        for j in 0..vb.len() {
            let Some(a) = vals[i][j] else { continue };
            if i + 1 < ub.len() {
                if let Some(b) = vals[i + 1][j] {
                    worst = worst.max((b - a).abs());
                }
            }
            if j + 1 < vb.len() {
                if let Some(b) = vals[i][j + 1] {
                    worst = worst.max((b - a).abs());
                }
            }
        }
    }
    Ok(worst * r / (4.0 * PI))
}

/// Adaptive integrals over the three squares, each shrunk by `shrink`, with collars `w`,
/// for every frequency pair (a, b) of e^{iω(a x + b y)}; refinement stops when no coefficient moves by more than
/// `rel_tol` times the largest one.
#[allow(clippy::too_many_arguments)]
fn integrate_domain<F, V>(
    regions: &[Region],
    r: f64,
    omega: f64,
    shrink: f64,
    w: f64,
    spec: &QuadratureSpec,
    freqs: &[(i64, i64)],
    f: &F,
    phase: &V,
) -> Result<Vec<C64>>
where
    F: Fn(f64, f64) -> Result<C64> + Sync,
    V: Fn(f64, f64) -> Result<Option<C64>> + Sync,
{
    let mut n = 1usize;
    let mut prev: Option<Vec<C64>> = None;
    loop {
        let mut per_square = Vec::new();
        let mut worst = 0.0f64;
        let mut panels = 0usize;
        for reg in regions {
            let (u0, v0) = reg.origin();
            let ub = axis_breaks(u0 + shrink, u0 + PI / 2.0 - shrink, w, n);
            let vb = axis_breaks(v0 + shrink, v0 + PI / 2.0 - shrink, w, n);
            panels += (ub.len() - 1) * (vb.len() - 1);
            worst = worst.max(max_phase_step(&ub, &vb, r, phase)?);
            per_square.push(integrate_square(&ub, &vb, omega, freqs, f)?);
        }
        let values: Vec<C64> = (0..freqs.len())
            .map(|j| pairwise_sum(&per_square.iter().map(|s| s[j]).collect::<Vec<_>>()))
            .collect();
        if worst < spec.max_phase {
            if let Some(p) = &prev {
                let scale = values.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
                let change = values.iter().zip(p).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                if change <= spec.rel_tol * scale {
                    return Ok(values);
                }
            }
            prev = Some(values);
        }
        n *= 2;
        if panels * 4 > spec.max_panels {
            return Err(Error::Resolution(format!(
                "no convergence with {panels} panels (phase step {worst:.3})"
            )));
        }
    }
}

/// F̂^±(k0, k1, k2) = ∫_{𝒟_{δ/2}} exp((r/4πi)(V_r^± - 4k0πx/q - 4k1πx - 4k2πy)) dx dy,
/// the real constant C omitted.
pub fn fourier_coefficient(
    pres: &SurgeryPresentation,
    theta: f64,
    r: u32,
    indices: (i64, i64, i64),
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let phi = PhiEvaluator::new(r)?;
    Ok(fourier_coefficients(pres, theta, &phi, &[indices], sign, quad)?[0])
}

/// F̂^± for several index triples from one pass of the quadrature.
pub fn fourier_coefficients(
    pres: &SurgeryPresentation,
    theta: f64,
    phi: &PhiEvaluator,
    indices: &[(i64, i64, i64)],
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<Vec<C64>> {
    fourier_coefficients_in(&Region::all(), pres, theta, phi, indices, sign, quad)
}

/// The part of each F̂^± coming from the listed squares.
pub fn fourier_coefficients_in(
    regions: &[Region],
    pres: &SurgeryPresentation,
    theta: f64,
    phi: &PhiEvaluator,
    indices: &[(i64, i64, i64)],
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<Vec<C64>> {
    let r = phi.r() as f64;
    let q = pres.q;
    let shrink = quad.delta / 2.0;
    let exponent = |x: f64, y: f64| -> Result<Option<C64>> {
        let Some(reg) = containing_region(x, y, shrink) else {
            return Ok(None);
        };
        vr_potential(sign, pres, theta, phi, C64::new(x, 0.0), C64::new(y, 0.0), &reg).map(Some)
    };
    let f = |x: f64, y: f64| -> Result<C64> {
        Ok(match exponent(x, y)? {
            Some(v) => (v * (r / (4.0 * PI)) * (-I)).exp(),
            None => C64::new(0.0, 0.0),
        })
    };
    // (r/4πi)(-4π(k0/q + k1)x - 4πk2y) = i(r/q)((k0 + q k1)x + q k2 y).
    let freqs: Vec<(i64, i64)> = indices.iter().map(|&(k0, k1, k2)| (k0 + q * k1, q * k2)).collect();
    integrate_domain(regions, r, r / q as f64, shrink, 0.0, quad, &freqs, &f, &exponent)
}

/// Magnitudes of F̂^± at (0,0,0) and at the other computed indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub r: u32,
    pub sign: Sign,
    pub leading: f64,
    /// (k0, k1, k2, |F̂|) for every nonzero index.
    pub others: Vec<(i64, i64, i64, f64)>,
    pub dominant: bool,
}

/// Compares |F̂^±(0,0,0)| against every (k0, k1, k2) ≠ 0 with k0 a residue mod q
/// and |k1|, |k2| ≤ `kmax`. F̂ depends on k0 and k1 only through k0/q + k1, so the
/// residues already cover every distinct coefficient.
pub fn coefficient_dominance(
    pres: &SurgeryPresentation,
    theta: f64,
    phi: &PhiEvaluator,
    kmax: i64,
    sign: Sign,
    quad: &QuadratureSpec,
) -> Result<DominanceCheck> {
    let mut indices = vec![(0, 0, 0)];
    for k0 in 0..pres.q {
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                if (k0, k1, k2) != (0, 0, 0) {
                    indices.push((k0, k1, k2));
                }
            }
        }
    }
    let values = fourier_coefficients(pres, theta, phi, &indices, sign, quad)?;
    let leading = values[0].norm();
    let others: Vec<(i64, i64, i64, f64)> = indices[1..]
        .iter()
        .zip(&values[1..])
        .map(|(&(a, b, c), v)| (a, b, c, v.norm()))
        .collect();
    let dominant = others.iter().all(|o| o.3 < leading);
    Ok(DominanceCheck { r: phi.r(), sign, leading, others, dominant })
}

fn containing_region(x: f64, y: f64, delta: f64) -> Option<RegionSpec> {
    // Points on the closed boundary are assigned to the square by tolerance.
    let slack = 1e-12;
    Region::all().into_iter().find_map(|which| {
        let spec = RegionSpec { which, delta: (delta - slack).max(0.0) };
        spec.contains_real(x, y).then_some(spec)
    })
}

/// f̂^±(n_1, n) for k = 1 and every (n_1, n) in `indices`:
/// (-1)^{n_1+n} (r/2π)^2 ∫ ψ ε e^{-xi + (r/4πi)(V_r^± - 4πn_1x - 4πny)} dx dy.
/// With `bump = false` the indicator of 𝒟 replaces ψ.
#[allow(clippy::too_many_arguments)]
pub fn poisson_coefficients(
    pres: &SurgeryPresentation,
    m0: u32,
    phi: &PhiEvaluator,
    indices: &[(i64, i64)],
    sign: Sign,
    delta: f64,
    bump: bool,
    quad: &QuadratureSpec,
) -> Result<Vec<C64>> {
    if pres.k() != 1 {
        return Err(Error::InvalidInput("Poisson coefficients are implemented for k = 1".into()));
    }
    let r = phi.r();
    let rf = r as f64;
    let spec = BumpSpec::new(delta, r)?;
    let x0 = ColorParameters::new(r, m0)?.x0;
    let exponent = |x: f64, y: f64| -> Result<Option<C64>> {
        if containing_region(x, y, 0.0).is_none() {
            return Ok(None);
        }
        vr_lattice(sign, pres, x0, phi, &[x], y)
    };
    let f = |x: f64, y: f64| -> Result<C64> {
        let weight = if bump { bump_psi(&spec, &[x], y) } else { 1.0 };
        if weight == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(match exponent(x, y)? {
            Some(v) => weight * epsilon(x, y) * (-I * x + v * (rf / (4.0 * PI)) * (-I)).exp(),
            None => C64::new(0.0, 0.0),
        })
    };
    let w = if bump { delta / 2.0 } else { 0.0 };
    // (r/4πi)(-4πn_1x - 4πny) = i r (n_1 x + n y).
    let integrals = integrate_domain(&Region::all(), rf, rf, 0.0, w, quad, indices, &f, &exponent)?;
    Ok(indices
        .iter()
        .zip(integrals)
        .map(|(&(n1, n), v)| {
            let sign_n = if (n1 + n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            v * sign_n * (rf / (2.0 * PI)).powi(2)
        })
        .collect())
}

/// Outcome of a Poisson summation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub gap: f64,
}

/// Compares Σ_{half-integer lattice} ψ g^± with Σ_{|n_1|,|n| ≤ nmax} f̂^±(n_1, n).
pub fn poisson_check(
    pres: &SurgeryPresentation,
    r: u32,
    m0: u32,
    nmax: i64,
    delta: f64,
    bump: bool,
    quad: &QuadratureSpec,
) -> Result<PoissonCheck> {
    if pres.k() != 1 {
        return Err(Error::InvalidInput("the Poisson check is implemented for k = 1".into()));
    }
    if r > 51 {
        return Err(Error::InvalidInput(format!("r = {r} exceeds the quadrature range (r <= 51)")));
    }
    let phi = PhiEvaluator::new(r)?;
    let spec = BumpSpec::new(delta, r)?;
    let lhs = bumped_lattice_sum(pres, m0, &phi, &spec, bump)?;
    let indices: Vec<(i64, i64)> = (-nmax..=nmax).flat_map(|a| (-nmax..=nmax).map(move |b| (a, b))).collect();
    let mut coeffs = Vec::new();
    for s in Sign::both() {
        coeffs.extend(poisson_coefficients(pres, m0, &phi, &indices, s, delta, bump, quad)?);
    }
    let rhs = pairwise_sum(&coeffs);
    Ok(PoissonCheck { lhs, rhs, gap: (lhs - rhs).norm() / lhs.norm() })
}

/// Σ over (Z + 1/2)^2 of ψ g^± (or the indicator of 𝒟 times g^±).
pub fn bumped_lattice_sum(
    pres: &SurgeryPresentation,
    m0: u32,
    phi: &PhiEvaluator,
    spec: &BumpSpec,
    bump: bool,
) -> Result<C64> {
    let r = phi.r() as f64;
    let x0 = ColorParameters::new(phi.r(), m0)?.x0;
    let reach = (r / 2.0).ceil() as i64 + 1;
    let mut terms = Vec::new();
    for i in -reach..=reach {
        let m1 = i as f64 + 0.5;
        for j in -reach..=2 * reach {
            let m = j as f64 + 0.5;
            let (x, y) = (2.0 * PI * m1 / r, 2.0 * PI * m / r);
            if containing_region(x, y, 0.0).is_none() {
                continue;
            }
            let weight = if bump { bump_psi(spec, &[x], y) } else { 1.0 };
            if weight == 0.0 {
                continue;
            }
            for s in Sign::both() {
                if let Some(v) = vr_lattice(s, pres, x0, phi, &[x], y)? {
                    terms.push(weight * epsilon(x, y) * (-I * x + v * (r / (4.0 * PI)) * (-I)).exp());
                }
            }
        }
    }
    Ok(pairwise_sum(&terms))
}

/// -2 i^{-(k-3)/2} r^{(k+1)/2} / (π √q √(-det Hess V^+)) with the principal root.
fn display_prefactor(k: usize, r: u32, q: i64, hess_det: C64) -> C64 {
    let ipow = C64::from_polar(1.0, -PI / 2.0 * (k as f64 - 3.0) / 2.0);
    -2.0 * ipow * (r as f64).powf((k as f64 + 1.0) / 2.0) / (PI * (q as f64).sqrt() * (-hess_det).sqrt())
}

/// Leading term exactly as displayed: κ_r · prefactor · e^{(r/4πi) V^+(x0, y0)}.
pub fn predict_leading_literal(pres: &SurgeryPresentation, r: u32, g: &ConeGeometry) -> C64 {
    let k = pres.k();
    qinv::kappa(r, pres) * display_prefactor(k, r, pres.q, g.hess_det) * critical_exponential(r, g)
}

fn critical_exponential(r: u32, g: &ConeGeometry) -> C64 {
    (g.critical_value * (r as f64 / (4.0 * PI)) * (-I)).exp()
}

/// Normalized leading term: κ_sym · prefactor · 4π i^k · e^{(r/4πi) V^+(x0, y0)}.
pub fn predict_leading(pres: &SurgeryPresentation, r: u32, g: &ConeGeometry) -> C64 {
    let k = pres.k();
    let ik = C64::from_polar(1.0, PI / 2.0 * k as f64);
    qinv::kappa_symmetrized(r, pres) * display_prefactor(k, r, pres.q, g.hess_det) * (4.0 * PI) * ik
        * critical_exponential(r, g)
}

/// One row of an asymptotic report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub r: u32,
    pub m0: u32,
    pub rt: C64,
    pub predicted: C64,
    pub ratio_error: f64,
    pub log_growth: f64,
}

/// Regression summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub vol_fit: f64,
    pub prefactor_exponent_fit: f64,
    pub geom_vol: f64,
    pub vol_gap: f64,
}

/// Rows sorted by r with fitted growth parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub p: i64,
    pub q: i64,
    pub a0: i64,
    pub theta: f64,
    pub branch: ColorBranch,
    /// The principal √(-det Hess) was negated for every row.
    pub sqrt_branch_flipped: bool,
    pub rows: Vec<AsymptoticRow>,
    pub fitted: AsymptoticFit,
}

pub const CSV_HEADER: [&str; 8] = ["r", "m0", "rt_re", "rt_im", "pred_re", "pred_im", "ratio_err", "log_growth"];

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl AsymptoticReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wr.write_record(CSV_HEADER).map_err(io)?;
        for row in &self.rows {
            wr.write_record([
                row.r.to_string(),
                row.m0.to_string(),
                fmt17(row.rt.re),
                fmt17(row.rt.im),
                fmt17(row.predicted.re),
                fmt17(row.predicted.im),
                fmt17(row.ratio_error),
                fmt17(row.log_growth),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// JSON with the CSV row fields and a `fit` block.
    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                serde_json::json!({
                    "r": row.r,
                    "m0": row.m0,
                    "rt_re": row.rt.re,
                    "rt_im": row.rt.im,
                    "pred_re": row.predicted.re,
                    "pred_im": row.predicted.im,
                    "ratio_err": row.ratio_error,
                    "log_growth": row.log_growth,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "p": self.p,
            "q": self.q,
            "a0": self.a0,
            "theta": self.theta,
            "branch": self.branch,
            "sqrtBranchFlipped": self.sqrt_branch_flipped,
            "rows": rows,
            "fit": {
                "volFit": self.fitted.vol_fit,
                "prefactorExponentFit": self.fitted.prefactor_exponent_fit,
                "geomVol": self.fitted.geom_vol,
                "volGap": self.fitted.vol_gap,
            },
        });
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Least squares for y ≈ Σ c_j basis_j via normal equations (small, well-scaled systems).
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = rows[0].len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..m {
            for j in 0..m {
                a[i][j] += row[i] * row[j];
            }
            a[i][m] += row[i] * yi;
        }
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return Err(Error::Domain("singular regression".into()));
        }
        let pivot = a[col].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != col {
                let f = row[col] / pivot[col];
                for (v, &pv) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *v -= f * pv;
                }
            }
        }
    }
    Ok((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

/// The theorem hypothesis Vol(M_Kθ) > Vol(S^3 \ 4_1)/2, returning the geometry at θ.
pub fn check_hypothesis(pres: &SurgeryPresentation, theta: f64) -> Result<ConeGeometry> {
    let g = geom::solve_critical(pres, theta)?;
    let half = 3.0 * lobachevsky(PI / 3.0);
    if g.vol <= half {
        return Err(Error::Hypothesis(format!("vol = {} is not above {half}", g.vol)));
    }
    Ok(g)
}

/// RT_r against the leading prediction over `r_list`.
pub fn verify_volume_conjecture(
    pres: &SurgeryPresentation,
    theta: f64,
    r_list: &[u32],
    branch: ColorBranch,
) -> Result<AsymptoticReport> {
    verify_volume_conjecture_with(pres, theta, r_list, branch, &RtOptions::default())
}

/// As [`verify_volume_conjecture`] with the raw sums evaluated under `opts`.
pub fn verify_volume_conjecture_with(
    pres: &SurgeryPresentation,
    theta: f64,
    r_list: &[u32],
    branch: ColorBranch,
    opts: &RtOptions,
) -> Result<AsymptoticReport> {
    if r_list.is_empty() || r_list.windows(2).any(|w| w[1] <= w[0]) || r_list.iter().any(|r| r % 2 == 0) {
        return Err(Error::InvalidInput("r list must be odd and strictly increasing".into()));
    }
    let base = check_hypothesis(pres, theta)?;
    let k = pres.k();

    struct Raw {
        r: u32,
        m0: u32,
        rt: C64,
        pred: C64,
        geo: ConeGeometry,
    }
    let raw: Vec<Raw> = r_list
        .par_iter()
        .map(|&r| -> Result<Raw> {
            let m0 = choose_color(r, theta, branch)?;
            let c = ColorParameters::new(r, m0)?;
            let geo = geom::solve_critical(pres, c.theta)?;
            let rt = qinv::rt_invariant_with(r, pres, m0, SumMode::Raw, opts)?.value;
            let pred = predict_leading(pres, r, &geo);
            Ok(Raw { r, m0, rt, pred, geo })
        })
        .collect::<Result<_>>()?;

    let first = &raw[0];
    let ratio0 = first.rt / first.pred;
    let flipped = (ratio0 + 1.0).norm() < (ratio0 - 1.0).norm();
    let flip = if flipped { -1.0 } else { 1.0 };

    let rows: Vec<AsymptoticRow> = raw
        .iter()
        .map(|w| {
            let predicted = w.pred * flip;
            AsymptoticRow {
                r: w.r,
                m0: w.m0,
                rt: w.rt,
                predicted,
                ratio_error: (w.rt / predicted - 1.0).norm(),
                log_growth: 4.0 * PI / w.r as f64 * w.rt.norm().ln(),
            }
        })
        .collect();

    // log|RT_r| - (k+1)/2 log r - log|κ_r · prefactor|, shifted by the drift of the color's
    // cone angle θ_r from θ, regressed on (r/4π, 1, 1/r).
    let mut basis = Vec::new();
    let mut ys = Vec::new();
    let mut zs = Vec::new();
    for w in &raw {
        let rf = w.r as f64;
        let pref = (qinv::kappa_symmetrized(w.r, pres) * display_prefactor(k, w.r, pres.q, w.geo.hess_det) * (4.0 * PI))
            .norm();
        let drift = rf / (4.0 * PI) * (w.geo.vol - base.vol);
        let y = w.rt.norm().ln() - (k as f64 + 1.0) / 2.0 * rf.ln() - (pref / rf.powf((k as f64 + 1.0) / 2.0)).ln() - drift;
        basis.push(vec![rf / (4.0 * PI), 1.0, 1.0 / rf]);
        ys.push(y);
        let kap = qinv::kappa_symmetrized(w.r, pres).norm();
        zs.push(w.rt.norm().ln() - kap.ln() - rf / (4.0 * PI) * w.geo.vol);
    }
    let vol_fit = if raw.len() >= 3 { least_squares(&basis, &ys)?[0] } else { f64::NAN };
    let prefactor_exponent_fit = if raw.len() >= 2 {
        let b: Vec<Vec<f64>> = raw.iter().map(|w| vec![(w.r as f64).ln(), 1.0]).collect();
        least_squares(&b, &zs)?[0]
    } else {
        f64::NAN
    };
    Ok(AsymptoticReport {
        p: pres.p,
        q: pres.q,
        a0: pres.a0,
        theta,
        branch,
        sqrt_branch_flipped: flipped,
        rows,
        fitted: AsymptoticFit {
            vol_fit,
            prefactor_exponent_fit,
            geom_vol: base.vol,
            vol_gap: (vol_fit - base.vol).abs(),
        },
    })
}
