//! Relative Reshetikhin–Turaev invariants RT_r(M, K, m0) at q = e^{2πi/r} for
//! p/q fillings of the figure-eight knot, with K the core colored by m0.
//!
//! Two independent evaluations are provided: the raw colored sum (Habiro
//! bracket of the figure-eight times the framed chain) and the symmetrized sum
//! over half-integer lattice points written with the quantum dilogarithm.

use crate::bigc::{self, BigComplex, BigCtx};
use crate::cfrac::SurgeryPresentation;
use crate::error::{Error, Result};
use crate::specfun::{quantum_dilog, quantum_dilog_table, PrecisionMode, C64};
use crate::sum::{pairwise_sum, par_pairwise_sum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Level r and color m0 of the knot, with x0 = π - 2π/r - 2π m0/r and θ = |2 x0|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorParameters {
    pub r: u32,
    pub m0: u32,
    pub x0: f64,
    pub theta: f64,
}

impl ColorParameters {
    pub fn new(r: u32, m0: u32) -> Result<Self> {
        check_level(r)?;
        if m0 > r - 2 {
            return Err(Error::InvalidInput(format!("m0 = {m0} outside [0, {}]", r - 2)));
        }
        let rf = r as f64;
        let x0 = PI - 2.0 * PI / rf - 2.0 * PI * m0 as f64 / rf;
        Ok(Self { r, m0, x0, theta: (2.0 * x0).abs() })
    }
}

fn check_level(r: u32) -> Result<()> {
    if r < 3 || r.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("r must be odd and >= 3, got {r}")));
    }
    Ok(())
}

/// Which finite sum to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMode {
    Raw,
    Symmetrized,
}

/// A computed invariant with precision metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantValue {
    pub value: C64,
    pub r: u32,
    pub m0: u32,
    pub mode: SumMode,
    pub precision: PrecisionMode,
    pub term_count: u64,
    /// log10 of (largest term magnitude / result magnitude).
    pub cancellation_estimate: f64,
}

/// Branch of the color choice m0 ≈ (r-2)/2 ∓ θ r/(4π).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorBranch {
    Minus,
    Plus,
}

/// Quantum integer [n] = sin(2πn/r)/sin(2π/r).
pub fn quantum_integer(r: u32, n: i64) -> f64 {
    let rf = r as f64;
    let reduced = n.rem_euclid(r as i64) as f64;
    (2.0 * PI * reduced / rf).sin() / (2.0 * PI / rf).sin()
}

/// Powers of ζ = e^{iπ/d} for exponents reduced mod 2d.
struct RootTable {
    modulus: i64,
    table: Vec<C64>,
}

impl RootTable {
    fn new(d: i64) -> Self {
        let modulus = 2 * d;
        let table = (0..modulus)
            .map(|j| {
                let t = PI * j as f64 / d as f64;
                C64::new(t.cos(), t.sin())
            })
            .collect();
        Self { modulus, table }
    }

    fn pow(&self, e: i64) -> C64 {
        self.table[e.rem_euclid(self.modulus) as usize]
    }
}

/// (q)_n = Π_{k=1}^n (1 - q^{2k}).
pub fn q_pochhammer(r: u32, n: u32) -> Result<C64> {
    check_level(r)?;
    if n > r - 1 {
        return Err(Error::InvalidInput(format!("n = {n} outside [0, {}]", r - 1)));
    }
    let z = RootTable::new(r as i64);
    Ok((1..=n as i64).fold(C64::new(1.0, 0.0), |acc, k| acc * (1.0 - z.pow(4 * k))))
}

/// {n}! = (-1)^n q^{-n(n+1)/2} (q)_n.
pub fn quantum_factorial(r: u32, n: u32) -> Result<C64> {
    let poch = q_pochhammer(r, n)?;
    let z = RootTable::new(r as i64);
    let n = n as i64;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(poch * z.pow(-n * (n + 1)) * sign)
}

/// H(n) = Σ_{m=0}^{min(n, r-2-n)} q^{-(n+1)(2m+1)} (q)_{n+1+m}/(q)_{n-m}, together with
/// the largest summand magnitude.
fn habiro_inner(z: &RootTable, r: i64, n: i64) -> (C64, f64) {
    let top = n.min(r - 2 - n);
    let mut prod = 1.0 - z.pow(4 * (n + 1));
    let mut terms = Vec::with_capacity(top as usize + 1);
    let mut max = 0.0f64;
    for m in 0..=top {
        if m > 0 {
            prod *= (1.0 - z.pow(4 * (n - m + 1))) * (1.0 - z.pow(4 * (n + m + 1)));
        }
        let t = z.pow(-2 * (n + 1) * (2 * m + 1)) * prod;
        max = max.max(t.norm());
        terms.push(t);
    }
    (pairwise_sum(&terms), max)
}

/// ⟨e_n⟩ for the figure-eight: (-1)^{n+1}/{1} · H(n).
pub fn habiro_bracket(r: u32, n: u32) -> Result<C64> {
    check_level(r)?;
    if n > r - 2 {
        return Err(Error::InvalidInput(format!("n = {n} outside [0, {}]", r - 2)));
    }
    let z = RootTable::new(r as i64);
    let (h, _) = habiro_inner(&z, r as i64, n as i64);
    let brace1 = z.pow(2) - z.pow(-2);
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    Ok(h * sign / brace1)
}

/// κ_r exactly as displayed next to the symmetrized sum:
/// 2^{k-3} r^{-(k+1)/2} sin(2π/r)^{k-1} e^{(3A+σ+2k-2) rπi/4 + (-A(1+1/r) + 3σ/r + σ/4) πi},
/// A = a_0 + ... + a_k.
pub fn kappa(r: u32, pres: &SurgeryPresentation) -> C64 {
    let rf = r as f64;
    let k = pres.k() as i32;
    let a = pres.framing_sum();
    let s = pres.sigma;
    let modulus = 2f64.powi(k - 3) * rf.powf(-(k as f64 + 1.0) / 2.0) * (2.0 * PI / rf).sin().powi(k - 1);
    // Phase as an exact multiple of πi/(4r).
    let r64 = r as i64;
    let num = (3 * a + s + 2 * k as i64 - 2) * r64 * r64 - 4 * a * r64 - 4 * a + 12 * s + s * r64;
    let phase = RootTable::new(4 * r64).pow(num);
    phase * modulus
}

/// Normalization that makes the symmetrized sum equal to the raw sum:
/// κ_r · (-1)^{A+k+1} · 2^{(k+1)/2}.
pub fn kappa_symmetrized(r: u32, pres: &SurgeryPresentation) -> C64 {
    let k = pres.k() as i64;
    let sign = if (pres.framing_sum() + k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    kappa(r, pres) * sign * 2f64.powf((k as f64 + 1.0) / 2.0)
}

/// κ'_r = μ_r^{k+1} e^{-σ(-3/r - (r+1)/4)πi}, μ_r = √2 sin(2π/r)/√r.
pub fn kappa_prime(r: u32, pres: &SurgeryPresentation) -> C64 {
    let rf = r as f64;
    let k = pres.k() as i32;
    let mu = 2f64.sqrt() * (2.0 * PI / rf).sin() / rf.sqrt();
    let r64 = r as i64;
    // -σ(-3/r - (r+1)/4) π = σ (12 + r(r+1)) π/(4r)
    let num = pres.sigma * (12 + r64 * (r64 + 1));
    RootTable::new(4 * r64).pow(num) * mu.powi(k + 1)
}

/// ε(x, y): 2 on D, 1 on D' and D'', 0 elsewhere, with u = y + x, v = y - x.
///
/// Case boundaries are closed at 0 and open at π.
pub fn epsilon_region(x: f64, y: f64) -> u8 {
    let u = y + x;
    let v = y - x;
    let low = |t: f64| (0.0..PI).contains(&t);
    let high = |t: f64| t > PI && t < 2.0 * PI;
    if low(u) && low(v) {
        2
    } else if (low(u) && high(v)) || (high(u) && low(v)) {
        1
    } else {
        0
    }
}

/// m0 nearest to (r-2)/2 ∓ θr/(4π), ties broken toward (r-2)/2.
pub fn choose_color(r: u32, theta: f64, branch: ColorBranch) -> Result<u32> {
    check_level(r)?;
    if !theta.is_finite() {
        return Err(Error::InvalidInput("theta must be finite".into()));
    }
    let center = (r as f64 - 2.0) / 2.0;
    let offset = theta * r as f64 / (4.0 * PI);
    let t = match branch {
        ColorBranch::Minus => center - offset,
        ColorBranch::Plus => center + offset,
    };
    let lo = t.floor();
    let frac = t - lo;
    let m = if (frac - 0.5).abs() < 1e-12 {
        if (lo - center).abs() <= (lo + 1.0 - center).abs() {
            lo
        } else {
            lo + 1.0
        }
    } else {
        t.round()
    };
    Ok(m.clamp(0.0, r as f64 - 2.0) as u32)
}

/// Options for [`rt_invariant_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtOptions {
    pub precision: PrecisionMode,
    /// Skip the cancellation check.
    pub allow_precision_loss: bool,
}

impl Default for RtOptions {
    fn default() -> Self {
        Self { precision: PrecisionMode::Standard, allow_precision_loss: false }
    }
}

/// RT_r(M, K, m0) at standard precision.
pub fn rt_invariant(r: u32, pres: &SurgeryPresentation, m0: u32, mode: SumMode) -> Result<InvariantValue> {
    rt_invariant_with(r, pres, m0, mode, &RtOptions::default())
}

/// RT_r(M, K, m0) with explicit precision settings.
pub fn rt_invariant_with(
    r: u32,
    pres: &SurgeryPresentation,
    m0: u32,
    mode: SumMode,
    opts: &RtOptions,
) -> Result<InvariantValue> {
    ColorParameters::new(r, m0)?;
    let (value, max_term, term_count) = match (mode, opts.precision) {
        (SumMode::Raw, PrecisionMode::Standard) => raw_sum(r, pres, m0)?,
        (SumMode::Raw, PrecisionMode::Extended { bits }) => raw_sum_extended(r, pres, m0, bits)?,
        (SumMode::Symmetrized, PrecisionMode::Standard) => symmetrized_sum(r, pres, m0)?,
        (SumMode::Symmetrized, PrecisionMode::Extended { .. }) => {
            return Err(Error::InvalidInput(
                "the symmetrized sum is evaluated at standard precision only".into(),
            ))
        }
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Domain("invariant is not finite".into()));
    }
    let cancellation_estimate = if value.norm() > 0.0 {
        (max_term / value.norm()).log10()
    } else {
        f64::MAX.log10()
    };
    if !opts.allow_precision_loss {
        let needed = cancellation_estimate + 0.5 * (term_count as f64).log10();
        let available = opts.precision.digits() - 6.0;
        if needed > available {
            return Err(Error::PrecisionExhausted { needed, available });
        }
    }
    Ok(InvariantValue {
        value,
        r,
        m0,
        mode,
        precision: opts.precision,
        term_count,
        cancellation_estimate,
    })
}

/// Iterates the (k-1)-tuples over [0, n) in lexicographic order, as flat indices.
fn decode(mut idx: usize, n: usize, len: usize, out: &mut [i64]) {
    for slot in out[..len].iter_mut().rev() {
        *slot = (idx % n) as i64;
        idx /= n;
    }
}

// Raw sum: (-1)^{m0+1} 2^{k-1}/{1}^2 κ'_r Σ_{m_1..m_k} W(m) H(m_k), with
// W = (q^{(m0+1)(m1+1)} - q^{-(m0+1)(m1+1)}) (-1)^{Σ a_i m_i} q^{Σ a_i m_i(m_i+2)/2 + Σ (m_i+1)(m_{i+1}+1)}.
fn raw_sum(r: u32, pres: &SurgeryPresentation, m0: u32) -> Result<(C64, f64, u64)> {
    let ri = r as i64;
    let k = pres.k();
    let n = (r - 1) as usize;
    let z = RootTable::new(ri);
    let m0 = m0 as i64;
    let a = &pres.a;

    let habiro: Vec<(C64, f64)> = (0..n as i64).map(|mk| habiro_inner(&z, ri, mk)).collect();
    let hmax = habiro.iter().map(|h| h.1).fold(0.0, f64::max);

    // Exponent of ζ = e^{iπ/r} for the framing and chain factors; (-1) = ζ^r.
    let framing = |i: usize, m: i64| -> i64 {
        let ai = if i == 0 { pres.a0 } else { a[i - 1] };
        ai * (ri * m + m * (m + 2))
    };
    let edge = |m1: i64| -> C64 { z.pow(2 * (m0 + 1) * (m1 + 1)) - z.pow(-2 * (m0 + 1) * (m1 + 1)) };

    let prefixes = n.pow((k - 1) as u32);
    let partial: Vec<C64> = (0..prefixes)
        .into_par_iter()
        .map(|p| {
            let mut idx = vec![0i64; k.max(1)];
            decode(p, n, k - 1, &mut idx);
            let mut base = 0i64;
            for i in 0..k - 1 {
                base += framing(i + 1, idx[i]);
                if i + 1 < k - 1 {
                    base += 2 * (idx[i] + 1) * (idx[i + 1] + 1);
                }
            }
            let w1 = if k >= 2 { Some(edge(idx[0])) } else { None };
            let terms: Vec<C64> = (0..n as i64)
                .map(|mk| {
                    let mut e = base + framing(k, mk);
                    if k >= 2 {
                        e += 2 * (idx[k - 2] + 1) * (mk + 1);
                    }
                    let w = w1.unwrap_or_else(|| edge(mk));
                    w * z.pow(e) * habiro[mk as usize].0
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    let total = par_pairwise_sum(&partial);

    let wmax = |m1: i64| edge(m1).norm();
    let max_raw = if k == 1 {
        (0..n as i64).map(|m| wmax(m) * habiro[m as usize].1).fold(0.0, f64::max)
    } else {
        (0..n as i64).map(wmax).fold(0.0, f64::max) * hmax
    };

    let pref = raw_prefactor(r, pres, m0, &z);
    let inner_terms: u64 = (0..ri - 1).map(|mk| (mk.min(ri - 2 - mk) + 1) as u64).sum();
    let term_count = (n as u64).pow((k - 1) as u32) * inner_terms;
    Ok((total * pref, max_raw * pref.norm(), term_count))
}

fn raw_prefactor(r: u32, pres: &SurgeryPresentation, m0: i64, z: &RootTable) -> C64 {
    let ri = r as i64;
    let k = pres.k() as i32;
    let brace1 = z.pow(2) - z.pow(-2);
    let sign = if m0 % 2 == 1 { 1.0 } else { -1.0 };
    let framing0 = z.pow(pres.a0 * (ri * m0 + m0 * (m0 + 2)));
    kappa_prime(r, pres) * framing0 * sign * 2f64.powi(k - 1) / (brace1 * brace1)
}

fn raw_sum_extended(r: u32, pres: &SurgeryPresentation, m0: u32, bits: u32) -> Result<(C64, f64, u64)> {
    // Magnitudes and term counts come from the binary64 evaluation; they are
    // products, so they carry no cancellation error.
    let (_, max_term, term_count) = raw_sum(r, pres, m0)?;
    let ri = r as i64;
    let k = pres.k();
    let n = (r - 1) as usize;
    let m0 = m0 as i64;
    let a = &pres.a;
    let mut ctx = BigCtx::new(bits);
    let table: Vec<BigComplex> = (0..2 * ri).map(|j| ctx.root_of_unity(j, ri)).collect();
    let pow = |e: i64| -> &BigComplex { &table[e.rem_euclid(2 * ri) as usize] };

    let mut habiro = Vec::with_capacity(n);
    for mk in 0..n as i64 {
        let top = mk.min(ri - 2 - mk);
        let mut prod = ctx.one_minus(pow(4 * (mk + 1)));
        let mut acc = ctx.zero();
        for m in 0..=top {
            if m > 0 {
                let f = ctx.mul(&ctx.one_minus(pow(4 * (mk - m + 1))), &ctx.one_minus(pow(4 * (mk + m + 1))));
                prod = ctx.mul(&prod, &f);
            }
            acc = ctx.add(&acc, &ctx.mul(pow(-2 * (mk + 1) * (2 * m + 1)), &prod));
        }
        habiro.push(acc);
    }
    let framing = |i: usize, m: i64| -> i64 {
        let ai = if i == 0 { pres.a0 } else { a[i - 1] };
        ai * (ri * m + m * (m + 2))
    };
    let edge = |ctx: &BigCtx, m1: i64| ctx.sub(pow(2 * (m0 + 1) * (m1 + 1)), pow(-2 * (m0 + 1) * (m1 + 1)));

    let mut total = ctx.zero();
    let mut idx = vec![0i64; k.max(1)];
    for p in 0..n.pow((k - 1) as u32) {
        decode(p, n, k - 1, &mut idx);
        let mut base = 0i64;
        for i in 0..k - 1 {
            base += framing(i + 1, idx[i]);
            if i + 1 < k - 1 {
                base += 2 * (idx[i] + 1) * (idx[i + 1] + 1);
            }
        }
        for mk in 0..n as i64 {
            let mut e = base + framing(k, mk);
            if k >= 2 {
                e += 2 * (idx[k - 2] + 1) * (mk + 1);
            }
            let w = if k >= 2 { edge(&ctx, idx[0]) } else { edge(&ctx, mk) };
            let t = ctx.mul(&ctx.mul(&w, pow(e)), &habiro[mk as usize]);
            total = ctx.add(&total, &t);
        }
    }

    // Prefactor (-1)^{m0+1} 2^{k-1}/{1}^2 κ'_r q^{a0 m0(m0+2)/2} (-1)^{a0 m0}.
    let brace1 = ctx.sub(pow(2), pow(-2));
    let brace_sq = ctx.mul(&brace1, &brace1);
    let s = ctx.sin_pi(2, ri);
    // μ^{k+1} = (√(2/r) sin(2π/r))^{k+1}
    let mu = ctx.sqrt_ratio(2, ri).mul(&s, ctx.bits, bigc::RM);
    let mut mu_pow = ctx.from_i64(1);
    for _ in 0..=k {
        mu_pow = ctx.scale(&mu_pow, &mu);
    }
    let phase_num = pres.sigma * (12 + ri * (ri + 1));
    let kp_phase = ctx.root_of_unity(phase_num, 4 * ri);
    let kp = ctx.mul(&mu_pow, &kp_phase);
    let mut pref = ctx.mul(&kp, pow(pres.a0 * (ri * m0 + m0 * (m0 + 2))));
    let factor = 2i64.pow((k - 1) as u32) * if m0 % 2 == 1 { 1 } else { -1 };
    pref = ctx.scale(&pref, &astro_float::BigFloat::from_i64(factor, ctx.bits));
    let num = ctx.mul(&total, &pref);
    // Divide by {1}^2 = -4 sin^2(2π/r), a real number.
    let value = ctx.div_real(&num, &brace_sq.re);
    Ok((bigc::to_c64(&value), max_term, term_count))
}

// Symmetrized sum κ_sym Σ (g^+ + g^-), every phase an exact power of ω = e^{iπ/(4r)}.
fn symmetrized_sum(r: u32, pres: &SurgeryPresentation, m0: u32) -> Result<(C64, f64, u64)> {
    let ri = r as i64;
    let k = pres.k();
    let n = (r - 1) as usize;
    let omega = RootTable::new(4 * ri);
    // φ_r(πj/r) for j = 0..=r; j = r occurs on the edge d = (r-1)/2.
    let mut phi = quantum_dilog_table(r)?;
    phi.push(quantum_dilog(r, C64::new(PI, 0.0))?);
    let rf = r as f64;
    // Φ(j1, j2) = exp((r/4πi)(φ(πj2/r) - φ(πj1/r))).
    let ephi = |j1: i64, j2: i64| -> C64 { ((phi[j2 as usize] - phi[j1 as usize]) * (rf / (4.0 * PI)) * (-I)).exp() };

    // Lattice coordinates t = 2m' are odd integers in [-(r-2), r-2].
    let t_of = |i: usize| -> i64 { 2 * i as i64 - (ri - 2) };
    let t0 = ri - 2 - 2 * m0 as i64;
    let a = &pres.a;

    let mut gk = Vec::with_capacity(n);
    let mut gmax = Vec::with_capacity(n);
    let mut inner_count = 0u64;
    for ik in 0..n {
        let tk = t_of(ik);
        let mut terms = Vec::new();
        let mut mx = 0.0f64;
        let mut t = tk.abs();
        while t <= ri - 2 {
            let s = (t + tk) / 2;
            let d = (t - tk) / 2;
            let (eps, j1, j2) = if 2 * s < ri && 2 * d < ri {
                (2.0, ri - 2 * s - 1, 2 * d + 1)
            } else if 2 * s < ri {
                (1.0, ri - 2 * s - 1, 2 * d + 1 - ri)
            } else {
                (1.0, 2 * ri - 2 * s - 1, 2 * d + 1)
            };
            let v = omega.pow(2 * ri * tk - 4 * tk * t - 4 * tk) * ephi(j1, j2) * eps;
            mx = mx.max(v.norm());
            terms.push(v);
            t += 2;
        }
        inner_count += terms.len() as u64;
        gk.push(pairwise_sum(&terms));
        gmax.push(mx);
    }

    let chain = |i: usize, t: i64| -> i64 { a[i - 1] * t * t };
    let edge = |t1: i64| omega.pow(-2 * t0 * t1) + omega.pow(2 * t0 * t1);
    let prefixes = n.pow((k - 1) as u32);
    let partial: Vec<C64> = (0..prefixes)
        .into_par_iter()
        .map(|p| {
            let mut idx = vec![0i64; k.max(1)];
            decode(p, n, k - 1, &mut idx);
            let ts: Vec<i64> = idx[..k - 1].iter().map(|&i| t_of(i as usize)).collect();
            let mut base = 0i64;
            for i in 0..k - 1 {
                base += chain(i + 1, ts[i]);
                if i + 1 < k - 1 {
                    base += 2 * ts[i] * ts[i + 1];
                }
            }
            let e1 = if k >= 2 { Some(edge(ts[0])) } else { None };
            let terms: Vec<C64> = (0..n)
                .map(|ik| {
                    let tk = t_of(ik);
                    let mut e = base + chain(k, tk);
                    if k >= 2 {
                        e += 2 * ts[k - 2] * tk;
                    }
                    let c = e1.unwrap_or_else(|| edge(tk));
                    c * omega.pow(e) * gk[ik]
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    let total = par_pairwise_sum(&partial);

    let emax = |ik: usize| edge(t_of(ik)).norm();
    let max_raw = if k == 1 {
        (0..n).map(|i| emax(i) * gmax[i]).fold(0.0, f64::max) / 2.0
    } else {
        (0..n).map(emax).fold(0.0, f64::max) / 2.0 * gmax.iter().cloned().fold(0.0, f64::max)
    };
    let pref = kappa_symmetrized(r, pres) * omega.pow(pres.a0 * t0 * t0);
    let term_count = 2 * (n as u64).pow((k - 1) as u32) * inner_count;
    Ok((total * pref, max_raw * pref.norm(), term_count))
}
