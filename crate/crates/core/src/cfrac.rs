//! Surgery presentations of p/q fillings as framed chain links.
//!
//! p/q = a_k - 1/(a_{k-1} - 1/(... - 1/a_1)) with a_i >= 2 for i < k. The partial
//! fractions b_i and products c_i = b_1 ... b_i are the leading principal minors
//! of the tridiagonal linking matrix, so they are exact integers/rationals.

use crate::error::{Error, Result};
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Sign choice ± shared by the potentials and the lattice maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn both() -> [Sign; 2] {
        [Sign::Plus, Sign::Minus]
    }
}

/// Eigenvalue sign counts of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn signature(&self) -> i64 {
        self.positive as i64 - self.negative as i64
    }
}

/// A p/q filling of the figure-eight knot written as surgery on a framed chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryPresentation {
    pub p: i64,
    pub q: i64,
    /// Framing of the knot K.
    pub a0: i64,
    /// a_1..a_k.
    pub a: Vec<i64>,
    /// b_1..b_k with b_k = p/q.
    pub b: Vec<Ratio<i64>>,
    /// c_0..c_{k-1} with c_0 = 1 and c_{k-1} = q.
    pub c: Vec<i64>,
    pub p_prime: i64,
    pub q_prime: i64,
    /// Signature of the linking matrix.
    pub sigma: i64,
    pub inertia: Inertia,
}

fn check_pq(p: i64, q: i64) -> Result<()> {
    if q == 0 && p.abs() == 1 {
        return Err(Error::ExcludedSlope { p, q });
    }
    if q <= 0 {
        return Err(Error::InvalidInput(format!("q must be positive, got {q}")));
    }
    if p.gcd(&q) != 1 {
        return Err(Error::InvalidInput(format!("p = {p} and q = {q} are not coprime")));
    }
    Ok(())
}

/// Hirzebruch–Jung expansion a_1..a_k of p/q (a_k outermost).
pub fn hj_expand(p: i64, q: i64) -> Result<Vec<i64>> {
    check_pq(p, q)?;
    let mut out = Vec::new();
    let (mut num, mut den) = (p, q);
    loop {
        let a = num_integer::Integer::div_ceil(&num, &den);
        out.push(a);
        let rem = a * den - num;
        if rem == 0 {
            break;
        }
        num = den;
        den = rem;
    }
    out.reverse();
    Ok(out)
}

/// Folds a_1..a_k back into b_1..b_k, b_i = a_i - 1/b_{i-1}.
pub fn fold(a: &[i64]) -> Result<Vec<Ratio<i64>>> {
    let mut b: Vec<Ratio<i64>> = Vec::with_capacity(a.len());
    for (i, &ai) in a.iter().enumerate() {
        let v = if i == 0 {
            Ratio::from_integer(ai)
        } else {
            let prev = b[i - 1];
            if prev == Ratio::from_integer(0) {
                return Err(Error::InvalidInput(format!("continued fraction breaks down at a_{i}")));
            }
            Ratio::from_integer(ai) - prev.recip()
        };
        b.push(v);
    }
    Ok(b)
}

/// The pair (p', q') with p p' + q q' = 1 and -q < p' <= 0.
pub fn inverse_pair(p: i64, q: i64) -> Result<(i64, i64)> {
    if q < 1 {
        return Err(Error::InvalidInput(format!("q must be positive, got {q}")));
    }
    if p.gcd(&q) != 1 {
        return Err(Error::InvalidInput(format!("p = {p} and q = {q} are not coprime")));
    }
    let e = p.rem_euclid(q).extended_gcd(&q);
    let s = e.x.rem_euclid(q);
    let pp = if s == 0 { 0 } else { s - q };
    let qq = (1 - p * pp) / q;
    debug_assert_eq!(p * pp + q * qq, 1);
    Ok((pp, qq))
}

/// Leading principal minors of the chain matrix with diagonal a and unit off-diagonal.
fn leading_minors(a: &[i64]) -> Vec<i128> {
    let mut m = vec![1i128];
    let mut prev2 = 0i128;
    let mut prev = 1i128;
    for &ai in a {
        let cur = ai as i128 * prev - prev2;
        m.push(cur);
        prev2 = prev;
        prev = cur;
    }
    m
}

/// Inertia of the tridiagonal linking matrix via Sturm sign counts in exact integers.
pub fn linking_inertia(a: &[i64]) -> Result<Inertia> {
    if a.is_empty() {
        return Err(Error::InvalidInput("empty linking matrix".into()));
    }
    let m = leading_minors(a);
    let k = a.len();
    // With nonzero off-diagonals the eigenvalues are simple and an interior
    // zero minor sits between opposite signs, so zeros are skipped.
    let mut changes = 0usize;
    let mut last = 1i128.signum();
    for &v in &m[1..] {
        if v == 0 {
            continue;
        }
        if v.signum() != last {
            changes += 1;
        }
        last = v.signum();
    }
    let zero = usize::from(m[k] == 0);
    Ok(Inertia { positive: k - changes - zero, negative: changes, zero })
}

/// Signature of the linking matrix; singular matrices are reported as errors.
pub fn linking_signature(a: &[i64]) -> Result<i64> {
    let inertia = linking_inertia(a)?;
    if inertia.zero > 0 {
        return Err(Error::SingularLinkingMatrix { nullity: inertia.zero });
    }
    Ok(inertia.signature())
}

impl SurgeryPresentation {
    pub fn new(p: i64, q: i64, a0: i64) -> Result<Self> {
        let a = hj_expand(p, q)?;
        let b = fold(&a)?;
        let k = a.len();
        let minors = leading_minors(&a);
        let c: Vec<i64> = minors[..k]
            .iter()
            .map(|&v| i64::try_from(v).map_err(|_| Error::InvalidInput("minor overflow".into())))
            .collect::<Result<_>>()?;
        let (p_prime, q_prime) = inverse_pair(p, q)?;
        let inertia = linking_inertia(&a)?;
        let pres = Self {
            p,
            q,
            a0,
            a,
            b,
            c,
            p_prime,
            q_prime,
            sigma: inertia.signature(),
            inertia,
        };
        debug_assert_eq!(*pres.b.last().unwrap(), Ratio::new(p, q));
        debug_assert_eq!(*pres.c.last().unwrap(), q);
        Ok(pres)
    }

    /// Number of chain components k.
    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// a_0 + a_1 + ... + a_k.
    pub fn framing_sum(&self) -> i64 {
        self.a0 + self.a.iter().sum::<i64>()
    }

    /// Σ_{j=1}^{k-1} 1/(c_{j-1} c_j), which equals -p'/q.
    pub fn reciprocal_sum(&self) -> Ratio<i64> {
        (1..self.k())
            .map(|j| Ratio::new(1, self.c[j - 1] * self.c[j]))
            .fold(Ratio::from_integer(0), |s, t| s + t)
    }

    /// k_0 = Σ_{j=1}^{k-1} (-1)^{k-j} n_j c_{j-1}.
    pub fn k0_of(&self, n: &[i64]) -> Result<i64> {
        let k = self.k();
        if n.len() != k - 1 {
            return Err(Error::InvalidInput(format!("expected {} shifts, got {}", k - 1, n.len())));
        }
        Ok((1..k)
            .map(|j| if (k - j).is_multiple_of(2) { 1 } else { -1 } * n[j - 1] * self.c[j - 1])
            .sum())
    }

    /// Critical values x_1..x_{k-1} of the interior variables for x_k = x.
    ///
    /// Solves x_i + x_{i+1}/b_i + Σ_{j≤i} (-1)^{i-j} 2 n_j c_{j-1} π / c_i ∓ (-1)^i x0/c_i = 0
    /// backwards from i = k-1; for n = 0 this is the closed form
    /// x_i = (-1)^{k-i} c_{i-1} (x/q ± (-1)^k Σ_{j=i}^{k-1} x0/(c_{j-1} c_j)).
    pub fn lattice_points(&self, sign: Sign, x: f64, x0: f64, n: &[i64]) -> Result<Vec<f64>> {
        let k = self.k();
        if !n.is_empty() && n.len() != k - 1 {
            return Err(Error::InvalidInput(format!("expected {} shifts, got {}", k - 1, n.len())));
        }
        let shift = |j: usize| if n.is_empty() { 0 } else { n[j - 1] };
        let mut xs = vec![0.0; k + 1];
        xs[k] = x;
        for i in (1..k).rev() {
            let bi = *self.b[i - 1].numer() as f64 / *self.b[i - 1].denom() as f64;
            let ci = self.c[i] as f64;
            let s: f64 = (1..=i)
                .map(|j| {
                    let sg = if (i - j) % 2 == 0 { 1.0 } else { -1.0 };
                    sg * 2.0 * shift(j) as f64 * self.c[j - 1] as f64 * PI
                })
                .sum();
            let alt = if i % 2 == 0 { 1.0 } else { -1.0 };
            xs[i] = -xs[i + 1] / bi - s / ci + sign.value() * alt * x0 / ci;
        }
        Ok(xs[1..k].to_vec())
    }

    /// x_i^± for 1 ≤ i ≤ k-1; `None` when there is no such interior variable.
    pub fn lattice_point(&self, sign: Sign, i: usize, x: f64, x0: f64, n: &[i64]) -> Result<Option<f64>> {
        if i == 0 || i >= self.k() {
            return Ok(None);
        }
        Ok(Some(self.lattice_points(sign, x, x0, n)?[i - 1]))
    }
}
