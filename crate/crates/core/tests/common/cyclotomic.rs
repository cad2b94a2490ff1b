//! Exact arithmetic in Z[ζ] with ζ = e^{πi/r}, and the raw colored sum of the
//! invariant written with quantum integers [(m_i+1)(m_{i+1}+1)].

use super::C64;
use std::f64::consts::PI;

/// Element Σ c_j ζ^j of Z[x]/(x^n - 1), evaluated at ζ = e^{2πi/n}.
#[derive(Debug, Clone, PartialEq)]
pub struct Cyc {
    pub c: Vec<i128>,
}

impl Cyc {
    pub fn zero(n: usize) -> Self {
        Self { c: vec![0; n] }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// ζ^e.
    pub fn monomial(n: usize, e: i64, coeff: i128) -> Self {
        let mut z = Self::zero(n);
        z.c[e.rem_euclid(n as i64) as usize] = coeff;
        z
    }

    pub fn one(n: usize) -> Self {
        Self::monomial(n, 0, 1)
    }

    pub fn add_assign(&mut self, other: &Cyc) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += b;
        }
    }

    pub fn mul(&self, other: &Cyc) -> Cyc {
        let n = self.n();
        let mut out = Self::zero(n);
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate() {
                if b != 0 {
                    out.c[(i + j) % n] += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: i128) -> Cyc {
        Cyc { c: self.c.iter().map(|a| a * s).collect() }
    }

    /// Multiply by ζ^e.
    pub fn shift(&self, e: i64) -> Cyc {
        let n = self.n();
        let mut out = Self::zero(n);
        for (i, &a) in self.c.iter().enumerate() {
            out.c[(i as i64 + e).rem_euclid(n as i64) as usize] = a;
        }
        out
    }

    /// Canonical representative modulo the n-th cyclotomic polynomial.
    pub fn reduced(&self) -> Vec<i128> {
        let phi = cyclotomic_polynomial(self.n());
        let d = phi.len() - 1;
        let mut rem = self.c.clone();
        for top in (d..rem.len()).rev() {
            let lead = rem[top];
            if lead != 0 {
                for (k, &pk) in phi.iter().enumerate() {
                    rem[top - d + k] -= lead * pk;
                }
            }
        }
        rem.truncate(d);
        rem
    }

    pub fn to_c64(&self) -> C64 {
        let n = self.n() as f64;
        let mut acc = C64::new(0.0, 0.0);
        for (j, &c) in self.reduced().iter().enumerate() {
            acc += C64::from_polar(1.0, 2.0 * PI * j as f64 / n) * c as f64;
        }
        acc
    }
}

/// Φ_n by exact division of x^n - 1 by Φ_d for the proper divisors d (coefficients low to high).
pub fn cyclotomic_polynomial(n: usize) -> Vec<i128> {
    let mut poly = vec![0i128; n + 1];
    poly[0] = -1;
    poly[n] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            poly = divide_exact(&poly, &cyclotomic_polynomial(d));
        }
    }
    poly
}

fn divide_exact(num: &[i128], den: &[i128]) -> Vec<i128> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![0i128; num.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dd] / den[dd];
        quot[i] = c;
        for (k, &dk) in den.iter().enumerate() {
            rem[i + k] -= c * dk;
        }
    }
    assert!(rem.iter().all(|&x| x == 0), "inexact cyclotomic division");
    quot
}

/// Raw colored sum in exact arithmetic at level r.
pub struct ExactSum {
    pub r: i64,
    n: usize,
}

impl ExactSum {
    pub fn new(r: i64) -> Self {
        Self { r, n: 2 * r as usize }
    }

    /// q^e with q = ζ^2; half-integer exponents enter as ζ^{2e}.
    fn q_pow_half(&self, twice_e: i64) -> Cyc {
        Cyc::monomial(self.n, twice_e, 1)
    }

    /// [m] = (q^m - q^{-m})/(q - q^{-1}) = Σ_{j=0}^{m-1} q^{m-1-2j}.
    pub fn quantum_integer(&self, m: i64) -> Cyc {
        let mut out = Cyc::zero(self.n);
        let sign = m.signum() as i128;
        for j in 0..m.abs() {
            out.add_assign(&self.q_pow_half(2 * (m.abs() - 1 - 2 * j)).scale(sign));
        }
        out
    }

    /// Π_{j=lo+1}^{hi} (1 - q^{2j}) = (q)_{hi}/(q)_{lo}.
    pub fn pochhammer_ratio(&self, hi: i64, lo: i64) -> Cyc {
        let mut out = Cyc::one(self.n);
        for j in (lo + 1)..=hi {
            let mut f = Cyc::one(self.n);
            f.add_assign(&self.q_pow_half(4 * j).scale(-1));
            out = out.mul(&f);
        }
        out
    }

    /// (-1)^{n+1} {1} ⟨e_n⟩ = Σ_{m=0}^{min(n, r-2-n)} q^{-2(n+1)(m+1/2)} (q)_{n+1+m}/(q)_{n-m}.
    pub fn habiro_numerator(&self, n: i64) -> Cyc {
        let mut out = Cyc::zero(self.n);
        for m in 0..=n.min(self.r - 2 - n) {
            let t = self.q_pow_half(-2 * (n + 1) * (2 * m + 1)).mul(&self.pochhammer_ratio(n + 1 + m, n - m));
            out.add_assign(&t);
        }
        out
    }

    /// ⟨e_n⟩ as a complex number.
    pub fn habiro_bracket(&self, n: i64) -> C64 {
        let brace1 = C64::new(0.0, 2.0 * (2.0 * PI / self.r as f64).sin());
        let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
        self.habiro_numerator(n).to_c64() * sign / brace1
    }

    /// Σ_{m_1..m_k} (-1)^{Σ a_i m_i} q^{Σ_{i≥0} a_i m_i(m_i+2)/2} Π [(m_i+1)(m_{i+1}+1)] Σ_m (...) exactly.
    pub fn colored_sum(&self, a0: i64, a: &[i64], m0: i64) -> Cyc {
        let k = a.len();
        let r = self.r;
        let mut total = Cyc::zero(self.n);
        let mut ms = vec![0i64; k];
        let count = ((r - 1) as usize).pow(k as u32);
        let brackets: Vec<Cyc> = (0..=r - 2).map(|n| self.habiro_numerator(n)).collect();
        for idx in 0..count {
            let mut t = idx;
            for slot in ms.iter_mut().rev() {
                *slot = (t % (r - 1) as usize) as i64;
                t /= (r - 1) as usize;
            }
            let mut all = vec![m0];
            all.extend_from_slice(&ms);
            let framings: Vec<i64> = std::iter::once(a0).chain(a.iter().copied()).collect();
            let parity: i64 = framings.iter().zip(&all).map(|(ai, mi)| ai * mi).sum();
            let twist: i64 = framings.iter().zip(&all).map(|(ai, mi)| ai * mi * (mi + 2)).sum();
            let mut term = self.q_pow_half(twist);
            if parity.rem_euclid(2) == 1 {
                term = term.scale(-1);
            }
            for i in 0..k {
                term = term.mul(&self.quantum_integer((all[i] + 1) * (all[i + 1] + 1)));
            }
            term = term.mul(&brackets[ms[k - 1] as usize]);
            total.add_assign(&term);
        }
        total
    }

    /// Second form of the sum with the interior brackets symmetrized:
    /// Σ {(m0+1)(m1+1)} (-1)^{Σ a_i m_i} q^{Σ_{i≥0} a_i m_i(m_i+2)/2 + Σ_{i=1}^{k-1} (m_i+1)(m_{i+1}+1)} H(m_k).
    pub fn chain_sum(&self, a0: i64, a: &[i64], m0: i64) -> Cyc {
        let k = a.len();
        let r = self.r;
        let mut total = Cyc::zero(self.n);
        let mut ms = vec![0i64; k];
        let count = ((r - 1) as usize).pow(k as u32);
        let brackets: Vec<Cyc> = (0..=r - 2).map(|n| self.habiro_numerator(n)).collect();
        let framings: Vec<i64> = std::iter::once(a0).chain(a.iter().copied()).collect();
        for idx in 0..count {
            let mut t = idx;
            for slot in ms.iter_mut().rev() {
                *slot = (t % (r - 1) as usize) as i64;
                t /= (r - 1) as usize;
            }
            let mut all = vec![m0];
            all.extend_from_slice(&ms);
            let parity: i64 = framings.iter().zip(&all).map(|(ai, mi)| ai * mi).sum();
            let twist: i64 = framings.iter().zip(&all).map(|(ai, mi)| ai * mi * (mi + 2)).sum();
            let interior: i64 = (1..k).map(|i| (all[i] + 1) * (all[i + 1] + 1)).sum();
            let e0 = (all[0] + 1) * (all[1] + 1);
            let mut brace = self.q_pow_half(2 * e0);
            brace.add_assign(&self.q_pow_half(-2 * e0).scale(-1));
            let mut term = brace.mul(&self.q_pow_half(twist + 2 * interior));
            if parity.rem_euclid(2) == 1 {
                term = term.scale(-1);
            }
            term = term.mul(&brackets[ms[k - 1] as usize]);
            total.add_assign(&term);
        }
        total
    }

    /// {1} = q - q^{-1}.
    pub fn brace1(&self) -> Cyc {
        let mut b = self.q_pow_half(2);
        b.add_assign(&self.q_pow_half(-2).scale(-1));
        b
    }

    /// κ'_r = (√2 sin(2π/r)/√r)^{k+1} e^{-σ(-3/r-(r+1)/4)πi}.
    fn kappa_prime(&self, k: usize, sigma: i64) -> C64 {
        let rf = self.r as f64;
        let modulus = (2f64.sqrt() * (2.0 * PI / rf).sin() / rf.sqrt()).powi(k as i32 + 1);
        let phase = -(sigma as f64) * (-3.0 / rf - (rf + 1.0) / 4.0) * PI;
        C64::from_polar(modulus, phase)
    }

    /// RT_r = (-1)^{m0+1} 2^{k-1}/{1}^2 κ'_r · chain_sum.
    pub fn rt(&self, a0: i64, a: &[i64], sigma: i64, m0: i64) -> C64 {
        let rf = self.r as f64;
        let brace1 = C64::new(0.0, 2.0 * (2.0 * PI / rf).sin());
        let sign = if (m0 + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let scale = 2f64.powi(a.len() as i32 - 1) * sign;
        self.chain_sum(a0, a, m0).to_c64() * self.kappa_prime(a.len(), sigma) * scale / (brace1 * brace1)
    }

    /// (-1)^{m0+1}/{1} κ'_r · colored_sum, the first form with unreduced quantum integers.
    pub fn rt_first_form(&self, a0: i64, a: &[i64], sigma: i64, m0: i64) -> C64 {
        let rf = self.r as f64;
        let brace1 = C64::new(0.0, 2.0 * (2.0 * PI / rf).sin());
        let sign = if (m0 + 1) % 2 == 0 { 1.0 } else { -1.0 };
        self.colored_sum(a0, a, m0).to_c64() * self.kappa_prime(a.len(), sigma) * sign / brace1
    }
}
