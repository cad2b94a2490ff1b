//! Deterministic compensated summation.
//!
//! Sums are reduced over a fixed binary tree (split at the midpoint) whose
//! leaves use Neumaier compensation. The parallel variant walks the same tree,
//! so its result is bit-identical to the sequential one for any thread count.

use num_complex::Complex64;

const LEAF: usize = 64;
const PAR_CUTOFF: usize = 1 << 12;

/// Neumaier-compensated accumulator for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum(s: f64, c: f64, x: f64) -> (f64, f64) {
    let t = s + x;
    let c = if s.abs() >= x.abs() { c + ((s - t) + x) } else { c + ((x - t) + s) };
    (t, c)
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        let (re, cre) = two_sum(self.sum.re, self.comp.re, x.re);
        let (im, cim) = two_sum(self.sum.im, self.comp.im, x.im);
        self.sum = Complex64::new(re, im);
        self.comp = Complex64::new(cre, cim);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn leaf_sum(xs: &[Complex64]) -> Complex64 {
    let mut acc = Neumaier::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Pairwise compensated sum in a fixed tree order.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= LEAF {
        return leaf_sum(xs);
    }
    let mid = xs.len() / 2;
    let (a, b) = xs.split_at(mid);
    let mut acc = Neumaier::new();
    acc.add(pairwise_sum(a));
    acc.add(pairwise_sum(b));
    acc.value()
}

/// Same tree as [`pairwise_sum`], with large subtrees evaluated concurrently.
pub fn par_pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= PAR_CUTOFF {
        return pairwise_sum(xs);
    }
    let mid = xs.len() / 2;
    let (a, b) = xs.split_at(mid);
    let (sa, sb) = rayon::join(|| par_pairwise_sum(a), || par_pairwise_sum(b));
    let mut acc = Neumaier::new();
    acc.add(sa);
    acc.add(sb);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_cancellation() {
        let xs = [
            Complex64::new(1e16, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-1e16, 0.0),
        ];
        assert_eq!(leaf_sum(&xs).re, 1.0);
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let xs: Vec<Complex64> = (0..20_000)
            .map(|i| Complex64::new((i as f64 * 0.37).sin() * 1e3, (i as f64).cos()))
            .collect();
        let s = pairwise_sum(&xs);
        let p = par_pairwise_sum(&xs);
        assert_eq!(s.re.to_bits(), p.re.to_bits());
        assert_eq!(s.im.to_bits(), p.im.to_bits());
    }
}
