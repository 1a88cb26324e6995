//! Finite signed sums of exponentials, x -> sum_k c_k exp(<v_k, x>).

use serde::Serialize;

use crate::linalg::dot;

/// Coefficients below this magnitude are dropped.
pub const PRUNE_TOL: f64 = 1e-15;
const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedExpSum {
    pub rank: usize,
    pub coefs: Vec<f64>,
    /// Row-major exponent vectors, `coefs.len() * rank` entries.
    pub exps: Vec<f64>,
}

impl SignedExpSum {
    pub fn new(rank: usize) -> Self {
        SignedExpSum { rank, coefs: Vec::new(), exps: Vec::new() }
    }

    /// Build from raw terms, merging equal exponents and pruning tiny coefficients.
    pub fn from_terms(rank: usize, terms: impl IntoIterator<Item = (f64, Vec<f64>)>) -> Self {
        let mut s = SignedExpSum::new(rank);
        for (c, v) in terms {
            s.push(c, &v);
        }
        s.prune();
        s
    }

    /// Add a term, merging into an existing one with the same exponent.
    pub fn push(&mut self, c: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.rank);
        for k in 0..self.coefs.len() {
            let e = self.exponent(k);
            if e.iter().zip(v).all(|(a, b)| (a - b).abs() < MERGE_TOL) {
                self.coefs[k] += c;
                return;
            }
        }
        self.coefs.push(c);
        self.exps.extend_from_slice(v);
    }

    pub fn prune(&mut self) {
        let r = self.rank;
        let mut coefs = Vec::with_capacity(self.coefs.len());
        let mut exps = Vec::with_capacity(self.exps.len());
        for (k, &c) in self.coefs.iter().enumerate() {
            if c.abs() >= PRUNE_TOL {
                coefs.push(c);
                exps.extend_from_slice(&self.exps[k * r..(k + 1) * r]);
            }
        }
        self.coefs = coefs;
        self.exps = exps;
    }

    pub fn len(&self) -> usize {
        self.coefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn exponent(&self, k: usize) -> &[f64] {
        &self.exps[k * self.rank..(k + 1) * self.rank]
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.coefs.iter().enumerate().map(move |(k, &c)| (c, self.exponent(k)))
    }

    fn max_exponent(&self, x: &[f64]) -> f64 {
        (0..self.len())
            .map(|k| dot(self.exponent(k), x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let shift = self.max_exponent(x);
        let s: f64 = self
            .terms()
            .map(|(c, v)| c * (dot(v, x) - shift).exp())
            .sum();
        s * shift.exp()
    }

    /// Value divided by exp(shift) together with the shift, for overflow-safe ratios.
    pub fn eval_scaled(&self, x: &[f64]) -> (f64, f64) {
        if self.is_empty() {
            return (0.0, 0.0);
        }
        let shift = self.max_exponent(x);
        let s = self.terms().map(|(c, v)| c * (dot(v, x) - shift).exp()).sum();
        (s, shift)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.rank];
        if self.is_empty() {
            return g;
        }
        let shift = self.max_exponent(x);
        for (c, v) in self.terms() {
            let w = c * (dot(v, x) - shift).exp();
            for (gi, vi) in g.iter_mut().zip(v) {
                *gi += w * vi;
            }
        }
        let e = shift.exp();
        g.iter_mut().for_each(|gi| *gi *= e);
        g
    }

    /// Gradient of log f. `None` when f(x) is not positive.
    pub fn log_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        if self.is_empty() {
            return None;
        }
        let shift = self.max_exponent(x);
        let mut total = 0.0;
        let mut g = vec![0.0; self.rank];
        for (c, v) in self.terms() {
            let w = c * (dot(v, x) - shift).exp();
            total += w;
            for (gi, vi) in g.iter_mut().zip(v) {
                *gi += w * vi;
            }
        }
        // relative cancellation guard
        let scale: f64 = self
            .terms()
            .map(|(c, v)| (c * (dot(v, x) - shift).exp()).abs())
            .sum();
        if !(total > 1e-300 * scale.max(1.0)) || total <= 0.0 {
            return None;
        }
        Some(g.into_iter().map(|gi| gi / total).collect())
    }

    /// Directional derivative: multiplies each c_k by <v_k, d>.
    pub fn derivative(&self, d: &[f64]) -> Self {
        SignedExpSum::from_terms(
            self.rank,
            self.terms().map(|(c, v)| (c * dot(v, d), v.to_vec())),
        )
    }

    /// Multiply by exp(<w, x>).
    pub fn shift_exponents(&self, w: &[f64]) -> Self {
        SignedExpSum::from_terms(
            self.rank,
            self.terms()
                .map(|(c, v)| (c, v.iter().zip(w).map(|(a, b)| a + b).collect())),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merging_and_pruning() {
        let s = SignedExpSum::from_terms(
            2,
            vec![
                (1.0, vec![1.0, 0.0]),
                (2.0, vec![1.0, 0.0]),
                (1e-17, vec![0.0, 3.0]),
                (-3.0, vec![1.0, 0.0]),
                (0.5, vec![0.0, 1.0]),
            ],
        );
        assert_eq!(s.len(), 1);
        assert!((s.eval(&[0.3, 2.0]) - 0.5 * 2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn large_arguments_are_stable() {
        let s = SignedExpSum::from_terms(1, vec![(1.0, vec![0.0]), (-1.0, vec![-1.0])]);
        assert!((s.eval(&[800.0]) - 1.0).abs() < 1e-15);
        let g = s.log_gradient(&[800.0]).unwrap();
        assert!(g[0].abs() < 1e-300);
        let big = SignedExpSum::from_terms(1, vec![(2.0, vec![1.0]), (-1.0, vec![0.5])]);
        let lg = big.log_gradient(&[1000.0]).unwrap();
        assert!((lg[0] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_difference(
            c in proptest::collection::vec(-2.0f64..2.0, 3),
            x0 in -1.0f64..1.0, x1 in -1.0f64..1.0
        ) {
            let s = SignedExpSum::from_terms(2, vec![
                (c[0], vec![1.0, -0.5]),
                (c[1], vec![-0.3, 0.7]),
                (c[2], vec![0.2, 0.2]),
            ]);
            let x = [x0, x1];
            let g = s.gradient(&x);
            let h = 1e-6;
            for k in 0..2 {
                let mut xp = x; xp[k] += h;
                let mut xm = x; xm[k] -= h;
                let fd = (s.eval(&xp) - s.eval(&xm)) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() < 1e-6);
            }
            let d = [0.4, -1.1];
            let dd = s.derivative(&d).eval(&x);
            prop_assert!((dd - (g[0] * d[0] + g[1] * d[1])).abs() < 1e-10);
        }
    }
}
