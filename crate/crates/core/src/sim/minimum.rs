use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::chamber::DriftSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, sub, Vector};

/// Minimum acceptance below which the envelope is considered unusable.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// Rejection sampler for the chamber minimum of drifted BM from the origin.
///
/// In u = -<M, e_i> coordinates the density is sum_s eps(s) (-1)^r prod_i k_si exp(-k_si u_i)
/// with k_si = <nu - s nu, omega_i^vee>; every term integrates to +-1, so the positive
/// terms give an envelope with acceptance 1 / (number of positive terms).
#[derive(Debug, Clone)]
pub struct MinimumSampler {
    rank: usize,
    signs: Vec<f64>,
    rates: Vec<Vec<f64>>,
    positive: Vec<usize>,
    coweights: Vec<Vector>,
}

impl MinimumSampler {
    pub fn new(d: &DriftSpec) -> Result<Self> {
        let r = d.rank();
        let mut signs = Vec::new();
        let mut rates = Vec::new();
        for (s, img) in d.images.iter().enumerate() {
            let diff = sub(&d.nu, img);
            let k: Vec<f64> = d.rs.coweights.iter().map(|w| dot(&diff, w)).collect();
            if k.iter().any(|&v| v <= 1e-12) {
                continue;
            }
            let sign = d.signs[s] * if r % 2 == 0 { 1.0 } else { -1.0 };
            signs.push(sign);
            rates.push(k);
        }
        let positive: Vec<usize> = (0..signs.len()).filter(|&k| signs[k] > 0.0).collect();
        if positive.is_empty() {
            return Err(Error::precondition("minimum density has no positive term"));
        }
        let acc = 1.0 / positive.len() as f64;
        if acc < MIN_ACCEPTANCE {
            return Err(Error::LowAcceptance(acc));
        }
        Ok(MinimumSampler { rank: r, signs, rates, positive, coweights: d.rs.coweights.clone() })
    }

    pub fn acceptance(&self) -> f64 {
        1.0 / self.positive.len() as f64
    }

    fn term(&self, k: usize, u: &[f64]) -> f64 {
        self.rates[k]
            .iter()
            .zip(u)
            .map(|(r, x)| r * (-r * x).exp())
            .product()
    }

    /// Wall coordinates u_i = -<M, e_i> >= 0.
    pub fn sample_coordinates<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        loop {
            let k = self.positive[rng.random_range(0..self.positive.len())];
            let u: Vector = self.rates[k]
                .iter()
                .map(|&r| Exp::new(r).expect("positive rate").sample(rng))
                .collect();
            let env: f64 = self.positive.iter().map(|&j| self.term(j, &u)).sum();
            let f: f64 = (0..self.signs.len())
                .map(|j| self.signs[j] * self.term(j, &u))
                .sum();
            if rng.random::<f64>() * env <= f {
                return u;
            }
        }
    }

    /// The minimum M as a vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let u = self.sample_coordinates(rng);
        let mut m = vec![0.0; self.rank];
        for (ui, w) in u.iter().zip(&self.coweights) {
            for k in 0..self.rank {
                m[k] -= ui * w[k];
            }
        }
        m
    }
}

pub fn sample_min<R: Rng + ?Sized>(d: &DriftSpec, rng: &mut R) -> Result<Vector> {
    Ok(MinimumSampler::new(d)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scale;
    use crate::mc::{map_samples, sample_rng};
    use crate::roots::{RootKind, RootSystem};

    #[test]
    fn acceptance_rates() {
        let rs = RootSystem::build(RootKind::A2).unwrap();
        let d = DriftSpec::new(rs.clone(), rs.rho.clone()).unwrap();
        assert!((MinimumSampler::new(&d).unwrap().acceptance() - 0.5).abs() < 1e-15);
        let g2 = RootSystem::build(RootKind::G2).unwrap();
        let d = DriftSpec::new(g2.clone(), g2.rho.clone()).unwrap();
        assert!((MinimumSampler::new(&d).unwrap().acceptance() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn a1_minimum_is_exponential() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        let nu = scale(&rs.simple_roots[0], 0.6);
        let d = DriftSpec::new(rs.clone(), nu.clone()).unwrap();
        let s = MinimumSampler::new(&d).unwrap();
        let rate = dot(&nu, &rs.simple_roots[0]);
        let n = 40_000;
        let u = map_samples(5, n, |rng, _| s.sample_coordinates(rng)[0]);
        let mean = u.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0 / rate).abs() < 4.0 / rate / (n as f64).sqrt());
        let m = s.sample(&mut sample_rng(1, 0));
        assert!(m[0] <= 0.0);
    }

    #[test]
    fn samples_lie_in_negative_chamber() {
        let rs = RootSystem::build(RootKind::B2).unwrap();
        let d = DriftSpec::new(rs.clone(), rs.rho.clone()).unwrap();
        let s = MinimumSampler::new(&d).unwrap();
        for k in 0..2000 {
            let m = s.sample(&mut sample_rng(9, k));
            assert!(rs.pairings(&m).iter().all(|&p| p <= 0.0));
        }
    }
}
