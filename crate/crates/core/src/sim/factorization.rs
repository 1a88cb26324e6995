use serde::Serialize;

use super::{bridge_exp_integral, run_welded, sample_j, SimConfig, StepObserver, UnitWeight, STOP_LEVEL};
use crate::chamber::DriftSpec;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::mc::{map_samples, summarize, MCEstimate};

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub start: Vec<f64>,
    /// E_x[prod_i F_i(J_i)] along the full conditioned process.
    pub joint: MCEstimate,
    /// prod_i E[F_i(J(mu_i))] with independent one-dimensional integrals.
    pub product: MCEstimate,
    /// mu_i = <s_{i+1} ... s_r nu, e_i>
    pub drifts: Vec<f64>,
    /// |joint - product| / combined stderr
    pub discrepancy: f64,
    pub truncated_fraction: f64,
}

/// J_i = int_0^inf exp(-<X_t, e_i>) dt for one path of the process conditioned to stay in
/// the chamber from x (minimum at the origin, walls dropped as they are hit).
pub fn wall_integrals<R: rand::Rng + ?Sized>(
    d: &DriftSpec,
    x: &[f64],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, bool)> {
    let r = d.rank();
    let roots = &d.rs.simple_roots;
    let vars: Vec<f64> = (0..r).map(|i| d.rs.norm2_root(i)).collect();
    let mut acc = vec![0.0; r];
    let mut obs = |t0: f64, x0: &[f64], t1: f64, x1: &[f64], _: usize| {
        for i in 0..r {
            let a = dot(x0, &roots[i]);
            let b = dot(x1, &roots[i]);
            acc[i] += bridge_exp_integral(a, b, t1 - t0, vars[i]);
        }
    };
    let stop = |_: f64, y: &[f64]| d.rs.pairings(y).iter().all(|&p| p >= STOP_LEVEL);
    let all: Vec<usize> = (0..r).collect();
    let origin = vec![0.0; r];
    let observer: &mut StepObserver<'_> = &mut obs;
    let run = run_welded(d, &origin, x, &all, cfg, rng, &[], false, Some(observer), Some(&stop))?;
    let unfinished = run.truncated || d.rs.pairings(&run.end).iter().any(|&p| p < STOP_LEVEL);
    Ok((acc, unfinished))
}

/// Compare the joint law of the wall integrals with the product of one-dimensional laws,
/// using test functions F_i(j) = exp(-lambda_i j).
pub fn factorization_check(
    d: &DriftSpec,
    lambdas: &[f64],
    x: &[f64],
    cfg: &SimConfig,
) -> Result<FactorizationReport> {
    cfg.validate()?;
    let r = d.rank();
    if r > 2 {
        return Err(Error::precondition("factorization check supports rank <= 2"));
    }
    if lambdas.len() != r || lambdas.iter().any(|&l| l < 0.0) {
        return Err(Error::precondition("need one nonnegative test exponent per wall"));
    }
    if !d.rs.in_chamber(x) {
        return Err(Error::precondition("start must lie inside the chamber"));
    }
    let mut drifts = Vec::with_capacity(r);
    for i in 0..r {
        let mut v = d.nu.clone();
        for j in (i + 1..r).rev() {
            v = d.rs.apply_reflection(j, &v);
        }
        let mu = dot(&v, &d.rs.simple_roots[i]);
        if !(mu > 0.0) {
            return Err(Error::precondition("limiting drift must be positive"));
        }
        drifts.push(mu);
    }
    let joint_draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| {
        wall_integrals(d, x, cfg, rng).map(|(j, tr)| {
            let f: f64 = j.iter().zip(lambdas).map(|(ji, l)| (-l * ji).exp()).product();
            (f, tr)
        })
    });
    let mut vals = Vec::with_capacity(cfg.n_samples);
    let mut truncated = 0usize;
    for dr in joint_draws {
        let (f, tr) = dr?;
        vals.push(f);
        truncated += tr as usize;
    }
    let joint = summarize(&vals, cfg.seed);

    // independent factors; a distinct seed stream per factor
    let mut mean = 1.0;
    let mut rel2 = 0.0;
    for i in 0..r {
        let v = d.rs.norm2_root(i);
        let seed = cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
        let f = map_samples(seed, cfg.n_samples, |rng, _| {
            (-lambdas[i] * sample_j(drifts[i], v, 1.0, &UnitWeight, cfg, rng).0).exp()
        });
        let e = summarize(&f, seed);
        mean *= e.mean;
        if e.mean != 0.0 {
            rel2 += (e.stderr / e.mean).powi(2);
        }
    }
    let product = MCEstimate {
        mean,
        stderr: mean.abs() * rel2.sqrt(),
        n: cfg.n_samples,
        seed: cfg.seed,
        truncation_bound: 0.0,
    };
    let se = (joint.stderr.powi(2) + product.stderr.powi(2)).sqrt();
    let diff = (joint.mean - product.mean).abs();
    let discrepancy = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(FactorizationReport {
        start: x.to_vec(),
        joint,
        product,
        drifts,
        discrepancy,
        truncated_fraction: truncated as f64 / cfg.n_samples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scale;
    use crate::roots::{RootKind, RootSystem};

    #[test]
    fn trivial_test_functions_agree() {
        let rs = RootSystem::build(RootKind::A2).unwrap();
        let d = DriftSpec::new(rs.clone(), rs.rho.clone()).unwrap();
        let cfg = SimConfig { dt: 1e-2, t_max: 200.0, n_samples: 20, seed: 1, ..Default::default() };
        let x = rs.from_pairings(&[2.0, 6.0]);
        let rep = factorization_check(&d, &[0.0, 0.0], &x, &cfg).unwrap();
        assert_eq!(rep.joint.mean, 1.0);
        assert_eq!(rep.product.mean, 1.0);
        assert_eq!(rep.discrepancy, 0.0);
    }

    #[test]
    fn rank_one_matches_single_integral() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        let nu = scale(&rs.simple_roots[0], 0.4);
        let d = DriftSpec::new(rs.clone(), nu).unwrap();
        let cfg = SimConfig { dt: 2e-3, t_max: 400.0, n_samples: 3000, seed: 3, ..Default::default() };
        let x = rs.from_pairings(&[8.0]);
        let rep = factorization_check(&d, &[1.0], &x, &cfg).unwrap();
        assert!(rep.discrepancy < 3.0, "{rep:?}");
    }
}
