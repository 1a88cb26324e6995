use rand::Rng;

use super::{normal_vec, PathSample, SimConfig};
use crate::chamber::DriftSpec;
use crate::error::Result;
use crate::linalg::{add, axpy, dot, norm2, scale, sub, Vector};
use crate::mc::{map_samples, summarize, MCEstimate};

/// Euler path of BM with drift nu from x0 on the grid k * dt up to t_max.
pub fn sample_drifted_bm<R: Rng + ?Sized>(
    d: &DriftSpec,
    x0: &[f64],
    cfg: &SimConfig,
    rng: &mut R,
) -> PathSample {
    let r = d.rank();
    let mut p = PathSample::default();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    p.push(t, &x, 0);
    while t < cfg.t_max - 1e-12 {
        let h = cfg.dt.min(cfg.t_max - t);
        let dw = normal_vec(rng, r, h.sqrt());
        x = add(&axpy(&x, h, &d.nu), &dw);
        t += h;
        p.push(t, &x, 0);
    }
    p
}

/// Exact position of drifted BM from the origin at time t.
pub fn direct_endpoint<R: Rng + ?Sized>(d: &DriftSpec, t: f64, rng: &mut R) -> Vector {
    add(&scale(&d.nu, t), &normal_vec(rng, d.rank(), t.sqrt()))
}

/// Probability that drifted BM from x0 avoids M + boundary up to time t, with each step
/// weighted by its Brownian-bridge survival probability (exact at rank 1).
pub fn survival_mc(d: &DriftSpec, m: &[f64], x0: &[f64], t: f64, cfg: &SimConfig) -> Result<MCEstimate> {
    cfg.validate()?;
    let r = d.rank();
    let norms: Vec<f64> = d.rs.simple_roots.iter().map(|e| norm2(e).sqrt()).collect();
    let dist = |x: &[f64]| -> Vector {
        let y = sub(x, m);
        (0..r).map(|i| dot(&y, &d.rs.simple_roots[i]) / norms[i]).collect()
    };
    let vals = map_samples(cfg.seed, cfg.n_samples, |rng, _| {
        let mut x = x0.to_vec();
        let mut a = dist(&x);
        let mut w = 1.0;
        let mut s = 0.0;
        while s < t - 1e-12 {
            let h = cfg.dt.min(t - s);
            let dw = normal_vec(rng, r, h.sqrt());
            x = add(&axpy(&x, h, &d.nu), &dw);
            s += h;
            let b = dist(&x);
            for i in 0..r {
                if b[i] <= 0.0 {
                    return 0.0;
                }
                w *= 1.0 - (-2.0 * a[i] * b[i] / h).exp();
            }
            a = b;
        }
        w
    });
    Ok(summarize(&vals, cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chamber::survival_1d;
    use crate::mc::sample_rng;
    use crate::roots::{RootKind, RootSystem};

    #[test]
    fn mean_displacement_and_variance() {
        let rs = RootSystem::build(RootKind::A2).unwrap();
        let d = DriftSpec::new(rs.clone(), rs.rho.clone()).unwrap();
        let cfg = SimConfig { dt: 0.01, t_max: 1.0, ..Default::default() };
        let n = 10_000;
        let ends = map_samples(3, n, |rng, _| sample_drifted_bm(&d, &[0.0, 0.0], &cfg, rng).last().unwrap().clone());
        for k in 0..2 {
            let mean = ends.iter().map(|e| e[k]).sum::<f64>() / n as f64;
            let var = ends.iter().map(|e| (e[k] - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((mean - d.nu[k]).abs() < 3.0 / (n as f64).sqrt());
            assert!((var - 1.0).abs() < 0.05);
        }
        let p = sample_drifted_bm(&d, &[0.0, 0.0], &cfg, &mut sample_rng(0, 0));
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rank_one_survival_matches_closed_form() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        let nu = scale(&rs.simple_roots[0], 0.3);
        let d = DriftSpec::new(rs, nu.clone()).unwrap();
        let cfg = SimConfig { dt: 0.02, n_samples: 20_000, seed: 4, ..Default::default() };
        let est = survival_mc(&d, &[0.0], &[0.5], 1.0, &cfg).unwrap();
        let exact = survival_1d(0.5, nu[0], 1.0);
        assert!(est.z_against(exact) < 3.5, "{est:?} {exact}");
    }
}
