//! Class-one Whittaker functions: Gamma coefficients, Monte Carlo and series evaluation,
//! asymptotic expansion and reflection coefficients.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, sub, Vector};
use crate::mc::{map_samples, summarize, MCEstimate};
use crate::quad::{integrate, QuadOptions};
use crate::roots::RootSystem;
use crate::sim::{
    bridge_exp_integral, estimate_exp_functional, estimate_j, exp_functional_moment,
    j_moment_closed, SimConfig, UnitWeight, STEP_CAP, STOP_LEVEL,
};
use crate::special::{gamma, SignedLog};

#[derive(Debug, Clone)]
pub struct WhittakerParams {
    pub rs: RootSystem,
    pub mu: Vector,
    pub x: Vector,
}

impl WhittakerParams {
    pub fn new(rs: RootSystem, mu: Vector, x: Vector) -> Result<Self> {
        if mu.len() != rs.rank || x.len() != rs.rank {
            return Err(Error::precondition("spectral parameter and point must have the rank's dimension"));
        }
        if !rs.in_chamber(&mu) {
            return Err(Error::precondition("spectral parameter must lie in the open chamber"));
        }
        Ok(WhittakerParams { rs, mu, x })
    }
}

/// <mu, e^vee> = 2 <mu, e> / <e, e>
pub fn coroot_pairing(mu: &[f64], e: &[f64]) -> f64 {
    2.0 * dot(mu, e) / norm2(e)
}

fn b_log(rs: &RootSystem, mu: &[f64], primed: bool) -> Result<SignedLog> {
    let mut p = SignedLog::one();
    for e in &rs.positive_roots {
        let k = coroot_pairing(mu, e);
        p.mul_gamma(k).map_err(|_| {
            Error::pole(format!("Gamma(<mu, e^vee>) has a pole at {k} for the positive root {e:?}"))
        })?;
        if primed {
            p.mul_pow(2.0 / norm2(e), -0.5 * k)?;
        }
    }
    Ok(p)
}

/// b(mu) = prod_{e > 0} Gamma(<mu, e^vee>)
pub fn b_coeff(rs: &RootSystem, mu: &[f64]) -> Result<f64> {
    Ok(b_log(rs, mu, false)?.value())
}

/// b'(mu) = prod_{e > 0} (2 / <e, e>)^(-<mu, e^vee> / 2) Gamma(<mu, e^vee>)
pub fn b_prime(rs: &RootSystem, mu: &[f64]) -> Result<f64> {
    Ok(b_log(rs, mu, true)?.value())
}

/// r'_s(mu) = b'(s mu) / b'(mu)
pub fn whittaker_refl(rs: &RootSystem, mu: &[f64], s: usize) -> Result<f64> {
    let smu = rs.weyl().elements[s].apply(mu);
    let mut r = b_log(rs, &smu, true)?;
    r.div(b_log(rs, mu, true)?);
    Ok(r.value())
}

/// Closed form for a simple reflection: -(2/<e_i,e_i>)^k Gamma(1-k) / Gamma(1+k), k = <mu, e_i^vee>.
pub fn simple_refl_closed(rs: &RootSystem, mu: &[f64], i: usize) -> Result<f64> {
    let e = &rs.simple_roots[i];
    let k = coroot_pairing(mu, e);
    let mut r = SignedLog::from_value(-1.0);
    r.mul_pow(2.0 / norm2(e), k)?.mul_gamma(1.0 - k)?.div_gamma(1.0 + k)?;
    Ok(r.value())
}

/// MC form -<e_i,e_i>^(-k) Gamma(1-k) E[J(k/2)^k].
pub fn refl_mc(rs: &RootSystem, mu: &[f64], i: usize, cfg: &SimConfig) -> Result<MCEstimate> {
    let e = &rs.simple_roots[i];
    let k = coroot_pairing(mu, e);
    if !(k > 0.0) {
        return Err(Error::precondition("need <mu, e_i^vee> > 0"));
    }
    let c = -norm2(e).powf(-k) * gamma(1.0 - k)?;
    Ok(estimate_j(0.5 * k, 1.0, 1.0, &UnitWeight, k, cfg)?.scaled(c))
}

pub fn moment_closed(mu: f64, p: f64) -> Result<f64> {
    exp_functional_moment(mu, p)
}

pub fn moment_closed_conditioned(mu: f64) -> Result<f64> {
    j_moment_closed(mu)
}

/// eps * E[(int exp(-B^mu))^(2 mu - eps)] by MC, its exact value and the eps -> 0 limit
/// 2 mu E[J(mu)^(2 mu)].
pub fn tilted_moment_limit(mu: f64, eps: f64, cfg: &SimConfig) -> Result<(MCEstimate, f64, f64)> {
    let e = estimate_exp_functional(mu, 2.0 * mu - eps, cfg)?;
    let limit = 2.0 * mu * j_moment_closed(mu)?;
    Ok((e.estimate.scaled(eps), eps * e.closed_form, limit))
}

/// Coefficient c_i = <e_i, e_i> / 2 in front of each wall functional.
fn wall_weights(rs: &RootSystem) -> Vec<f64> {
    (0..rs.rank).map(|i| 0.5 * rs.norm2_root(i)).collect()
}

/// I_i = int_0^inf exp(-<B^mu_t, e_i>) dt for one path, and the level min_i <B, e_i> where
/// the path was stopped.
pub fn sample_wall_functionals<R: Rng + ?Sized>(
    rs: &RootSystem,
    mu: &[f64],
    cfg: &SimConfig,
    rng: &mut R,
) -> (Vector, f64) {
    let r = rs.rank;
    let vars: Vec<f64> = (0..r).map(|i| rs.norm2_root(i)).collect();
    let mut b = vec![0.0; r];
    let mut y = vec![0.0; r];
    let mut yn = vec![0.0; r];
    let mut acc = vec![0.0; r];
    let mut t = 0.0;
    loop {
        let m = y.iter().copied().fold(f64::INFINITY, f64::min);
        if m >= STOP_LEVEL || t >= cfg.t_max {
            return (acc, m);
        }
        let h = cfg.dt * m.exp().clamp(1.0, STEP_CAP);
        let sd = h.sqrt();
        for k in 0..r {
            b[k] += mu[k] * h + sd * rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..r {
            yn[i] = dot(&b, &rs.simple_roots[i]);
            acc[i] += bridge_exp_integral(y[i], yn[i], h, vars[i]);
        }
        std::mem::swap(&mut y, &mut yn);
        t += h;
    }
}

/// MC estimates of Psi_mu at several points from common paths.
pub fn whittaker_mc_many(rs: &RootSystem, mu: &[f64], xs: &[Vector], cfg: &SimConfig) -> Result<Vec<MCEstimate>> {
    cfg.validate()?;
    if !rs.in_chamber(mu) {
        return Err(Error::precondition("spectral parameter must lie in the open chamber"));
    }
    let b = b_coeff(rs, mu)?;
    let c = wall_weights(rs);
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| sample_wall_functionals(rs, mu, cfg, rng));
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        let q: Vec<f64> = rs.pairings(x).iter().zip(&c).map(|(p, ci)| ci * (-p).exp()).collect();
        let vals: Vec<f64> = draws
            .iter()
            .map(|(i, _)| (-q.iter().zip(i).map(|(a, b)| a * b).sum::<f64>()).exp())
            .collect();
        let scale = b * dot(mu, x).exp();
        let mut e = summarize(&vals, cfg.seed).scaled(scale);
        let worst = draws.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        let tail: f64 = (0..rs.rank)
            .map(|i| q[i] * (-worst).exp() * 2.0 / dot(mu, &rs.simple_roots[i]))
            .sum();
        e.truncation_bound = scale.abs() * tail;
        out.push(e);
    }
    Ok(out)
}

pub fn whittaker_mc(p: &WhittakerParams, cfg: &SimConfig) -> Result<MCEstimate> {
    Ok(whittaker_mc_many(&p.rs, &p.mu, std::slice::from_ref(&p.x), cfg)?.remove(0))
}

/// Coefficient of the exponential e^{<s mu, x>} in Psi_mu, in log form.
fn expansion_coefficient(rs: &RootSystem, mu: &[f64], s: usize) -> Result<SignedLog> {
    let smu = rs.weyl().elements[s].apply(mu);
    // b(mu) b'(s mu) / b'(mu) times the shift absorbing the wall weights
    let mut c = b_log(rs, mu, false)?;
    c.mul(b_log(rs, &smu, true)?).div(b_log(rs, mu, true)?);
    let logc: Vec<f64> = wall_weights(rs).iter().map(|w| w.ln()).collect();
    let delta = rs.from_pairings(&logc);
    c.log_abs -= dot(&sub(&smu, mu), &delta);
    Ok(c)
}

/// Terms kept by the expansion: identity, the simple reflections, then s_1 ... s_r.
pub fn expansion_elements(rs: &RootSystem) -> Vec<usize> {
    let g = rs.weyl();
    let mut v = vec![g.from_word(&[])];
    for i in 0..rs.rank {
        v.push(g.from_word(&[i]));
    }
    if rs.rank > 1 {
        let word: Vec<usize> = (0..rs.rank).collect();
        v.push(g.from_word(&word));
    }
    v
}

/// <s mu - mu, omega_i^vee> > -1 for all s and i.
pub fn expansion_hypothesis(rs: &RootSystem, mu: &[f64]) -> bool {
    rs.weyl().elements.iter().all(|s| {
        let d = sub(&s.apply(mu), mu);
        rs.coweights.iter().all(|w| dot(&d, w) > -1.0)
    })
}

/// <s_1...s_r mu - s' mu, x> > 0 for every other s' in W_{1..r}, and the first series
/// correction of the leading term, e^{<mu - e_j, x>}, is also below e^{<s_1...s_r mu, x>}.
pub fn expansion_regime_ok(rs: &RootSystem, mu: &[f64], x: &[f64]) -> bool {
    let g = rs.weyl();
    let word: Vec<usize> = (0..rs.rank).collect();
    let s = g.from_word(&word);
    let lead = dot(&g.elements[s].apply(mu), x);
    let first_correction = dot(mu, x) - rs.pairings(x).iter().cloned().fold(f64::INFINITY, f64::min);
    lead > first_correction
        && rs
            .full_support_subset()
            .into_iter()
            .filter(|&k| k != s)
            .all(|k| lead > dot(&g.elements[k].apply(mu), x))
}

/// Partial sum of the expansion with `order` terms (1, 1 + r or 2 + r).
pub fn whittaker_asymptotic(rs: &RootSystem, mu: &[f64], x: &[f64], order: usize) -> Result<f64> {
    let els = expansion_elements(rs);
    if order == 0 || order > els.len() {
        return Err(Error::precondition(format!("order must be between 1 and {}", els.len())));
    }
    let g = rs.weyl();
    let mut total = 0.0;
    for &s in &els[..order] {
        let mut c = expansion_coefficient(rs, mu, s)?;
        c.log_abs += dot(&g.elements[s].apply(mu), x);
        total += c.value();
    }
    Ok(total)
}

/// The individual terms of the full expansion, labelled by group element.
pub fn expansion_terms(rs: &RootSystem, mu: &[f64], x: &[f64]) -> Result<Vec<(String, f64)>> {
    let g = rs.weyl();
    expansion_elements(rs)
        .into_iter()
        .map(|s| {
            let mut c = expansion_coefficient(rs, mu, s)?;
            c.log_abs += dot(&g.elements[s].apply(mu), x);
            Ok((g.elements[s].label(), c.value()))
        })
        .collect()
}

const SERIES_TOL: f64 = 1e-17;

fn max_series_degree(rank: usize) -> usize {
    match rank {
        1 => 400,
        2 => 160,
        _ => 40,
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total as u32]];
    }
    let mut out = Vec::new();
    for k in 0..=total {
        for mut rest in compositions(total - k, parts - 1) {
            rest.insert(0, k as u32);
            out.push(rest);
        }
    }
    out
}

/// m_lambda(x) e^{-<lambda, x>} = sum_n a_n exp(-sum n_i <x, e_i>), a_0 = 1, solving the
/// eigen-equation of 1/2 Laplacian - sum_i c_i e^{-<x, e_i>} term by term.
pub fn eigen_series(rs: &RootSystem, lambda: &[f64], x: &[f64]) -> Result<f64> {
    let r = rs.rank;
    let c = wall_weights(rs);
    let p = rs.pairings(x);
    let gram: Vec<Vec<f64>> = (0..r)
        .map(|i| (0..r).map(|j| dot(&rs.simple_roots[i], &rs.simple_roots[j])).collect())
        .collect();
    let lam: Vec<f64> = rs.pairings(lambda);
    let mut coef: HashMap<Vec<u32>, f64> = HashMap::new();
    coef.insert(vec![0; r], 1.0);
    let mut sum = 1.0;
    let scale: f64 = (0..r).map(|i| c[i] * (-p[i]).exp()).fold(0.0, f64::max);
    let min_degree = (2.0 * scale.sqrt()).ceil() as usize + 4;
    let mut quiet = 0;
    for deg in 1..=max_series_degree(r) {
        let mut level = 0.0;
        for n in compositions(deg, r) {
            let mut d = 0.0;
            for i in 0..r {
                for j in 0..r {
                    d += 0.5 * n[i] as f64 * n[j] as f64 * gram[i][j];
                }
                d -= n[i] as f64 * lam[i];
            }
            if d.abs() < 1e-10 {
                return Err(Error::pole(format!("series denominator vanishes at n = {n:?}")));
            }
            let mut num = 0.0;
            for i in 0..r {
                if n[i] > 0 {
                    let mut m = n.clone();
                    m[i] -= 1;
                    num += c[i] * coef.get(&m).copied().unwrap_or(0.0);
                }
            }
            let a = num / d;
            let e: f64 = (0..r).map(|i| n[i] as f64 * p[i]).sum();
            level += a * (-e).exp();
            coef.insert(n, a);
        }
        sum += level;
        if level.abs() <= SERIES_TOL * sum.abs().max(1e-300) && deg >= min_degree {
            quiet += 1;
            if quiet >= 2 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::precondition("series did not converge; move the point further into the chamber"))
}

/// Psi_mu(x) = sum_s C_s(mu) e^{<s mu, x>} (series in e^{-<x, e_i>}), summed over the whole group.
pub fn whittaker_series(rs: &RootSystem, mu: &[f64], x: &[f64]) -> Result<f64> {
    let g = rs.weyl();
    let mut total = 0.0;
    for s in 0..g.order() {
        let smu = g.elements[s].apply(mu);
        let mut c = expansion_coefficient(rs, mu, s)?;
        c.log_abs += dot(&smu, x);
        total += c.value() * eigen_series(rs, &smu, x)?;
    }
    Ok(total)
}

/// K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::precondition("Bessel K needs z > 0"));
    }
    let nu = nu.abs();
    // integrand below e^-60 of its peak beyond t_end
    let mut t_end: f64 = 1.0;
    while z * t_end.cosh() - nu * t_end - z < 60.0 {
        t_end += 1.0;
    }
    let opt = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_panels: 4000 };
    let scaled = integrate(|t| (-z * (t.cosh() - 1.0) + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp()), 0.0, t_end, opt);
    Ok(scaled * (-z).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionRow {
    pub scale: f64,
    pub exact: f64,
    pub asymptotic: f64,
    pub residual: f64,
    pub last_term: f64,
}

/// Residual of the full expansion along x = scale * ray against the series value.
pub fn expansion_table(rs: &RootSystem, mu: &[f64], ray: &[f64], scales: &[f64]) -> Result<Vec<ExpansionRow>> {
    let els = expansion_elements(rs);
    scales
        .iter()
        .map(|&k| {
            let x: Vector = ray.iter().map(|v| v * k).collect();
            let exact = whittaker_series(rs, mu, &x)?;
            let asymptotic = whittaker_asymptotic(rs, mu, &x, els.len())?;
            let terms = expansion_terms(rs, mu, &x)?;
            Ok(ExpansionRow {
                scale: k,
                exact,
                asymptotic,
                residual: exact - asymptotic,
                last_term: terms.last().map(|t| t.1).unwrap_or(0.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::RootKind;

    fn a2() -> RootSystem {
        RootSystem::build(RootKind::A2).unwrap()
    }

    fn mu_from_coroot(rs: &RootSystem, k: &[f64]) -> Vector {
        // <mu, e_i^vee> = k_i  <=>  <mu, e_i> = k_i |e_i|^2 / 2
        let p: Vec<f64> = k.iter().enumerate().map(|(i, v)| v * rs.norm2_root(i) / 2.0).collect();
        rs.from_pairings(&p)
    }

    #[test]
    fn b_coefficient_examples() {
        let a1 = RootSystem::build(RootKind::A1).unwrap();
        let mu = mu_from_coroot(&a1, &[1.0]);
        assert!((b_coeff(&a1, &mu).unwrap() - 1.0).abs() < 1e-13);
        let rs = a2();
        let mu = mu_from_coroot(&rs, &[1.0, 1.0]);
        assert!((b_coeff(&rs, &mu).unwrap() - 1.0).abs() < 1e-13);
        let mu = mu_from_coroot(&rs, &[0.5, 0.25]);
        let want = gamma(0.5).unwrap() * gamma(0.25).unwrap() * gamma(0.75).unwrap();
        assert!((b_coeff(&rs, &mu).unwrap() / want - 1.0).abs() < 1e-13);
        // simply laced: b' = b
        assert!((b_prime(&rs, &mu).unwrap() / want - 1.0).abs() < 1e-13);
        let bad = mu_from_coroot(&rs, &[-1.0, 0.5]);
        assert!(matches!(b_coeff(&rs, &bad), Err(Error::Pole(_))));
    }

    #[test]
    fn reflection_examples_and_cocycle() {
        let a1 = RootSystem::build(RootKind::A1).unwrap();
        let mu = mu_from_coroot(&a1, &[0.5]);
        assert!((whittaker_refl(&a1, &mu, 0).unwrap() - 1.0).abs() < 1e-14);
        let s = a1.weyl().by_label("s1").unwrap();
        assert!((whittaker_refl(&a1, &mu, s).unwrap() + 2.0).abs() < 1e-12);
        for kind in [RootKind::A2, RootKind::B2, RootKind::G2] {
            let rs = RootSystem::build(kind).unwrap();
            let mu = mu_from_coroot(&rs, &[0.37, 0.21]);
            let g = rs.weyl();
            for i in 0..2 {
                let s = g.from_word(&[i]);
                let a = whittaker_refl(&rs, &mu, s).unwrap();
                let b = simple_refl_closed(&rs, &mu, i).unwrap();
                assert!((a / b - 1.0).abs() < 1e-12);
            }
            for s in 0..g.order() {
                for t in 0..g.order() {
                    let st = g.product(s, t);
                    let tmu = g.elements[t].apply(&mu);
                    let lhs = whittaker_refl(&rs, &mu, st).unwrap();
                    let rhs = whittaker_refl(&rs, &tmu, s).unwrap() * whittaker_refl(&rs, &mu, t).unwrap();
                    assert!((lhs / rhs - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bessel_reference_values() {
        // K_0(1), K_{1/2}(2) = sqrt(pi/4) e^-2, K_1(0.1)
        assert!((bessel_k(0.0, 1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-12);
        let want = (std::f64::consts::PI / 4.0).sqrt() * (-2.0f64).exp();
        assert!((bessel_k(0.5, 2.0).unwrap() - want).abs() < 1e-13);
        assert!((bessel_k(1.0, 0.1).unwrap() / 9.853_844_780_870_606 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn a1_series_is_bessel() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        for k in [0.3, 0.77, 1.4] {
            let mu = mu_from_coroot(&rs, &[k]);
            for c in [-1.0, 0.5, 3.0] {
                let x = rs.from_pairings(&[c]);
                let s = whittaker_series(&rs, &mu, &x).unwrap();
                let exact = 2.0 * bessel_k(k, 2.0 * (-c / 2.0f64).exp()).unwrap();
                assert!((s / exact - 1.0).abs() < 1e-9, "{k} {c} {s} {exact}");
            }
        }
    }

    #[test]
    fn series_is_weyl_invariant() {
        let rs = a2();
        let mu = mu_from_coroot(&rs, &[0.31, 0.17]);
        let x = rs.from_pairings(&[0.7, 1.3]);
        let base = whittaker_series(&rs, &mu, &x).unwrap();
        // expansion coefficients of the image agree up to relabelling
        for s in 0..rs.weyl().order() {
            let smu = rs.weyl().elements[s].apply(&mu);
            let v = whittaker_series(&rs, &smu, &x);
            if let Ok(v) = v {
                assert!((v / base - 1.0).abs() < 1e-9, "{s} {v} {base}");
            }
        }
    }

    #[test]
    fn mc_matches_series_a1_and_b2() {
        let cfg = SimConfig { dt: 1e-3, t_max: 1e4, n_samples: 4000, seed: 21, ..Default::default() };
        for (kind, k) in [(RootKind::A1, vec![0.6]), (RootKind::B2, vec![0.4, 0.3])] {
            let rs = RootSystem::build(kind).unwrap();
            let mu = mu_from_coroot(&rs, &k);
            let x = rs.from_pairings(&vec![0.8; rs.rank]);
            let p = WhittakerParams::new(rs.clone(), mu.clone(), x.clone()).unwrap();
            let e = whittaker_mc(&p, &cfg).unwrap();
            let s = whittaker_series(&rs, &mu, &x).unwrap();
            assert!(e.z_against(s) < 3.5, "{e:?} {s}");
        }
    }

    #[test]
    fn leading_term_dominates_far_inside() {
        let rs = a2();
        let mu = mu_from_coroot(&rs, &[0.3, 0.3]);
        let x = rs.from_pairings(&[60.0, 60.0]);
        let lead = whittaker_asymptotic(&rs, &mu, &x, 1).unwrap();
        let s = whittaker_series(&rs, &mu, &x).unwrap();
        assert!((s / lead - 1.0).abs() < 1e-6);
        let x = rs.from_pairings(&[12.0, 12.0]);
        let full = whittaker_asymptotic(&rs, &mu, &x, 4).unwrap();
        let s = whittaker_series(&rs, &mu, &x).unwrap();
        assert!((s / full - 1.0).abs() < 1e-3);
        assert!(expansion_hypothesis(&rs, &mu));
        assert!(!expansion_hypothesis(&rs, &mu_from_coroot(&rs, &[1.5, 1.5])));
    }
}
