//! Toda and Liouville reflection coefficients, their algebraic identities, and the Monte Carlo
//! route to the simple reflections through the GMC-weighted path integral J.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gmc::{background_charge, CircleWeight, GmcConfig};
use crate::linalg::{dot, sub, transpose, Vector};
use crate::mc::MCEstimate;
use crate::roots::{RootKind, RootSystem};
use crate::sim::{estimate_j, SimConfig};
use crate::special::{special_l, SignedLog};

#[derive(Debug, Clone)]
pub struct TodaParams {
    pub rs: RootSystem,
    pub gamma: f64,
    /// Cosmological constants mu_i.
    pub mu: Vec<f64>,
    /// Background charge gamma rho + (2/gamma) rho^vee.
    pub q: Vector,
    /// Set on parameters produced by duality: gamma lies outside the GMC range and only the
    /// closed-form identities are meaningful.
    pub identity_only: bool,
}

impl TodaParams {
    pub fn new(rs: RootSystem, gamma: f64, mu: Vec<f64>) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2f64.sqrt()) {
            return Err(Error::precondition(format!("gamma = {gamma} must lie in (0, sqrt 2)")));
        }
        if mu.len() != rs.rank || mu.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::precondition("need one positive cosmological constant per simple root"));
        }
        let q = background_charge(&rs, gamma);
        Ok(TodaParams { rs, gamma, mu, q, identity_only: false })
    }

    /// gamma^2 <e_i, e_i> / 4
    fn l_arg(&self, i: usize) -> f64 {
        self.gamma * self.gamma * self.rs.norm2_root(i) / 4.0
    }

    /// mu_i pi l(gamma^2 <e_i, e_i> / 4), required positive.
    pub fn cosmological_base(&self, i: usize) -> Result<f64> {
        let b = self.mu[i] * PI * special_l(self.l_arg(i))?;
        if !(b > 0.0) {
            return Err(Error::precondition(format!("mu_i pi l(.) = {b} is not positive for i = {}", i + 1)));
        }
        Ok(b)
    }

    pub fn shift(&self, alpha: &[f64]) -> Vector {
        sub(alpha, &self.q)
    }

    pub fn hat(&self, s: usize, alpha: &[f64]) -> Vector {
        self.rs.hat_action(s, alpha, &self.q)
    }
}

fn a_func_log(tp: &TodaParams, x: &[f64]) -> Result<SignedLog> {
    let rs = &tp.rs;
    let g = tp.gamma;
    let mut out = SignedLog::one();
    for i in 0..rs.rank {
        out.mul_pow(tp.cosmological_base(i)?, dot(x, &rs.coweights[i]) / g)?;
    }
    for e in &rs.positive_roots {
        let n = dot(e, e);
        let pe = dot(x, e);
        out.mul_gamma(1.0 - 0.5 * g * pe)?;
        out.mul_gamma(1.0 - 2.0 * pe / (n * g))?;
    }
    Ok(out)
}

/// A(x) = prod_i (mu_i pi l(gamma^2 <e_i,e_i>/4))^{<x, omega_i^vee>/gamma}
///        prod_{e > 0} Gamma(1 - gamma <x, e>/2) Gamma(1 - <x, e^vee>/gamma)
pub fn a_func(tp: &TodaParams, x: &[f64]) -> Result<f64> {
    Ok(a_func_log(tp, x)?.value())
}

/// R_s(alpha) = eps(s) A(s(alpha - Q)) / A(alpha - Q).
pub fn refl_coeff(tp: &TodaParams, s: usize, alpha: &[f64]) -> Result<f64> {
    let el = &tp.rs.weyl().elements[s];
    let nu = tp.shift(alpha);
    let mut num = a_func_log(tp, &el.apply(&nu))?;
    num.div(a_func_log(tp, &nu)?);
    num.mul_value(el.sign());
    Ok(num.value())
}

/// Product representation in terms of the shift d = s^alpha - alpha, valid for elements whose
/// reduced words use every simple reflection exactly once.
pub fn refl_coeff_product(tp: &TodaParams, s: usize, alpha: &[f64]) -> Result<f64> {
    let rs = &tp.rs;
    let g = tp.gamma;
    let d = sub(&tp.hat(s, alpha), alpha);
    let mut out = SignedLog::from_value(rs.weyl().elements[s].sign());
    for i in 0..rs.rank {
        let w = dot(&d, &rs.weights[i]);
        let wv = dot(&d, &rs.coweights[i]);
        out.mul_pow(tp.cosmological_base(i)?, wv / g)?;
        out.mul_gamma(1.0 - 0.5 * g * w)?;
        out.mul_gamma(1.0 - wv / g)?;
        out.div_gamma(1.0 + 0.5 * g * w)?;
        out.div_gamma(1.0 + wv / g)?;
    }
    Ok(out.value())
}

/// True when s is a product of all simple reflections, each used once.
pub fn is_covered(rs: &RootSystem, s: usize) -> bool {
    let el = &rs.weyl().elements[s];
    el.length == rs.rank && rs.weyl().support(s).len() == rs.rank
}

/// Unit-volume coefficient eps(s) prod_i Gamma(1 - <s^alpha - alpha, omega_i^vee>/gamma)^{-1} R_s
/// with every mu_i = 1.
pub fn unit_volume_refl(tp: &TodaParams, s: usize, alpha: &[f64]) -> Result<f64> {
    let unit = TodaParams { mu: vec![1.0; tp.rs.rank], ..tp.clone() };
    let d = sub(&tp.hat(s, alpha), alpha);
    let mut out = SignedLog::from_value(refl_coeff(&unit, s, alpha)?);
    out.mul_value(tp.rs.weyl().elements[s].sign());
    for i in 0..tp.rs.rank {
        out.div_gamma(1.0 - dot(&d, &tp.rs.coweights[i]) / tp.gamma)?;
    }
    Ok(out.value())
}

/// Relative residual of R_{s tau}(alpha) = R_s(tau^ alpha) R_tau(alpha).
pub fn cocycle_residual(tp: &TodaParams, s: usize, tau: usize, alpha: &[f64]) -> Result<f64> {
    let st = tp.rs.weyl().product(s, tau);
    let lhs = refl_coeff(tp, st, alpha)?;
    let rhs = refl_coeff(tp, s, &tp.hat(tau, alpha))? * refl_coeff(tp, tau, alpha)?;
    Ok((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE))
}

/// gamma -> 2/gamma, e_i -> e_i^vee,
/// mu_i -> (mu_i pi l(x_i))^{1/x_i} / (pi l(1/x_i)) with x_i = gamma^2 <e_i,e_i>/4.
pub fn dual_params(tp: &TodaParams) -> Result<TodaParams> {
    let rs = &tp.rs;
    let dual_rs = RootSystem::from_simple_roots(RootKind::Cartan(transpose(&rs.cartan)), rs.coroots.clone())?;
    let mut mu = Vec::with_capacity(rs.rank);
    for i in 0..rs.rank {
        let x = tp.l_arg(i);
        mu.push(tp.cosmological_base(i)?.powf(1.0 / x) / (PI * special_l(1.0 / x)?));
    }
    let gamma = 2.0 / tp.gamma;
    let q = background_charge(&dual_rs, gamma);
    Ok(TodaParams { rs: dual_rs, gamma, mu, q, identity_only: true })
}

/// Index in the dual group of the element with the same matrix.
pub fn dual_element(tp: &TodaParams, dual: &TodaParams, s: usize) -> Result<usize> {
    dual.rs
        .weyl()
        .find(&tp.rs.weyl().elements[s].matrix)
        .ok_or_else(|| Error::InvalidRootSystem("dual group does not contain the element".into()))
}

/// Liouville coefficient in the normalization with Q = gamma/2 + 2/gamma:
/// R_L(a) = -(pi mu l(gamma^2/2))^{(Q-a)/gamma} Gamma((a-Q)/gamma) Gamma(gamma (a-Q)/2)
///          / [Gamma((Q-a)/gamma) Gamma(gamma (Q-a)/2)]
pub fn liouville_refl(gamma: f64, mu: f64, a: f64) -> Result<f64> {
    let q = gamma / 2.0 + 2.0 / gamma;
    let d = q - a;
    if !(d > 0.0 && d < 2.0 / gamma) {
        return Err(Error::precondition(format!("requires a - Q in (-2/gamma, 0), got {}", -d)));
    }
    let mut out = SignedLog::from_value(-1.0);
    out.mul_pow(PI * mu * special_l(gamma * gamma / 2.0)?, d / gamma)?;
    out.mul_gamma(-d / gamma)?;
    out.mul_gamma(-gamma * d / 2.0)?;
    out.div_gamma(d / gamma)?;
    out.div_gamma(gamma * d / 2.0)?;
    Ok(out.value())
}

/// Liouville coefficient with the log-kernel normalization E[X(x)X(y)] = ln 1/|x-y|:
/// R(a) = -(pi mu l(gamma^2/4))^{2(Q-a)/gamma} Gamma(-gamma (Q-a)/2) Gamma(-2(Q-a)/gamma)
///        / [Gamma(gamma (Q-a)/2) Gamma(2(Q-a)/gamma)], Q = gamma/2 + 2/gamma.
pub fn liouville_refl_standard(gamma: f64, mu: f64, a: f64) -> Result<f64> {
    let q = gamma / 2.0 + 2.0 / gamma;
    let d = q - a;
    if !(d > 0.0) {
        return Err(Error::precondition("requires a < Q"));
    }
    let mut out = SignedLog::from_value(-1.0);
    out.mul_pow(PI * mu * special_l(gamma * gamma / 4.0)?, 2.0 * d / gamma)?;
    out.mul_gamma(-gamma * d / 2.0)?;
    out.mul_gamma(-2.0 * d / gamma)?;
    out.div_gamma(gamma * d / 2.0)?;
    out.div_gamma(2.0 * d / gamma)?;
    Ok(out.value())
}

/// Liouville data reproducing R_{s_i}: the log-kernel coupling gamma |e_i| at the argument
/// <alpha, e_i>/|e_i|, and the equivalent (gamma_L, a_L) for `liouville_refl`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LiouvilleMatch {
    pub gamma_standard: f64,
    pub a_standard: f64,
    pub gamma: f64,
    pub a: f64,
}

pub fn liouville_match(tp: &TodaParams, i: usize, alpha: &[f64]) -> LiouvilleMatch {
    let len = tp.rs.norm2_root(i).sqrt();
    let e = &tp.rs.simple_roots[i];
    let gamma_standard = tp.gamma * len;
    let a_standard = dot(alpha, e) / len;
    let gamma = gamma_standard / 2f64.sqrt();
    let ql = gamma / 2.0 + 2.0 / gamma;
    let a = ql + 2f64.sqrt() * dot(&tp.shift(alpha), e) / len;
    LiouvilleMatch { gamma_standard, a_standard, gamma, a }
}

/// E[J_gamma(nu)^{-2 nu/gamma}] = (pi l(gamma^2/4))^{-2nu/gamma} Gamma(1 + gamma nu/2)
///                                / [Gamma(1 - 2nu/gamma) Gamma(1 - gamma nu/2)]
pub fn expected_j_power(gamma: f64, nu: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::precondition("requires gamma in (0, 2)"));
    }
    if !(nu < 0.0 && nu > -2.0 / gamma) {
        return Err(Error::precondition("requires nu in (-2/gamma, 0)"));
    }
    let mut out = SignedLog::one();
    out.mul_pow(PI * special_l(gamma * gamma / 4.0)?, -2.0 * nu / gamma)?;
    out.mul_gamma(1.0 + gamma * nu / 2.0)?;
    out.div_gamma(1.0 - 2.0 * nu / gamma)?;
    out.div_gamma(1.0 - gamma * nu / 2.0)?;
    Ok(out.value())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflMcReport {
    pub estimate: MCEstimate,
    pub closed_form: f64,
    /// E[J^p] estimate and its closed value.
    pub j_moment: MCEstimate,
    pub j_moment_closed: f64,
    pub power: f64,
}

/// R_{s_i}(alpha) = mu_i^p p Gamma(-p) E[J^p], p = -<alpha - Q, e_i^vee>/gamma, where J is the
/// two-sided integral of e^{-gamma |e_i| X} Z along the 1-d process with drift
/// |<alpha - Q, e_i>|/|e_i| conditioned to stay positive, Z the circle-average chaos.
/// The coupling in `cfg` is replaced by the one in `tp`.
pub fn refl_coeff_mc(tp: &TodaParams, i: usize, alpha: &[f64], cfg: &GmcConfig) -> Result<ReflMcReport> {
    if tp.identity_only {
        return Err(Error::precondition("dual parameters are for identity checks only"));
    }
    let rs = &tp.rs;
    let nu = tp.shift(alpha);
    let k = dot(&nu, &rs.coroots[i]);
    if !(k > -tp.gamma && k < 0.0) {
        return Err(Error::precondition(format!(
            "requires <alpha - Q, e_i^vee> in (-gamma, 0), got {k}"
        )));
    }
    let cfg = GmcConfig { gamma: tp.gamma, ..*cfg };
    cfg.validate()?;
    let len = rs.norm2_root(i).sqrt();
    let coeff = tp.gamma * len;
    let drift = -dot(&nu, &rs.simple_roots[i]) / len;
    let p = -k / tp.gamma;
    let weight = CircleWeight::scalar(coeff, &cfg);
    let sim = SimConfig { dt: cfg.dt, t_max: cfg.t_max, n_samples: cfg.n_samples, seed: cfg.seed, ..Default::default() };
    let j_moment = estimate_j(drift, 1.0, coeff, &weight, p, &sim)?;
    let mut factor = SignedLog::from_value(p);
    factor.mul_gamma(-p)?.mul_pow(tp.mu[i], p)?;
    let f = factor.value();
    let closed_form = refl_coeff(tp, rs.weyl().from_word(&[i]), alpha)?;
    let mut estimate = j_moment.scaled(f);
    estimate.truncation_bound = j_moment.truncation_bound * f.abs();
    Ok(ReflMcReport { estimate, closed_form, j_moment, j_moment_closed: closed_form / f, power: p })
}

/// One row of the coefficient table.
#[derive(Debug, Clone, Serialize)]
pub struct ReflRow {
    pub element: String,
    pub covered: bool,
    pub refl: f64,
    pub refl_product: Option<f64>,
    pub unit_volume: Option<f64>,
    /// |R_s - R_s^dual| / |R_s|
    pub dual_residual: Option<f64>,
    /// max over tau with l(s tau) = l(s) + l(tau) of the cocycle residual
    pub cocycle_residual: Option<f64>,
}

pub fn refl_table(tp: &TodaParams, alpha: &[f64]) -> Result<Vec<ReflRow>> {
    let g = tp.rs.weyl();
    let dual = dual_params(tp).ok();
    let mut rows = Vec::with_capacity(g.order());
    for s in 0..g.order() {
        let refl = refl_coeff(tp, s, alpha)?;
        let covered = is_covered(&tp.rs, s);
        let refl_product = if covered { refl_coeff_product(tp, s, alpha).ok() } else { None };
        let dual_residual = dual.as_ref().and_then(|d| {
            let ds = dual_element(tp, d, s).ok()?;
            let v = refl_coeff(d, ds, alpha).ok()?;
            Some((v - refl).abs() / refl.abs())
        });
        let mut cocycle: Option<f64> = None;
        for tau in 0..g.order() {
            let st = g.product(s, tau);
            if g.elements[st].length == g.elements[s].length + g.elements[tau].length {
                if let Ok(r) = cocycle_residual(tp, s, tau, alpha) {
                    cocycle = Some(cocycle.map_or(r, |c| c.max(r)));
                }
            }
        }
        rows.push(ReflRow {
            element: g.elements[s].label(),
            covered,
            refl,
            refl_product,
            unit_volume: unit_volume_refl(tp, s, alpha).ok(),
            dual_residual,
            cocycle_residual: cocycle,
        });
    }
    Ok(rows)
}

/// Deterministic sample of alpha with alpha - Q in the negative chamber and
/// <s^alpha - alpha, omega_i^vee> < gamma for all s, i.
pub fn admissible_alphas(tp: &TodaParams, n: usize, seed: u64) -> Vec<Vector> {
    use rand::Rng;
    let mut rng = crate::mc::sample_rng(seed, 0);
    let rs = &tp.rs;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c: Vector = (0..rs.rank).map(|_| -rng.random_range(0.02..0.6) * tp.gamma).collect();
        let nu = rs.from_pairings(&c);
        let alpha: Vector = nu.iter().zip(&tp.q).map(|(a, b)| a + b).collect();
        let ok = (0..rs.weyl().order()).all(|s| {
            let d = sub(&tp.hat(s, &alpha), &alpha);
            rs.coweights.iter().all(|w| dot(&d, w) < tp.gamma)
        });
        if ok {
            out.push(alpha);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scale;
    use proptest::prelude::*;

    fn a1(gamma: f64) -> TodaParams {
        TodaParams::new(RootSystem::build(RootKind::A1).unwrap(), gamma, vec![1.0]).unwrap()
    }

    fn a2(gamma: f64, mu: Vec<f64>) -> TodaParams {
        TodaParams::new(RootSystem::build(RootKind::A2).unwrap(), gamma, mu).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn background_charge_pairs_with_coroots() {
        let tp = a2(0.9, vec![1.0, 1.0]);
        for i in 0..2 {
            let v = dot(&tp.q, &tp.rs.coroots[i]);
            assert!((v - (0.9 + 2.0 / 0.9 * 2.0 / tp.rs.norm2_root(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn a_function_examples() {
        let tp = a1(1.0);
        assert!((a_func(&tp, &[0.0]).unwrap() - 1.0).abs() < 1e-14);
        // <x, e^vee> = -1
        let x = scale(&tp.rs.simple_roots[0], -0.5);
        assert!((a_func(&tp, &x).unwrap() - 0.5).abs() < 1e-13);
        // Gamma pole at <x, e^vee> = gamma
        let x = scale(&tp.rs.simple_roots[0], 0.5);
        assert!(matches!(a_func(&tp, &x), Err(Error::Pole(_))));
    }

    #[test]
    fn identity_element_is_one() {
        let tp = a2(1.0, vec![0.7, 1.3]);
        for alpha in admissible_alphas(&tp, 5, 1) {
            assert!((refl_coeff(&tp, 0, &alpha).unwrap() - 1.0).abs() < 1e-14);
            assert!((unit_volume_refl(&tp, 0, &alpha).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cocycle_on_full_support_elements() {
        let tp = a2(1.1, vec![0.8, 1.7]);
        let g = tp.rs.weyl();
        let s1 = g.from_word(&[0]);
        let s2 = g.from_word(&[1]);
        for alpha in admissible_alphas(&tp, 20, 2) {
            assert!(cocycle_residual(&tp, s1, s2, &alpha).unwrap() < 1e-10);
            assert!(cocycle_residual(&tp, s2, s1, &alpha).unwrap() < 1e-10);
        }
    }

    #[test]
    fn product_form_agrees_on_covered_elements() {
        for kind in [RootKind::A1, RootKind::A2, RootKind::B2, RootKind::G2] {
            let rs = RootSystem::build(kind).unwrap();
            let r = rs.rank;
            let tp = TodaParams::new(rs, 0.9, (0..r).map(|i| 0.5 + i as f64).collect()).unwrap();
            let covered: Vec<usize> = (0..tp.rs.weyl().order()).filter(|&s| is_covered(&tp.rs, s)).collect();
            assert_eq!(covered.len(), if r == 1 { 1 } else { 2 });
            for alpha in admissible_alphas(&tp, 10, 3) {
                for &s in &covered {
                    let a = refl_coeff(&tp, s, &alpha).unwrap();
                    let b = refl_coeff_product(&tp, s, &alpha).unwrap();
                    assert!(rel(b, a) < 1e-10, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn longest_a2_element_is_uncovered() {
        let tp = a2(1.0, vec![1.0, 1.0]);
        assert!(!is_covered(&tp.rs, tp.rs.weyl().longest()));
    }

    #[test]
    fn duality_invariance() {
        for tp in [a1(1.2), a2(1.2, vec![0.6, 2.0])] {
            let d = dual_params(&tp).unwrap();
            assert!(d.identity_only);
            assert!((d.gamma - 2.0 / 1.2).abs() < 1e-15);
            for k in 0..tp.rs.rank {
                assert!((d.q[k] - tp.q[k]).abs() < 1e-12);
            }
            let dd = dual_params(&d).unwrap();
            assert!((dd.gamma - tp.gamma).abs() < 1e-12);
            for i in 0..tp.rs.rank {
                assert!(rel(dd.mu[i], tp.mu[i]) < 1e-12);
            }
            for alpha in admissible_alphas(&tp, 3, 4) {
                for s in 0..tp.rs.weyl().order() {
                    let ds = dual_element(&tp, &d, s).unwrap();
                    let a = refl_coeff(&tp, s, &alpha).unwrap();
                    let b = refl_coeff(&d, ds, &alpha).unwrap();
                    assert!(rel(b, a) < 1e-10, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn near_self_dual_coupling() {
        // at gamma = sqrt 2 itself l(1) = 0 and mu^vee degenerates; check the limit
        let gamma = 2f64.sqrt() * (1.0 - 1e-7);
        let tp = a1(gamma);
        let d = dual_params(&tp).unwrap();
        assert!((d.gamma - gamma).abs() < 1e-6);
        let b = tp.cosmological_base(0).unwrap();
        assert!(rel(d.cosmological_base(0).unwrap(), b) < 1e-5);
        assert!(rel(d.mu[0], -tp.mu[0]) < 1e-5);
    }

    #[test]
    fn liouville_identification() {
        for gamma in [0.5, 1.0, 1.3] {
            let tp = TodaParams::new(RootSystem::build(RootKind::A1).unwrap(), gamma, vec![1.7]).unwrap();
            for c in [-0.1, -0.3, -0.45] {
                let alpha: Vector = tp.q.iter().zip(&tp.rs.simple_roots[0]).map(|(q, e)| q + c * gamma * e).collect();
                let r = refl_coeff(&tp, 1, &alpha).unwrap();
                let m = liouville_match(&tp, 0, &alpha);
                let e = &tp.rs.simple_roots[0];
                assert!((m.a_standard - dot(&alpha, e) / 2f64.sqrt()).abs() < 1e-14);
                let rs_ = liouville_refl_standard(m.gamma_standard, 1.7, m.a_standard).unwrap();
                let rl = liouville_refl(m.gamma, 1.7, m.a).unwrap();
                assert!(rel(rs_, r) < 1e-10, "{r} {rs_}");
                assert!(rel(rl, r) < 1e-10, "{r} {rl}");
            }
        }
    }

    #[test]
    fn liouville_limit_at_q() {
        for gamma in [0.6, 1.0, 1.4] {
            let q = gamma / 2.0 + 2.0 / gamma;
            assert!((liouville_refl(gamma, 1.0, q - 1e-6).unwrap() + 1.0).abs() < 1e-4);
            assert!((liouville_refl_standard(gamma, 1.0, q - 1e-6).unwrap() + 1.0).abs() < 1e-4);
        }
        assert!(liouville_refl(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn j_power_closed_values() {
        assert!(rel(expected_j_power(1.0, -0.5).unwrap(), 4.0 * PI) < 1e-12);
        let a = expected_j_power(1.0, -1e-7).unwrap();
        let b = expected_j_power(1.0, -2e-7).unwrap();
        assert!((a - 1.0).abs() < 1e-5);
        // finite slope at the origin
        assert!(((b - a) / 1e-7).abs() < 10.0);
    }

    #[test]
    fn simple_reflection_sign_near_q() {
        let tp = a2(1.0, vec![1.0, 2.0]);
        let g = tp.rs.weyl();
        let nu = tp.rs.from_pairings(&[-1e-4, -2e-4]);
        let alpha: Vector = nu.iter().zip(&tp.q).map(|(a, b)| a + b).collect();
        for s in 0..g.order() {
            let r = refl_coeff(&tp, s, &alpha).unwrap();
            assert_eq!(r.signum(), g.elements[s].sign(), "{}", g.elements[s].label());
        }
    }

    #[test]
    fn unit_volume_divides_out_gamma() {
        let tp = a2(0.8, vec![1.0, 1.0]);
        let g = tp.rs.weyl();
        for alpha in admissible_alphas(&tp, 3, 5) {
            for s in 0..g.order() {
                let d = sub(&tp.hat(s, &alpha), &alpha);
                let mut expect = refl_coeff(&tp, s, &alpha).unwrap() * g.elements[s].sign();
                for w in &tp.rs.coweights {
                    expect /= crate::special::gamma(1.0 - dot(&d, w) / tp.gamma).unwrap();
                }
                assert!(rel(unit_volume_refl(&tp, s, &alpha).unwrap(), expect) < 1e-12);
            }
        }
    }

    #[test]
    fn mc_rejects_outside_hypothesis() {
        let tp = a1(1.0);
        let alpha: Vector = tp.q.iter().zip(&tp.rs.simple_roots[0]).map(|(q, e)| q - 0.7 * e).collect();
        assert!(refl_coeff_mc(&tp, 0, &alpha, &GmcConfig::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn cocycle_holds_for_reduced_products(gamma in 0.3f64..1.35, m1 in 0.2f64..3.0, m2 in 0.2f64..3.0, seed in 0u64..1000) {
            let tp = a2(gamma, vec![m1, m2]);
            let g = tp.rs.weyl();
            let alpha = &admissible_alphas(&tp, 1, seed)[0];
            for s in 0..g.order() {
                for tau in 0..g.order() {
                    let st = g.product(s, tau);
                    if g.elements[st].length == g.elements[s].length + g.elements[tau].length {
                        prop_assert!(cocycle_residual(&tp, s, tau, alpha).unwrap() < 1e-9);
                    }
                }
            }
        }
    }
}
