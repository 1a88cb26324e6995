use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use super::{bridge_exp_integral, PathSample, SimConfig};
use crate::error::{Error, Result};
use crate::mc::{map_samples, summarize, MCEstimate};
use crate::special::{gamma, ln_gamma};

/// Exponent level gamma * X beyond which the remaining integral is dropped.
pub const STOP_LEVEL: f64 = 25.0;
/// Largest step growth factor when the integrand is small.
pub const STEP_CAP: f64 = 1e3;

/// Stationary positive weight process multiplying the integrand.
pub trait WeightProcess: Sync {
    type State: Clone;
    fn stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;
    fn step<R: Rng + ?Sized>(&self, state: &mut Self::State, h: f64, rng: &mut R);
    fn value(&self, state: &Self::State) -> f64;
    fn mean(&self) -> f64 {
        1.0
    }
    fn max_step(&self) -> f64 {
        f64::INFINITY
    }
}

/// Z = 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeight;

impl WeightProcess for UnitWeight {
    type State = ();
    fn stationary<R: Rng + ?Sized>(&self, _: &mut R) {}
    fn step<R: Rng + ?Sized>(&self, _: &mut (), _: f64, _: &mut R) {}
    fn value(&self, _: &()) -> f64 {
        1.0
    }
}

fn check_drift(mu: f64, v: f64) -> Result<()> {
    if !(mu > 0.0) || !(v > 0.0) {
        return Err(Error::precondition("drift and variance must be positive"));
    }
    Ok(())
}

/// Radial part of a 3-d BM with drift: exact law of the positive-conditioned process.
struct Conditioned {
    w: [f64; 3],
    drift: f64,
    scale: f64,
}

impl Conditioned {
    fn new(mu: f64, v: f64) -> Self {
        let scale = v.sqrt();
        Conditioned { w: [0.0; 3], drift: mu / scale, scale }
    }

    fn step<R: Rng + ?Sized>(&mut self, h: f64, rng: &mut R) -> f64 {
        let sd = h.sqrt();
        for k in 0..3 {
            self.w[k] += sd * rng.sample::<f64, _>(StandardNormal);
        }
        self.w[0] += self.drift * h;
        self.position()
    }

    fn position(&self) -> f64 {
        self.scale * (self.w[0] * self.w[0] + self.w[1] * self.w[1] + self.w[2] * self.w[2]).sqrt()
    }
}

/// Path of BM(drift -mu, variance v) from x0 until it hits 0, then the positive-conditioned
/// diffusion with generator (v/2) d^2 + mu coth(mu x / v) d from 0 up to t_max.
pub fn sample_conditioned_1d<R: Rng + ?Sized>(
    mu: f64,
    v: f64,
    x0: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<PathSample> {
    check_drift(mu, v)?;
    if !(x0 >= 0.0) {
        return Err(Error::precondition("start must be nonnegative"));
    }
    let mut p = PathSample::default();
    let mut t = 0.0;
    let mut x = x0;
    p.push(t, &[x], 0);
    let sd = (v * cfg.dt).sqrt();
    while x > 0.0 && t < cfg.t_max - 1e-12 {
        let h = cfg.dt.min(cfg.t_max - t);
        let xn = x - mu * h + sd * (h / cfg.dt).sqrt() * rng.sample::<f64, _>(StandardNormal);
        let hit = xn <= 0.0
            || (cfg.bridge_correction && rng.random::<f64>() < (-2.0 * x * xn / (v * h)).exp());
        if hit {
            let theta = if xn < 0.0 { x / (x - xn) } else { 0.5 };
            t += theta * h;
            x = 0.0;
            p.push(t, &[0.0], 0);
            p.events.push(super::WallEvent { wall: 0, time: t, location: vec![0.0] });
            break;
        }
        t += h;
        x = xn;
        p.push(t, &[x], 0);
    }
    if x > 0.0 {
        p.truncated = true;
        return Ok(p);
    }
    let mut c = Conditioned::new(mu, v);
    while t < cfg.t_max - 1e-12 {
        let h = cfg.dt.min(cfg.t_max - t);
        x = c.step(h, rng);
        t += h;
        p.push(t, &[x], 1);
    }
    Ok(p)
}

/// Integral of exp(-gamma X) Z along the conditioned process from 0, with its truncation bound.
pub fn conditioned_integral<W: WeightProcess, R: Rng + ?Sized>(
    mu: f64,
    v: f64,
    gam: f64,
    weight: &W,
    state: &mut W::State,
    cfg: &SimConfig,
    rng: &mut R,
) -> (f64, f64) {
    let mut c = Conditioned::new(mu, v);
    let (mut t, mut x, mut acc) = (0.0, 0.0, 0.0);
    let mut z0 = weight.value(state);
    loop {
        if gam * x >= STOP_LEVEL || t >= cfg.t_max {
            let tail = (-gam * x).exp() * weight.mean() * 2.0 / (gam * mu);
            return (acc, tail);
        }
        let h = (cfg.dt * (gam * x).exp().clamp(1.0, STEP_CAP)).min(weight.max_step());
        let xn = c.step(h, rng);
        weight.step(state, h, rng);
        let z1 = weight.value(state);
        acc += 0.5 * (z0 + z1) * bridge_exp_integral(gam * x, gam * xn, h, gam * gam * v);
        t += h;
        x = xn;
        z0 = z1;
    }
}

/// Integral of exp(-gamma X) Z along BM(drift -mu, variance v) from `start` until it hits 0.
#[allow(clippy::too_many_arguments)]
pub fn descent_integral<W: WeightProcess, R: Rng + ?Sized>(
    mu: f64,
    v: f64,
    start: f64,
    gam: f64,
    weight: &W,
    state: &mut W::State,
    cfg: &SimConfig,
    rng: &mut R,
) -> f64 {
    let mut x = start;
    let mut acc = 0.0;
    let mut z0 = weight.value(state);
    while x > 0.0 {
        let h = (cfg.dt * (gam * x).exp().clamp(1.0, STEP_CAP)).min(weight.max_step());
        let xn = x - mu * h + (v * h).sqrt() * rng.sample::<f64, _>(StandardNormal);
        weight.step(state, h, rng);
        let z1 = weight.value(state);
        let z = 0.5 * (z0 + z1);
        if xn <= 0.0 {
            let theta = x / (x - xn);
            acc += z * bridge_exp_integral(gam * x, 0.0, theta * h, gam * gam * v);
            break;
        }
        if cfg.bridge_correction && rng.random::<f64>() < (-2.0 * x * xn / (v * h)).exp() {
            acc += z * bridge_exp_integral(gam * x, 0.0, 0.5 * h, gam * gam * v);
            break;
        }
        acc += z * bridge_exp_integral(gam * x, gam * xn, h, gam * gam * v);
        x = xn;
        z0 = z1;
    }
    acc
}

/// One draw of the two-sided integral of exp(-gamma X) Z over the positive-conditioned
/// process seen from its minimum (entering from +infinity). Returns (value, truncation bound).
pub fn sample_j<W: WeightProcess, R: Rng + ?Sized>(
    mu: f64,
    v: f64,
    gam: f64,
    weight: &W,
    cfg: &SimConfig,
    rng: &mut R,
) -> (f64, f64) {
    // a reversible stationary weight has the same law forwards and backwards from time 0
    let s0 = weight.stationary(rng);
    let mut s1 = s0.clone();
    let mut s2 = s0;
    let (a, ta) = conditioned_integral(mu, v, gam, weight, &mut s1, cfg, rng);
    let (b, tb) = conditioned_integral(mu, v, gam, weight, &mut s2, cfg, rng);
    (a + b, ta + tb)
}

/// MC estimate of E[J^power] for the two-sided integral above.
pub fn estimate_j<W: WeightProcess>(
    mu: f64,
    v: f64,
    gam: f64,
    weight: &W,
    power: f64,
    cfg: &SimConfig,
) -> Result<MCEstimate> {
    check_drift(mu, v)?;
    cfg.validate()?;
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| sample_j(mu, v, gam, weight, cfg, rng));
    let vals: Vec<f64> = draws.iter().map(|(j, _)| j.powf(power)).collect();
    let mut est = summarize(&vals, cfg.seed);
    let (jm, tm) = draws
        .iter()
        .fold((0.0, 0.0), |(a, b), (j, t)| (a + j, b + t));
    // first-order effect of the dropped tail on J^power
    est.truncation_bound = (power * tm / jm.max(f64::MIN_POSITIVE) * est.mean).abs();
    Ok(est)
}

/// E[(int_0^inf exp(-B^mu_t) dt)^p] = 2^p Gamma(2 mu - p) / Gamma(2 mu), unit variance.
pub fn exp_functional_moment(mu: f64, p: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::precondition("drift must be positive"));
    }
    if !(p < 2.0 * mu) {
        return Err(Error::precondition(format!("moment of order {p} is infinite for drift {mu}")));
    }
    Ok((p * std::f64::consts::LN_2 + ln_gamma(2.0 * mu - p)? - ln_gamma(2.0 * mu)?).exp())
}

/// E[J(mu)^(2 mu)] = 2^(2 mu) / Gamma(1 + 2 mu), unit variance and Z = 1.
pub fn j_moment_closed(mu: f64) -> Result<f64> {
    check_drift(mu, 1.0)?;
    Ok((2.0f64).powf(2.0 * mu) / gamma(1.0 + 2.0 * mu)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpFunctionalEstimate {
    pub estimate: MCEstimate,
    pub closed_form: f64,
}

/// Estimate E[(int_0^inf exp(-B^mu_t) dt)^p] by splitting the path at its minimum -A and
/// tilting A ~ Exp(2 mu) to Exp(2 mu - p); the weight cancels exp(-p A) exactly.
pub fn estimate_exp_functional(mu: f64, p: f64, cfg: &SimConfig) -> Result<ExpFunctionalEstimate> {
    let closed_form = exp_functional_moment(mu, p)?;
    cfg.validate()?;
    let rate = 2.0 * mu - p;
    let tilt = Exp::new(rate).map_err(|e| Error::precondition(e.to_string()))?;
    let factor = 2.0 * mu / rate;
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| {
        let a = tilt.sample(rng);
        let down = descent_integral(mu, 1.0, a, 1.0, &UnitWeight, &mut (), cfg, rng);
        let (up, tail) = conditioned_integral(mu, 1.0, 1.0, &UnitWeight, &mut (), cfg, rng);
        let i = down + up;
        (factor * i.powf(p), (p * tail / i).abs() * factor * i.powf(p))
    });
    let vals: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut estimate = summarize(&vals, cfg.seed);
    estimate.truncation_bound = draws.iter().map(|d| d.1).sum::<f64>() / draws.len() as f64;
    Ok(ExpFunctionalEstimate { estimate, closed_form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::sample_rng;

    fn cfg(n: usize, seed: u64) -> SimConfig {
        SimConfig { dt: 1e-3, t_max: 1e3, n_samples: n, seed, ..Default::default() }
    }

    #[test]
    fn closed_forms() {
        assert!((exp_functional_moment(1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((exp_functional_moment(0.7, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let v = exp_functional_moment(0.75, 0.5).unwrap();
        assert!((v - 2.0 * 2f64.sqrt() / std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!(exp_functional_moment(1.0, 2.0).is_err());
        assert!((j_moment_closed(0.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conditioned_path_stays_positive_after_zero() {
        let c = SimConfig { dt: 1e-3, t_max: 20.0, ..Default::default() };
        let p = sample_conditioned_1d(0.8, 1.0, 0.5, &c, &mut sample_rng(3, 0)).unwrap();
        let k = p.segment_labels.iter().position(|&l| l == 1).unwrap();
        assert!(p.positions[k..].iter().all(|x| x[0] >= 0.0));
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
        // long-run drift
        let n = 400;
        let incs = map_samples(1, n, |rng, _| {
            let p = sample_conditioned_1d(0.8, 1.0, 0.0, &c, rng).unwrap();
            p.last().unwrap()[0] - p.at(10.0).unwrap()[0]
        });
        let speed = incs.iter().sum::<f64>() / n as f64 / 10.0;
        assert!((speed - 0.8).abs() < 0.05, "{speed}");
    }

    #[test]
    fn exp_functional_unit_moment() {
        let e = estimate_exp_functional(1.0, 1.0, &cfg(4000, 11)).unwrap();
        assert!(e.estimate.z_against(e.closed_form) < 3.5, "{e:?}");
        let e = estimate_exp_functional(1.0, 0.0, &cfg(10, 1)).unwrap();
        assert!((e.estimate.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn j_half_has_mean_two() {
        let e = estimate_j(0.5, 1.0, 1.0, &UnitWeight, 1.0, &cfg(4000, 5)).unwrap();
        assert!(e.z_against(2.0) < 3.5, "{e:?}");
        let e = estimate_j(0.9, 1.0, 1.0, &UnitWeight, 0.0, &cfg(20, 5)).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn j_variance_scaling() {
        // J_v(mu) = J_1(mu / v) / v in law
        let c = cfg(3000, 7);
        let a = estimate_j(1.2, 2.0, 1.0, &UnitWeight, 1.0, &c).unwrap();
        let b = estimate_j(0.6, 1.0, 1.0, &UnitWeight, 1.0, &SimConfig { seed: 8, ..c }).unwrap();
        let z = (a.mean - 0.5 * b.mean).abs() / (a.stderr.powi(2) + 0.25 * b.stderr.powi(2)).sqrt();
        assert!(z < 3.5, "{a:?} {b:?}");
    }
}
