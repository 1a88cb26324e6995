use rand::Rng;
use rand_distr::StandardNormal;

use super::{normal_vec, MinimumSampler, PathSample, SimConfig, WallEvent};
use crate::chamber::DriftSpec;
use crate::error::{Error, Result};
use crate::expsum::SignedExpSum;
use crate::linalg::{dot, norm2, sub, Vector};
use crate::mc::{map_samples, MCEstimate};

/// Euler stepper for the h-transformed drifted BM attached to a wall set S.
///
/// The total drift is grad log sum_s c_s exp(<s nu, x - M>) with
/// c_s = eps(s) prod_{i in S} <s nu - nu, omega_i^vee>. Walls in S end the segment;
/// the others are never crossed.
#[derive(Debug, Clone)]
pub struct SegmentEngine<'a> {
    d: &'a DriftSpec,
    pub m: Vector,
    pub active: Vec<usize>,
    forbidden: Vec<usize>,
    drift_sum: SignedExpSum,
    norms: Vec<f64>,
    bridge: bool,
    floor: f64,
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Inside(Vector),
    Exit { wall: usize, point: Vector, restart: Vector },
}

impl<'a> SegmentEngine<'a> {
    pub fn new(d: &'a DriftSpec, m: &[f64], active: &[usize], cfg: &SimConfig) -> Self {
        let r = d.rank();
        let drift_sum = d.partial_h_sum(active).shift_exponents(&d.nu);
        let forbidden = (0..r).filter(|i| !active.contains(i)).collect();
        let norms = d.rs.simple_roots.iter().map(|e| norm2(e).sqrt()).collect();
        SegmentEngine {
            d,
            m: m.to_vec(),
            active: active.to_vec(),
            forbidden,
            drift_sum,
            norms,
            bridge: cfg.bridge_correction,
            floor: cfg.dt * 1e-6,
        }
    }

    /// Unit-normal distances to the walls of M + C.
    pub fn distances(&self, x: &[f64]) -> Vector {
        let y = sub(x, &self.m);
        (0..self.d.rank())
            .map(|i| dot(&y, &self.d.rs.simple_roots[i]) / self.norms[i])
            .collect()
    }

    pub fn drift(&self, x: &[f64]) -> Result<Vector> {
        let y = sub(x, &self.m);
        self.drift_sum.log_gradient(&y).ok_or_else(|| {
            Error::DriftOverflow(format!("segment weight is not positive at {x:?}"))
        })
    }

    /// Closest forbidden wall distance.
    pub fn forbidden_distance(&self, x: &[f64]) -> f64 {
        let dist = self.distances(x);
        self.forbidden.iter().map(|&j| dist[j]).fold(f64::INFINITY, f64::min)
    }

    /// Mirror x along omega_i^vee so that only the i-th wall coordinate flips sign.
    fn mirror(&self, x: &[f64], i: usize) -> Vector {
        let p = dot(&sub(x, &self.m), &self.d.rs.simple_roots[i]);
        let w = &self.d.rs.coweights[i];
        x.iter().zip(w).map(|(a, b)| a - 2.0 * p * b).collect()
    }

    fn project(&self, x: &[f64], i: usize) -> Vector {
        let e = &self.d.rs.simple_roots[i];
        let p = dot(&sub(x, &self.m), e) / norm2(e);
        x.iter().zip(e).map(|(a, b)| a - p * b).collect()
    }

    /// Advance by h with Brownian increment dw; returns the outcome and the time used.
    pub fn advance<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        h: f64,
        dw: &[f64],
        rng: &mut R,
        reflections: &mut usize,
    ) -> Result<(StepOutcome, f64)> {
        let b = self.drift(x)?;
        let mut xn: Vector = x.iter().zip(&b).zip(dw).map(|((a, c), w)| a + c * h + w).collect();
        let dn = self.distances(&xn);
        if self.forbidden.iter().any(|&j| dn[j] <= 0.0) {
            if h > self.floor {
                // Brownian-bridge midpoint of the same increment
                let sd = (h / 4.0).sqrt();
                let w1: Vector = dw
                    .iter()
                    .map(|w| 0.5 * w + sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let w2: Vector = dw.iter().zip(&w1).map(|(a, b)| a - b).collect();
                let (o1, e1) = self.advance(x, 0.5 * h, &w1, rng, reflections)?;
                return match o1 {
                    StepOutcome::Inside(xm) => {
                        let (o2, e2) = self.advance(&xm, 0.5 * h, &w2, rng, reflections)?;
                        Ok((o2, e1 + e2))
                    }
                    exit => Ok((exit, e1)),
                };
            }
            for &j in &self.forbidden {
                if self.distances(&xn)[j] <= 0.0 {
                    xn = self.mirror(&xn, j);
                    *reflections += 1;
                }
            }
        }
        let d0 = self.distances(x);
        let dn = self.distances(&xn);
        // sign-change exits, larger normalized overshoot first
        let crossed = self
            .active
            .iter()
            .copied()
            .filter(|&i| dn[i] <= 0.0)
            .max_by(|&i, &j| (-dn[i]).total_cmp(&-dn[j]));
        if let Some(i) = crossed {
            let theta = d0[i] / (d0[i] - dn[i]);
            let lin: Vector = x.iter().zip(&xn).map(|(a, c)| a + theta * (c - a)).collect();
            let point = self.project(&lin, i);
            let mut restart = self.mirror(&xn, i);
            for &j in &self.active {
                if self.distances(&restart)[j] <= 0.0 {
                    restart = self.mirror(&restart, j);
                }
            }
            return Ok((StepOutcome::Exit { wall: i, point, restart }, h));
        }
        if self.bridge {
            let mut best: Option<(usize, f64)> = None;
            for &i in &self.active {
                let p = (-2.0 * d0[i] * dn[i] / h).exp();
                if rng.random::<f64>() < p && best.is_none_or(|(_, q)| p > q) {
                    best = Some((i, p));
                }
            }
            if let Some((i, _)) = best {
                let point = self.project(&xn, i);
                return Ok((StepOutcome::Exit { wall: i, point, restart: xn }, h));
            }
        }
        Ok((StepOutcome::Inside(xn), h))
    }
}

/// Result of running welded segments.
#[derive(Debug, Clone)]
pub struct WeldedRun {
    pub minimum: Vector,
    pub events: Vec<WallEvent>,
    /// Positions at the requested checkpoint times.
    pub checkpoints: Vec<Vector>,
    /// Smallest visited wall coordinate <x, e_i> per wall.
    pub infimum: Vector,
    pub truncated: bool,
    pub reflections: usize,
    pub end: Vector,
    pub end_time: f64,
    pub path: Option<PathSample>,
}

/// Per-step observer: (t0, x0, t1, x1, segment index).
pub type StepObserver<'o> = dyn FnMut(f64, &[f64], f64, &[f64], usize) + 'o;

/// Run segments starting from x0 with wall set `active`, dropping each wall index as it
/// is hit, until t_max (or until `stop` returns true after the last wall).
#[allow(clippy::too_many_arguments)]
pub fn run_welded<R: Rng + ?Sized>(
    d: &DriftSpec,
    m: &[f64],
    x0: &[f64],
    active: &[usize],
    cfg: &SimConfig,
    rng: &mut R,
    checkpoints: &[f64],
    record: bool,
    mut observer: Option<&mut StepObserver<'_>>,
    stop_after_last: Option<&dyn Fn(f64, &[f64]) -> bool>,
) -> Result<WeldedRun> {
    let r = d.rank();
    let mut active = active.to_vec();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut events = Vec::new();
    let mut cps = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0;
    let mut reflections = 0;
    let mut path = if record { Some(PathSample::default()) } else { None };
    let mut infimum: Vector = d.rs.pairings(&x);
    let refine_dist = 10.0 * cfg.dt.sqrt();
    let mut label = 0;
    if let Some(p) = path.as_mut() {
        p.push(t, &x, label);
    }
    while next_cp < checkpoints.len() && checkpoints[next_cp] <= 0.0 {
        cps.push(x.clone());
        next_cp += 1;
    }
    'segments: loop {
        let engine = SegmentEngine::new(d, m, &active, cfg);
        loop {
            if t >= cfg.t_max - 1e-12 {
                break 'segments;
            }
            if active.is_empty() {
                if let Some(f) = stop_after_last {
                    if f(t, &x) {
                        break 'segments;
                    }
                }
            }
            let mut h = cfg.dt;
            if engine.forbidden_distance(&x) < refine_dist {
                h /= cfg.wall_refine;
            }
            if next_cp < checkpoints.len() {
                h = h.min(checkpoints[next_cp] - t);
            }
            h = h.min(cfg.t_max - t);
            let dw = normal_vec(rng, r, h.sqrt());
            let (outcome, used) = engine.advance(&x, h, &dw, rng, &mut reflections)?;
            let t_new = t + used;
            let (x_new, exit) = match outcome {
                StepOutcome::Inside(xn) => (xn, None),
                StepOutcome::Exit { wall, point, restart } => {
                    for (k, p) in d.rs.pairings(&point).iter().enumerate() {
                        infimum[k] = infimum[k].min(*p);
                    }
                    (restart, Some((wall, point)))
                }
            };
            for (k, p) in d.rs.pairings(&x_new).iter().enumerate() {
                infimum[k] = infimum[k].min(*p);
            }
            if let Some(obs) = observer.as_mut() {
                obs(t, &x, t_new, &x_new, label);
            }
            t = t_new;
            x = x_new;
            if let Some(p) = path.as_mut() {
                p.push(t, &x, label);
            }
            while next_cp < checkpoints.len() && checkpoints[next_cp] <= t + 1e-12 {
                cps.push(x.clone());
                next_cp += 1;
            }
            if let Some((wall, point)) = exit {
                events.push(WallEvent { wall, time: t, location: point });
                active.retain(|&i| i != wall);
                label += 1;
                continue 'segments;
            }
        }
    }
    let truncated = !active.is_empty();
    if let Some(p) = path.as_mut() {
        p.events = events.clone();
        p.truncated = truncated;
        p.reflections = reflections;
    }
    Ok(WeldedRun {
        minimum: m.to_vec(),
        events,
        checkpoints: cps,
        infimum,
        truncated,
        reflections,
        end: x,
        end_time: t,
        path,
    })
}

/// One conditioned segment from x0 until it hits a wall in S or reaches t_max.
pub fn sample_segment<R: Rng + ?Sized>(
    d: &DriftSpec,
    active: &[usize],
    x0: &[f64],
    m: &[f64],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(PathSample, Option<WallEvent>)> {
    let y = sub(x0, m);
    if !d.rs.in_chamber(&y) {
        return Err(Error::precondition("segment start must lie strictly inside M + C"));
    }
    if !(d.partial_h(active, &y) > 0.0) {
        return Err(Error::precondition("segment weight must be positive at the start"));
    }
    let engine = SegmentEngine::new(d, m, active, cfg);
    let mut p = PathSample::default();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut reflections = 0;
    p.push(t, &x, 0);
    let refine_dist = 10.0 * cfg.dt.sqrt();
    while t < cfg.t_max - 1e-12 {
        let mut h = cfg.dt;
        if engine.forbidden_distance(&x) < refine_dist {
            h /= cfg.wall_refine;
        }
        h = h.min(cfg.t_max - t);
        let dw = normal_vec(rng, d.rank(), h.sqrt());
        let (o, used) = engine.advance(&x, h, &dw, rng, &mut reflections)?;
        t += used;
        match o {
            StepOutcome::Inside(xn) => {
                x = xn;
                p.push(t, &x, 0);
            }
            StepOutcome::Exit { wall, point, .. } => {
                p.push(t, &point, 0);
                let ev = WallEvent { wall, time: t, location: point };
                p.events.push(ev.clone());
                p.reflections = reflections;
                return Ok((p, Some(ev)));
            }
        }
    }
    p.truncated = !active.is_empty();
    p.reflections = reflections;
    Ok((p, None))
}

/// Welded sampler from the origin: draw M, then run S = all walls, dropping hit walls.
pub fn sample_williams_path<R: Rng + ?Sized>(
    d: &DriftSpec,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<PathSample> {
    let sampler = MinimumSampler::new(d)?;
    let m = sampler.sample(rng);
    let all: Vec<usize> = (0..d.rank()).collect();
    let origin = vec![0.0; d.rank()];
    let run = run_welded(d, &m, &origin, &all, cfg, rng, &[], true, None, None)?;
    Ok(run.path.expect("recorded"))
}

/// Welded run from the origin reporting only checkpoint positions and infima.
pub fn williams_checkpoints<R: Rng + ?Sized>(
    d: &DriftSpec,
    sampler: &MinimumSampler,
    cfg: &SimConfig,
    checkpoints: &[f64],
    rng: &mut R,
) -> Result<WeldedRun> {
    let m = sampler.sample(rng);
    let all: Vec<usize> = (0..d.rank()).collect();
    let origin = vec![0.0; d.rank()];
    run_welded(d, &m, &origin, &all, cfg, rng, checkpoints, false, None, None)
}

/// Exit-wall frequencies of the full h-process (S = all walls, minimum at the origin).
pub fn exit_wall_mc(d: &DriftSpec, x: &[f64], cfg: &SimConfig) -> Result<Vec<MCEstimate>> {
    cfg.validate()?;
    let r = d.rank();
    let all: Vec<usize> = (0..r).collect();
    let origin = vec![0.0; r];
    let walls: Vec<Result<Option<usize>>> = map_samples(cfg.seed, cfg.n_samples, |rng, _| {
        let (_, ev) = sample_segment(d, &all, x, &origin, cfg, rng)?;
        Ok(ev.map(|e| e.wall))
    });
    let mut counts = vec![0usize; r];
    let mut truncated = 0usize;
    for w in walls {
        match w? {
            Some(i) => counts[i] += 1,
            None => truncated += 1,
        }
    }
    let n = cfg.n_samples as f64;
    Ok(counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            MCEstimate {
                mean: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
                n: cfg.n_samples,
                seed: cfg.seed,
                truncation_bound: truncated as f64 / n,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scale;
    use crate::mc::sample_rng;
    use crate::roots::{RootKind, RootSystem};
    use crate::stats::ks_two_sample;

    fn a2() -> DriftSpec {
        let rs = RootSystem::build(RootKind::A2).unwrap();
        DriftSpec::new(rs.clone(), rs.rho.clone()).unwrap()
    }

    #[test]
    fn final_segment_never_leaves_the_chamber() {
        let d = a2();
        let cfg = SimConfig { dt: 1e-3, t_max: 3.0, ..Default::default() };
        let x0 = d.rs.from_pairings(&[0.05, 0.3]);
        for k in 0..50 {
            let (p, ev) = sample_segment(&d, &[], &x0, &[0.0, 0.0], &cfg, &mut sample_rng(2, k)).unwrap();
            assert!(ev.is_none());
            for x in &p.positions {
                assert!(d.rs.in_chamber(x));
            }
        }
    }

    #[test]
    fn rank_one_exit_time_is_inverse_gaussian() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        let nu = scale(&rs.simple_roots[0], 0.5);
        let d = DriftSpec::new(rs, nu.clone()).unwrap();
        let cfg = SimConfig { dt: 1e-3, t_max: 50.0, ..Default::default() };
        let x0 = 1.0;
        let n = 4000;
        let times = map_samples(8, n, |rng, _| {
            let (_, ev) = sample_segment(&d, &[0], &[x0], &[0.0], &cfg, rng).unwrap();
            ev.unwrap().time
        });
        // mean of inverse Gaussian = x0 / drift
        let mean = times.iter().sum::<f64>() / n as f64;
        let var = x0 / nu[0].powi(3);
        assert!((mean - x0 / nu[0]).abs() < 4.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn williams_endpoint_matches_direct_rank_one() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        let nu = scale(&rs.simple_roots[0], 0.5);
        let d = DriftSpec::new(rs, nu).unwrap();
        let cfg = SimConfig { dt: 2e-3, t_max: 1.0, ..Default::default() };
        let sampler = MinimumSampler::new(&d).unwrap();
        let n = 5000;
        let w = map_samples(1, n, |rng, _| {
            williams_checkpoints(&d, &sampler, &cfg, &[1.0], rng).unwrap().checkpoints[0][0]
        });
        let direct = map_samples(2, n, |rng, _| super::super::direct_endpoint(&d, 1.0, rng)[0]);
        let ks = ks_two_sample(&w, &direct);
        assert!(ks < 0.035, "{ks}");
    }

    #[test]
    fn recorded_path_is_consistent() {
        let d = a2();
        let cfg = SimConfig { dt: 1e-2, t_max: 2.0, ..Default::default() };
        let p = sample_williams_path(&d, &cfg, &mut sample_rng(4, 0)).unwrap();
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.times.len(), p.segment_labels.len());
        assert!(p.events.len() <= 2);
        assert!((p.times.last().unwrap() - 2.0).abs() < 1e-9);
    }
}
