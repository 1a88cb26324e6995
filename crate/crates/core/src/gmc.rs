//! Lateral log-correlated field on circles, circle-averaged chaos Z_t and the radial integrals
//! I_i = int_0^inf exp(gamma <B_t - t (Q - alpha), e_i>) Z^i_t dt.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, scale, Vector};
use crate::mc::{map_samples, summarize, MCEstimate};
use crate::roots::RootSystem;
use crate::sim::{bridge_exp_integral, WeightProcess, STEP_CAP, STOP_LEVEL};
use crate::stats::{linear_fit, LinearFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmcConfig {
    pub gamma: f64,
    pub n_modes: usize,
    pub n_theta: usize,
    pub t_max: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for GmcConfig {
    fn default() -> Self {
        GmcConfig { gamma: 1.0, n_modes: 64, n_theta: 256, t_max: 200.0, dt: 5e-3, n_samples: 10_000, seed: 0 }
    }
}

impl GmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 2f64.sqrt()) {
            return Err(Error::precondition(format!("gamma = {} must lie in (0, sqrt 2)", self.gamma)));
        }
        if self.n_modes == 0 || self.n_theta < 4 * self.n_modes {
            return Err(Error::precondition("need n_modes >= 1 and n_theta >= 4 n_modes"));
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) || self.n_samples == 0 {
            return Err(Error::precondition("need dt > 0, t_max > 0 and n_samples >= 1"));
        }
        Ok(())
    }
}

/// Truncated Fourier model of the lateral field: for each orthonormal component,
/// Y(t, theta) = sum_{n <= N} a_n(t) cos(n theta) + b_n(t) sin(n theta), with a_n, b_n
/// independent stationary OU processes of rate n and variance 1/n.
#[derive(Clone)]
pub struct LateralField {
    pub rank: usize,
    pub n_modes: usize,
    pub n_theta: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LateralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LateralField")
            .field("rank", &self.rank)
            .field("n_modes", &self.n_modes)
            .field("n_theta", &self.n_theta)
            .finish()
    }
}

/// Mode coefficients, laid out as [component][mode][cos, sin].
#[derive(Debug, Clone)]
pub struct FieldState {
    pub modes: Vec<f64>,
}

impl LateralField {
    pub fn new(rank: usize, n_modes: usize, n_theta: usize) -> Self {
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(n_theta);
        LateralField { rank, n_modes, n_theta, fft }
    }

    /// sum_{n <= N} 1/n: pointwise variance of each component.
    pub fn truncated_variance(&self) -> f64 {
        (1..=self.n_modes).map(|n| 1.0 / n as f64).sum()
    }

    fn idx(&self, k: usize, n: usize) -> usize {
        2 * (k * self.n_modes + n - 1)
    }

    pub fn stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldState {
        let mut modes = vec![0.0; 2 * self.rank * self.n_modes];
        for k in 0..self.rank {
            for n in 1..=self.n_modes {
                let sd = (1.0 / n as f64).sqrt();
                let i = self.idx(k, n);
                modes[i] = sd * rng.sample::<f64, _>(StandardNormal);
                modes[i + 1] = sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        FieldState { modes }
    }

    /// Exact OU transition over time h.
    pub fn advance<R: Rng + ?Sized>(&self, state: &mut FieldState, h: f64, rng: &mut R) {
        for n in 1..=self.n_modes {
            let rho = (-(n as f64) * h).exp();
            let sd = ((1.0 - rho * rho) / n as f64).sqrt();
            for k in 0..self.rank {
                let i = self.idx(k, n);
                state.modes[i] = rho * state.modes[i] + sd * rng.sample::<f64, _>(StandardNormal);
                state.modes[i + 1] = rho * state.modes[i + 1] + sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }

    /// <Y(theta_j), u> on the grid theta_j = 2 pi j / n_theta (u in orthonormal coordinates).
    pub fn project(&self, state: &FieldState, u: &[f64], buf: &mut Vec<Complex<f64>>) {
        buf.clear();
        buf.resize(self.n_theta, Complex::new(0.0, 0.0));
        for n in 1..=self.n_modes {
            let mut c = Complex::new(0.0, 0.0);
            for (k, uk) in u.iter().enumerate() {
                let i = self.idx(k, n);
                c += Complex::new(uk * state.modes[i], -uk * state.modes[i + 1]);
            }
            buf[n] = c;
        }
        self.fft.process(buf);
    }

    /// Z = int_0^{2 pi} exp(<Y, u> - |u|^2 Var / 2) dtheta by the periodic rectangle rule.
    pub fn circle_average(&self, state: &FieldState, u: &[f64], buf: &mut Vec<Complex<f64>>) -> f64 {
        self.project(state, u, buf);
        let wick = 0.5 * norm2(u) * self.truncated_variance();
        let s: f64 = buf.iter().map(|c| (c.re - wick).exp()).sum();
        2.0 * PI * s / self.n_theta as f64
    }

    /// Covariance of the truncated model between (t, theta) and (t', theta').
    pub fn model_covariance(&self, dt: f64, dtheta: f64) -> f64 {
        (1..=self.n_modes)
            .map(|n| {
                let n = n as f64;
                (-n * dt.abs()).exp() * (n * dtheta).cos() / n
            })
            .sum()
    }
}

/// ln[(e^{-t} v e^{-t'}) / |e^{-t + i theta} - e^{-t' + i theta'}|]
pub fn exact_covariance(t1: f64, th1: f64, t2: f64, th2: f64) -> f64 {
    let r1 = (-t1).exp();
    let r2 = (-t2).exp();
    let dx = r1 * th1.cos() - r2 * th2.cos();
    let dy = r1 * th1.sin() - r2 * th2.sin();
    r1.max(r2).ln() - (dx * dx + dy * dy).sqrt().ln()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeRow {
    pub t1: f64,
    pub theta1: f64,
    pub t2: f64,
    pub theta2: f64,
    pub model: f64,
    pub exact: f64,
    pub rel_error: f64,
}

/// Compare the mode expansion with the closed kernel at 20 fixed point pairs.
pub fn covariance_probe(n_modes: usize) -> Vec<ProbeRow> {
    let field = LateralField::new(1, n_modes, 4 * n_modes);
    (0..20)
        .map(|k| {
            let kf = k as f64;
            let t1 = 0.1 * (k % 5) as f64;
            let t2 = t1 + 0.1 + 0.05 * (k % 4) as f64;
            let th1 = 0.3 * kf;
            let th2 = th1 + 0.15 * (k % 7) as f64;
            let model = field.model_covariance(t2 - t1, th2 - th1);
            let exact = exact_covariance(t1, th1, t2, th2);
            ProbeRow { t1, theta1: th1, t2, theta2: th2, model, exact, rel_error: ((model - exact) / exact).abs() }
        })
        .collect()
}

/// Field values on the (t, theta) grid: values[slice][j][component].
#[derive(Debug, Clone, Serialize)]
pub struct AngularField {
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl AngularField {
    /// (t, theta, component, value) rows.
    pub fn to_csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (s, t) in self.times.iter().enumerate() {
            for (j, th) in self.thetas.iter().enumerate() {
                for (k, v) in self.values[s][j].iter().enumerate() {
                    rows.push(vec![t.to_string(), th.to_string(), k.to_string(), v.to_string()]);
                }
            }
        }
        rows
    }
}

/// One replica of the rank-r field on n_slices time slices spaced dt apart.
pub fn sample_angular_field(cfg: &GmcConfig, rank: usize, n_slices: usize) -> Result<AngularField> {
    cfg.validate()?;
    let field = LateralField::new(rank, cfg.n_modes, cfg.n_theta);
    let mut rng = crate::mc::sample_rng(cfg.seed, 0);
    let mut state = field.stationary(&mut rng);
    let mut buf = Vec::new();
    let mut times = Vec::with_capacity(n_slices);
    let mut values = Vec::with_capacity(n_slices);
    for s in 0..n_slices {
        if s > 0 {
            field.advance(&mut state, cfg.dt, &mut rng);
        }
        times.push(s as f64 * cfg.dt);
        let mut slice = vec![vec![0.0; rank]; cfg.n_theta];
        for k in 0..rank {
            let mut u = vec![0.0; rank];
            u[k] = 1.0;
            field.project(&state, &u, &mut buf);
            for j in 0..cfg.n_theta {
                slice[j][k] = buf[j].re;
            }
        }
        values.push(slice);
    }
    let thetas = (0..cfg.n_theta).map(|j| 2.0 * PI * j as f64 / cfg.n_theta as f64).collect();
    Ok(AngularField { times, thetas, values })
}

/// Z_t for the direction u = gamma e_i, recomputed from stored grid values.
pub fn circle_average_z(field: &AngularField, cfg: &GmcConfig, u: &[f64]) -> Vec<f64> {
    let var: f64 = (1..=cfg.n_modes).map(|n| 1.0 / n as f64).sum();
    let wick = 0.5 * norm2(u) * var;
    field
        .values
        .iter()
        .map(|slice| {
            let s: f64 = slice.iter().map(|y| (dot(y, u) - wick).exp()).sum();
            2.0 * PI * s / slice.len() as f64
        })
        .collect()
}

/// Circle-average chaos as a multiplicative weight along a one-dimensional path.
#[derive(Debug, Clone)]
pub struct CircleWeight {
    pub field: LateralField,
    pub direction: Vector,
}

#[derive(Debug, Clone)]
pub struct CircleState {
    pub field: FieldState,
    pub z: f64,
}

impl CircleWeight {
    /// Scalar chaos exp(coeff Y) with Y of unit log-covariance.
    pub fn scalar(coeff: f64, cfg: &GmcConfig) -> Self {
        CircleWeight { field: LateralField::new(1, cfg.n_modes, cfg.n_theta), direction: vec![coeff] }
    }
}

impl WeightProcess for CircleWeight {
    type State = CircleState;
    fn stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> CircleState {
        let field = self.field.stationary(rng);
        let z = self.field.circle_average(&field, &self.direction, &mut Vec::new());
        CircleState { field, z }
    }
    fn step<R: Rng + ?Sized>(&self, state: &mut CircleState, h: f64, rng: &mut R) {
        self.field.advance(&mut state.field, h, rng);
        state.z = self.field.circle_average(&state.field, &self.direction, &mut Vec::new());
    }
    fn value(&self, state: &CircleState) -> f64 {
        state.z
    }
    fn mean(&self) -> f64 {
        2.0 * PI
    }
}

/// E[Z] from independent stationary slices, for direction gamma e_i.
pub fn z_mean(rs: &RootSystem, i: usize, cfg: &GmcConfig) -> Result<MCEstimate> {
    cfg.validate()?;
    let field = LateralField::new(rs.rank, cfg.n_modes, cfg.n_theta);
    let u = scale(&rs.simple_roots[i], cfg.gamma);
    let z = map_samples(cfg.seed, cfg.n_samples, |rng, _| {
        let st = field.stationary(rng);
        field.circle_average(&st, &u, &mut Vec::new())
    });
    Ok(summarize(&z, cfg.seed))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZCorrelation {
    /// corr(Z^1_t, Z^2_t) for the lateral circle averages; nonnegative by Jensen since the
    /// kernel has zero circle average.
    pub lateral: f64,
    pub lateral_stderr: f64,
    /// corr of the full circle averages e^{gamma <B_t, e_i> - gamma^2 |e_i|^2 t / 2} Z^i_t.
    pub full: f64,
    pub full_stderr: f64,
    pub radius_time: f64,
    /// E[Z^1 Z^2] and its exact value for the truncated kernel.
    pub product_moment: MCEstimate,
    pub product_moment_exact: f64,
}

fn correlation(pairs: &[(f64, f64)], seed: u64) -> (f64, f64) {
    let n = pairs.len() as f64;
    let m1 = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let m2 = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut c, mut v1, mut v2) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        c += (a - m1) * (b - m2);
        v1 += (a - m1).powi(2);
        v2 += (b - m2).powi(2);
    }
    let sd1 = (v1 / n).sqrt();
    let sd2 = (v2 / n).sqrt();
    // stderr of the mean of normalized products; robust to heavy tails
    let prods: Vec<f64> = pairs.iter().map(|(a, b)| (a - m1) * (b - m2) / (sd1 * sd2)).collect();
    (c / (v1 * v2).sqrt(), summarize(&prods, seed).stderr)
}

/// Equal-time correlation of the first two circle averages, at radius e^{-t}.
pub fn z_correlation(rs: &RootSystem, cfg: &GmcConfig, t: f64) -> Result<ZCorrelation> {
    cfg.validate()?;
    if rs.rank < 2 {
        return Err(Error::precondition("correlation needs rank >= 2"));
    }
    if !(t > 0.0) {
        return Err(Error::precondition("radius time must be positive"));
    }
    let field = LateralField::new(rs.rank, cfg.n_modes, cfg.n_theta);
    let u1 = scale(&rs.simple_roots[0], cfg.gamma);
    let u2 = scale(&rs.simple_roots[1], cfg.gamma);
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| {
        let st = field.stationary(rng);
        let mut buf = Vec::new();
        let z1 = field.circle_average(&st, &u1, &mut buf);
        let z2 = field.circle_average(&st, &u2, &mut buf);
        let b: Vector = (0..rs.rank).map(|_| t.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        let r1 = (dot(&b, &u1) - 0.5 * norm2(&u1) * t).exp();
        let r2 = (dot(&b, &u2) - 0.5 * norm2(&u2) * t).exp();
        (z1, z2, r1 * z1, r2 * z2)
    });
    let lat: Vec<(f64, f64)> = draws.iter().map(|d| (d.0, d.1)).collect();
    let full: Vec<(f64, f64)> = draws.iter().map(|d| (d.2, d.3)).collect();
    let (lateral, lateral_stderr) = correlation(&lat, cfg.seed);
    let (fc, full_stderr) = correlation(&full, cfg.seed);
    let prod: Vec<f64> = lat.iter().map(|(a, b)| a * b).collect();
    // (2 pi)^2 times the circle mean of exp(<u1, u2> k_N)
    let m = 4096;
    let c12 = dot(&u1, &u2);
    let mean: f64 = (0..m)
        .map(|j| (c12 * field.model_covariance(0.0, 2.0 * PI * j as f64 / m as f64)).exp())
        .sum::<f64>()
        / m as f64;
    Ok(ZCorrelation {
        lateral,
        lateral_stderr,
        full: fc,
        full_stderr,
        radius_time: t,
        product_moment: summarize(&prod, cfg.seed),
        product_moment_exact: 4.0 * PI * PI * mean,
    })
}

/// Vertex-insertion data: drift coefficients gamma <Q - alpha, e_i> > 0.
fn insertion_drifts(rs: &RootSystem, gamma: f64, alpha: &[f64], q: &[f64]) -> Result<Vector> {
    let d: Vector = q.iter().zip(alpha).map(|(a, b)| a - b).collect();
    let k: Vector = rs.simple_roots.iter().map(|e| gamma * dot(&d, e)).collect();
    if k.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::precondition("requires alpha - Q in the negative chamber"));
    }
    Ok(k)
}

/// Background charge gamma rho + (2/gamma) rho^vee.
pub fn background_charge(rs: &RootSystem, gamma: f64) -> Vector {
    rs.rho.iter().zip(&rs.rho_vee).map(|(a, b)| gamma * a + 2.0 / gamma * b).collect()
}

/// One joint draw of (I_1, ..., I_r); the flag marks paths stopped by t_max.
pub fn sample_integrals<R: Rng + ?Sized>(
    rs: &RootSystem,
    field: &LateralField,
    drifts: &[f64],
    cfg: &GmcConfig,
    rng: &mut R,
) -> (Vector, bool) {
    let r = rs.rank;
    let dirs: Vec<Vector> = rs.simple_roots.iter().map(|e| scale(e, cfg.gamma)).collect();
    let vars: Vec<f64> = dirs.iter().map(|u| norm2(u)).collect();
    let mut st = field.stationary(rng);
    let mut buf = Vec::new();
    let mut z0: Vector = dirs.iter().map(|u| field.circle_average(&st, u, &mut buf)).collect();
    let mut b = vec![0.0; r];
    let mut y = vec![0.0; r];
    let mut acc = vec![0.0; r];
    let mut t = 0.0;
    loop {
        let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
        if ymin >= STOP_LEVEL {
            return (acc, false);
        }
        if t >= cfg.t_max {
            return (acc, true);
        }
        let h = cfg.dt * ymin.exp().clamp(1.0, STEP_CAP);
        let sd = h.sqrt();
        for bk in b.iter_mut() {
            *bk += sd * rng.sample::<f64, _>(StandardNormal);
        }
        t += h;
        field.advance(&mut st, h, rng);
        for i in 0..r {
            let yn = drifts[i] * t - dot(&b, &dirs[i]);
            let z1 = field.circle_average(&st, &dirs[i], &mut buf);
            acc[i] += 0.5 * (z0[i] + z1) * bridge_exp_integral(y[i], yn, h, vars[i]);
            y[i] = yn;
            z0[i] = z1;
        }
    }
}

/// MC estimate of E[I_i] for the insertion alpha.
pub fn estimate_i(rs: &RootSystem, alpha: &[f64], i: usize, cfg: &GmcConfig) -> Result<MCEstimate> {
    cfg.validate()?;
    let q = background_charge(rs, cfg.gamma);
    let drifts = insertion_drifts(rs, cfg.gamma, alpha, &q)?;
    let field = LateralField::new(rs.rank, cfg.n_modes, cfg.n_theta);
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| sample_integrals(rs, &field, &drifts, cfg, rng));
    let vals: Vec<f64> = draws.iter().map(|(v, _)| v[i]).collect();
    let mut est = summarize(&vals, cfg.seed);
    est.truncation_bound = draws.iter().filter(|(_, tr)| *tr).count() as f64 / cfg.n_samples as f64;
    Ok(est)
}

/// E[I_i] = 2 pi / (gamma <Q - alpha, e_i> - gamma^2 |e_i|^2 / 2) when finite.
pub fn expected_i(rs: &RootSystem, alpha: &[f64], i: usize, gamma: f64) -> Result<f64> {
    let q = background_charge(rs, gamma);
    let k = insertion_drifts(rs, gamma, alpha, &q)?[i];
    let rate = k - 0.5 * gamma * gamma * rs.norm2_root(i);
    if !(rate > 0.0) {
        return Err(Error::precondition("first moment of I_i is infinite"));
    }
    Ok(2.0 * PI / rate)
}

/// psi_alpha(c) = e^{<alpha - Q, c>} E[exp(-sum_i mu_i e^{gamma <c, e_i>} I_i)].
pub fn vertex_operator_mc(
    rs: &RootSystem,
    alpha: &[f64],
    mu: &[f64],
    cs: &[Vector],
    cfg: &GmcConfig,
) -> Result<Vec<MCEstimate>> {
    cfg.validate()?;
    let q = background_charge(rs, cfg.gamma);
    let drifts = insertion_drifts(rs, cfg.gamma, alpha, &q)?;
    let field = LateralField::new(rs.rank, cfg.n_modes, cfg.n_theta);
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| sample_integrals(rs, &field, &drifts, cfg, rng));
    let frac = draws.iter().filter(|(_, tr)| *tr).count() as f64 / cfg.n_samples as f64;
    let nu: Vector = alpha.iter().zip(&q).map(|(a, b)| a - b).collect();
    Ok(cs
        .iter()
        .map(|c| {
            let lam: Vector = (0..rs.rank).map(|i| mu[i] * (cfg.gamma * dot(c, &rs.simple_roots[i])).exp()).collect();
            let vals: Vec<f64> = draws
                .iter()
                .map(|(v, _)| (-v.iter().zip(&lam).map(|(a, b)| a * b).sum::<f64>()).exp())
                .collect();
            let mut e = summarize(&vals, cfg.seed).scaled(dot(&nu, c).exp());
            e.truncation_bound = frac;
            e
        })
        .collect())
}

/// Rank-one integral int e^{gamma_i X_t} Z_t dt with X = W - a t, under the law that runs
/// X with drift +a until it reaches `level` and with drift -a afterwards.
/// Returns (I, sup X).
pub fn sample_tilted_integral<R: Rng + ?Sized>(
    weight: &CircleWeight,
    coeff: f64,
    a: f64,
    level: f64,
    cfg: &GmcConfig,
    rng: &mut R,
) -> (f64, f64, bool) {
    let mut st = weight.stationary(rng);
    let mut z0 = st.z;
    let (mut x, mut sup, mut t, mut acc) = (0.0f64, 0.0f64, 0.0, 0.0);
    let mut climbing = level > 0.0;
    let v = coeff * coeff;
    loop {
        // step size relative to the running maximum: contributions far below it are negligible
        let rel = coeff * (sup - x);
        if !climbing && rel >= STOP_LEVEL && coeff * x <= -STOP_LEVEL {
            return (acc, sup, false);
        }
        if t >= cfg.t_max {
            return (acc, sup, true);
        }
        let h = cfg.dt * rel.exp().clamp(1.0, STEP_CAP);
        let drift = if climbing { a } else { -a };
        let xn = x + drift * h + h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        weight.step(&mut st, h, rng);
        acc += 0.5 * (z0 + st.z) * bridge_exp_integral(-coeff * x, -coeff * xn, h, v);
        z0 = st.z;
        x = xn;
        t += h;
        sup = sup.max(x);
        if climbing && x >= level {
            climbing = false;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub fit: LinearFit,
    /// Closed exponent <Q - alpha, e_i^vee> / gamma.
    pub exponent: f64,
    /// exp(intercept): estimate of the tail constant.
    pub constant: f64,
    pub last_bin_count: usize,
}

/// Importance-sampled draws (I_i, likelihood ratio) for rank one, from a mixture of laws
/// that push the radial drift up to levels spread over [0, ln(u_hi)/gamma_i] (the untilted
/// law is one component). Returns the draws and the closed tail exponent.
pub fn tilted_draws(
    rs: &RootSystem,
    alpha: &[f64],
    i: usize,
    u_hi: f64,
    cfg: &GmcConfig,
) -> Result<(Vec<(f64, f64)>, f64)> {
    cfg.validate()?;
    let q = background_charge(rs, cfg.gamma);
    let k = insertion_drifts(rs, cfg.gamma, alpha, &q)?[i];
    let coeff = cfg.gamma * rs.norm2_root(i).sqrt();
    let a = k / coeff;
    let weight = CircleWeight::scalar(coeff, cfg);
    let n_levels = 6;
    let top = (u_hi.ln().max(0.0) + 1.0) / coeff;
    let levels: Vec<f64> = (0..n_levels).map(|j| top * j as f64 / (n_levels - 1) as f64).collect();
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, kidx| {
        let level = levels[kidx as usize % n_levels];
        let (val, sup, tr) = sample_tilted_integral(&weight, coeff, a, level, cfg, rng);
        // dQ/dP = mean_j e^{2 a l_j} 1{sup >= l_j}
        let dens: f64 = levels
            .iter()
            .filter(|&&l| sup >= l)
            .map(|&l| (2.0 * a * l).exp())
            .sum::<f64>()
            / n_levels as f64;
        (val, 1.0 / dens, tr)
    });
    if draws.iter().any(|d| d.2) {
        return Err(Error::precondition("t_max too short for the tail integrals"));
    }
    Ok((draws.into_iter().map(|(v, w, _)| (v, w)).collect(), 2.0 * a / coeff))
}

/// Log-log fit of P(I_i > u) over u in [u_lo, u_lo 10^decades], rank one.
pub fn tail_slope(
    rs: &RootSystem,
    alpha: &[f64],
    i: usize,
    u_lo: f64,
    decades: f64,
    cfg: &GmcConfig,
) -> Result<TailFit> {
    if !(u_lo > 0.0) || !(decades > 0.0) {
        return Err(Error::precondition("thresholds must be positive"));
    }
    let u_hi = u_lo * 10f64.powf(decades);
    let (draws, exponent) = tilted_draws(rs, alpha, i, u_hi, cfg)?;
    let n_u = 13;
    let thresholds: Vec<f64> =
        (0..n_u).map(|j| u_lo * 10f64.powf(decades * j as f64 / (n_u - 1) as f64)).collect();
    let mut probabilities = Vec::with_capacity(n_u);
    let mut stderrs = Vec::with_capacity(n_u);
    for &u in &thresholds {
        let vals: Vec<f64> = draws.iter().map(|(v, w)| if *v > u { *w } else { 0.0 }).collect();
        let e = summarize(&vals, cfg.seed);
        probabilities.push(e.mean);
        stderrs.push(e.stderr);
    }
    let last_bin_count = draws.iter().filter(|(v, _)| *v > u_hi).count();
    if last_bin_count < 100 || probabilities.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InsufficientData(format!(
            "{last_bin_count} samples above the top threshold, need 100"
        )));
    }
    let lx: Vec<f64> = thresholds.iter().map(|u| u.ln()).collect();
    let ly: Vec<f64> = probabilities.iter().map(|p| p.ln()).collect();
    let w: Vec<f64> = probabilities.iter().zip(&stderrs).map(|(p, s)| (p / s).powi(2)).collect();
    let fit = linear_fit(&lx, &ly, Some(&w));
    Ok(TailFit {
        thresholds,
        probabilities,
        stderrs,
        constant: fit.intercept.exp(),
        fit,
        exponent,
        last_bin_count,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VertexCoefficient {
    /// lambda = mu_i e^{gamma <c, e_i>}
    pub lambda: f64,
    /// (E[exp(-lambda I_i)] - 1) / lambda^kappa, the coefficient of e^{<s_i^alpha - alpha, c>}
    /// for mu_i = 1.
    pub coefficient: MCEstimate,
}

/// Rank-one vertex-operator coefficients from importance-sampled draws: as lambda -> 0 they
/// tend to R_{s_i}(alpha) at unit cosmological constant.
pub fn vertex_coefficients(
    rs: &RootSystem,
    alpha: &[f64],
    i: usize,
    lambdas: &[f64],
    cfg: &GmcConfig,
) -> Result<Vec<VertexCoefficient>> {
    let lmin = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return Err(Error::precondition("lambda must be positive"));
    }
    let (draws, kappa) = tilted_draws(rs, alpha, i, 10.0 / lmin, cfg)?;
    Ok(lambdas
        .iter()
        .map(|&l| {
            let vals: Vec<f64> = draws.iter().map(|(v, w)| w * (-l * v).exp_m1()).collect();
            VertexCoefficient { lambda: l, coefficient: summarize(&vals, cfg.seed).scaled(l.powf(-kappa)) }
        })
        .collect())
}

/// Plain-MC joint tail P(I_1 > u, ..., I_r > u) over a threshold grid (reported, not fitted
/// against a closed constant).
pub fn joint_tail(
    rs: &RootSystem,
    alpha: &[f64],
    thresholds: &[f64],
    cfg: &GmcConfig,
) -> Result<Vec<MCEstimate>> {
    cfg.validate()?;
    let q = background_charge(rs, cfg.gamma);
    let drifts = insertion_drifts(rs, cfg.gamma, alpha, &q)?;
    let field = LateralField::new(rs.rank, cfg.n_modes, cfg.n_theta);
    let draws = map_samples(cfg.seed, cfg.n_samples, |rng, _| sample_integrals(rs, &field, &drifts, cfg, rng).0);
    Ok(thresholds
        .iter()
        .map(|&u| {
            let v: Vec<f64> = draws.iter().map(|d| if d.iter().all(|&x| x > u) { 1.0 } else { 0.0 }).collect();
            summarize(&v, cfg.seed)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::sample_rng;
    use crate::roots::RootKind;

    #[test]
    fn probe_matches_kernel_at_64_modes() {
        let rows = covariance_probe(64);
        assert_eq!(rows.len(), 20);
        for r in rows {
            assert!(r.rel_error < 0.01, "{r:?}");
        }
    }

    #[test]
    fn slices_have_zero_circle_average() {
        let cfg = GmcConfig { n_modes: 16, n_theta: 64, ..Default::default() };
        let f = sample_angular_field(&cfg, 2, 5).unwrap();
        for slice in &f.values {
            for k in 0..2 {
                let s: f64 = slice.iter().map(|y| y[k]).sum();
                assert!(s.abs() < 1e-12, "{s}");
            }
        }
    }

    #[test]
    fn vanishing_coupling_gives_constant_z() {
        let field = LateralField::new(1, 8, 32);
        let st = field.stationary(&mut sample_rng(1, 0));
        let z = field.circle_average(&st, &[0.0], &mut Vec::new());
        assert!((z - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn empirical_covariance_matches_model() {
        let field = LateralField::new(1, 16, 64);
        let n = 20_000;
        let pairs = map_samples(5, n, |rng, _| {
            let mut st = field.stationary(rng);
            let mut buf = Vec::new();
            field.project(&st, &[1.0], &mut buf);
            let a = buf[0].re;
            field.advance(&mut st, 0.2, rng);
            field.project(&st, &[1.0], &mut buf);
            (a, buf[16].re)
        });
        let c = pairs.iter().map(|(a, b)| a * b).sum::<f64>() / n as f64;
        let model = field.model_covariance(0.2, 2.0 * PI * 16.0 / 64.0);
        let se = (pairs.iter().map(|(a, b)| (a * b - c).powi(2)).sum::<f64>() / n as f64 / n as f64).sqrt();
        assert!((c - model).abs() < 4.0 * se, "{c} {model} {se}");
    }

    #[test]
    fn z_has_mean_two_pi() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        let cfg = GmcConfig { gamma: 0.8, n_modes: 32, n_theta: 128, n_samples: 10_000, seed: 2, ..Default::default() };
        let e = z_mean(&rs, 0, &cfg).unwrap();
        assert!(e.z_against(2.0 * PI) < 3.0, "{e:?}");
    }

    #[test]
    fn a2_circle_average_correlations() {
        let rs = RootSystem::build(RootKind::A2).unwrap();
        let cfg = GmcConfig { gamma: 0.8, n_modes: 16, n_theta: 64, n_samples: 20_000, seed: 3, ..Default::default() };
        let c = z_correlation(&rs, &cfg, 1.0).unwrap();
        assert!(c.full < -3.0 * c.full_stderr, "{c:?}");
        assert!(c.lateral > 0.0, "{c:?}");
        assert!(c.product_moment.z_against(c.product_moment_exact) < 3.0, "{c:?}");
    }

    #[test]
    fn unit_insertion_mass_is_pi() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        let cfg = GmcConfig { gamma: 0.5, n_modes: 16, n_theta: 64, dt: 5e-3, n_samples: 2_000, seed: 4, ..Default::default() };
        let e = estimate_i(&rs, &[0.0], 0, &cfg).unwrap();
        assert!((expected_i(&rs, &[0.0], 0, 0.5).unwrap() - PI).abs() < 1e-12);
        assert!(e.z_against(PI) < 3.0, "{e:?}");
    }
}
