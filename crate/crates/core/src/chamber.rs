//! Closed-form laws of drifted Brownian motion relative to a Weyl chamber.
//!
//! Vectors are expanded as x = sum <x, e_i> omega_i^vee, and wall derivatives act on
//! the <., e_i> coordinates.

use std::f64::consts::PI;

use serde::Serialize;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::expsum::SignedExpSum;
use crate::linalg::{add, dot, norm2, scale, sub, Vector};
use crate::quad::{integrate, integrate_to_inf_scaled, QuadOptions};
use crate::roots::RootSystem;

/// Brownian motion with drift `nu` strictly inside the chamber.
#[derive(Debug, Clone)]
pub struct DriftSpec {
    pub rs: RootSystem,
    pub nu: Vector,
    /// s nu for every group element, in group order.
    pub images: Vec<Vector>,
    pub signs: Vec<f64>,
}

impl DriftSpec {
    pub fn new(rs: RootSystem, nu: Vector) -> Result<Self> {
        if nu.len() != rs.rank {
            return Err(Error::precondition(format!(
                "drift has dimension {} but the rank is {}",
                nu.len(),
                rs.rank
            )));
        }
        if let Some(i) = rs.pairings(&nu).iter().position(|&p| p <= 0.0) {
            return Err(Error::precondition(format!(
                "drift must lie in the open chamber, but <nu, e_{}> <= 0",
                i + 1
            )));
        }
        let g = rs.weyl();
        let images = g.elements.iter().map(|s| s.apply(&nu)).collect();
        let signs = g.elements.iter().map(|s| s.sign()).collect();
        Ok(DriftSpec { rs, nu, images, signs })
    }

    pub fn rank(&self) -> usize {
        self.rs.rank
    }

    pub fn nu_norm2(&self) -> f64 {
        norm2(&self.nu)
    }

    /// prod_{i in S} <s nu - nu, omega_i^vee>
    pub fn weight_product(&self, s: usize, indices: &[usize]) -> f64 {
        let d = sub(&self.images[s], &self.nu);
        indices
            .iter()
            .map(|&i| dot(&d, &self.rs.coweights[i]))
            .product()
    }

    /// lambda_s over all walls.
    pub fn lambda(&self, s: usize) -> f64 {
        let all: Vec<usize> = (0..self.rank()).collect();
        self.weight_product(s, &all)
    }

    /// h(x) = sum_s eps(s) exp(<s nu - nu, x>)
    pub fn h_sum(&self) -> SignedExpSum {
        self.partial_h_sum(&[])
    }

    /// d_S h as a signed exponential sum.
    pub fn partial_h_sum(&self, indices: &[usize]) -> SignedExpSum {
        SignedExpSum::from_terms(
            self.rank(),
            (0..self.images.len()).map(|s| {
                (
                    self.signs[s] * self.weight_product(s, indices),
                    sub(&self.images[s], &self.nu),
                )
            }),
        )
    }

    pub fn h(&self, x: &[f64]) -> f64 {
        self.h_sum().eval(x)
    }

    pub fn partial_h(&self, indices: &[usize], x: &[f64]) -> f64 {
        self.partial_h_sum(indices).eval(x)
    }

    /// U(x) = sum_s eps(s) lambda_s exp(<s nu, x>)
    pub fn u_sum(&self) -> SignedExpSum {
        SignedExpSum::from_terms(
            self.rank(),
            (0..self.images.len()).map(|s| (self.signs[s] * self.lambda(s), self.images[s].clone())),
        )
    }

    /// P(<M, e_i> >= m_i for all i), m given by wall coordinates.
    pub fn min_law_survival(&self, m: &[f64]) -> f64 {
        if m.iter().any(|&mi| mi > 0.0) {
            return 0.0;
        }
        let x = self.rs.from_pairings(&scale(m, -1.0));
        self.h(&x).clamp(0.0, 1.0)
    }

    /// Density of the wall coordinates of the minimum.
    pub fn min_density(&self, m: &[f64]) -> f64 {
        if m.iter().any(|&mi| mi > 0.0) {
            return 0.0;
        }
        let all: Vec<usize> = (0..self.rank()).collect();
        let x = self.rs.from_pairings(&scale(m, -1.0));
        self.partial_h(&all, &x).max(0.0)
    }

    fn gauss(&self, t: f64, a: &[f64], b: &[f64]) -> f64 {
        let r = self.rank() as f64;
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (-d2 / (2.0 * t)).exp() / (2.0 * PI * t).powf(r / 2.0)
    }

    /// Transition density of the drifted process killed on M + boundary.
    pub fn killed_kernel(&self, m: &[f64], t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::precondition(format!("time must be positive, got {t}")));
        }
        let xm = sub(x, m);
        let g = self.rs.weyl();
        let mut sum = 0.0;
        for (s, el) in g.elements.iter().enumerate() {
            let img = add(m, &el.apply(&xm));
            sum += self.signs[s] * self.gauss(t, &img, y);
        }
        let drift = dot(&self.nu, &sub(y, x)) - 0.5 * self.nu_norm2() * t;
        Ok(sum * drift.exp())
    }

    /// First-hitting density of M + wall i at (t, z) for the drifted process from x.
    pub fn killed_flux(&self, m: &[f64], x: &[f64], i: usize, t: f64, z: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::precondition(format!("time must be positive, got {t}")));
        }
        let n = self.rs.unit_root(i);
        let xm = sub(x, m);
        let g = self.rs.weyl();
        let mut sum = 0.0;
        for (s, el) in g.elements.iter().enumerate() {
            let sx = el.apply(&xm);
            let img = add(m, &sx);
            sum += self.signs[s] * self.gauss(t, &img, z) * dot(&sx, &n) / t;
        }
        let drift = dot(&self.nu, &sub(z, x)) - 0.5 * self.nu_norm2() * t;
        Ok(0.5 * sum * drift.exp())
    }

    /// First-hitting density of y + wall i at time t and point z, for the process with
    /// generator 1/2 Laplacian + grad log U started at x.
    pub fn hitting_density(&self, x: &[f64], y: &[f64], i: usize, t: f64, z: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::precondition(format!("time must be positive, got {t}")));
        }
        if !self.rs.in_chamber(x) {
            return Err(Error::precondition("start point must lie in the open chamber"));
        }
        let px = self.rs.pairings(x);
        let py = self.rs.pairings(y);
        if px.iter().zip(&py).any(|(a, b)| b >= a) {
            return Err(Error::precondition(
                "shift must satisfy <y, e_i> < <x, e_i> for every i",
            ));
        }
        let u = self.u_sum();
        let (ux, shift_x) = u.eval_scaled(x);
        if !(ux > 0.0) {
            return Err(Error::precondition("U(x) must be positive"));
        }
        let zy = sub(z, y);
        let pz = self.rs.pairings(&zy);
        let tol = 1e-9 * (1.0 + norm2(&zy).sqrt());
        if pz[i].abs() > tol || pz.iter().enumerate().any(|(j, &p)| j != i && p < -tol) {
            return Ok(0.0);
        }
        let (uz, shift_z) = u.eval_scaled(z);
        let n = self.rs.unit_root(i);
        let xy = sub(x, y);
        let r = self.rank() as f64;
        let g = self.rs.weyl();
        let mut sum = 0.0;
        for (s, el) in g.elements.iter().enumerate() {
            let sxy = el.apply(&xy);
            let d2 = norm2(&sub(&add(&sxy, y), z));
            sum += self.signs[s] * dot(&sxy, &n) * (-d2 / (2.0 * t)).exp();
        }
        let pref = 0.5 / (t * (2.0 * PI * t).powf(r / 2.0));
        let log_ratio = shift_z - shift_x - 0.5 * self.nu_norm2() * t;
        Ok((pref * sum * uz / ux * log_ratio.exp()).max(0.0))
    }

    /// Unit vector spanning wall i of a rank-2 chamber.
    pub fn wall_direction(&self, i: usize) -> Result<Vector> {
        match self.rank() {
            2 => {
                let w = &self.rs.coweights[1 - i];
                Ok(scale(w, 1.0 / norm2(w).sqrt()))
            }
            r => Err(Error::precondition(format!(
                "wall parametrization needs rank 1 or 2, got {r}"
            ))),
        }
    }

    /// Total hitting mass of y + wall i, integrated over time and the wall.
    pub fn wall_mass(&self, x: &[f64], y: &[f64], i: usize) -> Result<f64> {
        // validate once
        self.hitting_density(x, y, i, 1.0, y)?;
        let opt = QuadOptions { abs_tol: 1e-11, rel_tol: 1e-8, max_panels: 400 };
        let scale_t = 1.0 + norm2(&sub(x, y)).sqrt();
        match self.rank() {
            1 => Ok(integrate_to_inf_scaled(
                |t| if t > 0.0 { self.hitting_density(x, y, i, t, y).unwrap_or(0.0) } else { 0.0 },
                0.0,
                scale_t,
                opt,
            )),
            2 => {
                let d = self.wall_direction(i)?;
                Ok(integrate_to_inf_scaled(
                    |t| {
                        if t <= 0.0 {
                            return 0.0;
                        }
                        integrate_to_inf_scaled(
                            |u| {
                                let z = add(y, &scale(&d, u));
                                self.hitting_density(x, y, i, t, &z).unwrap_or(0.0)
                            },
                            0.0,
                            t.sqrt() + scale_t,
                            opt,
                        )
                    },
                    0.0,
                    scale_t,
                    opt,
                ))
            }
            r => Err(Error::precondition(format!(
                "wall integration supports rank 1 or 2, got {r}"
            ))),
        }
    }

    /// Sum of hitting masses over all walls.
    pub fn total_hitting_mass(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        (0..self.rank()).map(|i| self.wall_mass(x, y, i)).sum()
    }

    /// Exit-wall probability of the full h-process from x and its leading-term prediction.
    pub fn exit_wall_prob(&self, x: &[f64], i: usize) -> Result<ExitWallProb> {
        if self.rank() != 2 {
            return Err(Error::precondition("exit-wall probabilities need a rank-2 system"));
        }
        let origin = vec![0.0; 2];
        let exact = self.wall_mass(x, &origin, i)?;
        let g = self.rs.weyl();
        let s = g.from_word(&[i, 1 - i]);
        let u = self.u_sum();
        let (ux, shift) = u.eval_scaled(x);
        let lead = self.lambda(s) * (dot(&self.images[s], x) - shift).exp() / ux;
        Ok(ExitWallProb { wall: i, exact, asymptotic: lead, element: g.elements[s].label() })
    }

    /// Both sides of the renewal identity for the derivative of the killed kernel in
    /// the position of wall i: (integral over first hits, direct derivative).
    pub fn renewal_check(
        &self,
        m: &[f64],
        t: f64,
        x: &[f64],
        y: &[f64],
        i: usize,
    ) -> Result<(f64, f64)> {
        let eps = 1e-5;
        let dir = &self.rs.coweights[i];
        let dkernel = |tt: f64, a: &[f64]| -> f64 {
            let mp = add(m, &scale(dir, eps));
            let mm = sub(m, &scale(dir, eps));
            let kp = self.killed_kernel(&mp, tt, a, y).unwrap_or(0.0);
            let km = self.killed_kernel(&mm, tt, a, y).unwrap_or(0.0);
            (kp - km) / (2.0 * eps)
        };
        let rhs = dkernel(t, x);
        let opt = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-7, max_panels: 400 };
        let lhs = match self.rank() {
            1 => integrate(
                |u| {
                    if u <= 0.0 || u >= t {
                        return 0.0;
                    }
                    self.killed_flux(m, x, i, u, m).unwrap_or(0.0) * dkernel(t - u, m)
                },
                0.0,
                t,
                opt,
            ),
            2 => {
                let d = self.wall_direction(i)?;
                let spread = 1.0 + norm2(&sub(x, m)).sqrt() + norm2(&sub(y, m)).sqrt();
                integrate(
                    |u| {
                        if u <= 0.0 || u >= t {
                            return 0.0;
                        }
                        integrate_to_inf_scaled(
                            |w| {
                                let z = add(m, &scale(&d, w));
                                self.killed_flux(m, x, i, u, &z).unwrap_or(0.0) * dkernel(t - u, &z)
                            },
                            0.0,
                            spread,
                            opt,
                        )
                    },
                    0.0,
                    t,
                    opt,
                )
            }
            r => {
                return Err(Error::precondition(format!(
                    "renewal check supports rank 1 or 2, got {r}"
                )))
            }
        };
        Ok((lhs, rhs))
    }

    /// Chapman-Kolmogorov: (integral of k_t(x, w) k_s(w, y) dw over M + C, k_{t+s}(x, y)).
    pub fn chapman_kolmogorov(
        &self,
        m: &[f64],
        t: f64,
        s: f64,
        x: &[f64],
        y: &[f64],
    ) -> Result<(f64, f64)> {
        let direct = self.killed_kernel(m, t + s, x, y)?;
        let composed = self.integrate_over_chamber(m, |w| {
            self.killed_kernel(m, t, x, w).unwrap_or(0.0) * self.killed_kernel(m, s, w, y).unwrap_or(0.0)
        })?;
        Ok((composed, direct))
    }

    /// Probability of no wall hit by time t: integral of the killed kernel.
    pub fn survival_probability(&self, m: &[f64], t: f64, x: &[f64]) -> Result<f64> {
        self.killed_kernel(m, t, x, x)?;
        self.integrate_over_chamber(m, |w| self.killed_kernel(m, t, x, w).unwrap_or(0.0))
    }

    /// Integral over M + C in the coordinates w = M + sum a_i omega_i^vee, rank <= 2.
    pub fn integrate_over_chamber<F: Fn(&[f64]) -> f64>(&self, m: &[f64], f: F) -> Result<f64> {
        let opt = QuadOptions { abs_tol: 1e-11, rel_tol: 1e-7, max_panels: 300 };
        let cw = &self.rs.coweights;
        match self.rank() {
            1 => {
                let jac = norm2(&cw[0]).sqrt();
                Ok(jac
                    * integrate_to_inf_scaled(|a| f(&add(m, &scale(&cw[0], a))), 0.0, 1.0, opt))
            }
            2 => {
                let jac = (cw[0][0] * cw[1][1] - cw[0][1] * cw[1][0]).abs();
                Ok(jac
                    * integrate_to_inf_scaled(
                        |a| {
                            integrate_to_inf_scaled(
                                |b| {
                                    let w = add(m, &add(&scale(&cw[0], a), &scale(&cw[1], b)));
                                    f(&w)
                                },
                                0.0,
                                1.0,
                                opt,
                            )
                        },
                        0.0,
                        1.0,
                        opt,
                    ))
            }
            r => Err(Error::precondition(format!(
                "chamber integration supports rank 1 or 2, got {r}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExitWallProb {
    pub wall: usize,
    pub exact: f64,
    pub asymptotic: f64,
    /// Group element whose term gives the leading prediction.
    pub element: String,
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Survival of the one-dimensional coordinate <X, e> / |e| for BM with drift a
/// (along the unit root) started at distance d > 0 from the wall, up to time t.
pub fn survival_1d(d: f64, a: f64, t: f64) -> f64 {
    let st = t.sqrt();
    normal_cdf((d + a * t) / st) - (-2.0 * a * d).exp() * normal_cdf((-d + a * t) / st)
}
