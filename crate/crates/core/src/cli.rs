//! Experiment driver behind the `weylchamber` binary. Every run is described by an
//! [`ExperimentSpec`], which is echoed into the output header.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::acceptance::{decomposition_report, run_all};
use crate::chamber::DriftSpec;
use crate::error::{Error, Result};
use crate::gmc::{
    covariance_probe, estimate_i, expected_i, joint_tail, sample_angular_field, tail_slope,
    vertex_coefficients, z_correlation, GmcConfig,
};
use crate::io::{write_table, Format, Table};
use crate::linalg::{add, scale, Vector};
use crate::mc::{map_samples, set_threads, summarize};
use crate::roots::{RootKind, RootSystem};
use crate::sim::{survival_mc, MinimumSampler, SimConfig};
use crate::stats::ks_critical;
use crate::toda::{liouville_match, liouville_refl_standard, refl_coeff_mc, refl_table, TodaParams};
use crate::whittaker::{expansion_table, whittaker_mc_many};

#[derive(Debug, Parser)]
#[command(name = "weylchamber", version, about = "Weyl-chamber diffusions, Whittaker functions and Toda reflection coefficients")]
pub struct Cli {
    /// Base seed; outputs are identical for identical spec and seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Read the whole experiment (command, parameters, seed, format) from a JSON file.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Output file (default stdout).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// A complete, serializable experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Simple roots, coroots, (co)weights, positive roots and Weyl vectors.
    Roots(SystemArgs),
    /// Weyl group table: word, length, signature, matrix.
    Weyl(SystemArgs),
    /// Minimum-law survival on a grid, exact against Monte Carlo.
    Minlaw(MinlawArgs),
    /// Welded sampler against direct drifted BM, KS per wall coordinate.
    Decompose(DecomposeArgs),
    /// Killed kernel on a grid of end points, with the survival probability.
    Kernel(KernelArgs),
    /// Hitting density along each wall, wall masses and exit-wall probabilities.
    Hitting(HittingArgs),
    /// Whittaker function: Monte Carlo, series and asymptotic expansion along a ray.
    Whittaker(WhittakerArgs),
    /// Reflection-coefficient table with identity checks.
    Refl(ReflArgs),
    /// Chaos statistics: masses, covariance probe, tails, vertex coefficients.
    Gmc(GmcArgs),
    /// Run the acceptance suite.
    Acceptance(AcceptanceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Roots(_) => "roots",
            Command::Weyl(_) => "weyl",
            Command::Minlaw(_) => "minlaw",
            Command::Decompose(_) => "decompose",
            Command::Kernel(_) => "kernel",
            Command::Hitting(_) => "hitting",
            Command::Whittaker(_) => "whittaker",
            Command::Refl(_) => "refl",
            Command::Gmc(_) => "gmc",
            Command::Acceptance(_) => "acceptance",
        }
    }
}

/// Defaults for `--spec` files come from the flag defaults.
macro_rules! flag_defaults {
    ($($t:ident => $name:literal),* $(,)?) => {
        $(impl Default for $t {
            fn default() -> Self {
                #[derive(Parser)]
                struct Wrap {
                    #[command(flatten)]
                    inner: $t,
                }
                Wrap::parse_from([$name]).inner
            }
        })*
    };
}

flag_defaults!(
    SystemArgs => "roots",
    MinlawArgs => "minlaw",
    DecomposeArgs => "decompose",
    KernelArgs => "kernel",
    HittingArgs => "hitting",
    WhittakerArgs => "whittaker",
    ReflArgs => "refl",
    GmcArgs => "gmc",
    AcceptanceArgs => "acceptance",
);

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemArgs {
    /// A1, A2, A1xA1, B2, G2, dihedral(n) or cartan(2,-1;-1,2)
    #[arg(long, default_value = "A2")]
    pub system: RootKind,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftArgs {
    #[arg(long, default_value = "A2")]
    pub system: RootKind,
    /// Drift in simple-root coefficients, comma separated, or `rho`.
    #[arg(long, default_value = "rho", allow_hyphen_values = true)]
    pub nu: String,
}

impl Default for DriftArgs {
    fn default() -> Self {
        DriftArgs { system: RootKind::A2, nu: "rho".into() }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct MinlawArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    /// Lower bounds on <M, e_i>, one comma-separated point per flag; default is a grid.
    #[arg(long, allow_hyphen_values = true)]
    pub m: Vec<String>,
    /// Monte Carlo samples (0 disables the comparison).
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_max: f64,
    /// Comparison times, comma separated.
    #[arg(long, default_value = "0.5,1,2")]
    pub times: String,
    #[arg(long, default_value_t = false)]
    pub no_bridge: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    /// Start point as wall distances <x, e_i>.
    #[arg(long, default_value = "0.6,0.4")]
    pub x: String,
    /// Killing level as wall coordinates <m, e_i> (at most 0 each).
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Grid points per wall coordinate.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 2.0)]
    pub extent: f64,
    /// Monte Carlo samples for the survival probability (0 disables).
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct HittingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    /// Start point as wall distances.
    #[arg(long, default_value = "0.8,1.3")]
    pub x: String,
    /// Shift y as wall distances (each below the start point's).
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub y: String,
    /// Times for the density grid, comma separated.
    #[arg(long, default_value = "0.25,0.5,1,2")]
    pub times: String,
    /// Points per wall for the density grid.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 3.0)]
    pub extent: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct WhittakerArgs {
    #[arg(long, default_value = "A2")]
    pub system: RootKind,
    /// Spectral parameter as coroot pairings <mu, e_i^vee>.
    #[arg(long, default_value = "0.31,0.17")]
    pub mu: String,
    /// Direction as wall distances.
    #[arg(long, default_value = "1,2")]
    pub ray: String,
    #[arg(long, default_value = "0.5,1,2,4,6")]
    pub scales: String,
    /// Monte Carlo samples per point (0 disables).
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TodaArgs {
    #[arg(long, default_value = "A1")]
    pub system: RootKind,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Cosmological constants, comma separated; one value is broadcast.
    #[arg(long, default_value = "1")]
    pub mu: String,
    /// alpha = Q + shift * (e_1 + ... + e_r).
    #[arg(long, default_value_t = -0.4, allow_hyphen_values = true)]
    pub alpha_shift: f64,
    /// Explicit alpha - Q as wall coordinates <alpha - Q, e_i>; overrides the shift.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
}

impl Default for TodaArgs {
    fn default() -> Self {
        TodaArgs { system: RootKind::A1, gamma: 1.0, mu: "1".into(), alpha_shift: -0.4, alpha: None }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ReflArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub toda: TodaArgs,
    /// Monte Carlo samples for the simple reflections (0 disables).
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 64)]
    pub n_modes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GmcTask {
    /// E[I_i] against its closed form.
    Mass,
    /// Mode-truncated lateral covariance against the exact kernel.
    Probe,
    /// Rank-one tail slope by importance sampling.
    Tail,
    /// Vertex-operator coefficients against R_{s_i}.
    Vertex,
    /// Correlation of the circle-average weights (rank >= 2).
    Correlation,
    /// Joint tail of all I_i (plain Monte Carlo).
    Joint,
    /// Sampled lateral field slices.
    Field,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GmcArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub toda: TodaArgs,
    #[arg(long, value_enum, default_value = "mass")]
    pub task: GmcTask,
    #[arg(long, default_value_t = 0)]
    pub wall: usize,
    #[arg(long, default_value_t = 64)]
    pub n_modes: usize,
    #[arg(long, default_value_t = 256)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Lowest tail threshold (tail task).
    #[arg(long, default_value_t = 1e3)]
    pub u_lo: f64,
    #[arg(long, default_value_t = 1.5)]
    pub decades: f64,
    /// Thresholds (joint task) or lambdas (vertex task), comma separated.
    #[arg(long)]
    pub levels: Option<String>,
    /// Radial time for the correlation task, or number of slices for the field task.
    #[arg(long, default_value_t = 0.5)]
    pub time: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AcceptanceArgs {
    /// Criteria to run, comma separated (default all).
    #[arg(long, default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub criteria: String,
}

/// Outcome of a run: the table plus whether it counts as an acceptance failure.
pub struct Outcome {
    pub table: Table,
    pub failed: bool,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::precondition(format!("cannot parse '{t}' as a number in '{s}'"))))
        .collect()
}

fn parse_rank(s: &str, rank: usize, what: &str) -> Result<Vec<f64>> {
    let v = parse_list(s)?;
    match v.len() {
        1 => Ok(vec![v[0]; rank]),
        n if n == rank => Ok(v),
        n => Err(Error::precondition(format!("{what} needs {rank} components, got {n}"))),
    }
}

fn drift(a: &DriftArgs) -> Result<DriftSpec> {
    let rs = RootSystem::build(a.system.clone())?;
    let nu = if a.nu.trim().eq_ignore_ascii_case("rho") {
        rs.rho.clone()
    } else {
        rs.from_root_coefficients(&parse_rank(&a.nu, rs.rank, "nu")?)
    };
    DriftSpec::new(rs, nu)
}

fn vec_cells(v: &[f64], width: usize) -> Vec<String> {
    (0..width).map(|k| v.get(k).map(|x| x.to_string()).unwrap_or_default()).collect()
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn table_with(fixed: &[&str], prefix: &str, n: usize, tail: &[&str]) -> Table {
    let mut headers: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    headers.extend(numbered(prefix, n));
    headers.extend(tail.iter().map(|s| s.to_string()));
    Table { headers, rows: Vec::new() }
}

fn toda(a: &TodaArgs) -> Result<(TodaParams, Vector)> {
    let rs = RootSystem::build(a.system.clone())?;
    let mu = parse_rank(&a.mu, rs.rank, "mu")?;
    let tp = TodaParams::new(rs, a.gamma, mu)?;
    let shift = match &a.alpha {
        Some(s) => tp.rs.from_pairings(&parse_rank(s, tp.rs.rank, "alpha")?),
        None => scale(&tp.rs.simple_roots.iter().fold(vec![0.0; tp.rs.rank], |acc, e| add(&acc, e)), a.alpha_shift),
    };
    let alpha = add(&tp.q, &shift);
    Ok((tp, alpha))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Execute one experiment.
pub fn execute(spec: &ExperimentSpec) -> Result<Outcome> {
    let seed = spec.seed;
    let mut failed = false;
    let table = match &spec.command {
        Command::Roots(a) => {
            let rs = RootSystem::build(a.system.clone())?;
            let mut t = table_with(&["quantity", "index"], "x", rs.rank, &[]);
            let mut put = |name: &str, vs: &[Vector]| {
                for (i, v) in vs.iter().enumerate() {
                    let mut row = vec![name.to_string(), (i + 1).to_string()];
                    row.extend(vec_cells(v, rs.rank));
                    t.rows.push(row);
                }
            };
            put("simple_root", &rs.simple_roots);
            put("coroot", &rs.coroots);
            put("weight", &rs.weights);
            put("coweight", &rs.coweights);
            put("positive_root", &rs.positive_roots);
            put("rho", std::slice::from_ref(&rs.rho));
            put("rho_vee", std::slice::from_ref(&rs.rho_vee));
            put("cartan_row", &rs.cartan);
            t
        }
        Command::Weyl(a) => {
            let rs = RootSystem::build(a.system.clone())?;
            let g = rs.weyl();
            let r = rs.rank;
            let mut t = table_with(&["index", "word", "length", "signature"], "m", r * r, &[]);
            for (k, el) in g.elements.iter().enumerate() {
                let mut row = vec![k.to_string(), el.label(), el.length.to_string(), el.signature.to_string()];
                row.extend(el.matrix.iter().flatten().map(|x| x.to_string()));
                t.rows.push(row);
            }
            t
        }
        Command::Minlaw(a) => {
            let d = drift(&a.drift)?;
            let r = d.rank();
            let points: Vec<Vec<f64>> = if a.m.is_empty() {
                let grid = [-0.25, -0.6, -1.2];
                match r {
                    1 => grid.iter().map(|&m| vec![m]).collect(),
                    2 => grid.iter().flat_map(|&a| grid.iter().map(move |&b| vec![a, b])).collect(),
                    _ => grid.iter().map(|&m| vec![m; r]).collect(),
                }
            } else {
                a.m.iter().map(|s| parse_rank(s, r, "m")).collect::<Result<_>>()?
            };
            let draws: Vec<Vector> = if a.samples > 0 {
                let sampler = MinimumSampler::new(&d)?;
                map_samples(seed, a.samples, |rng, _| d.rs.pairings(&sampler.sample(rng)))
            } else {
                Vec::new()
            };
            let mut t = table_with(&[], "m", r, &["exact", "mc", "stderr", "z"]);
            for m in points {
                let exact = d.min_law_survival(&m);
                let mut row = vec_cells(&m, r);
                row.push(exact.to_string());
                if draws.is_empty() {
                    row.extend([String::new(), String::new(), String::new()]);
                } else {
                    let hits: Vec<f64> =
                        draws.iter().map(|p| p.iter().zip(&m).all(|(x, lo)| x >= lo) as u8 as f64).collect();
                    let e = summarize(&hits, seed);
                    row.extend([e.mean.to_string(), e.stderr.to_string(), e.z_against(exact).to_string()]);
                }
                t.rows.push(row);
            }
            t
        }
        Command::Decompose(a) => {
            let d = drift(&a.drift)?;
            let cfg = SimConfig {
                dt: a.dt,
                t_max: a.t_max,
                n_samples: a.samples,
                seed,
                bridge_correction: !a.no_bridge,
                ..Default::default()
            };
            let times = parse_list(&a.times)?;
            let rep = decomposition_report(&d, &cfg, &times)?;
            let crit = ks_critical(a.samples, a.samples, 0.01);
            let mut t = Table::new(&["quantity", "t", "coordinate", "value", "reference"]);
            for (time, j, ks) in rep.ks {
                t.push(["ks".to_string(), time.to_string(), (j + 1).to_string(), ks.to_string(), crit.to_string()]);
            }
            t.push(["infimum_fraction".to_string(), String::new(), String::new(), rep.infimum_fraction.to_string(), "0.99".into()]);
            t.push(["truncated".to_string(), String::new(), String::new(), rep.truncated.to_string(), "0".into()]);
            t
        }
        Command::Kernel(a) => {
            let d = drift(&a.drift)?;
            let r = d.rank();
            let x = d.rs.from_pairings(&parse_rank(&a.x, r, "x")?);
            let m = match &a.m {
                Some(s) => d.rs.from_pairings(&parse_rank(s, r, "m")?),
                None => vec![0.0; r],
            };
            let mp = d.rs.pairings(&m);
            if a.grid == 0 {
                return Err(Error::precondition("grid needs at least one point"));
            }
            let step = a.extent / a.grid as f64;
            let mut t = table_with(&["quantity"], "y", r, &["value", "stderr"]);
            let mut idx = vec![0usize; r];
            loop {
                let yp: Vec<f64> = idx.iter().zip(&mp).map(|(&k, lo)| lo + (k as f64 + 0.5) * step).collect();
                let y = d.rs.from_pairings(&yp);
                let mut row = vec!["kernel".to_string()];
                row.extend(vec_cells(&yp, r));
                row.push(d.killed_kernel(&m, a.t, &x, &y)?.to_string());
                row.push(String::new());
                t.rows.push(row);
                let mut k = 0;
                while k < r {
                    idx[k] += 1;
                    if idx[k] < a.grid {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == r {
                    break;
                }
            }
            let surv = d.survival_probability(&m, a.t, &x)?;
            let mut row = vec!["survival".to_string()];
            row.extend(vec![String::new(); r]);
            row.extend([surv.to_string(), String::new()]);
            t.rows.push(row);
            if a.samples > 0 {
                let cfg = SimConfig { dt: 1e-3, n_samples: a.samples, seed, ..Default::default() };
                let e = survival_mc(&d, &m, &x, a.t, &cfg)?;
                let mut row = vec!["survival_mc".to_string()];
                row.extend(vec![String::new(); r]);
                row.extend([e.mean.to_string(), e.stderr.to_string()]);
                t.rows.push(row);
            }
            t
        }
        Command::Hitting(a) => {
            let d = drift(&a.drift)?;
            let r = d.rank();
            let x = d.rs.from_pairings(&parse_rank(&a.x, r, "x")?);
            let y = d.rs.from_pairings(&parse_rank(&a.y, r, "y")?);
            let mut t = Table::new(&["quantity", "wall", "t", "position", "value"]);
            let e = |v: f64| v.to_string();
            for i in 0..r {
                let dir = if r == 1 { None } else { Some(d.wall_direction(i)?) };
                for &time in &parse_list(&a.times)? {
                    for k in 0..a.grid {
                        let s = (k as f64 + 0.5) * a.extent / a.grid.max(1) as f64;
                        let z = match &dir {
                            Some(w) => add(&y, &scale(w, s)),
                            None => y.clone(),
                        };
                        let v = d.hitting_density(&x, &y, i, time, &z)?;
                        t.push(["density".to_string(), (i + 1).to_string(), e(time), e(s), e(v)]);
                        if dir.is_none() {
                            break;
                        }
                    }
                }
            }
            for i in 0..r {
                t.push(["wall_mass".to_string(), (i + 1).to_string(), String::new(), String::new(), e(d.wall_mass(&x, &y, i)?)]);
            }
            t.push(["total_mass".to_string(), String::new(), String::new(), String::new(), e(d.total_hitting_mass(&x, &y)?)]);
            for i in 0..r {
                let p = d.exit_wall_prob(&x, i)?;
                t.push(["exit_prob".to_string(), (i + 1).to_string(), String::new(), String::new(), e(p.exact)]);
                t.push(["exit_prob_asymptotic".to_string(), (i + 1).to_string(), String::new(), p.element.clone(), e(p.asymptotic)]);
            }
            t
        }
        Command::Whittaker(a) => {
            let rs = RootSystem::build(a.system.clone())?;
            let k = parse_rank(&a.mu, rs.rank, "mu")?;
            let pairs: Vec<f64> = k.iter().enumerate().map(|(i, v)| v * rs.norm2_root(i) / 2.0).collect();
            let mu = rs.from_pairings(&pairs);
            let ray = rs.from_pairings(&parse_rank(&a.ray, rs.rank, "ray")?);
            let scales = parse_list(&a.scales)?;
            let rows = expansion_table(&rs, &mu, &ray, &scales)?;
            let mc = if a.samples > 0 {
                let xs: Vec<Vector> = scales.iter().map(|&s| scale(&ray, s)).collect();
                let cfg = SimConfig { dt: a.dt, t_max: 1e4, n_samples: a.samples, seed, ..Default::default() };
                Some(whittaker_mc_many(&rs, &mu, &xs, &cfg)?)
            } else {
                None
            };
            let mut t = Table::new(&["scale", "mc", "stderr", "series", "asymptotic", "residual", "last_term"]);
            for (j, row) in rows.iter().enumerate() {
                let (m, s) = match &mc {
                    Some(v) => (v[j].mean.to_string(), v[j].stderr.to_string()),
                    None => (String::new(), String::new()),
                };
                t.push([
                    row.scale.to_string(),
                    m,
                    s,
                    row.exact.to_string(),
                    row.asymptotic.to_string(),
                    row.residual.to_string(),
                    row.last_term.to_string(),
                ]);
            }
            t
        }
        Command::Refl(a) => {
            let (tp, alpha) = toda(&a.toda)?;
            let g = tp.rs.weyl();
            let rows = refl_table(&tp, &alpha)?;
            let mut t = Table::new(&[
                "element",
                "covered",
                "refl",
                "refl_product",
                "unit_volume",
                "liouville",
                "dual_residual",
                "cocycle_residual",
                "mc",
                "mc_stderr",
            ]);
            for (s, row) in rows.iter().enumerate() {
                let simple = (g.elements[s].length == 1).then(|| g.elements[s].reduced_word[0]);
                let liouville = simple.and_then(|i| {
                    let m = liouville_match(&tp, i, &alpha);
                    let arg = crate::linalg::dot(&alpha, &tp.rs.simple_roots[i]) / 2f64.sqrt();
                    liouville_refl_standard(m.gamma_standard, tp.mu[i], arg).ok()
                });
                let (mc, mc_err) = match simple {
                    Some(i) if a.samples > 0 => {
                        let cfg = GmcConfig { gamma: tp.gamma, n_modes: a.n_modes, n_theta: 4 * a.n_modes, t_max: 500.0, dt: 5e-3, n_samples: a.samples, seed };
                        let rep = refl_coeff_mc(&tp, i, &alpha, &cfg)?;
                        (Some(rep.estimate.mean), Some(rep.estimate.stderr))
                    }
                    _ => (None, None),
                };
                t.push([
                    row.element.clone(),
                    row.covered.to_string(),
                    row.refl.to_string(),
                    opt(row.refl_product),
                    opt(row.unit_volume),
                    opt(liouville),
                    opt(row.dual_residual),
                    opt(row.cocycle_residual),
                    opt(mc),
                    opt(mc_err),
                ]);
            }
            t
        }
        Command::Gmc(a) => gmc_table(a, seed)?,
        Command::Acceptance(a) => {
            let ids: Vec<u8> = a
                .criteria
                .split(',')
                .map(|s| s.trim().parse::<u8>().map_err(|_| Error::precondition(format!("bad criterion id '{s}'"))))
                .collect::<Result<_>>()?;
            let reports = run_all(&ids, seed);
            let mut t = Table::new(&["criterion", "name", "passed", "seconds", "budget_seconds", "details"]);
            for r in &reports {
                eprintln!("{r}");
                for d in &r.details {
                    eprintln!("    {d}");
                }
                failed |= !r.passed;
                t.push([
                    r.id.to_string(),
                    r.name.to_string(),
                    r.passed.to_string(),
                    format!("{:.3}", r.seconds),
                    r.budget_seconds.to_string(),
                    r.details.join("; "),
                ]);
            }
            t
        }
    };
    Ok(Outcome { table, failed })
}

fn gmc_table(a: &GmcArgs, seed: u64) -> Result<Table> {
    let (tp, alpha) = toda(&a.toda)?;
    let rs = &tp.rs;
    let cfg = GmcConfig {
        gamma: tp.gamma,
        n_modes: a.n_modes,
        n_theta: a.n_theta,
        t_max: a.t_max,
        dt: a.dt,
        n_samples: a.samples,
        seed,
    };
    cfg.validate()?;
    if a.wall >= rs.rank {
        return Err(Error::precondition(format!("wall index {} out of range for rank {}", a.wall, rs.rank)));
    }
    let s = |v: f64| v.to_string();
    let mut t = Table::new(&["quantity", "level", "value", "stderr", "reference"]);
    match a.task {
        GmcTask::Mass => {
            for i in 0..rs.rank {
                let e = estimate_i(rs, &alpha, i, &cfg)?;
                t.push([format!("mass_{}", i + 1), String::new(), s(e.mean), s(e.stderr), s(expected_i(rs, &alpha, i, tp.gamma)?)]);
            }
        }
        GmcTask::Probe => {
            t = Table::new(&["t1", "theta1", "t2", "theta2", "model", "exact", "rel_error"]);
            for p in covariance_probe(a.n_modes) {
                t.push([p.t1, p.theta1, p.t2, p.theta2, p.model, p.exact, p.rel_error].map(s));
            }
        }
        GmcTask::Tail => {
            let f = tail_slope(rs, &alpha, a.wall, a.u_lo, a.decades, &cfg)?;
            for ((u, p), e) in f.thresholds.iter().zip(&f.probabilities).zip(&f.stderrs) {
                t.push(["tail".to_string(), s(*u), s(*p), s(*e), String::new()]);
            }
            t.push(["slope".to_string(), String::new(), s(f.fit.slope), s(f.fit.slope_stderr), s(-f.exponent)]);
            let g = rs.weyl().from_word(&[a.wall]);
            let rbar = crate::toda::unit_volume_refl(&tp, g, &alpha).ok();
            t.push(["constant".to_string(), String::new(), s(f.constant), String::new(), opt(rbar)]);
        }
        GmcTask::Vertex => {
            let lambdas = parse_list(a.levels.as_deref().unwrap_or("1e-3,1e-4,1e-5,1e-6,1e-7"))?;
            let g = rs.weyl().from_word(&[a.wall]);
            let unit = TodaParams::new(rs.clone(), tp.gamma, vec![1.0; rs.rank])?;
            let r = crate::toda::refl_coeff(&unit, g, &alpha)?;
            for v in vertex_coefficients(rs, &alpha, a.wall, &lambdas, &cfg)? {
                t.push(["vertex".to_string(), s(v.lambda), s(v.coefficient.mean), s(v.coefficient.stderr), s(r)]);
            }
        }
        GmcTask::Correlation => {
            let c = z_correlation(rs, &cfg, a.time)?;
            t.push(["lateral_correlation".to_string(), s(a.time), s(c.lateral), s(c.lateral_stderr), String::new()]);
            t.push(["full_correlation".to_string(), s(c.radius_time), s(c.full), s(c.full_stderr), String::new()]);
            t.push([
                "product_moment".to_string(),
                s(a.time),
                s(c.product_moment.mean),
                s(c.product_moment.stderr),
                s(c.product_moment_exact),
            ]);
        }
        GmcTask::Joint => {
            let levels = parse_list(a.levels.as_deref().unwrap_or("3,10,30"))?;
            for (u, e) in levels.iter().zip(joint_tail(rs, &alpha, &levels, &cfg)?) {
                t.push(["joint_tail".to_string(), s(*u), s(e.mean), s(e.stderr), String::new()]);
            }
        }
        GmcTask::Field => {
            let f = sample_angular_field(&cfg, rs.rank, a.time.max(1.0) as usize)?;
            let mut headers = vec!["t".to_string(), "theta".to_string()];
            headers.extend(numbered("y", rs.rank));
            t = Table { headers, rows: f.to_csv_rows() };
        }
    }
    Ok(t)
}

fn resolve(cli: Cli) -> Result<(ExperimentSpec, Option<PathBuf>)> {
    let mut spec = match (&cli.spec, cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ExperimentSpec>(&text)?
        }
        (Some(_), Some(_)) => return Err(Error::precondition("give either --spec or a subcommand, not both")),
        (None, Some(command)) => ExperimentSpec { command, seed: 0, format: Format::Csv },
        (None, None) => return Err(Error::precondition("no subcommand given; see --help")),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(f) = cli.format {
        spec.format = f;
    }
    Ok((spec, cli.output))
}

/// Parse arguments, run, write the artifact; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        set_threads(n);
    }
    match resolve(cli).and_then(|(spec, out)| {
        let outcome = execute(&spec)?;
        let header: Value = serde_json::to_value(&spec)?;
        match out {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p)?);
                write_table(&mut w, &header, spec.seed, spec.format, &outcome.table)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                write_table(&mut w, &header, spec.seed, spec.format, &outcome.table)?;
            }
        }
        Ok(outcome.failed)
    }) {
        Ok(false) => 0,
        Ok(true) => 3,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
