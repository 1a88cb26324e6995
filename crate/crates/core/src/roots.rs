//! Root systems of rank <= 3 and their finite reflection groups.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, determinant, dot, identity, inverse, mat_mul, mat_vec, max_abs_diff, norm2,
    transpose, Matrix, Vector,
};

/// Matrices closer than this are the same group element.
pub const DEDUP_TOL: f64 = 1e-10;
/// Generation aborts beyond this group order.
pub const ORDER_CAP: usize = 10_000;
const MAX_RANK: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum RootKind {
    A1,
    A2,
    A1xA1,
    B2,
    G2,
    Dihedral(u32),
    Cartan(Matrix),
}

impl fmt::Display for RootKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootKind::A1 => write!(f, "A1"),
            RootKind::A2 => write!(f, "A2"),
            RootKind::A1xA1 => write!(f, "A1xA1"),
            RootKind::B2 => write!(f, "B2"),
            RootKind::G2 => write!(f, "G2"),
            RootKind::Dihedral(n) => write!(f, "dihedral({n})"),
            RootKind::Cartan(m) => {
                let rows: Vec<String> = m
                    .iter()
                    .map(|r| r.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "cartan({})", rows.join(";"))
            }
        }
    }
}

impl FromStr for RootKind {
    type Err = Error;

    /// Accepts `A1`, `A2`, `A1xA1`, `B2`, `G2`, `dihedral(n)` / `dihedral:n`
    /// and `cartan(2,-1;-1,2)` / `cartan:2,-1;-1,2`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        match lower.as_str() {
            "a1" => return Ok(RootKind::A1),
            "a2" => return Ok(RootKind::A2),
            "a1xa1" | "a1*a1" | "a1a1" => return Ok(RootKind::A1xA1),
            "b2" | "c2" => return Ok(RootKind::B2),
            "g2" => return Ok(RootKind::G2),
            _ => {}
        }
        let inner = |prefix: &str| -> Option<String> {
            let rest = lower.strip_prefix(prefix)?;
            let rest = rest.trim();
            if let Some(r) = rest.strip_prefix(':') {
                Some(r.trim().to_string())
            } else if rest.starts_with('(') && rest.ends_with(')') {
                Some(rest[1..rest.len() - 1].trim().to_string())
            } else {
                None
            }
        };
        if let Some(n) = inner("dihedral").or_else(|| inner("i2")) {
            let n: u32 = n
                .parse()
                .map_err(|_| Error::InvalidRootSystem(format!("bad dihedral order '{n}'")))?;
            return Ok(RootKind::Dihedral(n));
        }
        if let Some(body) = inner("cartan") {
            let rows: std::result::Result<Matrix, _> = body
                .split(';')
                .map(|r| r.split(',').map(|x| x.trim().parse::<f64>()).collect())
                .collect();
            let rows =
                rows.map_err(|_| Error::InvalidRootSystem(format!("bad cartan matrix '{body}'")))?;
            return Ok(RootKind::Cartan(rows));
        }
        Err(Error::InvalidRootSystem(format!("unknown root system '{s}'")))
    }
}

impl Serialize for RootKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RootKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An element of the reflection group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylElement {
    pub matrix: Matrix,
    /// Minimal word in the simple reflections, 0-based, leftmost acts last.
    pub reduced_word: Vec<usize>,
    pub length: usize,
    pub signature: i32,
}

impl WeylElement {
    pub fn apply(&self, x: &[f64]) -> Vector {
        mat_vec(&self.matrix, x)
    }

    pub fn sign(&self) -> f64 {
        self.signature as f64
    }

    /// Word such as `s1s2`, or `Id`.
    pub fn label(&self) -> String {
        if self.reduced_word.is_empty() {
            "Id".to_string()
        } else {
            self.reduced_word.iter().map(|i| format!("s{}", i + 1)).collect()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylGroup {
    pub elements: Vec<WeylElement>,
    /// Index of each simple reflection inside `elements`.
    pub simple: Vec<usize>,
}

impl WeylGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn find(&self, m: &Matrix) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| max_abs_diff(&e.matrix, m) < DEDUP_TOL)
    }

    /// Index of a * b.
    pub fn product(&self, a: usize, b: usize) -> usize {
        let m = mat_mul(&self.elements[a].matrix, &self.elements[b].matrix);
        self.find(&m).expect("group is closed")
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.find(&transpose(&self.elements[a].matrix))
            .expect("group is closed")
    }

    /// Element given by a word of 0-based simple indices (leftmost acts last).
    pub fn from_word(&self, word: &[usize]) -> usize {
        let mut idx = 0;
        for &i in word.iter().rev() {
            idx = self.product(self.simple[i], idx);
        }
        idx
    }

    pub fn by_label(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.label() == label)
    }

    /// All reduced words of an element, by descent recursion.
    pub fn reduced_words(&self, a: usize) -> Vec<Vec<usize>> {
        let len = self.elements[a].length;
        if len == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for (i, &si) in self.simple.iter().enumerate() {
            let b = self.product(si, a);
            if self.elements[b].length + 1 == len {
                for mut w in self.reduced_words(b) {
                    w.insert(0, i);
                    out.push(w);
                }
            }
        }
        out
    }

    /// Letters occurring in some reduced word.
    pub fn support(&self, a: usize) -> BTreeSet<usize> {
        self.reduced_words(a).into_iter().flatten().collect()
    }

    /// Index of the longest element.
    pub fn longest(&self) -> usize {
        (0..self.order())
            .max_by_key(|&i| self.elements[i].length)
            .unwrap_or(0)
    }
}

/// Where a point sits relative to the fundamental chamber.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ChamberStatus {
    Inside,
    OnWalls(Vec<usize>),
    Outside(Vec<usize>),
}

#[derive(Debug, Clone, Serialize)]
pub struct ChamberQuery {
    pub status: ChamberStatus,
    /// Pairings <x, e_i>.
    pub wall_distances: Vector,
}

/// Rank-r Euclidean root system with its cached reflection group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootSystem {
    pub kind: RootKind,
    pub rank: usize,
    pub simple_roots: Vec<Vector>,
    pub cartan: Matrix,
    #[serde(skip)]
    pub coroots: Vec<Vector>,
    #[serde(skip)]
    pub weights: Vec<Vector>,
    #[serde(skip)]
    pub coweights: Vec<Vector>,
    #[serde(skip)]
    pub positive_roots: Vec<Vector>,
    #[serde(skip)]
    pub rho: Vector,
    #[serde(skip)]
    pub rho_vee: Vector,
    #[serde(skip)]
    pub group: Option<WeylGroup>,
}

fn named_cartan(kind: &RootKind) -> Result<Matrix> {
    let two = |a: f64, b: f64| vec![vec![2.0, a], vec![b, 2.0]];
    Ok(match kind {
        RootKind::A1 => vec![vec![2.0]],
        RootKind::A2 => two(-1.0, -1.0),
        RootKind::A1xA1 => two(0.0, 0.0),
        // first root long
        RootKind::B2 => two(-1.0, -2.0),
        RootKind::G2 => two(-1.0, -3.0),
        RootKind::Dihedral(n) => match n {
            0 | 1 => {
                return Err(Error::InvalidRootSystem(format!(
                    "dihedral order must be >= 2, got {n}"
                )))
            }
            2 => two(0.0, 0.0),
            3 => two(-1.0, -1.0),
            4 => two(-1.0, -2.0),
            6 => two(-1.0, -3.0),
            _ => {
                let c = -2.0 * (std::f64::consts::PI / *n as f64).cos();
                two(c, c)
            }
        },
        RootKind::Cartan(m) => m.clone(),
    })
}

/// Squared root lengths d_i with d_i A_ij = d_j A_ji, longest per component = 2.
fn symmetrizer(a: &Matrix) -> Result<Vec<f64>> {
    let r = a.len();
    let mut d = vec![0.0; r];
    let mut seen = vec![false; r];
    for start in 0..r {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        d[start] = 1.0;
        let mut q = VecDeque::from([start]);
        while let Some(i) = q.pop_front() {
            for j in 0..r {
                if i != j && a[i][j] != 0.0 && !seen[j] {
                    d[j] = d[i] * a[i][j] / a[j][i];
                    seen[j] = true;
                    comp.push(j);
                    q.push_back(j);
                }
            }
        }
        let dmax = comp.iter().map(|&i| d[i]).fold(0.0, f64::max);
        for &i in &comp {
            d[i] *= 2.0 / dmax;
        }
    }
    for i in 0..r {
        for j in 0..r {
            if (d[i] * a[i][j] - d[j] * a[j][i]).abs() > 1e-9 {
                return Err(Error::InvalidRootSystem(
                    "cartan matrix is not symmetrizable".into(),
                ));
            }
        }
    }
    Ok(d)
}

fn validate_cartan(a: &Matrix) -> Result<()> {
    let r = a.len();
    if r == 0 || r > MAX_RANK {
        return Err(Error::InvalidRootSystem(format!(
            "rank must be between 1 and {MAX_RANK}, got {r}"
        )));
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != r {
            return Err(Error::InvalidRootSystem("cartan matrix must be square".into()));
        }
        if (row[i] - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidRootSystem(format!(
                "diagonal entry A[{i}][{i}] = {} must be 2",
                row[i]
            )));
        }
        for j in 0..r {
            if i != j {
                if row[j] > 1e-12 {
                    return Err(Error::InvalidRootSystem(format!(
                        "off-diagonal entry A[{i}][{j}] = {} must be <= 0",
                        row[j]
                    )));
                }
                if (row[j] == 0.0) != (a[j][i] == 0.0) {
                    return Err(Error::InvalidRootSystem(format!(
                        "A[{i}][{j}] and A[{j}][{i}] must vanish together"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl RootSystem {
    /// Build a named root system, longest roots of squared length 2.
    pub fn build(kind: RootKind) -> Result<Self> {
        if kind == RootKind::A2 {
            let s = std::f64::consts::SQRT_2;
            let e1 = vec![-(3.0f64).sqrt() / s, 1.0 / s];
            let e2 = vec![0.0, -s];
            return Self::from_simple_roots(kind, vec![e1, e2]);
        }
        let a = named_cartan(&kind)?;
        validate_cartan(&a)?;
        let d = symmetrizer(&a)?;
        let r = a.len();
        let gram: Matrix = (0..r)
            .map(|i| (0..r).map(|j| 0.5 * d[i] * a[i][j]).collect())
            .collect();
        let l = cholesky(&gram).ok_or_else(|| {
            Error::InvalidRootSystem("cartan matrix is not of finite type".into())
        })?;
        Self::from_simple_roots(kind, l)
    }

    /// Build from explicit simple roots, no renormalization.
    pub fn from_simple_roots(kind: RootKind, simple_roots: Vec<Vector>) -> Result<Self> {
        let r = simple_roots.len();
        if r == 0 || r > MAX_RANK || simple_roots.iter().any(|e| e.len() != r) {
            return Err(Error::InvalidRootSystem(format!(
                "need r simple roots in R^r with 1 <= r <= {MAX_RANK}"
            )));
        }
        let coroots: Vec<Vector> = simple_roots
            .iter()
            .map(|e| {
                let n = norm2(e);
                e.iter().map(|x| 2.0 * x / n).collect()
            })
            .collect();
        let cartan: Matrix = (0..r)
            .map(|i| (0..r).map(|j| dot(&coroots[i], &simple_roots[j])).collect())
            .collect();
        validate_cartan(&cartan)?;
        // coweights: rows of (E^T)^{-1}; weights: rows of (E_vee^T)^{-1}
        let coweights = inverse(&transpose(&simple_roots))
            .ok_or_else(|| Error::InvalidRootSystem("simple roots are dependent".into()))?;
        let weights = inverse(&transpose(&coroots))
            .ok_or_else(|| Error::InvalidRootSystem("coroots are dependent".into()))?;
        let mut rs = RootSystem {
            kind,
            rank: r,
            simple_roots,
            cartan,
            coroots,
            weights,
            coweights,
            positive_roots: Vec::new(),
            rho: vec![0.0; r],
            rho_vee: vec![0.0; r],
            group: None,
        };
        let group = rs.generate_weyl_group()?;
        rs.positive_roots = rs.orbit_positive_roots(&group);
        for a in &rs.positive_roots {
            let n = norm2(a);
            for k in 0..r {
                rs.rho[k] += 0.5 * a[k];
                rs.rho_vee[k] += a[k] / n;
            }
        }
        rs.group = Some(group);
        Ok(rs)
    }

    pub fn weyl(&self) -> &WeylGroup {
        self.group.as_ref().expect("group generated at construction")
    }

    pub fn norm2_root(&self, i: usize) -> f64 {
        norm2(&self.simple_roots[i])
    }

    /// e_i / |e_i|
    pub fn unit_root(&self, i: usize) -> Vector {
        let n = self.norm2_root(i).sqrt();
        self.simple_roots[i].iter().map(|x| x / n).collect()
    }

    pub fn reflection_matrix(&self, i: usize) -> Matrix {
        let e = &self.simple_roots[i];
        let n = norm2(e);
        let r = self.rank;
        (0..r)
            .map(|a| {
                (0..r)
                    .map(|b| (if a == b { 1.0 } else { 0.0 }) - 2.0 * e[a] * e[b] / n)
                    .collect()
            })
            .collect()
    }

    /// s_i x = x - <x, e_i^vee> e_i
    pub fn apply_reflection(&self, i: usize, x: &[f64]) -> Vector {
        let c = dot(x, &self.coroots[i]);
        x.iter()
            .zip(&self.simple_roots[i])
            .map(|(a, e)| a - c * e)
            .collect()
    }

    /// Breadth-first closure over left multiplication by simple reflections.
    pub fn generate_weyl_group(&self) -> Result<WeylGroup> {
        let r = self.rank;
        let refl: Vec<Matrix> = (0..r).map(|i| self.reflection_matrix(i)).collect();
        let mut elements = vec![WeylElement {
            matrix: identity(r),
            reduced_word: Vec::new(),
            length: 0,
            signature: 1,
        }];
        let mut queue = VecDeque::from([0usize]);
        while let Some(k) = queue.pop_front() {
            for (i, s) in refl.iter().enumerate() {
                let m = mat_mul(s, &elements[k].matrix);
                if elements
                    .iter()
                    .any(|e| max_abs_diff(&e.matrix, &m) < DEDUP_TOL)
                {
                    continue;
                }
                if elements.len() >= ORDER_CAP {
                    return Err(Error::GroupTooLarge(ORDER_CAP));
                }
                let mut word = vec![i];
                word.extend_from_slice(&elements[k].reduced_word);
                let length = word.len();
                elements.push(WeylElement {
                    matrix: m,
                    reduced_word: word,
                    length,
                    signature: if length % 2 == 0 { 1 } else { -1 },
                });
                queue.push_back(elements.len() - 1);
            }
        }
        let simple = (0..r)
            .map(|i| {
                elements
                    .iter()
                    .position(|e| e.reduced_word == [i])
                    .expect("simple reflection present")
            })
            .collect();
        Ok(WeylGroup { elements, simple })
    }

    fn orbit_positive_roots(&self, g: &WeylGroup) -> Vec<Vector> {
        let mut roots: Vec<Vector> = Vec::new();
        for w in &g.elements {
            for e in &self.simple_roots {
                let a = w.apply(e);
                let coeffs: Vec<f64> = self.coweights.iter().map(|c| dot(&a, c)).collect();
                if coeffs.iter().all(|&c| c > -1e-9)
                    && !roots
                        .iter()
                        .any(|b| b.iter().zip(&a).all(|(x, y)| (x - y).abs() < 1e-9))
                {
                    roots.push(a);
                }
            }
        }
        roots
    }

    /// Coefficients of a vector in the simple-root basis.
    pub fn root_coordinates(&self, x: &[f64]) -> Vector {
        self.coweights.iter().map(|c| dot(x, c)).collect()
    }

    /// Pairings <x, e_i>.
    pub fn pairings(&self, x: &[f64]) -> Vector {
        self.simple_roots.iter().map(|e| dot(x, e)).collect()
    }

    /// Vector with prescribed pairings: sum_i c_i omega_i^vee.
    pub fn from_pairings(&self, c: &[f64]) -> Vector {
        let mut x = vec![0.0; self.rank];
        for (ci, w) in c.iter().zip(&self.coweights) {
            for k in 0..self.rank {
                x[k] += ci * w[k];
            }
        }
        x
    }

    /// Vector with the given simple-root coefficients.
    pub fn from_root_coefficients(&self, c: &[f64]) -> Vector {
        let mut x = vec![0.0; self.rank];
        for (ci, e) in c.iter().zip(&self.simple_roots) {
            for k in 0..self.rank {
                x[k] += ci * e[k];
            }
        }
        x
    }

    /// Vector with the given fundamental-weight coefficients.
    pub fn from_weight_coefficients(&self, c: &[f64]) -> Vector {
        let mut x = vec![0.0; self.rank];
        for (ci, w) in c.iter().zip(&self.weights) {
            for k in 0..self.rank {
                x[k] += ci * w[k];
            }
        }
        x
    }

    pub fn chamber_query(&self, x: &[f64]) -> ChamberQuery {
        const TOL: f64 = 1e-12;
        let d = self.pairings(x);
        let neg: Vec<usize> = (0..self.rank).filter(|&i| d[i] < -TOL).collect();
        let zero: Vec<usize> = (0..self.rank).filter(|&i| d[i].abs() <= TOL).collect();
        let status = if !neg.is_empty() {
            ChamberStatus::Outside(neg)
        } else if !zero.is_empty() {
            ChamberStatus::OnWalls(zero)
        } else {
            ChamberStatus::Inside
        };
        ChamberQuery { status, wall_distances: d }
    }

    pub fn in_chamber(&self, x: &[f64]) -> bool {
        self.pairings(x).iter().all(|&p| p > 0.0)
    }

    /// Elements s with s^{-1} omega_i^vee != omega_i^vee for every i in `indices`.
    pub fn weyl_subset(&self, indices: &[usize]) -> Vec<usize> {
        let g = self.weyl();
        (0..g.order())
            .filter(|&k| {
                let inv = transpose(&g.elements[k].matrix);
                indices.iter().all(|&i| {
                    let w = &self.coweights[i];
                    let v = mat_vec(&inv, w);
                    v.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) > 1e-9
                })
            })
            .collect()
    }

    /// W_{1..r}: elements whose reduced words use every simple reflection.
    pub fn full_support_subset(&self) -> Vec<usize> {
        let all: Vec<usize> = (0..self.rank).collect();
        self.weyl_subset(&all)
    }

    /// Affine action centred at q: q + s(alpha - q).
    pub fn hat_action(&self, s: usize, alpha: &[f64], q: &[f64]) -> Vector {
        let d: Vector = alpha.iter().zip(q).map(|(a, b)| a - b).collect();
        let sd = self.weyl().elements[s].apply(&d);
        q.iter().zip(&sd).map(|(a, b)| a + b).collect()
    }

    /// Determinant check used by tests and the CLI table.
    pub fn element_determinant(&self, s: usize) -> f64 {
        determinant(&self.weyl().elements[s].matrix)
    }

    /// Serializable summary: {kind, rank, simple_roots, cartan}.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.to_string(),
            "rank": self.rank,
            "simple_roots": self.simple_roots,
            "cartan": self.cartan,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn a2_realization_matches_reference() {
        let rs = RootSystem::build(RootKind::A2).unwrap();
        let s = 2f64.sqrt();
        assert!(close(&rs.simple_roots[0], &[-(3f64).sqrt() / s, 1.0 / s], 1e-15));
        assert!(close(&rs.simple_roots[1], &[0.0, -s], 1e-15));
        assert!((dot(&rs.simple_roots[0], &rs.simple_roots[1]) + 1.0).abs() < 1e-14);
        assert_eq!(rs.positive_roots.len(), 3);
        let rho = crate::linalg::add(&rs.weights[0], &rs.weights[1]);
        assert!(close(&rs.rho, &rho, 1e-14));
    }

    #[test]
    fn a1_normalization() {
        let rs = RootSystem::build(RootKind::A1).unwrap();
        assert!((rs.norm2_root(0) - 2.0).abs() < 1e-14);
        assert!(close(&rs.weights[0], &crate::linalg::scale(&rs.simple_roots[0], 0.5), 1e-14));
    }

    #[test]
    fn group_orders() {
        let cases = [
            (RootKind::A1, 2),
            (RootKind::A2, 6),
            (RootKind::A1xA1, 4),
            (RootKind::B2, 8),
            (RootKind::G2, 12),
            (RootKind::Dihedral(4), 8),
            (RootKind::Dihedral(5), 10),
            (RootKind::Dihedral(8), 16),
            (RootKind::Cartan(vec![
                vec![2.0, -1.0, 0.0],
                vec![-1.0, 2.0, -1.0],
                vec![0.0, -1.0, 2.0],
            ]), 24),
            (RootKind::Cartan(vec![
                vec![2.0, -1.0, 0.0],
                vec![-1.0, 2.0, -2.0],
                vec![0.0, -1.0, 2.0],
            ]), 48),
        ];
        for (kind, order) in cases {
            let rs = RootSystem::build(kind.clone()).unwrap();
            assert_eq!(rs.weyl().order(), order, "{kind}");
            let total: i32 = rs.weyl().elements.iter().map(|e| e.signature).sum();
            assert_eq!(total, 0, "{kind}");
        }
    }

    #[test]
    fn invariants_hold_for_all_named_systems() {
        for kind in [
            RootKind::A1,
            RootKind::A2,
            RootKind::A1xA1,
            RootKind::B2,
            RootKind::G2,
            RootKind::Dihedral(4),
        ] {
            let rs = RootSystem::build(kind.clone()).unwrap();
            let r = rs.rank;
            let longest = rs.positive_roots.iter().map(|a| norm2(a)).fold(0.0, f64::max);
            assert!((longest - 2.0).abs() < 1e-12, "{kind}");
            for i in 0..r {
                assert!((dot(&rs.rho, &rs.coroots[i]) - 1.0).abs() < 1e-12, "{kind}");
                for j in 0..r {
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&rs.weights[i], &rs.coroots[j]) - d).abs() < 1e-12);
                    assert!((dot(&rs.coweights[i], &rs.simple_roots[j]) - d).abs() < 1e-12);
                }
            }
            for a in &rs.positive_roots {
                for c in rs.root_coordinates(a) {
                    assert!(c > -1e-9 && (c - c.round()).abs() < 1e-9, "{kind}");
                }
            }
            let g = rs.weyl();
            for (k, e) in g.elements.iter().enumerate() {
                // orthogonal
                let mt = transpose(&e.matrix);
                assert!(max_abs_diff(&mat_mul(&mt, &e.matrix), &identity(r)) < 1e-12);
                assert!((rs.element_determinant(k) - e.sign()).abs() < 1e-12);
                // word reproduces the matrix
                let mut m = identity(r);
                for &i in e.reduced_word.iter().rev() {
                    m = mat_mul(&rs.reflection_matrix(i), &m);
                }
                assert!(max_abs_diff(&m, &e.matrix) < 1e-12);
                // lengths move by one under a simple reflection
                for &si in &g.simple {
                    let l = g.elements[g.product(si, k)].length as i64;
                    assert_eq!((l - e.length as i64).abs(), 1);
                }
            }
        }
    }

    #[test]
    fn dihedral_opening_angle() {
        for n in [3u32, 4, 5, 6, 7] {
            let rs = RootSystem::build(RootKind::Dihedral(n)).unwrap();
            let w0 = &rs.coweights[0];
            let w1 = &rs.coweights[1];
            let c = dot(w0, w1) / (norm2(w0) * norm2(w1)).sqrt();
            let angle = c.acos();
            assert!((angle - std::f64::consts::PI / n as f64).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn reflection_examples() {
        let a1 = RootSystem::build(RootKind::A1).unwrap();
        let e = a1.simple_roots[0].clone();
        assert!(close(&a1.apply_reflection(0, &e), &[-e[0]], 1e-15));
        let a2 = RootSystem::build(RootKind::A2).unwrap();
        let w1 = a2.weights[0].clone();
        assert!(close(&a2.apply_reflection(1, &w1), &w1, 1e-14));
        let e1 = &a2.simple_roots[0];
        let e2 = &a2.simple_roots[1];
        let expect = crate::linalg::add(e1, e2);
        assert!(close(&a2.apply_reflection(1, e1), &expect, 1e-14));
    }

    #[test]
    fn weyl_subset_examples() {
        let a2 = RootSystem::build(RootKind::A2).unwrap();
        let g = a2.weyl();
        let mut labels: Vec<String> = a2
            .weyl_subset(&[0, 1])
            .into_iter()
            .map(|k| g.elements[k].label())
            .collect();
        labels.sort();
        // s1s2s1 may be stored as s2s1s2
        assert_eq!(labels.len(), 3);
        assert!(labels.contains(&"s1s2".to_string()));
        assert!(labels.contains(&"s2s1".to_string()));
        assert_eq!(a2.weyl_subset(&[0]).len(), 4);
        let a1 = RootSystem::build(RootKind::A1).unwrap();
        let sub = a1.weyl_subset(&[0]);
        assert_eq!(sub.len(), 1);
        assert_eq!(a1.weyl().elements[sub[0]].label(), "s1");
    }

    #[test]
    fn coweight_criterion_matches_reduced_words() {
        for kind in [
            RootKind::A1,
            RootKind::A2,
            RootKind::A1xA1,
            RootKind::B2,
            RootKind::G2,
            RootKind::Dihedral(5),
        ] {
            let rs = RootSystem::build(kind.clone()).unwrap();
            let g = rs.weyl();
            let r = rs.rank;
            for mask in 1u32..(1 << r) {
                let s: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
                let by_coweight: BTreeSet<usize> = rs.weyl_subset(&s).into_iter().collect();
                let by_words: BTreeSet<usize> = (0..g.order())
                    .filter(|&k| {
                        let sup = g.support(k);
                        s.iter().all(|i| sup.contains(i))
                    })
                    .collect();
                assert_eq!(by_coweight, by_words, "{kind} S={s:?}");
            }
        }
    }

    #[test]
    fn hat_action_examples() {
        let a1 = RootSystem::build(RootKind::A1).unwrap();
        let q = vec![1.7];
        let e = &a1.simple_roots[0];
        let alpha = vec![q[0] + 0.3 * e[0]];
        let s1 = a1.weyl().simple[0];
        let out = a1.hat_action(s1, &alpha, &q);
        assert!((out[0] - (q[0] - 0.3 * e[0])).abs() < 1e-14);
        assert!((a1.hat_action(0, &alpha, &q)[0] - alpha[0]).abs() < 1e-15);
        assert!((a1.hat_action(s1, &q, &q)[0] - q[0]).abs() < 1e-15);
    }

    #[test]
    fn chamber_query_examples() {
        let a2 = RootSystem::build(RootKind::A2).unwrap();
        assert_eq!(a2.chamber_query(&a2.rho).status, ChamberStatus::Inside);
        assert_eq!(
            a2.chamber_query(&[0.0, 0.0]).status,
            ChamberStatus::OnWalls(vec![0, 1])
        );
        let x = crate::linalg::sub(&a2.weights[0], &a2.weights[1]);
        assert_eq!(a2.chamber_query(&x).status, ChamberStatus::Outside(vec![1]));
    }

    #[test]
    fn invalid_cartan_rejected() {
        let bad = [
            vec![vec![2.0, 1.0], vec![-1.0, 2.0]],
            vec![vec![2.0, -1.0], vec![0.0, 2.0]],
            vec![vec![2.0, -2.0], vec![-2.0, 2.0]],
            vec![vec![3.0]],
        ];
        for m in bad {
            assert!(RootSystem::build(RootKind::Cartan(m)).is_err());
        }
    }

    #[test]
    fn kind_parsing_round_trip() {
        for s in ["A1", "A2", "A1xA1", "B2", "G2", "dihedral(5)", "cartan(2,-1;-1,2)"] {
            let k: RootKind = s.parse().unwrap();
            let k2: RootKind = k.to_string().parse().unwrap();
            assert_eq!(k, k2);
        }
        assert_eq!("dihedral:4".parse::<RootKind>().unwrap(), RootKind::Dihedral(4));
    }

    proptest! {
        #[test]
        fn reflections_are_involutions_fixing_walls(
            x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, i in 0usize..2
        ) {
            let rs = RootSystem::build(RootKind::G2).unwrap();
            let x = vec![x0, x1];
            let y = rs.apply_reflection(i, &rs.apply_reflection(i, &x));
            prop_assert!(close(&x, &y, 1e-12));
            // points on the wall are fixed
            let c = dot(&x, &rs.simple_roots[i]) / rs.norm2_root(i);
            let on_wall = crate::linalg::axpy(&x, -c, &rs.simple_roots[i]);
            prop_assert!(close(&rs.apply_reflection(i, &on_wall), &on_wall, 1e-12));
        }

        #[test]
        fn group_is_closed_under_products(a in 0usize..12, b in 0usize..12) {
            let rs = RootSystem::build(RootKind::G2).unwrap();
            let g = rs.weyl();
            let ab = g.product(a, b);
            let inv = g.inverse(ab);
            prop_assert_eq!(g.product(ab, inv), 0);
            let s = g.elements[a].signature * g.elements[b].signature;
            prop_assert_eq!(g.elements[ab].signature, s);
        }
    }
}
