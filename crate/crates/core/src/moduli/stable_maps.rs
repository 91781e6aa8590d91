//! Bookkeeping for super stable maps: node matching, stability and the
//! component-field expansion of a map at a point.
//!
//! Homology classes enter only through an integer degree `d_α` per vertex.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::NodalCurve;
use crate::grassmann::{Complex, GrassmannError, GrassmannNumber, Parity};
use crate::trees::LabeledTree;

pub const NODE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("psi^{0} must be odd")]
    PsiParity(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

/// A nodal curve with per-vertex degrees and the values of the maps at the
/// nodes (`node_values[(α, β)] = Φ_α(z_{αβ})`).
#[derive(Debug, Clone, PartialEq)]
pub struct StableMapSkeleton {
    pub curve: NodalCurve,
    pub degrees: Vec<u64>,
    pub node_values: BTreeMap<(usize, usize), Vec<GrassmannNumber>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapViolation {
    /// A constant component with fewer than three special points.
    Stability { vertex: usize, special_points: usize },
    /// `Φ_α(z_{αβ}) ≠ Φ_β(z_{βα})`.
    Nodes { from: usize, to: usize, residual: f64 },
    MissingNodeValue { from: usize, to: usize },
    DegreeCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableMapReport {
    pub passed: bool,
    pub violations: Vec<MapViolation>,
}

/// Checks the node-matching and stability conditions.
pub fn check_stable_map(s: &StableMapSkeleton) -> StableMapReport {
    let tree = s.curve.tree();
    let mut violations = Vec::new();
    if s.degrees.len() != tree.num_vertices() {
        violations.push(MapViolation::DegreeCount { expected: tree.num_vertices(), found: s.degrees.len() });
    }
    for (v, &d) in s.degrees.iter().enumerate().take(tree.num_vertices()) {
        let special = tree.special_count(v);
        if d == 0 && special < 3 {
            violations.push(MapViolation::Stability { vertex: v, special_points: special });
        }
    }
    for &(u, v) in tree.edges() {
        match (s.node_values.get(&(u, v)), s.node_values.get(&(v, u))) {
            (Some(a), Some(b)) => {
                let residual = if a.len() != b.len() {
                    f64::INFINITY
                } else {
                    a.iter().zip(b).map(|(x, y)| x.checked_sub(y).map(|d| d.norm_inf()).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
                };
                if residual > NODE_TOLERANCE {
                    violations.push(MapViolation::Nodes { from: u, to: v, residual });
                }
            }
            (None, _) => violations.push(MapViolation::MissingNodeValue { from: u, to: v }),
            (_, None) => violations.push(MapViolation::MissingNodeValue { from: v, to: u }),
        }
    }
    StableMapReport { passed: violations.is_empty(), violations }
}

/// Coordinates of `Φ ∘ p` from the component fields at `p`:
/// `φ^a + ψ^a + ψ^b ψ^c Γ^a_{bc}`, where `psi[a]` is the odd pairing
/// `⟨s, ψ^a⟩` and `christoffel[a][b][c] = Γ^a_{bc}` at `φ`.
pub fn eval_component_fields(
    phi: &[Complex],
    psi: &[GrassmannNumber],
    christoffel: &[Vec<Vec<Complex>>],
) -> Result<Vec<GrassmannNumber>, FieldError> {
    let n = phi.len();
    if psi.len() != n {
        return Err(FieldError::Dimension(format!("{} psi values for {n} coordinates", psi.len())));
    }
    if christoffel.len() != n || christoffel.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
        return Err(FieldError::Dimension(format!("Christoffel table must be {n}×{n}×{n}")));
    }
    let s = psi.first().map(|p| p.num_generators()).unwrap_or(0);
    for (a, p) in psi.iter().enumerate() {
        if p.num_generators() != s {
            return Err(GrassmannError::ContextMismatch { left: s, right: p.num_generators() }.into());
        }
        if p.expect_parity(Parity::Odd).is_err() {
            return Err(FieldError::PsiParity(a));
        }
    }
    let mut products = vec![vec![GrassmannNumber::zero(s); n]; n];
    for b in 0..n {
        for c in 0..n {
            products[b][c] = &psi[b] * &psi[c];
        }
    }
    Ok((0..n)
        .map(|a| {
            let mut out = GrassmannNumber::scalar(s, phi[a]) + &psi[a];
            for b in 0..n {
                for c in 0..n {
                    out += &products[b][c].scale(christoffel[a][b][c]);
                }
            }
            out
        })
        .collect())
}

/// All degree maps `α ↦ d_α` with `Σ d_α = d` such that every vertex with
/// `d_α = 0` has at least three special points; in lexicographic order.
pub fn admissible_partitions(t: &LabeledTree, d: u64) -> Vec<Vec<u64>> {
    fn walk(t: &LabeledTree, v: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        let n = t.num_vertices();
        if v == n {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let low = if t.special_count(v) >= 3 { 0 } else { 1 };
        for dv in low..=left {
            cur.push(dv);
            walk(t, v + 1, left - dv, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(t, 0, d, &mut Vec::new(), &mut out);
    out
}

#[derive(Serialize, Deserialize)]
struct SkeletonJson {
    curve: NodalCurve,
    degrees: Vec<u64>,
    node_values: BTreeMap<String, Vec<GrassmannNumber>>,
}

impl Serialize for StableMapSkeleton {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SkeletonJson {
            curve: self.curve.clone(),
            degrees: self.degrees.clone(),
            node_values: self.node_values.iter().map(|(&(a, b), v)| (format!("{a}-{b}"), v.clone())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StableMapSkeleton {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = SkeletonJson::deserialize(deserializer)?;
        let mut node_values = BTreeMap::new();
        for (k, v) in raw.node_values {
            let key = super::parse_node_key(&k).map_err(serde::de::Error::custom)?;
            node_values.insert(key, v);
        }
        Ok(StableMapSkeleton { curve: raw.curve, degrees: raw.degrees, node_values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superconf::ProjectivePoint;

    fn eta(s: usize, i: usize) -> GrassmannNumber {
        GrassmannNumber::generator(s, i).unwrap()
    }

    fn pt(s: usize, z: f64) -> ProjectivePoint {
        ProjectivePoint::from_chart1(&GrassmannNumber::real(s, z), &GrassmannNumber::zero(s)).unwrap()
    }

    /// Two vertices, vertex 0 with labels 1, 2 and vertex 1 unlabeled.
    fn skeleton(degrees: Vec<u64>, mismatch: bool) -> StableMapSkeleton {
        let s = 2;
        let tree = LabeledTree::new(2, [(0, 1)], [(1, 0), (2, 0)]).unwrap();
        let nodes = BTreeMap::from([((0, 1), pt(s, 5.0)), ((1, 0), pt(s, 0.0))]);
        let marks = BTreeMap::from([(1, pt(s, 0.0)), (2, pt(s, 1.0))]);
        let curve = NodalCurve::new(tree, nodes, marks).unwrap();
        let value = vec![GrassmannNumber::real(s, 1.0) + &eta(s, 1) * &eta(s, 2)];
        let other = if mismatch { vec![GrassmannNumber::real(s, 1.5)] } else { value.clone() };
        StableMapSkeleton { curve, degrees, node_values: BTreeMap::from([((0, 1), value), ((1, 0), other)]) }
    }

    #[test]
    fn nonconstant_components_pass() {
        assert!(check_stable_map(&skeleton(vec![1, 1], false)).passed);
    }

    #[test]
    fn constant_unstable_component_is_reported() {
        let r = check_stable_map(&skeleton(vec![1, 0], false));
        assert_eq!(r.violations, vec![MapViolation::Stability { vertex: 1, special_points: 1 }]);
    }

    #[test]
    fn node_mismatch_is_reported() {
        let r = check_stable_map(&skeleton(vec![1, 1], true));
        assert!(matches!(r.violations[..], [MapViolation::Nodes { from: 0, to: 1, .. }]));
    }

    #[test]
    fn fields_without_psi_or_curvature() {
        let s = 2;
        let phi = [Complex::new(1.0, 0.0), Complex::new(-2.0, 0.5)];
        let zero3 = vec![vec![vec![Complex::new(0.0, 0.0); 2]; 2]; 2];
        let psi0 = vec![GrassmannNumber::zero(s); 2];
        let out = eval_component_fields(&phi, &psi0, &zero3).unwrap();
        assert_eq!(out[1], GrassmannNumber::scalar(s, phi[1]));
        let psi = vec![eta(s, 1), eta(s, 2)];
        let out = eval_component_fields(&phi, &psi, &zero3).unwrap();
        assert_eq!(out[0], GrassmannNumber::scalar(s, phi[0]) + eta(s, 1));
        assert!(matches!(eval_component_fields(&phi, &[GrassmannNumber::one(s), eta(s, 1)], &zero3), Err(FieldError::PsiParity(0))));
    }

    #[test]
    fn partitions() {
        assert_eq!(admissible_partitions(&LabeledTree::single_vertex(3), 2), vec![vec![2]]);
        let bare = LabeledTree::new(2, [(0, 1)], []).unwrap();
        assert!(admissible_partitions(&bare, 1).is_empty());
        let split = LabeledTree::new(2, [(0, 1)], [(1, 0), (2, 0), (3, 1), (4, 1)]).unwrap();
        assert_eq!(admissible_partitions(&split, 1), vec![vec![0, 1], vec![1, 0]]);
    }
}
