//! Nodal supercurves of genus zero and their moduli.
//!
//! A [`NodalCurve`] is a stable labeled tree together with one point of
//! `ℙ^{1|1}` per special point: `z_{αβ}` on vertex `α` for every directed
//! edge `(α, β)`, and `z_i` on vertex `p(i)` for every label `i`. The group
//! `G^T` of per-vertex automorphisms ([`Reparam`]) acts diagonally.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grassmann::GrassmannNumber;
use crate::superconf::{self, Branch, ConfError, ProjectivePoint, SpGL21};
use crate::trees::{LabeledTree, TreeError};

pub mod dims;
pub mod equivalence;
pub mod examples;
pub mod gromov;
pub mod stable_maps;

pub use dims::DimError;
pub use equivalence::{equivalent, Equivalence, EquivalenceWitness};
pub use gromov::{check_gromov_curves, Clause, GromovConfig, GromovReport, SequenceElement};
pub use stable_maps::{admissible_partitions, check_stable_map, eval_component_fields, StableMapSkeleton};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModuliError {
    #[error(transparent)]
    Conf(#[from] ConfError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("missing point for {0}")]
    MissingPoint(SpecialPoint),
    #[error("unexpected point for {0}")]
    ExtraPoint(SpecialPoint),
    #[error("special points {0} and {1} on vertex {2} have coinciding reductions")]
    Collision(SpecialPoint, SpecialPoint, usize),
    #[error("all points must live over the same Grassmann algebra")]
    Generators,
    #[error("reparametrization has {found} entries for a tree with {expected} vertices")]
    ReparamLength { expected: usize, found: usize },
    #[error("vertex {vertex} has {count} special points, at least 3 are needed")]
    TooFewSpecial { vertex: usize, count: usize },
    #[error("special point {0} does not sit on vertex {1}")]
    NotOnVertex(SpecialPoint, usize),
    #[error("curves are modeled on different trees")]
    TreeMismatch,
    #[error("invalid node key {0:?}, expected \"a-b\"")]
    NodeKey(String),
}

/// A special point on a vertex: a marked point or the end of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialPoint {
    Mark(usize),
    /// `Node(α, β)` is the point `z_{αβ}` on `α`.
    Node(usize, usize),
}

impl fmt::Display for SpecialPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecialPoint::Mark(i) => write!(f, "z_{i}"),
            SpecialPoint::Node(a, b) => write!(f, "z_({a},{b})"),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct NodalCurve {
    tree: LabeledTree,
    nodes: BTreeMap<(usize, usize), ProjectivePoint>,
    marks: BTreeMap<usize, ProjectivePoint>,
}

impl NodalCurve {
    pub fn new(
        tree: LabeledTree,
        nodes: BTreeMap<(usize, usize), ProjectivePoint>,
        marks: BTreeMap<usize, ProjectivePoint>,
    ) -> Result<Self, ModuliError> {
        for &(u, v) in tree.edges() {
            for key in [(u, v), (v, u)] {
                if !nodes.contains_key(&key) {
                    return Err(ModuliError::MissingPoint(SpecialPoint::Node(key.0, key.1)));
                }
            }
        }
        for &(u, v) in nodes.keys() {
            if !tree.has_edge(u, v) {
                return Err(ModuliError::ExtraPoint(SpecialPoint::Node(u, v)));
            }
        }
        for &l in tree.labels().keys() {
            if !marks.contains_key(&l) {
                return Err(ModuliError::MissingPoint(SpecialPoint::Mark(l)));
            }
        }
        for &l in marks.keys() {
            if tree.label_vertex(l).is_none() {
                return Err(ModuliError::ExtraPoint(SpecialPoint::Mark(l)));
            }
        }
        let mut gens = nodes.values().chain(marks.values()).map(|p| p.num_generators());
        if let Some(first) = gens.next() {
            if gens.any(|g| g != first) {
                return Err(ModuliError::Generators);
            }
        }
        let curve = NodalCurve { tree, nodes, marks };
        curve.check_distinct()?;
        Ok(curve)
    }

    fn check_distinct(&self) -> Result<(), ModuliError> {
        for v in 0..self.tree.num_vertices() {
            let pts = self.special_points(v);
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if pts[i].1.chordal_distance(pts[j].1) <= 0.0 {
                        return Err(ModuliError::Collision(pts[i].0, pts[j].0, v));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn tree(&self) -> &LabeledTree {
        &self.tree
    }

    pub fn nodes(&self) -> &BTreeMap<(usize, usize), ProjectivePoint> {
        &self.nodes
    }

    pub fn marks(&self) -> &BTreeMap<usize, ProjectivePoint> {
        &self.marks
    }

    pub fn num_generators(&self) -> usize {
        self.marks.values().chain(self.nodes.values()).map(|p| p.num_generators()).next().unwrap_or(0)
    }

    pub fn point(&self, sp: SpecialPoint) -> Option<&ProjectivePoint> {
        match sp {
            SpecialPoint::Mark(i) => self.marks.get(&i),
            SpecialPoint::Node(a, b) => self.nodes.get(&(a, b)),
        }
    }

    /// Vertex carrying a special point.
    pub fn vertex_of(&self, sp: SpecialPoint) -> Option<usize> {
        match sp {
            SpecialPoint::Mark(i) => self.tree.label_vertex(i),
            SpecialPoint::Node(a, b) => self.tree.has_edge(a, b).then_some(a),
        }
    }

    /// Special points on `v`: marks in label order, then nodes by neighbour.
    pub fn special_points(&self, v: usize) -> Vec<(SpecialPoint, &ProjectivePoint)> {
        let mut out: Vec<(SpecialPoint, &ProjectivePoint)> =
            self.tree.labels_at(v).into_iter().map(|l| (SpecialPoint::Mark(l), &self.marks[&l])).collect();
        for &w in self.tree.neighbors(v) {
            out.push((SpecialPoint::Node(v, w), &self.nodes[&(v, w)]));
        }
        out
    }

    /// Renames vertex `v` to `perm[v]`, carrying all points along.
    pub fn permute_vertices(&self, perm: &[usize]) -> Result<NodalCurve, ModuliError> {
        let tree = self.tree.permute_vertices(perm)?;
        let nodes = self.nodes.iter().map(|(&(a, b), p)| ((perm[a], perm[b]), p.clone())).collect();
        NodalCurve::new(tree, nodes, self.marks.clone())
    }

    /// Largest projective distance between corresponding points; infinite
    /// if the trees differ.
    pub fn distance(&self, other: &NodalCurve) -> f64 {
        if self.tree != other.tree {
            return f64::INFINITY;
        }
        let nodes = self.nodes.iter().map(|(k, p)| p.projective_distance(&other.nodes[k]));
        let marks = self.marks.iter().map(|(k, p)| p.projective_distance(&other.marks[k]));
        nodes.chain(marks).fold(0.0, f64::max)
    }

    /// Applies `f` to every point on vertex `v`.
    fn map_vertex(&self, v: usize, f: impl Fn(&ProjectivePoint) -> ProjectivePoint) -> NodalCurve {
        let mut out = self.clone();
        for (k, p) in out.nodes.iter_mut() {
            if k.0 == v {
                *p = f(p);
            }
        }
        for (l, p) in out.marks.iter_mut() {
            if self.tree.label_vertex(*l) == Some(v) {
                *p = f(p);
            }
        }
        out
    }
}

impl fmt::Debug for NodalCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodalCurve")
            .field("tree", &self.tree)
            .field("nodes", &self.nodes)
            .field("marks", &self.marks)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    tree: LabeledTree,
    nodes: BTreeMap<String, ProjectivePoint>,
    marks: BTreeMap<usize, ProjectivePoint>,
}

fn parse_node_key(key: &str) -> Result<(usize, usize), ModuliError> {
    let bad = || ModuliError::NodeKey(key.to_string());
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl Serialize for NodalCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CurveJson {
            tree: self.tree.clone(),
            nodes: self.nodes.iter().map(|(&(a, b), p)| (format!("{a}-{b}"), p.clone())).collect(),
            marks: self.marks.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NodalCurve {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = CurveJson::deserialize(deserializer)?;
        let mut nodes = BTreeMap::new();
        for (k, p) in raw.nodes {
            nodes.insert(parse_node_key(&k).map_err(serde::de::Error::custom)?, p);
        }
        NodalCurve::new(raw.tree, nodes, raw.marks).map_err(serde::de::Error::custom)
    }
}

/// An element `(g_α)_α` of `G^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reparam {
    pub maps: Vec<SpGL21>,
}

impl Reparam {
    pub fn new(maps: Vec<SpGL21>) -> Self {
        Reparam { maps }
    }

    pub fn identity(vertices: usize, s: usize) -> Self {
        Reparam { maps: vec![SpGL21::identity(s); vertices] }
    }

    /// Per-vertex `self ∘ inner`.
    pub fn compose(&self, inner: &Reparam) -> Result<Reparam, ModuliError> {
        if self.maps.len() != inner.maps.len() {
            return Err(ModuliError::ReparamLength { expected: self.maps.len(), found: inner.maps.len() });
        }
        let maps = self.maps.iter().zip(&inner.maps).map(|(o, i)| SpGL21::compose(o, i)).collect::<Result<_, _>>()?;
        Ok(Reparam { maps })
    }

    pub fn inverse(&self) -> Result<Reparam, ModuliError> {
        Ok(Reparam { maps: self.maps.iter().map(|g| g.inverse()).collect::<Result<_, _>>()? })
    }

    pub fn is_valid(&self) -> bool {
        self.maps.iter().all(|g| g.is_valid())
    }
}

/// `g · z`: every special point on `α` is moved by `g_α`.
pub fn reparametrize(c: &NodalCurve, g: &Reparam) -> Result<NodalCurve, ModuliError> {
    let n = c.tree.num_vertices();
    if g.maps.len() != n {
        return Err(ModuliError::ReparamLength { expected: n, found: g.maps.len() });
    }
    let mut out = c.clone();
    for (&(a, _), p) in out.nodes.iter_mut() {
        *p = g.maps[a].act(p);
    }
    for (l, p) in out.marks.iter_mut() {
        let v = c.tree.label_vertex(*l).expect("validated curve");
        *p = g.maps[v].act(p);
    }
    out.check_distinct()?;
    Ok(out)
}

/// Outcome of [`normalize_vertex`].
#[derive(Debug, Clone)]
pub struct Normalized {
    pub curve: NodalCurve,
    pub epsilon: GrassmannNumber,
    pub branch: Branch,
    /// The map sending `(0, 1_ε, ∞)` to the chosen triple; its inverse was
    /// applied at the vertex.
    pub frame: SpGL21,
    /// Remaining special points of the vertex after normalization.
    pub remaining: Vec<(SpecialPoint, ProjectivePoint)>,
}

/// Moves the chosen special points of `v` to `0`, `1_ε`, `∞`.
pub fn normalize_vertex(
    c: &NodalCurve,
    v: usize,
    triple: [SpecialPoint; 3],
    branch: Branch,
) -> Result<Normalized, ModuliError> {
    let count = c.tree.special_count(v);
    if count < 3 {
        return Err(ModuliError::TooFewSpecial { vertex: v, count });
    }
    let mut pts = Vec::with_capacity(3);
    for sp in triple {
        if c.vertex_of(sp) != Some(v) {
            return Err(ModuliError::NotOnVertex(sp, v));
        }
        pts.push(c.point(sp).expect("validated curve"));
    }
    let sol = superconf::solve_three_points(pts[0], pts[1], pts[2], branch)?;
    let inv = sol.map.inverse()?;
    let curve = c.map_vertex(v, |p| inv.act(p));
    let remaining = curve
        .special_points(v)
        .into_iter()
        .filter(|(sp, _)| !triple.contains(sp))
        .map(|(sp, p)| (sp, p.clone()))
        .collect();
    Ok(Normalized { curve, epsilon: sol.epsilon, branch, frame: sol.map, remaining })
}
