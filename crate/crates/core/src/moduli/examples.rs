//! Explicit Gromov-convergent sequences.
//!
//! Both examples let two marked points `z1 = 0`, `z2 = 1/ν` collide on one
//! component. Rescaling that component by `z ↦ z/ν` separates them again on a
//! bubble attached at `0`.
//!
//! Odd coordinates only shrink like `1/√ν`, so a tolerance of `1e-6` needs
//! `ν` beyond `10^13` in the tail. The colliding point is stored as
//! `[1 : ν : 0]` so that no coefficient drops below the prune threshold.

use std::collections::BTreeMap;

use super::gromov::SequenceElement;
use super::{NodalCurve, Reparam};
use crate::grassmann::{Complex, GrassmannNumber};
use crate::superconf::{ProjectivePoint, SpGL21};
use crate::trees::{LabeledTree, TreeHom};

fn chart(s: usize, z: f64) -> ProjectivePoint {
    ProjectivePoint::from_chart1(&GrassmannNumber::real(s, z), &GrassmannNumber::zero(s)).expect("finite point")
}

/// `1` with odd part `η1` when there is a generator.
/// `[1 : ν : 0]`, the point `1/ν` of the first chart.
fn reciprocal(s: usize, nu: f64) -> ProjectivePoint {
    ProjectivePoint::new(GrassmannNumber::one(s), GrassmannNumber::real(s, nu), GrassmannNumber::zero(s))
        .expect("finite point")
}

fn one_with_odd(s: usize) -> ProjectivePoint {
    let theta = if s > 0 { GrassmannNumber::generator(s, 1).expect("s ≥ 1") } else { GrassmannNumber::zero(s) };
    ProjectivePoint::from_chart1(&GrassmannNumber::one(s), &theta).expect("finite point")
}

/// Lift of `z ↦ z/ν`, acting on odd coordinates by `θ ↦ θ/√ν`.
pub fn shrink(nu: f64, s: usize) -> SpGL21 {
    let r = nu.sqrt();
    SpGL21::mobius_lift(Complex::new(1.0 / r, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(r, 0.0), s)
        .expect("unit determinant")
}

/// Returns a copy of `c` with one marked point replaced.
pub fn with_mark(c: &NodalCurve, label: usize, p: ProjectivePoint) -> NodalCurve {
    let mut marks = c.marks().clone();
    marks.insert(label, p);
    NodalCurve::new(c.tree().clone(), c.nodes().clone(), marks).expect("perturbed curve stays valid")
}

/// Returns a copy of `c` with one nodal point replaced.
pub fn with_node(c: &NodalCurve, edge: (usize, usize), p: ProjectivePoint) -> NodalCurve {
    let mut nodes = c.nodes().clone();
    nodes.insert(edge, p);
    NodalCurve::new(c.tree().clone(), nodes, c.marks().clone()).expect("perturbed curve stays valid")
}

/// `steps` values `10^x` with `x` evenly spaced from `first` to `last`.
pub fn log_scales(first: f64, last: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![10f64.powf(first)],
        _ => (0..steps).map(|i| 10f64.powf(first + (last - first) * i as f64 / (steps - 1) as f64)).collect(),
    }
}

/// Four marked points `0, 1/ν, 1_{η1}, ∞` on a single component, one
/// element per `ν` in `scales`.
///
/// The limit has vertex 0 carrying `z3 = 1_{η1}`, `z4 = ∞` and the node at
/// `0`, and vertex 1 carrying `z1 = 0`, `z2 = 1` and the node at `∞`.
pub fn bubbling_sequence(s: usize, scales: &[f64]) -> (Vec<SequenceElement>, NodalCurve) {
    let seq_tree = LabeledTree::single_vertex(4);
    let seq = scales
        .iter()
        .map(|&nu| {
            let marks = BTreeMap::from([
                (1, chart(s, 0.0)),
                (2, reciprocal(s, nu)),
                (3, one_with_odd(s)),
                (4, ProjectivePoint::infinity(s)),
            ]);
            SequenceElement {
                curve: NodalCurve::new(seq_tree.clone(), BTreeMap::new(), marks).expect("distinct points"),
                hom: TreeHom::new(vec![0, 0]),
                reparam: Reparam::new(vec![SpGL21::identity(s), shrink(nu, s)]),
            }
        })
        .collect();
    let limit_tree = LabeledTree::new(2, [(0, 1)], [(1, 1), (2, 1), (3, 0), (4, 0)]).expect("valid tree");
    let nodes = BTreeMap::from([((0, 1), chart(s, 0.0)), ((1, 0), ProjectivePoint::infinity(s))]);
    let marks = BTreeMap::from([
        (1, chart(s, 0.0)),
        (2, chart(s, 1.0)),
        (3, one_with_odd(s)),
        (4, ProjectivePoint::infinity(s)),
    ]);
    (seq, NodalCurve::new(limit_tree, nodes, marks).expect("stable limit"))
}

/// Same collision on the first of two components joined by a node.
///
/// Sequence: vertex 0 with `z1 = 0`, `z2 = 1/ν`, `z3 = 1_{η1}` and the node at
/// `∞`; vertex 1 with the node at `0`, `z4 = 1`, `z5 = ∞`. The limit has three
/// vertices: 0 (label 3, nodes to 1 at `0` and to 2 at `∞`), the bubble 1
/// (labels 1, 2) and 2 (labels 4, 5), mapped onto the sequence tree by
/// `0, 1 ↦ 0` and `2 ↦ 1`.
pub fn bubbling_chain(s: usize, scales: &[f64]) -> (Vec<SequenceElement>, NodalCurve) {
    let seq_tree =
        LabeledTree::new(2, [(0, 1)], [(1, 0), (2, 0), (3, 0), (4, 1), (5, 1)]).expect("valid tree");
    let seq = scales
        .iter()
        .map(|&nu| {
            let nodes = BTreeMap::from([((0, 1), ProjectivePoint::infinity(s)), ((1, 0), chart(s, 0.0))]);
            let marks = BTreeMap::from([
                (1, chart(s, 0.0)),
                (2, reciprocal(s, nu)),
                (3, one_with_odd(s)),
                (4, chart(s, 1.0)),
                (5, ProjectivePoint::infinity(s)),
            ]);
            SequenceElement {
                curve: NodalCurve::new(seq_tree.clone(), nodes, marks).expect("distinct points"),
                hom: TreeHom::new(vec![0, 0, 1]),
                reparam: Reparam::new(vec![SpGL21::identity(s), shrink(nu, s), SpGL21::identity(s)]),
            }
        })
        .collect();
    let limit_tree =
        LabeledTree::new(3, [(0, 1), (0, 2)], [(1, 1), (2, 1), (3, 0), (4, 2), (5, 2)]).expect("valid tree");
    let nodes = BTreeMap::from([
        ((0, 1), chart(s, 0.0)),
        ((1, 0), ProjectivePoint::infinity(s)),
        ((0, 2), ProjectivePoint::infinity(s)),
        ((2, 0), chart(s, 0.0)),
    ]);
    let marks = BTreeMap::from([
        (1, chart(s, 0.0)),
        (2, chart(s, 1.0)),
        (3, one_with_odd(s)),
        (4, chart(s, 1.0)),
        (5, ProjectivePoint::infinity(s)),
    ]);
    (seq, NodalCurve::new(limit_tree, nodes, marks).expect("stable limit"))
}

/// Returns a point of the first chart with zero odd part.
pub fn plain_point(s: usize, z: f64) -> ProjectivePoint {
    chart(s, z)
}
