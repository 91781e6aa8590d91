//! Deciding whether two nodal curves differ by a reparametrization.
//!
//! On each vertex the special points are sorted by an invariant key (a
//! mark by its label, a node by the smallest label behind it) and the first
//! three are moved to `0, 1_ε, ∞`. Two curves are equivalent iff, vertex by
//! vertex, the normalized data agree directly or after `Ξ₋`.

use serde::Serialize;

use super::{normalize_vertex, reparametrize, ModuliError, NodalCurve, Reparam, SpecialPoint};
use crate::superconf::{Branch, SpGL21};
use crate::trees::TreeHom;

/// Tolerance for comparing normalized points and pseudoinvariants.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceWitness {
    /// Tree isomorphism from the first curve's tree to the second's.
    pub hom: TreeHom,
    /// `g_α` for each vertex `α` of the first curve, moving its points onto
    /// the points of vertex `hom(α)` of the second.
    pub reparam: Reparam,
    /// Vertices whose normalized data matched only after inserting `Ξ₋`
    /// between the two normalizing frames.
    pub reflected: Vec<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub enum Equivalence {
    No,
    Yes(Box<EquivalenceWitness>),
}

impl Equivalence {
    pub fn is_yes(&self) -> bool {
        matches!(self, Equivalence::Yes(_))
    }
}

/// Invariant sort key of a special point on `v`.
fn key(c: &NodalCurve, sp: SpecialPoint) -> usize {
    match sp {
        SpecialPoint::Mark(i) => i,
        SpecialPoint::Node(a, b) => c.tree().far_side_labels(a, b).into_iter().min().unwrap_or(usize::MAX),
    }
}

/// Special points on `v` ordered by their invariant key.
pub fn canonical_special_points(c: &NodalCurve, v: usize) -> Vec<SpecialPoint> {
    let mut pts: Vec<SpecialPoint> = c.special_points(v).into_iter().map(|(sp, _)| sp).collect();
    pts.sort_by_key(|&sp| (key(c, sp), sp));
    pts
}

fn transport(sp: SpecialPoint, map: &[usize]) -> SpecialPoint {
    match sp {
        SpecialPoint::Mark(i) => SpecialPoint::Mark(i),
        SpecialPoint::Node(a, b) => SpecialPoint::Node(map[a], map[b]),
    }
}

/// Checks that `witness` moves every point of `c1` onto the matching point
/// of `c2`; returns the largest projective residual.
pub fn witness_residual(c1: &NodalCurve, c2: &NodalCurve, witness: &EquivalenceWitness) -> Result<f64, ModuliError> {
    let moved = reparametrize(c1, &witness.reparam)?;
    let transported = moved.permute_vertices(&witness.hom.vertex_map)?;
    Ok(transported.distance(c2))
}

/// Decides equivalence of two stable nodal curves and returns a witness.
pub fn equivalent(c1: &NodalCurve, c2: &NodalCurve) -> Result<Equivalence, ModuliError> {
    if c1.num_generators() != c2.num_generators() {
        return Err(ModuliError::Generators);
    }
    let Some(map) = c1.tree().isomorphism_to(c2.tree()) else {
        return Ok(Equivalence::No);
    };
    let s = c1.num_generators();
    let n = c1.tree().num_vertices();
    let mut maps = Vec::with_capacity(n);
    let mut reflected = Vec::new();
    for v in 0..n {
        let order1 = canonical_special_points(c1, v);
        if order1.len() < 3 {
            return Err(ModuliError::TooFewSpecial { vertex: v, count: order1.len() });
        }
        let order2: Vec<SpecialPoint> = order1.iter().map(|&sp| transport(sp, &map)).collect();
        let t1 = [order1[0], order1[1], order1[2]];
        let t2 = [order2[0], order2[1], order2[2]];
        let n1 = normalize_vertex(c1, v, t1, Branch::Plus)?;
        let n2 = normalize_vertex(c2, map[v], t2, Branch::Plus)?;
        let rest = |reflect: bool| {
            order1[3..].iter().zip(&order2[3..]).all(|(&a, &b)| {
                let p = n1.curve.point(a).expect("point on vertex");
                let p = if reflect { p.reflect_odd() } else { p.clone() };
                p.projective_eq(n2.curve.point(b).expect("point on vertex"), EQUIVALENCE_TOLERANCE)
            })
        };
        let inv1 = n1.frame.inverse()?;
        let g = if n1.epsilon.approx_eq(&n2.epsilon, EQUIVALENCE_TOLERANCE) && rest(false) {
            SpGL21::compose(&n2.frame, &inv1)?
        } else if n1.epsilon.approx_eq(&-&n2.epsilon, EQUIVALENCE_TOLERANCE) && rest(true) {
            reflected.push(v);
            SpGL21::compose(&n2.frame, &SpGL21::compose(&SpGL21::xi_minus(s), &inv1)?)?
        } else {
            return Ok(Equivalence::No);
        };
        maps.push(g);
    }
    let mut witness = EquivalenceWitness { hom: TreeHom::new(map), reparam: Reparam::new(maps), reflected, residual: 0.0 };
    witness.residual = witness_residual(c1, c2, &witness)?;
    if witness.residual > EQUIVALENCE_TOLERANCE {
        return Ok(Equivalence::No);
    }
    Ok(Equivalence::Yes(Box::new(witness)))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::grassmann::{Complex, GrassmannNumber};
    use crate::superconf::ProjectivePoint;
    use crate::trees::LabeledTree;

    fn eta(s: usize, i: usize) -> GrassmannNumber {
        GrassmannNumber::generator(s, i).unwrap()
    }

    fn chart(s: usize, z: f64, theta: GrassmannNumber) -> ProjectivePoint {
        ProjectivePoint::from_chart1(&GrassmannNumber::real(s, z), &theta).unwrap()
    }

    fn four_marks(s: usize, eps: GrassmannNumber) -> NodalCurve {
        let marks = BTreeMap::from([
            (1, chart(s, 0.0, GrassmannNumber::zero(s))),
            (2, chart(s, 1.0, eps)),
            (3, ProjectivePoint::infinity(s)),
            (4, chart(s, 3.0, eta(s, 2))),
        ]);
        NodalCurve::new(LabeledTree::single_vertex(4), BTreeMap::new(), marks).unwrap()
    }

    #[test]
    fn reflexive() {
        let c = four_marks(2, eta(2, 1));
        let Equivalence::Yes(w) = equivalent(&c, &c).unwrap() else { panic!("not reflexive") };
        assert!(w.residual < 1e-12);
        assert!(w.reflected.is_empty());
    }

    #[test]
    fn reflection_is_detected() {
        let s = 2;
        let c = four_marks(s, eta(s, 1));
        let flipped = reparametrize(&c, &Reparam::new(vec![SpGL21::xi_minus(s)])).unwrap();
        let Equivalence::Yes(w) = equivalent(&c, &flipped).unwrap() else { panic!("missed Ξ₋") };
        assert!(w.reparam.maps[0].distance_up_to_sign(&SpGL21::xi_minus(s)) < 1e-10);
    }

    #[test]
    fn moved_body_is_not_equivalent() {
        let s = 2;
        let c = four_marks(s, eta(s, 1));
        let mut marks = c.marks().clone();
        marks.insert(4, chart(s, 3.5, eta(s, 2)));
        let d = NodalCurve::new(c.tree().clone(), BTreeMap::new(), marks).unwrap();
        assert!(!equivalent(&c, &d).unwrap().is_yes());
    }

    #[test]
    fn mobius_moved_curve_is_equivalent() {
        let s = 2;
        let c = four_marks(s, eta(s, 1));
        let one = Complex::new(1.0, 0.0);
        let g = Reparam::new(vec![SpGL21::mobius_lift(one * 2.0, one * 0.3, one * -0.5, one, s).unwrap()]);
        let d = reparametrize(&c, &g).unwrap();
        assert!(equivalent(&c, &d).unwrap().is_yes());
    }
}
