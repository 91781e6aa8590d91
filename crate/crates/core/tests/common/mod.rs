//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

pub mod oracles;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use supermoduli::moduli::{reparametrize, NodalCurve, Reparam, SpecialPoint};
use supermoduli::superconf::{solve_three_points, Branch, ProjectivePoint, SpGL21};
use supermoduli::superlinalg::SuperMatrix;
use supermoduli::trees::{enumerate_stable, LabeledTree};
use supermoduli::{Complex, GrassmannNumber, Parity, SDim};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut impl Rng, scale: f64) -> Complex {
    Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

/// Random element with the given body whose soul has every monomial of the
/// requested parity present with probability one half.
fn random_with(rng: &mut impl Rng, s: usize, body: Complex, odd: bool, soul_scale: f64) -> GrassmannNumber {
    let mut terms = Vec::new();
    if !odd {
        terms.push((0u64, body));
    }
    for mask in 1u64..(1u64 << s) {
        if (mask.count_ones() % 2 == 1) == odd && rng.gen_bool(0.5) {
            terms.push((mask, complex(rng, soul_scale)));
        }
    }
    GrassmannNumber::from_masks(s, terms)
}

pub fn random_even(rng: &mut impl Rng, s: usize, body: Complex) -> GrassmannNumber {
    random_with(rng, s, body, false, 0.5)
}

pub fn random_nilpotent_even(rng: &mut impl Rng, s: usize) -> GrassmannNumber {
    random_with(rng, s, Complex::new(0.0, 0.0), false, 0.5)
}

pub fn random_odd(rng: &mut impl Rng, s: usize) -> GrassmannNumber {
    random_with(rng, s, Complex::new(0.0, 0.0), true, 0.5)
}

/// Random even element with body of modulus in `[0.5, 2]`.
pub fn random_unit(rng: &mut impl Rng, s: usize) -> GrassmannNumber {
    let r = rng.gen_range(0.5..2.0);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    random_even(rng, s, Complex::from_polar(r, phi))
}

/// Random point of `ℙ^{1|1}` with a random homogeneous representative.
/// The body lies in the disc of radius 2 or, with probability `p_inf`, at
/// `∞`.
pub fn random_point(rng: &mut impl Rng, s: usize, p_inf: f64) -> ProjectivePoint {
    let lambda = random_unit(rng, s);
    let theta = random_odd(rng, s);
    let (z1, z2) = if rng.gen_bool(p_inf) {
        (GrassmannNumber::one(s), random_nilpotent_even(rng, s))
    } else {
        let r = 2.0 * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = &GrassmannNumber::scalar(s, Complex::from_polar(r, phi)) + &random_nilpotent_even(rng, s).scale_real(0.5);
        (z, GrassmannNumber::one(s))
    };
    ProjectivePoint::new(&lambda * &z1, &lambda * &z2, &lambda * &theta).expect("valid point")
}

/// `count` points with pairwise chordal distance at least `sep`.
pub fn random_distinct_points(rng: &mut impl Rng, s: usize, count: usize, sep: f64) -> Vec<ProjectivePoint> {
    loop {
        let pts: Vec<ProjectivePoint> = (0..count).map(|_| random_point(rng, s, 0.15)).collect();
        let ok = (0..count).all(|i| (i + 1..count).all(|j| pts[i].chordal_distance(&pts[j]) >= sep));
        if ok {
            return pts;
        }
    }
}

pub fn random_triple(rng: &mut impl Rng, s: usize) -> [ProjectivePoint; 3] {
    let v = random_distinct_points(rng, s, 3, 0.2);
    [v[0].clone(), v[1].clone(), v[2].clone()]
}

/// Lift of a random Möbius map with `|det| ≥ 0.3` before normalization.
pub fn random_mobius(rng: &mut impl Rng, s: usize) -> SpGL21 {
    loop {
        let (a, b, c, d) = (complex(rng, 1.5), complex(rng, 1.5), complex(rng, 1.5), complex(rng, 1.5));
        if (a * d - b * c).norm() >= 0.3 {
            return SpGL21::mobius_lift(a, b, c, d, s).expect("invertible");
        }
    }
}

/// One random generator of the group: a Möbius lift, `Ξ₋`, one of the two
/// permutation matrices, or a three-point solver output.
pub fn random_factor(rng: &mut impl Rng, s: usize) -> SpGL21 {
    match rng.gen_range(0..5) {
        0 => random_mobius(rng, s),
        1 => SpGL21::xi_minus(s),
        2 => SpGL21::swap_zero_one(&random_odd(rng, s)).expect("valid"),
        3 => SpGL21::swap_one_infinity(&random_odd(rng, s)).expect("valid"),
        _ => {
            let [p1, p2, p3] = random_triple(rng, s);
            let branch = if rng.gen_bool(0.5) { Branch::Plus } else { Branch::Minus };
            solve_three_points(&p1, &p2, &p3, branch).expect("distinct triple").map
        }
    }
}

/// Product of one to three random factors.
pub fn random_group_element(rng: &mut impl Rng, s: usize) -> SpGL21 {
    let n = rng.gen_range(1..=3);
    let mut g = random_factor(rng, s);
    for _ in 1..n {
        g = SpGL21::compose(&g, &random_factor(rng, s)).expect("compatible");
    }
    g
}

/// Random stable tree with `k` labels and at most `max_vertices` vertices.
pub fn random_stable_tree(rng: &mut impl Rng, k: usize, max_vertices: usize) -> LabeledTree {
    let trees = enumerate_stable(k, max_vertices).expect("k ≥ 3");
    trees.choose(rng).expect("at least one tree").clone()
}

/// Random nodal curve on `tree`: points on each vertex pairwise separated.
pub fn random_curve_on(rng: &mut impl Rng, tree: &LabeledTree, s: usize) -> NodalCurve {
    let mut nodes = BTreeMap::new();
    let mut marks = BTreeMap::new();
    for v in 0..tree.num_vertices() {
        let labels = tree.labels_at(v);
        let nbrs = tree.neighbors(v).to_vec();
        let pts = random_distinct_points(rng, s, labels.len() + nbrs.len(), 0.2);
        let mut it = pts.into_iter();
        for l in labels {
            marks.insert(l, it.next().expect("enough points"));
        }
        for w in nbrs {
            nodes.insert((v, w), it.next().expect("enough points"));
        }
    }
    NodalCurve::new(tree.clone(), nodes, marks).expect("separated points")
}

pub fn random_reparam(rng: &mut impl Rng, vertices: usize, s: usize) -> Reparam {
    Reparam::new((0..vertices).map(|_| random_group_element(rng, s)).collect())
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Applies a random reparametrization and a random vertex relabeling.
pub fn scramble(rng: &mut impl Rng, c: &NodalCurve) -> NodalCurve {
    let n = c.tree().num_vertices();
    let g = random_reparam(rng, n, c.num_generators());
    let moved = reparametrize(c, &g).expect("valid reparametrization");
    moved.permute_vertices(&random_permutation(rng, n)).expect("permutation")
}

/// Moves the body of one special point on a vertex with at least four
/// special points by a fixed Möbius-incompatible amount.
pub fn perturb_body(rng: &mut impl Rng, c: &NodalCurve) -> Option<NodalCurve> {
    let tree = c.tree();
    let candidates: Vec<usize> = (0..tree.num_vertices()).filter(|&v| tree.special_count(v) >= 4).collect();
    let &v = candidates.choose(rng)?;
    let pts = c.special_points(v);
    let (sp, p) = pts.choose(rng).expect("non-empty");
    let (sp, p) = (*sp, (*p).clone());
    let others: Vec<ProjectivePoint> = pts.iter().filter(|(q, _)| *q != sp).map(|(_, q)| (*q).clone()).collect();
    for _ in 0..100 {
        let shift = Complex::from_polar(0.3, rng.gen_range(0.0..std::f64::consts::TAU));
        let [z1, z2, theta] = p.normalized();
        let moved = if p.dominant_index() == 1 {
            ProjectivePoint::new(&z1 + &GrassmannNumber::scalar(c.num_generators(), shift), z2, theta)
        } else {
            ProjectivePoint::new(z1, &z2 + &GrassmannNumber::scalar(c.num_generators(), shift), theta)
        }
        .expect("valid point");
        if others.iter().all(|q| q.chordal_distance(&moved) > 0.05) {
            let mut nodes = c.nodes().clone();
            let mut marks = c.marks().clone();
            match sp {
                SpecialPoint::Mark(i) => {
                    marks.insert(i, moved);
                }
                SpecialPoint::Node(a, b) => {
                    nodes.insert((a, b), moved);
                }
            }
            return NodalCurve::new(tree.clone(), nodes, marks).ok();
        }
    }
    None
}

/// Random invertible even matrix on `dim`: a random matrix plus a multiple
/// of the identity on the bodies.
pub fn random_invertible(rng: &mut impl Rng, dim: SDim, s: usize) -> SuperMatrix {
    let n = (dim.even + dim.odd) as usize;
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let odd = (i < dim.even as usize) != (j < dim.even as usize);
                    if odd {
                        random_odd(rng, s)
                    } else {
                        let body = complex(rng, 0.5) + if i == j { Complex::new(2.0, 0.0) } else { Complex::new(0.0, 0.0) };
                        random_even(rng, s, body)
                    }
                })
                .collect()
        })
        .collect();
    SuperMatrix::new(dim, dim, Parity::Even, entries).expect("even matrix")
}
