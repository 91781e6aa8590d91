//! Points of `ℙ^{1|1}` and its superconformal automorphisms.
//!
//! A point is a homogeneous triple `[Z1 : Z2 : Θ]` with `Z1`, `Z2` even and
//! `Θ` odd. Automorphisms are `3×3` even supermatrices
//!
//! ```text
//!     ( a  c  γ )
//! L = ( b  d  δ )
//!     ( α  β  e )
//! ```
//!
//! acting on row vectors, `[Z1 : Z2 : Θ] ↦ [Z1 : Z2 : Θ] · L`, subject to
//!
//! ```text
//! ad − bc − γδ = 1      aβ − cα + eγ = 0
//! e² + 2αβ = 1          bβ − dα + eδ = 0
//! ```
//!
//! In the chart `z = Z1/Z2`, `θ = Θ/Z2` this is
//! `z ↦ (az + b + θα)/(cz + d + θβ)`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grassmann::{Complex, GrassmannError, GrassmannNumber, Parity, SDim};
use crate::superlinalg::{LinalgError, SuperMatrix};

/// Default tolerance for projective equality of points.
pub const PROJECTIVE_TOLERANCE: f64 = 1e-9;
/// Largest residual of the four defining relations accepted after a group
/// operation.
pub const RELATION_TOLERANCE: f64 = 1e-8;
/// Minimal separation `|Z1 W2 − Z2 W1|` (on unit-normalized bodies) for two
/// reduced points to count as distinct.
pub const DISTINCT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfError {
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("reduced points {0} and {1} coincide")]
    NotDistinct(usize, usize),
    #[error("superconformal relations violated (residual {0:e})")]
    Relations(f64),
    #[error("point left the chart")]
    LeftChart,
    #[error("three-point solution failed its round-trip check (residual {0:e})")]
    Residual(f64),
    #[error("Möbius data has zero determinant")]
    Degenerate,
}

/// A point `[Z1 : Z2 : Θ]` of `ℙ^{1|1}` over `Λ_s`.
#[derive(Clone, PartialEq)]
pub struct ProjectivePoint {
    z1: GrassmannNumber,
    z2: GrassmannNumber,
    theta: GrassmannNumber,
}

impl ProjectivePoint {
    pub fn new(z1: GrassmannNumber, z2: GrassmannNumber, theta: GrassmannNumber) -> Result<Self, ConfError> {
        let s = z1.num_generators();
        if z2.num_generators() != s || theta.num_generators() != s {
            return Err(GrassmannError::ContextMismatch { left: s, right: z2.num_generators().max(theta.num_generators()) }
                .into());
        }
        z1.expect_parity(Parity::Even).map_err(|_| ConfError::InvalidPoint("Z1 must be even".into()))?;
        z2.expect_parity(Parity::Even).map_err(|_| ConfError::InvalidPoint("Z2 must be even".into()))?;
        theta.expect_parity(Parity::Odd).map_err(|_| ConfError::InvalidPoint("Theta must be odd".into()))?;
        if z1.body().norm().max(z2.body().norm()) <= crate::grassmann::invert_epsilon() {
            return Err(ConfError::InvalidPoint("both Z1 and Z2 have vanishing body".into()));
        }
        if !z1.is_finite() || !z2.is_finite() || !theta.is_finite() {
            return Err(ConfError::InvalidPoint("non-finite coordinate".into()));
        }
        Ok(ProjectivePoint { z1, z2, theta })
    }

    /// `0 = [0 : 1 : 0]`.
    pub fn zero(s: usize) -> Self {
        ProjectivePoint { z1: GrassmannNumber::zero(s), z2: GrassmannNumber::one(s), theta: GrassmannNumber::zero(s) }
    }

    /// `∞ = [1 : 0 : 0]`.
    pub fn infinity(s: usize) -> Self {
        ProjectivePoint { z1: GrassmannNumber::one(s), z2: GrassmannNumber::zero(s), theta: GrassmannNumber::zero(s) }
    }

    /// `1_ε = [1 : 1 : ε]`.
    pub fn one_eps(eps: &GrassmannNumber) -> Result<Self, ConfError> {
        let s = eps.num_generators();
        Self::new(GrassmannNumber::one(s), GrassmannNumber::one(s), eps.clone())
    }

    /// The point `[z : 1 : θ]` of the first chart.
    pub fn from_chart1(z: &GrassmannNumber, theta: &GrassmannNumber) -> Result<Self, ConfError> {
        Self::new(z.clone(), GrassmannNumber::one(z.num_generators()), theta.clone())
    }

    /// The point `[1 : w : φ]` of the second chart.
    pub fn from_chart2(w: &GrassmannNumber, phi: &GrassmannNumber) -> Result<Self, ConfError> {
        Self::new(GrassmannNumber::one(w.num_generators()), w.clone(), phi.clone())
    }

    pub fn z1(&self) -> &GrassmannNumber {
        &self.z1
    }

    pub fn z2(&self) -> &GrassmannNumber {
        &self.z2
    }

    pub fn theta(&self) -> &GrassmannNumber {
        &self.theta
    }

    pub fn num_generators(&self) -> usize {
        self.z1.num_generators()
    }

    pub fn coords(&self) -> [&GrassmannNumber; 3] {
        [&self.z1, &self.z2, &self.theta]
    }

    /// `(z, θ) = (Z1/Z2, Θ/Z2)`.
    pub fn chart1(&self) -> Result<(GrassmannNumber, GrassmannNumber), ConfError> {
        let inv = self.z2.invert().map_err(|_| ConfError::LeftChart)?;
        Ok((&self.z1 * &inv, &self.theta * &inv))
    }

    /// `(w, φ) = (Z2/Z1, Θ/Z1)`.
    pub fn chart2(&self) -> Result<(GrassmannNumber, GrassmannNumber), ConfError> {
        let inv = self.z1.invert().map_err(|_| ConfError::LeftChart)?;
        Ok((&self.z2 * &inv, &self.theta * &inv))
    }

    /// Index (0 for `Z1`, 1 for `Z2`) of the coordinate with larger body.
    pub fn dominant_index(&self) -> usize {
        if self.z1.body().norm() >= self.z2.body().norm() {
            0
        } else {
            1
        }
    }

    /// Divides all coordinates by the one at `index`.
    pub fn normalized_by(&self, index: usize) -> Result<[GrassmannNumber; 3], ConfError> {
        let pivot = if index == 0 { &self.z1 } else { &self.z2 };
        let inv = pivot.invert().map_err(|_| ConfError::LeftChart)?;
        Ok([&self.z1 * &inv, &self.z2 * &inv, &self.theta * &inv])
    }

    /// Representative with the larger-body coordinate equal to one.
    pub fn normalized(&self) -> [GrassmannNumber; 3] {
        self.normalized_by(self.dominant_index()).expect("dominant coordinate is invertible")
    }

    /// Largest coefficientwise difference after normalizing both points by
    /// the dominant coordinate of `self`. Infinite if `other` is not in that
    /// chart.
    pub fn projective_distance(&self, other: &ProjectivePoint) -> f64 {
        if self.num_generators() != other.num_generators() {
            return f64::INFINITY;
        }
        let idx = self.dominant_index();
        let a = self.normalized();
        let Ok(b) = other.normalized_by(idx) else {
            return f64::INFINITY;
        };
        a.iter().zip(b.iter()).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
    }

    pub fn projective_eq(&self, other: &ProjectivePoint, tol: f64) -> bool {
        self.projective_distance(other) <= tol
    }

    /// The underlying point of `ℙ¹` as a unit vector `(Z1, Z2)` of bodies.
    pub fn reduced(&self) -> (Complex, Complex) {
        let (a, b) = (self.z1.body(), self.z2.body());
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        (a / n, b / n)
    }

    /// Drops all soul terms.
    pub fn body_point(&self) -> ProjectivePoint {
        let s = self.num_generators();
        ProjectivePoint {
            z1: GrassmannNumber::scalar(s, self.z1.body()),
            z2: GrassmannNumber::scalar(s, self.z2.body()),
            theta: GrassmannNumber::zero(s),
        }
    }

    /// Chordal distance between the reduced points.
    pub fn chordal_distance(&self, other: &ProjectivePoint) -> f64 {
        let (a1, a2) = self.reduced();
        let (b1, b2) = other.reduced();
        (a1 * b2 - a2 * b1).norm()
    }

    /// Same point over a larger Grassmann algebra.
    pub fn extend_generators(&self, s: usize) -> Result<Self, ConfError> {
        Ok(ProjectivePoint {
            z1: self.z1.extend_generators(s)?,
            z2: self.z2.extend_generators(s)?,
            theta: self.theta.extend_generators(s)?,
        })
    }

    /// `[Z1 : Z2 : −Θ]`.
    pub fn reflect_odd(&self) -> Self {
        ProjectivePoint { z1: self.z1.clone(), z2: self.z2.clone(), theta: -&self.theta }
    }
}

impl fmt::Debug for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} : {} : {}]", self.z1, self.z2, self.theta)
    }
}

#[derive(Serialize, Deserialize)]
struct PointJson {
    #[serde(rename = "Z1")]
    z1: GrassmannNumber,
    #[serde(rename = "Z2")]
    z2: GrassmannNumber,
    #[serde(rename = "Theta")]
    theta: GrassmannNumber,
}

impl Serialize for ProjectivePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PointJson { z1: self.z1.clone(), z2: self.z2.clone(), theta: self.theta.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProjectivePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = PointJson::deserialize(deserializer)?;
        ProjectivePoint::new(raw.z1, raw.z2, raw.theta).map_err(serde::de::Error::custom)
    }
}

/// Residuals of the four defining relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationResiduals(pub [f64; 4]);

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// An element of `SpGL(2|1)` over `Λ_s`.
#[derive(Clone, PartialEq)]
pub struct SpGL21 {
    mat: SuperMatrix,
}

const DIM: SDim = SDim::new(2, 1);

impl SpGL21 {
    /// Wraps a `(2|1)×(2|1)` even matrix after checking the relations.
    pub fn new(mat: SuperMatrix) -> Result<Self, ConfError> {
        let l = Self::new_unchecked(mat)?;
        let r = l.residuals().max();
        if r > RELATION_TOLERANCE {
            return Err(ConfError::Relations(r));
        }
        Ok(l)
    }

    /// Wraps a matrix of the right shape without checking the relations.
    pub fn new_unchecked(mat: SuperMatrix) -> Result<Self, ConfError> {
        if mat.row_dims() != DIM || mat.col_dims() != DIM || mat.parity() != Parity::Even {
            return Err(LinalgError::Dimension("expected an even (2|1)×(2|1) matrix".into()).into());
        }
        Ok(SpGL21 { mat })
    }

    /// Builds `L` from its named entries.
    #[allow(clippy::too_many_arguments)]
    pub fn from_entries(
        a: GrassmannNumber,
        b: GrassmannNumber,
        c: GrassmannNumber,
        d: GrassmannNumber,
        e: GrassmannNumber,
        alpha: GrassmannNumber,
        beta: GrassmannNumber,
        gamma: GrassmannNumber,
        delta: GrassmannNumber,
    ) -> Result<Self, ConfError> {
        let mat = SuperMatrix::new(DIM, DIM, Parity::Even, vec![vec![a, c, gamma], vec![b, d, delta], vec![alpha, beta, e]])?;
        Self::new(mat)
    }

    pub fn identity(s: usize) -> Self {
        SpGL21 { mat: SuperMatrix::identity(DIM, s) }
    }

    /// `Ξ₋ = diag(−1, −1, 1)`, projectively the reflection `θ ↦ −θ`.
    pub fn xi_minus(s: usize) -> Self {
        SpGL21 { mat: SuperMatrix::odd_reflection(DIM, s) }
    }

    /// Lift of the Möbius map `z ↦ (a z + b)/(c z + d)`; the data is rescaled
    /// to unit determinant with the principal square root.
    pub fn mobius_lift(a: Complex, b: Complex, c: Complex, d: Complex, s: usize) -> Result<Self, ConfError> {
        let det = a * d - b * c;
        if det.norm() <= crate::grassmann::invert_epsilon() {
            return Err(ConfError::Degenerate);
        }
        let k = det.sqrt().inv();
        let sc = |x: Complex| GrassmannNumber::scalar(s, x * k);
        let z = || GrassmannNumber::zero(s);
        Self::from_entries(sc(a), sc(b), sc(c), sc(d), GrassmannNumber::one(s), z(), z(), z(), z())
    }

    /// Maps `0 ↦ 1_{−iε}`, `1_ε ↦ 0`, `∞ ↦ ∞`.
    ///
    /// Post-composing with [`SpGL21::xi_minus`] turns the image of `0` into `1_{iε}`.
    pub fn swap_zero_one(eps: &GrassmannNumber) -> Result<Self, ConfError> {
        let s = eps.num_generators();
        let i = |x: f64| GrassmannNumber::scalar(s, Complex::new(0.0, x));
        let ie = eps.scale(Complex::new(0.0, 1.0));
        Self::from_entries(
            i(1.0),
            i(-1.0),
            GrassmannNumber::zero(s),
            i(-1.0),
            GrassmannNumber::one(s),
            -&ie,
            GrassmannNumber::zero(s),
            GrassmannNumber::zero(s),
            -eps,
        )
    }

    /// Maps `0 ↦ 0`, `1_ε ↦ ∞`, `∞ ↦ 1_{−iε}`.
    pub fn swap_one_infinity(eps: &GrassmannNumber) -> Result<Self, ConfError> {
        let s = eps.num_generators();
        let i = |x: f64| GrassmannNumber::scalar(s, Complex::new(0.0, x));
        let ie = eps.scale(Complex::new(0.0, 1.0));
        Self::from_entries(
            i(-1.0),
            GrassmannNumber::zero(s),
            i(-1.0),
            i(1.0),
            GrassmannNumber::one(s),
            GrassmannNumber::zero(s),
            ie,
            -eps,
            GrassmannNumber::zero(s),
        )
    }

    pub fn matrix(&self) -> &SuperMatrix {
        &self.mat
    }

    pub fn num_generators(&self) -> usize {
        self.mat.num_generators()
    }

    pub fn a(&self) -> &GrassmannNumber {
        self.mat.get(0, 0)
    }
    pub fn c(&self) -> &GrassmannNumber {
        self.mat.get(0, 1)
    }
    pub fn gamma(&self) -> &GrassmannNumber {
        self.mat.get(0, 2)
    }
    pub fn b(&self) -> &GrassmannNumber {
        self.mat.get(1, 0)
    }
    pub fn d(&self) -> &GrassmannNumber {
        self.mat.get(1, 1)
    }
    pub fn delta(&self) -> &GrassmannNumber {
        self.mat.get(1, 2)
    }
    pub fn alpha(&self) -> &GrassmannNumber {
        self.mat.get(2, 0)
    }
    pub fn beta(&self) -> &GrassmannNumber {
        self.mat.get(2, 1)
    }
    pub fn e(&self) -> &GrassmannNumber {
        self.mat.get(2, 2)
    }

    pub fn residuals(&self) -> RelationResiduals {
        let (a, b, c, d, e) = (self.a(), self.b(), self.c(), self.d(), self.e());
        let (al, be, ga, de) = (self.alpha(), self.beta(), self.gamma(), self.delta());
        let one = GrassmannNumber::one(self.num_generators());
        let r1 = a * d - b * c - ga * de - &one;
        let r2 = a * be - c * al + e * ga;
        let r3 = e * e + (al * be) * 2.0 - &one;
        let r4 = b * be - d * al + e * de;
        RelationResiduals([r1.norm_inf(), r2.norm_inf(), r3.norm_inf(), r4.norm_inf()])
    }

    pub fn is_valid(&self) -> bool {
        self.residuals().max() <= RELATION_TOLERANCE
    }

    pub fn act(&self, p: &ProjectivePoint) -> ProjectivePoint {
        let x = [&p.z1, &p.z2, &p.theta];
        let col = |j: usize| {
            let mut acc = GrassmannNumber::zero(p.num_generators());
            for (i, xi) in x.iter().enumerate() {
                acc += &(*xi * self.mat.get(i, j));
            }
            acc
        };
        ProjectivePoint { z1: col(0), z2: col(1), theta: col(2) }
    }

    /// Action in the first chart: `(z, θ) ↦ (z̃, θ̃)`.
    pub fn act_chart1(
        &self,
        z: &GrassmannNumber,
        theta: &GrassmannNumber,
    ) -> Result<(GrassmannNumber, GrassmannNumber), ConfError> {
        let num = self.a() * z + self.b() + theta * self.alpha();
        let den = self.c() * z + self.d() + theta * self.beta();
        let th = self.gamma() * z + self.delta() + theta * self.e();
        let inv = den.invert().map_err(|_| ConfError::LeftChart)?;
        Ok((&num * &inv, &th * &inv))
    }

    /// Action in the second chart `(w, φ) = (1/z, θ/z)`.
    pub fn act_chart2(
        &self,
        w: &GrassmannNumber,
        phi: &GrassmannNumber,
    ) -> Result<(GrassmannNumber, GrassmannNumber), ConfError> {
        let z1 = self.a() + self.b() * w + phi * self.alpha();
        let z2 = self.c() + self.d() * w + phi * self.beta();
        let th = self.gamma() + self.delta() * w + phi * self.e();
        let inv = z1.invert().map_err(|_| ConfError::LeftChart)?;
        Ok((&z2 * &inv, &th * &inv))
    }

    /// `outer ∘ inner`: first `inner`, then `outer`.
    pub fn compose(outer: &SpGL21, inner: &SpGL21) -> Result<SpGL21, ConfError> {
        let mat = inner.mat.matmul(&outer.mat)?;
        SpGL21::new(mat)
    }

    pub fn inverse(&self) -> Result<SpGL21, ConfError> {
        SpGL21::new(self.mat.inverse()?)
    }

    /// `−L`, which acts exactly as `L`.
    pub fn negate(&self) -> SpGL21 {
        let minus = GrassmannNumber::real(self.num_generators(), -1.0);
        SpGL21 { mat: self.mat.scale(&minus).expect("scalar is even") }
    }

    /// Reduced Möbius data `(a, b, c, d)` of the body matrix.
    pub fn body_mobius(&self) -> [Complex; 4] {
        [self.a().body(), self.b().body(), self.c().body(), self.d().body()]
    }

    pub fn extend_generators(&self, s: usize) -> Result<SpGL21, ConfError> {
        let rows = self
            .mat
            .entries()
            .iter()
            .map(|r| r.iter().map(|e| e.extend_generators(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SpGL21 { mat: SuperMatrix::new(DIM, DIM, Parity::Even, rows)? })
    }

    /// Largest entry difference up to an overall sign.
    pub fn distance_up_to_sign(&self, other: &SpGL21) -> f64 {
        self.mat.max_abs_diff(&other.mat).min(self.negate().mat.max_abs_diff(&other.mat))
    }
}

impl fmt::Debug for SpGL21 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpGL21 {:?}", self.mat)
    }
}

#[derive(Serialize, Deserialize)]
struct SpGL21Json {
    entries: Vec<Vec<GrassmannNumber>>,
    #[serde(default)]
    verified: bool,
}

impl Serialize for SpGL21 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SpGL21Json { entries: self.mat.entries().to_vec(), verified: self.is_valid() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpGL21 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = SpGL21Json::deserialize(deserializer)?;
        let mat = SuperMatrix::new(DIM, DIM, Parity::Even, raw.entries).map_err(serde::de::Error::custom)?;
        SpGL21::new(mat).map_err(serde::de::Error::custom)
    }
}

/// Sign choice in the three-point construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThreePointSolution {
    pub map: SpGL21,
    pub epsilon: GrassmannNumber,
    pub branch: Branch,
}

/// The standard triple `(0, 1_ε, ∞)`.
pub fn standard_triple(eps: &GrassmannNumber) -> Result<[ProjectivePoint; 3], ConfError> {
    let s = eps.num_generators();
    Ok([ProjectivePoint::zero(s), ProjectivePoint::one_eps(eps)?, ProjectivePoint::infinity(s)])
}

/// Checks that the reduced points are pairwise distinct in `ℙ¹`.
pub fn check_distinct(points: &[&ProjectivePoint]) -> Result<(), ConfError> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].chordal_distance(points[j]) <= DISTINCT_EPSILON {
                return Err(ConfError::NotDistinct(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// Finds `L` and `ε` with `L·0 = p1`, `L·1_ε = p2`, `L·∞ = p3`.
///
/// Writing the images of `0` and `∞` as `λ1·p1` and `λ3·p3`, the first
/// relation forces `λ1 λ3 = 1/D` with `D = p31 p12 − p11 p32 − π3 π1`, which
/// fixes `α`, `β`, `e` outright. The image of `1_ε` then gives `ε` and two
/// equations that are linear in `λ1/λ2` and `λ3/λ2`; `λ2` is the remaining
/// square root. The two branches differ by `Ξ₋` and `ε ↦ −ε`.
pub fn solve_three_points(
    p1: &ProjectivePoint,
    p2: &ProjectivePoint,
    p3: &ProjectivePoint,
    branch: Branch,
) -> Result<ThreePointSolution, ConfError> {
    let s = p1.num_generators();
    if p2.num_generators() != s || p3.num_generators() != s {
        return Err(GrassmannError::ContextMismatch { left: s, right: p2.num_generators().max(p3.num_generators()) }
            .into());
    }
    check_distinct(&[p1, p2, p3])?;
    let one = GrassmannNumber::one(s);
    let sigma = branch.sign();
    let (p11, p12, pi1) = (&p1.z1, &p1.z2, &p1.theta);
    let (p21, p22, pi2) = (&p2.z1, &p2.z2, &p2.theta);
    let (p31, p32, pi3) = (&p3.z1, &p3.z2, &p3.theta);

    let d = p31 * p12 - p11 * p32 - pi3 * pi1;
    let p = d.invert()?;
    let pp = &p * &(pi3 * pi1);
    let alpha = (&p * &(p31 * pi1 - p11 * pi3)) * sigma;
    let beta = (&p * &(p32 * pi1 - p12 * pi3)) * sigma;
    let e = (&one - &pp) * sigma;
    let k = (&one + &pp) * sigma;
    let ka = &k * &alpha;
    let kb = &k * &beta;

    let a11 = p11 - &(pi1 * &ka);
    let a31 = p31 - &(pi3 * &ka);
    let b1 = p21 - &(pi2 * &ka);
    let a12 = p12 - &(pi1 * &kb);
    let a32 = p32 - &(pi3 * &kb);
    let b2 = p22 - &(pi2 * &kb);
    let det = &a11 * &a32 - &a31 * &a12;
    let det_inv = det.invert()?;
    let u1 = (&b1 * &a32 - &a31 * &b2) * &det_inv;
    let u3 = (&a11 * &b2 - &b1 * &a12) * &det_inv;
    let lambda2 = (&p * &(&u1 * &u3).invert()?).sqrt_even()?;
    let lambda1 = &lambda2 * &u1;
    let lambda3 = &lambda2 * &u3;

    let map = SpGL21::new(SuperMatrix::new(
        DIM,
        DIM,
        Parity::Even,
        vec![
            vec![&lambda3 * p31, &lambda3 * p32, &lambda3 * pi3],
            vec![&lambda1 * p11, &lambda1 * p12, &lambda1 * pi1],
            vec![alpha, beta, e],
        ],
    )?)?;
    let epsilon = &k * &(&lambda2 * pi2 - &lambda1 * pi1 - &lambda3 * pi3);

    let images = standard_triple(&epsilon)?.map(|q| map.act(&q));
    let residual = [p1, p2, p3]
        .iter()
        .zip(images.iter())
        .map(|(target, got)| target.projective_distance(got))
        .fold(0.0, f64::max);
    if residual > RELATION_TOLERANCE {
        return Err(ConfError::Residual(residual));
    }
    Ok(ThreePointSolution { map, epsilon, branch })
}

/// The pseudoinvariant `{ε, −ε}` of a triple.
pub fn pseudoinvariant(
    p1: &ProjectivePoint,
    p2: &ProjectivePoint,
    p3: &ProjectivePoint,
) -> Result<[GrassmannNumber; 2], ConfError> {
    let sol = solve_three_points(p1, p2, p3, Branch::Plus)?;
    Ok([sol.epsilon.clone(), -&sol.epsilon])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixingClass {
    Identity,
    XiMinus,
    NotFixing,
}

/// Decides whether `L` maps `0 ↦ 0`, `1_ε ↦ 1_ε'`, `∞ ↦ ∞`, and if so whether
/// it is projectively the identity or `Ξ₋`.
pub fn classify_fixing(l: &SpGL21, eps: &GrassmannNumber, eps_prime: &GrassmannNumber) -> FixingClass {
    classify_fixing_with(l, eps, eps_prime, RELATION_TOLERANCE)
}

pub fn classify_fixing_with(l: &SpGL21, eps: &GrassmannNumber, eps_prime: &GrassmannNumber, tol: f64) -> FixingClass {
    let (Ok(src), Ok(dst)) = (standard_triple(eps), standard_triple(eps_prime)) else {
        return FixingClass::NotFixing;
    };
    if src.iter().zip(dst.iter()).any(|(x, y)| !y.projective_eq(&l.act(x), tol)) {
        return FixingClass::NotFixing;
    }
    let s = l.num_generators();
    if l.distance_up_to_sign(&SpGL21::identity(s)) <= tol {
        FixingClass::Identity
    } else if l.distance_up_to_sign(&SpGL21::xi_minus(s)) <= tol {
        FixingClass::XiMinus
    } else {
        FixingClass::NotFixing
    }
}
