//! Super geodesics on `ℝ^{m|2n}` with `Λ_s`-valued state.
//!
//! Coordinates are ordered with the `m` even slots first. A geodesic solves
//!
//! ```text
//! γ̈^A + γ̇^E γ̇^D Γ^A_{DE}(γ) = 0
//! ```
//!
//! and is integrated with classical RK4 directly over `Λ_s`. Because the
//! arithmetic is exact in the nilpotent directions, the body of the state
//! follows the ordinary geodesic of the reduced metric while each soul
//! component follows the linear equation obtained by expanding in the odd
//! generators.
//!
//! Christoffel symbols can be supplied directly ([`ChristoffelSource`]) or
//! derived from a [`RestrictedMetric`] `g_even(x) ⊕ J₀`, whose even block may
//! depend on the even coordinates only and whose odd block is a constant
//! antisymmetric matrix. For that family the Koszul formula on the even
//! block gives all symbols; those with an odd index vanish.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grassmann::{GrassmannError, GrassmannNumber, Parity, SDim, MAX_GENERATORS};
use crate::superlinalg::{LinalgError, SuperMatrix};

/// States whose body leaves this box count as a blowup.
pub const BLOWUP_BOUND: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("slot {slot} of the {what} must be {expected:?}")]
    Parity { what: &'static str, slot: usize, expected: Parity },
    #[error("integration step and horizon must be finite, step > 0 and horizon ≥ 0")]
    Step,
    #[error("solution blows up near t = {t}")]
    Blowup { t: f64 },
    #[error("Christoffel symbols cannot be evaluated at t = {t}: {source}")]
    Singular { t: f64, source: Box<GeodesicError> },
    #[error("geodesic only exists up to t = {reached}, needed {needed}")]
    Domain { needed: f64, reached: f64 },
    #[error("metric is outside the supported family: {0}")]
    Metric(String),
}

/// `table[A][D][E] = Γ^A_{DE}`.
pub type Christoffels = Vec<Vec<Vec<GrassmannNumber>>>;

/// Christoffel symbols `Γ^A_{DE}(x)` on `ℝ^{m|2n}`.
///
/// Implementations must satisfy the graded symmetry
/// `Γ^A_{DE} = (−1)^{|D||E|} Γ^A_{ED}`, and `Γ^A_{DE}` must have parity
/// `|A| + |D| + |E|`; [`symmetry_residual`] spot-checks both.
pub trait ChristoffelSource {
    fn dims(&self) -> SDim;
    fn name(&self) -> String;
    /// Symbols at the point `x` (all `m + 2n` coordinates; implementations
    /// in this module only read the even ones).
    fn christoffel(&self, x: &[GrassmannNumber]) -> Result<Christoffels, GeodesicError>;
}

/// An even metric `m_{AB}(x)` on `ℝ^{m|2n}` together with its
/// Christoffel symbols.
pub trait Metric: ChristoffelSource {
    fn metric(&self, x: &[GrassmannNumber]) -> Result<Vec<Vec<GrassmannNumber>>, GeodesicError>;
}

fn total(d: SDim) -> usize {
    (d.even + d.odd) as usize
}

fn slot_parity(d: SDim, i: usize) -> Parity {
    Parity::from_odd(i as i64 >= d.even)
}

fn zero_table(n: usize, s: usize) -> Christoffels {
    vec![vec![vec![GrassmannNumber::zero(s); n]; n]; n]
}

fn generators_of(x: &[GrassmannNumber]) -> usize {
    x.first().map(|g| g.num_generators()).unwrap_or(0)
}

/// The standard constant odd block: `[[0, 1], [−1, 0]]` on each pair.
pub fn standard_odd_block(pairs: usize) -> Vec<Vec<f64>> {
    let mut j = vec![vec![0.0; 2 * pairs]; 2 * pairs];
    for i in 0..pairs {
        j[2 * i][2 * i + 1] = 1.0;
        j[2 * i + 1][2 * i] = -1.0;
    }
    j
}

fn block_metric(even: Vec<Vec<GrassmannNumber>>, odd: &[Vec<f64>], s: usize) -> Vec<Vec<GrassmannNumber>> {
    let m = even.len();
    let n = m + odd.len();
    let mut out = vec![vec![GrassmannNumber::zero(s); n]; n];
    for (i, row) in even.into_iter().enumerate() {
        for (j, g) in row.into_iter().enumerate() {
            out[i][j] = g;
        }
    }
    for (a, row) in odd.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            out[m + a][m + b] = GrassmannNumber::real(s, v);
        }
    }
    out
}

/// Flat `ℝ^{m|2n}`: all symbols vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flat {
    pub even: usize,
    pub odd_pairs: usize,
}

impl ChristoffelSource for Flat {
    fn dims(&self) -> SDim {
        SDim::new(self.even as i64, 2 * self.odd_pairs as i64)
    }

    fn name(&self) -> String {
        format!("flat {}", self.dims())
    }

    fn christoffel(&self, x: &[GrassmannNumber]) -> Result<Christoffels, GeodesicError> {
        Ok(zero_table(total(self.dims()), generators_of(x)))
    }
}

impl Metric for Flat {
    fn metric(&self, x: &[GrassmannNumber]) -> Result<Vec<Vec<GrassmannNumber>>, GeodesicError> {
        let s = generators_of(x);
        let even = (0..self.even)
            .map(|i| (0..self.even).map(|j| GrassmannNumber::real(s, if i == j { 1.0 } else { 0.0 })).collect())
            .collect();
        Ok(block_metric(even, &standard_odd_block(self.odd_pairs), s))
    }
}

/// Unit 2-sphere in coordinates `(ϑ, φ)` with metric `dϑ² + sin²ϑ dφ²`,
/// times a flat odd part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sphere {
    pub odd_pairs: usize,
}

impl ChristoffelSource for Sphere {
    fn dims(&self) -> SDim {
        SDim::new(2, 2 * self.odd_pairs as i64)
    }

    fn name(&self) -> String {
        format!("sphere {}", self.dims())
    }

    fn christoffel(&self, x: &[GrassmannNumber]) -> Result<Christoffels, GeodesicError> {
        let s = generators_of(x);
        let mut t = zero_table(total(self.dims()), s);
        let (sin, cos) = (x[0].sin()?, x[0].cos()?);
        t[0][1][1] = -(&sin * &cos);
        let cot = &cos * &sin.invert()?;
        t[1][0][1] = cot.clone();
        t[1][1][0] = cot;
        Ok(t)
    }
}

impl Metric for Sphere {
    fn metric(&self, x: &[GrassmannNumber]) -> Result<Vec<Vec<GrassmannNumber>>, GeodesicError> {
        let s = generators_of(x);
        let sin = x[0].sin()?;
        let even = vec![
            vec![GrassmannNumber::one(s), GrassmannNumber::zero(s)],
            vec![GrassmannNumber::zero(s), &sin * &sin],
        ];
        Ok(block_metric(even, &standard_odd_block(self.odd_pairs), s))
    }
}

/// Upper half-plane `(x, y)`, `y > 0`, with metric `(dx² + dy²)/y²`, times a
/// flat odd part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperbolicHalfPlane {
    pub odd_pairs: usize,
}

impl ChristoffelSource for HyperbolicHalfPlane {
    fn dims(&self) -> SDim {
        SDim::new(2, 2 * self.odd_pairs as i64)
    }

    fn name(&self) -> String {
        format!("hyperbolic {}", self.dims())
    }

    fn christoffel(&self, x: &[GrassmannNumber]) -> Result<Christoffels, GeodesicError> {
        let s = generators_of(x);
        let mut t = zero_table(total(self.dims()), s);
        let inv = x[1].invert()?;
        t[0][0][1] = -&inv;
        t[0][1][0] = -&inv;
        t[1][0][0] = inv.clone();
        t[1][1][1] = -&inv;
        Ok(t)
    }
}

impl Metric for HyperbolicHalfPlane {
    fn metric(&self, x: &[GrassmannNumber]) -> Result<Vec<Vec<GrassmannNumber>>, GeodesicError> {
        let s = generators_of(x);
        let inv = x[1].invert()?;
        let w = &inv * &inv;
        let even = vec![vec![w.clone(), GrassmannNumber::zero(s)], vec![GrassmannNumber::zero(s), w]];
        Ok(block_metric(even, &standard_odd_block(self.odd_pairs), s))
    }
}

/// Even block of a restricted metric as a function of the even coordinates.
pub type EvenBlock = dyn Fn(&[GrassmannNumber]) -> Result<Vec<Vec<GrassmannNumber>>, GrassmannError> + Send + Sync;

/// A metric `g_even(x) ⊕ J₀`.
///
/// Derivatives of the even block are taken by evaluating it at
/// `x + η' η'' e_l` over two extra generators, so the closure must be built
/// from `Λ_s` operations only.
#[derive(Clone)]
pub struct RestrictedMetric {
    name: String,
    even_dim: usize,
    even: Arc<EvenBlock>,
    odd_block: Vec<Vec<f64>>,
}

impl fmt::Debug for RestrictedMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RestrictedMetric")
            .field("name", &self.name)
            .field("even_dim", &self.even_dim)
            .field("odd_block", &self.odd_block)
            .finish()
    }
}

fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let Some(p) = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else { return det };
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

impl RestrictedMetric {
    pub fn new(
        name: impl Into<String>,
        even_dim: usize,
        even: Arc<EvenBlock>,
        odd_block: Vec<Vec<f64>>,
    ) -> Result<Self, GeodesicError> {
        let k = odd_block.len();
        if !k.is_multiple_of(2) {
            return Err(GeodesicError::Metric(format!("odd block has odd size {k}")));
        }
        if odd_block.iter().any(|r| r.len() != k) {
            return Err(GeodesicError::Metric("odd block is not square".into()));
        }
        for a in 0..k {
            for b in 0..k {
                if (odd_block[a][b] + odd_block[b][a]).abs() > 1e-12 {
                    return Err(GeodesicError::Metric(format!("odd block is not antisymmetric at ({a},{b})")));
                }
            }
        }
        if k > 0 && determinant(odd_block.clone()).abs() < 1e-12 {
            return Err(GeodesicError::Metric("odd block is degenerate".into()));
        }
        Ok(RestrictedMetric { name: name.into(), even_dim, even, odd_block })
    }

    pub fn flat(even_dim: usize, odd_pairs: usize) -> Self {
        let even = Arc::new(move |x: &[GrassmannNumber]| {
            let s = generators_of(x);
            Ok((0..even_dim)
                .map(|i| (0..even_dim).map(|j| GrassmannNumber::real(s, if i == j { 1.0 } else { 0.0 })).collect())
                .collect())
        });
        RestrictedMetric { name: "flat".into(), even_dim, even, odd_block: standard_odd_block(odd_pairs) }
    }

    pub fn round_sphere(odd_pairs: usize) -> Self {
        let even = Arc::new(|x: &[GrassmannNumber]| {
            let s = generators_of(x);
            let sin = x[0].sin()?;
            Ok(vec![vec![GrassmannNumber::one(s), GrassmannNumber::zero(s)], vec![GrassmannNumber::zero(s), &sin * &sin]])
        });
        RestrictedMetric { name: "sphere".into(), even_dim: 2, even, odd_block: standard_odd_block(odd_pairs) }
    }

    pub fn hyperbolic_half_plane(odd_pairs: usize) -> Self {
        let even = Arc::new(|x: &[GrassmannNumber]| {
            let s = generators_of(x);
            let inv = x[1].invert()?;
            let w = &inv * &inv;
            Ok(vec![vec![w.clone(), GrassmannNumber::zero(s)], vec![GrassmannNumber::zero(s), w]])
        });
        RestrictedMetric { name: "hyperbolic".into(), even_dim: 2, even, odd_block: standard_odd_block(odd_pairs) }
    }

    /// Metric whose even entries are Laurent polynomials in the even
    /// coordinates.
    pub fn from_laurent(laurent: LaurentMetric) -> Result<Self, GeodesicError> {
        let m = laurent.even.len();
        if laurent.even.iter().any(|r| r.len() != m) {
            return Err(GeodesicError::Metric("even block is not square".into()));
        }
        for i in 0..m {
            for j in 0..m {
                if laurent.even[i][j] != laurent.even[j][i] {
                    return Err(GeodesicError::Metric(format!("even block is not symmetric at ({i},{j})")));
                }
                for term in &laurent.even[i][j] {
                    if term.powers.len() > m {
                        return Err(GeodesicError::Metric(format!(
                            "entry ({i},{j}) depends on {} coordinates, only the {m} even ones are allowed",
                            term.powers.len()
                        )));
                    }
                }
            }
        }
        let even_terms = laurent.even.clone();
        let even = Arc::new(move |x: &[GrassmannNumber]| {
            even_terms.iter().map(|row| row.iter().map(|p| eval_laurent(p, x)).collect()).collect()
        });
        RestrictedMetric::new(laurent.name.unwrap_or_else(|| "laurent".into()), m, even, laurent.odd_block)
    }

    pub fn even_dim(&self) -> usize {
        self.even_dim
    }

    pub fn odd_block(&self) -> &[Vec<f64>] {
        &self.odd_block
    }

    pub fn even_block(&self, x: &[GrassmannNumber]) -> Result<Vec<Vec<GrassmannNumber>>, GeodesicError> {
        check_len(x, self.even_dim, "point")?;
        let g = (self.even)(&x[..self.even_dim])?;
        if g.len() != self.even_dim || g.iter().any(|r| r.len() != self.even_dim) {
            return Err(GeodesicError::Dimension("even block has the wrong shape".into()));
        }
        Ok(g)
    }

    /// `dg[l][i][j] = ∂_l g_ij` at `x`.
    pub fn even_block_derivatives(&self, x: &[GrassmannNumber]) -> Result<Vec<Vec<Vec<GrassmannNumber>>>, GeodesicError> {
        check_len(x, self.even_dim, "point")?;
        let s = generators_of(x);
        if s + 2 > MAX_GENERATORS {
            return Err(GrassmannError::TooManyGenerators(s + 2).into());
        }
        let wide: Vec<GrassmannNumber> =
            x[..self.even_dim].iter().map(|g| g.extend_generators(s + 2)).collect::<Result<_, _>>()?;
        let delta = GrassmannNumber::monomial(s + 2, &[s + 1, s + 2], crate::grassmann::Complex::new(1.0, 0.0))?;
        let top = (1u64 << s) | (1u64 << (s + 1));
        let mut out = Vec::with_capacity(self.even_dim);
        for l in 0..self.even_dim {
            let mut shifted = wide.clone();
            shifted[l] += &delta;
            let g = (self.even)(&shifted)?;
            out.push(
                g.iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| {
                                GrassmannNumber::from_masks(
                                    s,
                                    e.terms().filter(|(m, _)| m & top == top).map(|(m, c)| (m & !top, c)),
                                )
                            })
                            .collect()
                    })
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Largest `|∂_k g_ij − Γ^l_{ki} g_lj − Γ^l_{kj} g_il|` over the even
    /// block: zero when `src` is the Levi-Civita connection of `self`.
    pub fn compatibility_residual(&self, src: &dyn ChristoffelSource, x: &[GrassmannNumber]) -> Result<f64, GeodesicError> {
        let m = self.even_dim;
        let g = self.even_block(x)?;
        let dg = self.even_block_derivatives(x)?;
        let gamma = src.christoffel(x)?;
        let mut worst: f64 = 0.0;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let mut r = dg[k][i][j].clone();
                    for l in 0..m {
                        r -= &(&gamma[l][k][i] * &g[l][j]);
                        r -= &(&gamma[l][k][j] * &g[i][l]);
                    }
                    worst = worst.max(r.norm_inf());
                }
            }
        }
        Ok(worst)
    }
}

impl ChristoffelSource for RestrictedMetric {
    fn dims(&self) -> SDim {
        SDim::new(self.even_dim as i64, self.odd_block.len() as i64)
    }

    fn name(&self) -> String {
        format!("{} {}", self.name, self.dims())
    }

    fn christoffel(&self, x: &[GrassmannNumber]) -> Result<Christoffels, GeodesicError> {
        let m = self.even_dim;
        let s = generators_of(x);
        let g = self.even_block(x)?;
        let dg = self.even_block_derivatives(x)?;
        let dim = SDim::new(m as i64, 0);
        let ginv = SuperMatrix::new(dim, dim, Parity::Even, g)?.inverse()?;
        let mut t = zero_table(total(self.dims()), s);
        for k in 0..m {
            for i in 0..m {
                for j in i..m {
                    let mut acc = GrassmannNumber::zero(s);
                    for l in 0..m {
                        let bracket = &(&dg[i][j][l] + &dg[j][i][l]) - &dg[l][i][j];
                        acc += &(ginv.get(k, l) * &bracket);
                    }
                    let acc = acc.scale_real(0.5);
                    t[k][j][i] = acc.clone();
                    t[k][i][j] = acc;
                }
            }
        }
        Ok(t)
    }
}

impl Metric for RestrictedMetric {
    fn metric(&self, x: &[GrassmannNumber]) -> Result<Vec<Vec<GrassmannNumber>>, GeodesicError> {
        Ok(block_metric(self.even_block(x)?, &self.odd_block, generators_of(x)))
    }
}

/// `coeff · Π x_i^{powers[i]}`; negative powers invert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentTerm {
    pub coeff: f64,
    #[serde(default)]
    pub powers: Vec<i32>,
}

/// JSON form of a restricted metric with Laurent-polynomial even entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentMetric {
    #[serde(default)]
    pub name: Option<String>,
    pub even: Vec<Vec<Vec<LaurentTerm>>>,
    pub odd_block: Vec<Vec<f64>>,
}

fn eval_laurent(terms: &[LaurentTerm], x: &[GrassmannNumber]) -> Result<GrassmannNumber, GrassmannError> {
    let s = generators_of(x);
    let mut out = GrassmannNumber::zero(s);
    for t in terms {
        let mut mono = GrassmannNumber::real(s, t.coeff);
        for (i, &p) in t.powers.iter().enumerate() {
            if p > 0 {
                mono = &mono * &x[i].pow(p as u32);
            } else if p < 0 {
                mono = &mono * &x[i].invert()?.pow(p.unsigned_abs());
            }
        }
        out += &mono;
    }
    Ok(out)
}

fn check_len(x: &[GrassmannNumber], n: usize, what: &str) -> Result<(), GeodesicError> {
    if x.len() < n {
        return Err(GeodesicError::Dimension(format!("{what} has {} coordinates, expected at least {n}", x.len())));
    }
    Ok(())
}

/// Largest violation of the graded symmetry and of the parity rule for
/// `Γ^A_{DE}(x)`.
pub fn symmetry_residual(src: &dyn ChristoffelSource, x: &[GrassmannNumber]) -> Result<f64, GeodesicError> {
    let d = src.dims();
    let n = total(d);
    let t = src.christoffel(x)?;
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for p in 0..n {
            for q in 0..n {
                let sign = if slot_parity(d, p) == Parity::Odd && slot_parity(d, q) == Parity::Odd { -1.0 } else { 1.0 };
                worst = worst.max((&t[a][p][q] - &t[a][q][p].scale_real(sign)).norm_inf());
                let expected = slot_parity(d, a).add(slot_parity(d, p)).add(slot_parity(d, q));
                let wrong = if expected == Parity::Even { t[a][p][q].odd_part() } else { t[a][p][q].even_part() };
                worst = worst.max(wrong.norm_inf());
            }
        }
    }
    Ok(worst)
}

/// Checks shape, generator count and slot parities of a point or velocity.
pub fn check_state(dims: SDim, x: &[GrassmannNumber], what: &'static str) -> Result<usize, GeodesicError> {
    if x.len() != total(dims) {
        return Err(GeodesicError::Dimension(format!("{what} has {} coordinates, expected {}", x.len(), total(dims))));
    }
    let s = generators_of(x);
    for (i, g) in x.iter().enumerate() {
        if g.num_generators() != s {
            return Err(GrassmannError::ContextMismatch { left: s, right: g.num_generators() }.into());
        }
        let expected = slot_parity(dims, i);
        if g.expect_parity(expected).is_err() {
            return Err(GeodesicError::Parity { what, slot: i, expected });
        }
    }
    Ok(s)
}

/// `−γ̇^E γ̇^D Γ^A_{DE}`.
fn acceleration(src: &dyn ChristoffelSource, x: &[GrassmannNumber], v: &[GrassmannNumber]) -> Result<Vec<GrassmannNumber>, GeodesicError> {
    let n = x.len();
    let t = src.christoffel(x)?;
    let s = generators_of(x);
    let mut out = vec![GrassmannNumber::zero(s); n];
    for a in 0..n {
        for d in 0..n {
            if v[d].is_zero() {
                continue;
            }
            for e in 0..n {
                if t[a][d][e].is_zero() || v[e].is_zero() {
                    continue;
                }
                out[a] -= &(&(&v[e] * &v[d]) * &t[a][d][e]);
            }
        }
    }
    Ok(out)
}

fn axpy(y: &[GrassmannNumber], a: f64, k: &[GrassmannNumber]) -> Vec<GrassmannNumber> {
    y.iter().zip(k).map(|(y, k)| y + &k.scale_real(a)).collect()
}

fn out_of_bounds(x: &[GrassmannNumber]) -> bool {
    x.iter().any(|g| !g.is_finite() || g.body().norm() > BLOWUP_BOUND)
}

type State = (Vec<GrassmannNumber>, Vec<GrassmannNumber>);

fn rk4_step(src: &dyn ChristoffelSource, x: &[GrassmannNumber], v: &[GrassmannNumber], h: f64) -> Result<State, GeodesicError> {
    let k1v = acceleration(src, x, v)?;
    let (x2, v2) = (axpy(x, h / 2.0, v), axpy(v, h / 2.0, &k1v));
    let k2v = acceleration(src, &x2, &v2)?;
    let (x3, v3) = (axpy(x, h / 2.0, &v2), axpy(v, h / 2.0, &k2v));
    let k3v = acceleration(src, &x3, &v3)?;
    let (x4, v4) = (axpy(x, h, &v3), axpy(v, h, &k3v));
    let k4v = acceleration(src, &x4, &v4)?;
    let n = x.len();
    let mut xn = Vec::with_capacity(n);
    let mut vn = Vec::with_capacity(n);
    for i in 0..n {
        let dx = &(&(&v[i] + &v2[i].scale_real(2.0)) + &v3[i].scale_real(2.0)) + &v4[i];
        let dv = &(&(&k1v[i] + &k2v[i].scale_real(2.0)) + &k3v[i].scale_real(2.0)) + &k4v[i];
        xn.push(&x[i] + &dx.scale_real(h / 6.0));
        vn.push(&v[i] + &dv.scale_real(h / 6.0));
    }
    Ok((xn, vn))
}

/// `steps` RK4 steps from `t = 0` to `t = t_end`; returns every state.
fn flow(
    src: &dyn ChristoffelSource,
    p: &[GrassmannNumber],
    v: &[GrassmannNumber],
    t_end: f64,
    steps: usize,
) -> Result<Vec<State>, GeodesicError> {
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut out = Vec::with_capacity(steps + 1);
    out.push((p.to_vec(), v.to_vec()));
    for k in 0..steps {
        let (x, u) = out.last().expect("non-empty");
        let t = k as f64 * h;
        let next = rk4_step(src, x, u, h).map_err(|e| match e {
            GeodesicError::Grassmann(_) | GeodesicError::Linalg(_) => GeodesicError::Singular { t, source: Box::new(e) },
            other => other,
        })?;
        if out_of_bounds(&next.0) || out_of_bounds(&next.1) {
            return Err(GeodesicError::Blowup { t: t + h });
        }
        out.push(next);
    }
    Ok(out)
}

fn steps_for(span: f64, step: f64) -> Result<usize, GeodesicError> {
    if !(step > 0.0) || !step.is_finite() || !span.is_finite() || span < 0.0 {
        return Err(GeodesicError::Step);
    }
    Ok((span / step - 1e-9).ceil().max(0.0) as usize)
}

/// A sampled geodesic `γ_{p,v}` on `[−T, T]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicSolution {
    pub source: String,
    pub dims: SDim,
    pub p: Vec<GrassmannNumber>,
    pub v: Vec<GrassmannNumber>,
    /// Step actually used: `T` divided by a whole number of steps.
    pub step: f64,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<GrassmannNumber>>,
    pub velocities: Vec<Vec<GrassmannNumber>>,
}

impl GeodesicSolution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the sample closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Body of every position, one row per sample.
    pub fn body_trajectory(&self) -> Vec<Vec<f64>> {
        self.positions.iter().map(|x| x.iter().map(|g| g.body().re).collect()).collect()
    }

    /// Largest `|γ̈ + Γ(γ̇, γ̇)|` at interior samples, with `γ̈` from central
    /// differences of the velocities.
    pub fn ode_residual(&self, src: &dyn ChristoffelSource) -> Result<f64, GeodesicError> {
        let mut worst: f64 = 0.0;
        for i in 1..self.len().saturating_sub(1) {
            let acc = acceleration(src, &self.positions[i], &self.velocities[i])?;
            for a in 0..acc.len() {
                let diff = (&self.velocities[i + 1][a] - &self.velocities[i - 1][a]).scale_real(1.0 / (2.0 * self.step));
                worst = worst.max((&diff - &acc[a]).norm_inf());
            }
        }
        Ok(worst)
    }
}

/// Integrates `γ_{p,v}` forward and backward over `[−T, T]`.
pub fn integrate_geodesic(
    src: &dyn ChristoffelSource,
    p: &[GrassmannNumber],
    v: &[GrassmannNumber],
    t_max: f64,
    step: f64,
) -> Result<GeodesicSolution, GeodesicError> {
    let dims = src.dims();
    let s = check_state(dims, p, "point")?;
    if check_state(dims, v, "velocity")? != s {
        return Err(GrassmannError::ContextMismatch { left: s, right: generators_of(v) }.into());
    }
    let n = steps_for(t_max, step)?;
    let h = if n == 0 { 0.0 } else { t_max / n as f64 };
    let forward = flow(src, p, v, t_max, n)?;
    let backward = flow(src, p, v, -t_max, n)?;
    let mut times = Vec::with_capacity(2 * n + 1);
    let mut positions = Vec::with_capacity(2 * n + 1);
    let mut velocities = Vec::with_capacity(2 * n + 1);
    for (k, (x, u)) in backward.into_iter().enumerate().skip(1).rev() {
        times.push(-(k as f64) * h);
        positions.push(x);
        velocities.push(u);
    }
    for (k, (x, u)) in forward.into_iter().enumerate() {
        times.push(k as f64 * h);
        positions.push(x);
        velocities.push(u);
    }
    Ok(GeodesicSolution { source: src.name(), dims, p: p.to_vec(), v: v.to_vec(), step: h, times, positions, velocities })
}

/// `m(γ̇, γ̇) = γ̇^A m_{AB} γ̇^B` at every sample.
pub fn speed_norm(sol: &GeodesicSolution, metric: &dyn Metric) -> Result<Vec<GrassmannNumber>, GeodesicError> {
    if metric.dims() != sol.dims {
        return Err(GeodesicError::Dimension(format!("metric on {} for a geodesic on {}", metric.dims(), sol.dims)));
    }
    sol.positions
        .iter()
        .zip(&sol.velocities)
        .map(|(x, u)| {
            let g = metric.metric(x)?;
            let mut out = GrassmannNumber::zero(generators_of(x));
            for a in 0..u.len() {
                for b in 0..u.len() {
                    if !g[a][b].is_zero() {
                        out += &(&(&u[a] * &g[a][b]) * &u[b]);
                    }
                }
            }
            Ok(out)
        })
        .collect()
}

fn endpoint(
    src: &dyn ChristoffelSource,
    p: &[GrassmannNumber],
    v: &[GrassmannNumber],
    t: f64,
    steps: usize,
) -> Result<Vec<GrassmannNumber>, GeodesicError> {
    Ok(flow(src, p, v, t, steps)?.pop().expect("non-empty").0)
}

/// `max |γ_{p,λv}(t) − γ_{p,v}(λt)|`, both sides with the same number of
/// steps so that the effective steps match.
pub fn rescale_check(
    src: &dyn ChristoffelSource,
    p: &[GrassmannNumber],
    v: &[GrassmannNumber],
    lambda: f64,
    t: f64,
    step: f64,
) -> Result<f64, GeodesicError> {
    let dims = src.dims();
    check_state(dims, p, "point")?;
    check_state(dims, v, "velocity")?;
    if !lambda.is_finite() || !t.is_finite() {
        return Err(GeodesicError::Step);
    }
    let n = steps_for(t.abs().max((lambda * t).abs()), step)?.max(1);
    let scaled: Vec<GrassmannNumber> = v.iter().map(|g| g.scale_real(lambda)).collect();
    let lhs = endpoint(src, p, &scaled, t, n)?;
    let rhs = endpoint(src, p, v, lambda * t, n)?;
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max))
}

/// `exp_p(v) = γ_{p,v}(1)`.
pub fn exp_map(
    src: &dyn ChristoffelSource,
    p: &[GrassmannNumber],
    v: &[GrassmannNumber],
    step: f64,
) -> Result<Vec<GrassmannNumber>, GeodesicError> {
    let dims = src.dims();
    check_state(dims, p, "point")?;
    check_state(dims, v, "velocity")?;
    let n = steps_for(1.0, step)?.max(1);
    endpoint(src, p, v, 1.0, n).map_err(|e| match e {
        GeodesicError::Blowup { t } => GeodesicError::Domain { needed: 1.0, reached: t },
        GeodesicError::Singular { t, .. } => GeodesicError::Domain { needed: 1.0, reached: t },
        other => other,
    })
}

/// Largest deviation of `(exp_p(h·e_A) − p)/h` from `e_A` over all even
/// directions, and of `(exp_p(h·η_j·e_A) − p)/h` from `η_j·e_A` over all
/// odd directions and generators.
pub fn exp_differential_check(
    src: &dyn ChristoffelSource,
    p: &[GrassmannNumber],
    h: f64,
    step: f64,
) -> Result<f64, GeodesicError> {
    let dims = src.dims();
    let s = check_state(dims, p, "point")?;
    if !(h != 0.0) || !h.is_finite() {
        return Err(GeodesicError::Step);
    }
    let n = total(dims);
    let mut probes: Vec<(usize, GrassmannNumber)> = Vec::new();
    for a in 0..n {
        if slot_parity(dims, a) == Parity::Even {
            probes.push((a, GrassmannNumber::one(s)));
        } else {
            for j in 1..=s {
                probes.push((a, GrassmannNumber::generator(s, j)?));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (a, coeff) in probes {
        let mut v = vec![GrassmannNumber::zero(s); n];
        v[a] = coeff.scale_real(h);
        let q = exp_map(src, p, &v, step)?;
        for b in 0..n {
            let quotient = (&q[b] - &p[b]).scale_real(1.0 / h);
            let expected = if a == b { coeff.clone() } else { GrassmannNumber::zero(s) };
            worst = worst.max(quotient.max_abs_diff(&expected));
        }
    }
    Ok(worst)
}
