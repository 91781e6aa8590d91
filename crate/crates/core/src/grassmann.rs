//! Complexified Grassmann algebra `Λ_s ⊗ ℂ` on `s` anticommuting generators.
//!
//! A [`GrassmannNumber`] is a finite sum of monomials `c · η_{i1} η_{i2} ⋯ η_{ir}`
//! with `i1 < i2 < ⋯ < ir`. Monomials are stored as 64-bit generator sets
//! (bit `i - 1` stands for `η_i`), so at most [`MAX_GENERATORS`] generators are
//! supported. Every operation returns a value in canonical sparse form: no
//! coefficient with magnitude below the pruning epsilon is kept.
//!
//! These are the scalars of the whole crate: coordinates of points, matrix
//! entries and geodesic states are all `GrassmannNumber`s.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Complex = Complex64;

/// Largest supported number of generators.
pub const MAX_GENERATORS: usize = 62;

pub const DEFAULT_PRUNE_EPSILON: f64 = 1e-14;
pub const DEFAULT_INVERT_EPSILON: f64 = 1e-10;

static PRUNE_EPSILON: AtomicU64 = AtomicU64::new(0x3D06_849B_86A1_2B9B); // 1e-14
static INVERT_EPSILON: AtomicU64 = AtomicU64::new(0x3DDB_7CDF_D9D7_BDBB); // 1e-10

/// Coefficients with magnitude below this value are dropped.
pub fn prune_epsilon() -> f64 {
    f64::from_bits(PRUNE_EPSILON.load(Ordering::Relaxed))
}

/// Bodies with magnitude at or below this value count as non-invertible.
pub fn invert_epsilon() -> f64 {
    f64::from_bits(INVERT_EPSILON.load(Ordering::Relaxed))
}

/// Sets the process-wide pruning epsilon. Non-positive values are ignored.
pub fn set_prune_epsilon(eps: f64) {
    if eps > 0.0 && eps.is_finite() {
        PRUNE_EPSILON.store(eps.to_bits(), Ordering::Relaxed);
    }
}

/// Sets the process-wide invertibility epsilon. Non-positive values are ignored.
pub fn set_invert_epsilon(eps: f64) {
    if eps > 0.0 && eps.is_finite() {
        INVERT_EPSILON.store(eps.to_bits(), Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrassmannError {
    #[error("generator context mismatch: Λ_{left} vs Λ_{right}")]
    ContextMismatch { left: usize, right: usize },
    #[error("at most {MAX_GENERATORS} generators are supported, got {0}")]
    TooManyGenerators(usize),
    #[error("generator index {index} outside 1..={generators}")]
    GeneratorOutOfRange { index: usize, generators: usize },
    #[error("generator indices must be strictly ascending, got {0:?}")]
    UnsortedIndices(Vec<usize>),
    #[error("element is not invertible: body magnitude {0:e} is below the invertibility threshold")]
    ZeroBody(f64),
    #[error("expected {expected} element, found {found}")]
    Parity { expected: Parity, found: Parity },
    #[error("non-finite coefficient")]
    NonFinite,
}

/// Z₂-degree of a Grassmann number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    /// Sum of two homogeneous degrees. `Mixed` absorbs everything.
    pub fn add(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Mixed, _) | (_, Parity::Mixed) => Parity::Mixed,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    pub fn from_odd(odd: bool) -> Parity {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        })
    }
}

/// Super dimension `even|odd`.
///
/// Components can go negative in intermediate arithmetic; the dimension
/// formulas in [`crate::moduli::dims`] reject negative results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SDim {
    pub even: i64,
    pub odd: i64,
}

impl SDim {
    pub const fn new(even: i64, odd: i64) -> Self {
        SDim { even, odd }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.even >= 0 && self.odd >= 0
    }

    pub fn total(&self) -> i64 {
        self.even + self.odd
    }
}

impl Add for SDim {
    type Output = SDim;
    fn add(self, rhs: SDim) -> SDim {
        SDim::new(self.even + rhs.even, self.odd + rhs.odd)
    }
}

impl Sub for SDim {
    type Output = SDim;
    fn sub(self, rhs: SDim) -> SDim {
        SDim::new(self.even - rhs.even, self.odd - rhs.odd)
    }
}

impl Mul<SDim> for i64 {
    type Output = SDim;
    fn mul(self, rhs: SDim) -> SDim {
        SDim::new(self * rhs.even, self * rhs.odd)
    }
}

impl std::iter::Sum for SDim {
    fn sum<I: Iterator<Item = SDim>>(iter: I) -> SDim {
        iter.fold(SDim::default(), |a, b| a + b)
    }
}

impl fmt::Display for SDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.even, self.odd)
    }
}

/// Sign of the product `η_S · η_T` for disjoint ascending generator sets:
/// `(-1)^{#{(i, j) : i ∈ S, j ∈ T, i > j}}`.
#[inline]
fn merge_sign(s: u64, t: u64) -> f64 {
    let mut swaps = 0u32;
    let mut rest = t;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        // generators of `s` strictly above j
        let above = if j >= 63 { 0 } else { s >> (j + 1) };
        swaps += above.count_ones();
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn mask_from_indices(indices: &[usize], generators: usize) -> Result<u64, GrassmannError> {
    let mut mask = 0u64;
    let mut last = 0usize;
    for &i in indices {
        if i == 0 || i > generators {
            return Err(GrassmannError::GeneratorOutOfRange { index: i, generators });
        }
        if i <= last {
            return Err(GrassmannError::UnsortedIndices(indices.to_vec()));
        }
        last = i;
        mask |= 1u64 << (i - 1);
    }
    Ok(mask)
}

/// Ascending 1-based generator indices of a monomial mask.
pub fn mask_indices(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize + 1);
        rest &= rest - 1;
    }
    out
}

/// An element of `Λ_s ⊗ ℂ`.
#[derive(Clone, PartialEq)]
pub struct GrassmannNumber {
    generators: usize,
    terms: BTreeMap<u64, Complex>,
}

impl GrassmannNumber {
    pub fn zero(generators: usize) -> Self {
        assert!(generators <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators");
        GrassmannNumber { generators, terms: BTreeMap::new() }
    }

    pub fn one(generators: usize) -> Self {
        Self::scalar(generators, Complex::new(1.0, 0.0))
    }

    pub fn scalar(generators: usize, value: Complex) -> Self {
        let mut out = Self::zero(generators);
        out.insert(0, value);
        out
    }

    pub fn real(generators: usize, value: f64) -> Self {
        Self::scalar(generators, Complex::new(value, 0.0))
    }

    /// The generator `η_index` (1-based).
    pub fn generator(generators: usize, index: usize) -> Result<Self, GrassmannError> {
        Self::monomial(generators, &[index], Complex::new(1.0, 0.0))
    }

    /// `coeff · η_{i1} ⋯ η_{ir}` for strictly ascending indices.
    pub fn monomial(generators: usize, indices: &[usize], coeff: Complex) -> Result<Self, GrassmannError> {
        if generators > MAX_GENERATORS {
            return Err(GrassmannError::TooManyGenerators(generators));
        }
        let mask = mask_from_indices(indices, generators)?;
        let mut out = Self::zero(generators);
        out.insert(mask, coeff);
        Ok(out)
    }

    /// Builds an element from `(indices, coefficient)` pairs. Repeated
    /// monomials are summed.
    pub fn from_terms<I, V>(generators: usize, terms: I) -> Result<Self, GrassmannError>
    where
        I: IntoIterator<Item = (V, Complex)>,
        V: AsRef<[usize]>,
    {
        if generators > MAX_GENERATORS {
            return Err(GrassmannError::TooManyGenerators(generators));
        }
        let mut acc: BTreeMap<u64, Complex> = BTreeMap::new();
        for (indices, c) in terms {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(GrassmannError::NonFinite);
            }
            let mask = mask_from_indices(indices.as_ref(), generators)?;
            *acc.entry(mask).or_default() += c;
        }
        Ok(Self::from_masks(generators, acc))
    }

    /// Builds an element from raw generator masks. Bits above `generators`
    /// are a programming error.
    pub fn from_masks<I: IntoIterator<Item = (u64, Complex)>>(generators: usize, terms: I) -> Self {
        let mut out = Self::zero(generators);
        let limit = if generators >= 64 { u64::MAX } else { (1u64 << generators) - 1 };
        for (mask, c) in terms {
            debug_assert!(mask & !limit == 0, "mask outside generator context");
            *out.terms.entry(mask).or_default() += c;
        }
        out.prune();
        out
    }

    fn insert(&mut self, mask: u64, c: Complex) {
        if c.norm() >= prune_epsilon() {
            self.terms.insert(mask, c);
        }
    }

    fn prune(&mut self) {
        let eps = prune_epsilon();
        self.terms.retain(|_, c| c.norm() >= eps);
    }

    pub fn num_generators(&self) -> usize {
        self.generators
    }

    /// Iterates over `(mask, coefficient)` in ascending mask order.
    pub fn terms(&self) -> impl Iterator<Item = (u64, Complex)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mask: u64) -> Complex {
        self.terms.get(&mask).copied().unwrap_or_default()
    }

    /// Coefficient of `η_{i1} ⋯ η_{ir}`; zero for invalid index lists.
    pub fn coeff_of(&self, indices: &[usize]) -> Complex {
        mask_from_indices(indices, self.generators).map(|m| self.coeff(m)).unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn body(&self) -> Complex {
        self.coeff(0)
    }

    pub fn soul(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&0);
        out
    }

    /// `Even` for the zero element.
    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for mask in self.terms.keys() {
            if mask.count_ones() % 2 == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Mixed,
        }
    }

    pub fn is_even(&self) -> bool {
        self.parity() == Parity::Even
    }

    /// The zero element is reported as even, never odd.
    pub fn is_odd(&self) -> bool {
        self.parity() == Parity::Odd
    }

    /// True for zero as well as for genuinely odd elements.
    pub fn is_odd_or_zero(&self) -> bool {
        self.is_zero() || self.is_odd()
    }

    pub fn even_part(&self) -> Self {
        self.filtered(|m| m.count_ones() % 2 == 0)
    }

    pub fn odd_part(&self) -> Self {
        self.filtered(|m| m.count_ones() % 2 == 1)
    }

    fn filtered(&self, keep: impl Fn(u64) -> bool) -> Self {
        GrassmannNumber {
            generators: self.generators,
            terms: self.terms.iter().filter(|(m, _)| keep(**m)).map(|(m, c)| (*m, *c)).collect(),
        }
    }

    /// Checks homogeneity against `expected`; zero passes for either parity.
    pub fn expect_parity(&self, expected: Parity) -> Result<(), GrassmannError> {
        if self.is_zero() {
            return Ok(());
        }
        let found = self.parity();
        if found == expected {
            Ok(())
        } else {
            Err(GrassmannError::Parity { expected, found })
        }
    }

    fn check_context(&self, other: &Self) -> Result<(), GrassmannError> {
        if self.generators == other.generators {
            Ok(())
        } else {
            Err(GrassmannError::ContextMismatch { left: self.generators, right: other.generators })
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_context(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            *out.terms.entry(*m).or_default() += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_context(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            *out.terms.entry(*m).or_default() -= c;
        }
        out.prune();
        Ok(out)
    }

    /// Koszul-signed product.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_context(other)?;
        let mut acc: BTreeMap<u64, Complex> = BTreeMap::new();
        for (&s, &a) in &self.terms {
            for (&t, &b) in &other.terms {
                if s & t != 0 {
                    continue;
                }
                *acc.entry(s | t).or_default() += a * b * merge_sign(s, t);
            }
        }
        let mut out = GrassmannNumber { generators: self.generators, terms: acc };
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, factor: Complex) -> Self {
        let mut out = GrassmannNumber {
            generators: self.generators,
            terms: self.terms.iter().map(|(m, c)| (*m, c * factor)).collect(),
        };
        out.prune();
        out
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex::new(factor, 0.0))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(self.generators);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Two-sided inverse via the terminating Neumann series
    /// `body⁻¹ · Σ_k (−soul/body)^k`.
    pub fn invert(&self) -> Result<Self, GrassmannError> {
        self.invert_with(invert_epsilon())
    }

    pub fn invert_with(&self, eps: f64) -> Result<Self, GrassmannError> {
        let body = self.body();
        if body.norm() <= eps {
            return Err(GrassmannError::ZeroBody(body.norm()));
        }
        let inv_body = body.inv();
        let ratio = self.soul().scale(-inv_body);
        let mut power = Self::one(self.generators);
        let mut sum = Self::one(self.generators);
        for _ in 0..=self.generators {
            power = &power * &ratio;
            if power.is_zero() {
                break;
            }
            sum += &power;
        }
        Ok(sum.scale(inv_body))
    }

    /// Evaluates an analytic function at an even element via its Taylor
    /// expansion around the body. `derivative(k)` must return `f^{(k)}(body)`.
    pub fn taylor(&self, derivative: impl Fn(usize) -> Complex) -> Result<Self, GrassmannError> {
        self.expect_parity(Parity::Even)?;
        let soul = self.soul();
        let mut out = Self::scalar(self.generators, derivative(0));
        let mut power = Self::one(self.generators);
        let mut factorial = 1.0;
        for k in 1..=self.generators / 2 + 1 {
            power = &power * &soul;
            if power.is_zero() {
                break;
            }
            factorial *= k as f64;
            out += &power.scale(derivative(k) / factorial);
        }
        Ok(out)
    }

    /// Principal square root of an even element with invertible body.
    /// The other root is the negative of the result.
    pub fn sqrt_even(&self) -> Result<Self, GrassmannError> {
        self.expect_parity(Parity::Even)?;
        let body = self.body();
        if body.norm() <= invert_epsilon() {
            return Err(GrassmannError::ZeroBody(body.norm()));
        }
        let root = body.sqrt();
        // d^k/dx^k x^{1/2} = (1/2)(1/2 - 1)⋯(1/2 - k + 1) x^{1/2 - k}
        self.taylor(|k| {
            let mut falling = 1.0;
            for j in 0..k {
                falling *= 0.5 - j as f64;
            }
            root * falling / body.powi(k as i32)
        })
    }

    pub fn exp(&self) -> Result<Self, GrassmannError> {
        let e = self.body().exp();
        self.taylor(|_| e)
    }

    pub fn sin(&self) -> Result<Self, GrassmannError> {
        let (s, c) = (self.body().sin(), self.body().cos());
        self.taylor(|k| match k % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        })
    }

    pub fn cos(&self) -> Result<Self, GrassmannError> {
        let (s, c) = (self.body().sin(), self.body().cos());
        self.taylor(|k| match k % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        })
    }

    /// Embeds into `Λ_{generators}` (a larger context) via `η_i ↦ η_i`.
    pub fn extend_generators(&self, generators: usize) -> Result<Self, GrassmannError> {
        if generators > MAX_GENERATORS {
            return Err(GrassmannError::TooManyGenerators(generators));
        }
        if generators < self.generators {
            if let Some(&top) = self.terms.keys().max_by_key(|m| 64 - m.leading_zeros()) {
                let highest = 64 - top.leading_zeros() as usize;
                if highest > generators {
                    return Err(GrassmannError::GeneratorOutOfRange { index: highest, generators });
                }
            }
        }
        Ok(GrassmannNumber { generators, terms: self.terms.clone() })
    }

    /// Largest coefficient magnitude.
    pub fn norm_inf(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficientwise difference. Contexts must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).norm_inf()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.generators == other.generators && self.max_abs_diff(other) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.terms.values().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl fmt::Debug for GrassmannNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ{}[{}]", self.generators, self)
    }
}

impl fmt::Display for GrassmannNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (mask, c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            for i in mask_indices(*mask) {
                write!(f, "·η{i}")?;
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($Trait:ident, $method:ident, $checked:ident) => {
        impl $Trait<&GrassmannNumber> for &GrassmannNumber {
            type Output = GrassmannNumber;
            fn $method(self, rhs: &GrassmannNumber) -> GrassmannNumber {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $Trait<GrassmannNumber> for GrassmannNumber {
            type Output = GrassmannNumber;
            fn $method(self, rhs: GrassmannNumber) -> GrassmannNumber {
                (&self).$method(&rhs)
            }
        }
        impl $Trait<&GrassmannNumber> for GrassmannNumber {
            type Output = GrassmannNumber;
            fn $method(self, rhs: &GrassmannNumber) -> GrassmannNumber {
                (&self).$method(rhs)
            }
        }
        impl $Trait<GrassmannNumber> for &GrassmannNumber {
            type Output = GrassmannNumber;
            fn $method(self, rhs: GrassmannNumber) -> GrassmannNumber {
                self.$method(&rhs)
            }
        }
    };
}

// Operator forms panic on a context mismatch; use the `checked_*` methods
// where the contexts are not known to agree.
forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Mul<Complex> for &GrassmannNumber {
    type Output = GrassmannNumber;
    fn mul(self, rhs: Complex) -> GrassmannNumber {
        self.scale(rhs)
    }
}

impl Mul<Complex> for GrassmannNumber {
    type Output = GrassmannNumber;
    fn mul(self, rhs: Complex) -> GrassmannNumber {
        self.scale(rhs)
    }
}

impl Mul<f64> for &GrassmannNumber {
    type Output = GrassmannNumber;
    fn mul(self, rhs: f64) -> GrassmannNumber {
        self.scale_real(rhs)
    }
}

impl Mul<f64> for GrassmannNumber {
    type Output = GrassmannNumber;
    fn mul(self, rhs: f64) -> GrassmannNumber {
        self.scale_real(rhs)
    }
}

impl Neg for &GrassmannNumber {
    type Output = GrassmannNumber;
    fn neg(self) -> GrassmannNumber {
        GrassmannNumber {
            generators: self.generators,
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }
}

impl Neg for GrassmannNumber {
    type Output = GrassmannNumber;
    fn neg(self) -> GrassmannNumber {
        -&self
    }
}

impl AddAssign<&GrassmannNumber> for GrassmannNumber {
    fn add_assign(&mut self, rhs: &GrassmannNumber) {
        assert_eq!(self.generators, rhs.generators, "generator context mismatch");
        for (m, c) in &rhs.terms {
            *self.terms.entry(*m).or_default() += c;
        }
        self.prune();
    }
}

impl SubAssign<&GrassmannNumber> for GrassmannNumber {
    fn sub_assign(&mut self, rhs: &GrassmannNumber) {
        assert_eq!(self.generators, rhs.generators, "generator context mismatch");
        for (m, c) in &rhs.terms {
            *self.terms.entry(*m).or_default() -= c;
        }
        self.prune();
    }
}

#[derive(Serialize, Deserialize)]
struct GrassmannJson {
    s: usize,
    terms: Vec<(Vec<usize>, f64, f64)>,
}

impl Serialize for GrassmannNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GrassmannJson {
            s: self.generators,
            terms: self.terms.iter().map(|(m, c)| (mask_indices(*m), c.re, c.im)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GrassmannNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = GrassmannJson::deserialize(deserializer)?;
        GrassmannNumber::from_terms(raw.s, raw.terms.into_iter().map(|(i, re, im)| (i, Complex::new(re, im))))
            .map_err(serde::de::Error::custom)
    }
}
