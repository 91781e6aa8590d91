//! Graded matrices over `Λ_s`.
//!
//! A [`SuperMatrix`] of shape `(r|s)×(m|n)` stores its rows in block order
//! (the `r` even rows first, then the `s` odd rows) and likewise for columns.
//! The parity of an entry is fixed by the parities of its row and column and
//! by the declared parity of the matrix, and is checked on construction.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grassmann::{Complex, GrassmannError, GrassmannNumber, Parity, SDim};

/// Body magnitude below which a candidate pivot is rejected.
pub const PIVOT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("entry ({row}, {col}) has parity {found}, expected {expected}")]
    EntryParity { row: usize, col: usize, expected: Parity, found: Parity },
    #[error("matrix parity must be even or odd")]
    MixedMatrix,
    #[error("operation requires an even matrix")]
    NotEven,
    #[error("slot {slot} of the point has parity {found}, expected {expected}")]
    SlotParity { slot: usize, expected: Parity, found: Parity },
    #[error("matrix is not invertible: no pivot with invertible body in column {0}")]
    Singular(usize),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

#[derive(Clone, PartialEq)]
pub struct SuperMatrix {
    rows: SDim,
    cols: SDim,
    parity: Parity,
    generators: usize,
    entries: Vec<Vec<GrassmannNumber>>,
}

fn slot_parity(dim: SDim, index: usize) -> Parity {
    Parity::from_odd(index as i64 >= dim.even)
}

fn dim_len(dim: SDim) -> usize {
    (dim.even + dim.odd) as usize
}

impl SuperMatrix {
    pub fn new(
        rows: SDim,
        cols: SDim,
        parity: Parity,
        entries: Vec<Vec<GrassmannNumber>>,
    ) -> Result<Self, LinalgError> {
        if !rows.is_nonnegative() || !cols.is_nonnegative() {
            return Err(LinalgError::Dimension(format!("negative shape {rows}×{cols}")));
        }
        if parity == Parity::Mixed {
            return Err(LinalgError::MixedMatrix);
        }
        if entries.len() != dim_len(rows) || entries.iter().any(|r| r.len() != dim_len(cols)) {
            return Err(LinalgError::Dimension(format!("entry grid does not have shape {rows}×{cols}")));
        }
        let generators = entries.iter().flatten().map(|e| e.num_generators()).next().unwrap_or(0);
        for (i, row) in entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.num_generators() != generators {
                    return Err(GrassmannError::ContextMismatch { left: generators, right: e.num_generators() }.into());
                }
                let expected = parity.add(slot_parity(rows, i)).add(slot_parity(cols, j));
                if !e.is_zero() && e.parity() != expected {
                    return Err(LinalgError::EntryParity { row: i, col: j, expected, found: e.parity() });
                }
            }
        }
        Ok(SuperMatrix { rows, cols, parity, generators, entries })
    }

    pub fn zeros(rows: SDim, cols: SDim, parity: Parity, generators: usize) -> Self {
        let entries = vec![vec![GrassmannNumber::zero(generators); dim_len(cols)]; dim_len(rows)];
        SuperMatrix { rows, cols, parity, generators, entries }
    }

    pub fn identity(dim: SDim, generators: usize) -> Self {
        let mut m = Self::zeros(dim, dim, Parity::Even, generators);
        for i in 0..dim_len(dim) {
            m.entries[i][i] = GrassmannNumber::one(generators);
        }
        m
    }

    /// Block-identity pattern of rank `rank`: `I_p` in the top-left of the
    /// even-even block, `I_q` in the top-left of the odd-odd block.
    pub fn standard_form(rows: SDim, cols: SDim, rank: SDim, generators: usize) -> Result<Self, LinalgError> {
        if rank.even > rows.even.min(cols.even) || rank.odd > rows.odd.min(cols.odd) || !rank.is_nonnegative() {
            return Err(LinalgError::Dimension(format!("rank {rank} does not fit {rows}×{cols}")));
        }
        let mut m = Self::zeros(rows, cols, Parity::Even, generators);
        for k in 0..rank.even as usize {
            m.entries[k][k] = GrassmannNumber::one(generators);
        }
        for k in 0..rank.odd as usize {
            m.entries[rows.even as usize + k][cols.even as usize + k] = GrassmannNumber::one(generators);
        }
        Ok(m)
    }

    /// Diagonal `diag(-1, …, -1 | 1, …, 1)` on the even rows: with the row
    /// convention used by the projective action this acts as `θ ↦ −θ`.
    pub fn odd_reflection(dim: SDim, generators: usize) -> Self {
        let mut m = Self::identity(dim, generators);
        for k in 0..dim.even as usize {
            m.entries[k][k] = GrassmannNumber::real(generators, -1.0);
        }
        m
    }

    pub fn row_dims(&self) -> SDim {
        self.rows
    }

    pub fn col_dims(&self) -> SDim {
        self.cols
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn num_generators(&self) -> usize {
        self.generators
    }

    pub fn nrows(&self) -> usize {
        dim_len(self.rows)
    }

    pub fn ncols(&self) -> usize {
        dim_len(self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &GrassmannNumber {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<GrassmannNumber>] {
        &self.entries
    }

    /// Row parity of the slot `i`.
    pub fn row_parity(&self, i: usize) -> Parity {
        slot_parity(self.rows, i)
    }

    pub fn col_parity(&self, j: usize) -> Parity {
        slot_parity(self.cols, j)
    }

    pub fn matmul(&self, other: &SuperMatrix) -> Result<SuperMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.generators != other.generators {
            return Err(GrassmannError::ContextMismatch { left: self.generators, right: other.generators }.into());
        }
        let mut out = SuperMatrix::zeros(self.rows, other.cols, self.parity.add(other.parity), self.generators);
        for i in 0..self.nrows() {
            for j in 0..other.ncols() {
                let mut acc = GrassmannNumber::zero(self.generators);
                for k in 0..self.ncols() {
                    acc += &(&self.entries[i][k] * &other.entries[k][j]);
                }
                out.entries[i][j] = acc;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &SuperMatrix) -> Result<SuperMatrix, LinalgError> {
        self.zip(other, |a, b| a.checked_add(b))
    }

    pub fn sub(&self, other: &SuperMatrix) -> Result<SuperMatrix, LinalgError> {
        self.zip(other, |a, b| a.checked_sub(b))
    }

    fn zip(
        &self,
        other: &SuperMatrix,
        f: impl Fn(&GrassmannNumber, &GrassmannNumber) -> Result<GrassmannNumber, GrassmannError>,
    ) -> Result<SuperMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols || self.parity != other.parity {
            return Err(LinalgError::Dimension("shapes or parities differ".into()));
        }
        let mut out = self.clone();
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                out.entries[i][j] = f(&self.entries[i][j], &other.entries[i][j])?;
            }
        }
        Ok(out)
    }

    /// Multiplies every entry by the same even scalar from the left.
    pub fn scale(&self, factor: &GrassmannNumber) -> Result<SuperMatrix, LinalgError> {
        factor.expect_parity(Parity::Even)?;
        let mut out = self.clone();
        for row in out.entries.iter_mut() {
            for e in row.iter_mut() {
                *e = factor.checked_mul(e)?;
            }
        }
        Ok(out)
    }

    /// Inverse of an even square matrix by Gauss–Jordan elimination with
    /// block-preserving partial pivoting.
    pub fn inverse(&self) -> Result<SuperMatrix, LinalgError> {
        if self.parity != Parity::Even {
            return Err(LinalgError::NotEven);
        }
        if self.rows != self.cols {
            return Err(LinalgError::Dimension(format!("inverse of non-square {}×{}", self.rows, self.cols)));
        }
        let n = self.nrows();
        let mut work = self.clone();
        let mut inv = SuperMatrix::identity(self.rows, self.generators);
        for k in 0..n {
            let block = block_range(self.rows, k);
            let pivot_row = block
                .clone()
                .filter(|&i| i >= k)
                .max_by(|&a, &b| work.entries[a][k].body().norm().total_cmp(&work.entries[b][k].body().norm()))
                .ok_or(LinalgError::Singular(k))?;
            if work.entries[pivot_row][k].body().norm() < PIVOT_EPSILON {
                return Err(LinalgError::Singular(k));
            }
            work.entries.swap(k, pivot_row);
            inv.entries.swap(k, pivot_row);
            let p_inv = work.entries[k][k].invert()?;
            work.scale_row(k, &p_inv);
            inv.scale_row(k, &p_inv);
            for i in 0..n {
                if i == k || work.entries[i][k].is_zero() {
                    continue;
                }
                let f = work.entries[i][k].clone();
                work.row_axpy(i, k, &f);
                inv.row_axpy(i, k, &f);
            }
        }
        Ok(inv)
    }

    fn scale_row(&mut self, i: usize, f: &GrassmannNumber) {
        for e in self.entries[i].iter_mut() {
            *e = f * &*e;
        }
    }

    /// `row_i ← row_i − f · row_p`.
    fn row_axpy(&mut self, i: usize, p: usize, f: &GrassmannNumber) {
        for j in 0..self.ncols() {
            let delta = f * &self.entries[p][j];
            self.entries[i][j] -= &delta;
        }
    }

    /// `col_j ← col_j − col_p · f`.
    fn col_axpy(&mut self, j: usize, p: usize, f: &GrassmannNumber) {
        for i in 0..self.nrows() {
            let delta = &self.entries[i][p] * f;
            self.entries[i][j] -= &delta;
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for row in self.entries.iter_mut() {
            row.swap(a, b);
        }
    }

    pub fn max_abs_diff(&self, other: &SuperMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows().min(other.nrows()) {
            for j in 0..self.ncols().min(other.ncols()) {
                worst = worst.max(self.entries[i][j].max_abs_diff(&other.entries[i][j]));
            }
        }
        if self.rows != other.rows || self.cols != other.cols {
            f64::INFINITY
        } else {
            worst
        }
    }

    pub fn approx_eq(&self, other: &SuperMatrix, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Matrix of bodies.
    pub fn body(&self) -> Vec<Vec<Complex>> {
        self.entries.iter().map(|r| r.iter().map(|e| e.body()).collect()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.is_finite())
    }
}

fn block_range(dim: SDim, k: usize) -> std::ops::Range<usize> {
    let split = dim.even as usize;
    if k < split {
        0..split
    } else {
        split..dim_len(dim)
    }
}

impl fmt::Debug for SuperMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SuperMatrix {}×{} ({})", self.rows, self.cols, self.parity)?;
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Translation `P ↦ P + Q·L` of a point of `ℝ^{m|n}` by a point `Q` of
/// `ℝ^{r|s}` through the even matrix `L` of shape `(r|s)×(m|n)`.
pub fn apply_translation(
    l: &SuperMatrix,
    q: &[GrassmannNumber],
    p: &[GrassmannNumber],
) -> Result<Vec<GrassmannNumber>, LinalgError> {
    if l.parity != Parity::Even {
        return Err(LinalgError::NotEven);
    }
    if q.len() != l.nrows() || p.len() != l.ncols() {
        return Err(LinalgError::Dimension(format!(
            "translation by {}×{} needs points of length {} and {}",
            l.rows,
            l.cols,
            l.nrows(),
            l.ncols()
        )));
    }
    check_point(l.rows, q)?;
    check_point(l.cols, p)?;
    let mut out = Vec::with_capacity(p.len());
    for (b, pb) in p.iter().enumerate() {
        let mut acc = pb.clone();
        for (r, qr) in q.iter().enumerate() {
            acc = acc.checked_add(&qr.checked_mul(&l.entries[r][b])?)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Checks that the even slots of a point hold even values and the odd slots
/// odd ones.
pub fn check_point(dim: SDim, point: &[GrassmannNumber]) -> Result<(), LinalgError> {
    if point.len() != dim_len(dim) {
        return Err(LinalgError::Dimension(format!("point of length {} in {dim}", point.len())));
    }
    for (slot, x) in point.iter().enumerate() {
        let expected = slot_parity(dim, slot);
        if !x.is_zero() && x.parity() != expected {
            return Err(LinalgError::SlotParity { slot, expected, found: x.parity() });
        }
    }
    Ok(())
}

/// The `ℤ₂` action on `ℝ^{m|n}` that negates the odd coordinates.
pub fn reflect_odd(dim: SDim, point: &[GrassmannNumber]) -> Result<Vec<GrassmannNumber>, LinalgError> {
    check_point(dim, point)?;
    Ok(point
        .iter()
        .enumerate()
        .map(|(slot, x)| if slot < dim.even as usize { x.clone() } else { -x })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOutcome {
    Rank(SDim),
    /// Row and column of the largest residual entry that has no invertible body.
    NoRank { row: usize, col: usize },
}

#[derive(Debug, Clone)]
pub struct RankResult {
    pub outcome: RankOutcome,
    /// `left · A · right` equals the standard form when the rank exists.
    pub left: SuperMatrix,
    pub right: SuperMatrix,
    /// Largest entry of `left · A · right` outside the identity pattern.
    pub residual: f64,
}

impl RankResult {
    pub fn rank(&self) -> Option<SDim> {
        match self.outcome {
            RankOutcome::Rank(r) => Some(r),
            RankOutcome::NoRank { .. } => None,
        }
    }

    /// Recomputes `left · a · right` and compares it to the standard form.
    pub fn verify(&self, a: &SuperMatrix, tol: f64) -> Result<bool, LinalgError> {
        let Some(rank) = self.rank() else {
            return Ok(false);
        };
        let reduced = self.left.matmul(a)?.matmul(&self.right)?;
        let target = SuperMatrix::standard_form(a.rows, a.cols, rank, a.generators)?;
        Ok(reduced.approx_eq(&target, tol) && self.left.inverse().is_ok() && self.right.inverse().is_ok())
    }
}

/// Brings an even matrix to standard rank form, or reports that none exists.
///
/// Elimination runs first on the even-even block, then on the odd-odd block.
/// Each pivot is the entry of largest body magnitude in the remaining block;
/// row and column operations clear its row and column across all blocks. The
/// rank exists iff everything outside the identity pattern vanishes afterwards.
pub fn standard_rank_form(a: &SuperMatrix) -> Result<RankResult, LinalgError> {
    if a.parity != Parity::Even {
        return Err(LinalgError::NotEven);
    }
    let s = a.generators;
    let mut m = a.clone();
    let mut left = SuperMatrix::identity(a.rows, s);
    let mut right = SuperMatrix::identity(a.cols, s);
    let (r0, c0) = (a.rows.even as usize, a.cols.even as usize);
    let (r1, c1) = (a.nrows(), a.ncols());

    let mut rank = [0usize; 2];
    for (phase, (rows, cols)) in [((0, r0), (0, c0)), ((r0, r1), (c0, c1))].into_iter().enumerate() {
        let mut k = 0;
        loop {
            let (pr, pc) = (rows.0 + k, cols.0 + k);
            if pr >= rows.1 || pc >= cols.1 {
                break;
            }
            let mut best = (0.0, pr, pc);
            for i in pr..rows.1 {
                for j in pc..cols.1 {
                    let b = m.entries[i][j].body().norm();
                    if b > best.0 {
                        best = (b, i, j);
                    }
                }
            }
            if best.0 < PIVOT_EPSILON {
                break;
            }
            m.entries.swap(pr, best.1);
            left.entries.swap(pr, best.1);
            m.swap_cols(pc, best.2);
            right.swap_cols(pc, best.2);

            let p_inv = m.entries[pr][pc].invert()?;
            m.scale_row(pr, &p_inv);
            left.scale_row(pr, &p_inv);
            for i in 0..r1 {
                if i != pr && !m.entries[i][pc].is_zero() {
                    let f = m.entries[i][pc].clone();
                    m.row_axpy(i, pr, &f);
                    left.row_axpy(i, pr, &f);
                }
            }
            for j in 0..c1 {
                if j != pc && !m.entries[pr][j].is_zero() {
                    let f = m.entries[pr][j].clone();
                    m.col_axpy(j, pc, &f);
                    right.col_axpy(j, pc, &f);
                }
            }
            k += 1;
        }
        rank[phase] = k;
    }

    let rank = SDim::new(rank[0] as i64, rank[1] as i64);
    let target = SuperMatrix::standard_form(a.rows, a.cols, rank, s)?;
    let mut worst = (0.0, 0, 0);
    for i in 0..r1 {
        for j in 0..c1 {
            let d = m.entries[i][j].max_abs_diff(&target.entries[i][j]);
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    let outcome = if worst.0 < PIVOT_EPSILON {
        RankOutcome::Rank(rank)
    } else {
        RankOutcome::NoRank { row: worst.1, col: worst.2 }
    };
    Ok(RankResult { outcome, left, right, residual: worst.0 })
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: [i64; 2],
    cols: [i64; 2],
    parity: Parity,
    entries: Vec<Vec<GrassmannNumber>>,
}

impl Serialize for SuperMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MatrixJson {
            rows: [self.rows.even, self.rows.odd],
            cols: [self.cols.even, self.cols.odd],
            parity: self.parity,
            entries: self.entries.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SuperMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        SuperMatrix::new(
            SDim::new(raw.rows[0], raw.rows[1]),
            SDim::new(raw.cols[0], raw.cols[1]),
            raw.parity,
            raw.entries,
        )
        .map_err(serde::de::Error::custom)
    }
}
