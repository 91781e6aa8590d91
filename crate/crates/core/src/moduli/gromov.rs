//! Checking Gromov convergence of a sequence of stable curves against a
//! declared limit.
//!
//! The checker does not search for tree homomorphisms or reparametrizations:
//! each sequence element supplies `f^ν: T → T^ν` and `g^ν ∈ G^T`. Three
//! clauses are evaluated per element:
//!
//! - Rescaling: for an edge `(α, β)` collapsed by `f^ν`, the map
//!   `(g_α)⁻¹ ∘ g_β` must be uniformly close to the constant `z_{αβ}` on a
//!   grid of sample points away from `z_{βα}`.
//! - Nodal points: for an edge kept by `f^ν`, `(g_α)⁻¹(z^ν_{f(α) f(β)})`
//!   must be close to `z_{αβ}`.
//! - Marked points: `(g_{p(i)})⁻¹(z^ν_i)` must be close to `z_i`.
//!
//! A clause passes when the last `tail` residuals are within tolerance.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stable_maps::StableMapSkeleton;
use super::{ModuliError, NodalCurve, Reparam};
use crate::grassmann::GrassmannNumber;
use crate::superconf::{ProjectivePoint, SpGL21};
use crate::trees::{TreeError, TreeHom};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GromovError {
    #[error("sequence element {element}: tree homomorphism is not compatible: {source}")]
    Hom { element: usize, source: TreeError },
    #[error("sequence element {element}: {source}")]
    Element { element: usize, source: ModuliError },
    #[error("sequence is empty")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GromovConfig {
    pub tolerance: f64,
    pub tail: usize,
    /// Radius of the sampling disc in each chart.
    pub radius: f64,
    /// Grid points per axis.
    pub grid: usize,
    /// Samples closer than this chordal distance to `z_{βα}` are skipped.
    pub exclusion: f64,
}

impl Default for GromovConfig {
    fn default() -> Self {
        GromovConfig { tolerance: 1e-6, tail: 5, radius: 2.0, grid: 9, exclusion: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clause {
    Rescaling,
    NodalPoints,
    MarkedPoints,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Rescaling => "Rescaling",
            Clause::NodalPoints => "Nodal points",
            Clause::MarkedPoints => "Marked points",
        })
    }
}

/// One element `(z^ν, f^ν, g^ν)` of a sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceElement {
    pub curve: NodalCurve,
    pub hom: TreeHom,
    pub reparam: Reparam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseReport {
    pub clause: Clause,
    /// Largest residual of the clause at each sequence element.
    pub residuals: Vec<f64>,
    pub tail_max: f64,
    pub passed: bool,
    /// Item responsible for the largest tail residual.
    pub worst: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GromovReport {
    pub passed: bool,
    pub clauses: Vec<ClauseReport>,
}

impl GromovReport {
    pub fn failed_clauses(&self) -> Vec<Clause> {
        self.clauses.iter().filter(|c| !c.passed).map(|c| c.clause).collect()
    }

    pub fn clause(&self, clause: Clause) -> &ClauseReport {
        self.clauses.iter().find(|c| c.clause == clause).expect("all clauses are reported")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.clauses {
            out.push_str(&format!(
                "{:<14} {}  tail max {:.3e}{}\n",
                c.clause.to_string(),
                if c.passed { "pass" } else { "FAIL" },
                c.tail_max,
                c.worst.as_ref().map(|w| format!("  ({w})")).unwrap_or_default()
            ));
        }
        out.push_str(if self.passed { "converges\n" } else { "does not converge\n" });
        out
    }
}

/// Sample points of the two standard charts with bodies in the disc of
/// radius `radius` and odd part `0` or one of the generators.
pub fn sample_grid(cfg: &GromovConfig, s: usize) -> Vec<ProjectivePoint> {
    let mut thetas = vec![GrassmannNumber::zero(s)];
    thetas.extend((1..=s).map(|i| GrassmannNumber::generator(s, i).expect("index in range")));
    let steps = cfg.grid.max(2);
    let mut out = Vec::new();
    for chart in 0..2 {
        for i in 0..steps {
            for j in 0..steps {
                let x = -cfg.radius + 2.0 * cfg.radius * i as f64 / (steps - 1) as f64;
                let y = -cfg.radius + 2.0 * cfg.radius * j as f64 / (steps - 1) as f64;
                if x * x + y * y > cfg.radius * cfg.radius + 1e-12 {
                    continue;
                }
                let z = GrassmannNumber::scalar(s, crate::grassmann::Complex::new(x, y));
                for th in &thetas {
                    let p = if chart == 0 {
                        ProjectivePoint::from_chart1(&z, th)
                    } else {
                        ProjectivePoint::from_chart2(&z, th)
                    };
                    out.push(p.expect("chart points are valid"));
                }
            }
        }
    }
    out
}

struct Item {
    clause: Clause,
    label: String,
    residual: f64,
}

fn check_element(
    index: usize,
    el: &SequenceElement,
    limit: &NodalCurve,
    grid: &[ProjectivePoint],
    cfg: &GromovConfig,
) -> Result<Vec<Item>, GromovError> {
    let tree = limit.tree();
    el.hom.check(tree, el.curve.tree()).map_err(|source| GromovError::Hom { element: index, source })?;
    if el.reparam.maps.len() != tree.num_vertices() {
        return Err(GromovError::Element {
            element: index,
            source: ModuliError::ReparamLength { expected: tree.num_vertices(), found: el.reparam.maps.len() },
        });
    }
    let elem_err = |source: ModuliError| GromovError::Element { element: index, source };
    let inverses: Vec<SpGL21> = el
        .reparam
        .maps
        .iter()
        .map(|g| g.inverse().map_err(|e| elem_err(e.into())))
        .collect::<Result<_, _>>()?;
    let mut items = Vec::new();

    for (&(a, b), z_ab) in limit.nodes() {
        let (fa, fb) = (el.hom.apply(a), el.hom.apply(b));
        if fa == fb {
            let h = SpGL21::compose(&inverses[a], &el.reparam.maps[b]).map_err(|e| elem_err(e.into()))?;
            let z_ba = &limit.nodes()[&(b, a)];
            let residual = grid
                .iter()
                .filter(|x| x.chordal_distance(z_ba) >= cfg.exclusion)
                .map(|x| z_ab.projective_distance(&h.act(x)))
                .fold(0.0, f64::max);
            items.push(Item { clause: Clause::Rescaling, label: format!("edge ({a},{b})"), residual });
        } else {
            let target = el.curve.nodes().get(&(fa, fb)).ok_or(GromovError::Hom {
                element: index,
                source: TreeError::EdgeNotPreserved(a, b),
            })?;
            let residual = z_ab.projective_distance(&inverses[a].act(target));
            items.push(Item { clause: Clause::NodalPoints, label: format!("node ({a},{b})"), residual });
        }
    }
    for (&i, z_i) in limit.marks() {
        let v = tree.label_vertex(i).expect("validated curve");
        let residual = z_i.projective_distance(&inverses[v].act(&el.curve.marks()[&i]));
        items.push(Item { clause: Clause::MarkedPoints, label: format!("mark {i}"), residual });
    }
    Ok(items)
}

/// Evaluates the three clauses on every sequence element.
pub fn check_gromov_curves(
    seq: &[SequenceElement],
    limit: &NodalCurve,
    cfg: &GromovConfig,
) -> Result<GromovReport, GromovError> {
    if seq.is_empty() {
        return Err(GromovError::Empty);
    }
    if !(cfg.tolerance > 0.0) || cfg.tail == 0 || !(cfg.radius > 0.0) {
        return Err(GromovError::Config("tolerance, tail and radius must be positive".into()));
    }
    let grid = sample_grid(cfg, limit.num_generators());
    let per_element: Vec<Vec<Item>> =
        seq.iter().enumerate().map(|(i, el)| check_element(i, el, limit, &grid, cfg)).collect::<Result<_, _>>()?;
    let tail_start = seq.len().saturating_sub(cfg.tail);
    let clauses: Vec<ClauseReport> = [Clause::Rescaling, Clause::NodalPoints, Clause::MarkedPoints]
        .into_iter()
        .map(|clause| {
            let mut residuals = Vec::with_capacity(seq.len());
            let mut worst: Option<(f64, String)> = None;
            for (idx, items) in per_element.iter().enumerate() {
                let mut r: f64 = 0.0;
                for it in items.iter().filter(|it| it.clause == clause) {
                    let value = if it.residual.is_nan() { f64::INFINITY } else { it.residual };
                    r = r.max(value);
                    if idx >= tail_start && worst.as_ref().is_none_or(|w| value > w.0) {
                        worst = Some((value, it.label.clone()));
                    }
                }
                residuals.push(r);
            }
            let tail_max = residuals[tail_start..].iter().copied().fold(0.0, f64::max);
            let passed = tail_max <= cfg.tolerance;
            ClauseReport { clause, residuals, tail_max, passed, worst: worst.filter(|w| w.0 > 0.0).map(|w| w.1) }
        })
        .collect();
    Ok(GromovReport { passed: clauses.iter().all(|c| c.passed), clauses })
}

/// Runs the curve-level clauses on the underlying curves of stable maps.
pub fn check_gromov_stable_maps(
    seq: &[(StableMapSkeleton, TreeHom, Reparam)],
    limit: &StableMapSkeleton,
    cfg: &GromovConfig,
) -> Result<GromovReport, GromovError> {
    let curves: Vec<SequenceElement> = seq
        .iter()
        .map(|(m, hom, g)| SequenceElement { curve: m.curve.clone(), hom: hom.clone(), reparam: g.clone() })
        .collect();
    check_gromov_curves(&curves, &limit.curve, cfg)
}
