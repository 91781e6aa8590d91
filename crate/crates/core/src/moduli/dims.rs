//! Real super dimensions of the moduli spaces and groups involved.

use thiserror::Error;

use crate::grassmann::SDim;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimError {
    #[error("at least 3 marked points are required, got {0}")]
    TooFewMarks(i64),
    #[error("a stable tree with {k} labels has at most {max} edges, got {edges}")]
    TooManyEdges { k: i64, edges: i64, max: i64 },
    #[error("negative argument {name} = {value}")]
    Negative { name: &'static str, value: i64 },
    #[error("dimension {0} is negative")]
    NegativeResult(SDim),
}

fn nonneg(name: &'static str, value: i64) -> Result<i64, DimError> {
    if value < 0 {
        Err(DimError::Negative { name, value })
    } else {
        Ok(value)
    }
}

fn checked(d: SDim) -> Result<SDim, DimError> {
    if d.is_nonnegative() {
        Ok(d)
    } else {
        Err(DimError::NegativeResult(d))
    }
}

fn check_tree(k: i64, edges: i64) -> Result<(), DimError> {
    if k < 3 {
        return Err(DimError::TooFewMarks(k));
    }
    nonneg("edges", edges)?;
    if edges > k - 3 {
        return Err(DimError::TooManyEdges { k, edges, max: k - 3 });
    }
    Ok(())
}

/// Super Riemann surfaces of genus zero with `k` marked points: `2k−6 | 2k−4`.
pub fn dim_m0k(k: i64) -> Result<SDim, DimError> {
    if k < 3 {
        return Err(DimError::TooFewMarks(k));
    }
    Ok(SDim::new(2 * k - 6, 2 * k - 4))
}

/// Stable curves modeled on a tree with `edges` edges: `2k−6−2#E | 2k−4`.
pub fn dim_m0t(k: i64, edges: i64) -> Result<SDim, DimError> {
    check_tree(k, edges)?;
    Ok(SDim::new(2 * k - 6 - 2 * edges, 2 * k - 4))
}

/// Quotient of a manifold by a freely and properly acting group: `M − G`.
pub fn dim_quotient(m: SDim, g: SDim) -> Result<SDim, DimError> {
    checked(m - g)
}

/// Groupoid with objects `G0` and arrows `G1`: `2 G0 − G1`.
pub fn dim_groupoid(g0: SDim, g1: SDim) -> Result<SDim, DimError> {
    checked(2 * g0 - g1)
}

/// Super J-holomorphic curves into a `2n`-dimensional target with
/// `⟨c₁, A⟩ = c1a`: `2n + 2c1a | 2c1a`.
pub fn dim_super_j(n: i64, c1a: i64) -> Result<SDim, DimError> {
    nonneg("n", n)?;
    checked(SDim::new(2 * n + 2 * c1a, 2 * c1a))
}

/// Simple super stable maps of fixed tree type:
/// `2n + 2c1a − 2#E + 2k − 6 | 2c1a + 2k − 4`.
pub fn dim_stable_maps(n: i64, c1a: i64, k: i64, edges: i64) -> Result<SDim, DimError> {
    nonneg("n", n)?;
    check_tree(k, edges)?;
    checked(SDim::new(2 * n + 2 * c1a - 2 * edges + 2 * k - 6, 2 * c1a + 2 * k - 4))
}

/// `SpGL(2|1)`: `6 | 4`.
pub const DIM_SPGL21: SDim = SDim::new(6, 4);

/// Reparametrization group of a tree with `edges` edges.
pub fn dim_reparam_group(edges: i64) -> SDim {
    (edges + 1) * DIM_SPGL21
}

/// Special-point configurations `Z^T`: `4#E + 2k | 4#E + 2k`.
pub fn dim_special_points(k: i64, edges: i64) -> SDim {
    SDim::new(4 * edges + 2 * k, 4 * edges + 2 * k)
}

/// Product of per-vertex map spaces `M^T`: `2n(#E+1) + 2c1a | 2c1a`.
pub fn dim_map_product(n: i64, c1a: i64, edges: i64) -> SDim {
    SDim::new(2 * n * (edges + 1) + 2 * c1a, 2 * c1a)
}

/// Codimension of the node-matching diagonal: `2n#E | 0`.
pub fn codim_diagonal(n: i64, edges: i64) -> SDim {
    SDim::new(2 * n * edges, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        assert_eq!(dim_m0k(3), Ok(SDim::new(0, 2)));
        assert_eq!(dim_m0t(4, 1), Ok(SDim::new(0, 4)));
        assert_eq!(dim_stable_maps(1, 2, 3, 0), Ok(SDim::new(6, 6)));
        for k in 3..10 {
            assert_eq!(dim_quotient(SDim::new(2 * k, 2 * k), SDim::new(6, 4)), dim_m0k(k));
        }
        assert_eq!(dim_super_j(2, 1), Ok(SDim::new(6, 2)));
        assert_eq!(dim_groupoid(SDim::new(3, 2), SDim::new(4, 1)), Ok(SDim::new(2, 3)));
    }

    #[test]
    fn domain_errors() {
        assert_eq!(dim_m0k(2), Err(DimError::TooFewMarks(2)));
        assert!(matches!(dim_m0t(4, 2), Err(DimError::TooManyEdges { .. })));
        assert!(matches!(dim_quotient(SDim::new(1, 1), SDim::new(6, 4)), Err(DimError::NegativeResult(_))));
        assert!(dim_super_j(-1, 0).is_err());
    }

    #[test]
    fn stable_maps_from_building_blocks() {
        for n in 0..4 {
            for c in 0..4 {
                for k in 3..7 {
                    for e in 0..=k - 3 {
                        let assembled = dim_map_product(n, c, e) + dim_special_points(k, e)
                            - codim_diagonal(n, e)
                            - dim_reparam_group(e);
                        assert_eq!(dim_stable_maps(n, c, k, e), Ok(assembled));
                    }
                }
            }
        }
    }
}
