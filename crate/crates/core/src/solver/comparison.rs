//! Discrete counterpart of the comparison principle: `𝔔u ≥ 𝔔v` inside and `u ≤ v` on the
//! boundary should give `u ≤ v` everywhere.

use serde::Serialize;

use crate::error::{Error, Result};

const SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ComparisonVerdict {
    /// `u ≤ v` everywhere; `gap = max(u − v)` is attained at `worst_vertex`.
    Holds { worst_vertex: usize, gap: f64 },
    Violated { worst_vertex: usize, gap: f64 },
    /// A hypothesis fails at `vertex`.
    Inapplicable { vertex: usize, reason: Hypothesis },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    OperatorOrder,
    BoundaryOrder,
}

impl ComparisonVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ComparisonVerdict::Holds { .. })
    }
}

/// Checks the comparison conclusion for vertex values `u`, `v` and operator values
/// `qu`, `qv`. `boundary[i]` marks vertices where `u ≤ v` is assumed rather than derived;
/// the operator inequality is required everywhere else.
pub fn discrete_comparison_check(
    u: &[f64],
    v: &[f64],
    qu: &[f64],
    qv: &[f64],
    boundary: &[bool],
) -> Result<ComparisonVerdict> {
    let n = u.len();
    for (name, len) in [("v", v.len()), ("Qu", qu.len()), ("Qv", qv.len()), ("mask", boundary.len())] {
        if len != n {
            return Err(Error::InvalidArgument(format!("{name} has {len} entries, u has {n}")));
        }
    }
    for i in 0..n {
        if boundary[i] {
            if u[i] > v[i] + SLACK {
                return Ok(ComparisonVerdict::Inapplicable {
                    vertex: i,
                    reason: Hypothesis::BoundaryOrder,
                });
            }
        } else if qu[i] < qv[i] - SLACK {
            return Ok(ComparisonVerdict::Inapplicable {
                vertex: i,
                reason: Hypothesis::OperatorOrder,
            });
        }
    }
    let (worst_vertex, gap) = (0..n)
        .map(|i| (i, u[i] - v[i]))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(if gap <= SLACK {
        ComparisonVerdict::Holds { worst_vertex, gap }
    } else {
        ComparisonVerdict::Violated { worst_vertex, gap }
    })
}
