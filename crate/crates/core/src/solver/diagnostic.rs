//! Operational reading of a failed solve as evidence of non-existence.
//!
//! No finite computation certifies non-existence. A run counts as exhibiting it when the
//! continuation stalled and the boundary gradient grew by a large factor at a vertex close
//! to the chosen boundary point.

use serde::Serialize;

use crate::domain::Mesh;
use crate::error::Result;
use crate::geometry::distance;

use super::SolveReport;

/// Growth factor of the boundary gradient over its first converged value.
pub const BLOWUP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonexistenceDiagnostic {
    pub stalled: bool,
    /// boundary gradient of the first converged continuation stage
    pub initial_gradient: f64,
    pub final_gradient: f64,
    pub growth: f64,
    pub gradient_point: [f64; 2],
    /// model distance from the gradient maximum to `y₀`
    pub distance_to_y0: f64,
    pub localized: bool,
    pub detected: bool,
}

/// Applies the stall, growth and localisation tests to `report`, with `B_a(y₀)` as the
/// localisation ball.
pub fn nonexistence_diagnostic(mesh: &Mesh, report: &SolveReport, y0: [f64; 2], a: f64) -> Result<NonexistenceDiagnostic> {
    let initial_gradient = report
        .continuation_trace
        .iter()
        .find(|s| s.converged)
        .map_or(f64::NAN, |s| s.max_boundary_gradient);
    let final_gradient = report.max_boundary_gradient;
    let growth = final_gradient / initial_gradient;
    let gradient_point = mesh.vertex(report.max_gradient_vertex);
    let distance_to_y0 = distance(mesh.model(), &gradient_point, &y0)?;
    let localized = distance_to_y0 <= a;
    let stalled = report.stalled && !report.converged;
    Ok(NonexistenceDiagnostic {
        stalled,
        initial_gradient,
        final_gradient,
        growth,
        gradient_point,
        distance_to_y0,
        localized,
        detected: stalled && growth > BLOWUP_FACTOR && localized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{mesh_domain, DomainSpec};
    use crate::geometry::ManifoldModel;
    use crate::solver::{solve_dirichlet, PrescribedH, SolveOptions};

    #[test]
    fn converged_run_is_not_flagged() {
        let spec = DomainSpec::disc(ManifoldModel::euclidean(2).unwrap(), [0.0, 0.0], 1.0).unwrap();
        let mesh = mesh_domain(&spec, 0.1).unwrap();
        let g = vec![0.0; mesh.boundary().len()];
        let rep = solve_dirichlet(&mesh, &PrescribedH::constant(0.3), &g, &SolveOptions::default()).unwrap();
        let d = nonexistence_diagnostic(&mesh, &rep, [1.0, 0.0], 0.1).unwrap();
        assert!(!d.stalled && !d.detected);
        assert!((d.growth - 1.0).abs() < 1e-9, "{d:?}");
    }
}
