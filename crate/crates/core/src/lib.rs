//! Graphs of prescribed mean curvature over domains in two-dimensional space forms.
//!
//! The Dirichlet problem `div(∇u/W) = nH(x, u)` in `Ω`, `u = φ` on `∂Ω`, is solved on
//! unstructured meshes in the Euclidean, hyperbolic (Poincaré) and spherical (polar) charts.
//! Around the solver sit the pieces needed to study solvability:
//!
//! * [`serrin`] samples the boundary margin `(n − 1)ℋ − n sup|H|` and classifies the
//!   configuration,
//! * [`barriers`] builds the local supersolutions and the height bound `k + ε(a)` at a
//!   violating point,
//! * [`solver`] holds the discrete operator, Newton with continuation, a comparison check
//!   and the blow-up diagnostic.
//!
//! ```
//! use mcgraph::domain::{mesh_domain, DomainSpec};
//! use mcgraph::geometry::ManifoldModel;
//! use mcgraph::solver::{solve_dirichlet, PrescribedH, SolveOptions};
//!
//! let disc = DomainSpec::disc(ManifoldModel::euclidean(2)?, [0.0, 0.0], 1.0)?;
//! let mesh = mesh_domain(&disc, 0.2)?;
//! let g = vec![0.0; mesh.boundary().len()];
//! let report = solve_dirichlet(&mesh, &PrescribedH::constant(0.4), &g, &SolveOptions::default())?;
//! assert!(report.converged);
//! # Ok::<(), mcgraph::Error>(())
//! ```
//!
//! The guide in `book/` walks through each module; its snippets run as doctests.

pub mod error;
pub mod geometry;
pub mod ode;
pub mod quad;
pub mod domain;
pub mod solver;
pub mod barriers;
pub mod serrin;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/serrin.md")]
    mod serrin {}
    #[doc = include_str!("../../../book/src/barriers.md")]
    mod barriers {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/limitations.md")]
    mod limitations {}
}
