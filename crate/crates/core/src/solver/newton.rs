//! Damped Newton with continuation for the Dirichlet problem `𝔔u = 0`, `u = g` on `∂Ω`.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use std::cell::RefCell;
use serde::{Deserialize, Serialize};

use crate::domain::{Mesh, ScalarField};
use crate::error::{Error, Result};

use super::{Discretization, PrescribedH};

/// What the continuation parameter scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Continuation {
    /// `g_λ = λ g`
    #[default]
    BoundaryData,
    /// `H_λ = λ H`
    HAmplitude,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub continuation: Continuation,
    /// λ takes the values `1/steps, 2/steps, …, 1`
    pub steps: usize,
    /// Armijo backtracking floor
    pub min_step: f64,
    /// halvings of a failed λ increment before it counts as a failure
    pub substeps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 60,
            continuation: Continuation::BoundaryData,
            steps: 10,
            min_step: 1e-6,
            substeps: 0,
        }
    }
}

/// One continuation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub max_boundary_gradient: f64,
    /// set when the Newton matrix could not be factorised
    pub singular: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    /// Newton iterations over all stages
    pub iterations: usize,
    /// `‖𝔔u‖∞` after every iterate, across stages
    pub residual_history: Vec<f64>,
    /// sup over boundary vertices of the model norm `‖∇u‖` on the final iterate
    pub max_boundary_gradient: f64,
    pub max_gradient_vertex: usize,
    pub continuation_trace: Vec<ContinuationStep>,
    /// two consecutive stage failures ended the run
    pub stalled: bool,
    /// largest λ reached with a converged solve
    pub last_converged_lambda: Option<f64>,
    pub solution: Option<ScalarField>,
    /// the final iterate, converged or not
    pub last_iterate: Vec<f64>,
}

struct Problem<'a, 'm> {
    disc: &'a Discretization<'m>,
    h: PrescribedH,
    n: f64,
    /// interior vertex → unknown index
    index: Vec<Option<usize>>,
    /// the sparsity pattern never changes, so its symbolic analysis is shared
    symbolic: &'a RefCell<Option<SymbolicLu<usize>>>,
}

const MAX_SHIFT: f64 = 1e8;

fn max_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m: f64, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY })
}

impl Problem<'_, '_> {
    fn mesh(&self) -> &Mesh {
        self.disc.mesh()
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.mesh()
            .interior()
            .iter()
            .map(|&v| self.disc.mc_at(v, u) - self.n * self.h.eval(self.mesh().vertex(v), u[v]))
            .collect()
    }

    /// Newton matrix at `u`, or the Laplace–Beltrami matrix (linearisation of `ℳ` at a
    /// flat graph, without `H`) when `u` is `None`. The diagonal is scaled by `1 + shift`.
    fn jacobian(&self, u: Option<&[f64]>, shift: f64) -> Result<SparseColMat<usize, f64>> {
        let mesh = self.mesh();
        let m = mesh.interior().len();
        let mut trips = Vec::with_capacity(m * 20);
        for (row, &v) in mesh.interior().iter().enumerate() {
            let jet = u.map_or([0.0; 5], |u| self.disc.jet(v, u));
            let (_, dm) = self.disc.mc_and_derivative(v, &jet);
            let st = self.disc.stencil(v);
            let mut centre = u.map_or(0.0, |u| -self.n * self.h.dz(mesh.vertex(v), u[v]));
            for (c, &w) in st.coef.iter().zip(&st.nbrs) {
                let val: f64 = (0..5).map(|k| dm[k] * c[k]).sum();
                centre -= val;
                if let Some(col) = self.index[w] {
                    trips.push(Triplet::new(row, col, val));
                }
            }
            trips.push(Triplet::new(row, row, (1.0 + shift) * centre));
        }
        SparseColMat::try_new_from_triplets(m, m, &trips)
            .map_err(|e| Error::InvalidArgument(format!("Jacobian assembly: {e:?}")))
    }

    fn factor(&self, mat: &SparseColMat<usize, f64>) -> Option<Lu<usize, f64>> {
        let mut cache = self.symbolic.borrow_mut();
        if cache.is_none() {
            *cache = SymbolicLu::try_new(mat.symbolic()).ok();
        }
        let sym = cache.clone()?;
        Lu::try_new_with_symbolic(sym, mat.as_ref()).ok()
    }

    /// Adds to `u` the discrete harmonic extension of boundary increments `db`
    /// (one per boundary vertex), so a continuation stage starts from a smooth predictor.
    fn extend(&self, u: &mut [f64], db: &[f64]) -> Result<()> {
        if db.iter().all(|d| *d == 0.0) {
            return Ok(());
        }
        let mesh = self.mesh();
        let mut w = vec![0.0; mesh.num_vertices()];
        for (b, d) in mesh.boundary().iter().zip(db) {
            w[b.vertex] = *d;
        }
        // L w with zero interior values, L linear in the vertex values
        let jac = self.jacobian(None, 0.0)?;
        let rhs = Col::<f64>::from_fn(mesh.interior().len(), |k| {
            let v = mesh.interior()[k];
            let (_, dm) = self.disc.mc_and_derivative(v, &[0.0; 5]);
            let st = self.disc.stencil(v);
            st.coef
                .iter()
                .zip(&st.nbrs)
                .map(|(c, &j)| (0..5).map(|k| dm[k] * c[k]).sum::<f64>() * w[j])
                .sum::<f64>()
        });
        let lu = self
            .factor(&jac)
            .ok_or_else(|| Error::InvalidArgument("singular Laplace–Beltrami matrix".into()))?;
        let x = lu.solve(&rhs);
        for (k, &v) in mesh.interior().iter().enumerate() {
            u[v] -= x[k];
        }
        for (b, d) in mesh.boundary().iter().zip(db) {
            u[b.vertex] += d;
        }
        Ok(())
    }

    fn boundary_gradient(&self, u: &[f64]) -> (f64, usize) {
        self.mesh()
            .boundary()
            .iter()
            .map(|b| (self.disc.gradient_norm(b.vertex, u), b.vertex))
            .fold((0.0, 0), |acc, g| if g.0 > acc.0 { g } else { acc })
    }
}

struct Stage {
    converged: bool,
    singular: bool,
    iterations: usize,
    residual: f64,
}

fn newton(
    prob: &Problem,
    u: &mut [f64],
    opts: &SolveOptions,
    history: &mut Vec<f64>,
) -> Stage {
    let interior = prob.mesh().interior().to_vec();
    let mut f = prob.residual(u);
    let mut norm = max_norm(&f);
    history.push(norm.max(f64::MIN_POSITIVE));
    let mut stage = Stage {
        converged: false,
        singular: false,
        iterations: 0,
        residual: norm,
    };
    if !norm.is_finite() {
        return stage;
    }
    // Diagonal shift `μ`: zero is plain Newton; positive values blend in an implicit
    // pseudo-time step and are raised whenever the line search fails.
    let mut shift = 0.0;
    for it in 0..opts.max_iter {
        if norm < opts.tol {
            stage.converged = true;
            break;
        }
        stage.iterations = it + 1;
        let jac = match prob.jacobian(Some(u), shift) {
            Ok(j) => j,
            Err(_) => {
                stage.singular = true;
                break;
            }
        };
        let Some(lu) = prob.factor(&jac) else {
            stage.singular = true;
            break;
        };
        let rhs = Col::<f64>::from_fn(f.len(), |i| f[i]);
        let delta = lu.solve(&rhs);
        if (0..delta.nrows()).any(|i| !delta[i].is_finite()) {
            stage.singular = true;
            break;
        }
        let mut alpha = 1.0;
        let mut trial = u.to_vec();
        let accepted = loop {
            for (k, &v) in interior.iter().enumerate() {
                trial[v] = u[v] - alpha * delta[k];
            }
            let ft = prob.residual(&trial);
            let nt = max_norm(&ft);
            if nt <= (1.0 - 1e-4 * alpha) * norm {
                norm = nt;
                f = ft;
                break true;
            }
            alpha *= 0.5;
            if alpha < opts.min_step {
                break false;
            }
        };
        if !accepted {
            if shift >= MAX_SHIFT {
                break;
            }
            shift = (10.0 * shift).max(1.0);
            continue;
        }
        u.copy_from_slice(&trial);
        history.push(norm.max(f64::MIN_POSITIVE));
        if alpha == 1.0 {
            shift = if shift < 1e-3 { 0.0 } else { 0.1 * shift };
        } else if alpha < 0.25 {
            shift = (4.0 * shift).max(0.1).min(MAX_SHIFT);
        }
        log::trace!("newton it {it}: |F| = {norm:.3e}, step {alpha}, shift {shift:.1e}");
    }
    if norm < opts.tol {
        stage.converged = true;
    }
    stage.residual = norm;
    stage
}

/// Solves `𝔔u = 0` in `Ω` with `u = boundary_data` on `∂Ω` (one value per boundary vertex,
/// in boundary order).
pub fn solve_dirichlet(
    mesh: &Mesh,
    h: &PrescribedH,
    boundary_data: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let disc = Discretization::new(mesh)?;
    solve_with(&disc, h, boundary_data, None, opts)
}

/// As [`solve_dirichlet`] with a prebuilt discretisation and an optional initial guess for
/// the first stage.
pub fn solve_with(
    disc: &Discretization,
    h: &PrescribedH,
    boundary_data: &[f64],
    initial: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let mesh = disc.mesh();
    let nb = mesh.boundary().len();
    if boundary_data.len() != nb {
        return Err(Error::FieldLength {
            expected: nb,
            got: boundary_data.len(),
        });
    }
    if let Some(b) = boundary_data.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("boundary value {b}")));
    }
    if opts.steps == 0 || !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("continuation steps and tolerance must be positive".into()));
    }
    let symbolic = RefCell::new(None);
    let mut index = vec![None; mesh.num_vertices()];
    for (k, &v) in mesh.interior().iter().enumerate() {
        index[v] = Some(k);
    }
    let mut u = match initial {
        Some(init) if init.len() == mesh.num_vertices() => init.to_vec(),
        Some(init) => {
            return Err(Error::FieldLength {
                expected: mesh.num_vertices(),
                got: init.len(),
            })
        }
        None => vec![0.0; mesh.num_vertices()],
    };
    let mut history = Vec::new();
    let mut trace = Vec::new();
    let mut total_iter = 0;
    let mut last_ok: Option<(f64, Vec<f64>)> = None;
    let mut failures_in_row = 0;
    let mut stalled = false;
    let mut final_iterate = u.clone();

    let run_stage = |lambda: f64, u: &mut Vec<f64>, history: &mut Vec<f64>| {
        let (hl, gl) = match opts.continuation {
            Continuation::BoundaryData => (h.clone(), lambda),
            Continuation::HAmplitude => (h.scaled(lambda), 1.0),
        };
        let prob = Problem {
            disc,
            h: hl,
            n: mesh.model().dim() as f64,
            index: index.clone(),
            symbolic: &symbolic,
        };
        let db: Vec<f64> = mesh
            .boundary()
            .iter()
            .zip(boundary_data)
            .map(|(b, g)| gl * g - u[b.vertex])
            .collect();
        if prob.extend(u, &db).is_err() {
            log::warn!("harmonic predictor unavailable; starting from the previous iterate");
        }
        for (b, g) in mesh.boundary().iter().zip(boundary_data) {
            u[b.vertex] = gl * g;
        }
        let stage = newton(&prob, u, opts, history);
        let (grad, _) = prob.boundary_gradient(u);
        (stage, grad)
    };

    let lambdas: Vec<f64> = (1..=opts.steps).map(|k| k as f64 / opts.steps as f64).collect();
    for &target in &lambdas {
        let from = last_ok.as_ref().map_or(0.0, |(l, _)| *l);
        let mut increments = vec![target];
        let mut success = false;
        let mut attempt = 0;
        while let Some(lambda) = increments.pop() {
            let mut trial = last_ok.as_ref().map_or_else(|| u.clone(), |(_, s)| s.clone());
            let (stage, grad) = run_stage(lambda, &mut trial, &mut history);
            total_iter += stage.iterations;
            trace.push(ContinuationStep {
                lambda,
                converged: stage.converged,
                iterations: stage.iterations,
                residual: stage.residual,
                max_boundary_gradient: grad,
                singular: stage.singular,
            });
            final_iterate = trial.clone();
            if stage.converged {
                last_ok = Some((lambda, trial));
                success = lambda >= target;
            } else if attempt < opts.substeps {
                attempt += 1;
                let base = last_ok.as_ref().map_or(from, |(l, _)| *l);
                increments.push(target);
                increments.push(0.5 * (base + lambda));
            } else {
                increments.clear();
            }
        }
        if success {
            failures_in_row = 0;
        } else {
            failures_in_row += 1;
            if failures_in_row >= 2 {
                stalled = true;
                break;
            }
        }
    }
    if let Some((_, s)) = &last_ok {
        u = s.clone();
    }
    let converged = matches!(&last_ok, Some((l, _)) if *l >= 1.0);
    let prob = Problem {
        disc,
        h: h.clone(),
        n: mesh.model().dim() as f64,
        index,
        symbolic: &symbolic,
    };
    let report_field = if converged { &u } else { &final_iterate };
    let (max_grad, argmax) = prob.boundary_gradient(report_field);
    Ok(SolveReport {
        converged,
        iterations: total_iter,
        residual_history: history,
        max_boundary_gradient: max_grad,
        max_gradient_vertex: argmax,
        continuation_trace: trace,
        stalled,
        last_converged_lambda: last_ok.as_ref().map(|(l, _)| *l),
        solution: if converged {
            Some(ScalarField::new(mesh, u.clone())?)
        } else {
            None
        },
        last_iterate: final_iterate,
    })
}
