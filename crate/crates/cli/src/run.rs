//! The experiment pipelines behind each subcommand.

use std::path::Path;

use serde::Serialize;

use mcgraph::barriers::{
    assemble_v, assemble_w, compute_constants, height_bound, verify_supersolution, BoundaryPoint, HeightBound,
    LemmaConstants, PhiProfile, SupersolutionCheck,
};
use mcgraph::domain::{
    distance_to_boundary_field, distance_to_point_field, mesh_with_sizing, Mesh, MeshSizing, Refinement, ScalarField,
};
use mcgraph::serrin::{classify, generate_failing_data, serrin_margin, SerrinReport, Verdict};
use mcgraph::solver::{
    nonexistence_diagnostic, q_operator, solve_dirichlet, ContinuationStep, Discretization, NonexistenceDiagnostic,
    PrescribedH, SolveReport,
};

use crate::artifacts::{table_csv, vertex_csv, ArtifactSet, Manifest};
use crate::expr::Expr;
use crate::scenario::{BoundaryBlock, ControlBlock, ExperimentBlock, Loaded, RefineBlock, ScenarioError};

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INVALID_SCENARIO: i32 = 2;
    pub const NON_CONVERGENCE: i32 = 3;
    pub const BARRIER_FAILURE: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    /// the scenario is well formed but the experiment does not apply to it
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Core(#[from] mcgraph::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) | RunError::Refused(_) => exit::INVALID_SCENARIO,
            RunError::Core(_) | RunError::Io(_) => exit::FAILURE,
        }
    }
}

/// Command-line overrides of scenario values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub mesh_h: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    SolverNonConvergence,
    BarrierFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => exit::OK,
            Status::SolverNonConvergence => exit::NON_CONVERGENCE,
            Status::BarrierFailure => exit::BARRIER_FAILURE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRef {
    pub name: String,
    pub hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub cells: usize,
    pub boundary_vertices: usize,
    pub max_edge: f64,
    pub min_angle_deg: f64,
}

impl MeshSummary {
    fn of(mesh: &Mesh) -> Self {
        MeshSummary {
            vertices: mesh.num_vertices(),
            cells: mesh.cells().len(),
            boundary_vertices: mesh.boundary().len(),
            max_edge: mesh.max_edge(),
            min_angle_deg: mesh.min_angle_deg(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSection {
    pub converged: bool,
    pub stalled: bool,
    pub iterations: usize,
    pub last_converged_lambda: Option<f64>,
    pub max_boundary_gradient: f64,
    pub max_gradient_point: [f64; 2],
    pub final_residual: Option<f64>,
    pub continuation: Vec<ContinuationStep>,
}

impl SolveSection {
    fn of(mesh: &Mesh, rep: &SolveReport) -> Self {
        SolveSection {
            converged: rep.converged,
            stalled: rep.stalled,
            iterations: rep.iterations,
            last_converged_lambda: rep.last_converged_lambda,
            max_boundary_gradient: rep.max_boundary_gradient,
            max_gradient_point: mesh.vertex(rep.max_gradient_vertex),
            final_residual: rep.residual_history.last().copied(),
            continuation: rep.continuation_trace.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierSection {
    pub y0: [f64; 2],
    pub eps: f64,
    pub k: f64,
    pub v: SupersolutionCheck,
    pub v_region: usize,
    pub w: SupersolutionCheck,
    pub w_region: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoRun {
    pub label: &'static str,
    pub y0: [f64; 2],
    /// amplitude applied to the scenario's `H`
    pub h_scale: f64,
    pub min_margin: f64,
    pub solve: SolveSection,
    pub diagnostic: NonexistenceDiagnostic,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSection {
    pub y0: [f64; 2],
    pub support: f64,
    pub eps: f64,
    pub safety: f64,
    pub height_bound: HeightBound,
    pub violating: DemoRun,
    pub control: DemoRun,
    /// the violating run shows the blow-up and the control converged
    pub dichotomy: bool,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct RunReport {
    pub scenario: ScenarioRef,
    pub experiment: String,
    pub status: Status,
    pub exit_code: i32,
    pub verdict: Verdict,
    pub analysis: SerrinReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<LemmaConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height_bound: Option<HeightBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barriers: Option<BarrierSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_Q_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_Q_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demo: Option<DemoSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonexistence_detected: Option<bool>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

const ANALYSIS_RESOLUTION: usize = 512;
const BARRIER_REFINE: RefineBlock = RefineBlock {
    h_min_over_a: 0.2,
    radius_over_a: 1.5,
};
const DEMO_REFINE: RefineBlock = RefineBlock {
    h_min_over_a: 0.05,
    radius_over_a: 1.5,
};

struct Ctx<'a> {
    loaded: &'a Loaded,
    mesh_h: f64,
    tol: f64,
    seed: u64,
}

impl Ctx<'_> {
    fn mesh(&self, centers: &[[f64; 2]], a: Option<f64>, refine: Option<RefineBlock>) -> Result<Mesh, RunError> {
        let mut sizing = MeshSizing::uniform(self.mesh_h);
        if let (Some(a), Some(r)) = (a, refine) {
            for &center in centers {
                sizing = sizing.refined(Refinement {
                    center,
                    h_min: (r.h_min_over_a * a).min(self.mesh_h),
                    radius: r.radius_over_a * a,
                });
            }
        }
        let mesh = mesh_with_sizing(&self.loaded.domain, &sizing)?;
        log::info!("mesh: {} vertices, {} cells", mesh.num_vertices(), mesh.cells().len());
        Ok(mesh)
    }

    fn options(&self) -> mcgraph::solver::SolveOptions {
        let mut o = self.loaded.scenario.solver.options();
        o.tol = self.tol;
        o
    }

    fn point(&self, component: usize, s: f64) -> Result<[f64; 2], RunError> {
        Ok(self.loaded.domain.component(component)?.point_at(s))
    }
}

fn boundary_data(ctx: &Ctx, mesh: &Mesh, block: &BoundaryBlock) -> Result<Vec<f64>, RunError> {
    let nb = mesh.boundary().len();
    let at = |f: &dyn Fn([f64; 2]) -> f64| mesh.boundary().iter().map(|b| f(mesh.vertex(b.vertex))).collect();
    Ok(match block {
        BoundaryBlock::Zero => vec![0.0; nb],
        BoundaryBlock::Constant { value } => vec![*value; nb],
        BoundaryBlock::Expression { expr } => {
            let e = Expr::parse(expr).map_err(ScenarioError::from)?;
            if e.depends_on_z() {
                return Err(ScenarioError::Invalid("boundary data may not depend on z".into()).into());
            }
            let values: Vec<f64> = at(&|x| e.eval(x, 0.0));
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(ScenarioError::Invalid(format!("boundary data take the value {v}")).into());
            }
            values
        }
        BoundaryBlock::Table { values } => {
            if values.len() != nb {
                return Err(ScenarioError::Invalid(format!(
                    "boundary table has {} values, the mesh has {nb} boundary vertices",
                    values.len()
                ))
                .into());
            }
            values.clone()
        }
        BoundaryBlock::Bump {
            component,
            s,
            radius,
            height,
            base,
        } => generate_failing_data(mesh, ctx.point(*component, *s)?, *radius, *base, *height)?,
    })
}

fn write_solution(set: &mut ArtifactSet, prefix: &str, mesh: &Mesh, h: &PrescribedH, rep: &SolveReport) -> Result<(), RunError> {
    let values = rep.solution.as_ref().map_or_else(|| rep.last_iterate.clone(), |s| s.values().to_vec());
    let name = if rep.converged { "solution" } else { "last_iterate" };
    set.write(&format!("{prefix}{name}.csv"), vertex_csv(mesh, values.iter().map(|&v| Some(v))).as_bytes())?;
    let q = q_operator(mesh, h, &ScalarField::new(mesh, values)?)?;
    set.write(&format!("{prefix}residual.csv"), vertex_csv(mesh, q.values().iter().map(|&v| Some(v))).as_bytes())?;
    let trace = rep.continuation_trace.iter().map(|s| {
        vec![
            s.lambda,
            f64::from(u8::from(s.converged)),
            s.iterations as f64,
            s.residual,
            s.max_boundary_gradient,
        ]
    });
    let header = ["lambda", "converged", "iterations", "residual", "max_boundary_gradient"];
    set.write(&format!("{prefix}continuation.csv"), table_csv(&header, trace).as_bytes())?;
    Ok(())
}

fn boundary_csv(mesh: &Mesh, g: &[f64]) -> String {
    let mut values = vec![None; mesh.num_vertices()];
    for (b, &v) in mesh.boundary().iter().zip(g) {
        values[b.vertex] = Some(v);
    }
    vertex_csv(mesh, values)
}

/// `(component, s)` from the experiment, or the classifier's worst boundary point.
fn choose_point(analysis: &SerrinReport, component: Option<usize>, s: Option<f64>) -> BoundaryPoint {
    match (component, s) {
        (None, None) => BoundaryPoint {
            component: analysis.argmin.component,
            s: analysis.argmin.s,
        },
        (c, s) => BoundaryPoint {
            component: c.unwrap_or(0),
            s: s.unwrap_or(0.0),
        },
    }
}

fn lemma_constants(ctx: &Ctx, bp: BoundaryPoint, k: f64) -> Result<LemmaConstants, RunError> {
    let l = ctx.loaded;
    match compute_constants(&l.domain, &l.h, bp, k, None) {
        Err(mcgraph::Error::LemmaInapplicable(msg)) => Err(RunError::Refused(msg)),
        other => Ok(other?),
    }
}

/// Runs `experiment` on a loaded scenario, writing artifacts into `out`.
pub fn run(loaded: &Loaded, experiment: &ExperimentBlock, out: &Path, ov: Overrides) -> Result<RunOutcome, RunError> {
    let solver = &loaded.scenario.solver;
    let ctx = Ctx {
        loaded,
        mesh_h: ov.mesh_h.unwrap_or(solver.h),
        tol: ov.tol.unwrap_or(solver.tol),
        seed: ov.seed.unwrap_or(loaded.scenario.seed),
    };
    if !(ctx.mesh_h > 0.0 && ctx.tol > 0.0) {
        return Err(ScenarioError::Invalid("mesh size and tolerance must be positive".into()).into());
    }
    let resolution = match experiment {
        ExperimentBlock::Analyze { resolution } => *resolution,
        _ => ANALYSIS_RESOLUTION,
    };
    let analysis = classify(&loaded.domain, &loaded.h, resolution)?;
    log::info!("verdict: {:?} (min margin {:.6e})", analysis.verdict, analysis.min_margin);

    let mut set = ArtifactSet::new(out)?;
    let mut report = RunReport {
        scenario: ScenarioRef {
            name: loaded.scenario.name.clone(),
            hash: loaded.hash.clone(),
            seed: ctx.seed,
        },
        experiment: experiment.name().to_string(),
        status: Status::Ok,
        exit_code: exit::OK,
        verdict: analysis.verdict,
        analysis: analysis.clone(),
        mesh: None,
        constants: None,
        height_bound: None,
        solve: None,
        barriers: None,
        max_Q_v: None,
        max_Q_w: None,
        demo: None,
        nonexistence_detected: None,
    };
    set.write("scenario.toml", loaded.source.as_bytes())?;
    let margins = analysis
        .samples
        .iter()
        .map(|m| vec![m.component as f64, m.s, m.point[0], m.point[1], m.curvature, m.margin]);
    set.write(
        "margins.csv",
        table_csv(&["component", "s", "x", "y", "boundary_curvature", "margin"], margins).as_bytes(),
    )?;

    match experiment {
        ExperimentBlock::Analyze { .. } => {
            if let Verdict::ViolatedAt { component, s, .. } = analysis.verdict {
                // the lemma needs a nonnegative H; report the constants when they exist
                if let Ok(c) = compute_constants(&loaded.domain, &loaded.h, BoundaryPoint { component, s }, 0.0, None) {
                    let psi = c.psi()?;
                    report.height_bound = Some(height_bound(&c, &psi, 0.0, 0.0));
                    report.constants = Some(c);
                }
            }
        }
        ExperimentBlock::Solve => solve_pipeline(&ctx, &mut set, &mut report)?,
        ExperimentBlock::VerifyBarriers {
            component,
            s,
            eps_over_a,
            k,
        } => {
            let bp = choose_point(&analysis, *component, *s);
            barrier_pipeline(&ctx, &mut set, &mut report, bp, *eps_over_a, *k)?
        }
        ExperimentBlock::DemoNonexistence {
            component,
            s,
            k,
            support_over_a,
            safety,
            control,
        } => {
            if !matches!(analysis.verdict, Verdict::ViolatedAt { .. }) {
                return Err(RunError::Refused(format!(
                    "demo-nonexistence needs a ViolatedAt verdict, the classifier reports {:?}",
                    analysis.verdict
                )));
            }
            let bp = choose_point(&analysis, *component, *s);
            let params = DemoParams {
                bp,
                k: *k,
                support_over_a: *support_over_a,
                safety: *safety,
                control,
            };
            demo_pipeline(&ctx, &mut set, &mut report, &params)?
        }
    }

    report.exit_code = report.status.exit_code();
    set.write_json("report.json", &report)?;
    let manifest = set.finish(&loaded.scenario.name, &loaded.hash, experiment.name(), ctx.seed)?;
    Ok(RunOutcome { report, manifest })
}

fn solve_pipeline(ctx: &Ctx, set: &mut ArtifactSet, report: &mut RunReport) -> Result<(), RunError> {
    let l = ctx.loaded;
    let block = &l.scenario.boundary;
    let mesh = match block {
        BoundaryBlock::Bump { component, s, radius, .. } => {
            ctx.mesh(&[ctx.point(*component, *s)?], Some(*radius), l.scenario.solver.refine)?
        }
        _ => ctx.mesh(&[], None, None)?,
    };
    let g = boundary_data(ctx, &mesh, block)?;
    set.write("boundary_data.csv", boundary_csv(&mesh, &g).as_bytes())?;
    let rep = solve_dirichlet(&mesh, &l.h, &g, &ctx.options())?;
    log::info!("solve: converged = {}, {} Newton iterations", rep.converged, rep.iterations);
    write_solution(set, "", &mesh, &l.h, &rep)?;
    report.mesh = Some(MeshSummary::of(&mesh));
    report.solve = Some(SolveSection::of(&mesh, &rep));
    if !rep.converged {
        report.status = Status::SolverNonConvergence;
    }
    Ok(())
}

fn barrier_pipeline(
    ctx: &Ctx,
    set: &mut ArtifactSet,
    report: &mut RunReport,
    bp: BoundaryPoint,
    eps_over_a: f64,
    k: f64,
) -> Result<(), RunError> {
    let l = ctx.loaded;
    let c = lemma_constants(ctx, bp, k)?;
    let refine = l.scenario.solver.refine.unwrap_or(BARRIER_REFINE);
    let mesh = ctx.mesh(&[c.y0], Some(c.a), Some(refine))?;
    let disc = Discretization::new(&mesh)?;
    let d = distance_to_boundary_field(&mesh, &l.domain, c.window.clone())?;
    let rho = distance_to_point_field(&mesh, c.y0)?;

    let eps = eps_over_a * c.a;
    let phi = PhiProfile::new(c.nu, c.a, eps)?;
    let v = assemble_v(&mesh, k, k, &phi, &d, &rho)?;
    let qv = verify_supersolution(&disc, &l.h, &v)?;
    let psi = c.psi()?;
    let w = assemble_w(&mesh, k, &psi, &rho)?;
    let qw = verify_supersolution(&disc, &l.h, &w)?;
    log::info!("max Qv = {:.6e}, max Qw = {:.6e}", qv.max_q, qw.max_q);

    set.write("barrier_v.csv", vertex_csv(&mesh, (0..mesh.num_vertices()).map(|i| v.get(i))).as_bytes())?;
    set.write("barrier_w.csv", vertex_csv(&mesh, (0..mesh.num_vertices()).map(|i| w.get(i))).as_bytes())?;
    if !(qv.holds() && qw.holds()) {
        report.status = Status::BarrierFailure;
    }
    report.max_Q_v = Some(qv.max_q);
    report.max_Q_w = Some(qw.max_q);
    report.barriers = Some(BarrierSection {
        y0: c.y0,
        eps,
        k,
        v_region: v.region_len(),
        v: qv,
        w_region: w.region_len(),
        w: qw,
    });
    report.height_bound = Some(height_bound(&c, &psi, k, k));
    report.constants = Some(c);
    report.mesh = Some(MeshSummary::of(&mesh));
    Ok(())
}

struct DemoParams<'a> {
    bp: BoundaryPoint,
    k: f64,
    support_over_a: f64,
    safety: f64,
    control: &'a ControlBlock,
}

/// Amplitude `1 − j/12` of the first reduced `H` whose minimum margin exceeds `target`.
fn reduce_h(ctx: &Ctx, target: f64) -> Result<(f64, f64), RunError> {
    let l = ctx.loaded;
    for j in 1..12 {
        let scale = 1.0 - j as f64 / 12.0;
        let rep = classify(&l.domain, &l.h.scaled(scale), ANALYSIS_RESOLUTION)?;
        if rep.min_margin > target {
            return Ok((scale, rep.min_margin));
        }
    }
    Err(RunError::Refused(format!("no reduction of H reaches margin {target}")))
}

fn demo_pipeline(ctx: &Ctx, set: &mut ArtifactSet, report: &mut RunReport, p: &DemoParams) -> Result<(), RunError> {
    let l = ctx.loaded;
    let c = lemma_constants(ctx, p.bp, p.k)?;
    let psi = c.psi()?;
    // data equal k off the bump, so k also bounds them on ∂Ω ∖ B_a
    let hb = height_bound(&c, &psi, p.k, p.k);
    let eps = p.safety * hb.eps_of_a;
    let support = p.support_over_a * c.a;
    if !(eps > 0.0 && support > 0.0) {
        return Err(ScenarioError::Invalid("safety and support must be positive".into()).into());
    }

    let (control_y0, control_scale, control_margin) = match p.control {
        ControlBlock::ReduceH { margin } => {
            let (scale, m) = reduce_h(ctx, *margin)?;
            (c.y0, scale, m)
        }
        ControlBlock::MoveBump { component, s } => {
            let m = serrin_margin(&l.domain, &l.h, *component, *s)?;
            if m <= 0.0 {
                return Err(RunError::Refused(format!(
                    "control bump at component {component}, s = {s} has margin {m} ≤ 0"
                )));
            }
            (ctx.point(*component, *s)?, 1.0, m)
        }
    };

    let refine = l.scenario.solver.refine.unwrap_or(DEMO_REFINE);
    let centers = if control_y0 == c.y0 { vec![c.y0] } else { vec![c.y0, control_y0] };
    let mesh = ctx.mesh(&centers, Some(support), Some(refine))?;
    let opts = ctx.options();

    let g = generate_failing_data(&mesh, c.y0, support, p.k, eps)?;
    set.write("violating_boundary_data.csv", boundary_csv(&mesh, &g).as_bytes())?;
    log::info!("violating run: eps = {eps:.6e}, support = {support:.6e}");
    let rep_v = solve_dirichlet(&mesh, &l.h, &g, &opts)?;
    write_solution(set, "violating_", &mesh, &l.h, &rep_v)?;
    let diag_v = nonexistence_diagnostic(&mesh, &rep_v, c.y0, support)?;

    let h_control = l.h.scaled(control_scale);
    let g_control = if control_y0 == c.y0 {
        g.clone()
    } else {
        generate_failing_data(&mesh, control_y0, support, p.k, eps)?
    };
    set.write("control_boundary_data.csv", boundary_csv(&mesh, &g_control).as_bytes())?;
    log::info!("control run: H scale {control_scale:.4}, margin {control_margin:.6e}");
    let rep_c = solve_dirichlet(&mesh, &h_control, &g_control, &opts)?;
    write_solution(set, "control_", &mesh, &h_control, &rep_c)?;
    let diag_c = nonexistence_diagnostic(&mesh, &rep_c, control_y0, support)?;

    let dichotomy = diag_v.detected && rep_c.converged;
    log::info!("non-existence detected: {}, control converged: {}", diag_v.detected, rep_c.converged);
    report.nonexistence_detected = Some(diag_v.detected);
    report.demo = Some(DemoSection {
        y0: c.y0,
        support,
        eps,
        safety: p.safety,
        height_bound: hb,
        violating: DemoRun {
            label: "violating",
            y0: c.y0,
            h_scale: 1.0,
            min_margin: report.analysis.min_margin,
            solve: SolveSection::of(&mesh, &rep_v),
            diagnostic: diag_v,
        },
        control: DemoRun {
            label: "control",
            y0: control_y0,
            h_scale: control_scale,
            min_margin: control_margin,
            solve: SolveSection::of(&mesh, &rep_c),
            diagnostic: diag_c,
        },
        dichotomy,
    });
    report.height_bound = Some(hb);
    report.constants = Some(c);
    report.mesh = Some(MeshSummary::of(&mesh));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses_map_to_distinct_codes() {
        let codes = [
            Status::Ok.exit_code(),
            Status::SolverNonConvergence.exit_code(),
            Status::BarrierFailure.exit_code(),
            RunError::Refused(String::new()).exit_code(),
            RunError::Core(mcgraph::Error::Meshing(String::new())).exit_code(),
        ];
        assert_eq!(codes, [0, 3, 4, 2, 1]);
    }
}
