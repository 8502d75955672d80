use mcgraph::barriers::{assemble_w, compute_constants, height_bound, verify_supersolution, BoundaryPoint};
use mcgraph::domain::{distance_to_point_field, mesh_domain, DomainSpec};
use mcgraph::geometry::ManifoldModel;
use mcgraph::serrin::{classify, generate_failing_data, Verdict};
use mcgraph::solver::{nonexistence_diagnostic, solve_dirichlet, Discretization, PrescribedH, SolveOptions};

fn disc() -> DomainSpec {
    DomainSpec::disc(ManifoldModel::euclidean(2).unwrap(), [0.0, 0.0], 1.0).unwrap()
}

#[test]
fn classify_then_solve_when_the_condition_holds() {
    let spec = disc();
    let h = PrescribedH::constant(0.4);
    let report = classify(&spec, &h, 256).unwrap();
    assert_eq!(report.verdict, Verdict::StrongSerrinHolds);
    assert!((report.min_margin - 0.2).abs() < 1e-9);

    let mesh = mesh_domain(&spec, 0.1).unwrap();
    let g: Vec<f64> = mesh.boundary().iter().map(|b| 0.3 * mesh.vertex(b.vertex)[0]).collect();
    let rep = solve_dirichlet(&mesh, &h, &g, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let diag = nonexistence_diagnostic(&mesh, &rep, [1.0, 0.0], 0.1).unwrap();
    assert!(!diag.detected);
}

#[test]
fn violated_disc_yields_constants_and_a_supersolution() {
    let spec = disc();
    let h = PrescribedH::constant(0.6);
    let report = classify(&spec, &h, 256).unwrap();
    let Verdict::ViolatedAt { component, s, .. } = report.verdict else {
        panic!("expected a violation, got {:?}", report.verdict);
    };
    let c = compute_constants(&spec, &h, BoundaryPoint { component, s }, 0.0, None).unwrap();
    assert!((c.nu - 0.025).abs() < 1e-12);
    assert!(c.a > 0.0 && c.a < c.r2);

    let psi = c.psi().unwrap();
    let hb = height_bound(&c, &psi, 0.0, 0.0);
    assert!((hb.eps_of_a - c.eps_of_a().unwrap()).abs() < 1e-12);

    let mesh = mesh_domain(&spec, 0.1).unwrap();
    let rho = distance_to_point_field(&mesh, c.y0).unwrap();
    let w = assemble_w(&mesh, 0.0, &psi, &rho).unwrap();
    let disc = Discretization::new(&mesh).unwrap();
    assert!(verify_supersolution(&disc, &h, &w).unwrap().max_q < 0.0);

    let g = generate_failing_data(&mesh, c.y0, c.a, 0.0, 2.0 * hb.eps_of_a).unwrap();
    assert_eq!(g.len(), mesh.boundary().len());
    assert!(g.iter().all(|&v| v >= 0.0));
}
