//! Scenario files: one TOML document per run.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use mcgraph::domain::{Curve, DomainSpec, Shape};
use mcgraph::geometry::{Chart, ManifoldModel};
use mcgraph::solver::{Continuation, HSign, PrescribedH, SolveOptions};

use crate::expr::{Expr, ParseError};

/// Probe points used to spot-check the declared properties of `H`.
pub const H_PROBES: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("H expression: {0}")]
    Expr(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] mcgraph::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartName {
    Euclidean,
    Poincare,
    SpherePolar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default)]
    pub curvature: f64,
    #[serde(default = "two")]
    pub dim: usize,
    /// inferred from the sign of the curvature when omitted
    pub chart: Option<ChartName>,
}

fn two() -> usize {
    2
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            curvature: 0.0,
            dim: 2,
            chart: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainBlock {
    /// A chart disc, or with `geodesic = true` the geodesic ball of that radius about the
    /// chart origin.
    Circle {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        geodesic: bool,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default)]
        rotation: f64,
    },
    RoundedRectangle {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default = "four")]
        exponent: u32,
        #[serde(default)]
        rotation: f64,
    },
    Dumbbell {
        #[serde(default)]
        center: [f64; 2],
        half_length: f64,
        waist: f64,
        #[serde(default)]
        rotation: f64,
    },
    Annulus {
        inner: f64,
        outer: f64,
    },
    /// Star-shaped `r(θ) = a0 + Σ cos[k−1] cos kθ + sin[k−1] sin kθ`.
    Fourier {
        #[serde(default)]
        center: [f64; 2],
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Explicit curves; holes must be `reversed`.
    Curves { curves: Vec<Curve> },
}

fn four() -> u32 {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignDeclaration {
    Nonnegative,
    Nonpositive,
    Mixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HBlock {
    Constant {
        value: f64,
    },
    Expression {
        expr: String,
        z_range: [f64; 2],
        sign: SignDeclaration,
        #[serde(default)]
        monotone: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryBlock {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// An expression in `x1`, `x2`.
    Expression {
        expr: String,
    },
    /// One value per boundary vertex, in mesh boundary order.
    Table {
        values: Vec<f64>,
    },
    /// `k + eps·χ(ρ/a)` about a boundary point (arc-length `s` on `component`).
    Bump {
        #[serde(default)]
        component: usize,
        #[serde(default)]
        s: f64,
        radius: f64,
        height: f64,
        #[serde(default)]
        base: f64,
    },
}

/// Mesh grading about the boundary point chosen by the classifier, in units of the lemma
/// radius `a`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineBlock {
    pub h_min_over_a: f64,
    #[serde(default = "one_and_half")]
    pub radius_over_a: f64,
}

fn one_and_half() -> f64 {
    1.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub substeps: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub continuation: Continuation,
    pub refine: Option<RefineBlock>,
}

fn default_h() -> f64 {
    0.05
}
fn default_tol() -> f64 {
    1e-9
}
fn default_steps() -> usize {
    10
}
fn default_max_iter() -> usize {
    60
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            h: default_h(),
            tol: default_tol(),
            steps: default_steps(),
            substeps: 0,
            max_iter: default_max_iter(),
            continuation: Continuation::default(),
            refine: None,
        }
    }
}

impl SolverBlock {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            continuation: self.continuation,
            steps: self.steps,
            substeps: self.substeps,
            ..SolveOptions::default()
        }
    }
}

/// How the solvable control run of the non-existence demo is built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlBlock {
    /// Scale `H` by `1 − j/12`, `j = 1, 2, …`, until the minimum margin exceeds `margin`.
    ReduceH {
        #[serde(default = "default_control_margin")]
        margin: f64,
    },
    /// Same `H`, with the bump moved to a boundary point of positive margin.
    MoveBump { component: usize, s: f64 },
}

fn default_control_margin() -> f64 {
    0.15
}

impl Default for ControlBlock {
    fn default() -> Self {
        ControlBlock::ReduceH {
            margin: default_control_margin(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentBlock {
    Analyze {
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    Solve,
    VerifyBarriers {
        /// boundary point for `v`; the classifier's worst point when omitted
        component: Option<usize>,
        s: Option<f64>,
        /// `ε` as a fraction of `a`
        #[serde(default = "default_eps_over_a")]
        eps_over_a: f64,
        #[serde(default)]
        k: f64,
    },
    DemoNonexistence {
        component: Option<usize>,
        s: Option<f64>,
        #[serde(default)]
        k: f64,
        /// support of the bump, in units of the lemma radius `a`
        #[serde(default = "one")]
        support_over_a: f64,
        /// multiplier on `ε(a)` for the bump height
        #[serde(default = "two_f")]
        safety: f64,
        #[serde(default)]
        control: ControlBlock,
    },
}

fn default_resolution() -> usize {
    512
}
fn default_eps_over_a() -> f64 {
    0.25
}
fn one() -> f64 {
    1.0
}
fn two_f() -> f64 {
    2.0
}

impl ExperimentBlock {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentBlock::Analyze { .. } => "analyze",
            ExperimentBlock::Solve => "solve",
            ExperimentBlock::VerifyBarriers { .. } => "verify-barriers",
            ExperimentBlock::DemoNonexistence { .. } => "demo-nonexistence",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelBlock,
    pub domain: DomainBlock,
    pub h: HBlock,
    #[serde(default)]
    pub boundary: BoundaryBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    pub experiment: ExperimentBlock,
}

/// A scenario with its derived objects built and its declarations checked.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub model: ManifoldModel,
    pub domain: DomainSpec,
    pub h: PrescribedH,
    pub source: String,
    /// sha256 of the scenario source text
    pub hash: String,
}

impl Scenario {
    pub fn from_toml(src: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(src)?)
    }

    pub fn model(&self) -> Result<ManifoldModel, ScenarioError> {
        let m = &self.model;
        let chart = match m.chart {
            Some(ChartName::Euclidean) => Chart::EuclideanCartesian,
            Some(ChartName::Poincare) => Chart::PoincareDisk,
            Some(ChartName::SpherePolar) => Chart::SpherePolar,
            None if m.curvature < 0.0 => Chart::PoincareDisk,
            None if m.curvature > 0.0 => Chart::SpherePolar,
            None => Chart::EuclideanCartesian,
        };
        Ok(ManifoldModel::new(m.curvature, m.dim, chart)?)
    }

    pub fn domain(&self, model: &ManifoldModel) -> Result<DomainSpec, ScenarioError> {
        let placed = |shape: Shape, center: [f64; 2], rotation: f64| -> Result<Curve, ScenarioError> {
            Ok(Curve::new(shape)?.rotated(rotation).translated(center))
        };
        let model = model.clone();
        let spec = match &self.domain {
            DomainBlock::Circle { center, radius, geodesic } => {
                if *geodesic {
                    if *center != [0.0, 0.0] {
                        return Err(ScenarioError::Invalid("geodesic discs are centred at the chart origin".into()));
                    }
                    DomainSpec::geodesic_disc(model, *radius)?
                } else {
                    DomainSpec::disc(model, *center, *radius)?
                }
            }
            DomainBlock::Ellipse { center, a, b, rotation } => {
                let c = placed(Shape::Ellipse { a: *a, b: *b }, *center, *rotation)?;
                DomainSpec::new(model, vec![c], "ellipse")?
            }
            DomainBlock::RoundedRectangle { center, a, b, exponent, rotation } => {
                let shape = Shape::Superellipse {
                    a: *a,
                    b: *b,
                    exponent: *exponent,
                };
                DomainSpec::new(model, vec![placed(shape, *center, *rotation)?], "rounded rectangle")?
            }
            DomainBlock::Dumbbell { center, half_length, waist, rotation } => {
                let shape = Shape::Dumbbell {
                    half_length: *half_length,
                    waist: *waist,
                };
                DomainSpec::new(model, vec![placed(shape, *center, *rotation)?], "dumbbell")?
            }
            DomainBlock::Annulus { inner, outer } => DomainSpec::annulus(model, *inner, *outer)?,
            DomainBlock::Fourier { center, a0, cos, sin } => {
                let shape = Shape::Fourier {
                    a0: *a0,
                    cos: cos.clone(),
                    sin: sin.clone(),
                };
                DomainSpec::new(model, vec![placed(shape, *center, 0.0)?], "fourier")?
            }
            DomainBlock::Curves { curves } => DomainSpec::new(model, curves.clone(), "curves")?,
        };
        Ok(spec)
    }

    /// Builds `H` and spot-checks its declarations at [`H_PROBES`] seeded points of the
    /// domain.
    pub fn prescribed_h(&self, domain: &DomainSpec) -> Result<PrescribedH, ScenarioError> {
        match &self.h {
            HBlock::Constant { value } => {
                if !value.is_finite() {
                    return Err(ScenarioError::Invalid(format!("H = {value}")));
                }
                Ok(PrescribedH::constant(*value))
            }
            HBlock::Expression {
                expr,
                z_range,
                sign,
                monotone,
            } => {
                let e = Expr::parse(expr)?;
                if !(z_range[0] < z_range[1]) {
                    return Err(ScenarioError::Invalid(format!("empty z-range {z_range:?}")));
                }
                check_declarations(&e, domain, *z_range, *sign, *monotone, self.seed)?;
                let h = match e.as_constant() {
                    Some(c) => PrescribedH::constant(c).with_z_range(z_range[0], z_range[1]),
                    None => PrescribedH::general(move |x, z| e.eval(x, z), (z_range[0], z_range[1]), *monotone),
                };
                Ok(h)
            }
        }
    }

    pub fn load_str(src: &str) -> Result<Loaded, ScenarioError> {
        Scenario::load_str_seeded(src, None)
    }

    /// As [`Self::load_str`], with `seed` replacing the scenario's own.
    pub fn load_str_seeded(src: &str, seed: Option<u64>) -> Result<Loaded, ScenarioError> {
        let mut scenario = Scenario::from_toml(src)?;
        if let Some(seed) = seed {
            scenario.seed = seed;
        }
        let model = scenario.model()?;
        let domain = scenario.domain(&model)?;
        let h = scenario.prescribed_h(&domain)?;
        if scenario.solver.h <= 0.0 || scenario.solver.tol <= 0.0 || scenario.solver.steps == 0 {
            return Err(ScenarioError::Invalid("solver h, tol and steps must be positive".into()));
        }
        Ok(Loaded {
            scenario,
            model,
            domain,
            h,
            source: src.to_string(),
            hash: crate::artifacts::sha256_hex(src.as_bytes()),
        })
    }

    pub fn load(path: &Path, seed: Option<u64>) -> Result<Loaded, ScenarioError> {
        let src = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::load_str_seeded(&src, seed)
    }
}

/// Samples points uniformly from the domain's bounding box, keeping those inside.
pub fn domain_probes(domain: &DomainSpec, count: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(count);
    // the box is at most a few times the area of any admissible domain
    for _ in 0..count * 1000 {
        if out.len() == count {
            break;
        }
        let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
        if domain.contains(p) {
            out.push(p);
        }
    }
    out
}

fn check_declarations(
    e: &Expr,
    domain: &DomainSpec,
    z_range: [f64; 2],
    sign: SignDeclaration,
    monotone: bool,
    seed: u64,
) -> Result<(), ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes = domain_probes(domain, H_PROBES, &mut rng);
    if probes.is_empty() {
        return Err(ScenarioError::Invalid("could not sample the domain".into()));
    }
    for x in probes {
        let z1 = rng.gen_range(z_range[0]..z_range[1]);
        let z2 = rng.gen_range(z_range[0]..z_range[1]);
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let (a, b) = (e.eval(x, lo), e.eval(x, hi));
        if !a.is_finite() || !b.is_finite() {
            return Err(ScenarioError::Invalid(format!("H({x:?}, {lo}) = {a} is not finite")));
        }
        for (z, v) in [(lo, a), (hi, b)] {
            let bad = match sign {
                SignDeclaration::Nonnegative => v < 0.0,
                SignDeclaration::Nonpositive => v > 0.0,
                SignDeclaration::Mixed => false,
            };
            if bad {
                return Err(ScenarioError::Invalid(format!(
                    "H is declared {sign:?} but H({x:?}, {z}) = {v}"
                )));
            }
        }
        if monotone && b < a - 1e-12 * a.abs().max(1.0) {
            return Err(ScenarioError::Invalid(format!(
                "H is declared non-decreasing in z but H({x:?}, {lo}) = {a} > H({x:?}, {hi}) = {b}"
            )));
        }
    }
    Ok(())
}

impl SignDeclaration {
    pub fn as_h_sign(self) -> HSign {
        match self {
            SignDeclaration::Nonnegative => HSign::Nonnegative,
            SignDeclaration::Nonpositive => HSign::Nonpositive,
            SignDeclaration::Mixed => HSign::Mixed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISC: &str = r#"
        name = "disc"
        [domain]
        kind = "circle"
        radius = 1.0
        [h]
        kind = "constant"
        value = 0.6
        [experiment]
        kind = "analyze"
    "#;

    #[test]
    fn minimal_scenario_loads_with_defaults() {
        let l = Scenario::load_str(DISC).unwrap();
        assert_eq!(l.model.chart(), Chart::EuclideanCartesian);
        assert_eq!(l.h.as_constant(), Some(0.6));
        assert_eq!(l.scenario.solver.tol, 1e-9);
        assert_eq!(l.hash.len(), 64);
        assert!(matches!(l.scenario.boundary, BoundaryBlock::Zero));
    }

    #[test]
    fn chart_follows_curvature_sign() {
        let src = DISC.replace("[domain]", "[model]\ncurvature = -1.0\n[domain]").replace("radius = 1.0", "radius = 1.0\ngeodesic = true");
        let l = Scenario::load_str(&src).unwrap();
        assert_eq!(l.model.chart(), Chart::PoincareDisk);
    }

    #[test]
    fn declarations_are_spot_checked() {
        let expr = |e: &str, sign: &str, mono: bool| {
            DISC.replace(
                "kind = \"constant\"\n        value = 0.6",
                &format!("kind = \"expression\"\nexpr = \"{e}\"\nz_range = [-2.0, 2.0]\nsign = \"{sign}\"\nmonotone = {mono}"),
            )
        };
        assert!(Scenario::load_str(&expr("0.3 + 0.1*tanh(z)", "nonnegative", true)).is_ok());
        let err = Scenario::load_str(&expr("0.3 - 0.1*tanh(z)", "nonnegative", true)).unwrap_err();
        assert!(err.to_string().contains("non-decreasing"), "{err}");
        let err = Scenario::load_str(&expr("x1", "nonnegative", false)).unwrap_err();
        assert!(err.to_string().contains("declared"), "{err}");
        assert!(matches!(
            Scenario::load_str(&expr("0.3 +", "mixed", false)),
            Err(ScenarioError::Expr(_))
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = DISC.replace("radius = 1.0", "radius = 1.0\nradios = 2.0");
        assert!(matches!(Scenario::load_str(&src), Err(ScenarioError::Toml(_))));
    }
}
