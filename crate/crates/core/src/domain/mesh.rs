//! Triangulation of chart domains.
//!
//! Interior vertices come from nested hexagonal lattices (spacing `h / 2^ℓ`), so locally
//! refined regions still have centrally symmetric vertex neighbourhoods. Boundary vertices
//! are placed on the exact curves by arc length, and the two sets are joined by a
//! constrained Delaunay triangulation.

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;

use super::DomainSpec;

const MAX_LEVEL: u32 = 14;
const MIN_ANGLE_DEG: f64 = 20.0;
const MIN_BOUNDARY_VERTICES: usize = 16;

/// A disc of fine spacing `h_min` about `center`, graded outward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub center: [f64; 2],
    pub h_min: f64,
    #[serde(default)]
    pub radius: f64,
}

/// Target edge length as a function of position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSizing {
    pub h: f64,
    #[serde(default)]
    pub refinements: Vec<Refinement>,
    /// growth rate of the spacing away from a refinement disc
    #[serde(default = "default_grade")]
    pub grade: f64,
}

fn default_grade() -> f64 {
    0.3
}

impl MeshSizing {
    pub fn uniform(h: f64) -> Self {
        MeshSizing {
            h,
            refinements: Vec::new(),
            grade: default_grade(),
        }
    }

    pub fn refined(mut self, r: Refinement) -> Self {
        self.refinements.push(r);
        self
    }

    /// Continuous sizing function.
    pub fn size_at(&self, x: [f64; 2]) -> f64 {
        self.refinements.iter().fold(self.h, |acc, r| {
            let dist = (x[0] - r.center[0]).hypot(x[1] - r.center[1]);
            acc.min(r.h_min + self.grade * (dist - r.radius).max(0.0))
        })
    }

    /// Lattice level whose spacing first drops below the local size.
    fn level_at(&self, x: [f64; 2]) -> u32 {
        let ratio = self.h / self.size_at(x);
        if ratio <= 1.0 + 1e-12 {
            0
        } else {
            ((ratio.log2() - 1e-9).ceil() as u32).min(MAX_LEVEL)
        }
    }

    fn spacing_at(&self, x: [f64; 2]) -> f64 {
        self.h / f64::from(1u32 << self.level_at(x))
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(format!("mesh size h = {}", self.h)));
        }
        if !(self.grade > 0.0) {
            return Err(Error::InvalidArgument(format!("grading {}", self.grade)));
        }
        for r in &self.refinements {
            if !(r.h_min > 0.0 && r.radius >= 0.0) {
                return Err(Error::InvalidArgument(format!("refinement {r:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryVertex {
    pub vertex: usize,
    pub component: usize,
    /// chart arc length along the component
    pub s: f64,
}

/// Conforming triangulation; boundary vertices occupy indices `0..boundary().len()`.
#[derive(Debug, Clone)]
pub struct Mesh {
    model: ManifoldModel,
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<BoundaryVertex>,
    interior: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    spacing: Vec<f64>,
    h: f64,
}

pub fn mesh_domain(spec: &DomainSpec, h: f64) -> Result<Mesh> {
    mesh_with_sizing(spec, &MeshSizing::uniform(h))
}

fn boundary_samples(spec: &DomainSpec, sizing: &MeshSizing) -> Result<Vec<BoundaryVertex>> {
    let mut out = Vec::new();
    for (c, comp) in spec.components().iter().enumerate() {
        let pts = comp.table_points();
        let cum = comp.table_arclength();
        let n = pts.len();
        // cumulative count N(s) = ∫ ds / spacing
        let dens: Vec<f64> = pts.iter().map(|&p| 1.0 / sizing.spacing_at(p)).collect();
        let mut count = vec![0.0; n + 1];
        for i in 0..n {
            let ds = cum[i + 1] - cum[i];
            count[i + 1] = count[i] + 0.5 * ds * (dens[i] + dens[(i + 1) % n]);
        }
        let total = count[n];
        let m = total.round() as usize;
        if m < MIN_BOUNDARY_VERTICES {
            return Err(Error::MeshTooCoarse(format!(
                "boundary component {c} would get {m} vertices (need {MIN_BOUNDARY_VERTICES})"
            )));
        }
        let mut seg = 0;
        for k in 0..m {
            let target = total * k as f64 / m as f64;
            while count[seg + 1] < target {
                seg += 1;
            }
            let frac = if count[seg + 1] > count[seg] {
                (target - count[seg]) / (count[seg + 1] - count[seg])
            } else {
                0.0
            };
            let s = cum[seg] + frac * (cum[seg + 1] - cum[seg]);
            out.push(BoundaryVertex {
                vertex: out.len(),
                component: c,
                s,
            });
        }
    }
    Ok(out)
}

fn lattice_points(spec: &DomainSpec, sizing: &MeshSizing) -> Vec<[f64; 2]> {
    let (lo, hi) = spec.bounding_box();
    let max_level = sizing
        .refinements
        .iter()
        .map(|r| sizing.level_at(r.center))
        .max()
        .unwrap_or(0);
    let mut out = Vec::new();
    let row = 3f64.sqrt() / 2.0;
    for level in 0..=max_level {
        let sp = sizing.h / f64::from(1u32 << level);
        let boxes: Vec<([f64; 2], [f64; 2])> = if level == 0 {
            vec![(lo, hi)]
        } else {
            let coarser = sizing.h / f64::from(1u32 << (level - 1));
            sizing
                .refinements
                .iter()
                .filter(|r| r.h_min < coarser)
                .map(|r| {
                    let reach = r.radius + (coarser - r.h_min) / sizing.grade + sp;
                    (
                        [(r.center[0] - reach).max(lo[0]), (r.center[1] - reach).max(lo[1])],
                        [(r.center[0] + reach).min(hi[0]), (r.center[1] + reach).min(hi[1])],
                    )
                })
                .collect()
        };
        let mut seen = std::collections::HashSet::new();
        for (blo, bhi) in boxes {
            if blo[0] > bhi[0] || blo[1] > bhi[1] {
                continue;
            }
            let j0 = ((blo[1] - lo[1]) / (sp * row)).floor() as i64;
            let j1 = ((bhi[1] - lo[1]) / (sp * row)).ceil() as i64;
            for j in j0..=j1 {
                let y = lo[1] + j as f64 * sp * row;
                let shift = 0.5 * j as f64 * sp;
                let i0 = ((blo[0] - lo[0] - shift) / sp).floor() as i64;
                let i1 = ((bhi[0] - lo[0] - shift) / sp).ceil() as i64;
                for i in i0..=i1 {
                    if level > 0 && i.rem_euclid(2) == 0 && j.rem_euclid(2) == 0 {
                        continue;
                    }
                    if !seen.insert((i, j)) {
                        continue;
                    }
                    let p = [lo[0] + shift + i as f64 * sp, y];
                    if level > 0 && sizing.level_at(p) < level {
                        continue;
                    }
                    if !spec.contains(p) {
                        continue;
                    }
                    let local = sizing.spacing_at(p);
                    if spec.chart_distance_to_boundary(p, local) < 0.6 * local {
                        continue;
                    }
                    out.push(p);
                }
            }
        }
    }
    out
}

fn triangulate(
    spec: &DomainSpec,
    points: &[[f64; 2]],
    boundary: &[BoundaryVertex],
) -> Result<Vec<[usize; 3]>> {
    let mut edges = Vec::with_capacity(boundary.len());
    let mut start = 0;
    while start < boundary.len() {
        let c = boundary[start].component;
        let end = boundary[start..]
            .iter()
            .position(|b| b.component != c)
            .map_or(boundary.len(), |k| start + k);
        for k in start..end {
            let next = if k + 1 == end { start } else { k + 1 };
            edges.push([k, next]);
        }
        start = end;
    }
    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, edges)
        .map_err(|e| Error::Meshing(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(Error::Meshing("duplicate vertices".into()));
    }
    let mut cells = Vec::new();
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.fix().index());
        let centroid = [
            (points[a][0] + points[b][0] + points[c][0]) / 3.0,
            (points[a][1] + points[b][1] + points[c][1]) / 3.0,
        ];
        if spec.contains(centroid) {
            cells.push([a, b, c]);
        }
    }
    Ok(cells)
}

fn adjacency(n: usize, cells: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut nb = vec![Vec::new(); n];
    for c in cells {
        for k in 0..3 {
            let (a, b) = (c[k], c[(k + 1) % 3]);
            nb[a].push(b);
            nb[b].push(a);
        }
    }
    for l in &mut nb {
        l.sort_unstable();
        l.dedup();
    }
    nb
}

fn triangle_angles(p: [[f64; 2]; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        out[k] = (u[0] * v[1] - u[1] * v[0])
            .abs()
            .atan2(u[0] * v[0] + u[1] * v[1]);
    }
    out
}

/// Meshes `spec` with spacing given by `sizing`.
pub fn mesh_with_sizing(spec: &DomainSpec, sizing: &MeshSizing) -> Result<Mesh> {
    sizing.validate()?;
    let boundary = boundary_samples(spec, sizing)?;
    let nb = boundary.len();
    let mut points: Vec<[f64; 2]> = boundary
        .iter()
        .map(|b| spec.components()[b.component].point_at(b.s))
        .collect();
    points.extend(lattice_points(spec, sizing));
    let mut cells = triangulate(spec, &points, &boundary)?;

    // Laplacian smoothing of the band next to the boundary
    for _ in 0..3 {
        let nbrs = adjacency(points.len(), &cells);
        let mut moved = false;
        let snapshot = points.clone();
        for v in nb..points.len() {
            let p = snapshot[v];
            let local = sizing.spacing_at(p);
            if spec.chart_distance_to_boundary(p, 2.0 * local) >= 2.0 * local || nbrs[v].is_empty()
            {
                continue;
            }
            let k = nbrs[v].len() as f64;
            let avg = nbrs[v].iter().fold([0.0, 0.0], |acc, &w| {
                [acc[0] + snapshot[w][0] / k, acc[1] + snapshot[w][1] / k]
            });
            if spec.contains(avg) && spec.chart_distance_to_boundary(avg, local) >= 0.35 * local {
                points[v] = avg;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        cells = triangulate(spec, &points, &boundary)?;
    }

    // Sliver repair: where grading meets the boundary, an interior point can sit too close
    // to a boundary edge or to another point. Drop the interior vertex of each bad cell that
    // lies nearest the boundary and re-triangulate.
    let min_angle = MIN_ANGLE_DEG.to_radians();
    for _ in 0..8 {
        let mut drop = vec![false; points.len()];
        for c in &cells {
            if triangle_angles(c.map(|v| points[v])).iter().all(|&t| t >= min_angle) {
                continue;
            }
            let victim = c.iter().copied().filter(|&v| v >= nb).min_by(|&x, &y| {
                let dx = spec.chart_distance_to_boundary(points[x], sizing.h);
                let dy = spec.chart_distance_to_boundary(points[y], sizing.h);
                dx.total_cmp(&dy)
            });
            if let Some(v) = victim {
                drop[v] = true;
            }
        }
        if !drop.iter().any(|&d| d) {
            break;
        }
        let mut k = 0;
        points.retain(|_| {
            k += 1;
            !drop[k - 1]
        });
        cells = triangulate(spec, &points, &boundary)?;
    }

    // drop vertices no cell uses (boundary vertices always survive)
    let mut used = vec![false; points.len()];
    for c in &cells {
        for &v in c {
            used[v] = true;
        }
    }
    if let Some(b) = (0..nb).find(|&b| !used[b]) {
        return Err(Error::Meshing(format!("boundary vertex {b} is not in any cell")));
    }
    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::with_capacity(points.len());
    for (v, p) in points.iter().enumerate() {
        if used[v] {
            remap[v] = vertices.len();
            vertices.push(*p);
        }
    }
    for c in &mut cells {
        for v in c.iter_mut() {
            *v = remap[*v];
        }
        let [a, b, cc] = c.map(|v| vertices[v]);
        let area = (b[0] - a[0]) * (cc[1] - a[1]) - (b[1] - a[1]) * (cc[0] - a[0]);
        if area <= 0.0 {
            c.swap(1, 2);
        }
    }
    let neighbors = adjacency(vertices.len(), &cells);
    let spacing = vertices.iter().map(|&p| sizing.spacing_at(p)).collect();
    let mesh = Mesh {
        model: *spec.model(),
        interior: (nb..vertices.len()).collect(),
        vertices,
        cells,
        boundary,
        neighbors,
        spacing,
        h: sizing.h,
    };
    let worst = mesh.min_angle_deg();
    if worst < MIN_ANGLE_DEG {
        return Err(Error::Meshing(format!(
            "minimum angle {worst:.2}° below {MIN_ANGLE_DEG}°"
        )));
    }
    log::debug!(
        "meshed '{}': {} vertices ({} boundary), {} cells, min angle {:.1}°",
        spec.label(),
        mesh.num_vertices(),
        nb,
        mesh.cells.len(),
        worst
    );
    Ok(mesh)
}

impl Mesh {
    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn boundary(&self) -> &[BoundaryVertex] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        v < self.boundary.len()
    }

    pub fn boundary_vertex(&self, v: usize) -> Option<&BoundaryVertex> {
        self.boundary.get(v)
    }

    /// Sorted 1-ring of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Vertices within two edges of `v`, excluding `v`.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.neighbors[v]
            .iter()
            .flat_map(|&w| self.neighbors[w].iter().copied().chain(std::iter::once(w)))
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nominal edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Lattice spacing the sizing function asked for at `v`.
    pub fn local_spacing(&self, v: usize) -> f64 {
        self.spacing[v]
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.num_edges() as i64 + self.cells.len() as i64
    }

    pub fn min_angle_deg(&self) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| triangle_angles(c.map(|v| self.vertices[v])))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    /// Longest edge in the mesh.
    pub fn max_edge(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (v, nb) in self.neighbors.iter().enumerate() {
            for &w in nb {
                let (a, b) = (self.vertices[v], self.vertices[w]);
                m = m.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        m
    }

    /// Nearest vertex to a chart point (linear scan).
    pub fn nearest_vertex(&self, x: [f64; 2]) -> usize {
        let d2 = |p: &[f64; 2]| (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
        (0..self.vertices.len())
            .min_by(|&a, &b| d2(&self.vertices[a]).total_cmp(&d2(&self.vertices[b])))
            .unwrap_or(0)
    }
}
