//! Gap-graded, boundary-fitted triangulations.
//!
//! The narrow region `|x'| <= R1` is a mapped structured grid with a fixed
//! number of layers between the facing curves. Everything outside it is one
//! ray-structured block between the hull of the inclusions and the outer
//! boundary: an O-grid around both inclusions, or a C-grid over the single
//! inclusion in inclusion-boundary mode. Quadrilaterals are split along the
//! shorter diagonal.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{march_abscissae, BoundaryTag, Point, Region, Scene, SceneMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradingPolicy {
    /// Cells across the gap.
    pub layers_across_gap: usize,
    /// Target edge length away from the gap.
    pub far_spacing: f64,
    /// Largest edge-length ratio tolerated within one triangle.
    pub anisotropy_cap: f64,
    /// Lateral spacing in the gap is at most `lateral_factor * sqrt(delta)`.
    pub lateral_factor: f64,
}

impl Default for GradingPolicy {
    fn default() -> Self {
        Self {
            layers_across_gap: 6,
            far_spacing: 0.1,
            anisotropy_cap: 8.0,
            lateral_factor: 0.25,
        }
    }
}

impl GradingPolicy {
    pub fn new(layers: usize, far_spacing: f64) -> Self {
        Self {
            layers_across_gap: layers,
            far_spacing,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers_across_gap < 3 {
            return Err(Error::InvalidParameter(format!(
                "layers_across_gap must be >= 3, got {}",
                self.layers_across_gap
            )));
        }
        if !(self.far_spacing > 0.0 && self.far_spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "far_spacing must be > 0, got {}",
                self.far_spacing
            )));
        }
        if !(self.anisotropy_cap >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "anisotropy_cap must be >= 2, got {}",
                self.anisotropy_cap
            )));
        }
        if !(self.lateral_factor > 0.0 && self.lateral_factor.is_finite()) {
            return Err(Error::InvalidParameter("lateral_factor must be > 0".into()));
        }
        Ok(())
    }

    /// Twice the layers, half the far spacing.
    pub fn refined(&self) -> Self {
        Self {
            layers_across_gap: 2 * self.layers_across_gap,
            far_spacing: 0.5 * self.far_spacing,
            ..self.clone()
        }
    }

    /// Lateral spacing at `x'` for a gap of thickness `delta` and facing
    /// slopes bounded by `slope`.
    pub fn lateral_spacing(&self, delta: f64, slope: f64) -> f64 {
        let layer = delta / self.layers_across_gap as f64;
        let aniso = 0.5 * self.anisotropy_cap * layer / (1.0 + slope * slope).sqrt();
        self.far_spacing
            .min(self.lateral_factor * delta.sqrt())
            .min(aniso)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriRegion {
    Gap,
    Exterior,
}

impl TriRegion {
    pub fn as_str(&self) -> &'static str {
        match self {
            TriRegion::Gap => "gap",
            TriRegion::Exterior => "exterior",
        }
    }
}

/// Index structure of the mapped gap grid.
#[derive(Clone, Debug)]
pub struct GapGrid {
    pub columns: Vec<f64>,
    pub layers: usize,
    ids: Vec<usize>,
}

impl GapGrid {
    /// Vertex at column `i`, row `j` (row 0 on the lower curve).
    pub fn vertex(&self, i: usize, j: usize) -> usize {
        self.ids[i * (self.layers + 1) + j]
    }

    /// Column index of `x' = 0`.
    pub fn axis_column(&self) -> usize {
        self.columns
            .iter()
            .position(|&x| x == 0.0)
            .expect("gap columns always contain the axis")
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<BoundaryTag>,
    pub regions: Vec<TriRegion>,
    pub gap: Option<GapGrid>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Splits the counter-clockwise quadrilateral `q` along its shorter diagonal.
/// Equal diagonals fall back to the one better aligned with the direction
/// from `center` to the quad centroid, which keeps the split pattern mirror
/// symmetric about both axes through `center`.
fn split_quad(pts: &[Point], q: [usize; 4], center: Point) -> [[usize; 3]; 2] {
    let [a, b, c, d] = q;
    let ac = dist(pts[a], pts[c]);
    let bd = dist(pts[b], pts[d]);
    let use_ac = if (ac - bd).abs() <= 1e-12 * ac.max(bd) {
        let cx = 0.25 * (pts[a][0] + pts[b][0] + pts[c][0] + pts[d][0]) - center[0];
        let cy = 0.25 * (pts[a][1] + pts[b][1] + pts[c][1] + pts[d][1]) - center[1];
        let along = |u: usize, v: usize| {
            let dx = pts[v][0] - pts[u][0];
            let dy = pts[v][1] - pts[u][1];
            (dx * cx + dy * cy).abs() / dx.hypot(dy)
        };
        along(a, c) >= along(b, d)
    } else {
        ac < bd
    };
    if use_ac {
        [[a, b, c], [a, c, d]]
    } else {
        [[a, b, d], [b, c, d]]
    }
}

#[derive(Default)]
struct Builder {
    vertices: Vec<Point>,
    tags: Vec<BoundaryTag>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<TriRegion>,
}

impl Builder {
    fn add(&mut self, p: Point, tag: BoundaryTag) -> usize {
        self.vertices.push(p);
        self.tags.push(tag);
        self.vertices.len() - 1
    }

    fn quad(&mut self, q: [usize; 4], center: Point, region: TriRegion) {
        for t in split_quad(&self.vertices, q, center) {
            self.triangles.push(t);
            self.regions.push(region);
        }
    }
}

fn even_ceil(x: f64) -> usize {
    let n = x.ceil().max(2.0) as usize;
    n + n % 2
}

/// Meshes the scene: mapped gap grid on `|x'| <= R1` glued to a ray block
/// that fills the rest of the domain.
pub fn triangulate_scene(scene: &Scene, policy: &GradingPolicy) -> Result<Mesh> {
    policy.validate()?;
    let p = scene.profile();
    let eps = scene.epsilon();
    let r1 = p.neck_halfwidth;
    let big_h = scene.closure_height();
    let n = policy.layers_across_gap;
    let lower_tag = match scene.mode() {
        SceneMode::TwoInclusion => BoundaryTag::Lower,
        SceneMode::InclusionBoundary => BoundaryTag::Outer,
    };

    let xs = march_abscissae(p, |x| {
        let slope = p.upper_slope(x).abs().max(p.lower_slope(x).abs());
        policy.lateral_spacing(p.thickness(eps, x), slope)
    });
    let mut b = Builder::default();
    let mut ids = Vec::with_capacity(xs.len() * (n + 1));
    for &x in &xs {
        let lo = p.lower(x);
        let hi = eps + p.upper(x);
        let delta = p.thickness(eps, x);
        for j in 0..=n {
            let (y, tag) = if j == 0 {
                (lo, lower_tag)
            } else if j == n {
                (hi, BoundaryTag::Upper)
            } else {
                (lo + delta * j as f64 / n as f64, BoundaryTag::Interior)
            };
            ids.push(b.add([x, y], tag));
        }
    }
    let gap = GapGrid {
        columns: xs.clone(),
        layers: n,
        ids,
    };
    let gap_center = [0.0, 0.5 * eps];
    for i in 0..xs.len() - 1 {
        for j in 0..n {
            b.quad(
                [
                    gap.vertex(i, j),
                    gap.vertex(i + 1, j),
                    gap.vertex(i + 1, j + 1),
                    gap.vertex(i, j + 1),
                ],
                gap_center,
                TriRegion::Gap,
            );
        }
    }

    // hull curve around the inclusions, counter-clockwise, entries are
    // (point, existing vertex id, tag)
    let last = xs.len() - 1;
    let top = eps + p.upper(r1);
    let bottom = p.lower(r1);
    let delta_end = top - bottom;
    let h_hull = policy.far_spacing.min(2.0 * delta_end / n as f64);
    let mut hull: Vec<(Point, Option<usize>, BoundaryTag)> = Vec::new();
    for j in 0..=n {
        let id = gap.vertex(last, j);
        hull.push((b.vertices[id], Some(id), b.tags[id]));
    }
    let n_side = ((big_h - top) / h_hull).ceil().max(1.0) as usize;
    for k in 1..=n_side {
        let y = if k == n_side {
            big_h
        } else {
            top + (big_h - top) * k as f64 / n_side as f64
        };
        hull.push(([r1, y], None, BoundaryTag::Upper));
    }
    let n_cap = even_ceil(PI * r1 / h_hull);
    for k in 1..n_cap {
        let t = PI * k as f64 / n_cap as f64;
        let (x, y) = if 2 * k == n_cap {
            (0.0, big_h + r1)
        } else {
            (r1 * t.cos(), big_h + r1 * t.sin())
        };
        hull.push(([x, y], None, BoundaryTag::Upper));
    }
    for k in (1..=n_side).rev() {
        let y = hull[n + k].0[1];
        hull.push(([-r1, y], None, BoundaryTag::Upper));
    }
    for j in (0..=n).rev() {
        let id = gap.vertex(0, j);
        hull.push((b.vertices[id], Some(id), b.tags[id]));
    }
    let (origin, closed) = match scene.mode() {
        SceneMode::TwoInclusion => {
            let yc = eps - big_h;
            let n_low = ((bottom - yc) / h_hull).ceil().max(1.0) as usize;
            let side: Vec<f64> = (1..=n_low)
                .map(|k| {
                    if k == n_low {
                        yc
                    } else {
                        bottom - (bottom - yc) * k as f64 / n_low as f64
                    }
                })
                .collect();
            for &y in &side {
                hull.push(([-r1, y], None, BoundaryTag::Lower));
            }
            for k in 1..n_cap {
                let t = PI + PI * k as f64 / n_cap as f64;
                let (x, y) = if 2 * k == n_cap {
                    (0.0, yc - r1)
                } else {
                    (r1 * t.cos(), yc + r1 * t.sin())
                };
                hull.push(([x, y], None, BoundaryTag::Lower));
            }
            for &y in side.iter().rev() {
                hull.push(([r1, y], None, BoundaryTag::Lower));
            }
            (scene.center, true)
        }
        SceneMode::InclusionBoundary => ([0.0, scene.floor_height()], false),
    };

    // outer end of each ray
    let l = scene.outer_radius;
    let c = scene.center;
    let rays: Vec<Point> = hull
        .iter()
        .enumerate()
        .map(|(k, (pt, _, _))| {
            if !closed && (k == 0 || k == hull.len() - 1) {
                let xf = scene.floor_extent();
                return [if k == 0 { xf } else { -xf }, origin[1]];
            }
            let dx = pt[0] - origin[0];
            let dy = pt[1] - origin[1];
            let len = dx.hypot(dy);
            let u = [dx / len, dy / len];
            let q = [origin[0] - c[0], origin[1] - c[1]];
            let qu = q[0] * u[0] + q[1] * u[1];
            let s = -qu + (qu * qu - (q[0] * q[0] + q[1] * q[1] - l * l)).sqrt();
            [origin[0] + s * u[0], origin[1] + s * u[1]]
        })
        .collect();

    let segs = |pts: &mut dyn Iterator<Item = Point>| -> (f64, usize) {
        let v: Vec<Point> = pts.collect();
        let mut total = 0.0;
        let mut count = 0;
        for w in v.windows(2) {
            total += dist(w[0], w[1]);
            count += 1;
        }
        if closed && v.len() > 1 {
            total += dist(v[v.len() - 1], v[0]);
            count += 1;
        }
        (total, count)
    };
    let (hull_len, hull_segs) = segs(&mut hull.iter().map(|h| h.0));
    let (outer_len, outer_segs) = segs(&mut rays.iter().copied());
    let h_in = hull_len / hull_segs as f64;
    let h_out = outer_len / outer_segs as f64;
    let depth = hull
        .iter()
        .zip(&rays)
        .map(|(h, r)| dist(h.0, *r))
        .sum::<f64>()
        / hull.len() as f64;
    let mut ts = vec![0.0];
    let mut t = 0.0;
    while t < 1.0 {
        t += ((1.0 - t) * h_in + t * h_out) / depth;
        ts.push(t);
    }
    let t_end = *ts.last().unwrap();
    for t in ts.iter_mut() {
        *t /= t_end;
    }
    let m = ts.len() - 1;

    let mut ring: Vec<Vec<usize>> = Vec::with_capacity(hull.len());
    for (k, (h, r)) in hull.iter().zip(&rays).enumerate() {
        let floor_ray = !closed && (k == 0 || k == hull.len() - 1);
        let mut col = Vec::with_capacity(m + 1);
        col.push(match h.1 {
            Some(id) => id,
            None => b.add(h.0, h.2),
        });
        for (j, &t) in ts.iter().enumerate().skip(1) {
            let pt = if j == m {
                *r
            } else {
                [h.0[0] + t * (r[0] - h.0[0]), h.0[1] + t * (r[1] - h.0[1])]
            };
            let tag = if j == m || floor_ray {
                BoundaryTag::Outer
            } else {
                BoundaryTag::Interior
            };
            col.push(b.add(pt, tag));
        }
        ring.push(col);
    }
    let count = if closed { hull.len() } else { hull.len() - 1 };
    for k in 0..count {
        let k1 = (k + 1) % hull.len();
        for j in 0..m {
            b.quad(
                [ring[k][j], ring[k][j + 1], ring[k1][j + 1], ring[k1][j]],
                origin,
                TriRegion::Exterior,
            );
        }
    }

    let mesh = Mesh {
        vertices: b.vertices,
        triangles: b.triangles,
        tags: b.tags,
        regions: b.regions,
        gap: Some(gap),
    };
    if let Some((t, area)) = mesh.first_nonpositive() {
        let c = mesh.centroid(t);
        return Err(Error::GradingFailure(format!(
            "triangle {t} near ({:.4}, {:.4}) has signed area {area:.3e}",
            c[0], c[1]
        )));
    }
    Ok(mesh)
}

/// Quality summary of a triangulation.
#[derive(Clone, Debug, Serialize)]
pub struct QualityReport {
    pub vertices: usize,
    pub triangles: usize,
    pub gap_triangles: usize,
    pub min_angle_deg: f64,
    pub max_aspect_ratio: f64,
    pub anisotropy_cap: f64,
    /// Triangles whose longest/shortest edge ratio exceeds the cap.
    pub cap_violations: Vec<usize>,
    /// Triangles with nonpositive signed area.
    pub inverted: Vec<usize>,
}

impl QualityReport {
    pub fn is_clean(&self) -> bool {
        self.cap_violations.is_empty() && self.inverted.is_empty()
    }
}

pub fn mesh_quality_report(mesh: &Mesh, anisotropy_cap: f64) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    let mut cap_violations = Vec::new();
    let mut inverted = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|v| mesh.vertices[v]);
        if signed_area(a, b, c) <= 0.0 {
            inverted.push(t);
        }
        let e = [dist(b, c), dist(c, a), dist(a, b)];
        let longest = e[0].max(e[1]).max(e[2]);
        let shortest = e[0].min(e[1]).min(e[2]);
        let aspect = longest / shortest;
        max_aspect = max_aspect.max(aspect);
        if aspect > anisotropy_cap {
            cap_violations.push(t);
        }
        for i in 0..3 {
            let (opp, s1, s2) = (e[i], e[(i + 1) % 3], e[(i + 2) % 3]);
            let cos = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
            min_angle = min_angle.min(cos.acos().to_degrees());
        }
    }
    QualityReport {
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        gap_triangles: mesh
            .regions
            .iter()
            .filter(|r| **r == TriRegion::Gap)
            .count(),
        min_angle_deg: min_angle,
        max_aspect_ratio: max_aspect,
        anisotropy_cap,
        cap_violations,
        inverted,
    }
}

impl Mesh {
    /// Assembles a mesh from raw arrays; checks index bounds and lengths only.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        tags: Vec<BoundaryTag>,
        regions: Vec<TriRegion>,
    ) -> Result<Self> {
        if tags.len() != vertices.len() || regions.len() != triangles.len() {
            return Err(Error::MeshMismatch("array lengths disagree".into()));
        }
        if triangles.iter().flatten().any(|&v| v >= vertices.len()) {
            return Err(Error::MeshMismatch(
                "triangle refers to a missing vertex".into(),
            ));
        }
        Ok(Self {
            vertices,
            triangles,
            tags,
            regions,
            gap: None,
        })
    }

    /// Structured annulus `r_in <= r <= r_out` centred at the origin, inner
    /// circle tagged `Upper`, outer circle `Outer`.
    pub fn annulus(r_in: f64, r_out: f64, n_theta: usize, n_r: usize) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in) || n_theta < 3 || n_r < 1 {
            return Err(Error::InvalidParameter(format!(
                "bad annulus parameters r_in={r_in}, r_out={r_out}, n_theta={n_theta}, n_r={n_r}"
            )));
        }
        let mut b = Builder::default();
        let mut ids = vec![vec![0; n_r + 1]; n_theta];
        for (k, col) in ids.iter_mut().enumerate() {
            let t = 2.0 * PI * k as f64 / n_theta as f64;
            for (j, id) in col.iter_mut().enumerate() {
                let r = r_in + (r_out - r_in) * j as f64 / n_r as f64;
                let tag = if j == 0 {
                    BoundaryTag::Upper
                } else if j == n_r {
                    BoundaryTag::Outer
                } else {
                    BoundaryTag::Interior
                };
                *id = b.add([r * t.cos(), r * t.sin()], tag);
            }
        }
        for k in 0..n_theta {
            let k1 = (k + 1) % n_theta;
            for j in 0..n_r {
                b.quad(
                    [ids[k][j], ids[k][j + 1], ids[k1][j + 1], ids[k1][j]],
                    [0.0, 0.0],
                    TriRegion::Exterior,
                );
            }
        }
        Ok(Self {
            vertices: b.vertices,
            triangles: b.triangles,
            tags: b.tags,
            regions: b.regions,
            gap: None,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    fn first_nonpositive(&self) -> Option<(usize, f64)> {
        (0..self.triangles.len())
            .map(|t| (t, self.area(t)))
            .find(|(_, a)| !(*a > 0.0))
    }

    pub fn vertices_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.tags[v] == tag)
            .collect()
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.tags.contains(&tag)
    }

    /// Edge multiplicities keyed by sorted vertex pair.
    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::with_capacity(3 * self.triangles.len() / 2 + 16);
        for tri in &self.triangles {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.edge_counts().len()
    }

    /// `V - E + F` over the triangles (no outer face).
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Boundary edges (used by exactly one triangle), oriented as in their
    /// triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.boundary_edge_triangles()
            .into_iter()
            .map(|(a, b, _)| (a, b))
            .collect()
    }

    /// Boundary edges with the triangle that owns them.
    pub fn boundary_edge_triangles(&self) -> Vec<(usize, usize, usize)> {
        let counts = self.edge_counts();
        let mut out = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                if counts[&(a.min(b), a.max(b))] == 1 {
                    out.push((a, b, t));
                }
            }
        }
        out
    }

    /// Number of closed boundary loops.
    pub fn boundary_loops(&self) -> Result<usize> {
        let edges = self.boundary_edges();
        let mut next: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
        for &(a, b) in &edges {
            if next.insert(a, b).is_some() {
                return Err(Error::MeshMismatch(format!(
                    "vertex {a} starts two boundary edges"
                )));
            }
        }
        let mut seen: HashMap<usize, bool> = HashMap::new();
        let mut loops = 0;
        for &(start, _) in &edges {
            if seen.contains_key(&start) {
                continue;
            }
            loops += 1;
            let mut v = start;
            loop {
                seen.insert(v, true);
                v = *next.get(&v).ok_or_else(|| {
                    Error::MeshMismatch(format!("boundary chain breaks at vertex {v}"))
                })?;
                if v == start {
                    break;
                }
                if seen.contains_key(&v) {
                    return Err(Error::MeshMismatch(
                        "boundary chain revisits a vertex".into(),
                    ));
                }
            }
        }
        Ok(loops)
    }

    /// Checks that every edge has at most two triangles, that boundary loops
    /// close, and that every boundary-edge endpoint carries a boundary tag.
    pub fn check_conformity(&self) -> Result<()> {
        for (&(a, b), &c) in &self.edge_counts() {
            if c > 2 {
                return Err(Error::MeshMismatch(format!(
                    "edge ({a}, {b}) shared by {c} triangles"
                )));
            }
        }
        self.boundary_loops()?;
        for (a, b) in self.boundary_edges() {
            for v in [a, b] {
                if self.tags[v] == BoundaryTag::Interior {
                    return Err(Error::MeshMismatch(format!(
                        "vertex {v} lies on the mesh boundary but is tagged interior"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Triangles whose centroid falls in `region`; gap-type regions only
    /// count gap-block triangles.
    pub fn triangles_in(&self, scene: &Scene, region: &Region) -> Vec<usize> {
        let window = region.lateral_window(scene);
        (0..self.triangles.len())
            .filter(|&t| match region {
                Region::All => true,
                Region::Exterior => self.regions[t] == TriRegion::Exterior,
                _ => {
                    let (lo, hi) = window.unwrap();
                    let x = self.centroid(t)[0];
                    self.regions[t] == TriRegion::Gap
                        && match region {
                            Region::Sigma => x >= lo && x <= hi,
                            _ => x > lo && x < hi,
                        }
                }
            })
            .collect()
    }

    /// Gap triangles touching the column `x' = 0`.
    pub fn axis_triangles(&self) -> Vec<usize> {
        let Some(gap) = &self.gap else {
            return Vec::new();
        };
        let col = gap.axis_column();
        let on_axis: std::collections::HashSet<usize> =
            (0..=gap.layers).map(|j| gap.vertex(col, j)).collect();
        (0..self.triangles.len())
            .filter(|&t| {
                self.regions[t] == TriRegion::Gap
                    && self.triangles[t].iter().any(|v| on_axis.contains(v))
            })
            .collect()
    }

    /// Largest distance of a tagged vertex from its analytic boundary piece.
    pub fn max_boundary_deviation(&self, scene: &Scene) -> f64 {
        (0..self.vertices.len())
            .filter(|&v| self.tags[v] != BoundaryTag::Interior)
            .map(|v| scene.boundary_distance(self.tags[v], self.vertices[v]))
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("vertices.csv"))?;
        w.write_record(["id", "x", "y", "tag"])?;
        for (i, (p, t)) in self.vertices.iter().zip(&self.tags).enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:.17e}", p[0]),
                format!("{:.17e}", p[1]),
                t.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("triangles.csv"))?;
        w.write_record(["id", "v0", "v1", "v2", "region"])?;
        for (i, (t, r)) in self.triangles.iter().zip(&self.regions).enumerate() {
            w.write_record([
                i.to_string(),
                t[0].to_string(),
                t[1].to_string(),
                t[2].to_string(),
                r.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(dir: &Path) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut tags = Vec::new();
        let mut r = csv::Reader::from_path(dir.join("vertices.csv"))?;
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::MeshMismatch(format!("bad number '{}'", &rec[i])))
            };
            vertices.push([num(1)?, num(2)?]);
            tags.push(
                BoundaryTag::parse(&rec[3])
                    .ok_or_else(|| Error::MeshMismatch(format!("bad tag '{}'", &rec[3])))?,
            );
        }
        let mut triangles = Vec::new();
        let mut regions = Vec::new();
        let mut r = csv::Reader::from_path(dir.join("triangles.csv"))?;
        for rec in r.records() {
            let rec = rec?;
            let idx = |i: usize| -> Result<usize> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::MeshMismatch(format!("bad index '{}'", &rec[i])))
            };
            triangles.push([idx(1)?, idx(2)?, idx(3)?]);
            regions.push(match &rec[4] {
                "gap" => TriRegion::Gap,
                "exterior" => TriRegion::Exterior,
                other => return Err(Error::MeshMismatch(format!("bad region '{other}'"))),
            });
        }
        Self::from_parts(vertices, triangles, tags, regions)
    }
}
