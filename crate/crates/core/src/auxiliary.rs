//! Closed-form comparison functions for the component potentials in the gap.
//!
//! Inside the narrow region `ubar1 = (x_n - h2) / delta` is the linear
//! interpolation between the two facing curves. `utilde1` adds the quadratic
//! corrector for `div(A grad u) = 0`; `uhat` lifts the outer data for the
//! inclusion-boundary problem. Outside the narrow region every field is
//! extended by clamping the vertical coordinate of the gap mouth and fading
//! to zero with a cubic collar of width `R1 / 4` around the inclusions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryData, CoefficientField, Point, Region, Scene};
use crate::harmonic::{binned_max, FemSpace, FieldSolution};
use crate::mesh::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxKind {
    Ubar1,
    Ubar2,
    Uhat,
    Utilde1,
    Utilde2,
}

impl AuxKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ubar1" => Some(AuxKind::Ubar1),
            "ubar2" => Some(AuxKind::Ubar2),
            "uhat" => Some(AuxKind::Uhat),
            "utilde1" => Some(AuxKind::Utilde1),
            "utilde2" => Some(AuxKind::Utilde2),
            _ => None,
        }
    }
}

/// Value and gradient.
pub type Jet = (f64, Point);

fn smoothstep(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0)
    } else {
        (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
    }
}

fn nearest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

#[derive(Clone, Debug)]
pub struct AuxiliaryField {
    pub kind: AuxKind,
    scene: Scene,
    extend: bool,
    coefficient: CoefficientField,
    /// Boundary of the inclusions together with the gap block.
    hull: Vec<[Point; 2]>,
}

impl AuxiliaryField {
    pub fn new(kind: AuxKind, scene: &Scene) -> Self {
        let p = scene.profile();
        let r1 = p.neck_halfwidth;
        let mut hull = Vec::new();
        for poly in [&scene.upper_boundary, &scene.lower_boundary] {
            for w in poly.windows(2) {
                hull.push([w[0], w[1]]);
            }
            if poly.len() > 1 {
                hull.push([poly[poly.len() - 1], poly[0]]);
            }
        }
        for x in [-r1, r1] {
            hull.push([[x, scene.lower_curve(x)], [x, scene.upper_curve(x)]]);
        }
        Self {
            kind,
            scene: scene.clone(),
            extend: false,
            coefficient: scene
                .coefficient()
                .cloned()
                .unwrap_or(CoefficientField::Identity),
            hull,
        }
    }

    /// Allows evaluation outside the narrow region.
    pub fn with_extension(mut self, extend: bool) -> Self {
        self.extend = extend;
        self
    }

    /// Overrides the scene's coefficient field for the corrector.
    pub fn with_coefficient(mut self, a: CoefficientField) -> Self {
        self.coefficient = a;
        self
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    fn phi(&self) -> &BoundaryData {
        self.scene.boundary_data()
    }

    /// Closed narrow region with a relative tolerance on the curves.
    pub fn in_narrow_region(&self, p: Point) -> bool {
        let r1 = self.scene.profile().neck_halfwidth;
        let tol = 1e-12 * (1.0 + p[1].abs());
        p[0].abs() <= r1 * (1.0 + 1e-14)
            && p[1] >= self.scene.lower_curve(p[0]) - tol
            && p[1] <= self.scene.upper_curve(p[0]) + tol
    }

    pub fn eval(&self, p: Point) -> Result<Jet> {
        if self.in_narrow_region(p) {
            let r1 = self.scene.profile().neck_halfwidth;
            return Ok(self.eval_gap([p[0].clamp(-r1, r1), p[1]]));
        }
        if !self.extend {
            return Err(Error::Domain(format!(
                "({:.6}, {:.6}) lies outside the narrow region",
                p[0], p[1]
            )));
        }
        Ok(self.eval_exterior(p))
    }

    /// `(y - h2) / delta` with its gradient, valid for `|x| <= R1`.
    pub fn ubar1_gap(&self, p: Point) -> Jet {
        let prof = self.scene.profile();
        let eps = self.scene.epsilon();
        let (x, y) = (p[0], p[1]);
        let h2 = prof.lower(x);
        let d = eps + prof.upper(x) - h2;
        let dp = prof.relative_slope(x);
        let h2p = prof.lower_slope(x);
        let v = (y - h2) / d;
        (v, [(-h2p * d - (y - h2) * dp) / (d * d), 1.0 / d])
    }

    /// Corrector term of `utilde1` and its gradient, valid for `|x| <= R1`.
    pub fn corrector_gap(&self, p: Point) -> Jet {
        let prof = self.scene.profile();
        let eps = self.scene.epsilon();
        let (x, y) = (p[0], p[1]);
        let a = self.coefficient.matrix(p);
        let [dax, day] = self.coefficient.derivative(p);
        let (h1, h2) = (prof.upper(x), prof.lower(x));
        let d = eps + h1 - h2;
        let dp = prof.relative_slope(x);
        let dpp = prof.relative_curvature(x);
        let s = eps + h1 + h2;
        let sp = prof.upper_slope(x) + prof.lower_slope(x);
        let (a12, a22) = (a[1][0], a[1][1]);
        let kappa = a12 * dp / (4.0 * a22);
        let kx = ((dax[1][0] * dp + a12 * dpp) * a22 - a12 * dp * dax[1][1]) / (4.0 * a22 * a22);
        let ky = (day[1][0] * dp * a22 - a12 * dp * day[1][1]) / (4.0 * a22 * a22);
        let b = (2.0 * y - s) / d;
        let bx = (-sp * d - (2.0 * y - s) * dp) / (d * d);
        let by = 2.0 / d;
        let q = b * b - 1.0;
        (
            kappa * q,
            [kx * q + kappa * 2.0 * b * bx, ky * q + kappa * 2.0 * b * by],
        )
    }

    fn uhat_gap(&self, p: Point) -> Jet {
        let prof = self.scene.profile();
        let phi = self.phi();
        let x = p[0];
        let h = prof.lower(x);
        let q = [x, h];
        let g = phi.value(q) - phi.value([0.0, 0.0]);
        let dq = phi.gradient(q);
        let gp = dq[0] + dq[1] * prof.lower_slope(x);
        let (u, du) = self.ubar1_gap(p);
        ((1.0 - u) * g, [-du[0] * g + (1.0 - u) * gp, -du[1] * g])
    }

    fn eval_gap(&self, p: Point) -> Jet {
        match self.kind {
            AuxKind::Ubar1 => self.ubar1_gap(p),
            AuxKind::Ubar2 => {
                let (v, g) = self.ubar1_gap(p);
                (1.0 - v, [-g[0], -g[1]])
            }
            AuxKind::Utilde1 => {
                let (v, g) = self.ubar1_gap(p);
                let (c, gc) = self.corrector_gap(p);
                (v + c, [g[0] + gc[0], g[1] + gc[1]])
            }
            AuxKind::Utilde2 => {
                let (v, g) = self.ubar1_gap(p);
                let (c, gc) = self.corrector_gap(p);
                (1.0 - v - c, [-g[0] - gc[0], -g[1] - gc[1]])
            }
            AuxKind::Uhat => self.uhat_gap(p),
        }
    }

    /// Collar factor `1 - S(q / w)` with `q` the distance to the hull.
    fn collar(&self, p: Point) -> Jet {
        let mut best = (f64::INFINITY, p);
        for s in &self.hull {
            let n = nearest_on_segment(p, s[0], s[1]);
            let d = (p[0] - n[0]).hypot(p[1] - n[1]);
            if d < best.0 {
                best = (d, n);
            }
        }
        let w = 0.25 * self.scene.profile().neck_halfwidth;
        let (q, n) = best;
        let (sv, sd) = smoothstep(q / w);
        if q == 0.0 || sd == 0.0 {
            return (1.0 - sv, [0.0, 0.0]);
        }
        let dq = [(p[0] - n[0]) / q, (p[1] - n[1]) / q];
        (1.0 - sv, [-sd / w * dq[0], -sd / w * dq[1]])
    }

    /// Mouth coordinate `clamp((y - h2(R1)) / delta(R1), 0, 1)`.
    fn mouth(&self, p: Point) -> Jet {
        let r1 = self.scene.profile().neck_halfwidth;
        let lo = self.scene.lower_curve(r1);
        let d = self.scene.upper_curve(r1) - lo;
        let t = (p[1] - lo) / d;
        if t <= 0.0 {
            (0.0, [0.0, 0.0])
        } else if t >= 1.0 {
            (1.0, [0.0, 0.0])
        } else {
            (t, [0.0, 1.0 / d])
        }
    }

    fn eval_exterior(&self, p: Point) -> Jet {
        let (c, gc) = self.collar(p);
        let (t, gt) = self.mouth(p);
        let prod = |a: f64, ga: Point, b: f64, gb: Point| -> Jet {
            (a * b, [ga[0] * b + a * gb[0], ga[1] * b + a * gb[1]])
        };
        let u1 = prod(t, gt, c, gc);
        let u2 = prod(1.0 - t, [-gt[0], -gt[1]], c, gc);
        let corr = || {
            let r1 = self.scene.profile().neck_halfwidth;
            let x = p[0].clamp(-r1, r1);
            let a = self.coefficient.matrix(p);
            let prof = self.scene.profile();
            let kappa = a[1][0] * prof.relative_slope(x) / (4.0 * a[1][1]);
            // the bracket is 4t(t - 1) on the mouth coordinate
            let q = 4.0 * t * (t - 1.0);
            let gq = [(8.0 * t - 4.0) * gt[0], (8.0 * t - 4.0) * gt[1]];
            let da = self.coefficient.derivative(p);
            let dk = |k: usize| {
                let d = &da[k];
                prof.relative_slope(x) * (d[1][0] * a[1][1] - a[1][0] * d[1][1])
                    / (4.0 * a[1][1] * a[1][1])
            };
            let kq = (
                kappa * q,
                [dk(0) * q + kappa * gq[0], dk(1) * q + kappa * gq[1]],
            );
            prod(kq.0, kq.1, c, gc)
        };
        match self.kind {
            AuxKind::Ubar1 => u1,
            AuxKind::Ubar2 => u2,
            AuxKind::Utilde1 => {
                let k = corr();
                (u1.0 + k.0, [u1.1[0] + k.1[0], u1.1[1] + k.1[1]])
            }
            AuxKind::Utilde2 => {
                let k = corr();
                (u2.0 - k.0, [u2.1[0] - k.1[0], u2.1[1] - k.1[1]])
            }
            AuxKind::Uhat => {
                let phi = self.phi();
                let prof = self.scene.profile();
                let r1 = prof.neck_halfwidth;
                let phi0 = phi.value([0.0, 0.0]);
                let inside = p[0].abs() < r1;
                let xc = p[0].clamp(-r1, r1);
                let foot = [p[0], prof.lower(xc)];
                let gf = phi.gradient(foot);
                let slope = if inside { prof.lower_slope(xc) } else { 0.0 };
                let pf = (phi.value(foot), [gf[0] + gf[1] * slope, 0.0]);
                let pd = (phi.value(p), phi.gradient(p));
                // psi = c * phi(foot) + (1 - c) * phi(p)
                let psi = c * pf.0 + (1.0 - c) * pd.0;
                let gpsi = [
                    gc[0] * (pf.0 - pd.0) + c * pf.1[0] + (1.0 - c) * pd.1[0],
                    gc[1] * (pf.0 - pd.0) + c * pf.1[1] + (1.0 - c) * pd.1[1],
                ];
                prod(1.0 - u1.0, [-u1.1[0], -u1.1[1]], psi - phi0, gpsi)
            }
        }
    }

    /// Values at mesh vertices.
    pub fn interpolate(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        mesh.vertices
            .iter()
            .map(|&p| self.eval(p).map(|j| j.0))
            .collect()
    }

    /// `div(A grad u)` by central differences of the analytic flux `A grad u`
    /// with step `1e-6 eps`; uses the narrow-region formula at every sample.
    pub fn corrector_residual(&self, a: &CoefficientField, samples: &[Point]) -> Result<Vec<f64>> {
        let h = 1e-6 * self.scene.epsilon();
        let scale = samples
            .iter()
            .fold(1.0_f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
        if !(h > 1e-13 * scale) {
            return Err(Error::Tolerance(format!(
                "difference step {h:.3e} is below round-off at coordinate scale {scale:.3e}"
            )));
        }
        let r1 = self.scene.profile().neck_halfwidth;
        let flux = |p: Point| {
            let (_, g) = self.eval_gap(p);
            let m = a.matrix(p);
            [
                m[0][0] * g[0] + m[0][1] * g[1],
                m[1][0] * g[0] + m[1][1] * g[1],
            ]
        };
        samples
            .iter()
            .map(|&p| {
                if p[0].abs() > r1 {
                    return Err(Error::Domain(format!(
                        "sample x' = {} outside |x'| <= R1",
                        p[0]
                    )));
                }
                let fx = (flux([p[0] + h, p[1]])[0] - flux([p[0] - h, p[1]])[0]) / (2.0 * h);
                let fy = (flux([p[0], p[1] + h])[1] - flux([p[0], p[1] - h])[1]) / (2.0 * h);
                Ok(fx + fy)
            })
            .collect()
    }
}

/// Points on an `nx` by `ny` grid over the gap block restricted to
/// `lo <= x' <= hi`, strictly between the curves.
pub fn gap_samples(scene: &Scene, lo: f64, hi: f64, nx: usize, ny: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let x = if nx == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (nx - 1) as f64
        };
        let (b, t) = (scene.lower_curve(x), scene.upper_curve(x));
        for j in 0..ny {
            let s = (j as f64 + 1.0) / (ny as f64 + 1.0);
            out.push([x, b + s * (t - b)]);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientComparison {
    /// `max |grad(v - aux)|` over the region.
    pub max: f64,
    /// Per-triangle `|grad(v - aux)|` on the whole mesh.
    pub per_triangle: Vec<f64>,
    /// Bin edges in `x'` and the binned maxima over the region.
    pub edges: Vec<f64>,
    pub profile: Vec<f64>,
}

/// `|grad(v - I aux)|` with `I` the nodal interpolant.
pub fn compare_gradients(
    space: &FemSpace,
    scene: &Scene,
    v: &FieldSolution,
    aux: &AuxiliaryField,
    region: &Region,
    bins: usize,
) -> Result<GradientComparison> {
    let mesh = space.mesh;
    if v.values.len() != mesh.vertices.len() {
        return Err(Error::MeshMismatch(
            "field does not live on this mesh".into(),
        ));
    }
    let tris = mesh.triangles_in(scene, region);
    if tris.is_empty() {
        return Err(Error::Domain(format!(
            "region {} contains no triangles",
            region.label()
        )));
    }
    let aux = aux.clone().with_extension(true);
    let iu = aux.interpolate(mesh)?;
    let w: Vec<f64> = v.values.iter().zip(&iu).map(|(a, b)| a - b).collect();
    let per_triangle: Vec<f64> = space
        .gradients(&w)
        .iter()
        .map(|g| g[0].hypot(g[1]))
        .collect();
    let max = tris.iter().map(|&t| per_triangle[t]).fold(0.0, f64::max);
    let r1 = scene.profile().neck_halfwidth;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| -r1 + 2.0 * r1 * k as f64 / bins as f64)
        .collect();
    let profile = binned_max(mesh, &per_triangle, &tris, &edges);
    Ok(GradientComparison {
        max,
        per_triangle,
        edges,
        profile,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalEnergy {
    pub z: f64,
    pub delta: f64,
    pub energy: f64,
    /// `delta(z')^n` with `n = 2`.
    pub delta_pow_n: f64,
    pub triangles: usize,
}

impl LocalEnergy {
    pub fn ratio(&self) -> f64 {
        self.energy / self.delta_pow_n
    }
}

/// `sum |grad w|^2 area` over gap triangles with centroid in
/// `|x' - z'| < delta(z')`.
pub fn local_energy(space: &FemSpace, scene: &Scene, w: &[f64], z: f64) -> Result<LocalEnergy> {
    let delta = scene.gap_thickness(z)?;
    let tris = space
        .mesh
        .triangles_in(scene, &Region::Slab { z, t: delta });
    if tris.is_empty() {
        return Err(Error::Domain(format!(
            "no triangles within delta of x' = {z}"
        )));
    }
    let g = space.gradients(w);
    let energy = tris
        .iter()
        .map(|&t| (g[t][0] * g[t][0] + g[t][1] * g[t][1]) * space.area(t))
        .sum();
    Ok(LocalEnergy {
        z,
        delta,
        energy,
        delta_pow_n: delta * delta,
        triangles: tris.len(),
    })
}

/// One row of the lateral profile CSV.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileRow {
    pub x_prime: f64,
    pub d: f64,
    pub delta: f64,
    pub grad_ubar_max: f64,
    pub grad_diff_max: f64,
    pub local_energy: f64,
    pub delta_pow_n: f64,
}

/// Lateral profile of `v1` against `ubar1` on `bins` bins across the gap.
pub fn gap_profile(
    space: &FemSpace,
    scene: &Scene,
    v1: &FieldSolution,
    bins: usize,
) -> Result<Vec<ProfileRow>> {
    let aux = AuxiliaryField::new(AuxKind::Ubar1, scene);
    let r1 = scene.profile().neck_halfwidth;
    let cmp = compare_gradients(space, scene, v1, &aux, &Region::Gap { r: r1 }, bins)?;
    let mesh = space.mesh;
    let gap_tris = mesh.triangles_in(scene, &Region::Gap { r: r1 });
    let ubar_tri: Vec<f64> = {
        let mut out = vec![0.0; mesh.triangles.len()];
        for &t in &gap_tris {
            let (_, g) = aux.ubar1_gap(mesh.centroid(t));
            out[t] = g[0].hypot(g[1]);
        }
        out
    };
    let ubar_binned = binned_max(mesh, &ubar_tri, &gap_tris, &cmp.edges);
    let iu = aux.clone().with_extension(true).interpolate(mesh)?;
    let w: Vec<f64> = v1.values.iter().zip(&iu).map(|(a, b)| a - b).collect();
    let mut rows = Vec::with_capacity(bins);
    for k in 0..bins {
        let x = 0.5 * (cmp.edges[k] + cmp.edges[k + 1]);
        let le = local_energy(space, scene, &w, x)
            .map(|e| e.energy)
            .unwrap_or(0.0);
        let delta = scene.gap_thickness(x)?;
        rows.push(ProfileRow {
            x_prime: x,
            d: scene.profile().dist_to_sigma(x),
            delta,
            grad_ubar_max: ubar_binned[k],
            grad_diff_max: cmp.profile[k],
            local_energy: le,
            delta_pow_n: delta * delta,
        });
    }
    Ok(rows)
}

pub fn write_profile_csv(rows: &[ProfileRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_scene, GapProfile, SceneConfig, SceneMode};

    fn scene(r0: f64, eps: f64) -> Scene {
        let p = GapProfile::new(r0, 1.0, 2, 1.0, 1.0).unwrap();
        build_scene(&SceneConfig::new(p, eps, 1.5).with_outer_radius(4.0)).unwrap()
    }

    fn fd_gradient(f: &AuxiliaryField, p: Point, h: f64) -> Point {
        let v = |q: Point| f.eval(q).unwrap().0;
        [
            (v([p[0] + h, p[1]]) - v([p[0] - h, p[1]])) / (2.0 * h),
            (v([p[0], p[1] + h]) - v([p[0], p[1] - h])) / (2.0 * h),
        ]
    }

    #[test]
    fn flat_set_midpoint() {
        let eps = 0.01;
        let s = scene(0.5, eps);
        let (v, g) = AuxiliaryField::new(AuxKind::Ubar1, &s)
            .eval([0.1, eps / 2.0])
            .unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1.0 / eps).abs() < 1e-8);
    }

    #[test]
    fn vertical_gradient_off_flat_set() {
        let s = scene(0.5, 0.01);
        let x = 0.8;
        let mid = 0.5 * (s.lower_curve(x) + s.upper_curve(x));
        let (_, g) = AuxiliaryField::new(AuxKind::Ubar1, &s)
            .eval([x, mid])
            .unwrap();
        assert!((g[1] - 1.0 / s.gap_thickness(x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn boundary_values_and_partition() {
        let s = scene(0.3, 0.02);
        let u1 = AuxiliaryField::new(AuxKind::Ubar1, &s);
        let u2 = AuxiliaryField::new(AuxKind::Ubar2, &s);
        for i in 0..=40 {
            let x = -1.0 + i as f64 / 20.0;
            assert!((u1.eval([x, s.upper_curve(x)]).unwrap().0 - 1.0).abs() < 1e-12);
            assert!(u1.eval([x, s.lower_curve(x)]).unwrap().0.abs() < 1e-12);
            let y = 0.3 * s.lower_curve(x) + 0.7 * s.upper_curve(x);
            let sum = u1.eval([x, y]).unwrap().0 + u2.eval([x, y]).unwrap().0;
            assert!((sum - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn corrector_vanishes_for_identity_and_on_curves() {
        let s = scene(0.0, 0.01);
        let plain = AuxiliaryField::new(AuxKind::Ubar1, &s);
        let ident = AuxiliaryField::new(AuxKind::Utilde1, &s);
        let aniso = AuxiliaryField::new(AuxKind::Utilde1, &s).with_coefficient(
            CoefficientField::RotationAniso {
                theta: 0.3,
                ratio: 4.0,
            },
        );
        for p in gap_samples(&s, -0.9, 0.9, 7, 5) {
            assert_eq!(plain.eval(p).unwrap(), ident.eval(p).unwrap());
        }
        for i in 0..=10 {
            let x = -0.9 + 0.18 * i as f64;
            for y in [s.lower_curve(x), s.upper_curve(x)] {
                let d = aniso.eval([x, y]).unwrap().0 - plain.eval([x, y]).unwrap().0;
                assert!(d.abs() < 1e-12, "{x} {y} {d}");
            }
        }
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let s = build_scene(
            &SceneConfig::new(GapProfile::new(0.2, 1.0, 2, 1.0, 0.7).unwrap(), 0.05, 1.5)
                .with_outer_radius(4.0)
                .with_boundary_data(BoundaryData::Linear {
                    gx: 0.4,
                    gy: 1.0,
                    c: 0.1,
                })
                .with_coefficient(Some(CoefficientField::RotatingAniso {
                    theta0: 0.3,
                    rate: 0.5,
                    ratio: 4.0,
                })),
        )
        .unwrap();
        let mut pts = gap_samples(&s, -0.95, 0.95, 9, 5);
        pts.extend([
            [1.1, 0.2],
            [-1.15, 0.05],
            [0.3, 3.0],
            [2.0, -1.0],
            [1.05, 0.3],
            [0.0, -2.8],
        ]);
        for kind in [
            AuxKind::Ubar1,
            AuxKind::Ubar2,
            AuxKind::Uhat,
            AuxKind::Utilde1,
            AuxKind::Utilde2,
        ] {
            let f = AuxiliaryField::new(kind, &s).with_extension(true);
            for &p in &pts {
                let (_, g) = f.eval(p).unwrap();
                let fd = fd_gradient(&f, p, 1e-7);
                let scale = 1.0 + g[0].abs().max(g[1].abs());
                assert!(
                    (g[0] - fd[0]).abs() < 1e-5 * scale && (g[1] - fd[1]).abs() < 1e-5 * scale,
                    "{kind:?} at {p:?}: {g:?} vs {fd:?}"
                );
            }
        }
    }

    #[test]
    fn outside_without_extension_is_rejected() {
        let s = scene(0.5, 0.01);
        let f = AuxiliaryField::new(AuxKind::Ubar1, &s);
        assert!(matches!(f.eval([2.0, 0.0]), Err(Error::Domain(_))));
        assert!(f.with_extension(true).eval([2.0, 0.0]).is_ok());
    }

    #[test]
    fn extension_meets_boundary_data() {
        let s = scene(0.5, 0.01);
        let f = AuxiliaryField::new(AuxKind::Ubar1, &s).with_extension(true);
        for &p in &s.upper_boundary {
            assert!((f.eval(p).unwrap().0 - 1.0).abs() < 1e-9, "{p:?}");
        }
        for &p in s.lower_boundary.iter().chain(&s.outer_boundary) {
            assert!(f.eval(p).unwrap().0.abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn uhat_meets_boundary_data() {
        let p = GapProfile::new(0.5, 1.0, 2, 1.0, 1.0).unwrap();
        let cfg = SceneConfig::new(p, 0.02, 1.5)
            .with_outer_radius(4.0)
            .with_mode(SceneMode::InclusionBoundary)
            .with_boundary_data(BoundaryData::Linear {
                gx: 0.5,
                gy: 1.0,
                c: 0.0,
            });
        let s = build_scene(&cfg).unwrap();
        let f = AuxiliaryField::new(AuxKind::Uhat, &s).with_extension(true);
        let phi = s.boundary_data().clone();
        for &q in &s.upper_boundary {
            assert!(f.eval(q).unwrap().0.abs() < 1e-9);
        }
        for &q in &s.outer_boundary {
            let want = phi.value(q) - phi.value([0.0, 0.0]);
            assert!((f.eval(q).unwrap().0 - want).abs() < 1e-9, "{q:?}");
        }
    }

    #[test]
    fn diagonal_residual_on_flat_set_is_small() {
        let eps = 0.01;
        let s = scene(0.5, eps);
        let f = AuxiliaryField::new(AuxKind::Utilde1, &s);
        let a = CoefficientField::Diagonal { a11: 2.0, a22: 0.5 };
        let r = f
            .corrector_residual(&a, &gap_samples(&s, -0.4, 0.4, 5, 3))
            .unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-4 / eps));
    }

    #[test]
    fn residual_off_flat_set_scales_like_inverse_gap() {
        // residual * (eps + d^2) stays bounded across eps for the corrected field
        let a = CoefficientField::RotationAniso {
            theta: 0.3,
            ratio: 4.0,
        };
        let mut worst: Vec<f64> = Vec::new();
        for eps in [1e-2, 1e-3] {
            let s = scene(0.0, eps);
            let f = AuxiliaryField::new(AuxKind::Utilde1, &s).with_coefficient(a.clone());
            let pts = gap_samples(&s, 0.05, 0.9, 12, 3);
            let r = f.corrector_residual(&a, &pts).unwrap();
            let m = pts
                .iter()
                .zip(&r)
                .map(|(p, v)| v.abs() * (eps + p[0] * p[0]))
                .fold(0.0, f64::max);
            worst.push(m);
        }
        assert!(worst[1] < 3.0 * worst[0], "{worst:?}");
    }

    #[test]
    fn interpolant_difference_has_no_gradient() {
        let s = scene(0.5, 0.05);
        let mesh =
            crate::mesh::triangulate_scene(&s, &crate::mesh::GradingPolicy::new(4, 0.4)).unwrap();
        let space = FemSpace::new(&mesh, None).unwrap();
        let aux = AuxiliaryField::new(AuxKind::Ubar1, &s).with_extension(true);
        let values = aux.interpolate(&mesh).unwrap();
        let v = FieldSolution::from_values(&space, values);
        let c = compare_gradients(&space, &s, &v, &aux, &Region::All, 10).unwrap();
        assert_eq!(c.max, 0.0);
    }

    #[test]
    fn zero_difference_has_zero_energy() {
        let s = scene(0.5, 0.05);
        let mesh =
            crate::mesh::triangulate_scene(&s, &crate::mesh::GradingPolicy::new(4, 0.4)).unwrap();
        let space = FemSpace::new(&mesh, None).unwrap();
        let e = local_energy(&space, &s, &vec![0.0; mesh.vertices.len()], 0.0).unwrap();
        assert_eq!(e.energy, 0.0);
        assert!(e.triangles > 0);
    }
}
