use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fields::{BoundaryData, CoefficientField, Point};
use super::profile::GapProfile;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SceneMode {
    /// Two inclusions inside a disk.
    #[default]
    TwoInclusion,
    /// One inclusion above a profiled stretch of the outer boundary.
    InclusionBoundary,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Serializable scene description; [`build_scene`] turns it into a [`Scene`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub profile: GapProfile,
    pub epsilon: f64,
    pub closure_height: f64,
    /// Defaults to `4 * neck_halfwidth`.
    #[serde(default)]
    pub outer_radius: Option<f64>,
    #[serde(default)]
    pub mode: SceneMode,
    #[serde(default)]
    pub boundary_data: BoundaryData,
    #[serde(default)]
    pub coefficient: Option<CoefficientField>,
}

impl SceneConfig {
    pub fn new(profile: GapProfile, epsilon: f64, closure_height: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            profile,
            epsilon,
            closure_height,
            outer_radius: None,
            mode: SceneMode::TwoInclusion,
            boundary_data: BoundaryData::LinearXn,
            coefficient: None,
        }
    }

    pub fn with_outer_radius(mut self, l: f64) -> Self {
        self.outer_radius = Some(l);
        self
    }

    pub fn with_mode(mut self, mode: SceneMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_boundary_data(mut self, phi: BoundaryData) -> Self {
        self.boundary_data = phi;
        self
    }

    pub fn with_coefficient(mut self, a: Option<CoefficientField>) -> Self {
        self.coefficient = a;
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SceneConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn outer_radius_or_default(&self) -> f64 {
        self.outer_radius
            .unwrap_or(4.0 * self.profile.neck_halfwidth)
    }
}

/// Which boundary component a point or vertex belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Interior,
    /// Boundary of the upper inclusion.
    Upper,
    /// Boundary of the lower inclusion (two-inclusion mode only).
    Lower,
    /// Outer boundary of the matrix domain.
    Outer,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Interior => "interior",
            BoundaryTag::Upper => "upper",
            BoundaryTag::Lower => "lower",
            BoundaryTag::Outer => "outer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "interior" => Some(BoundaryTag::Interior),
            "upper" => Some(BoundaryTag::Upper),
            "lower" => Some(BoundaryTag::Lower),
            "outer" => Some(BoundaryTag::Outer),
            _ => None,
        }
    }
}

/// A validated scene with discretized boundary curves.
///
/// Upper inclusion: gap curve `y = eps + h1(x)` on `|x| <= R1`, vertical
/// sides up to `y = H`, semicircular cap of radius `R1` centred at `(0, H)`.
/// The lower inclusion is the same construction mirrored about `y = eps/2`
/// with `h2` in place of `h1`. The outer boundary is a circle of radius `L`
/// centred at `(0, eps/2)`; in inclusion-boundary mode the lower inclusion is
/// removed and the outer boundary follows `y = h2(x)` on `|x| <= R1` and the
/// horizontal floor `y = h2(R1)` out to the circle.
#[derive(Clone, Debug)]
pub struct Scene {
    pub config: SceneConfig,
    pub outer_radius: f64,
    pub center: Point,
    /// Closed, counter-clockwise.
    pub upper_boundary: Vec<Point>,
    /// Closed, counter-clockwise; empty in inclusion-boundary mode.
    pub lower_boundary: Vec<Point>,
    /// Closed, counter-clockwise.
    pub outer_boundary: Vec<Point>,
}

pub(crate) fn march_abscissae(profile: &GapProfile, spacing: impl Fn(f64) -> f64) -> Vec<f64> {
    let r0 = profile.flat_halfwidth;
    let r1 = profile.neck_halfwidth;
    let mut right = vec![0.0];
    if r0 > 0.0 {
        let w = spacing(0.0);
        let n = (r0 / w).ceil().max(1.0) as usize;
        for k in 1..=n {
            right.push(r0 * k as f64 / n as f64);
        }
        *right.last_mut().unwrap() = r0;
    }
    let start = right.len() - 1;
    let mut s = r0;
    let mut raw = Vec::new();
    while s < r1 {
        let w = spacing(s).max(1e-14);
        s += w;
        raw.push(s);
    }
    let overshoot = raw.last().copied().unwrap_or(r1);
    let scale = (r1 - r0) / (overshoot - r0);
    for p in raw {
        right.push(r0 + (p - r0) * scale);
    }
    *right.last_mut().unwrap() = r1;
    debug_assert!(right.len() > start);
    let mut out: Vec<f64> = right.iter().skip(1).rev().map(|x| -x).collect();
    out.extend(right);
    out
}

fn arc(center: Point, radius: f64, from: f64, to: f64, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|k| {
            let t = from + (to - from) * k as f64 / n as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

fn segment(a: Point, b: Point, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

fn push_skip_first(dst: &mut Vec<Point>, src: Vec<Point>) {
    dst.extend(src.into_iter().skip(1));
}

impl Scene {
    pub fn profile(&self) -> &GapProfile {
        &self.config.profile
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn mode(&self) -> SceneMode {
        self.config.mode
    }

    pub fn closure_height(&self) -> f64 {
        self.config.closure_height
    }

    pub fn boundary_data(&self) -> &BoundaryData {
        &self.config.boundary_data
    }

    pub fn coefficient(&self) -> Option<&CoefficientField> {
        self.config.coefficient.as_ref()
    }

    pub fn upper_curve(&self, x: f64) -> f64 {
        self.epsilon() + self.profile().upper(x)
    }

    pub fn lower_curve(&self, x: f64) -> f64 {
        self.profile().lower(x)
    }

    /// `delta(x') = eps + h1 - h2`, checked against the profiled range.
    pub fn gap_thickness(&self, x: f64) -> Result<f64> {
        self.profile().gap_thickness(self.epsilon(), x)
    }

    /// Bottom of the lower inclusion's vertical sides.
    pub fn lower_closure(&self) -> f64 {
        self.epsilon() - self.closure_height()
    }

    /// Height of the floor in inclusion-boundary mode.
    pub fn floor_height(&self) -> f64 {
        self.lower_curve(self.profile().neck_halfwidth)
    }

    /// Abscissa where the floor meets the outer circle.
    pub fn floor_extent(&self) -> f64 {
        let dy = self.floor_height() - self.center[1];
        (self.outer_radius * self.outer_radius - dy * dy).sqrt()
    }

    /// Point-in-gap test `h2(x) < y < eps + h1(x)`, `|x| < R1`.
    pub fn in_gap(&self, p: Point) -> bool {
        let r1 = self.profile().neck_halfwidth;
        p[0].abs() < r1 && p[1] > self.lower_curve(p[0]) && p[1] < self.upper_curve(p[0])
    }

    /// Distance from `p` to the analytic boundary component `tag`.
    ///
    /// Graph pieces use the vertical residual, which bounds the true distance
    /// from above.
    pub fn boundary_distance(&self, tag: BoundaryTag, p: Point) -> f64 {
        let r1 = self.profile().neck_halfwidth;
        let h = self.closure_height();
        let seg = |a: Point, b: Point| point_segment_distance(p, a, b);
        let graph = |f: &dyn Fn(f64) -> f64| {
            if p[0].abs() <= r1 {
                (p[1] - f(p[0])).abs()
            } else {
                f64::INFINITY
            }
        };
        match tag {
            BoundaryTag::Interior => f64::INFINITY,
            BoundaryTag::Upper => {
                let top = self.upper_curve(r1);
                let cap = if p[1] >= h {
                    ((p[0]).hypot(p[1] - h) - r1).abs()
                } else {
                    f64::INFINITY
                };
                graph(&|x| self.upper_curve(x))
                    .min(seg([r1, top], [r1, h]))
                    .min(seg([-r1, top], [-r1, h]))
                    .min(cap)
            }
            BoundaryTag::Lower => {
                if self.mode() == SceneMode::InclusionBoundary {
                    return f64::INFINITY;
                }
                let bot = self.lower_curve(r1);
                let yc = self.lower_closure();
                let cap = if p[1] <= yc {
                    ((p[0]).hypot(p[1] - yc) - r1).abs()
                } else {
                    f64::INFINITY
                };
                graph(&|x| self.lower_curve(x))
                    .min(seg([r1, yc], [r1, bot]))
                    .min(seg([-r1, yc], [-r1, bot]))
                    .min(cap)
            }
            BoundaryTag::Outer => {
                let circle = ((p[0] - self.center[0]).hypot(p[1] - self.center[1])
                    - self.outer_radius)
                    .abs();
                match self.mode() {
                    SceneMode::TwoInclusion => circle,
                    SceneMode::InclusionBoundary => {
                        let yf = self.floor_height();
                        let xf = self.floor_extent();
                        let arc_d = if p[1] >= yf { circle } else { f64::INFINITY };
                        graph(&|x| self.lower_curve(x))
                            .min(seg([r1, yf], [xf, yf]))
                            .min(seg([-xf, yf], [-r1, yf]))
                            .min(arc_d)
                    }
                }
            }
        }
    }

    /// Smallest distance between the two inclusion polylines (or between the
    /// upper inclusion and the outer polyline in inclusion-boundary mode).
    pub fn min_separation(&self) -> f64 {
        let other = match self.mode() {
            SceneMode::TwoInclusion => &self.lower_boundary,
            SceneMode::InclusionBoundary => &self.outer_boundary,
        };
        polyline_distance(&self.upper_boundary, other)
    }
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Minimum distance between two closed polylines (vertex-to-segment in both
/// directions; exact for non-intersecting polylines).
pub fn polyline_distance(a: &[Point], b: &[Point]) -> f64 {
    let one_way = |a: &[Point], b: &[Point]| {
        let mut best = f64::INFINITY;
        for &p in a {
            for k in 0..b.len() {
                let d = point_segment_distance(p, b[k], b[(k + 1) % b.len()]);
                best = best.min(d);
            }
        }
        best
    };
    one_way(a, b).min(one_way(b, a))
}

/// Cross products of consecutive edges of a closed polyline all share one
/// sign (zeros allowed up to a relative tolerance).
pub fn is_convex_polyline(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut pos = false;
    let mut neg = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - b[0], c[1] - b[1]];
        let cross = e1[0] * e2[1] - e1[1] * e2[0];
        let scale = e1[0].hypot(e1[1]) * e2[0].hypot(e2[1]);
        let tol = 1e-12 * scale;
        if cross > tol {
            pos = true;
        } else if cross < -tol {
            neg = true;
        }
    }
    !(pos && neg)
}

/// Validates the configuration and builds the discretized boundaries.
pub fn build_scene(config: &SceneConfig) -> Result<Scene> {
    let p = &config.profile;
    let eps = config.epsilon;
    let h = config.closure_height;
    let r1 = p.neck_halfwidth;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be > 0, got {eps}"
        )));
    }
    let l = config.outer_radius_or_default();
    if !(l > 3.0 * r1) {
        return Err(Error::InvalidParameter(format!(
            "outer radius {l} must exceed 3 * neck_halfwidth = {}",
            3.0 * r1
        )));
    }
    if let Some(a) = &config.coefficient {
        a.validate()?;
    }
    let top = eps + p.upper(r1);
    if !(h > top) {
        return Err(Error::GeometryConstruction(format!(
            "closure height {h} does not clear the profile top {top:.6}; the closed upper inclusion would be nonconvex"
        )));
    }
    let bottom = p.lower(r1);
    let lower_closure = eps - h;
    if config.mode == SceneMode::TwoInclusion && !(lower_closure < bottom) {
        return Err(Error::GeometryConstruction(format!(
            "closure height {h} does not clear the lower profile bottom {bottom:.6}"
        )));
    }
    let center = [0.0, 0.5 * eps];
    let reach = (h + r1 - center[1]).max(center[1] - (lower_closure - r1));
    if !(reach < l) || !(r1.hypot(h - center[1]) < l) {
        return Err(Error::GeometryConstruction(format!(
            "inclusions (extent {reach:.4}) do not fit strictly inside the outer radius {l}"
        )));
    }

    let poly_h = r1 / 64.0;
    let xs = march_abscissae(p, |x| poly_h.min(0.5 * p.thickness(eps, x)));
    let n_side = |len: f64| ((len / poly_h).ceil() as usize).max(1);
    let n_cap = 64;

    // upper inclusion, counter-clockwise: gap curve left to right, right side
    // up, cap right to left, left side down
    let mut upper: Vec<Point> = xs.iter().map(|&x| [x, eps + p.upper(x)]).collect();
    push_skip_first(&mut upper, segment([r1, top], [r1, h], n_side(h - top)));
    push_skip_first(&mut upper, arc([0.0, h], r1, 0.0, PI, n_cap));
    let mut left = segment([-r1, h], [-r1, top], n_side(h - top));
    left.pop();
    push_skip_first(&mut upper, left);

    let mut lower = Vec::new();
    let mut outer = Vec::new();
    match config.mode {
        SceneMode::TwoInclusion => {
            // right to left along the gap curve, then down, cap, up
            lower = xs.iter().rev().map(|&x| [x, p.lower(x)]).collect();
            push_skip_first(
                &mut lower,
                segment(
                    [-r1, bottom],
                    [-r1, lower_closure],
                    n_side(bottom - lower_closure),
                ),
            );
            push_skip_first(
                &mut lower,
                arc([0.0, lower_closure], r1, PI, 2.0 * PI, n_cap),
            );
            let mut right = segment(
                [r1, lower_closure],
                [r1, bottom],
                n_side(bottom - lower_closure),
            );
            right.pop();
            push_skip_first(&mut lower, right);
            outer = arc(center, l, 0.0, 2.0 * PI, 256);
            outer.pop();
        }
        SceneMode::InclusionBoundary => {
            let yf = bottom;
            let dy = yf - center[1];
            if !(dy.abs() < l) {
                return Err(Error::GeometryConstruction(
                    "floor lies outside the outer circle".into(),
                ));
            }
            let xf = (l * l - dy * dy).sqrt();
            let theta_f = (dy / l).asin();
            outer.push([-xf, yf]);
            push_skip_first(&mut outer, segment([-xf, yf], [-r1, yf], n_side(xf - r1)));
            outer.extend(xs.iter().skip(1).map(|&x| [x, p.lower(x)]));
            push_skip_first(&mut outer, segment([r1, yf], [xf, yf], n_side(xf - r1)));
            let mut a = arc(center, l, theta_f, PI - theta_f, 256);
            a.pop();
            push_skip_first(&mut outer, a);
        }
    }

    let scene = Scene {
        config: config.clone(),
        outer_radius: l,
        center,
        upper_boundary: upper,
        lower_boundary: lower,
        outer_boundary: outer,
    };
    if !is_convex_polyline(&scene.upper_boundary) {
        return Err(Error::GeometryConstruction(
            "upper inclusion polyline is not convex".into(),
        ));
    }
    if scene.mode() == SceneMode::TwoInclusion && !is_convex_polyline(&scene.lower_boundary) {
        return Err(Error::GeometryConstruction(
            "lower inclusion polyline is not convex".into(),
        ));
    }
    Ok(scene)
}
