//! Inclusion-pair geometry: gap profiles, scenes, regions and the checks of
//! the structural assumptions on the facing boundaries.

mod fields;
mod profile;
mod region;
mod scene;

pub use fields::{BoundaryData, CoefficientField, Mat2, Point};
pub use profile::{dist_to_sigma, eval_profiles, GapProfile};
pub use region::Region;
pub use scene::{
    build_scene, is_convex_polyline, polyline_distance, BoundaryTag, Scene, SceneConfig, SceneMode,
    SCHEMA_VERSION,
};

pub(crate) use fields::sym_eigenvalues;
pub(crate) use scene::march_abscissae;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn status(&self, name: &str) -> Option<CheckStatus> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.status)
    }

    pub fn failures(&self) -> Vec<&AssumptionCheck> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .collect()
    }
}

const GRID_POINTS: usize = 4001;

fn check(name: &'static str, ok: bool, detail: String) -> AssumptionCheck {
    AssumptionCheck {
        name,
        status: if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail,
    }
}

/// Samples the profile on a dense grid over `[-R1, R1]` and checks flatness
/// on the flat set, positivity of the gap excess off it, vanishing slopes at
/// its edge, the Hessian floor (m = 2 only), the C^2 seminorm cap and, when a
/// coefficient field is present, ellipticity at sampled points.
pub fn validate_assumptions(scene: &Scene) -> AssumptionReport {
    let p = scene.profile();
    let eps = scene.epsilon();
    let r0 = p.flat_halfwidth;
    let r1 = p.neck_halfwidth;
    let k = 2.0 * r1 / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| -r1 + i as f64 * k).collect();
    let mut checks = Vec::new();

    let flat_max = grid
        .iter()
        .filter(|x| x.abs() <= r0)
        .map(|&x| p.upper(x).abs().max(p.lower(x).abs()))
        .fold(0.0_f64, f64::max);
    checks.push(check(
        "flat_set_heights",
        flat_max == 0.0 && p.upper(0.0) == 0.0 && p.lower(0.0) == 0.0,
        format!("max |h_i| on flat set = {flat_max:.3e}"),
    ));

    let mut worst = f64::INFINITY;
    let mut worst_x = 0.0;
    for &x in grid.iter().filter(|x| x.abs() > r0) {
        let excess = p.thickness(eps, x) - eps;
        if excess < worst {
            worst = excess;
            worst_x = x;
        }
    }
    checks.push(check(
        "gap_positivity",
        worst > 0.0,
        format!("min (delta - eps) off flat set = {worst:.3e} at x' = {worst_x:.4}"),
    ));

    let edge = if r0 > 0.0 { r0 } else { 0.0 };
    let analytic = [
        p.upper_slope(edge),
        p.upper_slope(-edge),
        p.lower_slope(edge),
        p.lower_slope(-edge),
    ]
    .iter()
    .fold(0.0_f64, |a, b| a.max(b.abs()));
    let fd = |f: &dyn Fn(f64) -> f64| {
        ((f(edge + k) - f(edge)) / k)
            .abs()
            .max(((f(-edge) - f(-edge - k)) / k).abs())
    };
    let fd_slope = fd(&|x| p.upper(x)).max(fd(&|x| p.lower(x)));
    checks.push(check(
        "flat_edge_slopes",
        analytic == 0.0 && fd_slope <= 10.0 * p.norm_cap * k,
        format!("analytic {analytic:.3e}, one-sided difference {fd_slope:.3e}"),
    ));

    let second = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + k) - 2.0 * f(x) + f(x - k)) / (k * k);
    if p.growth_order == 2 {
        let floor = p.hessian_floor * (1.0 - 1e-6);
        let min_second = grid
            .iter()
            .filter(|x| x.abs() - k > r0 && x.abs() + k <= r1)
            .map(|&x| second(&|y| p.relative_height(y), x))
            .fold(f64::INFINITY, f64::min);
        checks.push(check(
            "hessian_floor",
            min_second >= floor,
            format!("min second difference of h1 - h2 = {min_second:.6e}, floor {floor:.6e}"),
        ));
    } else {
        checks.push(AssumptionCheck {
            name: "hessian_floor",
            status: CheckStatus::NotApplicable,
            detail: format!("growth order {} (floor applies to m = 2)", p.growth_order),
        });
    }

    let max_second = grid
        .iter()
        .filter(|x| x.abs() + k <= r1)
        .map(|&x| {
            second(&|y| p.upper(y), x)
                .abs()
                .max(second(&|y| p.lower(y), x).abs())
        })
        .fold(0.0_f64, f64::max);
    checks.push(check(
        "c2_seminorm",
        max_second <= p.norm_cap,
        format!(
            "max |second difference| = {max_second:.6e}, cap {:.6e}",
            p.norm_cap
        ),
    ));

    if let Some(a) = scene.coefficient() {
        let dirs: Vec<Point> = (0..16)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 16.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let l = scene.outer_radius;
        let mut result = a.validate();
        'outer: for i in 0..=20 {
            for j in 0..=20 {
                let pt = [
                    -l + 2.0 * l * i as f64 / 20.0,
                    scene.center[1] - l + 2.0 * l * j as f64 / 20.0,
                ];
                if result.is_err() {
                    break 'outer;
                }
                result = a.check_ellipticity_at(pt, &dirs);
            }
        }
        let (lo, hi) = a.bounds();
        checks.push(check(
            "ellipticity",
            result.is_ok(),
            match result {
                Ok(()) => format!("bounds [{lo}, {hi}] hold at 441 sample points"),
                Err(e) => e.to_string(),
            },
        ));
    }

    AssumptionReport { checks }
}
