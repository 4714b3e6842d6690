use serde::{Deserialize, Serialize};

use super::{DirichletProblem, FemSpace, SolverOptions};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::geometry::Point;
use crate::mesh::Mesh;

/// Closed-form harmonic functions for convergence checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarmonicPreset {
    Linear {
        gx: f64,
        gy: f64,
        c: f64,
    },
    /// `ln r`
    LogRadius,
    /// `r^k cos(k theta)`
    PolarCos {
        k: i32,
    },
}

impl HarmonicPreset {
    pub fn value(&self, p: Point) -> f64 {
        match *self {
            HarmonicPreset::Linear { gx, gy, c } => gx * p[0] + gy * p[1] + c,
            HarmonicPreset::LogRadius => p[0].hypot(p[1]).ln(),
            HarmonicPreset::PolarCos { k } => {
                let r = p[0].hypot(p[1]);
                let t = p[1].atan2(p[0]);
                r.powi(k) * (k as f64 * t).cos()
            }
        }
    }

    pub fn gradient(&self, p: Point) -> Point {
        match *self {
            HarmonicPreset::Linear { gx, gy, .. } => [gx, gy],
            HarmonicPreset::LogRadius => {
                let r2 = p[0] * p[0] + p[1] * p[1];
                [p[0] / r2, p[1] / r2]
            }
            HarmonicPreset::PolarCos { k } => {
                // d/dz z^k = k z^(k-1); grad Re f = (Re f', -Im f')
                let r = p[0].hypot(p[1]);
                let t = p[1].atan2(p[0]);
                let m = k as f64 * r.powi(k - 1);
                let a = (k - 1) as f64 * t;
                [m * a.cos(), -m * a.sin()]
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManufacturedReport {
    /// Longest edge per refinement.
    pub h: Vec<f64>,
    pub linf: Vec<f64>,
    pub grad_l2: Vec<f64>,
    /// `None` when every error sits at round-off level.
    pub order_linf: Option<f64>,
    pub order_grad: Option<f64>,
}

/// Annuli `r_in <= r <= r_out` with `n_theta * 2^k` by `n_r * 2^k` cells.
pub fn annulus_refinements(
    r_in: f64,
    r_out: f64,
    n_theta: usize,
    n_r: usize,
    levels: usize,
) -> Result<Vec<Mesh>> {
    (0..levels)
        .map(|k| Mesh::annulus(r_in, r_out, n_theta << k, n_r << k))
        .collect()
}

fn max_edge(mesh: &Mesh) -> f64 {
    let mut h: f64 = 0.0;
    for tri in &mesh.triangles {
        for i in 0..3 {
            let a = mesh.vertices[tri[i]];
            let b = mesh.vertices[tri[(i + 1) % 3]];
            h = h.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    h
}

/// Solves the Laplace problem with the preset as boundary data on each mesh
/// and measures the nodal max error and the L2 norm of the gradient error
/// (edge-midpoint rule, exact for quadratics). Orders are least-squares
/// slopes of `log error` against `log h`.
pub fn manufactured_error(
    meshes: &[Mesh],
    exact: &HarmonicPreset,
    opts: &SolverOptions,
) -> Result<ManufacturedReport> {
    if meshes.is_empty() {
        return Err(Error::InvalidParameter("no meshes supplied".into()));
    }
    let mut h = Vec::new();
    let mut linf = Vec::new();
    let mut grad_l2 = Vec::new();
    for mesh in meshes {
        let space = FemSpace::new(mesh, None)?;
        let problem = DirichletProblem::from_fn(mesh, |_, p| Some(exact.value(p)))?;
        let sol = space.dirichlet_system().solve(&space, &problem, opts)?;
        let e_inf = sol
            .values
            .iter()
            .zip(&mesh.vertices)
            .map(|(u, p)| (u - exact.value(*p)).abs())
            .fold(0.0, f64::max);
        let mut e2 = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let g = sol.gradients[t];
            let mut s = 0.0;
            for i in 0..3 {
                let a = mesh.vertices[tri[i]];
                let b = mesh.vertices[tri[(i + 1) % 3]];
                let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let ge = exact.gradient(m);
                s += (g[0] - ge[0]).powi(2) + (g[1] - ge[1]).powi(2);
            }
            e2 += space.area(t) * s / 3.0;
        }
        h.push(max_edge(mesh));
        linf.push(e_inf);
        grad_l2.push(e2.sqrt());
    }
    let order = |e: &[f64]| {
        if e.iter().all(|v| *v <= 1e-11) {
            return None;
        }
        let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
        least_squares(&lx, &ly).map(|f| f.slope)
    };
    let order_linf = order(&linf);
    let order_grad = order(&grad_l2);
    Ok(ManufacturedReport {
        h,
        linf,
        grad_l2,
        order_linf,
        order_grad,
    })
}
