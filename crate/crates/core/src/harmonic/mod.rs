//! P1 finite elements for `-div(A grad v) = 0` with Dirichlet data on every
//! tagged boundary vertex.

mod direct;
mod manufactured;
mod sparse;

pub use direct::{direct_solve, permute_symmetric, reverse_cuthill_mckee, SkylineCholesky};
pub use manufactured::{
    annulus_refinements, manufactured_error, HarmonicPreset, ManufacturedReport,
};
pub use sparse::{pcg, CsrMatrix, Preconditioner, SolverDiagnostics};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sym_eigenvalues, BoundaryTag, CoefficientField, Mat2, Point};
use crate::mesh::Mesh;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap; `None` means `50 * sqrt(unknowns)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            max_iter: None,
        }
    }

    fn cap(&self, unknowns: usize) -> usize {
        self.max_iter
            .unwrap_or_else(|| (50.0 * (unknowns as f64).sqrt()).ceil() as usize)
            .max(1)
    }
}

/// Gradients of the three barycentric coordinates of a triangle.
pub fn basis_gradients(a: Point, b: Point, c: Point) -> [[f64; 2]; 3] {
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    [
        [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
        [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
        [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
    ]
}

/// `(A f) . g` written so that swapping `f` and `g` gives the same bits.
#[inline]
fn a_dot(a: &Mat2, f: [f64; 2], g: [f64; 2]) -> f64 {
    a[0][0] * (f[0] * g[0]) + a[1][1] * (f[1] * g[1]) + a[0][1] * (f[0] * g[1] + f[1] * g[0])
}

/// Element stiffness `area * G A G^T` for a coefficient constant on the
/// triangle.
pub fn local_stiffness(pts: [Point; 3], a: &Mat2) -> [[f64; 3]; 3] {
    let g = basis_gradients(pts[0], pts[1], pts[2]);
    let area = crate::mesh::signed_area(pts[0], pts[1], pts[2]);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * a_dot(a, g[i], g[j]);
        }
    }
    k
}

/// Mesh-bound discretization data: per-triangle areas, basis gradients and
/// midpoint-sampled coefficients, plus the assembled stiffness matrix.
#[derive(Clone, Debug)]
pub struct FemSpace<'m> {
    pub mesh: &'m Mesh,
    pub stiffness: CsrMatrix,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    coeff: Vec<Mat2>,
}

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

impl<'m> FemSpace<'m> {
    pub fn new(mesh: &'m Mesh, coefficient: Option<&CoefficientField>) -> Result<Self> {
        let nt = mesh.triangles.len();
        let mut areas = Vec::with_capacity(nt);
        let mut grads = Vec::with_capacity(nt);
        let mut coeff = Vec::with_capacity(nt);
        let bounds = coefficient.map(|a| a.bounds());
        for t in 0..nt {
            let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
            let area = crate::mesh::signed_area(a, b, c);
            if !(area > 0.0) {
                return Err(Error::MeshMismatch(format!(
                    "triangle {t} has nonpositive area {area:.3e}"
                )));
            }
            areas.push(area);
            grads.push(basis_gradients(a, b, c));
            let m = match coefficient {
                None => IDENTITY,
                Some(field) => {
                    let m = field.matrix(mesh.centroid(t));
                    let (lo, hi) = bounds.unwrap();
                    let (l0, l1) = sym_eigenvalues(m);
                    let slack = 1e-12 * hi.max(1.0);
                    if !(l0 >= lo - slack && l1 <= hi + slack && lo > 0.0) {
                        let p = mesh.centroid(t);
                        return Err(Error::Coefficient(format!(
                            "ellipticity violated at ({:.4}, {:.4}): eigenvalues {l0:.4e}, {l1:.4e} outside [{lo}, {hi}]",
                            p[0], p[1]
                        )));
                    }
                    m
                }
            };
            coeff.push(m);
        }
        let mut triplets = Vec::with_capacity(9 * nt);
        for t in 0..nt {
            let tri = mesh.triangles[t];
            let g = &grads[t];
            for i in 0..3 {
                for j in 0..3 {
                    triplets.push((tri[i], tri[j], areas[t] * a_dot(&coeff[t], g[i], g[j])));
                }
            }
        }
        let n = mesh.vertices.len();
        let stiffness = CsrMatrix::from_triplets(n, n, &triplets);
        Ok(Self {
            mesh,
            stiffness,
            areas,
            grads,
            coeff,
        })
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn coefficient_at(&self, t: usize) -> &Mat2 {
        &self.coeff[t]
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.mesh.vertices.len() {
            return Err(Error::MeshMismatch(format!(
                "field has {} values, mesh has {} vertices",
                u.len(),
                self.mesh.vertices.len()
            )));
        }
        Ok(())
    }

    /// Per-triangle gradient of a nodal field.
    pub fn gradients(&self, u: &[f64]) -> Vec<[f64; 2]> {
        self.mesh
            .triangles
            .iter()
            .zip(&self.grads)
            .map(|(tri, g)| {
                let mut d = [0.0; 2];
                for i in 0..3 {
                    d[0] += u[tri[i]] * g[i][0];
                    d[1] += u[tri[i]] * g[i][1];
                }
                d
            })
            .collect()
    }

    /// `int A grad f . grad g` over the mesh, exact for P1 fields with the
    /// midpoint-sampled coefficient.
    pub fn energy(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        let gf = self.gradients(f);
        let gg = self.gradients(g);
        Ok(self.energy_from_gradients(&gf, &gg))
    }

    pub fn energy_from_gradients(&self, gf: &[[f64; 2]], gg: &[[f64; 2]]) -> f64 {
        let mut s = 0.0;
        for t in 0..self.areas.len() {
            s += self.areas[t] * a_dot(&self.coeff[t], gf[t], gg[t]);
        }
        s
    }

    /// Energy restricted to a triangle subset.
    pub fn energy_on(&self, gf: &[[f64; 2]], gg: &[[f64; 2]], triangles: &[usize]) -> f64 {
        triangles
            .iter()
            .map(|&t| self.areas[t] * a_dot(&self.coeff[t], gf[t], gg[t]))
            .sum()
    }

    /// `sum_{i tagged} (K u)_i`: the variationally consistent flux of `u`
    /// through the component, oriented along the outward normal of the mesh.
    pub fn flux_sum(&self, u: &[f64], tag: BoundaryTag) -> Result<f64> {
        self.check_len(u)?;
        let ku = self.stiffness.mul(u);
        Ok((0..ku.len())
            .filter(|&i| self.mesh.tags[i] == tag)
            .map(|i| ku[i])
            .sum())
    }

    /// Line integral of `A grad u . n` over boundary edges of the component,
    /// `n` the outward normal of the mesh, using the gradient of the owning
    /// triangle.
    pub fn line_flux(&self, u: &[f64], tag: BoundaryTag) -> Result<f64> {
        self.check_len(u)?;
        let g = self.gradients(u);
        let mut s = 0.0;
        for (a, b, t) in self.mesh.boundary_edge_triangles() {
            if self.mesh.tags[a] != tag || self.mesh.tags[b] != tag {
                continue;
            }
            let pa = self.mesh.vertices[a];
            let pb = self.mesh.vertices[b];
            // (dy, -dx) is the outward normal times the edge length for a
            // counter-clockwise triangle
            let n = [pb[1] - pa[1], pa[0] - pb[0]];
            let m = &self.coeff[t];
            let flux = [
                m[0][0] * g[t][0] + m[0][1] * g[t][1],
                m[1][0] * g[t][0] + m[1][1] * g[t][1],
            ];
            s += flux[0] * n[0] + flux[1] * n[1];
        }
        Ok(s)
    }

    /// Splits vertices into free (interior) and constrained (tagged) sets and
    /// prepares the reduced operator and its preconditioner.
    pub fn dirichlet_system(&self) -> DirichletSystem {
        let n = self.mesh.vertices.len();
        let mut free_map = vec![usize::MAX; n];
        let mut fixed_map = vec![usize::MAX; n];
        let mut free = Vec::new();
        let mut fixed = Vec::new();
        for v in 0..n {
            if self.mesh.tags[v] == BoundaryTag::Interior {
                free_map[v] = free.len();
                free.push(v);
            } else {
                fixed_map[v] = fixed.len();
                fixed.push(v);
            }
        }
        let kff = self
            .stiffness
            .submatrix(&free_map, free.len(), &free_map, free.len());
        let kfb = self
            .stiffness
            .submatrix(&free_map, free.len(), &fixed_map, fixed.len());
        let pre = Preconditioner::build(&kff);
        DirichletSystem {
            free,
            fixed,
            kff,
            kfb,
            pre,
        }
    }
}

/// Reduced system `K_ff x = -K_fb g`, reusable across boundary data.
#[derive(Clone, Debug)]
pub struct DirichletSystem {
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    pub kff: CsrMatrix,
    kfb: CsrMatrix,
    pre: Preconditioner,
}

impl DirichletSystem {
    pub fn preconditioner_name(&self) -> &'static str {
        self.pre.name()
    }

    /// Solves with Dirichlet values read from `problem` at every tagged vertex.
    pub fn solve(
        &self,
        space: &FemSpace,
        problem: &DirichletProblem,
        opts: &SolverOptions,
    ) -> Result<FieldSolution> {
        let data = &problem.values;
        space.check_len(data)?;
        let g: Vec<f64> = self.fixed.iter().map(|&v| data[v]).collect();
        let kg = self.kfb.mul(&g);
        let rhs: Vec<f64> = kg.iter().map(|x| -x).collect();
        let (x, diagnostics) = pcg(
            &self.kff,
            &rhs,
            &self.pre,
            opts.tol,
            opts.cap(self.free.len()),
        )?;
        let mut values = data.clone();
        for (k, &v) in self.free.iter().enumerate() {
            values[v] = x[k];
        }
        let gradients = space.gradients(&values);
        Ok(FieldSolution {
            values,
            gradients,
            diagnostics,
        })
    }
}

/// Dirichlet data for every tagged vertex (interior entries are ignored).
#[derive(Clone, Debug)]
pub struct DirichletProblem {
    pub values: Vec<f64>,
}

impl DirichletProblem {
    /// Builds data from `f(tag, point)`; every tagged vertex must get a value.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(BoundaryTag, Point) -> Option<f64>) -> Result<Self> {
        let mut values = vec![0.0; mesh.vertices.len()];
        for (v, (&tag, &p)) in mesh.tags.iter().zip(&mesh.vertices).enumerate() {
            if tag == BoundaryTag::Interior {
                continue;
            }
            values[v] = f(tag, p).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no Dirichlet value for {} vertex {v}",
                    tag.as_str()
                ))
            })?;
        }
        Ok(Self { values })
    }

    /// Constant value per component.
    pub fn per_tag(mesh: &Mesh, upper: f64, lower: f64, outer: f64) -> Result<Self> {
        Self::from_fn(mesh, |tag, _| match tag {
            BoundaryTag::Upper => Some(upper),
            BoundaryTag::Lower => Some(lower),
            BoundaryTag::Outer => Some(outer),
            BoundaryTag::Interior => None,
        })
    }
}

/// Assembles the stiffness matrix (see [`FemSpace::new`]).
pub fn assemble(mesh: &Mesh, coefficient: Option<&CoefficientField>) -> Result<CsrMatrix> {
    Ok(FemSpace::new(mesh, coefficient)?.stiffness)
}

/// One-shot solve of a Dirichlet problem.
pub fn solve_dirichlet(
    mesh: &Mesh,
    coefficient: Option<&CoefficientField>,
    problem: &DirichletProblem,
    opts: &SolverOptions,
) -> Result<FieldSolution> {
    let space = FemSpace::new(mesh, coefficient)?;
    space.dirichlet_system().solve(&space, problem, opts)
}

#[derive(Clone, Debug)]
pub struct FieldSolution {
    pub values: Vec<f64>,
    /// Constant gradient per triangle.
    pub gradients: Vec<[f64; 2]>,
    pub diagnostics: SolverDiagnostics,
}

impl FieldSolution {
    /// Wraps nodal values that did not come from a solve (interpolants,
    /// combinations of solved fields).
    pub fn from_values(space: &FemSpace, values: Vec<f64>) -> Self {
        let gradients = space.gradients(&values);
        Self {
            values,
            gradients,
            diagnostics: SolverDiagnostics {
                iterations: 0,
                residual: 0.0,
                tolerance: 0.0,
                preconditioner: "none".into(),
                unknowns: 0,
            },
        }
    }

    pub fn gradient_norms(&self) -> Vec<f64> {
        self.gradients.iter().map(|g| g[0].hypot(g[1])).collect()
    }

    /// Largest `|grad|` over the listed triangles (0 for an empty list).
    pub fn max_gradient(&self, triangles: &[usize]) -> f64 {
        triangles
            .iter()
            .map(|&t| self.gradients[t][0].hypot(self.gradients[t][1]))
            .fold(0.0, f64::max)
    }

    /// Largest amount by which a nodal value leaves `[min, max]` of the
    /// boundary values.
    pub fn max_principle_violation(&self, mesh: &Mesh) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (v, &tag) in mesh.tags.iter().enumerate() {
            if tag != BoundaryTag::Interior {
                lo = lo.min(self.values[v]);
                hi = hi.max(self.values[v]);
            }
        }
        self.values
            .iter()
            .map(|&u| (lo - u).max(u - hi).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn write_values_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["vertex_id", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_gradients_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["triangle_id", "gx", "gy"])?;
        for (i, g) in self.gradients.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:.17e}", g[0]),
                format!("{:.17e}", g[1]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `int A grad f . grad g` for two solutions on the same mesh.
pub fn energy_inner_product(space: &FemSpace, f: &FieldSolution, g: &FieldSolution) -> Result<f64> {
    if f.gradients.len() != space.mesh.triangles.len()
        || g.gradients.len() != space.mesh.triangles.len()
    {
        return Err(Error::MeshMismatch(
            "fields belong to different meshes".into(),
        ));
    }
    Ok(space.energy_from_gradients(&f.gradients, &g.gradients))
}

/// Maximum of a per-triangle quantity binned by centroid abscissa; `edges`
/// are increasing bin boundaries, empty bins report 0.
pub fn binned_max(
    mesh: &Mesh,
    per_triangle: &[f64],
    triangles: &[usize],
    edges: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; edges.len().saturating_sub(1)];
    for &t in triangles {
        let x = mesh.centroid(t)[0];
        let k = edges.partition_point(|&e| e <= x);
        if k == 0 || k >= edges.len() {
            continue;
        }
        out[k - 1] = f64::max(out[k - 1], per_triangle[t]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriRegion;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_triangle_rows_sum_to_zero() {
        let k = local_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &IDENTITY);
        for row in k {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(k[0][0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k[1][1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(k[1][2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_coefficient_on_right_triangle() {
        // legs 2 (along x) and 1 (along y), A = diag(4, 1); reference values
        // from area * G A G^T evaluated by hand:
        // grads: l0 = (-1/2, -1), l1 = (1/2, 0), l2 = (0, 1), area 1
        let k = local_stiffness(
            [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
            &[[4.0, 0.0], [0.0, 1.0]],
        );
        let expected = [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(k[i][j], expected[i][j], epsilon = 1e-14);
            }
        }
    }

    fn square_mesh(n: usize) -> Mesh {
        let mut v = Vec::new();
        let mut tags = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                v.push([i as f64 / n as f64, j as f64 / n as f64]);
                let edge = i == 0 || j == 0 || i == n || j == n;
                tags.push(if edge {
                    BoundaryTag::Outer
                } else {
                    BoundaryTag::Interior
                });
            }
        }
        let id = |i: usize, j: usize| i * (n + 1) + j;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let r = vec![TriRegion::Exterior; t.len()];
        Mesh::from_parts(v, t, tags, r).unwrap()
    }

    #[test]
    fn assembled_operator_is_symmetric_and_positive() {
        let m = square_mesh(8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = CoefficientField::Constant {
            a11: 1.7,
            a12: 0.4,
            a22: 1.1,
        };
        let space = FemSpace::new(&m, Some(&a)).unwrap();
        assert!(space.stiffness.is_symmetric());
        let sys = space.dirichlet_system();
        let x: Vec<f64> = (0..sys.kff.n_rows)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let q = sparse::dot(&x, &sys.kff.mul(&x));
        assert!(q > 0.0);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let m = square_mesh(10);
        let p = DirichletProblem::from_fn(&m, |_, p| Some(p[1])).unwrap();
        let s = solve_dirichlet(&m, None, &p, &SolverOptions::default()).unwrap();
        for (v, q) in s.values.iter().zip(&m.vertices) {
            assert_abs_diff_eq!(*v, q[1], epsilon = 1e-9);
        }
        for g in &s.gradients {
            assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-8);
            assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        let m = square_mesh(6);
        let p = DirichletProblem::per_tag(&m, 3.0, 3.0, 3.0).unwrap();
        let s = solve_dirichlet(&m, None, &p, &SolverOptions::default()).unwrap();
        assert!(s.values.iter().all(|v| (v - 3.0).abs() < 1e-9));
    }

    #[test]
    fn energy_forms() {
        let m = square_mesh(5);
        let space = FemSpace::new(&m, None).unwrap();
        let y: Vec<f64> = m.vertices.iter().map(|p| p[1]).collect();
        let x: Vec<f64> = m.vertices.iter().map(|p| p[0]).collect();
        assert_abs_diff_eq!(space.energy(&y, &y).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(space.energy(&x, &y).unwrap(), 0.0, epsilon = 1e-12);
        assert!(space.energy(&x[1..], &y).is_err());
    }

    #[test]
    fn binning_takes_maxima() {
        let m = square_mesh(4);
        let vals: Vec<f64> = (0..m.triangles.len()).map(|t| t as f64).collect();
        let all: Vec<usize> = (0..m.triangles.len()).collect();
        let b = binned_max(&m, &vals, &all, &[0.0, 0.5, 1.0]);
        assert_eq!(b.len(), 2);
        assert!(b[1] > b[0]);
    }
}
