//! Conductor potentials from the component decomposition.
//!
//! Two inclusions: `u = C1 v1 + C2 v2 + v3` where `v1`, `v2` are the
//! indicator-harmonic lifts of the inclusions and `v3` carries the outer data.
//! Fluxes are energy inner products, `a_ij = -E(v_i, v_j)`,
//! `b_i = -E(v_i, v3)`, and the zero-flux conditions give
//! `C1 a11 + C2 a12 + b1 = 0`, `C1 a21 + C2 a22 + b2 = 0`.
//!
//! One inclusion above the outer boundary: `u = (C1 - phi(0)) v1 + v0 + phi(0)`
//! with `v0 = phi - phi(0)` on the outer boundary and `0` on the inclusion,
//! and `(C1 - phi(0)) a11 + Qtilde = 0` with `Qtilde = -E(v1, v0)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Region, Scene, SceneMode};
use crate::harmonic::{
    direct_solve, CsrMatrix, DirichletProblem, DirichletSystem, FemSpace, FieldSolution,
    SolverDiagnostics, SolverOptions,
};
use crate::mesh::{triangulate_scene, GradingPolicy, Mesh};

/// Capacitance coefficients, loads and outer fluxes of the two-inclusion
/// decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluxMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
    /// Flux of `v1` through the outer boundary, from the assembled operator.
    pub f1: f64,
    pub f2: f64,
    /// Same fluxes as boundary line integrals of the P1 gradient.
    pub f1_line: f64,
    pub f2_line: f64,
}

/// Flux data of the inclusion-boundary decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryFlux {
    pub a11: f64,
    pub qtilde: f64,
    pub f1: f64,
    pub phi0: f64,
}

/// `a_ij = -E(v_i, v_j)`, `b_i = -E(v_i, v3)`; the outer fluxes are computed
/// separately as sums of `K v_i` over outer vertices.
pub fn flux_matrix(
    space: &FemSpace,
    v1: &FieldSolution,
    v2: &FieldSolution,
    v3: &FieldSolution,
) -> Result<FluxMatrix> {
    let e =
        |f: &FieldSolution, g: &FieldSolution| crate::harmonic::energy_inner_product(space, f, g);
    Ok(FluxMatrix {
        a11: -e(v1, v1)?,
        a12: -e(v1, v2)?,
        a21: -e(v2, v1)?,
        a22: -e(v2, v2)?,
        b1: -e(v1, v3)?,
        b2: -e(v2, v3)?,
        f1: space.flux_sum(&v1.values, BoundaryTag::Outer)?,
        f2: space.flux_sum(&v2.values, BoundaryTag::Outer)?,
        f1_line: space.line_flux(&v1.values, BoundaryTag::Outer)?,
        f2_line: space.line_flux(&v2.values, BoundaryTag::Outer)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConductorPotentials {
    pub c1: f64,
    pub c2: f64,
    /// `(a11 + a12) / (a21 + a22)`
    pub alpha: f64,
    /// `|C1 - C2|` from the direct solve.
    pub difference: f64,
    /// `|b1 - alpha b2| / |a11 - alpha a21|`.
    pub difference_factored: f64,
    pub residuals: [f64; 2],
}

/// Solves the 2x2 conductor system by Cramer's rule.
pub fn solve_conductors(f: &FluxMatrix) -> Result<ConductorPotentials> {
    let det = f.a11 * f.a22 - f.a12 * f.a21;
    if !(det > 0.0) {
        return Err(Error::SingularSystem(format!(
            "determinant a11 a22 - a12 a21 = {det:.6e} is not positive"
        )));
    }
    let c1 = (f.a12 * f.b2 - f.a22 * f.b1) / det;
    let c2 = (f.a21 * f.b1 - f.a11 * f.b2) / det;
    let alpha = (f.a11 + f.a12) / (f.a21 + f.a22);
    let difference_factored = (f.b1 - alpha * f.b2).abs() / (f.a11 - alpha * f.a21).abs();
    Ok(ConductorPotentials {
        c1,
        c2,
        alpha,
        difference: (c1 - c2).abs(),
        difference_factored,
        residuals: [
            c1 * f.a11 + c2 * f.a12 + f.b1,
            c1 * f.a21 + c2 * f.a22 + f.b2,
        ],
    })
}

/// Gradient maxima of the reconstructed field per region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradientMaxima {
    /// Over the gap block above the flat set (0 when the flat set is a point).
    pub sigma: f64,
    /// Over the narrow region `|x'| < R1`.
    pub gap: f64,
    /// Outside the narrow region.
    pub far: f64,
    /// Over gap triangles touching `x' = 0`.
    pub axis: f64,
}

impl GradientMaxima {
    pub fn measure(scene: &Scene, mesh: &Mesh, field: &FieldSolution) -> Self {
        let r1 = scene.profile().neck_halfwidth;
        Self {
            sigma: field.max_gradient(&mesh.triangles_in(scene, &Region::Sigma)),
            gap: field.max_gradient(&mesh.triangles_in(scene, &Region::Gap { r: r1 })),
            far: field.max_gradient(&mesh.triangles_in(scene, &Region::Exterior)),
            axis: field.max_gradient(&mesh.axis_triangles()),
        }
    }
}

/// Solved conductor problem.
#[derive(Clone, Debug)]
pub struct ConductorSolution {
    pub c1: f64,
    /// Absent in inclusion-boundary mode.
    pub c2: Option<f64>,
    pub alpha: Option<f64>,
    pub difference: f64,
    pub u: FieldSolution,
    pub maxima: GradientMaxima,
    /// Gap maxima of the three terms `(C1 - C2) grad v1`, `C2 grad(v1 + v2)`,
    /// `grad v3` (two-inclusion mode only).
    pub term_maxima: Option<[f64; 3]>,
}

/// Nodal `u = C1 v1 + C2 v2 + v3` and its gradient.
pub fn reconstruct(
    space: &FemSpace,
    scene: &Scene,
    v1: &FieldSolution,
    v2: &FieldSolution,
    v3: &FieldSolution,
    potentials: &ConductorPotentials,
) -> ConductorSolution {
    let (c1, c2) = (potentials.c1, potentials.c2);
    let values: Vec<f64> = (0..v1.values.len())
        .map(|i| c1 * v1.values[i] + c2 * v2.values[i] + v3.values[i])
        .collect();
    let u = FieldSolution::from_values(space, values);
    let mesh = space.mesh;
    let gap = mesh.triangles_in(
        scene,
        &Region::Gap {
            r: scene.profile().neck_halfwidth,
        },
    );
    let term = |f: &dyn Fn(usize) -> [f64; 2]| {
        gap.iter()
            .map(|&t| {
                let g = f(t);
                g[0].hypot(g[1])
            })
            .fold(0.0, f64::max)
    };
    let d = c1 - c2;
    let term_maxima = [
        term(&|t| [d * v1.gradients[t][0], d * v1.gradients[t][1]]),
        term(&|t| {
            [
                c2 * (v1.gradients[t][0] + v2.gradients[t][0]),
                c2 * (v1.gradients[t][1] + v2.gradients[t][1]),
            ]
        }),
        term(&|t| v3.gradients[t]),
    ];
    let maxima = GradientMaxima::measure(scene, mesh, &u);
    ConductorSolution {
        c1,
        c2: Some(c2),
        alpha: Some(potentials.alpha),
        difference: potentials.difference,
        u,
        maxima,
        term_maxima: Some(term_maxima),
    }
}

/// Everything produced by one solve of a scene.
#[derive(Clone, Debug)]
pub struct SceneSolution {
    pub scene: Scene,
    pub mesh: Mesh,
    pub v1: FieldSolution,
    /// Two-inclusion mode only.
    pub v2: Option<FieldSolution>,
    /// `v3` (two inclusions) or `v0` (inclusion-boundary mode).
    pub v_data: FieldSolution,
    pub flux: Option<FluxMatrix>,
    pub boundary_flux: Option<BoundaryFlux>,
    pub potentials: Option<ConductorPotentials>,
    pub conductor: ConductorSolution,
}

fn component_problems(scene: &Scene, mesh: &Mesh) -> Result<Vec<DirichletProblem>> {
    let phi = scene.boundary_data();
    match scene.mode() {
        SceneMode::TwoInclusion => Ok(vec![
            DirichletProblem::per_tag(mesh, 1.0, 0.0, 0.0)?,
            DirichletProblem::per_tag(mesh, 0.0, 1.0, 0.0)?,
            DirichletProblem::from_fn(mesh, |tag, p| match tag {
                BoundaryTag::Outer => Some(phi.value(p)),
                BoundaryTag::Interior => None,
                _ => Some(0.0),
            })?,
        ]),
        SceneMode::InclusionBoundary => {
            let phi0 = phi.value([0.0, 0.0]);
            Ok(vec![
                DirichletProblem::per_tag(mesh, 1.0, 0.0, 0.0)?,
                DirichletProblem::from_fn(mesh, |tag, p| match tag {
                    BoundaryTag::Outer => Some(phi.value(p) - phi0),
                    BoundaryTag::Interior => None,
                    _ => Some(0.0),
                })?,
            ])
        }
    }
}

fn solve_all(
    system: &DirichletSystem,
    space: &FemSpace,
    problems: &[DirichletProblem],
    opts: &SolverOptions,
) -> Result<Vec<FieldSolution>> {
    use rayon::prelude::*;
    problems
        .par_iter()
        .map(|p| system.solve(space, p, opts))
        .collect()
}

/// Meshes the scene and runs the full pipeline for its mode.
pub fn solve_scene(
    scene: &Scene,
    policy: &GradingPolicy,
    opts: &SolverOptions,
) -> Result<SceneSolution> {
    let mesh = triangulate_scene(scene, policy)?;
    solve_on_mesh(scene, mesh, opts)
}

/// Runs the pipeline on a given mesh of the scene.
pub fn solve_on_mesh(scene: &Scene, mesh: Mesh, opts: &SolverOptions) -> Result<SceneSolution> {
    let space = FemSpace::new(&mesh, scene.coefficient())?;
    let system = space.dirichlet_system();
    let problems = component_problems(scene, &mesh)?;
    let mut fields = solve_all(&system, &space, &problems, opts)?.into_iter();
    match scene.mode() {
        SceneMode::TwoInclusion => {
            let v1 = fields.next().unwrap();
            let v2 = fields.next().unwrap();
            let v3 = fields.next().unwrap();
            let flux = flux_matrix(&space, &v1, &v2, &v3)?;
            let potentials = solve_conductors(&flux)?;
            let conductor = reconstruct(&space, scene, &v1, &v2, &v3, &potentials);
            drop(space);
            Ok(SceneSolution {
                scene: scene.clone(),
                mesh,
                v1,
                v2: Some(v2),
                v_data: v3,
                flux: Some(flux),
                boundary_flux: None,
                potentials: Some(potentials),
                conductor,
            })
        }
        SceneMode::InclusionBoundary => {
            let v1 = fields.next().unwrap();
            let v0 = fields.next().unwrap();
            let phi0 = scene.boundary_data().value([0.0, 0.0]);
            let e = |f: &FieldSolution, g: &FieldSolution| {
                crate::harmonic::energy_inner_product(&space, f, g)
            };
            let a11 = -e(&v1, &v1)?;
            let qtilde = -e(&v1, &v0)?;
            if !(a11 < 0.0) {
                return Err(Error::SingularSystem(format!(
                    "a11 = {a11:.6e} is not negative"
                )));
            }
            let bflux = BoundaryFlux {
                a11,
                qtilde,
                f1: space.flux_sum(&v1.values, BoundaryTag::Outer)?,
                phi0,
            };
            let c1 = phi0 - qtilde / a11;
            let values: Vec<f64> = (0..v1.values.len())
                .map(|i| (c1 - phi0) * v1.values[i] + v0.values[i] + phi0)
                .collect();
            let u = FieldSolution::from_values(&space, values);
            let maxima = GradientMaxima::measure(scene, &mesh, &u);
            drop(space);
            Ok(SceneSolution {
                scene: scene.clone(),
                mesh,
                v1,
                v2: None,
                v_data: v0,
                flux: None,
                boundary_flux: Some(bflux),
                potentials: None,
                conductor: ConductorSolution {
                    c1,
                    c2: None,
                    alpha: None,
                    difference: (c1 - phi0).abs(),
                    u,
                    maxima,
                    term_maxima: None,
                },
            })
        }
    }
}

/// Boundary-mode entry point (checks the scene mode).
pub fn solve_boundary_mode(
    scene: &Scene,
    policy: &GradingPolicy,
    opts: &SolverOptions,
) -> Result<SceneSolution> {
    if scene.mode() != SceneMode::InclusionBoundary {
        return Err(Error::InvalidParameter(
            "scene is not in inclusion_boundary mode".into(),
        ));
    }
    solve_scene(scene, policy, opts)
}

/// Two-inclusion entry point (checks the scene mode).
pub fn solve_two_inclusion(
    scene: &Scene,
    policy: &GradingPolicy,
    opts: &SolverOptions,
) -> Result<SceneSolution> {
    if scene.mode() != SceneMode::TwoInclusion {
        return Err(Error::InvalidParameter(
            "scene is not in two_inclusion mode".into(),
        ));
    }
    solve_scene(scene, policy, opts)
}

/// Largest unknown count accepted by [`direct_constrained_solve`].
pub const DIRECT_LIMIT: usize = 20_000;

/// One-shot solve of the perfect-conductivity problem: every inclusion's
/// vertices share one unknown, whose test function is the sum of their hat
/// functions (the zero-flux condition). Returns nodal values.
pub fn direct_constrained_solve(scene: &Scene, space: &FemSpace) -> Result<Vec<f64>> {
    let mesh = space.mesh;
    let n = mesh.vertices.len();
    let phi = scene.boundary_data();
    let phi0 = phi.value([0.0, 0.0]);
    let boundary_mode = scene.mode() == SceneMode::InclusionBoundary;
    let mut map = vec![usize::MAX; n];
    let mut free = 0;
    for v in 0..n {
        if mesh.tags[v] == BoundaryTag::Interior {
            map[v] = free;
            free += 1;
        }
    }
    let has_lower = mesh.has_tag(BoundaryTag::Lower);
    let s1 = free;
    let s2 = free + 1;
    let total = if has_lower { free + 2 } else { free + 1 };
    if total > DIRECT_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "direct solve limited to {DIRECT_LIMIT} unknowns, mesh needs {total}"
        )));
    }
    for v in 0..n {
        match mesh.tags[v] {
            BoundaryTag::Upper => map[v] = s1,
            BoundaryTag::Lower => map[v] = s2,
            _ => {}
        }
    }
    let data = |v: usize| {
        let p = mesh.vertices[v];
        if boundary_mode {
            phi.value(p) - phi0
        } else {
            phi.value(p)
        }
    };
    let k = &space.stiffness;
    let mut triplets = Vec::with_capacity(k.nnz());
    let mut rhs = vec![0.0; total];
    for i in 0..n {
        let ri = map[i];
        if ri == usize::MAX {
            continue;
        }
        let (cols, vals) = k.row(i);
        for (&j, &kij) in cols.iter().zip(vals) {
            let cj = map[j];
            if cj == usize::MAX {
                rhs[ri] -= kij * data(j);
            } else {
                triplets.push((ri, cj, kij));
            }
        }
    }
    let a = CsrMatrix::from_triplets(total, total, &triplets);
    // interior unknowns in RCM order, conductor unknowns last
    let interior = {
        let sub_map: Vec<usize> = (0..total)
            .map(|i| if i < free { i } else { usize::MAX })
            .collect();
        let sub = a.submatrix(&sub_map, free, &sub_map, free);
        crate::harmonic::reverse_cuthill_mckee(&sub)
    };
    let mut perm = interior;
    perm.extend(free..total);
    let pa = crate::harmonic::permute_symmetric(&a, &perm);
    let factor = crate::harmonic::SkylineCholesky::factor(&pa)?;
    let pb: Vec<f64> = perm.iter().map(|&o| rhs[o]).collect();
    let px = factor.solve(&pb);
    let mut x = vec![0.0; total];
    for (new, &old) in perm.iter().enumerate() {
        x[old] = px[new];
    }
    let mut u = vec![0.0; n];
    for v in 0..n {
        u[v] = match mesh.tags[v] {
            BoundaryTag::Outer => data(v),
            _ => x[map[v]],
        };
        if boundary_mode {
            u[v] += phi0;
        }
    }
    Ok(u)
}

/// Direct sparse solve of a plain Dirichlet problem (reference for the
/// iterative solver).
pub fn direct_dirichlet(space: &FemSpace, problem: &DirichletProblem) -> Result<Vec<f64>> {
    let system = space.dirichlet_system();
    let g: Vec<f64> = system.fixed.iter().map(|&v| problem.values[v]).collect();
    let n = space.mesh.vertices.len();
    let mut fixed_map = vec![usize::MAX; n];
    let mut free_map = vec![usize::MAX; n];
    for (k, &v) in system.fixed.iter().enumerate() {
        fixed_map[v] = k;
    }
    for (k, &v) in system.free.iter().enumerate() {
        free_map[v] = k;
    }
    let kfb =
        space
            .stiffness
            .submatrix(&free_map, system.free.len(), &fixed_map, system.fixed.len());
    let rhs: Vec<f64> = kfb.mul(&g).iter().map(|x| -x).collect();
    let x = direct_solve(&system.kff, &rhs)?;
    let mut u = problem.values.clone();
    for (k, &v) in system.free.iter().enumerate() {
        u[v] = x[k];
    }
    Ok(u)
}

/// Solver diagnostics of the component solves, for the result record.
#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub preconditioner: String,
    pub unknowns: usize,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
    pub tolerance: f64,
    pub vertices: usize,
    pub triangles: usize,
}

/// Flat result record written as `result.json`.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub mode: SceneMode,
    pub epsilon: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub m: u32,
    pub a11: f64,
    pub a12: Option<f64>,
    pub a21: Option<f64>,
    pub a22: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub f1: f64,
    pub f2: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "Qtilde")]
    pub qtilde: Option<f64>,
    pub c_difference: f64,
    pub grad_max_sigma: f64,
    pub grad_max_gap: f64,
    pub grad_max_far: f64,
    pub grad_max_axis: f64,
    pub solver_diag: SolverSummary,
}

impl SceneSolution {
    pub fn fields(&self) -> Vec<&FieldSolution> {
        let mut out = vec![&self.v1];
        if let Some(v2) = &self.v2 {
            out.push(v2);
        }
        out.push(&self.v_data);
        out
    }

    pub fn diagnostics(&self) -> Vec<&SolverDiagnostics> {
        self.fields().into_iter().map(|f| &f.diagnostics).collect()
    }

    /// `-a11` of either mode.
    pub fn capacitance(&self) -> f64 {
        match (&self.flux, &self.boundary_flux) {
            (Some(f), _) => -f.a11,
            (_, Some(b)) => -b.a11,
            _ => f64::NAN,
        }
    }

    pub fn record(&self) -> ResultRecord {
        let p = self.scene.profile();
        let d = self.diagnostics();
        let summary = SolverSummary {
            preconditioner: d[0].preconditioner.clone(),
            unknowns: d[0].unknowns,
            iterations: d.iter().map(|x| x.iterations).collect(),
            residuals: d.iter().map(|x| x.residual).collect(),
            tolerance: d[0].tolerance,
            vertices: self.mesh.vertices.len(),
            triangles: self.mesh.triangles.len(),
        };
        let c = &self.conductor;
        let mx = &c.maxima;
        let base = ResultRecord {
            schema_version: crate::geometry::SCHEMA_VERSION,
            mode: self.scene.mode(),
            epsilon: self.scene.epsilon(),
            r0: p.flat_halfwidth,
            m: p.growth_order,
            a11: f64::NAN,
            a12: None,
            a21: None,
            a22: None,
            b1: None,
            b2: None,
            f1: f64::NAN,
            f2: None,
            c1: c.c1,
            c2: c.c2,
            alpha: c.alpha,
            qtilde: None,
            c_difference: c.difference,
            grad_max_sigma: mx.sigma,
            grad_max_gap: mx.gap,
            grad_max_far: mx.far,
            grad_max_axis: mx.axis,
            solver_diag: summary,
        };
        if let Some(f) = &self.flux {
            ResultRecord {
                a11: f.a11,
                a12: Some(f.a12),
                a21: Some(f.a21),
                a22: Some(f.a22),
                b1: Some(f.b1),
                b2: Some(f.b2),
                f1: f.f1,
                f2: Some(f.f2),
                ..base
            }
        } else {
            let b = self.boundary_flux.as_ref().unwrap();
            ResultRecord {
                a11: b.a11,
                f1: b.f1,
                qtilde: Some(b.qtilde),
                ..base
            }
        }
    }
}
