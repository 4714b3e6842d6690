use std::fs;
use std::time::Instant;

use narrowgap::asymptotics::{
    capacitance_oracle, fit_points, run_sweep, Observable, RateModel, SweepPlan,
};
use narrowgap::auxiliary::{gap_samples, AuxKind, AuxiliaryField};
use narrowgap::capacitance::{direct_constrained_solve, solve_scene};
use narrowgap::geometry::{build_scene, validate_assumptions, BoundaryData, SceneConfig};
use narrowgap::harmonic::{
    annulus_refinements, manufactured_error, solve_dirichlet, DirichletProblem, FemSpace,
    HarmonicPreset, SolverOptions,
};
use narrowgap::mesh::{mesh_quality_report, triangulate_scene, GradingPolicy, Mesh};
use narrowgap::presets;
use serde_json::json;

use crate::{Failure, Outcome, VerifyArgs};

type Check = narrowgap::Result<(bool, String)>;

const EPS: f64 = 0.02;

fn two_inclusion_scenes() -> Vec<(String, SceneConfig)> {
    vec![
        ("strict".into(), presets::strict(EPS)),
        ("flat".into(), presets::flat(EPS)),
        ("quartic".into(), presets::quartic(EPS)),
        (
            "strict+aniso".into(),
            presets::strict(EPS).with_coefficient(Some(presets::rotation_aniso())),
        ),
    ]
}

fn assumptions() -> Check {
    let mut bad = Vec::new();
    for name in presets::NAMES {
        let s = build_scene(&presets::by_name(name, EPS)?)?;
        if !validate_assumptions(&s).all_passed() {
            bad.push(name);
        }
    }
    Ok((bad.is_empty(), format!("failing presets: {bad:?}")))
}

fn mesh_quality() -> Check {
    let mut worst_angle: f64 = 180.0;
    let mut ok = true;
    for name in presets::NAMES {
        let s = build_scene(&presets::by_name(name, EPS)?)?;
        let policy = GradingPolicy::default();
        let m = triangulate_scene(&s, &policy)?;
        let q = mesh_quality_report(&m, policy.anisotropy_cap);
        ok &= q.is_clean() && m.check_conformity().is_ok() && m.max_boundary_deviation(&s) < 1e-9;
        worst_angle = worst_angle.min(q.min_angle_deg);
    }
    Ok((ok, format!("smallest angle {worst_angle:.2} deg")))
}

fn annulus() -> Check {
    let m = Mesh::annulus(1.0, 2.0, 128, 16)?;
    let space = FemSpace::new(&m, None)?;
    let p = DirichletProblem::per_tag(&m, 1.0, 0.0, 0.0)?;
    let v = space
        .dirichlet_system()
        .solve(&space, &p, &SolverOptions::default())?;
    let cap = space.energy(&v.values, &v.values)?;
    let exact = 2.0 * std::f64::consts::PI / 2f64.ln();
    let rel = (cap - exact).abs() / exact;
    Ok((rel <= 0.01, format!("relative error {rel:.3e}")))
}

fn manufactured() -> Check {
    let meshes = annulus_refinements(1.0, 2.0, 16, 2, 3)?;
    let opts = SolverOptions::with_tol(1e-12);
    let quad = manufactured_error(&meshes, &HarmonicPreset::PolarCos { k: 2 }, &opts)?;
    let log = manufactured_error(&meshes, &HarmonicPreset::LogRadius, &opts)?;
    let lin = manufactured_error(
        &meshes,
        &HarmonicPreset::Linear {
            gx: 0.3,
            gy: -1.0,
            c: 2.0,
        },
        &opts,
    )?;
    let o = |x: Option<f64>| x.unwrap_or(f64::NAN);
    let ok = o(quad.order_linf) >= 1.8
        && o(log.order_linf) >= 1.8
        && o(quad.order_grad) >= 0.9
        && o(log.order_grad) >= 0.9
        && lin.linf.iter().all(|e| *e <= 1e-9);
    Ok((
        ok,
        format!(
            "Linf orders {:.3}/{:.3}, gradient orders {:.3}/{:.3}, linear max error {:.1e}",
            o(quad.order_linf),
            o(log.order_linf),
            o(quad.order_grad),
            o(log.order_grad),
            lin.linf.iter().cloned().fold(0.0, f64::max)
        ),
    ))
}

fn fluxes() -> Check {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (_, cfg) in two_inclusion_scenes() {
        let s = build_scene(&cfg)?;
        let sol = solve_scene(&s, &GradingPolicy::default(), &SolverOptions::default())?;
        let f = sol.flux.expect("two-inclusion flux");
        ok &= f.a12.to_bits() == f.a21.to_bits() && f.a11 < 0.0 && f.a22 < 0.0 && f.a12 > 0.0;
        worst = worst.max(((f.a11 + f.a21) - f.f1).abs() / f.f1.abs());
    }
    Ok((
        ok && worst <= 1e-6,
        format!("max outer-identity gap {worst:.2e}"),
    ))
}

fn conductors() -> Check {
    let s = build_scene(&presets::strict(EPS))?;
    let sol = solve_scene(&s, &GradingPolicy::default(), &SolverOptions::default())?;
    let c1 = sol.conductor.c1;
    let c2 = sol.conductor.c2.unwrap_or(f64::NAN);
    let mp = sol.v1.max_principle_violation(&sol.mesh);
    Ok((
        (c1 + c2).abs() <= 1e-8 && mp <= 1e-9,
        format!(
            "C1 + C2 = {:.2e}, max principle violation {mp:.1e}",
            c1 + c2
        ),
    ))
}

fn linear_exactness() -> Check {
    let s = build_scene(&presets::flat(EPS))?;
    let m = triangulate_scene(&s, &GradingPolicy::default())?;
    let p = DirichletProblem::from_fn(&m, |_, q| Some(q[1]))?;
    let u = solve_dirichlet(&m, None, &p, &SolverOptions::with_tol(1e-13))?;
    let e = u
        .values
        .iter()
        .zip(&m.vertices)
        .map(|(v, q)| (v - q[1]).abs())
        .fold(0.0, f64::max);
    Ok((e <= 1e-9, format!("max nodal error {e:.2e}")))
}

fn boundary_mode() -> Check {
    let s = build_scene(
        &presets::flat_boundary(EPS).with_boundary_data(BoundaryData::Constant { value: 1.0 }),
    )?;
    let sol = solve_scene(&s, &GradingPolicy::default(), &SolverOptions::default())?;
    let all: Vec<usize> = (0..sol.mesh.triangles.len()).collect();
    let g = sol.conductor.u.max_gradient(&all);
    let q = sol.boundary_flux.map(|b| b.qtilde).unwrap_or(f64::NAN);
    Ok((
        g <= 1e-8 && q.abs() <= 1e-8,
        format!("max|grad u| {g:.1e}, Qtilde {q:.1e}"),
    ))
}

fn direct() -> Check {
    let s = build_scene(&presets::strict(EPS))?;
    let m = triangulate_scene(&s, &GradingPolicy::default())?;
    let space = FemSpace::new(&m, None)?;
    let d = direct_constrained_solve(&s, &space)?;
    let sol = solve_scene(&s, &GradingPolicy::default(), &SolverOptions::default())?;
    let scale = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let diff = d
        .iter()
        .zip(&sol.conductor.u.values)
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    Ok((
        diff / scale <= 1e-8,
        format!("relative nodal difference {:.2e}", diff / scale),
    ))
}

fn oracle() -> Check {
    let mut worst: f64 = 0.0;
    for eps in [1e-2, 1e-4, 1e-6] {
        let got = capacitance_oracle(2, 2, 0.5, 1.0, eps)?.off_sigma;
        let exact = 2.0 * (0.5 / eps.sqrt()).atan() / eps.sqrt();
        worst = worst.max((got - exact).abs() / exact);
    }
    Ok((worst <= 1e-8, format!("arctan relative error {worst:.1e}")))
}

fn corrector() -> Check {
    let s = build_scene(&presets::strict(EPS))?;
    let mut same = true;
    for p in gap_samples(&s, -0.9, 0.9, 19, 5) {
        same &= AuxiliaryField::new(AuxKind::Ubar1, &s).eval(p)?
            == AuxiliaryField::new(AuxKind::Utilde1, &s).eval(p)?;
    }
    Ok((
        same,
        "identity coefficient leaves the profile unchanged".into(),
    ))
}

fn sweep() -> Check {
    let plan = SweepPlan::new(presets::quartic(EPS), vec![4e-2, 2e-2, 1e-2, 5e-3]);
    let r = run_sweep(&plan, None)?;
    let s = r.series(Observable::NegA11);
    let monotone = s.len() == 4 && s.windows(2).all(|w| w[1].1 > w[0].1);
    let synthetic: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&e: &f64| (e, e.powf(-0.5)))
        .collect();
    let fit = fit_points(&synthetic, RateModel::PurePower)?;
    Ok((
        monotone && (fit.slope + 0.5).abs() <= 1e-12,
        format!("{} rows, -a11 increasing: {monotone}", s.len()),
    ))
}

pub fn run(args: &VerifyArgs) -> Outcome {
    let start = Instant::now();
    let checks: [(&str, fn() -> Check); 12] = [
        ("assumptions", assumptions),
        ("mesh_quality", mesh_quality),
        ("annulus_capacitance", annulus),
        ("manufactured_convergence", manufactured),
        ("linear_exactness", linear_exactness),
        ("flux_symmetry_signs_identity", fluxes),
        ("conductor_symmetry_max_principle", conductors),
        ("boundary_mode_constant_data", boundary_mode),
        ("direct_constrained_solve", direct),
        ("quadrature_oracle", oracle),
        ("identity_corrector", corrector),
        ("sweep_monotonicity_and_fit", sweep),
    ];
    let mut results = Vec::new();
    let mut failed = 0;
    for (name, f) in checks {
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
        results.push(json!({"name": name, "pass": pass, "detail": detail}));
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "{} of {} checks pass ({elapsed:.1}s)",
        results.len() - failed,
        results.len()
    );
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
        let doc = json!({"schema_version": 1, "checks": results, "seconds": elapsed});
        let text =
            serde_json::to_string_pretty(&doc).map_err(|e| Failure::numerical(e.to_string()))?;
        fs::write(dir.join("verify.json"), text + "\n")
            .map_err(|e| Failure::input(format!("cannot write verify.json: {e}")))?;
    }
    if failed > 0 {
        return Err(Failure::numerical(format!(
            "{failed} invariant checks failed"
        )));
    }
    Ok(())
}
