//! Acceptance suite: one line per criterion, nonzero exit when any fails.

use std::time::{Duration, Instant};

use narrowgap::asymptotics::{
    capacitance_oracle, fit_rate, run_sweep, Observable, RateModel, SweepPlan, SweepRecord,
    DEFAULT_EPS_GRID,
};
use narrowgap::auxiliary::{gap_samples, AuxKind, AuxiliaryField};
use narrowgap::capacitance::{direct_constrained_solve, solve_scene};
use narrowgap::geometry::{build_scene, BoundaryData, SceneConfig};
use narrowgap::harmonic::{
    annulus_refinements, manufactured_error, DirichletProblem, FemSpace, HarmonicPreset,
    SolverOptions,
};
use narrowgap::mesh::{triangulate_scene, GradingPolicy};
use narrowgap::presets;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sweep(template: SceneConfig) -> SweepRecord {
    let plan = SweepPlan::new(template, DEFAULT_EPS_GRID.to_vec());
    let r = run_sweep(&plan, None).expect("valid plan");
    for row in r.failures() {
        eprintln!(
            "  sweep failure at eps = {}: {:?}",
            row.epsilon, row.failure
        );
    }
    r
}

fn slope(r: &SweepRecord, obs: Observable) -> f64 {
    fit_rate(r, obs, RateModel::PurePower)
        .map(|f| f.slope)
        .unwrap_or(f64::NAN)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn complete(r: &SweepRecord) -> bool {
    r.completed() == DEFAULT_EPS_GRID.len()
}

fn annulus_capacitance() -> Outcome {
    let start = Instant::now();
    let exact = 2.0 * std::f64::consts::PI / 2f64.ln();
    let meshes = annulus_refinements(1.0, 2.0, 64, 8, 3).unwrap();
    let mut errs = Vec::new();
    for m in &meshes {
        let space = FemSpace::new(m, None).unwrap();
        let p = DirichletProblem::per_tag(m, 1.0, 0.0, 0.0).unwrap();
        let v = space
            .dirichlet_system()
            .solve(&space, &p, &SolverOptions::default())
            .unwrap();
        let cap = space.energy(&v.values, &v.values).unwrap();
        errs.push((cap - exact).abs() / exact);
    }
    let elapsed = start.elapsed();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    outcome(
        errs[2] <= 0.01 && decreasing && elapsed < Duration::from_secs(30),
        format!(
            "relative errors {:.3e} {:.3e} {:.3e}, {:.2}s",
            errs[0],
            errs[1],
            errs[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn flux_scenes() -> Vec<SceneConfig> {
    let mut out = Vec::new();
    for eps in [4e-2, 1e-2, 2.5e-3] {
        out.push(presets::strict(eps));
        out.push(presets::flat(eps));
        out.push(presets::quartic(eps));
        out.push(presets::strict(eps).with_coefficient(Some(presets::rotation_aniso())));
    }
    out
}

fn flux_signs_and_identity() -> (Outcome, Outcome) {
    let mut sym_ok = true;
    let mut sign_ok = true;
    let mut worst_identity: f64 = 0.0;
    let scenes = flux_scenes();
    for cfg in &scenes {
        let s = build_scene(cfg).unwrap();
        let sol = solve_scene(&s, &GradingPolicy::default(), &SolverOptions::default()).unwrap();
        let f = sol.flux.unwrap();
        sym_ok &= f.a12.to_bits() == f.a21.to_bits();
        sign_ok &= f.a11 < 0.0 && f.a22 < 0.0 && f.a12 > 0.0;
        worst_identity = worst_identity.max(((f.a11 + f.a21) - f.f1).abs() / f.f1.abs());
    }
    (
        outcome(
            sym_ok && sign_ok,
            format!(
                "{} scenes, a12 == a21 bitwise: {sym_ok}, signs: {sign_ok}",
                scenes.len()
            ),
        ),
        outcome(
            worst_identity <= 1e-6,
            format!("max |(a11 + a21) - f1| / |f1| = {worst_identity:.3e}"),
        ),
    )
}

fn strict_rates(r: &SweepRecord, elapsed: Duration) -> Outcome {
    let s_cap = slope(r, Observable::NegA11);
    let s_grad = slope(r, Observable::GradMaxAxis);
    outcome(
        complete(r)
            && within(s_cap, -0.5, 0.08)
            && within(s_grad, -0.5, 0.10)
            && elapsed < Duration::from_secs(600),
        format!(
            "slope(-a11) = {s_cap:.4}, slope(max|grad u(0,.)|) = {s_grad:.4}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn flat_rates(r: &SweepRecord) -> Outcome {
    let s_cap = slope(r, Observable::NegA11);
    let var_cap = r.variation(Observable::EpsNegA11);
    let var_grad = r.variation(Observable::GradMaxGap);
    outcome(
        complete(r) && within(s_cap, -1.0, 0.05) && var_cap < 1.2 && var_grad <= 1.5,
        format!(
            "slope(-a11) = {s_cap:.4}, max/min eps(-a11) = {var_cap:.4}, max/min max|grad u| = {var_grad:.4}"
        ),
    )
}

fn quartic_rate() -> Outcome {
    let r = sweep(presets::quartic(0.01));
    let s = slope(&r, Observable::NegA11);
    outcome(
        complete(&r) && within(s, -0.75, 0.10),
        format!("slope(-a11) = {s:.4}"),
    )
}

fn quadrature_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst_arctan: f64 = 0.0;
    for eps in [1e-2, 1e-4, 1e-6] {
        let (r0, r1) = (0.5, 1.0);
        let got = capacitance_oracle(2, 2, r0, r1, eps).unwrap().off_sigma;
        let exact = 2.0 * ((r1 - r0) / eps.sqrt()).atan() / eps.sqrt();
        worst_arctan = worst_arctan.max((got - exact).abs() / exact);
    }
    let spread = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    };
    let grid = [1e-3, 1e-4, 1e-5, 1e-6];
    let n3: Vec<f64> = grid
        .iter()
        .map(|&e| capacitance_oracle(3, 2, 0.0, 1.0, e).unwrap().total() / e.ln().abs())
        .collect();
    let n5: Vec<f64> = grid
        .iter()
        .map(|&e| capacitance_oracle(5, 2, 0.0, 1.0, e).unwrap().total())
        .collect();
    let elapsed = start.elapsed();
    let (s3, s5) = (spread(&n3), spread(&n5));
    outcome(
        worst_arctan <= 1e-8 && s3 <= 0.05 && s5 <= 0.05 && elapsed < Duration::from_secs(5),
        format!(
            "arctan rel err {worst_arctan:.2e}, n=3 spread {:.2}%, n=5 spread {:.2}%, {:.3}s",
            100.0 * s3,
            100.0 * s5,
            elapsed.as_secs_f64()
        ),
    )
}

fn auxiliary_boundedness(r: &SweepRecord) -> Outcome {
    let ratio = r.end_ratio(Observable::AuxGradDiff);
    let energy = r.variation(Observable::LocalEnergyRatio);
    outcome(
        complete(r) && ratio <= 1.3 && energy <= 2.0,
        format!(
            "|grad(v1 - ubar1)| ratio (smallest/largest eps) = {ratio:.4}, max/min energy/delta^2 = {energy:.4}"
        ),
    )
}

fn corrector() -> Outcome {
    let eps = 1e-3;
    let a = presets::rotation_aniso();
    let s = build_scene(&presets::flat(eps).with_coefficient(Some(a.clone()))).unwrap();
    let r0 = s.profile().flat_halfwidth;
    // The profile is only C^{1,1} at |x'| = R0, so the difference stencil stays inside.
    let pts = gap_samples(&s, -0.95 * r0, 0.95 * r0, 21, 5);
    let max_abs = |kind| {
        AuxiliaryField::new(kind, &s)
            .corrector_residual(&a, &pts)
            .unwrap()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    let plain = max_abs(AuxKind::Ubar1);
    let corrected = max_abs(AuxKind::Utilde1);
    let ratio = plain / corrected;
    let residual_ok = ratio >= 100.0;

    let strict = sweep(presets::strict(0.01).with_coefficient(Some(a.clone())));
    let flat = sweep(presets::flat(0.01).with_coefficient(Some(a)));
    let s_cap = slope(&strict, Observable::NegA11);
    let s_grad = slope(&strict, Observable::GradMaxAxis);
    let f_cap = slope(&flat, Observable::NegA11);
    let f_var = flat.variation(Observable::EpsNegA11);
    let f_grad = flat.variation(Observable::GradMaxGap);
    let sweeps_ok = complete(&strict)
        && complete(&flat)
        && within(s_cap, -0.5, 0.08)
        && within(s_grad, -0.5, 0.10)
        && within(f_cap, -1.0, 0.05)
        && f_var < 1.2
        && f_grad <= 1.5;
    outcome(
        residual_ok && sweeps_ok,
        format!(
            "flat-set residual max: plain {plain:.3e}, corrected {corrected:.3e}, ratio {ratio:.3e} (need >= 100); \
             sweeps: strict {s_cap:.4}/{s_grad:.4}, flat {f_cap:.4}, {f_var:.4}, {f_grad:.4} ({})",
            if sweeps_ok { "reproduced" } else { "not reproduced" }
        ),
    )
}

fn boundary_mode() -> Outcome {
    let opts = SolverOptions::default();
    let policy = GradingPolicy::default();
    let constant = build_scene(
        &presets::flat_boundary(0.01).with_boundary_data(BoundaryData::Constant { value: 1.0 }),
    )
    .unwrap();
    let sol = solve_scene(&constant, &policy, &opts).unwrap();
    let grad = sol
        .conductor
        .u
        .max_gradient(&(0..sol.mesh.triangles.len()).collect::<Vec<_>>());
    let q_const = sol.boundary_flux.unwrap().qtilde;

    let odd = build_scene(&presets::strict_boundary(0.01).with_boundary_data(
        BoundaryData::Linear {
            gx: 1.0,
            gy: 0.0,
            c: 0.0,
        },
    ))
    .unwrap();
    let q_odd = solve_scene(&odd, &policy, &opts)
        .unwrap()
        .boundary_flux
        .unwrap()
        .qtilde;

    let r = sweep(presets::flat_boundary(0.01));
    let var = r.variation(Observable::GradMaxGap);
    outcome(
        grad <= 1e-8 && q_const.abs() <= 1e-8 && q_odd.abs() <= 1e-6 && complete(&r) && var <= 1.5,
        format!(
            "phi = 1: max|grad u| = {grad:.2e}, Qtilde = {q_const:.2e}; phi = x1: Qtilde = {q_odd:.2e}; \
             phi = x_n flat max/min max|grad u| = {var:.4}"
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let s = build_scene(&presets::strict(0.01)).unwrap();
    let policy = GradingPolicy::default();
    let mesh = triangulate_scene(&s, &policy).unwrap();
    let space = FemSpace::new(&mesh, None).unwrap();
    let unknowns = space.dirichlet_system().free.len() + 2;
    let direct = direct_constrained_solve(&s, &space).unwrap();
    let sol = solve_scene(&s, &policy, &SolverOptions::default()).unwrap();
    let scale = direct.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = direct
        .iter()
        .zip(&sol.conductor.u.values)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let rel = diff / scale;
    outcome(
        rel <= 1e-8 && unknowns <= 20_000,
        format!("{unknowns} unknowns, nodal relative difference {rel:.3e}"),
    )
}

fn convergence() -> Outcome {
    let meshes = annulus_refinements(1.0, 2.0, 32, 4, 3).unwrap();
    let opts = SolverOptions::with_tol(1e-12);
    let quad = manufactured_error(&meshes, &HarmonicPreset::PolarCos { k: 2 }, &opts).unwrap();
    let log = manufactured_error(&meshes, &HarmonicPreset::LogRadius, &opts).unwrap();
    let orders = [
        quad.order_linf,
        quad.order_grad,
        log.order_linf,
        log.order_grad,
    ]
    .map(|o| o.unwrap_or(f64::NAN));
    outcome(
        orders[0] >= 1.8 && orders[2] >= 1.8 && orders[1] >= 0.9 && orders[3] >= 0.9,
        format!(
            "r^2 cos 2t: Linf {:.3}, grad L2 {:.3}; ln r: Linf {:.3}, grad L2 {:.3}",
            orders[0], orders[1], orders[2], orders[3]
        ),
    )
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!(
            "criterion {n:>2} {:<4} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };

    report(1, "annulus capacitance", annulus_capacitance());
    let (c2, c3) = flux_signs_and_identity();
    report(2, "flux symmetry and signs", c2);
    report(3, "outer-flux identity", c3);
    let start = Instant::now();
    let strict = sweep(presets::strict(0.01));
    report(
        4,
        "blowup rate, strict case",
        strict_rates(&strict, start.elapsed()),
    );
    let flat = sweep(presets::flat(0.01));
    report(5, "boundedness, flat case", flat_rates(&flat));
    report(6, "growth order m = 4", quartic_rate());
    report(7, "quadrature oracle", quadrature_oracle());
    report(
        8,
        "auxiliary-function boundedness",
        auxiliary_boundedness(&strict),
    );
    report(9, "variable-coefficient corrector", corrector());
    report(10, "inclusion-boundary mode", boundary_mode());
    report(11, "direct constrained solve", oracle_equivalence());
    report(12, "manufactured convergence", convergence());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass ({:.1}s)",
        results.len() - failed.len(),
        results.len(),
        total.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
