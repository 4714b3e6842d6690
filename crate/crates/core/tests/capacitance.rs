use narrowgap::asymptotics::{run_sweep, Observable, SweepPlan, DEFAULT_EPS_GRID};
use narrowgap::capacitance::{
    solve_boundary_mode, solve_scene, solve_two_inclusion, SceneSolution,
};
use narrowgap::geometry::{build_scene, BoundaryData, SceneConfig};
use narrowgap::harmonic::SolverOptions;
use narrowgap::mesh::GradingPolicy;
use narrowgap::presets;
use proptest::prelude::*;

fn solve(cfg: &SceneConfig) -> SceneSolution {
    let s = build_scene(cfg).unwrap();
    solve_scene(&s, &GradingPolicy::default(), &SolverOptions::default()).unwrap()
}

#[test]
fn zero_data_gives_zero_loads_and_potentials() {
    let sol = solve(&presets::flat(0.01).with_boundary_data(BoundaryData::Zero));
    let f = sol.flux.unwrap();
    assert_eq!((f.b1, f.b2), (0.0, 0.0));
    assert_eq!((sol.conductor.c1, sol.conductor.c2), (0.0, Some(0.0)));
    assert!(sol.conductor.u.values.iter().all(|v| *v == 0.0));
}

#[test]
fn odd_data_gives_opposite_potentials() {
    for cfg in [presets::strict(0.01), presets::flat(0.01)] {
        let sol = solve(&cfg);
        let c1 = sol.conductor.c1;
        let c2 = sol.conductor.c2.unwrap();
        assert!(c1 > 0.0);
        assert!((c1 + c2).abs() <= 1e-8, "C1 = {c1}, C2 = {c2}");
    }
}

#[test]
fn conductor_system_is_satisfied() {
    let sol = solve(
        &presets::quartic(0.005).with_boundary_data(BoundaryData::Quadratic {
            c: 0.3,
            gx: 0.2,
            gy: 1.0,
            hxx: 0.1,
            hxy: -0.4,
            hyy: 0.0,
        }),
    );
    let f = sol.flux.unwrap();
    let p = sol.potentials.unwrap();
    let scale = f.a11.abs() * p.c1.abs().max(p.c2.abs()) + f.b1.abs();
    assert!(
        p.residuals.iter().all(|r| r.abs() <= 1e-12 * scale),
        "{:?}",
        p.residuals
    );
    assert!((p.difference - p.difference_factored).abs() <= 1e-9 * p.difference.max(1e-300));
}

#[test]
fn outer_flux_matches_line_integral_under_refinement() {
    let s = build_scene(&presets::strict(0.01)).unwrap();
    let coarse = GradingPolicy::default();
    let mut gaps = Vec::new();
    for policy in [coarse.clone(), coarse.refined()] {
        let f = solve_scene(&s, &policy, &SolverOptions::default())
            .unwrap()
            .flux
            .unwrap();
        gaps.push((f.f1 - f.f1_line).abs() / f.f1.abs());
    }
    assert!(gaps[1] < gaps[0], "{gaps:?}");
}

#[test]
fn outer_flux_is_stable_across_a_decade() {
    let a = solve(&presets::strict(1e-2)).flux.unwrap();
    let b = solve(&presets::strict(1e-3)).flux.unwrap();
    let (sa, sb) = (a.a11 + a.a21, b.a11 + b.a21);
    assert!((sa / sb - 1.0).abs() < 0.1, "{sa} vs {sb}");
    assert!(b.a11 / a.a11 > 2.0);
}

#[test]
fn gap_field_is_dominated_by_the_potential_jump_in_the_strict_case() {
    let sol = solve(&presets::strict(2.5e-3));
    let [jump, common, data] = sol.conductor.term_maxima.unwrap();
    assert!(jump > 10.0 * common.max(data), "{jump} {common} {data}");
}

#[test]
fn modes_are_checked() {
    let policy = GradingPolicy::default();
    let opts = SolverOptions::default();
    let two = build_scene(&presets::strict(0.01)).unwrap();
    let one = build_scene(&presets::strict_boundary(0.01)).unwrap();
    assert!(solve_boundary_mode(&two, &policy, &opts).is_err());
    assert!(solve_two_inclusion(&one, &policy, &opts).is_err());
    assert!(solve_two_inclusion(&two, &policy, &opts).is_ok());
}

#[test]
fn constant_data_in_boundary_mode() {
    let sol = solve(
        &presets::flat_boundary(0.01).with_boundary_data(BoundaryData::Constant { value: 5.0 }),
    );
    let q = sol.boundary_flux.unwrap();
    assert_eq!(q.qtilde, 0.0);
    assert!((sol.conductor.c1 - 5.0).abs() < 1e-12);
    assert!(sol
        .conductor
        .u
        .values
        .iter()
        .all(|v| (v - 5.0).abs() < 1e-12));
}

#[test]
fn boundary_functional_is_stable() {
    let plan = SweepPlan::new(presets::flat_boundary(0.01), DEFAULT_EPS_GRID.to_vec());
    let r = run_sweep(&plan, None).unwrap();
    assert_eq!(r.completed(), DEFAULT_EPS_GRID.len());
    assert!(r.variation(Observable::Qtilde) < 1.2);
    assert!(r
        .series(Observable::Qtilde)
        .iter()
        .all(|(_, q)| q.is_finite()));
}

#[test]
fn result_record_has_every_flux_field() {
    let rec = solve(&presets::flat(0.01)).record();
    let v = serde_json::to_value(&rec).unwrap();
    for key in [
        "a11", "a12", "a21", "a22", "b1", "b2", "f1", "f2", "C1", "C2", "alpha",
    ] {
        assert!(v[key].is_f64(), "{key}");
    }
    assert!(v["Qtilde"].is_null());
    assert_eq!(v["schema_version"], 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn symmetric_negative_definite_fluxes(idx in 0usize..3, log_eps in -2.6f64..-1.4, aniso in any::<bool>()) {
        let eps = 10f64.powf(log_eps);
        let cfg = presets::by_name(presets::NAMES[idx], eps)
            .unwrap()
            .with_coefficient(aniso.then(presets::rotation_aniso));
        let f = solve(&cfg).flux.unwrap();
        prop_assert_eq!(f.a12.to_bits(), f.a21.to_bits());
        prop_assert!(f.a11 < 0.0 && f.a22 < 0.0 && f.a12 > 0.0);
        prop_assert!(f.a11 * f.a22 - f.a12 * f.a21 > 0.0);
        prop_assert!(((f.a11 + f.a21) - f.f1).abs() <= 1e-6 * f.f1.abs());
    }
}
