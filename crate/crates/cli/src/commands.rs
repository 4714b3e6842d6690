use std::fs;
use std::path::Path;

use narrowgap::asymptotics::{
    capacitance_oracle, fit_points, fit_rate, rho_n_m, run_sweep, Observable, RateModel, SweepPlan,
    DEFAULT_EPS_GRID,
};
use narrowgap::auxiliary::{gap_profile, write_profile_csv};
use narrowgap::capacitance::solve_scene;
use narrowgap::geometry::{build_scene, validate_assumptions, SceneConfig, SceneMode};
use narrowgap::harmonic::{FemSpace, SolverOptions};
use narrowgap::mesh::GradingPolicy;
use narrowgap::presets;
use serde::Serialize;
use serde_json::json;

use crate::{Failure, OracleArgs, Outcome, SceneArgs, SolveArgs, SweepArgs};

/// Reads a scene file, or builds a preset when no such file exists.
pub fn load_scene(args: &SceneArgs) -> Outcome<SceneConfig> {
    let path = Path::new(&args.scene);
    let cfg = if path.is_file() {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        SceneConfig::from_json(&text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
    } else if presets::NAMES.contains(&args.scene.as_str()) {
        presets::by_name(&args.scene, args.eps.unwrap_or(0.01))?
    } else {
        return Err(Failure::input(format!(
            "'{}' is neither a scene file nor a preset ({})",
            args.scene,
            presets::NAMES.join(", ")
        )));
    };
    Ok(match args.eps {
        Some(e) => cfg.with_epsilon(e),
        None => cfg,
    })
}

pub fn solver_options(tol: Option<f64>) -> SolverOptions {
    tol.map(SolverOptions::with_tol).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))
}

fn to_json<T: ?Sized + Serialize>(value: &T) -> Outcome<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| Failure::numerical(e.to_string()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Outcome {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::numerical(e.to_string()))?;
    fs::write(path, text + "\n")
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

pub fn solve(args: &SolveArgs, tol: Option<f64>) -> Outcome {
    let cfg = load_scene(&args.scene)?;
    let scene = build_scene(&cfg)?;
    let report = validate_assumptions(&scene);
    if !report.all_passed() {
        let names: Vec<String> = report
            .failures()
            .iter()
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        return Err(Failure::input(format!(
            "scene violates the structural assumptions: {}",
            names.join("; ")
        )));
    }
    let sol = solve_scene(&scene, &GradingPolicy::default(), &solver_options(tol))?;

    let out = &args.out;
    create_dir(out)?;
    write_json(&out.join("scene.json"), &to_json(&cfg)?)?;
    write_json(&out.join("result.json"), &to_json(&sol.record())?)?;
    sol.mesh.write_csv(out)?;
    let names: &[&str] = match scene.mode() {
        SceneMode::TwoInclusion => &["v1", "v2", "v3"],
        SceneMode::InclusionBoundary => &["v1", "v0"],
    };
    for (name, field) in names.iter().zip(sol.fields()) {
        field.write_values_csv(&out.join(format!("field_{name}.csv")))?;
        field.write_gradients_csv(&out.join(format!("grad_{name}.csv")))?;
    }
    sol.conductor.u.write_values_csv(&out.join("field_u.csv"))?;
    sol.conductor
        .u
        .write_gradients_csv(&out.join("grad_u.csv"))?;
    let space = FemSpace::new(&sol.mesh, scene.coefficient())?;
    let rows = gap_profile(&space, &scene, &sol.v1, args.bins.max(1))?;
    write_profile_csv(&rows, &out.join("profile.csv"))?;

    let rec = sol.record();
    println!(
        "epsilon {:e}: -a11 = {:.6e}, C1 = {:.6e}, |C1 - C2| = {:.6e}, max|grad u| gap {:.6e}, {} vertices",
        rec.epsilon,
        -rec.a11,
        rec.c1,
        rec.c_difference,
        rec.grad_max_gap,
        sol.mesh.vertices.len()
    );
    Ok(())
}

pub fn sweep(args: &SweepArgs, tol: Option<f64>, workers: Option<usize>) -> Outcome {
    let cfg = load_scene(&args.scene)?;
    let grid = args
        .eps_grid
        .clone()
        .unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
    let plan = SweepPlan::new(cfg, grid).with_solver(solver_options(tol));
    plan.validate()?;
    let record = run_sweep(&plan, workers)?;

    create_dir(&args.out)?;
    record.write_csv(&args.out.join("sweep.csv"))?;
    let mut fits = serde_json::Map::new();
    for obs in Observable::ALL {
        if let Ok(f) = fit_rate(&record, obs, RateModel::PurePower) {
            fits.insert(obs.as_str().to_string(), json!(f));
        }
    }
    let summary = json!({
        "schema_version": 1,
        "mode": record.mode,
        "eps_grid": plan.eps_grid,
        "completed": record.completed(),
        "failures": record
            .failures()
            .iter()
            .map(|r| json!({"epsilon": r.epsilon, "error": r.failure}))
            .collect::<Vec<_>>(),
        "fits": fits,
        "variation": Observable::ALL
            .iter()
            .map(|o| (o.as_str().to_string(), json!(record.variation(*o))))
            .collect::<serde_json::Map<_, _>>(),
    });
    write_json(&args.out.join("fits.json"), &summary)?;

    for row in record.failures() {
        eprintln!(
            "epsilon {:e} failed: {}",
            row.epsilon,
            row.failure.as_deref().unwrap_or("unknown")
        );
    }
    if record.completed() == 0 {
        return Err(Failure::numerical("every epsilon of the sweep failed"));
    }
    for obs in [
        Observable::NegA11,
        Observable::GradMaxGap,
        Observable::GradMaxAxis,
    ] {
        if let Ok(f) = fit_rate(&record, obs, RateModel::PurePower) {
            println!(
                "{:<16} slope {:+.4} (residual {:.2e})",
                obs.as_str(),
                f.slope,
                f.residual
            );
        }
    }
    Ok(())
}

pub fn oracle(args: &OracleArgs) -> Outcome {
    let grid = args
        .eps_grid
        .clone()
        .unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]);
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &eps in &grid {
        let o = capacitance_oracle(args.n, args.m, args.r0, args.r1, eps)?;
        let rho = rho_n_m(args.n, args.m, eps)?;
        points.push((eps, o.total()));
        rows.push(json!({
            "epsilon": eps,
            "off_sigma": o.off_sigma,
            "sigma_block": o.sigma_block,
            "total": o.total(),
            "rho": rho,
        }));
    }
    let fit = |model| fit_points(&points, model).ok();
    let doc = json!({
        "schema_version": 1,
        "n": args.n,
        "m": args.m,
        "R0": args.r0,
        "R1": args.r1,
        "rows": rows,
        "fit": fit(RateModel::PurePower),
        "fit_log_corrected": fit(RateModel::PowerWithLog),
    });
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(&dir.join("oracle.json"), &doc)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| Failure::numerical(e.to_string()))?
    );
    Ok(())
}
