//! Epsilon sweeps, blow-up normalizers, rate fits and the radial quadrature
//! oracle for the capacitance integral.

mod quadrature;

pub use quadrature::{
    adaptive_simpson, ball_measure, capacitance_oracle, sphere_measure, OracleIntegral,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::auxiliary::{compare_gradients, local_energy, AuxKind, AuxiliaryField};
use crate::capacitance::{solve_on_mesh, SceneSolution};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::geometry::{build_scene, Region, SceneConfig, SceneMode};
use crate::harmonic::{FemSpace, SolverOptions};
use crate::mesh::{triangulate_scene, GradingPolicy};

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("need 0 < eps < 1, got {eps}")));
    }
    Ok(())
}

/// `sqrt(eps)`, `eps |ln eps|`, `eps` for `n = 2`, `3`, `>= 4`.
pub fn rho_n(n: u32, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    match n {
        0 | 1 => Err(Error::InvalidParameter(format!("dimension {n} < 2"))),
        2 => Ok(eps.sqrt()),
        3 => Ok(eps * eps.ln().abs()),
        _ => Ok(eps),
    }
}

/// `eps^((n-1)/m)` for `m > n - 1`, `eps |ln eps|` for `m = n - 1`, `eps`
/// otherwise.
pub fn rho_n_m(n: u32, m: u32, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if n < 2 || m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2 and m >= 2, got n = {n}, m = {m}"
        )));
    }
    Ok(if m > n - 1 {
        eps.powf((n - 1) as f64 / m as f64)
    } else if m == n - 1 {
        eps * eps.ln().abs()
    } else {
        eps
    })
}

pub const DEFAULT_EPS_GRID: [f64; 5] = [4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPlan {
    pub template: SceneConfig,
    pub eps_grid: Vec<f64>,
    pub policy: GradingPolicy,
    pub solver: SolverOptions,
    /// Bins of the lateral profiles kept per row (0 disables).
    #[serde(default)]
    pub profile_bins: usize,
}

impl SweepPlan {
    pub fn new(template: SceneConfig, eps_grid: Vec<f64>) -> Self {
        Self {
            template,
            eps_grid,
            policy: GradingPolicy::default(),
            solver: SolverOptions::default(),
            profile_bins: 0,
        }
    }

    pub fn with_policy(mut self, policy: GradingPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_grid.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "sweep needs at least 4 epsilon values, got {}",
                self.eps_grid.len()
            )));
        }
        if self.eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter(
                "epsilon grid must be strictly decreasing".into(),
            ));
        }
        if self.eps_grid.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidParameter(
                "epsilon values must be positive".into(),
            ));
        }
        self.policy.validate()
    }
}

/// Measured quantities of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepObservables {
    pub neg_a11: f64,
    pub c_difference: f64,
    pub grad_max_sigma: f64,
    pub grad_max_gap: f64,
    pub grad_max_far: f64,
    pub grad_max_axis: f64,
    /// `max |grad(v1 - ubar1)|` over the whole domain (`utilde1` when a
    /// coefficient field is set).
    pub aux_grad_diff: f64,
    /// `max |grad(v0 - uhat)|` (inclusion-boundary mode).
    pub data_grad_diff: Option<f64>,
    /// Energy of `v1 - ubar1` over `|x'| < delta(0)`.
    pub local_energy: f64,
    pub local_energy_ratio: f64,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub qtilde: Option<f64>,
    /// Radial oracle `|Sigma'|/eps + int dx' / (eps + d^m)` in two dimensions.
    pub oracle_integral: f64,
    pub vertices: usize,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    NegA11,
    EpsNegA11,
    CDifference,
    GradMaxSigma,
    GradMaxGap,
    GradMaxFar,
    GradMaxAxis,
    AuxGradDiff,
    DataGradDiff,
    LocalEnergyRatio,
    Qtilde,
    OracleIntegral,
}

impl Observable {
    pub const ALL: [Observable; 12] = [
        Observable::NegA11,
        Observable::EpsNegA11,
        Observable::CDifference,
        Observable::GradMaxSigma,
        Observable::GradMaxGap,
        Observable::GradMaxFar,
        Observable::GradMaxAxis,
        Observable::AuxGradDiff,
        Observable::DataGradDiff,
        Observable::LocalEnergyRatio,
        Observable::Qtilde,
        Observable::OracleIntegral,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Observable::NegA11 => "neg_a11",
            Observable::EpsNegA11 => "eps_neg_a11",
            Observable::CDifference => "c_difference",
            Observable::GradMaxSigma => "grad_max_sigma",
            Observable::GradMaxGap => "grad_max_gap",
            Observable::GradMaxFar => "grad_max_far",
            Observable::GradMaxAxis => "grad_max_axis",
            Observable::AuxGradDiff => "aux_grad_diff",
            Observable::DataGradDiff => "data_grad_diff",
            Observable::LocalEnergyRatio => "local_energy_ratio",
            Observable::Qtilde => "qtilde",
            Observable::OracleIntegral => "oracle_integral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.as_str() == s)
    }

    pub fn get(&self, eps: f64, o: &SweepObservables) -> f64 {
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        match self {
            Observable::NegA11 => o.neg_a11,
            Observable::EpsNegA11 => eps * o.neg_a11,
            Observable::CDifference => o.c_difference,
            Observable::GradMaxSigma => o.grad_max_sigma,
            Observable::GradMaxGap => o.grad_max_gap,
            Observable::GradMaxFar => o.grad_max_far,
            Observable::GradMaxAxis => o.grad_max_axis,
            Observable::AuxGradDiff => o.aux_grad_diff,
            Observable::DataGradDiff => opt(o.data_grad_diff),
            Observable::LocalEnergyRatio => o.local_energy_ratio,
            Observable::Qtilde => opt(o.qtilde),
            Observable::OracleIntegral => o.oracle_integral,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub observables: Option<SweepObservables>,
    /// Failure message when the solve at this epsilon failed.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub mode: SceneMode,
    pub rows: Vec<SweepRow>,
}

impl SweepRecord {
    pub fn completed(&self) -> usize {
        self.rows.iter().filter(|r| r.observables.is_some()).count()
    }

    pub fn failures(&self) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.failure.is_some()).collect()
    }

    /// `(eps, value)` for completed rows.
    pub fn series(&self, obs: Observable) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                r.observables
                    .as_ref()
                    .map(|o| (r.epsilon, obs.get(r.epsilon, o)))
            })
            .collect()
    }

    /// `max / min` of the finite values of an observable.
    pub fn variation(&self, obs: Observable) -> f64 {
        let v: Vec<f64> = self
            .series(obs)
            .into_iter()
            .map(|p| p.1)
            .filter(|x| x.is_finite())
            .collect();
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    /// Ratio of the value at the smallest epsilon to the value at the
    /// largest.
    pub fn end_ratio(&self, obs: Observable) -> f64 {
        let s = self.series(obs);
        match (s.first(), s.last()) {
            (Some(a), Some(b)) => b.1 / a.1,
            _ => f64::NAN,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["epsilon".to_string(), "status".to_string()];
        header.extend(Observable::ALL.iter().map(|o| o.as_str().to_string()));
        header.extend([
            "vertices".to_string(),
            "iterations".to_string(),
            "error".to_string(),
        ]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![format!("{:e}", r.epsilon)];
            match &r.observables {
                Some(o) => {
                    rec.push("ok".into());
                    rec.extend(Observable::ALL.iter().map(|ob| {
                        let v = ob.get(r.epsilon, o);
                        if v.is_finite() {
                            format!("{v:.12e}")
                        } else {
                            String::new()
                        }
                    }));
                    rec.push(o.vertices.to_string());
                    rec.push(o.iterations.to_string());
                    rec.push(String::new());
                }
                None => {
                    rec.push("failed".into());
                    rec.extend(Observable::ALL.iter().map(|_| String::new()));
                    rec.extend([String::new(), String::new()]);
                    rec.push(r.failure.clone().unwrap_or_default());
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Diagnostics of one solved scene.
pub fn measure(sol: &SceneSolution) -> Result<SweepObservables> {
    let scene = &sol.scene;
    let space = FemSpace::new(&sol.mesh, scene.coefficient())?;
    let kind = if scene.coefficient().is_some() {
        AuxKind::Utilde1
    } else {
        AuxKind::Ubar1
    };
    let aux = AuxiliaryField::new(kind, scene).with_extension(true);
    let cmp = compare_gradients(&space, scene, &sol.v1, &aux, &Region::All, 1)?;
    let iu = aux.interpolate(&sol.mesh)?;
    let w: Vec<f64> = sol.v1.values.iter().zip(&iu).map(|(a, b)| a - b).collect();
    let le = local_energy(&space, scene, &w, 0.0)?;
    let data_grad_diff = match scene.mode() {
        SceneMode::InclusionBoundary => {
            let uhat = AuxiliaryField::new(AuxKind::Uhat, scene).with_extension(true);
            Some(compare_gradients(&space, scene, &sol.v_data, &uhat, &Region::All, 1)?.max)
        }
        SceneMode::TwoInclusion => None,
    };
    let p = scene.profile();
    let oracle = capacitance_oracle(
        2,
        p.growth_order,
        p.flat_halfwidth,
        p.neck_halfwidth,
        scene.epsilon(),
    )?;
    let c = &sol.conductor;
    Ok(SweepObservables {
        neg_a11: sol.capacitance(),
        c_difference: c.difference,
        grad_max_sigma: c.maxima.sigma,
        grad_max_gap: c.maxima.gap,
        grad_max_far: c.maxima.far,
        grad_max_axis: c.maxima.axis,
        aux_grad_diff: cmp.max,
        data_grad_diff,
        local_energy: le.energy,
        local_energy_ratio: le.ratio(),
        b1: sol.flux.map(|f| f.b1),
        b2: sol.flux.map(|f| f.b2),
        qtilde: sol.boundary_flux.map(|b| b.qtilde),
        oracle_integral: oracle.total(),
        vertices: sol.mesh.vertices.len(),
        iterations: sol
            .diagnostics()
            .iter()
            .map(|d| d.iterations)
            .max()
            .unwrap_or(0),
    })
}

fn run_one(plan: &SweepPlan, eps: f64) -> Result<SweepObservables> {
    let scene = build_scene(&plan.template.clone().with_epsilon(eps))?;
    let mesh = triangulate_scene(&scene, &plan.policy)?;
    let sol = solve_on_mesh(&scene, mesh, &plan.solver)?;
    measure(&sol)
}

/// One full solve per epsilon on a pool of `workers` threads (the global
/// pool when `None`). Rows keep the grid order; a failed epsilon becomes a
/// failure row.
pub fn run_sweep(plan: &SweepPlan, workers: Option<usize>) -> Result<SweepRecord> {
    use rayon::prelude::*;
    plan.validate()?;
    let go = || -> Vec<SweepRow> {
        plan.eps_grid
            .par_iter()
            .map(|&eps| match run_one(plan, eps) {
                Ok(o) => SweepRow {
                    epsilon: eps,
                    observables: Some(o),
                    failure: None,
                },
                Err(e) => SweepRow {
                    epsilon: eps,
                    observables: None,
                    failure: Some(e.to_string()),
                },
            })
            .collect()
    };
    let rows = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(go),
        None => go(),
    };
    Ok(SweepRecord {
        mode: plan.template.mode,
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    PurePower,
    /// `y / |ln eps| ~ eps^s`.
    PowerWithLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual in log space.
    pub residual: f64,
    pub points: usize,
    pub log_corrected: bool,
}

/// Least squares of `log y` on `log eps`; positive values only.
pub fn fit_points(points: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    let log_corrected = model == RateModel::PowerWithLog;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(e, y)| *e > 0.0 && *y > 0.0 && y.is_finite() && (!log_corrected || *e != 1.0))
        .map(|&(e, y)| {
            let y = if log_corrected { y / e.ln().abs() } else { y };
            (e.ln(), y.ln())
        })
        .unzip();
    if lx.len() < 3 {
        return Err(Error::Degenerate(format!(
            "rate fit needs at least 3 finite positive points, got {}",
            lx.len()
        )));
    }
    let f = least_squares(&lx, &ly)
        .ok_or_else(|| Error::Degenerate("epsilon values have no spread".into()))?;
    Ok(RateFit {
        slope: f.slope,
        intercept: f.intercept,
        residual: f.residual,
        points: lx.len(),
        log_corrected,
    })
}

pub fn fit_rate(record: &SweepRecord, obs: Observable, model: RateModel) -> Result<RateFit> {
    fit_points(&record.series(obs), model)
}
