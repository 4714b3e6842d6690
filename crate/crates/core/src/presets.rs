//! Named scene templates used by the sweeps, the command line and the
//! acceptance suite.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryData, CoefficientField, GapProfile, SceneConfig, SceneMode};

pub const NAMES: [&str; 5] = [
    "strict",
    "flat",
    "quartic",
    "flat_boundary",
    "strict_boundary",
];

/// `phi = x_n - eps/2`, odd about the mid-plane of the two-inclusion scenes.
pub fn centered_xn(eps: f64) -> BoundaryData {
    BoundaryData::Linear {
        gx: 0.0,
        gy: 1.0,
        c: -0.5 * eps,
    }
}

/// `R0 = 0`, `m = 2`, `h1 = -h2 = x^2 / 4` on `|x| <= 1`.
pub fn strict(eps: f64) -> SceneConfig {
    let p = GapProfile::new(0.0, 1.0, 2, 0.25, 0.25).expect("valid profile");
    SceneConfig::new(p, eps, 1.5)
        .with_outer_radius(10.0)
        .with_boundary_data(centered_xn(eps))
}

/// Flat set `|x| <= 1.5` with steep flanks `30 (|x| - 1.5)^2` out to 1.6.
pub fn flat(eps: f64) -> SceneConfig {
    let p = GapProfile::new(1.5, 1.6, 2, 30.0, 30.0).expect("valid profile");
    SceneConfig::new(p, eps, 0.6)
        .with_outer_radius(10.0)
        .with_boundary_data(centered_xn(eps))
}

/// `R0 = 0`, `m = 4`, `h1 = -h2 = x^4 / 10`.
pub fn quartic(eps: f64) -> SceneConfig {
    let p = GapProfile::new(0.0, 1.0, 4, 0.1, 0.1).expect("valid profile");
    SceneConfig::new(p, eps, 1.5)
        .with_outer_radius(10.0)
        .with_boundary_data(centered_xn(eps))
}

/// The flat profile above the outer boundary, `phi = x_n`.
pub fn flat_boundary(eps: f64) -> SceneConfig {
    flat(eps)
        .with_mode(SceneMode::InclusionBoundary)
        .with_boundary_data(BoundaryData::Linear {
            gx: 0.0,
            gy: 1.0,
            c: 0.0,
        })
}

/// The strict profile above the outer boundary, `phi = x_n`.
pub fn strict_boundary(eps: f64) -> SceneConfig {
    strict(eps)
        .with_mode(SceneMode::InclusionBoundary)
        .with_boundary_data(BoundaryData::Linear {
            gx: 0.0,
            gy: 1.0,
            c: 0.0,
        })
}

pub fn rotation_aniso() -> CoefficientField {
    CoefficientField::RotationAniso {
        theta: 0.3,
        ratio: 4.0,
    }
}

pub fn by_name(name: &str, eps: f64) -> Result<SceneConfig> {
    match name {
        "strict" => Ok(strict(eps)),
        "flat" => Ok(flat(eps)),
        "quartic" => Ok(quartic(eps)),
        "flat_boundary" => Ok(flat_boundary(eps)),
        "strict_boundary" => Ok(strict_boundary(eps)),
        _ => Err(Error::InvalidParameter(format!(
            "unknown preset '{name}' (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_scene, validate_assumptions};

    #[test]
    fn presets_build_and_satisfy_assumptions() {
        for name in NAMES {
            for eps in [4e-2, 2.5e-3] {
                let s = build_scene(&by_name(name, eps).unwrap()).unwrap();
                let r = validate_assumptions(&s);
                assert!(r.all_passed(), "{name} {eps}: {:?}", r.failures());
            }
        }
        assert!(by_name("nope", 0.01).is_err());
    }
}
