use serde::{Deserialize, Serialize};

use super::fields::Point;
use super::scene::Scene;
use crate::error::{Error, Result};

/// Selectors for the subsets of the matrix domain used in diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// The gap block over the flat set, `|x'| <= R0`.
    Sigma,
    /// Narrow region `|x'| < r`.
    Gap {
        r: f64,
    },
    /// Local slab `|x' - z'| < t` inside the narrow region.
    Slab {
        z: f64,
        t: f64,
    },
    /// Everything outside the profiled narrow region `Omega_{R1}`.
    Exterior,
    All,
}

impl Region {
    /// Parses `sigma`, `gap`, `gap:<r>`, `slab:<z>:<t>`, `exterior`/`far`, `all`.
    pub fn parse(s: &str, neck_halfwidth: f64) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number '{t}' in region '{s}'")))
        };
        match parts.as_slice() {
            ["sigma"] => Ok(Region::Sigma),
            ["gap"] => Ok(Region::Gap { r: neck_halfwidth }),
            ["gap", r] => Ok(Region::Gap { r: num(r)? }),
            ["slab", z, t] => Ok(Region::Slab {
                z: num(z)?,
                t: num(t)?,
            }),
            ["exterior"] | ["far"] => Ok(Region::Exterior),
            ["all"] => Ok(Region::All),
            _ => Err(Error::InvalidParameter(format!("unknown region '{s}'"))),
        }
    }

    /// Lateral window `(lo, hi)` of a gap-type region.
    pub fn lateral_window(&self, scene: &Scene) -> Option<(f64, f64)> {
        let r0 = scene.profile().flat_halfwidth;
        let r1 = scene.profile().neck_halfwidth;
        match *self {
            Region::Sigma => Some((-r0, r0)),
            Region::Gap { r } => Some((-r.min(r1), r.min(r1))),
            Region::Slab { z, t } => Some(((z - t).max(-r1), (z + t).min(r1))),
            Region::Exterior | Region::All => None,
        }
    }

    /// Membership from the defining inequalities `h2(x') < x_n < eps + h1(x')`.
    pub fn contains(&self, scene: &Scene, p: Point) -> bool {
        match self {
            Region::All => true,
            Region::Exterior => !scene.in_gap(p),
            _ => {
                let (lo, hi) = self.lateral_window(scene).unwrap();
                let lateral = match self {
                    Region::Sigma => p[0] >= lo && p[0] <= hi,
                    _ => p[0] > lo && p[0] < hi,
                };
                lateral && scene.in_gap(p)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Region::Sigma => "sigma".into(),
            Region::Gap { r } => format!("gap:{r}"),
            Region::Slab { z, t } => format!("slab:{z}:{t}"),
            Region::Exterior => "exterior".into(),
            Region::All => "all".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_scene, GapProfile, SceneConfig};

    fn scene() -> Scene {
        let p = GapProfile::new(0.5, 1.0, 2, 1.0, 1.0).unwrap();
        build_scene(&SceneConfig::new(p, 0.01, 1.5).with_outer_radius(4.0)).unwrap()
    }

    #[test]
    fn membership_follows_gap_inequalities() {
        let s = scene();
        assert!(Region::Sigma.contains(&s, [0.2, 0.005]));
        assert!(!Region::Sigma.contains(&s, [0.2, 0.011]));
        assert!(!Region::Sigma.contains(&s, [0.7, 0.0]));
        assert!(Region::Gap { r: 1.0 }.contains(&s, [0.7, 0.0]));
        assert!(!Region::Gap { r: 1.0 }.contains(&s, [0.7, 0.06]));
        assert!(Region::Exterior.contains(&s, [0.7, 0.06]));
        assert!(Region::Slab { z: 0.7, t: 0.05 }.contains(&s, [0.72, 0.0]));
        assert!(!Region::Slab { z: 0.7, t: 0.05 }.contains(&s, [0.6, 0.0]));
    }

    #[test]
    fn parse_round_trip() {
        for r in [
            Region::Sigma,
            Region::Gap { r: 0.75 },
            Region::Slab { z: 0.1, t: 0.02 },
            Region::Exterior,
            Region::All,
        ] {
            assert_eq!(Region::parse(&r.label(), 1.0).unwrap(), r);
        }
        assert_eq!(Region::parse("gap", 1.0).unwrap(), Region::Gap { r: 1.0 });
        assert!(Region::parse("nowhere", 1.0).is_err());
    }
}
