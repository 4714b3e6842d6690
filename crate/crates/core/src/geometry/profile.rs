use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Facing boundary graphs of the two inclusions near the contact set.
///
/// The upper inclusion's lower boundary is `x_n = eps + h1(x')` and the lower
/// inclusion's upper boundary is `x_n = h2(x')`, with
/// `h1 = c_up * (|x'| - R0)_+^m` and `h2 = -c_low * (|x'| - R0)_+^m`.
/// The flat set is `[-R0, R0]`; `R0 = 0` collapses it to the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GapProfileSpec")]
pub struct GapProfile {
    pub flat_halfwidth: f64,
    pub neck_halfwidth: f64,
    pub growth_order: u32,
    pub coeff_upper: f64,
    pub coeff_lower: f64,
    /// Lower bound on the curvature of `h1 - h2` off the flat set (m = 2).
    pub hessian_floor: f64,
    /// Bound on the C^2 seminorm of `h1`, `h2` over the profiled range.
    pub norm_cap: f64,
}

/// Wire form of [`GapProfile`]; the two bound constants are optional and
/// default to the tight values of the family.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GapProfileSpec {
    flat_halfwidth: f64,
    neck_halfwidth: f64,
    growth_order: u32,
    coeff_upper: f64,
    coeff_lower: f64,
    #[serde(default)]
    hessian_floor: Option<f64>,
    #[serde(default)]
    norm_cap: Option<f64>,
}

impl TryFrom<GapProfileSpec> for GapProfile {
    type Error = Error;

    fn try_from(s: GapProfileSpec) -> Result<Self> {
        let mut p = GapProfile::new(
            s.flat_halfwidth,
            s.neck_halfwidth,
            s.growth_order,
            s.coeff_upper,
            s.coeff_lower,
        )?;
        if let Some(k0) = s.hessian_floor {
            p.hessian_floor = k0;
        }
        if let Some(k1) = s.norm_cap {
            p.norm_cap = k1;
        }
        p.check_constants()?;
        Ok(p)
    }
}

impl GapProfile {
    /// Builds the profile with `hessian_floor = 2(c_up + c_low)(1 - 1e-6)` and
    /// `norm_cap` set just above the largest second derivative on `[R0, R1]`.
    ///
    /// Zero coefficients are accepted so that degenerate profiles can be
    /// reported by [`crate::geometry::validate_assumptions`].
    pub fn new(
        flat_halfwidth: f64,
        neck_halfwidth: f64,
        growth_order: u32,
        coeff_upper: f64,
        coeff_lower: f64,
    ) -> Result<Self> {
        let finite = [flat_halfwidth, neck_halfwidth, coeff_upper, coeff_lower]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(
                "profile parameters must be finite".into(),
            ));
        }
        if flat_halfwidth < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "flat_halfwidth must be >= 0, got {flat_halfwidth}"
            )));
        }
        if neck_halfwidth <= flat_halfwidth {
            return Err(Error::InvalidParameter(format!(
                "neck_halfwidth {neck_halfwidth} must exceed flat_halfwidth {flat_halfwidth}"
            )));
        }
        if growth_order < 2 {
            return Err(Error::InvalidParameter(format!(
                "growth_order must be >= 2, got {growth_order}"
            )));
        }
        if coeff_upper < 0.0 || coeff_lower < 0.0 {
            return Err(Error::InvalidParameter(
                "profile coefficients must be >= 0".into(),
            ));
        }
        let m = growth_order as f64;
        let span = neck_halfwidth - flat_halfwidth;
        let lambda = coeff_upper + coeff_lower;
        let hessian_floor = if growth_order == 2 {
            2.0 * lambda * (1.0 - 1e-6)
        } else {
            0.0
        };
        let max_second =
            coeff_upper.max(coeff_lower) * m * (m - 1.0) * span.powi(growth_order as i32 - 2);
        let norm_cap = (max_second * (1.0 + 1e-6)).max(f64::MIN_POSITIVE);
        Ok(Self {
            flat_halfwidth,
            neck_halfwidth,
            growth_order,
            coeff_upper,
            coeff_lower,
            hessian_floor,
            norm_cap,
        })
    }

    fn check_constants(&self) -> Result<()> {
        if !(self.hessian_floor >= 0.0 && self.hessian_floor.is_finite()) {
            return Err(Error::InvalidParameter(
                "hessian_floor must be finite and >= 0".into(),
            ));
        }
        if !(self.norm_cap > 0.0 && self.norm_cap.is_finite()) {
            return Err(Error::InvalidParameter(
                "norm_cap must be finite and > 0".into(),
            ));
        }
        Ok(())
    }

    /// Measure of the flat set in dimension two.
    pub fn sigma_measure(&self) -> f64 {
        2.0 * self.flat_halfwidth
    }

    /// `lambda_0 = lambda_1 = c_up + c_low` for this family.
    pub fn curvature_low(&self) -> f64 {
        self.coeff_upper + self.coeff_lower
    }

    pub fn curvature_high(&self) -> f64 {
        self.coeff_upper + self.coeff_lower
    }

    pub fn dist_to_sigma(&self, x: f64) -> f64 {
        (x.abs() - self.flat_halfwidth).max(0.0)
    }

    fn ramp(&self, x: f64) -> f64 {
        self.dist_to_sigma(x).powi(self.growth_order as i32)
    }

    fn ramp_d1(&self, x: f64) -> f64 {
        let d = self.dist_to_sigma(x);
        if d == 0.0 {
            return 0.0;
        }
        let m = self.growth_order as i32;
        m as f64 * d.powi(m - 1) * x.signum()
    }

    fn ramp_d2(&self, x: f64) -> f64 {
        let d = self.dist_to_sigma(x);
        if d == 0.0 {
            return 0.0;
        }
        let m = self.growth_order as i32;
        (m * (m - 1)) as f64 * d.powi(m - 2)
    }

    /// `h1(x')` without range checking.
    pub fn upper(&self, x: f64) -> f64 {
        self.coeff_upper * self.ramp(x)
    }

    /// `h2(x')` without range checking.
    pub fn lower(&self, x: f64) -> f64 {
        -self.coeff_lower * self.ramp(x)
    }

    pub fn upper_slope(&self, x: f64) -> f64 {
        self.coeff_upper * self.ramp_d1(x)
    }

    pub fn lower_slope(&self, x: f64) -> f64 {
        -self.coeff_lower * self.ramp_d1(x)
    }

    pub fn upper_curvature(&self, x: f64) -> f64 {
        self.coeff_upper * self.ramp_d2(x)
    }

    pub fn lower_curvature(&self, x: f64) -> f64 {
        -self.coeff_lower * self.ramp_d2(x)
    }

    /// `h1 - h2`.
    pub fn relative_height(&self, x: f64) -> f64 {
        self.curvature_low() * self.ramp(x)
    }

    pub fn relative_slope(&self, x: f64) -> f64 {
        self.curvature_low() * self.ramp_d1(x)
    }

    pub fn relative_curvature(&self, x: f64) -> f64 {
        self.curvature_low() * self.ramp_d2(x)
    }

    pub fn in_range(&self, x: f64) -> bool {
        x.abs() <= self.neck_halfwidth * (1.0 + 1e-12)
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if self.in_range(x) {
            Ok(())
        } else {
            Err(Error::OutOfProfileRange {
                x,
                neck: self.neck_halfwidth,
            })
        }
    }

    /// `(h1(x'), h2(x'))`, both zero on the flat set.
    pub fn eval_profiles(&self, x: f64) -> Result<(f64, f64)> {
        self.check_range(x)?;
        Ok((self.upper(x), self.lower(x)))
    }

    /// `delta(x') = eps + h1(x') - h2(x')`.
    pub fn gap_thickness(&self, epsilon: f64, x: f64) -> Result<f64> {
        self.check_range(x)?;
        Ok(self.thickness(epsilon, x))
    }

    pub(crate) fn thickness(&self, epsilon: f64, x: f64) -> f64 {
        epsilon + self.upper(x) - self.lower(x)
    }

    /// Constant of the two-sided envelope `(1/C)(eps + d^m) <= delta <= C(eps + d^m)`.
    pub fn envelope_constant(&self) -> f64 {
        self.curvature_high().max(1.0) / self.curvature_low().min(1.0)
    }
}

/// Free-function form of [`GapProfile::eval_profiles`].
pub fn eval_profiles(p: &GapProfile, x: f64) -> Result<(f64, f64)> {
    p.eval_profiles(x)
}

/// Free-function form of [`GapProfile::dist_to_sigma`].
pub fn dist_to_sigma(p: &GapProfile, x: f64) -> f64 {
    p.dist_to_sigma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_set_heights_vanish() {
        let p = GapProfile::new(0.5, 1.0, 2, 1.0, 1.0).unwrap();
        assert_eq!(p.eval_profiles(0.3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn closed_form_heights() {
        let p = GapProfile::new(0.5, 1.0, 2, 1.0, 1.0).unwrap();
        let (h1, h2) = p.eval_profiles(0.7).unwrap();
        assert_abs_diff_eq!(h1, 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(h2, -0.04, epsilon = 1e-15);

        let q = GapProfile::new(0.0, 1.0, 4, 2.0, 1.0).unwrap();
        let (h1, h2) = q.eval_profiles(0.1).unwrap();
        assert_abs_diff_eq!(h1, 2e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(h2, -1e-4, epsilon = 1e-18);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let p = GapProfile::new(0.5, 1.0, 2, 1.0, 1.0).unwrap();
        assert!(matches!(
            p.eval_profiles(1.2),
            Err(Error::OutOfProfileRange { .. })
        ));
        assert!(p.gap_thickness(0.01, -1.01).is_err());
    }

    #[test]
    fn distance_to_flat_set() {
        let p = GapProfile::new(0.5, 1.0, 2, 1.0, 1.0).unwrap();
        assert_eq!(p.dist_to_sigma(0.2), 0.0);
        assert_abs_diff_eq!(p.dist_to_sigma(-0.8), 0.3, epsilon = 1e-15);
        let q = GapProfile::new(0.0, 1.0, 2, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(q.dist_to_sigma(0.8), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn gap_thickness_examples() {
        let p = GapProfile::new(0.5, 1.0, 2, 1.0, 1.0).unwrap();
        assert_eq!(p.gap_thickness(0.01, 0.1).unwrap(), 0.01);
        assert_abs_diff_eq!(p.gap_thickness(0.01, 0.7).unwrap(), 0.09, epsilon = 1e-15);
        let q = GapProfile::new(0.0, 1.0, 2, 1.0, 1.0).unwrap();
        assert_eq!(q.gap_thickness(0.01, 0.0).unwrap(), 0.01);
    }

    #[test]
    fn slopes_vanish_at_flat_edge() {
        let p = GapProfile::new(0.5, 1.0, 2, 3.0, 1.5).unwrap();
        assert_eq!(p.upper_slope(0.5), 0.0);
        assert_eq!(p.lower_slope(-0.5), 0.0);
        assert_abs_diff_eq!(p.relative_curvature(0.75), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GapProfile::new(0.5, 0.5, 2, 1.0, 1.0).is_err());
        assert!(GapProfile::new(-0.1, 0.5, 2, 1.0, 1.0).is_err());
        assert!(GapProfile::new(0.0, 0.5, 1, 1.0, 1.0).is_err());
        assert!(GapProfile::new(0.0, 0.5, 2, -1.0, 1.0).is_err());
    }

    #[test]
    fn json_defaults_fill_constants() {
        let p: GapProfile = serde_json::from_str(
            r#"{"flat_halfwidth":0.5,"neck_halfwidth":1.0,"growth_order":2,"coeff_upper":1,"coeff_lower":1}"#,
        )
        .unwrap();
        assert_abs_diff_eq!(p.hessian_floor, 4.0 * (1.0 - 1e-6), epsilon = 1e-15);
        assert!(p.norm_cap >= 2.0);
    }
}
