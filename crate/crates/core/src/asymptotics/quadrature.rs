use serde::Serialize;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

struct Adaptive<'f> {
    f: &'f dyn Fn(f64) -> f64,
    failure: Option<(f64, f64, f64, f64)>,
}

impl Adaptive<'_> {
    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm), (self.f)(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let diff = left + right - whole;
        if diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        if depth >= MAX_DEPTH || m <= a || m >= b {
            if self.failure.is_none() {
                self.failure = Some((a, b, left + right, diff.abs() / 15.0));
            }
            return left + right + diff / 15.0;
        }
        self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Adaptive Simpson rule with the Richardson-corrected panel sum; `tol` is
/// absolute. Reports the offending bracket when the depth limit is hit.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let mut q = Adaptive { f, failure: None };
    let whole = simpson(fa, fm, fb, b - a);
    let v = q.step(a, b, fa, fm, fb, whole, tol, 0);
    match q.failure {
        Some((a, b, estimate, error)) => Err(Error::Quadrature {
            a,
            b,
            estimate,
            error,
        }),
        None if !v.is_finite() => Err(Error::Quadrature {
            a,
            b,
            estimate: v,
            error: f64::INFINITY,
        }),
        None => Ok(v),
    }
}

/// Surface measure of the unit sphere in `R^(k+1)`.
pub fn sphere_measure(k: u32) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_measure(k - 2),
    }
}

/// Volume of the ball of radius `r` in `R^k`.
pub fn ball_measure(k: u32, r: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    sphere_measure(k - 1) * r.powi(k as i32) / k as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleIntegral {
    /// `int over B_R1 \ Sigma of dx' / (eps + d^m)`.
    pub off_sigma: f64,
    /// `|Sigma'| / eps`.
    pub sigma_block: f64,
}

impl OracleIntegral {
    pub fn total(&self) -> f64 {
        self.off_sigma + self.sigma_block
    }
}

/// Radially symmetric capacitance integral in `x' in R^(n-1)` with the flat
/// set a centred ball of radius `R0`:
/// `|S^(n-2)| int_R0^R1 r^(n-2) / (eps + (r - R0)^m) dr` plus `|B_R0| / eps`.
pub fn capacitance_oracle(n: u32, m: u32, r0: f64, r1: f64, eps: f64) -> Result<OracleIntegral> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2 and m >= 2, got n = {n}, m = {m}"
        )));
    }
    if !(eps > 0.0) || !(r0 >= 0.0) || !(r1 > r0) {
        return Err(Error::InvalidParameter(format!(
            "need eps > 0 and 0 <= R0 < R1, got eps = {eps}, R0 = {r0}, R1 = {r1}"
        )));
    }
    let k = n - 2;
    let f = |r: f64| r.powi(k as i32) / (eps + (r - r0).powi(m as i32));
    // break points resolve the peak of width eps^(1/m) next to R0
    let w = eps.powf(1.0 / m as f64);
    let mut cuts = vec![r0];
    let mut s = w;
    while r0 + s < r1 {
        cuts.push(r0 + s);
        s *= 4.0;
    }
    cuts.push(r1);
    let mut total = 0.0;
    for c in cuts.windows(2) {
        let rough = (c[1] - c[0])
            * f(c[0])
                .abs()
                .max(f(c[1]).abs())
                .max(f(0.5 * (c[0] + c[1])).abs());
        total += adaptive_simpson(&f, c[0], c[1], 1e-12 * rough.max(f64::MIN_POSITIVE))?;
    }
    Ok(OracleIntegral {
        off_sigma: sphere_measure(k) * total,
        sigma_block: ball_measure(n - 1, r0) / eps,
    })
}
