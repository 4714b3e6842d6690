use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Dirichlet data on the outer boundary, given as named presets.
///
/// Every preset is a polynomial of degree at most two, so value, gradient and
/// Hessian are available in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phi", rename_all = "snake_case")]
pub enum BoundaryData {
    Zero,
    Constant {
        value: f64,
    },
    /// `phi = x_n`
    LinearXn,
    /// `phi = x_1`
    LinearX1,
    /// `phi = gx * x_1 + gy * x_n + c`
    Linear {
        gx: f64,
        gy: f64,
        #[serde(default)]
        c: f64,
    },
    /// `phi = c + gx x_1 + gy x_n + hxx x_1^2 + hxy x_1 x_n + hyy x_n^2`
    Quadratic {
        #[serde(default)]
        c: f64,
        #[serde(default)]
        gx: f64,
        #[serde(default)]
        gy: f64,
        #[serde(default)]
        hxx: f64,
        #[serde(default)]
        hxy: f64,
        #[serde(default)]
        hyy: f64,
    },
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData::LinearXn
    }
}

impl BoundaryData {
    fn coefficients(&self) -> [f64; 6] {
        match *self {
            BoundaryData::Zero => [0.0; 6],
            BoundaryData::Constant { value } => [value, 0.0, 0.0, 0.0, 0.0, 0.0],
            BoundaryData::LinearXn => [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            BoundaryData::LinearX1 => [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            BoundaryData::Linear { gx, gy, c } => [c, gx, gy, 0.0, 0.0, 0.0],
            BoundaryData::Quadratic {
                c,
                gx,
                gy,
                hxx,
                hxy,
                hyy,
            } => [c, gx, gy, hxx, hxy, hyy],
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        let [c, gx, gy, hxx, hxy, hyy] = self.coefficients();
        let [x, y] = p;
        c + gx * x + gy * y + hxx * x * x + hxy * x * y + hyy * y * y
    }

    pub fn gradient(&self, p: Point) -> Point {
        let [_, gx, gy, hxx, hxy, hyy] = self.coefficients();
        let [x, y] = p;
        [gx + 2.0 * hxx * x + hxy * y, gy + hxy * x + 2.0 * hyy * y]
    }

    pub fn hessian(&self, _p: Point) -> Mat2 {
        let [_, _, _, hxx, hxy, hyy] = self.coefficients();
        [[2.0 * hxx, hxy], [hxy, 2.0 * hyy]]
    }

    pub fn is_constant(&self) -> bool {
        let [_, gx, gy, hxx, hxy, hyy] = self.coefficients();
        [gx, gy, hxx, hxy, hyy].iter().all(|v| *v == 0.0)
    }

    /// `max |phi| + max |grad phi| + max |hess phi|` over a disk of radius `r`
    /// about `center`; a computable stand-in for the C^2 norm on the boundary.
    pub fn c2_norm_bound(&self, center: Point, r: f64) -> f64 {
        let [_, _, _, hxx, hxy, hyy] = self.coefficients();
        let c0 = self.value(center).abs();
        let g = self.gradient(center);
        let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let hnorm = 2.0 * hxx.abs() + hxy.abs() + 2.0 * hyy.abs();
        (c0 + gnorm * r + 0.5 * hnorm * r * r) + (gnorm + hnorm * r) + hnorm
    }
}

/// Symmetric, uniformly elliptic coefficient field for `div(A grad u) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "A", rename_all = "snake_case")]
pub enum CoefficientField {
    Identity,
    Diagonal {
        a11: f64,
        a22: f64,
    },
    Constant {
        a11: f64,
        a12: f64,
        a22: f64,
    },
    /// `R(theta) diag(ratio, 1) R(theta)^T`, constant in space.
    RotationAniso {
        theta: f64,
        ratio: f64,
    },
    /// Like `rotation_aniso` but with angle `theta0 + rate * x_1`.
    RotatingAniso {
        theta0: f64,
        rate: f64,
        ratio: f64,
    },
}

fn rotated(theta: f64, ratio: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let a11 = ratio * c * c + s * s;
    let a22 = ratio * s * s + c * c;
    let a12 = (ratio - 1.0) * s * c;
    [[a11, a12], [a12, a22]]
}

fn rotated_dtheta(theta: f64, ratio: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let k = ratio - 1.0;
    let d11 = -2.0 * k * s * c;
    let d12 = k * (c * c - s * s);
    [[d11, d12], [d12, -d11]]
}

impl CoefficientField {
    pub fn matrix(&self, p: Point) -> Mat2 {
        match *self {
            CoefficientField::Identity => [[1.0, 0.0], [0.0, 1.0]],
            CoefficientField::Diagonal { a11, a22 } => [[a11, 0.0], [0.0, a22]],
            CoefficientField::Constant { a11, a12, a22 } => [[a11, a12], [a12, a22]],
            CoefficientField::RotationAniso { theta, ratio } => rotated(theta, ratio),
            CoefficientField::RotatingAniso {
                theta0,
                rate,
                ratio,
            } => rotated(theta0 + rate * p[0], ratio),
        }
    }

    /// `[dA/dx_1, dA/dx_n]`.
    pub fn derivative(&self, p: Point) -> [Mat2; 2] {
        let zero = [[0.0; 2]; 2];
        match *self {
            CoefficientField::RotatingAniso {
                theta0,
                rate,
                ratio,
            } => {
                let d = rotated_dtheta(theta0 + rate * p[0], ratio);
                let dx = [
                    [rate * d[0][0], rate * d[0][1]],
                    [rate * d[1][0], rate * d[1][1]],
                ];
                [dx, zero]
            }
            _ => [zero, zero],
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, CoefficientField::RotatingAniso { rate, .. } if *rate != 0.0)
    }

    /// Ellipticity constants `(lambda, Lambda)` of the preset.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            CoefficientField::Identity => (1.0, 1.0),
            CoefficientField::Diagonal { a11, a22 } => (a11.min(a22), a11.max(a22)),
            CoefficientField::Constant { a11, a12, a22 } => {
                sym_eigenvalues([[a11, a12], [a12, a22]])
            }
            CoefficientField::RotationAniso { ratio, .. }
            | CoefficientField::RotatingAniso { ratio, .. } => (ratio.min(1.0), ratio.max(1.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(Error::Coefficient(format!(
                "coefficient field is not uniformly elliptic (eigenvalue bounds {lo}, {hi})"
            )));
        }
        Ok(())
    }

    /// Checks `lambda |xi|^2 <= A(x) xi.xi <= Lambda |xi|^2` at `p` for the
    /// supplied unit directions.
    pub fn check_ellipticity_at(&self, p: Point, directions: &[Point]) -> Result<()> {
        let (lo, hi) = self.bounds();
        let a = self.matrix(p);
        for xi in directions {
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            let q =
                a[0][0] * xi[0] * xi[0] + 2.0 * a[0][1] * xi[0] * xi[1] + a[1][1] * xi[1] * xi[1];
            let tol = 1e-12 * hi.max(1.0) * n2;
            if q < lo * n2 - tol || q > hi * n2 + tol || !q.is_finite() {
                return Err(Error::Coefficient(format!(
                    "ellipticity violated at ({:.4}, {:.4}): A xi.xi = {q:.6e} outside [{lo}, {hi}]",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn sym_eigenvalues(a: Mat2) -> (f64, f64) {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = ((tr * tr / 4.0) - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}
