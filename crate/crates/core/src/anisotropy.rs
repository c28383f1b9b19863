//! Parametric families of anisotropic gauges `H`: positively 1-homogeneous,
//! convex, positive away from the origin, possibly asymmetric.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::sampling::sphere_points;

/// Vectors shorter than this are treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-14;

/// Largest admissible euclidean length of the shift `b`.
pub const SHIFT_LIMIT: f64 = 0.999;

/// Relative step of the central differences used for tabulated gauges.
const TABULATED_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Euclidean,
    /// `H(xi) = sqrt(xi^T A xi)` with `A` symmetric positive definite.
    Ellipse {
        matrix: DMatrix<f64>,
        inverse: DMatrix<f64>,
    },
    /// `H(xi) = (sum |xi_i|^p)^{1/p}`, `p > 1`.
    PNorm { p: f64 },
    /// `H(xi) = |xi| + <b, xi>`, `|b| < 1`. Asymmetric unless `b = 0`.
    Shifted { b: Vec<f64> },
    /// 2D Minkowski gauge of a convex polygon containing the origin.
    CustomTabulated { polygon: ConvexPolygon },
}

/// Convex polygon with counter-clockwise vertices and the origin strictly
/// inside, stored together with its edge half-planes `<n_e, x> <= d_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    pub vertices: Vec<[f64; 2]>,
    normals: Vec<[f64; 2]>,
    offsets: Vec<f64>,
}

impl ConvexPolygon {
    pub fn new(points: &[[f64; 2]]) -> Result<Self> {
        let mut vertices: Vec<[f64; 2]> = points.to_vec();
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::BadParameter(
                "tabulated boundary needs at least 3 points".into(),
            ));
        }
        let signed_area: f64 = (0..vertices.len())
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            * 0.5;
        if signed_area.abs() < 1e-14 {
            return Err(Error::BadParameter("tabulated boundary has zero area".into()));
        }
        if signed_area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let mut normals = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - b[0], c[1] - b[1]];
            if e1[0] * e2[1] - e1[1] * e2[0] < -1e-12 {
                return Err(Error::BadParameter(
                    "tabulated boundary is not convex".into(),
                ));
            }
            let len = (e1[0] * e1[0] + e1[1] * e1[1]).sqrt();
            if len < ZERO_THRESHOLD {
                return Err(Error::BadParameter(
                    "tabulated boundary has repeated points".into(),
                ));
            }
            let nrm = [e1[1] / len, -e1[0] / len];
            let d = nrm[0] * a[0] + nrm[1] * a[1];
            if d <= 1e-12 {
                return Err(Error::BadParameter(
                    "origin is not strictly inside the tabulated boundary".into(),
                ));
            }
            normals.push(nrm);
            offsets.push(d);
        }
        Ok(Self {
            vertices,
            normals,
            offsets,
        })
    }

    /// Minkowski gauge `inf { t > 0 : x / t in polygon }`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, d)| (n[0] * x[0] + n[1] * x[1]) / d)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Vertices `n_e / d_e` of the polar polygon, in edge order.
    pub fn polar_vertices(&self) -> Vec<[f64; 2]> {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, d)| [n[0] / d, n[1] / d])
            .collect()
    }

    /// Support function `max_v <x, v>` over the vertices, with the maximizing vertex.
    pub fn support(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let mut best = (f64::NEG_INFINITY, self.vertices[0]);
        for v in &self.vertices {
            let s = v[0] * x[0] + v[1] * x[1];
            if s > best.0 {
                best = (s, *v);
            }
        }
        best
    }
}

/// A positively 1-homogeneous convex gauge on `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyNorm {
    dim: usize,
    family: Family,
}

impl AnisotropyNorm {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            family: Family::Euclidean,
        })
    }

    pub fn ellipse(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        check_dim(dim)?;
        if matrix.ncols() != dim {
            return Err(Error::BadParameter("ellipse matrix must be square".into()));
        }
        let scale = matrix.abs().max().max(1.0);
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 * scale {
            return Err(Error::BadParameter("ellipse matrix must be symmetric".into()));
        }
        let chol = matrix
            .clone()
            .cholesky()
            .ok_or_else(|| Error::BadParameter("ellipse matrix must be positive definite".into()))?;
        let inverse = chol.inverse();
        Ok(Self {
            dim,
            family: Family::Ellipse { matrix, inverse },
        })
    }

    /// Diagonal ellipse gauge, `A = diag(entries)`.
    pub fn ellipse_diag(entries: &[f64]) -> Result<Self> {
        Self::ellipse(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn pnorm(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::BadParameter(format!("pnorm exponent must be > 1, got {p}")));
        }
        Ok(Self {
            dim,
            family: Family::PNorm { p },
        })
    }

    pub fn shifted(b: Vec<f64>) -> Result<Self> {
        check_dim(b.len())?;
        let len = norm(&b);
        if !(len < SHIFT_LIMIT) {
            return Err(Error::BadParameter(format!(
                "shift must satisfy |b| < {SHIFT_LIMIT}, got {len}"
            )));
        }
        Ok(Self {
            dim: b.len(),
            family: Family::Shifted { b },
        })
    }

    pub fn custom_tabulated(points: &[[f64; 2]]) -> Result<Self> {
        Ok(Self {
            dim: 2,
            family: Family::CustomTabulated {
                polygon: ConvexPolygon::new(points)?,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Euclidean => "euclidean",
            Family::Ellipse { .. } => "ellipse",
            Family::PNorm { .. } => "pnorm",
            Family::Shifted { .. } => "shifted",
            Family::CustomTabulated { .. } => "custom_tabulated",
        }
    }

    /// `H(-xi) = H(xi)` for every `xi`.
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            Family::Shifted { b } => b.iter().all(|&v| v == 0.0),
            Family::CustomTabulated { polygon } => {
                polygon.vertices.iter().all(|v| {
                    let neg = [-v[0], -v[1]];
                    (polygon.gauge(&neg) - 1.0).abs() < 1e-12
                })
            }
            _ => true,
        }
    }

    fn check_arg(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        let len = norm(xi);
        if !(len > ZERO_THRESHOLD) {
            return Err(Error::ZeroVector(len));
        }
        Ok(())
    }

    /// `H(xi)`.
    pub fn value(&self, xi: &[f64]) -> Result<f64> {
        self.check_arg(xi)?;
        Ok(self.value_unchecked(xi))
    }

    pub(crate) fn value_unchecked(&self, xi: &[f64]) -> f64 {
        match &self.family {
            Family::Euclidean => norm(xi),
            Family::Ellipse { matrix, .. } => quad_form(matrix, xi).sqrt(),
            Family::PNorm { p } => pnorm_value(xi, *p),
            Family::Shifted { b } => norm(xi) + dot(b, xi),
            Family::CustomTabulated { polygon } => polygon.gauge(xi),
        }
    }

    /// `grad H(xi)`; closed form except for tabulated gauges.
    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_arg(xi)?;
        Ok(self.gradient_unchecked(xi))
    }

    pub(crate) fn gradient_unchecked(&self, xi: &[f64]) -> Vec<f64> {
        match &self.family {
            Family::Euclidean => {
                let n = norm(xi);
                xi.iter().map(|v| v / n).collect()
            }
            Family::Ellipse { matrix, .. } => {
                let ax = mat_vec(matrix, xi);
                let h = dot(&ax, xi).sqrt();
                ax.iter().map(|v| v / h).collect()
            }
            Family::PNorm { p } => {
                let h = pnorm_value(xi, *p);
                xi.iter()
                    .map(|&v| v.signum() * (v.abs() / h).powf(p - 1.0))
                    .collect()
            }
            Family::Shifted { b } => {
                let n = norm(xi);
                xi.iter().zip(b).map(|(v, bi)| v / n + bi).collect()
            }
            Family::CustomTabulated { polygon } => {
                central_gradient(|x| polygon.gauge(x), xi, TABULATED_FD_STEP * norm(xi))
            }
        }
    }

    /// Hessian of `H^2` at `xi`.
    pub fn hessian_h2(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.check_arg(xi)?;
        let n = self.dim;
        let h = self.value_unchecked(xi);
        let g = DVector::from_vec(self.gradient_unchecked(xi));
        Ok(match &self.family {
            Family::Euclidean => DMatrix::identity(n, n) * 2.0,
            Family::Ellipse { matrix, .. } => matrix * 2.0,
            Family::PNorm { p } => {
                let diag = DVector::from_iterator(
                    n,
                    xi.iter().map(|v| 2.0 * (p - 1.0) * (v.abs() / h).powf(p - 2.0)),
                );
                &g * g.transpose() * (2.0 * (2.0 - p)) + DMatrix::from_diagonal(&diag)
            }
            Family::Shifted { .. } => {
                let len = norm(xi);
                let unit = DVector::from_iterator(n, xi.iter().map(|v| v / len));
                let proj = DMatrix::identity(n, n) - &unit * unit.transpose();
                &g * g.transpose() * 2.0 + proj * (2.0 * h / len)
            }
            Family::CustomTabulated { polygon } => {
                let step = TABULATED_FD_STEP.sqrt() * norm(xi);
                let grad_h2 = |x: &[f64]| -> Vec<f64> {
                    let hv = polygon.gauge(x);
                    central_gradient(|y| polygon.gauge(y), x, TABULATED_FD_STEP * norm(x))
                        .into_iter()
                        .map(|gi| 2.0 * hv * gi)
                        .collect()
                };
                let mut m = DMatrix::zeros(n, n);
                for j in 0..n {
                    let mut xp = xi.to_vec();
                    let mut xm = xi.to_vec();
                    xp[j] += step;
                    xm[j] -= step;
                    let gp = grad_h2(&xp);
                    let gm = grad_h2(&xm);
                    for i in 0..n {
                        m[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
                    }
                }
                (&m + m.transpose()) * 0.5
            }
        })
    }

    /// Samples the Hessian of `H^2` on the unit sphere and reports its
    /// eigenvalue range. The coordinate directions are always included,
    /// since that is where `pnorm` gauges degenerate.
    pub fn check_uniform_ellipticity(&self, n_samples: usize) -> Result<Ellipticity> {
        if n_samples < 100 {
            return Err(Error::BadParameter(format!(
                "ellipticity check needs at least 100 samples, got {n_samples}"
            )));
        }
        let mut points = Vec::with_capacity(n_samples + 2 * self.dim);
        for i in 0..self.dim {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; self.dim];
                e[i] = s;
                points.push(e);
            }
        }
        points.extend(sphere_points(self.dim, n_samples));

        let mut lambda_min = f64::INFINITY;
        let mut lambda_max = 0.0f64;
        for xi in &points {
            let hess = self.hessian_h2(xi)?;
            if hess.iter().any(|v| !v.is_finite()) {
                lambda_max = f64::INFINITY;
                continue;
            }
            let eig = SymmetricEigen::new(hess).eigenvalues;
            lambda_min = lambda_min.min(eig.min());
            lambda_max = lambda_max.max(eig.max());
        }
        Ok(Ellipticity {
            lambda_min,
            lambda_max,
            verdict: lambda_min > 1e-8 && lambda_max.is_finite(),
            samples: points.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipticity {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub verdict: bool,
    pub samples: usize,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::BadParameter(format!("dimension must be >= 2, got {dim}")));
    }
    Ok(())
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

pub(crate) fn quad_form(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    dot(&mat_vec(m, x), x)
}

/// Overflow-safe `(sum |x_i|^p)^{1/p}`.
pub(crate) fn pnorm_value(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

pub(crate) fn central_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_examples() {
        let e = AnisotropyNorm::euclidean(2).unwrap();
        assert_abs_diff_eq!(e.value(&[3.0, 4.0]).unwrap(), 5.0, epsilon = 1e-15);
        let a = AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap();
        assert_abs_diff_eq!(a.value(&[1.0, 0.0]).unwrap(), 2.0, epsilon = 1e-15);
        let s = AnisotropyNorm::shifted(vec![0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(s.value(&[1.0, 0.0]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.value(&[-1.0, 0.0]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let e = AnisotropyNorm::euclidean(2).unwrap();
        let g = e.gradient(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(g[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.8, epsilon = 1e-15);
        let s = AnisotropyNorm::shifted(vec![0.5, 0.0]).unwrap();
        let g = s.gradient(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-15);
        let a = AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap();
        let g = a.gradient(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let e = AnisotropyNorm::euclidean(3).unwrap();
        assert!(matches!(e.value(&[0.0, 1e-15, 0.0]), Err(Error::ZeroVector(_))));
        assert!(matches!(e.gradient(&[0.0; 3]), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(AnisotropyNorm::pnorm(2, 1.0).is_err());
        assert!(AnisotropyNorm::pnorm(2, f64::NAN).is_err());
        assert!(AnisotropyNorm::shifted(vec![0.999, 0.0]).is_err());
        assert!(AnisotropyNorm::ellipse_diag(&[1.0, -1.0]).is_err());
        let nonsym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(AnisotropyNorm::ellipse(nonsym).is_err());
        assert!(AnisotropyNorm::euclidean(1).is_err());
        // origin outside
        assert!(AnisotropyNorm::custom_tabulated(&[[1.0, 1.0], [2.0, 1.0], [2.0, 2.0]]).is_err());
        // non-convex
        assert!(AnisotropyNorm::custom_tabulated(&[
            [1.0, 0.0],
            [0.1, 0.1],
            [0.0, 1.0],
            [-1.0, 0.0],
            [0.0, -1.0]
        ])
        .is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let e = AnisotropyNorm::euclidean(3).unwrap();
        assert!(matches!(
            e.value(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn tabulated_square_is_max_norm() {
        let sq = AnisotropyNorm::custom_tabulated(&[
            [1.0, -1.0],
            [1.0, 1.0],
            [-1.0, 1.0],
            [-1.0, -1.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(sq.value(&[0.5, -2.0]).unwrap(), 2.0, epsilon = 1e-15);
        let g = sq.gradient(&[3.0, 1.0]).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-8);
        // clockwise input is reoriented
        let cw = AnisotropyNorm::custom_tabulated(&[
            [-1.0, -1.0],
            [-1.0, 1.0],
            [1.0, 1.0],
            [1.0, -1.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(cw.value(&[0.5, -2.0]).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn ellipticity_examples() {
        let e = AnisotropyNorm::euclidean(3).unwrap().check_uniform_ellipticity(100).unwrap();
        assert_abs_diff_eq!(e.lambda_min, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.lambda_max, 2.0, epsilon = 1e-12);
        assert!(e.verdict);

        let a = AnisotropyNorm::ellipse_diag(&[4.0, 1.0])
            .unwrap()
            .check_uniform_ellipticity(128)
            .unwrap();
        assert_abs_diff_eq!(a.lambda_min, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.lambda_max, 8.0, epsilon = 1e-12);
        assert!(a.verdict);

        let p = AnisotropyNorm::pnorm(2, 4.0).unwrap().check_uniform_ellipticity(100).unwrap();
        assert!(p.lambda_min < 1e-8);
        assert!(!p.verdict);

        assert!(AnisotropyNorm::euclidean(2).unwrap().check_uniform_ellipticity(99).is_err());
    }

    #[test]
    fn shifted_is_uniformly_elliptic() {
        let s = AnisotropyNorm::shifted(vec![0.3, 0.0, 0.0])
            .unwrap()
            .check_uniform_ellipticity(200)
            .unwrap();
        assert!(s.verdict);
        assert!(s.lambda_min > 0.1);
    }
}
