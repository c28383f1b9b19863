//! The Finsler p-Laplacian `Δ_p^H u = div(H^{p-1}(∇u) ∇H(∇u))`.
//!
//! The flux is evaluated from an analytic gradient; only the outer
//! divergence is a finite difference (second-order central stencil,
//! Richardson-extrapolated over `h` and `h/2`).

use serde::Serialize;

use crate::anisotropy::AnisotropyNorm;
use crate::dual_geometry::DualGauge;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale};
use crate::solution::LiouvilleSolution;

/// Gradients below this length give zero flux.
pub const FLUX_ZERO: f64 = 1e-12;
/// Every stencil point must have `|∇u|` above this.
pub const STENCIL_CLEARANCE: f64 = 1e-10;

/// A differentiable scalar field with an analytic gradient.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// `u(x) = <a, x> + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl ScalarField for LinearField {
    fn dim(&self) -> usize {
        self.slope.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.slope, x) + self.offset
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.slope.clone()
    }
}

/// `u(x) = |x|²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSquaredNorm {
    pub dim: usize,
}

impl ScalarField for HalfSquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

/// `u(x) = H0(x)²/2`. Its flux is `H0(x)^{p-2} x`, so
/// `-Δ_p^H u = -(p + N - 2) H0(x)^{p-2}` for every gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSquaredDual {
    pub gauge: DualGauge,
}

impl HalfSquaredDual {
    /// The source `f = -Δ_p^H u`.
    pub fn source(&self, p: f64, x: &[f64]) -> f64 {
        let n = self.gauge.dim() as f64;
        let h0 = self.gauge.value(x).unwrap_or(0.0);
        -(p + n - 2.0) * h0.powf(p - 2.0)
    }
}

impl ScalarField for HalfSquaredDual {
    fn dim(&self) -> usize {
        self.gauge.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let h = self.gauge.value(x).unwrap_or(0.0);
        0.5 * h * h
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match (self.gauge.value(x), self.gauge.gradient(x)) {
            (Ok(h), Ok(g)) => scale(&g, h),
            _ => vec![0.0; x.len()],
        }
    }
}

/// `u(x) + amplitude · sin(x_1)`, a negative control for rigidity checks.
pub struct SinePerturbed<'a, F: ScalarField> {
    pub base: &'a F,
    pub amplitude: f64,
}

impl<F: ScalarField> ScalarField for SinePerturbed<'_, F> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) + self.amplitude * x[0].sin()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(x);
        g[0] += self.amplitude * x[0].cos();
        g
    }
}

/// The vector field `F = H^{p-1}(∇u) ∇H(∇u)` of a scalar field.
pub struct FluxField<'a> {
    pub norm: &'a AnisotropyNorm,
    pub p: f64,
    pub field: &'a dyn ScalarField,
}

impl<'a> FluxField<'a> {
    pub fn new(norm: &'a AnisotropyNorm, p: f64, field: &'a dyn ScalarField) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::BadParameter(format!("p must be > 1, got {p}")));
        }
        if field.dim() != norm.dim() {
            return Err(Error::DimensionMismatch {
                expected: norm.dim(),
                got: field.dim(),
            });
        }
        Ok(Self { norm, p, field })
    }

    /// `F(x)`; zero where `|∇u| < 1e-12`.
    pub fn flux(&self, x: &[f64]) -> Vec<f64> {
        flux_of_gradient(self.norm, self.p, &self.field.gradient(x))
    }

    /// Central-difference divergence of the flux with step `h`. The centre
    /// and every stencil point must have a non-vanishing gradient.
    pub fn divergence(&self, x: &[f64], h: f64) -> Result<f64> {
        let g0 = norm(&self.field.gradient(x));
        if !(g0 > STENCIL_CLEARANCE) {
            return Err(Error::DegenerateRegion {
                point: x.to_vec(),
                grad_norm: g0,
            });
        }
        let mut xs = x.to_vec();
        let mut total = 0.0;
        for i in 0..x.len() {
            let mut diff = 0.0;
            for (s, sign) in [(h, 1.0), (-h, -1.0)] {
                xs[i] = x[i] + s;
                let g = self.field.gradient(&xs);
                let gn = norm(&g);
                if !(gn > STENCIL_CLEARANCE) {
                    return Err(Error::DegenerateRegion {
                        point: xs.clone(),
                        grad_norm: gn,
                    });
                }
                diff += sign * flux_of_gradient(self.norm, self.p, &g)[i];
            }
            xs[i] = x[i];
            total += diff / (2.0 * h);
        }
        Ok(total)
    }
}

pub fn flux_of_gradient(norm_h: &AnisotropyNorm, p: f64, g: &[f64]) -> Vec<f64> {
    if norm(g) < FLUX_ZERO {
        return vec![0.0; g.len()];
    }
    let h = norm_h.value_unchecked(g);
    scale(&norm_h.gradient_unchecked(g), h.powf(p - 1.0))
}

/// Default stencil step `1e-4 (1 + |x|)`.
pub fn default_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + norm(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplacianEstimate {
    /// Raw stencil with step `h`.
    pub coarse: f64,
    /// Raw stencil with step `h/2`.
    pub fine: f64,
    /// `(4 fine - coarse) / 3`.
    pub richardson: f64,
    pub step: f64,
}

/// `Δ_p^H u(x)` by finite-difference divergence of the analytic flux.
pub fn finsler_p_laplacian(field: &FluxField<'_>, x: &[f64], h: f64) -> Result<LaplacianEstimate> {
    if !(h > 0.0) {
        return Err(Error::BadParameter(format!("step must be positive, got {h}")));
    }
    let coarse = field.divergence(x, h)?;
    let fine = field.divergence(x, 0.5 * h)?;
    Ok(LaplacianEstimate {
        coarse,
        fine,
        richardson: (4.0 * fine - coarse) / 3.0,
        step: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeResidual {
    /// `-Δ_N^H u - e^u` with the raw stencil at `h`.
    pub coarse: f64,
    /// Same at `h/2`.
    pub fine: f64,
    /// Same with the Richardson-extrapolated operator.
    pub richardson: f64,
    pub e_u: f64,
    pub step: f64,
}

impl PdeResidual {
    /// `|r| / e^u` after extrapolation.
    pub fn relative(&self) -> f64 {
        self.richardson.abs() / self.e_u
    }

    /// `log2(|r(h)| / |r(h/2)|)` of the raw stencil.
    pub fn observed_order(&self) -> f64 {
        (self.coarse.abs() / self.fine.abs()).log2()
    }
}

/// Residual of `-Δ_N^H u = e^u` at `x` for an explicit solution.
pub fn pde_residual(sol: &LiouvilleSolution, x: &[f64], h: f64) -> Result<PdeResidual> {
    let rho = sol.rho(x);
    if !(1e-2..=1e3).contains(&rho) {
        return Err(Error::BadParameter(format!(
            "residual point must satisfy Ĥ0(x - x0) in [1e-2, 1e3], got {rho}"
        )));
    }
    let h_norm = sol.gauge().base();
    let flux = FluxField::new(h_norm, sol.dim() as f64, sol)?;
    let lap = finsler_p_laplacian(&flux, x, h)?;
    let e_u = sol.e_u_of_rho(rho);
    Ok(PdeResidual {
        coarse: -lap.coarse - e_u,
        fine: -lap.fine - e_u,
        richardson: -lap.richardson - e_u,
        e_u,
        step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flux_examples() {
        let e = AnisotropyNorm::euclidean(3).unwrap();
        let g = [0.3, -1.2, 2.0];
        let f2 = flux_of_gradient(&e, 2.0, &g);
        for (a, b) in f2.iter().zip(&g) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let f3 = flux_of_gradient(&e, 3.0, &g);
        let n = norm(&g);
        for (a, b) in f3.iter().zip(&g) {
            assert_abs_diff_eq!(*a, n * b, epsilon = 1e-14);
        }
        assert_eq!(flux_of_gradient(&e, 3.0, &[0.0; 3]), vec![0.0; 3]);
    }

    #[test]
    fn linear_field_has_zero_laplacian() {
        let s = AnisotropyNorm::shifted(vec![0.3, 0.1]).unwrap();
        let u = LinearField {
            slope: vec![1.5, -0.7],
            offset: 2.0,
        };
        for p in [1.5, 2.0, 3.7] {
            let f = FluxField::new(&s, p, &u).unwrap();
            let lap = finsler_p_laplacian(&f, &[0.4, 2.0], 1e-3).unwrap();
            assert!(lap.richardson.abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_euclidean_laplacian() {
        let e = AnisotropyNorm::euclidean(2).unwrap();
        let u = HalfSquaredNorm { dim: 2 };
        let f = FluxField::new(&e, 2.0, &u).unwrap();
        let x = [0.8, -1.3];
        let lap = finsler_p_laplacian(&f, &x, default_step(&x)).unwrap();
        assert_abs_diff_eq!(lap.richardson, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn half_squared_dual_source() {
        let h = AnisotropyNorm::shifted(vec![0.4, -0.2]).unwrap();
        let u = HalfSquaredDual {
            gauge: DualGauge::new(h.clone()),
        };
        for p in [1.6, 2.0, 3.0] {
            let f = FluxField::new(&h, p, &u).unwrap();
            let x = [1.2, 0.7];
            let lap = finsler_p_laplacian(&f, &x, default_step(&x)).unwrap();
            let expected = -u.source(p, &x);
            assert!((lap.richardson - expected).abs() / expected.abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_stencil_is_reported() {
        let e = AnisotropyNorm::euclidean(2).unwrap();
        let u = HalfSquaredNorm { dim: 2 };
        let f = FluxField::new(&e, 3.0, &u).unwrap();
        assert!(matches!(
            finsler_p_laplacian(&f, &[0.0, 0.0], 1e-3),
            Err(Error::DegenerateRegion { .. })
        ));
    }

    #[test]
    fn liouville_residual_in_the_plane() {
        let sol = LiouvilleSolution::new(
            DualGauge::new(AnisotropyNorm::euclidean(2).unwrap()),
            1.0,
            vec![0.0, 0.0],
        )
        .unwrap();
        let x = [1.0, 0.0];
        let r = pde_residual(&sol, &x, default_step(&x)).unwrap();
        assert_abs_diff_eq!(r.e_u, 2.0, epsilon = 1e-14);
        assert!(r.richardson.abs() <= 1e-5);
        assert!(pde_residual(&sol, &[1e-3, 0.0], 1e-6).is_err());
    }

    #[test]
    fn bad_exponent() {
        let e = AnisotropyNorm::euclidean(2).unwrap();
        let u = HalfSquaredNorm { dim: 2 };
        assert!(FluxField::new(&e, 1.0, &u).is_err());
    }
}
