//! The explicit finite-mass solutions
//!
//! ```text
//! u(x) = log( c_N λ^N / [1 + λ^{N/(N-1)} Ĥ0(x - x0)^{N/(N-1)}]^N ),   c_N = N (N²/(N-1))^{N-1}
//! ```
//!
//! together with the closed forms of their peak `t0`, level-set radii `R(t)`,
//! level masses `M(t)` and the quantized total mass.

use crate::dual_geometry::{wulff_volume, DualGauge, WulffShape};
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm, scale, sub};
use crate::operator::ScalarField;

/// `N (N²/(N-1))^{N-1}`.
pub fn quantization_constant(dim: usize) -> f64 {
    let n = dim as f64;
    n * (n * n / (n - 1.0)).powi(dim as i32 - 1)
}

/// `N²/(N-1)`, the logarithmic decay rate of every finite-mass solution.
pub fn decay_rate(dim: usize) -> f64 {
    let n = dim as f64;
    n * n / (n - 1.0)
}

/// Total mass `∫ e^u = N (N²/(N-1))^{N-1} L^N(B_1^{Ĥ0})`.
pub fn quantized_mass_target(dim: usize, wulff_unit_volume: f64) -> f64 {
    quantization_constant(dim) * wulff_unit_volume
}

/// `γ0 = [mass / (N L^N(B_1^{Ĥ0}))]^{1/(N-1)}`.
pub fn gamma0(mass: f64, wulff_unit_volume: f64, dim: usize) -> f64 {
    let n = dim as f64;
    (mass / (n * wulff_unit_volume)).powf(1.0 / (n - 1.0))
}

/// `κ_N = N²/(N-1) · N^{1/(N-1)} · L^N(B_1^{Ĥ0})^{1/(N-1)}`.
pub fn kappa(dim: usize, wulff_unit_volume: f64) -> f64 {
    let n = dim as f64;
    decay_rate(dim) * (n * wulff_unit_volume).powf(1.0 / (n - 1.0))
}

/// Peak value `t0 = log(c_N λ^N)`.
pub fn t0_from_lambda(dim: usize, lambda: f64) -> f64 {
    quantization_constant(dim).ln() + dim as f64 * lambda.ln()
}

/// Inverse of [`t0_from_lambda`]: `λ = [e^{t0} / c_N]^{1/N}`.
pub fn lambda_from_t0(dim: usize, t0: f64) -> f64 {
    ((t0 - quantization_constant(dim).ln()) / dim as f64).exp()
}

/// One member `u(·; N, λ, x0, Ĥ0)` of the classified family.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleSolution {
    dim: usize,
    lambda: f64,
    center: Vec<f64>,
    gauge: DualGauge,
    wulff_unit_volume: f64,
    t0: f64,
}

impl LiouvilleSolution {
    pub fn new(gauge: DualGauge, lambda: f64, center: Vec<f64>) -> Result<Self> {
        let vol = wulff_volume(&gauge);
        Self::with_unit_volume(gauge, lambda, center, vol)
    }

    /// Reuses a previously computed `L^N(B_1^{Ĥ0})`.
    pub fn with_unit_volume(
        gauge: DualGauge,
        lambda: f64,
        center: Vec<f64>,
        wulff_unit_volume: f64,
    ) -> Result<Self> {
        let dim = gauge.dim();
        if center.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: center.len(),
            });
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::BadParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(wulff_unit_volume > 0.0) {
            return Err(Error::BadParameter("Wulff volume must be positive".into()));
        }
        Ok(Self {
            dim,
            lambda,
            t0: t0_from_lambda(dim, lambda),
            center,
            gauge,
            wulff_unit_volume,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn gauge(&self) -> &DualGauge {
        &self.gauge
    }

    pub fn wulff_unit_volume(&self) -> f64 {
        self.wulff_unit_volume
    }

    /// `t0 = u(x0) = max u`.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    fn exponent(&self) -> f64 {
        let n = self.dim as f64;
        n / (n - 1.0)
    }

    /// Wulff radius `ρ = Ĥ0(x - x0)`.
    pub fn rho(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point dimension");
        let z = sub(x, &self.center);
        if norm(&z) == 0.0 {
            0.0
        } else {
            self.gauge.reversed_fast(&z)
        }
    }

    /// Radial profile `u` as a function of `ρ`, evaluated in log form.
    pub fn u_of_rho(&self, rho: f64) -> f64 {
        let w = (self.lambda * rho).powf(self.exponent());
        self.t0 - self.dim as f64 * w.ln_1p()
    }

    /// `e^{u}` as a function of `ρ`.
    pub fn e_u_of_rho(&self, rho: f64) -> f64 {
        self.u_of_rho(rho).exp()
    }

    /// `H(∇u)` on `{Ĥ0(x - x0) = ρ}`: `N²/(N-1) · λ^{N/(N-1)} ρ^{1/(N-1)} / (1 + (λρ)^{N/(N-1)})`.
    pub fn grad_h_of_rho(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let w = (self.lambda * rho).powf(self.exponent());
        decay_rate(self.dim) * (w / (1.0 + w)) / rho
    }

    pub fn u_value(&self, x: &[f64]) -> f64 {
        self.u_of_rho(self.rho(x))
    }

    /// `∇u(x)`; the zero vector at `x0`.
    pub fn u_gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "point dimension");
        let z = sub(x, &self.center);
        if norm(&z) == 0.0 {
            return vec![0.0; self.dim];
        }
        let rho = self.gauge.reversed_fast(&z);
        let g = self
            .gauge
            .reversed_gradient(&z)
            .expect("nonzero argument of the right dimension");
        scale(&g, -self.grad_h_of_rho(rho))
    }

    /// Total mass target `N (N²/(N-1))^{N-1} L^N(B_1^{Ĥ0})`.
    pub fn mass_target(&self) -> f64 {
        quantized_mass_target(self.dim, self.wulff_unit_volume)
    }

    fn check_level(&self, t: f64) -> Result<()> {
        if t > self.t0 || t.is_nan() {
            return Err(Error::AboveMaximum { t, t0: self.t0 });
        }
        Ok(())
    }

    /// `R(t)` with `{u > t} = B_{R(t)}^{Ĥ0}(x0)`:
    /// `R^N = c_N (1 - e^{(t - t0)/N})^{N-1} e^{-((N-1)t + t0)/N}`.
    pub fn level_radius(&self, t: f64) -> Result<f64> {
        self.check_level(t)?;
        let n = self.dim as f64;
        let gap = -((t - self.t0) / n).exp_m1();
        if gap == 0.0 {
            return Ok(0.0);
        }
        let log_rn = quantization_constant(self.dim).ln() + (n - 1.0) * gap.ln()
            - ((n - 1.0) * t + self.t0) / n;
        Ok((log_rn / n).exp())
    }

    /// `M(t) = ∫_{u > t} e^u = [κ_N (1 - e^{(t - t0)/N})]^{N-1}`.
    pub fn level_mass(&self, t: f64) -> Result<f64> {
        self.check_level(t)?;
        let n = self.dim as f64;
        let gap = -((t - self.t0) / n).exp_m1();
        Ok((kappa(self.dim, self.wulff_unit_volume) * gap).powi(self.dim as i32 - 1))
    }

    /// The superlevel set `{u > t}` as a Wulff shape.
    pub fn superlevel_set(&self, t: f64) -> Result<WulffShape> {
        let r = self.level_radius(t)?;
        WulffShape::new(self.center.clone(), r, self.gauge.clone())
    }

    /// Point of `{u = t}` in the Wulff-radial direction `v` (`Ĥ0(v) = 1`).
    pub fn level_point(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        Ok(axpy(&self.center, self.level_radius(t)?, v))
    }
}

impl ScalarField for LiouvilleSolution {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.u_value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.u_gradient(x)
    }
}
