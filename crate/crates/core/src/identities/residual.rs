//! Pointwise residual of `-Δ_N^H u = e^u` and the observed stencil order.

use rand::Rng;
use serde::Serialize;

use super::{Anchor, CheckResult};
use crate::error::Result;
use crate::linalg::{axpy, norm};
use crate::operator::{default_step, pde_residual};
use crate::sampling::{random_unit_vector, stream_rng};
use crate::solution::LiouvilleSolution;

pub const DEFAULT_POINTS: usize = 100;
const RESIDUAL_TOL: f64 = 1e-4;
const EXPECTED_ORDER: f64 = 2.0;
/// `|order - 2| <= 0.2`.
const ORDER_TOL: f64 = 0.1;

/// `n` points with `Ĥ0(x - x0)` log-uniform in `[0.1, 100]`.
pub fn residual_points(sol: &LiouvilleSolution, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 41);
    let gauge = sol.gauge();
    (0..n)
        .map(|_| {
            let rho = 10f64.powf(rng.random_range(-1.0..2.0));
            let w = random_unit_vector(&mut rng, sol.dim());
            axpy(sol.center(), rho / gauge.reversed_fast(&w), &w)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub max_relative: f64,
    pub worst_rho: f64,
    /// `log2(‖r(h)‖ / ‖r(h/2)‖)` over all points, residuals scaled by `e^u`.
    pub observed_order: f64,
    pub points: usize,
}

pub fn residual_summary(sol: &LiouvilleSolution, points: &[Vec<f64>]) -> Result<ResidualSummary> {
    let mut max_rel = 0.0f64;
    let mut worst_rho = f64::NAN;
    let mut coarse = Vec::with_capacity(points.len());
    let mut fine = Vec::with_capacity(points.len());
    for x in points {
        let r = pde_residual(sol, x, default_step(x))?;
        if !(r.relative() <= max_rel) {
            max_rel = r.relative();
            worst_rho = sol.rho(x);
        }
        coarse.push(r.coarse / r.e_u);
        fine.push(r.fine / r.e_u);
    }
    Ok(ResidualSummary {
        max_relative: max_rel,
        worst_rho,
        observed_order: (norm(&coarse) / norm(&fine)).log2(),
        points: points.len(),
    })
}

pub fn verify_pde_residual(sol: &LiouvilleSolution, n: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let s = residual_summary(sol, &residual_points(sol, n, seed))?;
    Ok(vec![
        CheckResult::at_most("residual.max_relative", Anchor::PdeResidual, s.max_relative, RESIDUAL_TOL)
            .with_seed(seed)
            .with_detail("points", s.points)
            .with_detail("worst_rho", s.worst_rho),
        CheckResult::compare(
            "residual.fd_order",
            Anchor::PdeResidual,
            s.observed_order,
            EXPECTED_ORDER,
            ORDER_TOL,
        )
        .with_seed(seed),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::AnisotropyNorm;
    use crate::dual_geometry::DualGauge;

    #[test]
    fn points_lie_in_the_requested_shell() {
        let sol = LiouvilleSolution::new(
            DualGauge::new(AnisotropyNorm::shifted(vec![0.3, 0.0]).unwrap()),
            1.0,
            vec![0.5, -1.0],
        )
        .unwrap();
        for x in residual_points(&sol, 50, 9) {
            let rho = sol.rho(&x);
            assert!((0.1 - 1e-12..=100.0 + 1e-9).contains(&rho));
        }
    }

    #[test]
    fn ellipse_residual_passes() {
        let sol = LiouvilleSolution::new(
            DualGauge::new(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap()),
            2.0,
            vec![0.0, 0.0],
        )
        .unwrap();
        for c in verify_pde_residual(&sol, 40, 1).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }
}
