//! Total mass, decay rate, sampled upper bound and far-field asymptotics.

use rand::Rng;
use serde::Serialize;

use super::{mc_tolerance, Anchor, CheckResult};
use crate::error::Result;
use crate::linalg::{axpy, norm, scale};
use crate::quadrature::{monte_carlo_mass, radial_improper, Integral, QuadratureConfig};
use crate::sampling::{random_unit_vector, sphere_points, stream_rng};
use crate::solution::{decay_rate, gamma0, LiouvilleSolution};

const RADIAL_TOL: f64 = 1e-7;
const LOWER_BOUND_TOL: f64 = 1e-6;
const GAMMA0_TOL: f64 = 1e-6;
const DECADE_VARIATION_TOL: f64 = 1e-3;
const WEIGHTED_GRADIENT_TOL: f64 = 1e-3;
const WEIGHTED_GRADIENT_RADIUS: f64 = 1e3;
const ASYMPTOTIC_DIRECTIONS: usize = 64;

/// `N |B_1^{Ĥ0}| ∫_0^∞ e^{u(ρ)} ρ^{N-1} dρ`, exact since `u` depends on `ρ` only.
pub fn radial_mass(sol: &LiouvilleSolution, cfg: &QuadratureConfig) -> Result<Integral> {
    let n = sol.dim() as i32;
    let factor = sol.dim() as f64 * sol.wulff_unit_volume();
    // scale the variable so the bulk of the mass sits near s = 1/2
    let s = 1.0 / sol.lambda();
    let r = radial_improper(|x| sol.e_u_of_rho(s * x) * (s * x).powi(n - 1) * s, cfg)?;
    Ok(Integral {
        value: factor * r.value,
        error_estimate: factor * r.error_estimate,
    })
}

pub fn verify_mass_quantization(sol: &LiouvilleSolution, cfg: &QuadratureConfig) -> Result<Vec<CheckResult>> {
    let target = sol.mass_target();
    let radial = radial_mass(sol, cfg)?;
    let mc = monte_carlo_mass(sol, cfg)?;
    let deficit = ((target - radial.value) / target).max(0.0);
    Ok(vec![
        CheckResult::compare("mass.radial", Anchor::MassQuantization, radial.value, target, RADIAL_TOL)
            .with_detail("error_estimate", radial.error_estimate)
            .with_detail("wulff_unit_volume", sol.wulff_unit_volume()),
        CheckResult::compare(
            "mass.monte_carlo",
            Anchor::MassQuantization,
            mc.value,
            target,
            mc_tolerance(mc.std_error, target),
        )
        .with_seed(mc.seed)
        .with_detail("std_error", mc.std_error)
        .with_detail("samples", mc.samples),
        CheckResult::at_most("mass.lower_bound", Anchor::MassLowerBound, deficit, LOWER_BOUND_TOL)
            .with_detail("mass", radial.value)
            .with_detail("bound", target)
            .with_detail("equality_gap", (radial.value - target) / target),
    ])
}

/// Sampled supremum of `u(x) + N log|x|` over `n` points with `|x|`
/// log-uniform in `[0.1, 1e6]`. Passes when the supremum is finite, sits at
/// `|x| <= 1e3` and the far samples fall below it.
pub fn verify_upper_bound(sol: &LiouvilleSolution, n: usize, seed: u64) -> CheckResult {
    let dim = sol.dim();
    let nf = dim as f64;
    let mut rng = stream_rng(seed, 31);
    let mut sup = f64::NEG_INFINITY;
    let mut argmax = 0.0;
    let mut tail = f64::NEG_INFINITY;
    for _ in 0..n {
        let r = 10f64.powf(rng.random_range(-1.0..6.0));
        let x = scale(&random_unit_vector(&mut rng, dim), r);
        let v = sol.u_value(&x) + nf * r.ln();
        if v > sup {
            sup = v;
            argmax = r;
        }
        if r > 1e5 {
            tail = tail.max(v);
        }
    }
    let ok = sup.is_finite() && argmax <= 1e3 && tail < sup;
    CheckResult::flag("upper_bound.sampled", Anchor::UpperBound, ok)
        .with_seed(seed)
        .with_detail("sampled_sup", sup)
        .with_detail("argmax_radius", argmax)
        .with_detail("tail_max", tail)
        .with_detail("samples", n)
        .with_detail("note", "sampled supremum; no global bound is certified")
}

/// One row of the far-field curve at `Ĥ0(x) = radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub radius: f64,
    /// `max |u + γ0 log Ĥ0|`.
    pub remainder_sup: f64,
    /// `max |x| |∇(u + γ0 log Ĥ0)|`.
    pub weighted_gradient_sup: f64,
}

/// Half-decade radii `1, 10^{0.5}, …, 1e5`.
pub fn default_radii() -> Vec<f64> {
    (0..=10).map(|k| 10f64.powf(0.5 * k as f64)).collect()
}

pub fn asymptotic_curve(sol: &LiouvilleSolution, gamma: f64, radii: &[f64]) -> Vec<AsymptoticRow> {
    let dim = sol.dim();
    let gauge = sol.gauge();
    let dirs = sphere_points(dim, ASYMPTOTIC_DIRECTIONS);
    radii
        .iter()
        .map(|&r| {
            let mut rem = 0.0f64;
            let mut wg = 0.0f64;
            for w in &dirs {
                let x = scale(w, r / gauge.reversed_fast(w));
                let rho = gauge.reversed_fast(&x);
                rem = rem.max((sol.u_value(&x) + gamma * rho.ln()).abs());
                let g = gauge.reversed_gradient(&x).expect("nonzero point");
                let total = axpy(&sol.u_gradient(&x), gamma / rho, &g);
                wg = wg.max(norm(&x) * norm(&total));
            }
            AsymptoticRow {
                radius: r,
                remainder_sup: rem,
                weighted_gradient_sup: wg,
            }
        })
        .collect()
}

fn nearest(radii: &[f64], target: f64) -> usize {
    (0..radii.len())
        .min_by(|&a, &b| {
            (radii[a].ln() - target.ln())
                .abs()
                .total_cmp(&(radii[b].ln() - target.ln()).abs())
        })
        .expect("non-empty radii")
}

/// `γ0` from the radial mass, the far-field remainder curve and the
/// weighted gradient at `Ĥ0 = 1e3`.
pub fn verify_asymptotics(
    sol: &LiouvilleSolution,
    radii: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(Vec<CheckResult>, Vec<AsymptoticRow>)> {
    if radii.len() < 4 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 1.0 || radii[radii.len() - 1] > 1e6 {
        return Err(crate::error::Error::BadParameter(
            "radii must be ascending, at least 4 values in [1, 1e6]".into(),
        ));
    }
    let dim = sol.dim();
    let mass = radial_mass(sol, cfg)?.value;
    let g0 = gamma0(mass, sol.wulff_unit_volume(), dim);
    let curve = asymptotic_curve(sol, g0, radii);
    let last = curve.len() - 1;
    let decade = nearest(radii, radii[last] / 10.0);
    let variation = (curve[last].remainder_sup - curve[decade].remainder_sup).abs();
    let at = nearest(radii, WEIGHTED_GRADIENT_RADIUS);
    let n = dim as f64;
    let limit = (crate::solution::quantization_constant(dim)).ln() + n * sol.lambda().ln()
        - decay_rate(dim) * sol.lambda().ln();
    let checks = vec![
        CheckResult::compare("asymptotics.gamma0", Anchor::DecayRate, g0, decay_rate(dim), GAMMA0_TOL)
            .with_detail("mass", mass),
        CheckResult::at_most(
            "asymptotics.remainder_variation",
            Anchor::Asymptotics,
            variation,
            DECADE_VARIATION_TOL,
        )
        .with_detail("remainder_sup_last", curve[last].remainder_sup)
        .with_detail("limit_abs", limit.abs())
        .with_detail("radii", [radii[decade], radii[last]]),
        CheckResult::at_most(
            "asymptotics.weighted_gradient",
            Anchor::Asymptotics,
            curve[at].weighted_gradient_sup,
            WEIGHTED_GRADIENT_TOL,
        )
        .with_detail("radius", radii[at])
        .with_detail("final_value", curve[last].weighted_gradient_sup),
    ];
    Ok((checks, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::AnisotropyNorm;
    use crate::dual_geometry::DualGauge;
    use std::f64::consts::PI;

    fn sol(h: AnisotropyNorm, lambda: f64) -> LiouvilleSolution {
        let d = h.dim();
        LiouvilleSolution::new(DualGauge::new(h), lambda, vec![0.0; d]).unwrap()
    }

    #[test]
    fn planar_mass_is_eight_pi() {
        let s = sol(AnisotropyNorm::euclidean(2).unwrap(), 1.0);
        let m = radial_mass(&s, &QuadratureConfig::default()).unwrap();
        assert!((m.value - 8.0 * PI).abs() < 1e-7 * 8.0 * PI);
    }

    #[test]
    fn ellipse_mass_is_sixteen_pi() {
        let s = sol(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap(), 1.7);
        let m = radial_mass(&s, &QuadratureConfig::default()).unwrap();
        assert!((m.value - 16.0 * PI).abs() < 1e-7 * 16.0 * PI);
    }

    #[test]
    fn three_dimensional_euclidean_mass() {
        let s = sol(AnisotropyNorm::euclidean(3).unwrap(), 1.0);
        let m = radial_mass(&s, &QuadratureConfig::default()).unwrap();
        let target = 60.75 * 4.0 * PI / 3.0;
        assert!((m.value - target).abs() < 1e-7 * target);
    }

    #[test]
    fn remainder_tends_to_the_limit() {
        let s = sol(AnisotropyNorm::shifted(vec![0.3, 0.0]).unwrap(), 2.0);
        let g = decay_rate(2);
        let curve = asymptotic_curve(&s, g, &[1e5]);
        let limit = 8f64.ln() + 2.0 * 2f64.ln() - g * 2f64.ln();
        assert!((curve[0].remainder_sup - limit.abs()).abs() < 1e-6);
    }

    #[test]
    fn upper_bound_is_found_at_moderate_radius() {
        let s = sol(AnisotropyNorm::euclidean(3).unwrap(), 1.0);
        let c = verify_upper_bound(&s, 2000, 5);
        assert!(c.passed, "{c:?}");
    }
}
