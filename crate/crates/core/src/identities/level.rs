//! Level-set rigidity: `{u = t}` is the Wulff sphere `∂B_{R(t)}^{Ĥ0}(x0)`,
//! `H(∇u)` is constant on it and the closed forms for `R(t)`, `M(t)` and
//! `λ(t0)` agree with independent evaluations.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Anchor, CheckResult};
use crate::dual_geometry::DualGauge;
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm, pairwise_sum, rel_err, scale, sub};
use crate::operator::{ScalarField, SinePerturbed};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::sampling::sphere_points;
use crate::solution::{lambda_from_t0, t0_from_lambda, LiouvilleSolution};

pub const RAYS: usize = 64;
const RIGIDITY_TOL: f64 = 1e-9;
const CLOSED_FORM_TOL: f64 = 1e-7;
const ROUND_TRIP_TOL: f64 = 1e-12;
const PERTURBATION: f64 = 0.01;
const MAX_BRACKET_DOUBLINGS: usize = 200;
const GAUSS_NEWTON_ITERS: usize = 50;

/// Levels `t0 - δ` for `δ ∈ {0.05, 0.25, 1, 2, 4, 8, 16, 32}`.
pub fn default_level_grid(sol: &LiouvilleSolution) -> Vec<f64> {
    [0.05, 0.25, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|d| sol.t0() - d)
        .collect()
}

/// Wulff-radial unit directions `v` with `Ĥ0(v) = 1`.
pub fn wulff_rays(gauge: &DualGauge, n: usize) -> Vec<Vec<f64>> {
    sphere_points(gauge.dim(), n)
        .into_iter()
        .map(|w| scale(&w, 1.0 / gauge.reversed_fast(&w)))
        .collect()
}

/// Smallest `s > 0` with `u(x0 + s v) = t`, by bracketing and bisection to
/// adjacent floating-point numbers. Needs `u(x0) > t`.
pub fn ray_root(field: &dyn ScalarField, x0: &[f64], v: &[f64], t: f64, hint: f64) -> Result<f64> {
    let g = |s: f64| field.value(&axpy(x0, s, v)) - t;
    if !(g(0.0) > 0.0) {
        return Err(Error::RootFindFailure(format!("level {t} is not below the value at the ray origin")));
    }
    let mut lo = 0.0;
    let mut hi = hint.max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
            return Err(Error::RootFindFailure(format!("no sign change along the ray for level {t}")));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi });
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Least-squares fit of `Ĥ0(x_k - c) = R` by Gauss–Newton, started from the
/// centroid.
pub fn fit_wulff_sphere(gauge: &DualGauge, points: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let dim = gauge.dim();
    let m = points.len();
    if m < dim + 2 {
        return Err(Error::BadParameter(format!("need at least {} points, got {m}", dim + 2)));
    }
    let mut c: Vec<f64> = (0..dim)
        .map(|i| pairwise_sum(&points.iter().map(|p| p[i]).collect::<Vec<_>>()) / m as f64)
        .collect();
    let mut r = pairwise_sum(
        &points
            .iter()
            .map(|p| gauge.reversed_value(&sub(p, &c)).unwrap_or(0.0))
            .collect::<Vec<_>>(),
    ) / m as f64;
    for _ in 0..GAUSS_NEWTON_ITERS {
        let mut jac = DMatrix::<f64>::zeros(m, dim + 1);
        let mut res = DVector::<f64>::zeros(m);
        for (k, p) in points.iter().enumerate() {
            let z = sub(p, &c);
            res[k] = gauge.reversed_value(&z)? - r;
            let g = gauge.reversed_gradient(&z)?;
            for i in 0..dim {
                jac[(k, i)] = -g[i];
            }
            jac[(k, dim)] = -1.0;
        }
        let step = jac
            .svd(true, true)
            .solve(&(-res), 1e-14)
            .map_err(|e| Error::RootFindFailure(format!("center fit: {e}")))?;
        for i in 0..dim {
            c[i] += step[i];
        }
        r += step[dim];
        let scale_ref = r.abs().max(norm(&c)).max(1.0);
        if step.norm() <= 1e-15 * scale_ref {
            break;
        }
    }
    Ok((c, r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSample {
    pub t: f64,
    pub radius: f64,
    /// `max_k |s_k - R(t)| / R(t)` over the rays.
    pub radial_deviation: f64,
    /// `(max H(∇u) - min H(∇u)) / mean` on the level set.
    pub gradient_spread: f64,
    /// `|c_fit - x0| / max(1, R(t))`.
    pub center_error: f64,
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = pairwise_sum(values) / values.len() as f64;
    (max - min) / mean.abs()
}

/// Level points of `field` along the rays and `H(∇field)` at them.
fn level_points(
    field: &dyn ScalarField,
    gauge: &DualGauge,
    x0: &[f64],
    rays: &[Vec<f64>],
    t: f64,
    hint: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let h = gauge.base();
    let mut radii = Vec::with_capacity(rays.len());
    let mut points = Vec::with_capacity(rays.len());
    let mut hs = Vec::with_capacity(rays.len());
    for v in rays {
        let s = ray_root(field, x0, v, t, hint)?;
        let x = axpy(x0, s, v);
        hs.push(h.value(&field.gradient(&x))?);
        radii.push(s);
        points.push(x);
    }
    Ok((radii, points, hs))
}

pub fn level_sample(sol: &LiouvilleSolution, t: f64, rays: &[Vec<f64>]) -> Result<LevelSample> {
    let radius = sol.level_radius(t)?;
    let (radii, points, hs) = level_points(sol, sol.gauge(), sol.center(), rays, t, radius * 0.5)?;
    let dev = radii.iter().map(|s| (s - radius).abs()).fold(0.0, f64::max) / radius;
    let (c, _) = fit_wulff_sphere(sol.gauge(), &points)?;
    Ok(LevelSample {
        t,
        radius,
        radial_deviation: dev,
        gradient_spread: spread(&hs),
        center_error: norm(&sub(&c, sol.center())) / radius.max(1.0),
    })
}

/// `H(∇u)` spread on a level set of `u + 0.01 sin(x_1)`.
pub fn perturbed_spread(sol: &LiouvilleSolution, t: f64, rays: &[Vec<f64>]) -> Result<f64> {
    let field = SinePerturbed {
        base: sol,
        amplitude: PERTURBATION,
    };
    let (_, _, hs) = level_points(&field, sol.gauge(), sol.center(), rays, t, sol.level_radius(t)? * 0.5)?;
    Ok(spread(&hs))
}

/// `M(t)` by radial quadrature: `N |B_1| ∫_0^{R(t)} e^{u(ρ)} ρ^{N-1} dρ`.
pub fn level_mass_by_quadrature(sol: &LiouvilleSolution, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let r = sol.level_radius(t)?;
    let n = sol.dim() as i32;
    let integral = integrate(
        |rho| sol.e_u_of_rho(rho) * rho.powi(n - 1),
        0.0,
        r,
        cfg.rtol(),
        cfg.max_subdivisions,
    )?;
    Ok(sol.dim() as f64 * sol.wulff_unit_volume() * integral.value)
}

/// `R(t)` by direct inversion of the profile: `(λR)^{N/(N-1)} = e^{(t0 - t)/N} - 1`.
pub fn level_radius_by_inversion(sol: &LiouvilleSolution, t: f64) -> f64 {
    let n = sol.dim() as f64;
    ((sol.t0() - t) / n).exp_m1().powf((n - 1.0) / n) / sol.lambda()
}

pub fn verify_level_rigidity(sol: &LiouvilleSolution, ts: &[f64], cfg: &QuadratureConfig) -> Result<Vec<CheckResult>> {
    if ts.is_empty() || ts.iter().any(|&t| !(t < sol.t0())) {
        return Err(Error::BadParameter("level grid must be non-empty and below t0".into()));
    }
    let rays = wulff_rays(sol.gauge(), RAYS);
    let samples: Vec<LevelSample> = ts.iter().map(|&t| level_sample(sol, t, &rays)).collect::<Result<_>>()?;
    let worst = |f: fn(&LevelSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);

    let t_mid = ts[ts.len() / 2];
    let perturbed = perturbed_spread(sol, t_mid, &rays)?;

    let mut radius_err = 0.0f64;
    let mut mass_err = 0.0f64;
    for &t in ts {
        radius_err = radius_err.max(rel_err(sol.level_radius(t)?, level_radius_by_inversion(sol, t)));
        mass_err = mass_err.max(rel_err(sol.level_mass(t)?, level_mass_by_quadrature(sol, t, cfg)?));
    }
    let dim = sol.dim();
    let mut round_trip = 0.0f64;
    for lambda in [0.1, 0.5, 1.0, sol.lambda(), 2.0, 7.5] {
        round_trip = round_trip.max(rel_err(lambda_from_t0(dim, t0_from_lambda(dim, lambda)), lambda));
    }

    Ok(vec![
        CheckResult::at_most(
            "rigidity.level_set",
            Anchor::LevelRigidity,
            worst(|s| s.radial_deviation),
            RIGIDITY_TOL,
        )
        .with_detail("rays", RAYS)
        .with_detail("levels", ts.len()),
        CheckResult::at_most(
            "rigidity.gradient_spread",
            Anchor::LevelRigidity,
            worst(|s| s.gradient_spread),
            RIGIDITY_TOL,
        ),
        CheckResult::at_most("rigidity.center", Anchor::LevelRigidity, worst(|s| s.center_error), RIGIDITY_TOL),
        CheckResult::flag(
            "rigidity.negative_control",
            Anchor::LevelRigidity,
            perturbed > RIGIDITY_TOL,
        )
        .with_detail("perturbed_spread", perturbed)
        .with_detail("amplitude", PERTURBATION)
        .with_detail("t", t_mid),
        CheckResult::at_most("rigidity.level_radius", Anchor::LevelClosedForms, radius_err, CLOSED_FORM_TOL),
        CheckResult::at_most("rigidity.level_mass", Anchor::LevelClosedForms, mass_err, CLOSED_FORM_TOL),
        CheckResult::at_most("rigidity.lambda_round_trip", Anchor::LambdaFromT0, round_trip, ROUND_TRIP_TOL),
    ])
}
