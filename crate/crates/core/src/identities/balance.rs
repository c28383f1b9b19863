//! Divergence-theorem balances: boundary flux, Pohozaev identities, the
//! closed-form Wulff-ball split of `M(t)` and the coarea derivatives.

use rand::Rng;
use serde::Serialize;

use super::{Anchor, CheckResult};
use crate::anisotropy::AnisotropyNorm;
use crate::dual_geometry::{boundary_quadrature, DualGauge, WulffShape};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale, sub};
use crate::operator::{flux_of_gradient, HalfSquaredDual, LinearField, ScalarField, FLUX_ZERO};
use crate::quadrature::{wulff_interior, QuadratureConfig};
use crate::sampling::stream_rng;
use crate::solution::LiouvilleSolution;

const FLUX_TOL: f64 = 1e-6;
const FAR_FIELD_TOL: f64 = 1e-4;
const FAR_FIELD_RADIUS: f64 = 1e3;
const CLOSED_SURFACE_TOL: f64 = 1e-9;
const LINEAR_POHOZAEV_TOL: f64 = 1e-10;
const POHOZAEV_TOL: f64 = 1e-5;
const WULFF_POHOZAEV_TOL: f64 = 1e-8;
const COAREA_TOL: f64 = 1e-5;
/// Levels must stay this far below `t0`.
const LEVEL_GAP: f64 = 1e-2;

fn h_of(norm_h: &AnisotropyNorm, g: &[f64]) -> f64 {
    if norm(g) < FLUX_ZERO {
        0.0
    } else {
        norm_h.value_unchecked(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxBalance {
    pub radius: f64,
    /// `∫_{B_R} e^u` by interior quadrature.
    pub interior: f64,
    /// `∫_{∂B_R} H^{N-1}(∇u) <∇H(∇u), -ν>`.
    pub boundary: f64,
    /// `M(u(R))` from the closed form.
    pub closed_form: f64,
}

fn boundary_flux(sol: &LiouvilleSolution, shape: &WulffShape) -> Result<f64> {
    let h = sol.gauge().base();
    let p = sol.dim() as f64;
    Ok(boundary_quadrature(shape, |x, nu| -dot(&flux_of_gradient(h, p, &sol.u_gradient(x)), nu))?.value)
}

pub fn flux_balance(sol: &LiouvilleSolution, radius: f64, cfg: &QuadratureConfig) -> Result<FluxBalance> {
    if !(1e-1..=1e3).contains(&radius) {
        return Err(Error::BadParameter(format!("flux radius must lie in [0.1, 1000], got {radius}")));
    }
    let shape = WulffShape::new(sol.center().to_vec(), radius, sol.gauge().clone())?;
    let interior = wulff_interior(&shape, |x| sol.u_value(x).exp(), cfg)?.value;
    Ok(FluxBalance {
        radius,
        interior,
        boundary: boundary_flux(sol, &shape)?,
        closed_form: sol.level_mass(sol.u_of_rho(radius))?,
    })
}

pub fn verify_flux_balance_suite(sol: &LiouvilleSolution, cfg: &QuadratureConfig) -> Result<Vec<CheckResult>> {
    let r = sol.level_radius(sol.t0() - 1.0)?;
    let fb = flux_balance(sol, r, cfg)?;
    let far_shape = WulffShape::new(sol.center().to_vec(), FAR_FIELD_RADIUS, sol.gauge().clone())?;
    let far = boundary_flux(sol, &far_shape)?;
    // mass outside B_R, which no quadrature can recover at finite R
    let tail = 1.0 - sol.level_mass(sol.u_of_rho(FAR_FIELD_RADIUS))? / sol.mass_target();

    // constant flux H^{N-1}(a) ∇H(a) through a closed surface, against |F| |∂Ω|
    let dim = sol.dim();
    let h = sol.gauge().base();
    let slope: Vec<f64> = (0..dim).map(|i| 1.0 - 0.4 * i as f64).collect();
    let f = flux_of_gradient(h, dim as f64, &slope);
    let net = boundary_quadrature(&far_shape, |_x, nu| dot(&f, nu))?.value;
    let gross = norm(&f) * boundary_quadrature(&far_shape, |_x, _nu| 1.0)?.value;

    Ok(vec![
        CheckResult::compare("flux_balance.level", Anchor::FluxBalance, fb.boundary, fb.interior, FLUX_TOL)
            .with_detail("radius", fb.radius)
            .with_detail("closed_form", fb.closed_form),
        CheckResult::compare(
            "flux_balance.level_closed_form",
            Anchor::FluxBalance,
            fb.interior,
            fb.closed_form,
            FLUX_TOL,
        )
        .with_detail("radius", fb.radius),
        CheckResult::compare(
            "flux_balance.far_field",
            Anchor::FluxBalance,
            far,
            sol.mass_target(),
            FAR_FIELD_TOL + tail,
        )
        .with_detail("radius", FAR_FIELD_RADIUS)
        .with_detail("tail_fraction", tail),
        CheckResult::at_most(
            "flux_balance.constant_field",
            Anchor::FluxBalance,
            net.abs() / gross,
            CLOSED_SURFACE_TOL,
        ),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PohozaevSides {
    /// `(p-N)/p ∫_Ω H^p(∇u)`.
    pub volume_term: f64,
    /// `∫_Ω f <x-y, ∇u>`.
    pub source_term: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Both sides of the Pohozaev identity for `-Δ_p^H u = f` on a Wulff-shaped domain.
pub fn pohozaev_sides<F>(
    norm_h: &AnisotropyNorm,
    p: f64,
    field: &dyn ScalarField,
    f: F,
    domain: &WulffShape,
    y: &[f64],
    cfg: &QuadratureConfig,
) -> Result<PohozaevSides>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = norm_h.dim();
    if !(p > 1.0) {
        return Err(Error::BadParameter(format!("p must be > 1, got {p}")));
    }
    for got in [field.dim(), domain.dim(), y.len()] {
        if got != dim {
            return Err(Error::DimensionMismatch { expected: dim, got });
        }
    }
    let n = dim as f64;
    let volume_term = if p == n {
        0.0
    } else {
        (p - n) / p * wulff_interior(domain, |x| h_of(norm_h, &field.gradient(x)).powf(p), cfg)?.value
    };
    let source_term = wulff_interior(domain, |x| f(x) * dot(&sub(x, y), &field.gradient(x)), cfg)?.value;
    let rhs = boundary_quadrature(domain, |x, nu| {
        let g = field.gradient(x);
        let d = sub(x, y);
        let flux = flux_of_gradient(norm_h, p, &g);
        dot(&flux, nu) * dot(&d, &g) - h_of(norm_h, &g).powf(p) / p * dot(&d, nu)
    })?
    .value;
    Ok(PohozaevSides {
        volume_term,
        source_term,
        lhs: volume_term - source_term,
        rhs,
    })
}

pub fn verify_pohozaev<F>(
    name: &str,
    norm_h: &AnisotropyNorm,
    p: f64,
    field: &dyn ScalarField,
    f: F,
    domain: &WulffShape,
    y: &[f64],
    cfg: &QuadratureConfig,
) -> Result<CheckResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let s = pohozaev_sides(norm_h, p, field, f, domain, y, cfg)?;
    Ok(CheckResult::compare(name, Anchor::Pohozaev, s.rhs, s.lhs, POHOZAEV_TOL)
        .with_detail("p", p)
        .with_detail("y", y)
        .with_detail("volume_term", s.volume_term)
        .with_detail("source_term", s.source_term))
}

/// `x0 + (0.3, -0.1, 0, …)`.
pub fn default_shifted_y(sol: &LiouvilleSolution) -> Vec<f64> {
    let mut y = sol.center().to_vec();
    y[0] += 0.3;
    y[1] -= 0.1;
    y
}

pub fn verify_pohozaev_suite(
    norm_h: &AnisotropyNorm,
    sol: &LiouvilleSolution,
    y_shifted: Option<&[f64]>,
    cfg: &QuadratureConfig,
) -> Result<Vec<CheckResult>> {
    let dim = sol.dim();
    let n = dim as f64;
    let gauge = sol.gauge().clone();
    let x0 = sol.center().to_vec();
    let y1 = match y_shifted {
        Some(y) if y.len() != dim => {
            return Err(Error::DimensionMismatch { expected: dim, got: y.len() });
        }
        Some(y) => y.to_vec(),
        None => default_shifted_y(sol),
    };
    let mut out = Vec::new();

    // linear field, f = 0: LHS = (p-N)/p H^p(a) |Ω|
    let slope: Vec<f64> = (0..dim).map(|i| 1.0 - 0.6 * i as f64).collect();
    let lin = LinearField { slope: slope.clone(), offset: 0.3 };
    let mut c = x0.clone();
    c[0] += 0.2;
    let domain = WulffShape::new(c, 1.3, gauge.clone())?;
    let ha = norm_h.value(&slope)?;
    let volume = domain.volume_from_unit(sol.wulff_unit_volume());
    for (label, p) in [("pohozaev.linear_below_n", 1.5), ("pohozaev.linear_above_n", n + 1.0)] {
        let s = pohozaev_sides(norm_h, p, &lin, |_| 0.0, &domain, &y1, cfg)?;
        let exact = (p - n) / p * ha.powf(p) * volume;
        out.push(
            CheckResult::compare(label, Anchor::Pohozaev, s.rhs, exact, LINEAR_POHOZAEV_TOL)
                .with_detail("p", p)
                .with_detail("lhs_quadrature", s.lhs),
        );
    }

    // manufactured u = H0²/2 with p ≠ N on a Wulff ball away from the origin
    let u = HalfSquaredDual { gauge: gauge.clone() };
    let p = n + 1.0;
    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    let c = scale(&e1, 2.5 / gauge.value(&e1)?);
    let far_ball = WulffShape::new(c.clone(), 1.0, gauge.clone())?;
    let mut y = c;
    y[1] += 0.4;
    out.push(verify_pohozaev(
        "pohozaev.manufactured",
        norm_h,
        p,
        &u,
        |x| u.source(p, x),
        &far_ball,
        &y,
        cfg,
    )?);

    // the Liouville case p = N, f = e^u on a superlevel set
    let ball = sol.superlevel_set(sol.t0() - 1.0)?;
    let e_u = |x: &[f64]| sol.u_value(x).exp();
    let centered = pohozaev_sides(norm_h, n, sol, e_u, &ball, &x0, cfg)?;
    out.push(
        CheckResult::compare("pohozaev.liouville_center", Anchor::Pohozaev, centered.rhs, centered.lhs, POHOZAEV_TOL)
            .with_detail("y", &x0)
            .with_detail("radius", ball.radius),
    );
    out.push(
        verify_pohozaev("pohozaev.liouville_shifted", norm_h, n, sol, e_u, &ball, &y1, cfg)?
            .with_detail("radius", ball.radius),
    );
    // N ∫ e^u - ∫_∂ e^u <x - x0, ν> is the same quantity after one integration by parts
    let mass = wulff_interior(&ball, e_u, cfg)?.value;
    let bnd = boundary_quadrature(&ball, |x, nu| e_u(x) * dot(&sub(x, &x0), nu))?.value;
    out.push(CheckResult::compare(
        "pohozaev.wulff_ball_form",
        Anchor::Pohozaev,
        n * mass - bnd,
        centered.lhs,
        POHOZAEV_TOL,
    ));
    Ok(out)
}

fn check_level(sol: &LiouvilleSolution, t: f64) -> Result<()> {
    if !(t <= sol.t0() - LEVEL_GAP) {
        return Err(Error::BadParameter(format!(
            "level {t} must lie at least {LEVEL_GAP} below t0 = {}",
            sol.t0()
        )));
    }
    Ok(())
}

/// `n` levels `t0 - δ`, `δ` log-uniform in `[1e-2, 10^{1.5}]`.
pub fn random_level_grid(sol: &LiouvilleSolution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 53);
    (0..n)
        .map(|_| sol.t0() - 10f64.powf(rng.random_range(-2.0..1.5)))
        .collect()
}

/// `(M(t), e^t |B_1| R^N + (N-1)/N H^N(∇u) |B_1| R^N)`.
pub fn wulff_pohozaev_sides(sol: &LiouvilleSolution, t: f64) -> Result<(f64, f64)> {
    let dim = sol.dim();
    let n = dim as f64;
    let vol = sol.wulff_unit_volume();
    let r = sol.level_radius(t)?;
    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    let v = scale(&e1, 1.0 / sol.gauge().reversed_value(&e1)?);
    let x = sol.level_point(t, &v)?;
    let hn = h_of(sol.gauge().base(), &sol.u_gradient(&x)).powi(dim as i32);
    let rn = r.powi(dim as i32);
    Ok((sol.level_mass(t)?, t.exp() * vol * rn + (n - 1.0) / n * hn * vol * rn))
}

pub fn verify_wulff_pohozaev_closed_form(sol: &LiouvilleSolution, ts: &[f64]) -> Result<CheckResult> {
    let mut worst: Option<(f64, f64, f64)> = None;
    for &t in ts {
        check_level(sol, t)?;
        let (m, rhs) = wulff_pohozaev_sides(sol, t)?;
        let e = crate::linalg::rel_err(rhs, m);
        if worst.is_none_or(|w| !(e <= w.0)) {
            worst = Some((e, rhs, m));
        }
    }
    let (_, rhs, m) = worst.ok_or_else(|| Error::BadParameter("empty level grid".into()))?;
    Ok(
        CheckResult::compare("wulff_pohozaev.closed_form", Anchor::WulffPohozaev, rhs, m, WULFF_POHOZAEV_TOL)
            .with_detail("levels", ts.len()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoareaTerms {
    /// `∫_{∂Ω_t} 1/|∇u|`.
    pub inverse_gradient: f64,
    /// `∫_{∂Ω_t} H^N(∇u)/|∇u|`.
    pub level_flux: f64,
    /// `-d/dt |Ω_t|` by central difference of the closed form.
    pub measure_derivative: f64,
    /// `-d/dt M(t)` likewise.
    pub mass_derivative: f64,
}

pub fn coarea_terms(sol: &LiouvilleSolution, t: f64, delta: f64) -> Result<CoareaTerms> {
    check_level(sol, t)?;
    if !(delta > 0.0 && delta <= 1e-3) {
        return Err(Error::BadParameter(format!("δ must lie in (0, 1e-3], got {delta}")));
    }
    let dim = sol.dim() as i32;
    let h = sol.gauge().base();
    let shape = sol.superlevel_set(t)?;
    let inverse_gradient = boundary_quadrature(&shape, |x, _| 1.0 / norm(&sol.u_gradient(x)))?.value;
    let level_flux = boundary_quadrature(&shape, |x, _| {
        let g = sol.u_gradient(x);
        h_of(h, &g).powi(dim) / norm(&g)
    })?
    .value;
    let measure = |s: f64| -> Result<f64> { Ok(sol.level_radius(s)?.powi(dim) * sol.wulff_unit_volume()) };
    Ok(CoareaTerms {
        inverse_gradient,
        level_flux,
        measure_derivative: -(measure(t + delta)? - measure(t - delta)?) / (2.0 * delta),
        mass_derivative: -(sol.level_mass(t + delta)? - sol.level_mass(t - delta)?) / (2.0 * delta),
    })
}

pub fn verify_coarea(sol: &LiouvilleSolution, t: f64, delta: f64) -> Result<Vec<CheckResult>> {
    let c = coarea_terms(sol, t, delta)?;
    let half = coarea_terms(sol, t, 0.5 * delta)?;
    let ratio = (c.measure_derivative - c.inverse_gradient).abs() / (half.measure_derivative - half.inverse_gradient).abs();
    Ok(vec![
        CheckResult::compare(
            "coarea.measure_derivative",
            Anchor::Coarea,
            c.measure_derivative,
            c.inverse_gradient,
            COAREA_TOL,
        )
        .with_detail("t", t)
        .with_detail("delta", delta)
        .with_detail("halving_error_ratio", ratio),
        CheckResult::compare(
            "coarea.mass_derivative",
            Anchor::Coarea,
            c.mass_derivative,
            t.exp() * c.inverse_gradient,
            COAREA_TOL,
        )
        .with_detail("t", t),
        CheckResult::compare("coarea.level_flux", Anchor::LevelFlux, c.level_flux, sol.level_mass(t)?, COAREA_TOL)
            .with_detail("t", t),
    ])
}

/// A Liouville solution for `gauge` centered at the origin.
pub fn centered_solution(gauge: DualGauge, lambda: f64) -> Result<LiouvilleSolution> {
    let d = gauge.dim();
    LiouvilleSolution::new(gauge, lambda, vec![0.0; d])
}
