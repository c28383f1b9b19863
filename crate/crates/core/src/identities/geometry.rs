//! Gauge and Wulff-shape checks: ellipticity, duality, volumes, perimeter
//! and the isoperimetric ratio.

use rand::Rng;
use statrs::function::gamma::gamma;

use super::{mc_tolerance, Anchor, CheckResult};
use crate::anisotropy::{AnisotropyNorm, Family};
use crate::dual_geometry::{boundary_quadrature, wulff_volume, wulff_volume_monte_carlo, DualGauge, WulffShape};
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, neg, norm, rel_err, scale};
use crate::quadrature::QuadratureConfig;
use crate::sampling::{random_unit_vector, stream_rng};

const DUALITY_TOL: f64 = 1e-6;
const BRUTE_FORCE_TOL: f64 = 1e-8;
const BRUTE_FORCE_POINTS: usize = 32;
const PERIMETER_TOL: f64 = 1e-6;
const WULFF_Q_TOL: f64 = 1e-4;
const Q_FLOOR_TOL: f64 = 1e-6;
const RANDOM_POLYGONS: usize = 20;

pub fn verify_ellipticity(norm_h: &AnisotropyNorm, samples: usize) -> Result<Vec<CheckResult>> {
    let e = norm_h.check_uniform_ellipticity(samples)?;
    Ok(vec![CheckResult::flag("ellipticity.verdict", Anchor::Ellipticity, e.verdict)
        .with_detail("lambda_min", e.lambda_min)
        .with_detail("lambda_max", e.lambda_max)
        .with_detail("samples", e.samples)
        .with_detail("note", "sampled eigenvalue bounds; C^{1,1} regularity is not certified")])
}

/// Random points with log-uniform length in `[0.1, 10]`.
fn sample_points(dim: usize, n: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, stream);
    (0..n)
        .map(|_| {
            let r = 10f64.powf(rng.random_range(-1.0..1.0));
            scale(&random_unit_vector(&mut rng, dim), r)
        })
        .collect()
}

/// `H(∇H0) = 1`, `H0(∇H) = 1`, `∇H(∇H0(x)) = x / H0(x)` on `n` points,
/// and closed-form duals against the brute-force supremum.
pub fn verify_duality(gauge: &DualGauge, n: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let h = gauge.base();
    let dim = gauge.dim();
    let pts = sample_points(dim, n, seed, 11);
    let mut worst_h = 0.0f64;
    let mut worst_h0 = 0.0f64;
    let mut worst_inv = 0.0f64;
    for x in &pts {
        let g0 = gauge.gradient(x)?;
        worst_h = worst_h.max((h.value(&g0)? - 1.0).abs());
        let gh = h.gradient(x)?;
        worst_h0 = worst_h0.max((gauge.value(&gh)? - 1.0).abs());
        if !matches!(h.family(), Family::CustomTabulated { .. }) {
            let back = h.gradient(&g0)?;
            let expect = scale(x, 1.0 / gauge.value(x)?);
            worst_inv = worst_inv.max(max_abs_diff(&back, &expect) / norm(&expect));
        }
    }
    let mut out = vec![
        CheckResult::at_most("duality.h_of_grad_dual", Anchor::Duality, worst_h, DUALITY_TOL)
            .with_seed(seed)
            .with_detail("points", n),
        CheckResult::at_most("duality.dual_of_grad_h", Anchor::Duality, worst_h0, DUALITY_TOL)
            .with_seed(seed)
            .with_detail("points", n),
    ];
    if !matches!(h.family(), Family::CustomTabulated { .. }) {
        out.push(
            CheckResult::at_most("duality.gradient_inverse", Anchor::Duality, worst_inv, DUALITY_TOL)
                .with_seed(seed)
                .with_detail("points", n),
        );
    }
    let brute = DualGauge::optimized(h.clone());
    let mut worst_bf = 0.0f64;
    for x in pts.iter().take(BRUTE_FORCE_POINTS) {
        worst_bf = worst_bf.max(rel_err(brute.value(x)?, gauge.value(x)?));
    }
    out.push(
        CheckResult::at_most("duality.closed_vs_brute_force", Anchor::Duality, worst_bf, BRUTE_FORCE_TOL)
            .with_seed(seed)
            .with_detail("points", BRUTE_FORCE_POINTS.min(n)),
    );
    Ok(out)
}

/// Volume of the euclidean unit ball in `R^dim`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let n = dim as f64;
    std::f64::consts::PI.powf(0.5 * n) / gamma(0.5 * n + 1.0)
}

/// `|B_1^{Ĥ0}|` in closed form where one is known.
pub fn closed_form_wulff_volume(norm_h: &AnisotropyNorm) -> Option<f64> {
    let dim = norm_h.dim();
    let n = dim as f64;
    match norm_h.family() {
        Family::Euclidean => Some(unit_ball_volume(dim)),
        // {x^T A^{-1} x < 1} is the image of the unit ball under A^{1/2}
        Family::Ellipse { matrix, .. } => Some(unit_ball_volume(dim) * matrix.determinant().sqrt()),
        Family::PNorm { p } => {
            let q = p / (p - 1.0);
            Some(2f64.powf(n) * gamma(1.0 + 1.0 / q).powf(n) / gamma(1.0 + n / q))
        }
        // {H0(x - ...) < 1} is the euclidean unit ball centered at -b
        Family::Shifted { .. } => Some(unit_ball_volume(dim)),
        Family::CustomTabulated { polygon } => {
            let w: Vec<[f64; 2]> = polygon.polar_vertices().iter().map(|v| [-v[0], -v[1]]).collect();
            Some(shoelace(&w).abs())
        }
    }
}

pub fn verify_wulff_volume(gauge: &DualGauge, cfg: &QuadratureConfig) -> Result<Vec<CheckResult>> {
    cfg.validate()?;
    let vol = wulff_volume(gauge);
    let mc = wulff_volume_monte_carlo(gauge, cfg.mc_samples, cfg.seed);
    let mut out = vec![CheckResult::compare(
        "wulff_volume.monte_carlo",
        Anchor::WulffVolume,
        mc.value,
        vol,
        mc_tolerance(mc.std_error, vol),
    )
    .with_seed(cfg.seed)
    .with_detail("std_error", mc.std_error)
    .with_detail("samples", mc.samples)];
    if let Some(exact) = closed_form_wulff_volume(gauge.base()) {
        // quasi-Monte Carlo above three dimensions
        let tol = if gauge.dim() <= 3 { 1e-8 } else { 1e-4 };
        out.push(CheckResult::compare(
            "wulff_volume.closed_form",
            Anchor::WulffVolume,
            vol,
            exact,
            tol,
        ));
    }
    Ok(out)
}

/// `∫_{∂Ω} H(-ν)` over a Wulff shape: exact edge sum for tabulated gauges,
/// boundary quadrature otherwise.
pub fn anisotropic_perimeter(shape: &WulffShape) -> Result<f64> {
    let h = shape.gauge.base();
    if let Family::CustomTabulated { polygon } = h.family() {
        let pts: Vec<[f64; 2]> = polygon
            .polar_vertices()
            .iter()
            .map(|v| {
                [
                    shape.center[0] - shape.radius * v[0],
                    shape.center[1] - shape.radius * v[1],
                ]
            })
            .collect();
        return Ok(polygon_measures(&pts, h)?.1);
    }
    let est = boundary_quadrature(shape, |_x, nu| h.value_unchecked(&neg(nu)))?;
    Ok(est.value)
}

pub fn verify_perimeter(gauge: &DualGauge) -> Result<CheckResult> {
    let dim = gauge.dim();
    let vol = wulff_volume(gauge);
    let shape = WulffShape::new(vec![0.0; dim], 1.0, gauge.clone())?;
    let p = anisotropic_perimeter(&shape)?;
    Ok(CheckResult::compare(
        "perimeter.unit_wulff",
        Anchor::Perimeter,
        p,
        dim as f64 * vol,
        PERIMETER_TOL,
    ))
}

/// `Q(Ω) = P_H(Ω) / (N |B_1^{Ĥ0}|^{1/N} |Ω|^{(N-1)/N})`.
pub fn isoperimetric_ratio(perimeter: f64, volume: f64, unit_volume: f64, dim: usize) -> f64 {
    let n = dim as f64;
    perimeter / (n * unit_volume.powf(1.0 / n) * volume.powf((n - 1.0) / n))
}

pub fn wulff_isoperimetric_ratio(shape: &WulffShape, unit_volume: f64) -> Result<f64> {
    let p = anisotropic_perimeter(shape)?;
    Ok(isoperimetric_ratio(p, shape.volume_from_unit(unit_volume), unit_volume, shape.dim()))
}

fn shoelace(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Area and `∫_{∂P} H(-ν)` of a simple polygon.
pub fn polygon_measures(points: &[[f64; 2]], norm_h: &AnisotropyNorm) -> Result<(f64, f64)> {
    if norm_h.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: norm_h.dim(),
        });
    }
    let n = points.len();
    if n < 3 {
        return Err(Error::BadBoundary(format!("polygon needs 3 vertices, got {n}")));
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_touch(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]) {
                return Err(Error::BadBoundary(format!("edges {i} and {j} intersect")));
            }
        }
    }
    let signed = shoelace(points);
    if signed.abs() < 1e-300 {
        return Err(Error::BadBoundary("polygon has zero area".into()));
    }
    let sign = signed.signum();
    let mut perimeter = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = norm(&e);
        if len == 0.0 {
            return Err(Error::BadBoundary(format!("repeated vertex {i}")));
        }
        // outer normal of a counter-clockwise edge is (e_y, -e_x)
        let nu = [sign * e[1] / len, -sign * e[0] / len];
        perimeter += len * norm_h.value_unchecked(&[-nu[0], -nu[1]]);
    }
    Ok((signed.abs(), perimeter))
}

pub fn polygon_isoperimetric_ratio(points: &[[f64; 2]], norm_h: &AnisotropyNorm, unit_volume: f64) -> Result<f64> {
    let (area, p) = polygon_measures(points, norm_h)?;
    Ok(isoperimetric_ratio(p, area, unit_volume, 2))
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Hull of 6 to 15 random points in a random ellipse.
pub fn random_convex_polygon<R: Rng + ?Sized>(rng: &mut R) -> Vec<[f64; 2]> {
    loop {
        let k = rng.random_range(6..16);
        let (ax, ay) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let pts: Vec<[f64; 2]> = (0..k)
            .map(|_| {
                let th = rng.random_range(0.0..std::f64::consts::TAU);
                let r = rng.random_range(0.3f64..1.0).sqrt();
                [ax * r * th.cos(), ay * r * th.sin()]
            })
            .collect();
        let hull = convex_hull(&pts);
        if hull.len() >= 3 {
            return hull;
        }
    }
}

pub fn verify_isoperimetric(gauge: &DualGauge, seed: u64) -> Result<Vec<CheckResult>> {
    let dim = gauge.dim();
    let vol = wulff_volume(gauge);
    let h = gauge.base();
    let unit = WulffShape::new(vec![0.0; dim], 1.0, gauge.clone())?;
    let mut moved_center = vec![0.0; dim];
    moved_center[0] = 0.7;
    moved_center[1] = -0.4;
    let moved = WulffShape::new(moved_center, 2.5, gauge.clone())?;
    let q_unit = wulff_isoperimetric_ratio(&unit, vol)?;
    let q_moved = wulff_isoperimetric_ratio(&moved, vol)?;
    let worst = (q_unit - 1.0).abs().max((q_moved - 1.0).abs());
    let mut out = vec![CheckResult::at_most("isoperimetric.wulff", Anchor::Isoperimetric, worst, WULFF_Q_TOL)
        .with_detail("q_unit", q_unit)
        .with_detail("q_dilated", q_moved)];

    if dim == 2 {
        let mut rng = stream_rng(seed, 23);
        let mut ratios = Vec::with_capacity(RANDOM_POLYGONS);
        for _ in 0..RANDOM_POLYGONS {
            let poly = random_convex_polygon(&mut rng);
            ratios.push(polygon_isoperimetric_ratio(&poly, h, vol)?);
        }
        let min_q = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let margins: Vec<f64> = ratios.iter().map(|q| q - 1.0).collect();
        out.push(
            CheckResult::at_most(
                "isoperimetric.random_polygons",
                Anchor::Isoperimetric,
                (1.0 - min_q).max(0.0),
                Q_FLOOR_TOL,
            )
            .with_seed(seed)
            .with_detail("min_q", min_q)
            .with_detail("margins", margins),
        );
        let e = AnisotropyNorm::euclidean(2)?;
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let q_square = polygon_isoperimetric_ratio(&square, &e, std::f64::consts::PI)?;
        out.push(CheckResult::compare(
            "isoperimetric.euclidean_square",
            Anchor::Isoperimetric,
            q_square,
            2.0 / std::f64::consts::PI.sqrt(),
            Q_FLOOR_TOL,
        ));
    }
    Ok(out)
}
