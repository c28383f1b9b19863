//! Dual gauge `H0(x) = sup_{|xi|=1} <x, xi> / H(xi)`, its reversal
//! `Ĥ0(x) = H0(-x)`, Wulff shapes `{Ĥ0(x - c) < r}` and surface quadrature
//! on their boundaries.

use rayon::prelude::*;
use serde::Serialize;

use crate::anisotropy::{mat_vec, pnorm_value, quad_form, AnisotropyNorm, Family};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, neg, norm, normalized, pairwise_sum, scale, sub};
use crate::sampling::{gauss_legendre, halton_sphere_point, sphere_area, sphere_points, stream_rng};

const SCAN_POINTS: usize = 2048;
const GOLDEN_TOL: f64 = 1e-12;
const MULTI_STARTS: usize = 32;
const ASCENT_TOL: f64 = 1e-10;
const ASCENT_MAX_ITERS: usize = 20_000;
const ASCENT_STALL: usize = 200;

/// Boundary tangents are central differences with this parameter step.
const BOUNDARY_RTOL: f64 = 1e-10;
const BOUNDARY_MAX_NODES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualMode {
    ClosedForm,
    Optimized,
}

/// The dual gauge of an [`AnisotropyNorm`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualGauge {
    base: AnisotropyNorm,
    mode: DualMode,
}

impl DualGauge {
    /// Closed form for every family. For tabulated polygons the dual is the
    /// support function of the polygon, evaluated exactly over its vertices.
    pub fn new(base: AnisotropyNorm) -> Self {
        Self {
            base,
            mode: DualMode::ClosedForm,
        }
    }

    /// Forces the support-function optimizer regardless of family.
    pub fn optimized(base: AnisotropyNorm) -> Self {
        Self {
            base,
            mode: DualMode::Optimized,
        }
    }

    pub fn base(&self) -> &AnisotropyNorm {
        &self.base
    }

    pub fn mode(&self) -> DualMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `H0(x)`; zero at the origin.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if norm(x) == 0.0 {
            return Ok(0.0);
        }
        match self.mode {
            DualMode::ClosedForm => Ok(self.closed_value(x)),
            DualMode::Optimized => Ok(self.support_argmax(x)?.0),
        }
    }

    /// `Ĥ0(x) = H0(-x)`.
    pub fn reversed_value(&self, x: &[f64]) -> Result<f64> {
        self.value(&neg(x))
    }

    /// `grad H0(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let len = norm(x);
        if !(len > crate::anisotropy::ZERO_THRESHOLD) {
            return Err(Error::ZeroVector(len));
        }
        match self.mode {
            DualMode::ClosedForm => Ok(self.closed_gradient(x)),
            DualMode::Optimized => {
                // envelope rule: H0(x) = <x, xi*/H(xi*)>, so grad H0 = xi*/H(xi*)
                let (_, xi) = self.support_argmax(x)?;
                let h = self.base.value_unchecked(&xi);
                Ok(scale(&xi, 1.0 / h))
            }
        }
    }

    /// `grad Ĥ0(x) = -grad H0(-x)`.
    pub fn reversed_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(neg(&self.gradient(&neg(x))?))
    }

    /// `Ĥ0` without argument checks, for inner loops. `x` must be nonzero
    /// and of the right dimension.
    pub(crate) fn reversed_fast(&self, x: &[f64]) -> f64 {
        let m = neg(x);
        match self.mode {
            DualMode::ClosedForm => self.closed_value(&m),
            DualMode::Optimized => self.support_argmax(&m).map(|v| v.0).unwrap_or(f64::NAN),
        }
    }

    fn closed_value(&self, x: &[f64]) -> f64 {
        match self.base.family() {
            Family::Euclidean => norm(x),
            Family::Ellipse { inverse, .. } => quad_form(inverse, x).sqrt(),
            Family::PNorm { p } => pnorm_value(x, p / (p - 1.0)),
            Family::Shifted { b } => {
                let beta = dot(b, x);
                let c = 1.0 - dot(b, b);
                ((beta * beta + c * dot(x, x)).sqrt() - beta) / c
            }
            Family::CustomTabulated { polygon } => polygon.support(x).0,
        }
    }

    fn closed_gradient(&self, x: &[f64]) -> Vec<f64> {
        match self.base.family() {
            Family::Euclidean => normalized(x),
            Family::Ellipse { inverse, .. } => {
                let ax = mat_vec(inverse, x);
                let h = dot(&ax, x).sqrt();
                scale(&ax, 1.0 / h)
            }
            Family::PNorm { p } => {
                let q = p / (p - 1.0);
                let h = pnorm_value(x, q);
                x.iter()
                    .map(|&v| v.signum() * (v.abs() / h).powf(q - 1.0))
                    .collect()
            }
            Family::Shifted { b } => {
                let beta = dot(b, x);
                let c = 1.0 - dot(b, b);
                let s = (beta * beta + c * dot(x, x)).sqrt();
                x.iter()
                    .zip(b)
                    .map(|(xi, bi)| ((beta * bi + c * xi) / s - bi) / c)
                    .collect()
            }
            Family::CustomTabulated { polygon } => polygon.support(x).1.to_vec(),
        }
    }

    /// Maximizes `<x, xi> / H(xi)` over the unit sphere. Returns the maximum
    /// and the maximizer `xi*`.
    pub fn support_argmax(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let objective = |xi: &[f64]| dot(x, xi) / self.base.value_unchecked(xi);
        if self.dim() == 2 {
            Ok(scan_circle(objective))
        } else {
            self.multistart_ascent(x)
        }
    }

    fn multistart_ascent(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let dim = self.dim();
        let mut starts = vec![normalized(x)];
        starts.extend(sphere_points(dim, MULTI_STARTS - 1));
        let results: Vec<Result<(f64, Vec<f64>)>> = starts
            .into_iter()
            .map(|s| projected_ascent(&self.base, x, s))
            .collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut diverged: Option<Error> = None;
        for r in results {
            match r {
                Ok(v) => {
                    if best.as_ref().is_none_or(|b| v.0 > b.0) {
                        best = Some(v);
                    }
                }
                Err(e) => diverged = Some(e),
            }
        }
        best.ok_or_else(|| {
            diverged.unwrap_or(Error::OptimizerDiverged {
                best_value: f64::NAN,
                best_iterate: vec![],
            })
        })
    }
}

/// 2D: angle scan followed by golden-section refinement of the best bracket.
fn scan_circle<F: Fn(&[f64]) -> f64>(f: F) -> (f64, Vec<f64>) {
    let g = |th: f64| f(&[th.cos(), th.sin()]);
    let step = 2.0 * std::f64::consts::PI / SCAN_POINTS as f64;
    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..SCAN_POINTS {
        let v = g(k as f64 * step);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = (best_k as f64 - 1.0) * step;
    let mut b = (best_k as f64 + 1.0) * step;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while b - a > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = g(d);
        }
    }
    let th = 0.5 * (a + b);
    let v = g(th);
    if v >= best_v {
        (v, vec![th.cos(), th.sin()])
    } else {
        let th = best_k as f64 * step;
        (best_v, vec![th.cos(), th.sin()])
    }
}

/// Projected gradient ascent of `<x, xi>/H(xi)` on the sphere with
/// backtracking line search.
fn projected_ascent(h: &AnisotropyNorm, x: &[f64], start: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let f = |xi: &[f64]| dot(x, xi) / h.value_unchecked(xi);
    let grad = |xi: &[f64]| {
        let hv = h.value_unchecked(xi);
        let gh = h.gradient_unchecked(xi);
        let s = dot(x, xi);
        let g: Vec<f64> = x.iter().zip(&gh).map(|(xv, gv)| xv / hv - s * gv / (hv * hv)).collect();
        // tangential part (the radial component vanishes by 0-homogeneity)
        let r = dot(&g, xi);
        axpy(&g, -r, xi)
    };
    let scale_x = norm(x);
    let mut xi = start;
    let mut fx = f(&xi);
    let mut alpha: f64 = 1.0;
    let mut stalled = 0usize;
    for _ in 0..ASCENT_MAX_ITERS {
        let g = grad(&xi);
        let gn = norm(&g);
        if !gn.is_finite() || !fx.is_finite() {
            return Err(Error::OptimizerDiverged {
                best_value: fx,
                best_iterate: xi,
            });
        }
        if gn <= ASCENT_TOL * scale_x {
            return Ok((fx, xi));
        }
        alpha = (alpha * 2.0).min(1e6);
        let mut accepted = false;
        while alpha * gn > 1e-18 {
            let cand = normalized(&axpy(&xi, alpha, &g));
            let fc = f(&cand);
            if fc >= fx + 1e-4 * alpha * gn * gn {
                stalled = if fc - fx <= 1e-15 * fx.abs() { stalled + 1 } else { 0 };
                xi = cand;
                fx = fc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted || stalled >= ASCENT_STALL {
            // no further ascent possible at machine precision
            return Ok((fx, xi));
        }
    }
    Err(Error::OptimizerDiverged {
        best_value: fx,
        best_iterate: xi,
    })
}

/// `L^N(B_1^{Ĥ0})` through the polar formula `(1/N) ∫_{S^{N-1}} Ĥ0(ω)^{-N} dσ`.
///
/// 2D and 3D: the kink-adapted [`sphere_rule`], refined until two levels
/// agree to `1e-14` or the finest level is reached. Higher: quasi–Monte Carlo
/// over 2^20 Halton points.
pub fn wulff_volume(gauge: &DualGauge) -> f64 {
    let dim = gauge.dim();
    let n = dim as i32;
    let kernel = |w: &[f64]| gauge.reversed_fast(w).powi(-n);
    match dim {
        2 | 3 => {
            let kinks = gauge.kinks();
            let top = if dim == 2 { 11 } else { 4 };
            let mut prev = f64::NAN;
            for level in 2..=top {
                let (cur, _) = sphere_sum(dim, &sphere_rule(dim, &kinks, level), &kernel);
                if (cur - prev).abs() <= 1e-14 * cur.abs() || level == top {
                    return cur / dim as f64;
                }
                prev = cur;
            }
            unreachable!()
        }
        _ => {
            let m = 1usize << 20;
            let chunk = 1usize << 12;
            let partial: Vec<f64> = (0..m / chunk)
                .into_par_iter()
                .map(|c| {
                    let vals: Vec<f64> = (0..chunk)
                        .map(|i| kernel(&halton_sphere_point(dim, (c * chunk + i + 1) as u64)))
                        .collect();
                    pairwise_sum(&vals)
                })
                .collect();
            sphere_area(dim) * pairwise_sum(&partial) / m as f64 / dim as f64
        }
    }
}

/// Directions on the unit sphere where `Ĥ0` is not smooth.
#[derive(Debug, Clone, PartialEq)]
pub enum Kinks {
    None,
    /// The coordinate hyperplanes `ω_i = 0`.
    Axes,
    /// Planar kink angles in `[0, 2π)`.
    Angles(Vec<f64>),
}

impl DualGauge {
    pub fn kinks(&self) -> Kinks {
        match self.base.family() {
            Family::PNorm { p } if *p != 2.0 => Kinks::Axes,
            Family::CustomTabulated { polygon } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                // Ĥ0(ω) = H0(-ω) switches vertex where -ω is an edge normal
                let mut a: Vec<f64> = polygon
                    .polar_vertices()
                    .iter()
                    .map(|v| (-v[1]).atan2(-v[0]).rem_euclid(two_pi))
                    .collect();
                a.sort_by(f64::total_cmp);
                Kinks::Angles(a)
            }
            _ => Kinks::None,
        }
    }
}

/// Endpoint-flattening map on `[0, 1]`: `S'(s) = (2/3)(1 - cos 2πs)^2`
/// vanishes to fourth order at both ends.
fn flatten(s: f64) -> (f64, f64) {
    let t = 2.0 * std::f64::consts::PI * s;
    let v = s - (2.0 / (3.0 * std::f64::consts::PI)) * t.sin() + (2.0 * t).sin() / (12.0 * std::f64::consts::PI);
    let c = 1.0 - t.cos();
    (v, 2.0 / 3.0 * c * c)
}

/// Angles and weights for `∫_0^{2π}`: uniform when smooth, otherwise `n`
/// nodes shared among the arcs between kinks, each arc flattened at its ends.
fn circle_rule(kinks: &[f64], n: usize) -> Vec<(f64, f64)> {
    let two_pi = 2.0 * std::f64::consts::PI;
    if kinks.is_empty() {
        return (0..n).map(|k| (two_pi * k as f64 / n as f64, two_pi / n as f64)).collect();
    }
    let mut out = Vec::with_capacity(n + 8 * kinks.len());
    for (i, &a) in kinks.iter().enumerate() {
        let b = if i + 1 < kinks.len() { kinks[i + 1] } else { kinks[0] + two_pi };
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let m = ((n as f64 * len / two_pi).round() as usize).max(8);
        for j in 1..m {
            let (v, dv) = flatten(j as f64 / m as f64);
            out.push((a + len * v, len * dv / m as f64));
        }
    }
    out
}

/// Nodes and weights on `S^{N-1}`, `N ∈ {2, 3}`.
///
/// 2D: `32 · 2^level` angles from [`circle_rule`]. 3D: `m = 8 · 2^level`
/// Gauss–Legendre nodes in `z = cos θ` and `2m` angles in `φ`; with kinks on
/// the coordinate planes the polar angle runs over each hemisphere through
/// the same endpoint flattening, since `sin θ` powers break smoothness at the poles.
pub(crate) fn sphere_rule(dim: usize, kinks: &Kinks, level: usize) -> Vec<([f64; 3], f64)> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let axes = [0.0, half_pi, 2.0 * half_pi, 3.0 * half_pi];
    let angles: &[f64] = match kinks {
        Kinks::None => &[],
        Kinks::Axes => &axes,
        Kinks::Angles(a) => a,
    };
    if dim == 2 {
        return circle_rule(angles, 32usize << level)
            .into_iter()
            .map(|(t, w)| ([t.cos(), t.sin(), 0.0], w))
            .collect();
    }
    let m = 8usize << level;
    let zs: Vec<(f64, f64)> = if matches!(kinks, Kinks::Axes) {
        // θ over each hemisphere, flattened at the pole and the equator
        let mut z = Vec::with_capacity(m);
        for j in 1..m / 2 {
            let (v, dv) = flatten(j as f64 / (m / 2) as f64);
            let th = half_pi * v;
            let w = half_pi * dv * th.sin() / (m / 2) as f64;
            z.push((th.cos(), w));
            z.push((-th.cos(), w));
        }
        z
    } else {
        let (z, w) = gauss_legendre(m);
        z.into_iter().zip(w).collect()
    };
    let phis = circle_rule(angles, 2 * m);
    let mut out = Vec::with_capacity(zs.len() * phis.len());
    for &(z, wz) in &zs {
        let s = (1.0 - z * z).max(0.0).sqrt();
        for &(phi, wp) in &phis {
            out.push(([s * phi.cos(), s * phi.sin(), z], wz * wp));
        }
    }
    out
}

/// `(∑ w f, ∑ w |f|)` over a [`sphere_rule`] for `S^{dim-1}`.
pub(crate) fn sphere_sum<F: Fn(&[f64]) -> f64 + Sync>(dim: usize, rule: &[([f64; 3], f64)], f: &F) -> (f64, f64) {
    let (a, b): (Vec<f64>, Vec<f64>) = rule
        .par_iter()
        .map(|(p, w)| {
            let v = w * f(&p[..dim]);
            (v, v.abs())
        })
        .unzip();
    (pairwise_sum(&a), pairwise_sum(&b))
}

/// Rejection Monte Carlo estimate of `L^N(B_1^{Ĥ0})` inside the tight box
/// `[-H(e_i), H(-e_i)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloVolume {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

pub fn wulff_volume_monte_carlo(gauge: &DualGauge, samples: usize, seed: u64) -> MonteCarloVolume {
    use rand::Rng;
    let dim = gauge.dim();
    let h = gauge.base();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            let up = h.value_unchecked(&neg(&e));
            let down = h.value_unchecked(&e);
            (-down * (1.0 + 1e-9), up * (1.0 + 1e-9))
        })
        .unzip();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    const PARTS: usize = 64;
    let per = samples.div_ceil(PARTS);
    let hits: u64 = (0..PARTS)
        .into_par_iter()
        .map(|part| {
            let mut rng = stream_rng(seed, part as u64);
            let mut x = vec![0.0; dim];
            let mut count = 0u64;
            for _ in 0..per {
                for i in 0..dim {
                    x[i] = rng.random_range(lo[i]..hi[i]);
                }
                if norm(&x) > 0.0 && gauge.reversed_fast(&x) < 1.0 {
                    count += 1;
                }
            }
            count
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .sum();
    let n = (per * PARTS) as f64;
    let frac = hits as f64 / n;
    MonteCarloVolume {
        value: box_vol * frac,
        std_error: box_vol * (frac * (1.0 - frac) / n).sqrt(),
        samples: per * PARTS,
        seed,
    }
}

/// The Wulff shape `B_r^{Ĥ0}(c) = { x : Ĥ0(x - c) < r }`.
#[derive(Debug, Clone, PartialEq)]
pub struct WulffShape {
    pub center: Vec<f64>,
    pub radius: f64,
    pub gauge: DualGauge,
}

impl WulffShape {
    pub fn new(center: Vec<f64>, radius: f64, gauge: DualGauge) -> Result<Self> {
        if center.len() != gauge.dim() {
            return Err(Error::DimensionMismatch {
                expected: gauge.dim(),
                got: center.len(),
            });
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::BadParameter(format!("Wulff radius must be positive, got {radius}")));
        }
        Ok(Self {
            center,
            radius,
            gauge,
        })
    }

    pub fn dim(&self) -> usize {
        self.gauge.dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d = sub(x, &self.center);
        norm(&d) == 0.0 || self.gauge.reversed_fast(&d) < self.radius
    }

    /// `r^N · L^N(B_1^{Ĥ0})` given the unit volume.
    pub fn volume_from_unit(&self, unit_volume: f64) -> f64 {
        self.radius.powi(self.dim() as i32) * unit_volume
    }

    pub fn volume(&self) -> f64 {
        self.volume_from_unit(wulff_volume(&self.gauge))
    }

    /// Boundary point in euclidean direction `omega` (unit vector).
    pub fn boundary_point(&self, omega: &[f64]) -> Vec<f64> {
        let rho = self.gauge.reversed_fast(omega);
        axpy(&self.center, self.radius / rho, omega)
    }

    /// Boundary point, unit outer normal and surface element for the
    /// euclidean direction `omega`: with `ρ = Ĥ0(ω)` the point is
    /// `c + r ω / ρ` and `dH^{N-1} = r^{N-1} |∇Ĥ0(ω)| ρ^{-N} dσ(ω)`, which
    /// follows from the cone volume `<x - c, ν> dH^{N-1} = (r/ρ)^N dσ`.
    pub fn surface_sample(&self, omega: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let rho = self.gauge.reversed_fast(omega);
        let g = self
            .gauge
            .reversed_gradient(omega)
            .unwrap_or_else(|_| vec![f64::NAN; omega.len()]);
        let gn = norm(&g);
        let n = self.dim() as i32;
        (
            axpy(&self.center, self.radius / rho, omega),
            scale(&g, 1.0 / gn),
            self.radius.powi(n - 1) * gn / rho.powi(n),
        )
    }

    /// Unit outer normal at a boundary point.
    pub fn outer_normal(&self, x: &[f64]) -> Vec<f64> {
        let g = self
            .gauge
            .reversed_gradient(&sub(x, &self.center))
            .unwrap_or_else(|_| vec![f64::NAN; x.len()]);
        normalized(&g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Relative change between the last two refinement levels.
    pub achieved: f64,
    pub nodes: usize,
}

/// `∫_{∂B_r^{Ĥ0}(c)} g(x, ν(x)) dH^{N-1}` for `N ∈ {2, 3}`.
///
/// The boundary is parametrized by `ω ↦ c + r ω / Ĥ0(ω)` with the exact
/// surface element of [`WulffShape::surface_sample`] on the kink-adapted
/// [`sphere_rule`]. Resolution doubles until successive values agree to `1e-10`
/// relative to `∫|g|`, up to `2^20` nodes.
pub fn boundary_quadrature<G>(shape: &WulffShape, integrand: G) -> Result<QuadratureEstimate>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    match shape.dim() {
        2 | 3 => boundary_rule(shape, &integrand),
        d => Err(Error::BadParameter(format!(
            "boundary quadrature supports N = 2 or 3, got {d}"
        ))),
    }
}

fn boundary_rule<G>(shape: &WulffShape, integrand: &G) -> Result<QuadratureEstimate>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let dim = shape.dim();
    let kinks = shape.gauge.kinks();
    let f = |w: &[f64]| {
        let (x, nu, jac) = shape.surface_sample(w);
        integrand(&x, &nu) * jac
    };
    let mut level = 1;
    let mut prev = sphere_sum(dim, &sphere_rule(dim, &kinks, level), &f).0;
    loop {
        level += 1;
        let rule = sphere_rule(dim, &kinks, level);
        let (cur, abs_cur) = sphere_sum(dim, &rule, &f);
        let scale_ref = cur.abs().max(abs_cur).max(f64::MIN_POSITIVE);
        let achieved = (cur - prev).abs() / scale_ref;
        if achieved <= BOUNDARY_RTOL {
            return Ok(QuadratureEstimate {
                value: cur,
                achieved,
                nodes: rule.len(),
            });
        }
        if 4 * rule.len() > BOUNDARY_MAX_NODES {
            return Err(Error::NoConvergence {
                estimate: cur,
                achieved,
            });
        }
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn shifted() -> DualGauge {
        DualGauge::new(AnisotropyNorm::shifted(vec![0.5, 0.0]).unwrap())
    }

    #[test]
    fn kinked_rules_integrate_abs_powers() {
        use statrs::function::gamma::gamma;
        // ∫ |cos θ|^{3/2} over the circle
        let exact = 2.0 * PI.sqrt() * gamma(1.25) / gamma(1.75);
        let rule = sphere_rule(2, &Kinks::Axes, 4);
        let (v, _) = sphere_sum(2, &rule, &|w: &[f64]| w[0].abs().powf(1.5));
        assert_abs_diff_eq!(v, exact, epsilon = 1e-13);
        // sphere area and ∫ |z|^{1/2} = 4π/3 on S^2
        let rule = sphere_rule(3, &Kinks::Axes, 4);
        let (area, _) = sphere_sum(3, &rule, &|_: &[f64]| 1.0);
        assert_abs_diff_eq!(area, 4.0 * PI, epsilon = 1e-12);
        let (v, _) = sphere_sum(3, &rule, &|w: &[f64]| w[2].abs().sqrt());
        assert_abs_diff_eq!(v, 4.0 * PI / 1.5, epsilon = 1e-10);
    }

    #[test]
    fn polygon_kinks_follow_wulff_vertices() {
        let h = AnisotropyNorm::custom_tabulated(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
        let Kinks::Angles(a) = DualGauge::new(h).kinks() else {
            panic!("expected kink angles")
        };
        // the dual of the ℓ1 diamond is ℓ∞, kinked on the diagonals
        let expected: Vec<f64> = (0..4).map(|k| PI / 4.0 + k as f64 * PI / 2.0).collect();
        for (x, y) in a.iter().zip(&expected) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn dual_value_examples() {
        let e = DualGauge::new(AnisotropyNorm::euclidean(2).unwrap());
        assert_abs_diff_eq!(e.value(&[3.0, 4.0]).unwrap(), 5.0, epsilon = 1e-15);
        let a = DualGauge::new(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap());
        assert_abs_diff_eq!(a.value(&[1.0, 0.0]).unwrap(), 0.5, epsilon = 1e-15);
        let s = shifted();
        assert_abs_diff_eq!(s.value(&[1.0, 0.0]).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.value(&[-1.0, 0.0]).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn reversed_dual_examples() {
        let e = DualGauge::new(AnisotropyNorm::euclidean(2).unwrap());
        assert_abs_diff_eq!(e.reversed_value(&[3.0, 4.0]).unwrap(), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(shifted().reversed_value(&[1.0, 0.0]).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(shifted().reversed_value(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(shifted().value(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn grad_dual_examples() {
        let e = DualGauge::new(AnisotropyNorm::euclidean(2).unwrap());
        let g = e.gradient(&[0.0, 2.0]).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-15);
        let a = DualGauge::new(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap());
        let g = a.gradient(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-15);
        assert!(matches!(e.gradient(&[0.0, 0.0]), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn optimizer_matches_shifted_closed_form_2d() {
        let s = shifted();
        let o = DualGauge::optimized(s.base().clone());
        for x in [[1.0, 0.0], [-1.0, 0.0], [0.3, -0.7], [-2.0, 1.5]] {
            let a = s.value(&x).unwrap();
            let b = o.value(&x).unwrap();
            assert!((a - b).abs() / a < 1e-12, "{x:?}: {a} vs {b}");
        }
    }

    #[test]
    fn optimizer_matches_ellipse_closed_form_3d() {
        let h = AnisotropyNorm::ellipse_diag(&[4.0, 1.0, 2.0]).unwrap();
        let c = DualGauge::new(h.clone());
        let o = DualGauge::optimized(h);
        for x in [[1.0, 0.0, 0.0], [0.2, -0.5, 0.9]] {
            let a = c.value(&x).unwrap();
            let b = o.value(&x).unwrap();
            assert!((a - b).abs() / a < 1e-10, "{a} vs {b}");
            let ga = c.gradient(&x).unwrap();
            let gb = o.gradient(&x).unwrap();
            for (u, v) in ga.iter().zip(&gb) {
                assert!((u - v).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn wulff_volume_examples() {
        let e = DualGauge::new(AnisotropyNorm::euclidean(2).unwrap());
        assert_abs_diff_eq!(wulff_volume(&e), PI, epsilon = 1e-10);
        let a = DualGauge::new(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap());
        assert_abs_diff_eq!(wulff_volume(&a), 2.0 * PI, epsilon = 1e-10);
        let e3 = DualGauge::new(AnisotropyNorm::euclidean(3).unwrap());
        assert_abs_diff_eq!(wulff_volume(&e3), 4.0 * PI / 3.0, epsilon = 1e-12);
        let e4 = DualGauge::new(AnisotropyNorm::euclidean(4).unwrap());
        assert_abs_diff_eq!(wulff_volume(&e4), PI * PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_square_dual_is_l1() {
        let sq = AnisotropyNorm::custom_tabulated(&[[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]])
            .unwrap();
        let d = DualGauge::new(sq);
        assert_abs_diff_eq!(d.value(&[0.5, -2.0]).unwrap(), 2.5, epsilon = 1e-15);
        // the Wulff shape of the max-norm is the l1 diamond with area 2
        assert_abs_diff_eq!(wulff_volume(&d), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn wulff_membership_and_boundary() {
        let s = WulffShape::new(vec![1.0, 2.0], 3.0, shifted()).unwrap();
        assert!(s.contains(&[1.0, 2.0]));
        let p = s.boundary_point(&[1.0, 0.0]);
        assert_abs_diff_eq!(s.gauge.reversed_value(&sub(&p, &s.center)).unwrap(), 3.0, epsilon = 1e-14);
        assert!(s.contains(&axpy(&s.center, 0.999, &sub(&p, &s.center))));
        assert!(!s.contains(&axpy(&s.center, 1.001, &sub(&p, &s.center))));
        assert!(WulffShape::new(vec![0.0], 1.0, shifted()).is_err());
        assert!(WulffShape::new(vec![0.0, 0.0], 0.0, shifted()).is_err());
    }

    #[test]
    fn circle_length() {
        let e = DualGauge::new(AnisotropyNorm::euclidean(2).unwrap());
        let s = WulffShape::new(vec![0.0, 0.0], 1.0, e).unwrap();
        let q = boundary_quadrature(&s, |_, _| 1.0).unwrap();
        assert_abs_diff_eq!(q.value, 2.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn divergence_theorem_on_position_field() {
        let shape = WulffShape::new(vec![0.2, -0.1], 1.7, shifted()).unwrap();
        let c = shape.center.clone();
        let q = boundary_quadrature(&shape, |x, nu| dot(&sub(x, &c), nu)).unwrap();
        let vol = shape.volume();
        assert!((q.value - 2.0 * vol).abs() / (2.0 * vol) < 1e-7);
    }

    #[test]
    fn sphere_area_3d() {
        let e = DualGauge::new(AnisotropyNorm::euclidean(3).unwrap());
        let s = WulffShape::new(vec![0.0; 3], 2.0, e).unwrap();
        let q = boundary_quadrature(&s, |_, _| 1.0).unwrap();
        assert!((q.value - 16.0 * PI).abs() / (16.0 * PI) < 1e-8);
    }

    #[test]
    fn high_dimension_boundary_is_rejected() {
        let e = DualGauge::new(AnisotropyNorm::euclidean(4).unwrap());
        let s = WulffShape::new(vec![0.0; 4], 1.0, e).unwrap();
        assert!(boundary_quadrature(&s, |_, _| 1.0).is_err());
    }

    #[test]
    fn monte_carlo_volume_is_seed_stable() {
        let a = DualGauge::new(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap());
        let v1 = wulff_volume_monte_carlo(&a, 1 << 16, 11);
        let v2 = wulff_volume_monte_carlo(&a, 1 << 16, 11);
        assert_eq!(v1, v2);
        assert!((v1.value - 2.0 * PI).abs() < 4.0 * v1.std_error);
    }
}
