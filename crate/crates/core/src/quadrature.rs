//! Integration primitives: adaptive Gauss–Kronrod on intervals and on
//! `[0, ∞)`, importance-sampled Monte Carlo for the total mass, and nested
//! quadrature over Wulff balls.

use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual_geometry::{sphere_rule, sphere_sum, Kinks, QuadratureEstimate, WulffShape};
use crate::error::{Error, Result};
use crate::linalg::{axpy, pairwise_sum};
use crate::sampling::{random_unit_vector, sphere_area, stream_rng};
use crate::solution::LiouvilleSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub relative_tolerance: OrderedTol,
    pub max_subdivisions: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

/// An `f64` tolerance with bitwise equality, so configs can be compared and
/// hashed into report snapshots.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderedTol(pub f64);

impl PartialEq for OrderedTol {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for OrderedTol {}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            relative_tolerance: OrderedTol(1e-9),
            max_subdivisions: 1 << 15,
            mc_samples: 1 << 20,
            seed: 20_231_019,
        }
    }
}

impl QuadratureConfig {
    pub fn rtol(&self) -> f64 {
        self.relative_tolerance.0
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.relative_tolerance = OrderedTol(rtol);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol() > 0.0) {
            return Err(Error::BadParameter(format!(
                "relative tolerance must be positive, got {}",
                self.rtol()
            )));
        }
        if self.mc_samples < 1 << 10 {
            return Err(Error::BadParameter(format!(
                "Monte Carlo needs at least 1024 samples, got {}",
                self.mc_samples
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::BadParameter("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and `|K15 - G7|` on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

/// Globally adaptive Gauss–Kronrod (7/15) on `[a, b]`: the segment with the
/// largest error estimate is bisected until the summed estimate drops below
/// `rtol · |value|`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rtol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total_v = v;
    let mut total_e = e;
    for _ in 0..max_subdivisions {
        if total_e <= rtol * total_v.abs() || total_e <= f64::MIN_POSITIVE {
            break;
        }
        let seg = heap.pop().expect("non-empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        // re-sum to avoid drift from incremental updates
        let mut vals: Vec<(f64, f64, f64)> = heap.iter().map(|s| (s.a, s.value, s.error)).collect();
        vals.sort_by(|x, y| x.0.total_cmp(&y.0));
        total_v = pairwise_sum(&vals.iter().map(|v| v.1).collect::<Vec<_>>());
        total_e = pairwise_sum(&vals.iter().map(|v| v.2).collect::<Vec<_>>());
    }
    if total_e <= rtol * total_v.abs() || total_e <= f64::MIN_POSITIVE {
        Ok(Integral {
            value: total_v,
            error_estimate: total_e,
        })
    } else {
        Err(Error::ToleranceNotMet {
            value: total_v,
            error_estimate: total_e,
        })
    }
}

/// `∫_0^∞ f(ρ) dρ` through `ρ = s/(1-s)` on `[0, 1)`.
pub fn radial_improper<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<Integral> {
    let g = |s: f64| {
        let one_minus = 1.0 - s;
        let rho = s / one_minus;
        let v = f(rho) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, cfg.rtol(), cfg.max_subdivisions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

const MC_PARTITIONS: usize = 64;

/// Importance-sampled estimate of `∫_{R^N} e^u`.
///
/// Directions are uniform on the sphere; the distance `r = |x - x0|` has
/// CDF `1 - (1 + (λ r)^N)^{-1/(N-1)}`, whose tail density `r^{-1-N/(N-1)}`
/// times `r^{1-N}` decays like `r^{-N²/(N-1)}`, the known decay of `e^u`.
/// The weight `e^u / q` is therefore bounded.
pub fn monte_carlo_mass(sol: &LiouvilleSolution, cfg: &QuadratureConfig) -> Result<MonteCarloEstimate> {
    cfg.validate()?;
    let dim = sol.dim();
    if !(2..=6).contains(&dim) {
        return Err(Error::BadParameter(format!("Monte Carlo mass supports N in 2..=6, got {dim}")));
    }
    let n = dim as f64;
    let s = 1.0 / sol.lambda();
    // log of N / ((N-1) s^N |S^{N-1}|)
    let log_q0 = (n / ((n - 1.0) * sphere_area(dim))).ln() - n * s.ln();
    let per = cfg.mc_samples.div_ceil(MC_PARTITIONS);
    let sums: Vec<(f64, f64)> = (0..MC_PARTITIONS)
        .into_par_iter()
        .map(|part| {
            use rand::Rng;
            let mut rng = stream_rng(cfg.seed, part as u64);
            let mut w = Vec::with_capacity(per);
            let mut w2 = Vec::with_capacity(per);
            for _ in 0..per {
                let u: f64 = rng.random();
                let wn = (1.0 - u).powf(-(n - 1.0)) - 1.0;
                let radius = s * wn.powf(1.0 / n);
                let dir = random_unit_vector(&mut rng, dim);
                let x = axpy(sol.center(), radius, &dir);
                let log_q = log_q0 - n / (n - 1.0) * wn.ln_1p();
                let weight = (sol.u_value(&x) - log_q).exp();
                w.push(weight);
                w2.push(weight * weight);
            }
            (pairwise_sum(&w), pairwise_sum(&w2))
        })
        .collect();
    finish_mc(&sums, per * MC_PARTITIONS, 1.0, cfg.seed)
}

/// Uniform-in-ball estimate of `∫_{|x - x0| < R} e^u`, the cross-validation
/// proposal that uses no decay information.
pub fn monte_carlo_ball_mass(
    sol: &LiouvilleSolution,
    radius: f64,
    cfg: &QuadratureConfig,
) -> Result<MonteCarloEstimate> {
    cfg.validate()?;
    let dim = sol.dim();
    let n = dim as f64;
    let ball = sphere_area(dim) / n * radius.powi(dim as i32);
    let per = cfg.mc_samples.div_ceil(MC_PARTITIONS);
    let sums: Vec<(f64, f64)> = (0..MC_PARTITIONS)
        .into_par_iter()
        .map(|part| {
            use rand::Rng;
            let mut rng = stream_rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, part as u64);
            let mut w = Vec::with_capacity(per);
            let mut w2 = Vec::with_capacity(per);
            for _ in 0..per {
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n);
                let dir = random_unit_vector(&mut rng, dim);
                let v = sol.u_value(&axpy(sol.center(), r, &dir)).exp();
                w.push(v);
                w2.push(v * v);
            }
            (pairwise_sum(&w), pairwise_sum(&w2))
        })
        .collect();
    finish_mc(&sums, per * MC_PARTITIONS, ball, cfg.seed)
}

fn finish_mc(sums: &[(f64, f64)], total: usize, factor: f64, seed: u64) -> Result<MonteCarloEstimate> {
    let s1 = pairwise_sum(&sums.iter().map(|v| v.0).collect::<Vec<_>>());
    let s2 = pairwise_sum(&sums.iter().map(|v| v.1).collect::<Vec<_>>());
    let m = total as f64;
    let mean = s1 / m;
    let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(MonteCarloEstimate {
        value: factor * mean,
        std_error: factor * (var / m).sqrt(),
        samples: total,
        seed,
    })
}

/// `∫_{S^{N-1}} g dσ` for `N ∈ {2, 3}` on the [`sphere_rule`] for `kinks`,
/// doubling until successive values agree to `rtol` (relative to `∫|g|`).
pub fn sphere_integral<G>(dim: usize, kinks: &Kinks, g: &G, rtol: f64) -> Result<QuadratureEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let level = |k: usize| -> (f64, f64, usize) {
        let rule = sphere_rule(dim, kinks, k);
        let (v, a) = sphere_sum(dim, &rule, g);
        (v, a, rule.len())
    };
    let max_level = if dim == 2 { 10 } else { 5 };
    let (mut prev, _, _) = level(0);
    let mut achieved = f64::INFINITY;
    for k in 1..=max_level {
        let (cur, abs, nodes) = level(k);
        let scale_ref = cur.abs().max(abs).max(f64::MIN_POSITIVE);
        achieved = (cur - prev).abs() / scale_ref;
        if achieved <= rtol {
            return Ok(QuadratureEstimate {
                value: cur,
                achieved,
                nodes,
            });
        }
        prev = cur;
    }
    Err(Error::ToleranceNotMet {
        value: prev,
        error_estimate: achieved,
    })
}

/// `∫_{B_r^{Ĥ0}(c)} f` in Wulff-polar coordinates
/// `x = c + s ω / Ĥ0(ω)`, `dx = Ĥ0(ω)^{-N} s^{N-1} ds dσ(ω)`: adaptive
/// Gauss–Kronrod in `s ∈ [0, r]` nested in a doubling sphere rule.
pub fn wulff_interior<F>(shape: &WulffShape, integrand: F, cfg: &QuadratureConfig) -> Result<QuadratureEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = shape.dim();
    if !(2..=3).contains(&dim) {
        return Err(Error::BadParameter(format!("Wulff interior quadrature supports N = 2 or 3, got {dim}")));
    }
    let n = dim as i32;
    let inner_rtol = (cfg.rtol() * 1e-2).max(1e-13);
    let failure = std::sync::Mutex::new(None);
    let g = |omega: &[f64]| -> f64 {
        let rho = shape.gauge.reversed_fast(omega);
        let dir: Vec<f64> = omega.iter().map(|w| w / rho).collect();
        let radial = |s: f64| integrand(&axpy(&shape.center, s, &dir)) * s.powi(n - 1);
        match integrate(radial, 0.0, shape.radius, inner_rtol, cfg.max_subdivisions) {
            Ok(v) => v.value * rho.powi(-n),
            Err(Error::ToleranceNotMet { value, error_estimate }) => {
                // tiny radial integrals can stall on absolute noise; accept them
                // when the estimate is negligible
                if error_estimate <= 1e-15 * value.abs().max(1.0) {
                    value * rho.powi(-n)
                } else {
                    *failure.lock().expect("lock") = Some(Error::ToleranceNotMet { value, error_estimate });
                    value * rho.powi(-n)
                }
            }
            Err(e) => {
                *failure.lock().expect("lock") = Some(e);
                f64::NAN
            }
        }
    };
    let est = sphere_integral(dim, &shape.gauge.kinks(), &g, cfg.rtol())?;
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok(est)
}
