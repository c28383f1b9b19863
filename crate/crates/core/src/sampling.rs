//! Deterministic point sets on the unit sphere, seeded random streams and
//! Gauss–Legendre rules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::linalg::{norm, scale};

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base` (one Halton coordinate).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Quasi-uniform points on `S^{dim-1}`.
///
/// 2D: equally spaced angles starting at 0. 3D: Fibonacci lattice.
/// Higher: Halton points pushed through the inverse normal CDF and
/// normalized.
pub fn sphere_points(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => (1..=n as u64).map(|k| halton_sphere_point(dim, k)).collect(),
    }
}

/// The `k`-th Halton point (`k >= 1`) mapped to `S^{dim-1}` through the
/// inverse normal CDF.
pub fn halton_sphere_point(dim: usize, k: u64) -> Vec<f64> {
    let gauss = Normal::standard();
    let v: Vec<f64> = (0..dim)
        .map(|j| gauss.inverse_cdf(halton(k, PRIMES[j])))
        .collect();
    scale(&v, 1.0 / norm(&v))
}

/// Counter-based generator for `(seed, stream)`; distinct streams never
/// overlap, so partitions can be drawn in parallel and reduced in a fixed
/// order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-8 {
            return scale(&v, 1.0 / n);
        }
    }
}

/// Surface area of `S^{dim-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2), via the recursion |S^{n+1}| = 2 pi |S^{n-1}| / n
    let (mut area, mut n) = if dim % 2 == 0 { (2.0 * PI, 2) } else { (4.0 * PI, 3) };
    while n < dim {
        area *= 2.0 * PI / n as f64;
        n += 2;
    }
    area
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_order_has_center_node() {
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-15);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_area_known_values() {
        use std::f64::consts::PI;
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_points_are_unit() {
        for dim in 2..=5 {
            for p in sphere_points(dim, 50) {
                assert!((norm(&p) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, 0).random();
        let b: u64 = stream_rng(7, 0).random();
        let c: u64 = stream_rng(7, 1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
