//! Hand-checkable reference values for the explicit family and its geometry.

use std::f64::consts::PI;

use finsler_core::anisotropy::AnisotropyNorm;
use finsler_core::dual_geometry::wulff_volume;
use finsler_core::identities::{balance, geometry};
use finsler_core::operator::{finsler_p_laplacian, flux_of_gradient, FluxField, HalfSquaredNorm};
use finsler_core::quadrature::QuadratureConfig;
use finsler_core::{DualGauge, LiouvilleSolution};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

fn euclid(dim: usize, lambda: f64) -> LiouvilleSolution {
    LiouvilleSolution::new(DualGauge::new(AnisotropyNorm::euclidean(dim).unwrap()), lambda, vec![0.0; dim]).unwrap()
}

#[test]
fn planar_values_and_gradient() {
    let s = euclid(2, 1.0);
    assert!(close(s.u_value(&[0.0, 0.0]), 8f64.ln(), 1e-15));
    assert!(close(s.u_value(&[1.0, 0.0]), 2f64.ln(), 1e-15));
    let g = s.u_gradient(&[1.0, 0.0]);
    assert!(close(g[0], -2.0, 1e-14) && g[1].abs() < 1e-15);
}

#[test]
fn three_dimensional_peak() {
    assert!(close(euclid(3, 1.0).u_value(&[0.0; 3]), 60.75f64.ln(), 1e-15));
}

#[test]
fn mass_targets() {
    assert!(close(euclid(2, 1.0).mass_target(), 8.0 * PI, 1e-12));
    assert!(close(euclid(3, 1.0).mass_target(), 60.75 * 4.0 * PI / 3.0, 1e-12));
    let e = LiouvilleSolution::new(
        DualGauge::new(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap()),
        1.0,
        vec![0.0, 0.0],
    )
    .unwrap();
    assert!(close(e.mass_target(), 16.0 * PI, 1e-9));
}

#[test]
fn planar_level_set_at_log_two() {
    let s = euclid(2, 1.0);
    let t = 2f64.ln();
    assert!(close(s.level_radius(t).unwrap(), 1.0, 1e-14));
    assert!(close(s.level_mass(t).unwrap(), 4.0 * PI, 1e-13));
    let (m, split) = balance::wulff_pohozaev_sides(&s, t).unwrap();
    assert!(close(split, m, 1e-12));
}

#[test]
fn dual_values() {
    let e = DualGauge::new(AnisotropyNorm::euclidean(2).unwrap());
    assert!(close(e.value(&[3.0, 4.0]).unwrap(), 5.0, 1e-15));
    let a = DualGauge::new(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap());
    assert!(close(a.value(&[1.0, 0.0]).unwrap(), 0.5, 1e-15));
    let s = DualGauge::new(AnisotropyNorm::shifted(vec![0.5, 0.0]).unwrap());
    assert!(close(s.value(&[1.0, 0.0]).unwrap(), 2.0 / 3.0, 1e-15));
    assert!(close(s.reversed_value(&[1.0, 0.0]).unwrap(), 2.0, 1e-15));
    let g = e.gradient(&[0.0, 2.0]).unwrap();
    assert!(g[0].abs() < 1e-16 && close(g[1], 1.0, 1e-15));
}

#[test]
fn unit_wulff_volumes() {
    let v = |h: AnisotropyNorm| wulff_volume(&DualGauge::new(h));
    assert!((v(AnisotropyNorm::euclidean(2).unwrap()) - PI).abs() <= 1e-10);
    assert!((v(AnisotropyNorm::euclidean(4).unwrap()) - PI * PI / 2.0).abs() <= 1e-10);
    assert!(close(v(AnisotropyNorm::ellipse_diag(&[4.0, 1.0]).unwrap()), 2.0 * PI, 1e-12));
    assert!(close(v(AnisotropyNorm::shifted(vec![0.3, 0.0, 0.0]).unwrap()), 4.0 * PI / 3.0, 1e-12));
    // dual of the ℓ3 gauge is ℓ_{3/2}: volume 4 Γ(5/3)² / Γ(7/3)
    let p = v(AnisotropyNorm::pnorm(2, 3.0).unwrap());
    let exact = geometry::closed_form_wulff_volume(&AnisotropyNorm::pnorm(2, 3.0).unwrap()).unwrap();
    assert!(close(p, exact, 1e-12));
}

#[test]
fn euclidean_ellipticity_constants() {
    let e = AnisotropyNorm::euclidean(3).unwrap().check_uniform_ellipticity(200).unwrap();
    assert!(close(e.lambda_min, 2.0, 1e-12) && close(e.lambda_max, 2.0, 1e-12) && e.verdict);
}

#[test]
fn euclidean_fluxes() {
    let h = AnisotropyNorm::euclidean(3).unwrap();
    let g = [0.3, -1.2, 0.4];
    let f2 = flux_of_gradient(&h, 2.0, &g);
    let f3 = flux_of_gradient(&h, 3.0, &g);
    let len = 1.3;
    for i in 0..3 {
        assert!(close(f2[i], g[i], 1e-14));
        assert!(close(f3[i], len * g[i], 1e-14));
    }
}

#[test]
fn laplacian_of_half_square() {
    let h = AnisotropyNorm::euclidean(2).unwrap();
    let field = HalfSquaredNorm { dim: 2 };
    let flux = FluxField::new(&h, 2.0, &field).unwrap();
    let lap = finsler_p_laplacian(&flux, &[0.7, -0.4], 1e-3).unwrap();
    assert!(close(lap.richardson, 2.0, 1e-6));
}

#[test]
fn planar_solution_satisfies_equation() {
    let s = euclid(2, 1.0);
    let h = s.gauge().base().clone();
    let flux = FluxField::new(&h, 2.0, &s).unwrap();
    let lap = finsler_p_laplacian(&flux, &[1.0, 0.0], 1e-4).unwrap();
    assert!(close(-lap.richardson, 2.0, 1e-5));
}

#[test]
fn circle_coarea() {
    let s = euclid(2, 1.0);
    let t = s.t0() - 1.0;
    let c = balance::coarea_terms(&s, t, 1e-3).unwrap();
    let r = s.level_radius(t).unwrap();
    let grad = s.grad_h_of_rho(r);
    assert!(close(c.inverse_gradient, 2.0 * PI * r / grad, 1e-10));
    assert!(close(c.measure_derivative, c.inverse_gradient, 1e-5));
}

#[test]
fn square_and_disc_isoperimetric_ratios() {
    let h = AnisotropyNorm::euclidean(2).unwrap();
    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let q = geometry::polygon_isoperimetric_ratio(&square, &h, PI).unwrap();
    assert!(close(q, 2.0 / PI.sqrt(), 1e-14));
    let disc = finsler_core::WulffShape::new(vec![0.0, 0.0], 1.0, DualGauge::new(h)).unwrap();
    assert!(close(geometry::wulff_isoperimetric_ratio(&disc, PI).unwrap(), 1.0, 1e-10));
}

#[test]
fn flux_balance_matches_level_mass() {
    let s = LiouvilleSolution::new(
        DualGauge::new(AnisotropyNorm::shifted(vec![0.3, 0.0]).unwrap()),
        2.0,
        vec![0.5, -0.5],
    )
    .unwrap();
    let fb = balance::flux_balance(&s, 0.8, &QuadratureConfig::default()).unwrap();
    assert!(close(fb.boundary, fb.closed_form, 1e-8));
    assert!(close(fb.interior, fb.closed_form, 1e-8));
}
