mod common;

use common::{c, gaussian, phi_h3, H3};
use num_complex::Complex64;
use proptest::prelude::*;
use radial_chaos::convolution::*;
use radial_chaos::model::{lp_norm_radial, RadialFunction};
use radial_chaos::transform::{relative_l2, spherical_transform, transform_on_grid, translate_radial};
use radial_chaos::Error;

fn smooth(width: f64, shift: f64) -> RadialFunction {
    RadialFunction::from_real_fn(&H3, "smooth", move |r| (-(r / width).powi(2)).exp() * (1.0 + shift * r * r))
}

fn sup_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn approximate_identity_converges() {
    let f = gaussian(&H3, 1.0);
    let mut last = f64::INFINITY;
    for w in APPROXIMATE_IDENTITY_WIDTHS {
        let g = approximate_identity(&H3, w).unwrap();
        let fg = convolve_radial(&H3, &f, &g).unwrap();
        let diff: Vec<Complex64> = fg.values.iter().zip(&f.values).map(|(a, b)| a - b).collect();
        let d = lp_norm_radial(&H3, &RadialFunction::new(H3.grid.clone(), diff, "d").unwrap(), 2.0).unwrap();
        assert!(d < last, "width {w}: {d} after {last}");
        last = d;
    }
}

#[test]
fn zero_convolves_to_zero() {
    let z = RadialFunction::zeros(&H3, "0");
    let out = convolve_radial(&H3, &z, &gaussian(&H3, 1.0)).unwrap();
    assert!(out.values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn transform_of_convolution_is_the_product() {
    let f = gaussian(&H3, 1.0);
    let g = smooth(0.8, 0.3);
    let fg = convolve_radial(&H3, &f, &g).unwrap();
    let l = [c(1.0, 0.0)];
    let a = spherical_transform(&H3, &fg, &l).unwrap().values[0];
    let b = spherical_transform(&H3, &f, &l).unwrap().values[0] * spherical_transform(&H3, &g, &l).unwrap().values[0];
    assert!((a - b).norm() < 1e-6);
}

#[test]
fn direct_and_fourier_convolution_agree() {
    let f = gaussian(&H3, 1.0);
    let g = RadialFunction::from_real_fn(&H3, "e2", |r| (-2.0 * r).exp());
    let fg = convolve_radial(&H3, &f, &g).unwrap();
    let pts: Vec<f64> = (0..10).map(|i| 0.4 * i as f64).collect();
    let direct = convolve_direct(&H3, ConvolutionInput::Radial(&f), &g, &pts).unwrap();
    let fourier: Vec<Complex64> = pts.iter().map(|&r| fg.eval(r)).collect();
    assert!(sup_rel(&direct, &fourier) < 1e-2);
}

#[test]
fn narrow_bump_reproduces_the_function() {
    let f = gaussian(&H3, 1.0);
    let g = approximate_identity(&H3, 0.05).unwrap();
    let pts = [0.0, 0.5, 1.0, 1.5];
    let out = convolve_direct(&H3, ConvolutionInput::Radial(&f), &g, &pts).unwrap();
    for (r, v) in pts.iter().zip(&out) {
        let want = (-r * r).exp();
        assert!((v.re - want).abs() < 0.02 * want, "r={r}: {v}");
    }
}

#[test]
fn spatial_commutativity() {
    let f = gaussian(&H3, 0.7);
    let g = smooth(1.2, 0.2);
    let pts = [0.0, 0.6, 1.2, 2.0, 3.0];
    let fg = convolve_direct(&H3, ConvolutionInput::Axial(&translate_radial(&H3, &f, 0.0).unwrap()), &g, &pts).unwrap();
    let gf = convolve_direct(&H3, ConvolutionInput::Axial(&translate_radial(&H3, &g, 0.0).unwrap()), &f, &pts).unwrap();
    assert!(sup_rel(&fg, &gf) < 1e-2);
}

#[test]
fn translation_commutes_with_convolution() {
    let phi = gaussian(&H3, 1.0);
    let psi = smooth(0.8, 0.5);
    let conv = convolve_radial(&H3, &phi, &psi).unwrap();
    for big_r in [0.5, 1.0] {
        let field = translate_radial(&H3, &phi, big_r).unwrap();
        let pts = [-1.0, 0.0, 0.5, 1.0, 2.0];
        let lhs = convolve_direct(&H3, ConvolutionInput::Axial(&field), &psi, &pts).unwrap();
        let rhs: Vec<Complex64> = pts.iter().map(|s| conv.eval((s - big_r).abs())).collect();
        assert!(sup_rel(&lhs, &rhs) < 1e-2);
    }
}

#[test]
fn unit_atom_is_the_identity() {
    let f = smooth(1.0, 0.4);
    let out = convolve_measure(&H3, &f, &RadialMeasure::unit_atom()).unwrap();
    assert!(sup_rel(&out.values, &f.values) < 1e-8);
}

#[test]
fn sphere_average_symbol_is_phi_at_the_radius() {
    let mu = RadialMeasure::sphere_average(1.0);
    let s = mu.symbol(&H3, c(1.0, 0.0)).unwrap();
    assert!((s.re - 0.7160229153).abs() < 1e-9);
    let f = gaussian(&H3, 1.0);
    let l = [c(1.0, 0.0), c(2.0, 0.0)];
    let fmu = convolve_measure(&H3, &f, &mu).unwrap();
    let a = spherical_transform(&H3, &fmu, &l).unwrap();
    let b = spherical_transform(&H3, &f, &l).unwrap();
    for ((x, y), lam) in a.values.iter().zip(&b.values).zip(l) {
        assert!((x / y - phi_h3(lam, 1.0)).norm() < 1e-6);
    }
}

#[test]
fn density_measure_matches_convolution() {
    let f = gaussian(&H3, 1.0);
    let g = RadialFunction::from_real_fn(&H3, "e2", |r| (-2.0 * r).exp());
    let a = convolve_measure(&H3, &f, &RadialMeasure::from_density(g.clone())).unwrap();
    let b = convolve_radial(&H3, &f, &g).unwrap();
    assert!(sup_rel(&a.values, &b.values) < 1e-8);
}

#[test]
fn far_atoms_are_rejected() {
    let mu = RadialMeasure::sphere_average(0.6 * H3.r_max);
    assert!(matches!(convolve_measure(&H3, &gaussian(&H3, 1.0), &mu), Err(Error::Input(_))));
}

#[test]
fn total_variation_bounds() {
    let g = smooth(1.0, -0.8);
    let mu = RadialMeasure {
        atoms: vec![Atom { r: 0.5, mass: c(0.3, -0.4) }, Atom { r: 2.0, mass: c(-0.2, 0.0) }],
        density: Some(g.clone()),
    };
    let tv = mu.total_variation(&H3).unwrap();
    let sum: Complex64 = mu.atoms.iter().map(|a| a.mass).sum();
    assert!(tv >= sum.norm());
    assert!(tv >= lp_norm_radial(&H3, &g, 1.0).unwrap());
}

#[test]
fn young_examples() {
    let z = RadialFunction::zeros(&H3, "0");
    let g = approximate_identity(&H3, 0.5).unwrap();
    let rep = young_bound_check(&H3, &z, &g, 4.0).unwrap();
    assert!(rep.pass && rep.lhs == 0.0);
    let rep = young_bound_check(&H3, &gaussian(&H3, 1.0), &g, 4.0).unwrap();
    let ratio = rep.lhs / rep.rhs;
    println!("Young ratio for the unit bump: {ratio}");
    assert!(ratio > 0.0 && ratio <= 1.0);
    for p in [1.0, 2.0, f64::INFINITY] {
        assert!(young_bound_check(&H3, &gaussian(&H3, 1.0), &smooth(0.6, 1.0), p).unwrap().pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn convolution_theorem_on_the_grid(w1 in 0.5..2.0f64, w2 in 0.5..2.0f64, s in -0.5..0.5f64) {
        let f = smooth(w1, s);
        let g = smooth(w2, -s);
        let fg = convolve_radial(&H3, &f, &g).unwrap();
        let a = transform_on_grid(&H3, &fg).unwrap();
        let fs = transform_on_grid(&H3, &f).unwrap();
        let gs = transform_on_grid(&H3, &g).unwrap();
        for ((x, y), z) in fs.values.iter().zip(&gs.values).zip(&a.values) {
            let p = x * y;
            prop_assert!((z - p).norm() < 1e-6 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn convolution_is_associative(w1 in 0.5..1.5f64, w2 in 0.5..1.5f64, w3 in 0.5..1.5f64) {
        let (f, g, h) = (smooth(w1, 0.1), smooth(w2, 0.0), smooth(w3, -0.1));
        let a = convolve_radial(&H3, &convolve_radial(&H3, &f, &g).unwrap(), &h).unwrap();
        let b = convolve_radial(&H3, &f, &convolve_radial(&H3, &g, &h).unwrap()).unwrap();
        prop_assert!(relative_l2(&H3, &a, &b) < 1e-6);
    }
}
