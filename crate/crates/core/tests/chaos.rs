mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{c, H2, H3};
use num_complex::Complex64;
use proptest::prelude::*;
use radial_chaos::chaos::*;
use radial_chaos::convolution::RadialMeasure;
use radial_chaos::model::strip_halfwidth;
use radial_chaos::multiplier::{symbol_eval, Multiplier};
use radial_chaos::Error;

fn heat() -> Multiplier {
    Multiplier::heat(1.0).unwrap()
}

fn nu() -> Complex64 {
    c((-1.25f64).exp(), 0.0)
}

fn root(rot: Rotation) -> UnimodularRoot {
    let found = find_unimodular_roots(&H3, &heat(), nu(), c(0.5, 0.0), &[rot], 4.0).unwrap();
    found[0].root.clone().unwrap_or_else(|| panic!("no root for {rot}"))
}

fn heat_root(rot: Rotation) -> Complex64 {
    // m(λ) = e^{-(λ²+1)} = ν e^{iθ} gives λ² = 0.25 − iθ
    let theta = 2.0 * PI * rot.p as f64 / rot.q as f64;
    let l = c(0.25, -theta).sqrt();
    if l.re < 0.0 { -l } else { l }
}

#[test]
fn threshold_examples() {
    assert_eq!(chaos_threshold(&H3, 4.0).unwrap(), 0.75);
    assert!((chaos_threshold(&H2, 4.0).unwrap() - 0.1875).abs() < 1e-15);
    let big = chaos_threshold(&H3, 1e6).unwrap();
    assert!((big - 4.0 * (1e6 - 1.0) / 1e12).abs() < 1e-18);
    assert!(big < 4.1e-6);
    for p in [2.0, 1.5, f64::INFINITY, f64::NAN] {
        assert!(matches!(chaos_threshold(&H3, p), Err(Error::Input(_))));
    }
}

#[test]
fn strip_parameter_examples() {
    let l = solve_strip_parameter(&H3, 4.0, c(1.0, 0.0)).unwrap();
    assert!((l - c(0.4, 0.4)).norm() < 1e-15);
    assert!(matches!(solve_strip_parameter(&H3, 4.0, c(0.75, 0.0)), Err(Error::Threshold { .. })));
    let l = solve_strip_parameter(&H3, 4.0, c(2.0, 0.3)).unwrap();
    assert!((l.re * l.re - l.im * l.im + 1.0 - 2.0).abs() < 1e-12);
    assert!(l.im > 0.0 && l.im < 0.5);
}

#[test]
fn heat_certificate() {
    let cert = certify_mixing(&H3, &heat(), nu(), c(0.5, 0.0), 4.0).unwrap();
    assert_eq!(cert.verdict, Verdict::ChaoticCertified);
    assert!(!cert.u_plus.is_empty() && !cert.u_minus.is_empty());
    assert!(cert.margin >= 1e-3);
    assert!(cert.u_plus.iter().any(|l| l.im.abs() < 1e-12 && l.re > 0.5));
    assert!(cert.u_minus.iter().any(|l| l.im.abs() > 0.05));
    let b = strip_halfwidth(&H3, 4.0).unwrap();
    for l in &cert.u_plus {
        let r = symbol_eval(&H3, &heat(), *l).unwrap().norm() / nu().norm();
        assert!(r <= 1.0 - cert.margin && l.im.abs() < b);
    }
    for l in &cert.u_minus {
        let r = symbol_eval(&H3, &heat(), *l).unwrap().norm() / nu().norm();
        assert!(r >= 1.0 + cert.margin && l.im.abs() < b);
    }
    for r in &cert.roots {
        let target = r.rotation.unit();
        assert!((symbol_eval(&H3, &heat(), r.lambda).unwrap() / nu() - target).norm() < 1e-10);
        assert!(r.lambda.im.abs() < b - 1e-9);
    }
    assert!(cert.distinct_rotations() >= 2);
    let text = serde_json::to_string(&cert).unwrap();
    assert!(text.contains("chaotic_certified"));
}

#[test]
fn identity_is_constant() {
    let id = Multiplier::conv_measure(&H3, RadialMeasure::unit_atom()).unwrap();
    assert!(matches!(certify_mixing(&H3, &id, c(1.0, 0.0), c(0.5, 0.0), 4.0), Err(Error::ConstantSymbol)));
}

#[test]
fn certificate_preconditions() {
    assert!(matches!(certify_mixing(&H3, &heat(), c(0.3, 0.0), c(0.5, 0.0), 4.0), Err(Error::Input(_))));
    assert!(certify_mixing(&H3, &heat(), nu(), c(0.5, 0.6), 4.0).is_err());
    assert!(certify_mixing(&H3, &heat(), nu(), c(0.5, 0.0), 2.0).is_err());
}

#[test]
fn regions_ignore_the_phase_of_nu() {
    let rots = [Rotation::new(0, 1).unwrap()];
    let a = certify_with_rotations(&H3, &heat(), nu(), c(0.5, 0.0), 4.0, &rots).unwrap();
    let b = certify_with_rotations(&H3, &heat(), nu() * c(0.0, 1.3).exp(), c(0.5, 0.0), 4.0, &rots).unwrap();
    assert_eq!(a.u_plus, b.u_plus);
    assert_eq!(a.u_minus, b.u_minus);
}

#[test]
fn roots_of_the_heat_symbol() {
    let r0 = root(Rotation::new(0, 1).unwrap());
    assert!((r0.lambda - c(0.5, 0.0)).norm() < 1e-10);
    let r = root(Rotation::new(1, 24).unwrap());
    assert!((r.lambda - heat_root(r.rotation)).norm() < 1e-9);
    assert!((r.lambda - c(0.5531695, -0.2366358)).norm() < 1e-6);
    assert!(r.residual < 1e-10);
    let conj = root(Rotation::new(-1, 24).unwrap());
    assert!((conj.lambda - r.lambda.conj()).norm() < 1e-9);
}

#[test]
fn roots_outside_the_strip_are_reported() {
    let third = Rotation::new(1, 3).unwrap();
    let outside = heat_root(third);
    assert!((outside * outside - c(0.25, -2.0 * PI / 3.0)).norm() < 1e-12);
    assert!((outside - c(1.0861, -0.9642)).norm() < 1e-3);
    assert!(outside.im < -0.5);
    let found = find_unimodular_roots(&H3, &heat(), nu(), c(0.5, 0.0), &[third], 4.0).unwrap();
    assert!(found[0].root.is_none());
    assert!(found[0].note.is_some());
}

#[test]
fn rotation_parsing() {
    let r: Rotation = "-1/24".parse().unwrap();
    assert_eq!((r.p, r.q), (-1, 24));
    assert!("2/24".parse::<Rotation>().is_err());
    assert!("1/0".parse::<Rotation>().is_err());
    assert_eq!(r.to_string(), "-1/24");
}

#[test]
fn periodic_point_construction() {
    let r24 = root(Rotation::new(1, 24).unwrap());
    let single = build_periodic_point(&[r24.clone()], &[0.0], &[c(1.0, 0.0)]).unwrap();
    assert_eq!(single.period, 24);
    assert!(single.diagonal_defect() < 1e-10);
    let r8 = UnimodularRoot { rotation: Rotation::new(1, 8).unwrap(), ratio: Rotation::new(1, 8).unwrap().unit(), ..r24.clone() };
    let pair = build_periodic_point(&[r24.clone(), r8], &[0.0, 1.0], &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
    assert_eq!(pair.period, 24);
    assert_eq!(pair.product_period(), 192);
    assert!(pair.diagonal_defect_for(pair.product_period()) < 1e-10);
    assert!(matches!(build_periodic_point(&[], &[], &[]), Err(Error::Input(_))));
    assert!(matches!(build_periodic_point(&[r24], &[0.0, 1.0], &[c(1.0, 0.0)]), Err(Error::Input(_))));
}

#[test]
fn fixed_point_after_one_step() {
    let r0 = root(Rotation::new(0, 1).unwrap());
    let phi = build_periodic_point(&[r0], &[0.0], &[c(1.0, 0.0)]).unwrap();
    assert!(verify_periodic(&H3, &heat(), &phi, nu()).unwrap() < 1e-3);
}

#[test]
fn period_24_returns_and_is_scale_free() {
    let r = root(Rotation::new(1, 24).unwrap());
    let phi = build_periodic_point(&[r], &[0.0], &[c(1.0, 0.0)]).unwrap();
    let d = verify_periodic(&H3, &heat(), &phi, nu()).unwrap();
    assert!(d < 1e-2, "{d}");
    let d7 = verify_periodic(&H3, &heat(), &phi.scaled(c(7.0, 0.0)), nu()).unwrap();
    assert!((d - d7).abs() < 1e-6 + 1e-3 * d);
}

#[test]
fn custom_symbols_cannot_be_verified() {
    let r = root(Rotation::new(0, 1).unwrap());
    let phi = build_periodic_point(&[r], &[0.0], &[c(1.0, 0.0)]).unwrap();
    let t = Multiplier::custom(Arc::new(|l: Complex64| (-(l * l + 1.0)).exp()), f64::INFINITY).unwrap();
    assert!(matches!(verify_periodic(&H3, &t, &phi, nu()), Err(Error::Unsupported(_))));
}

/// Real λ with `|m(λ)/ν| = f` for heat(1) and `ν = e^{-1.25}`.
fn lambda_for_factor(f: f64) -> Complex64 {
    c((0.25 + (1.0 / f).ln()).sqrt(), 0.0)
}

fn single(f: f64, steps: usize) -> OrbitRecord {
    let comp = OrbitComponent { lambda: lambda_for_factor(f), center: 0.0, coeff: c(1.0, 0.0) };
    simulate_orbit(&H3, &heat(), nu(), &[comp], steps, 4.0).unwrap()
}

#[test]
fn contracting_orbit() {
    let rec = single(0.9, 20);
    let want = 0.9f64.powi(20) * rec.norms[0];
    assert!((rec.norms[20] - want).abs() < 1e-2 * want);
    assert!((rec.moduli[0] - 0.9).abs() < 1e-12);
}

#[test]
fn level_set_orbit_is_flat() {
    let rec = single(1.0, 50);
    assert!(rec.norms.iter().all(|n| (n - rec.norms[0]).abs() < 1e-2 * rec.norms[0]));
}

#[test]
fn mixed_orbit_follows_the_expanding_part() {
    let comps: Vec<OrbitComponent> = [0.9, 1.1]
        .iter()
        .map(|&f| OrbitComponent { lambda: lambda_for_factor(f), center: 0.0, coeff: c(1.0, 0.0) })
        .collect();
    let rec = simulate_orbit(&H3, &heat(), nu(), &comps, 50, 4.0).unwrap();
    let logs = rec.log_norms();
    let slope = logs[50] - logs[49];
    assert!((slope - 1.1f64.ln()).abs() < 0.02 * 1.1f64.ln(), "{slope}");
    for f in &rec.step_factors {
        assert!((f[0] - 0.9).abs() < 1e-2 && (f[1] - 1.1).abs() < 1e-2);
    }
}

#[test]
fn orbit_limits() {
    let comp = OrbitComponent { lambda: lambda_for_factor(0.9), center: 0.0, coeff: c(1.0, 0.0) };
    assert!(matches!(simulate_orbit(&H3, &heat(), nu(), &[comp.clone()], 201, 4.0), Err(Error::Input(_))));
    assert!(simulate_orbit(&H3, &heat(), nu(), &[], 10, 4.0).is_err());
    let far = OrbitComponent { lambda: c(0.5, 0.7), ..comp };
    assert!(matches!(simulate_orbit(&H3, &heat(), nu(), &[far], 10, 4.0), Err(Error::Domain { .. })));
    let growing = OrbitComponent { lambda: c(0.0, 0.45), center: 0.0, coeff: c(1.0, 0.0) };
    let rec = simulate_orbit(&H3, &heat(), nu(), &[growing], 200, 4.0).unwrap();
    assert!(rec.stopped_at.is_some());
    assert!(rec.norms.len() < 201);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_consistency(re in 0.7501..4.0f64, im in -2.0..2.0f64, t0 in 0.2..3.0f64) {
        let cc = c(re, im);
        let l = solve_strip_parameter(&H3, 4.0, cc).unwrap();
        prop_assert!((l.re * l.re - l.im * l.im + 1.0 - re).abs() < 1e-12);
        prop_assert!(l.im > 0.0 && l.im < 0.5);
        let m = Multiplier::heat(t0).unwrap();
        let mv = symbol_eval(&H3, &m, l).unwrap().norm();
        prop_assert!(((-cc * t0).exp().norm() - mv).abs() < 1e-12);
    }

    #[test]
    fn root_soundness(q in 6u64..40, sign in prop::bool::ANY) {
        let rot = Rotation::new(if sign { 1 } else { -1 }, q).unwrap();
        let found = find_unimodular_roots(&H3, &heat(), nu(), c(0.5, 0.0), &[rot], 4.0).unwrap();
        if let Some(r) = &found[0].root {
            prop_assert!((symbol_eval(&H3, &heat(), r.lambda).unwrap() / nu() - rot.unit()).norm() < 1e-10);
            prop_assert!(r.lambda.im.abs() < 0.5 - 1e-9);
        } else {
            prop_assert!(heat_root(rot).im.abs() >= 0.5 - 1e-6);
        }
    }
}
