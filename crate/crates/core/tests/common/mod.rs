#![allow(dead_code)]

use std::sync::LazyLock;

use num_complex::Complex64;
use radial_chaos::eigen::calibrate_inversion;
use radial_chaos::model::{ManifoldModel, RadialFunction};

fn calibrated(n: usize, grid: usize) -> ManifoldModel {
    let m = ManifoldModel::hyperbolic(n, 20.0, grid).expect("model");
    calibrate_inversion(&m).expect("calibration");
    m
}

/// H³ on the default grid, calibrated.
pub static H3: LazyLock<ManifoldModel> = LazyLock::new(|| calibrated(3, 4096));
/// H² on the default grid, calibrated.
pub static H2: LazyLock<ManifoldModel> = LazyLock::new(|| calibrated(2, 4096));

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gaussian(m: &ManifoldModel, width: f64) -> RadialFunction {
    RadialFunction::from_real_fn(m, format!("gauss[{width}]"), |r| (-(r / width).powi(2)).exp())
}

/// Closed-form φ_λ on H³.
pub fn phi_h3(lambda: Complex64, r: f64) -> Complex64 {
    if r == 0.0 {
        return c(1.0, 0.0);
    }
    if lambda.norm() < 1e-12 {
        return c(r / r.sinh(), 0.0);
    }
    (lambda * r).sin() / (lambda * r.sinh())
}

/// Closed-form heat kernel on H³.
pub fn heat_h3(t: f64, r: f64) -> f64 {
    let ratio = if r == 0.0 { 1.0 } else { r / r.sinh() };
    (4.0 * std::f64::consts::PI * t).powf(-1.5) * (-t).exp() * ratio * (-r * r / (4.0 * t)).exp()
}
