//! Spherical Fourier transform of radial functions, inversion against the
//! calibrated Plancherel weight, Cauchy-integral holomorphy checks and
//! translates of radial functions on hyperbolic models.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, radial_eigenfunction, spectral_table};
use crate::error::{Error, Result};
use crate::model::{axial_distance, strip_halfwidth, ManifoldModel, RadialFunction};

/// Integrand tail above which a transform carries a warning.
pub const TAIL_WARN: f64 = 1e-9;
/// Integrand tail above which a transform fails.
pub const TAIL_FAIL: f64 = 1e-6;
/// Points on each Cauchy circle.
pub const CAUCHY_POINTS: usize = 32;

/// Samples `f̂(λ_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub lambda_nodes: Vec<Complex64>,
    pub values: Vec<Complex64>,
    /// Largest `|Im λ|` over the sampled nodes.
    pub strip_halfwidth: f64,
    pub source_label: String,
    /// Largest `|u φ_λ A|` over the last radial panel.
    pub tail: f64,
    pub warnings: Vec<String>,
}

impl SpectralFunction {
    pub fn new(lambda_nodes: Vec<Complex64>, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if lambda_nodes.len() != values.len() {
            return Err(Error::Input("spectral nodes and values differ in length".into()));
        }
        let strip = lambda_nodes.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
        Ok(Self { lambda_nodes, values, strip_halfwidth: strip, source_label: label.into(), tail: 0.0, warnings: Vec::new() })
    }

    /// Values on the model's real spectral grid from a symbol.
    pub fn from_symbol(model: &ManifoldModel, label: impl Into<String>, m: impl Fn(f64) -> Complex64) -> Self {
        let nodes: Vec<Complex64> = model.spectral.lambdas().into_iter().map(|l| Complex64::new(l, 0.0)).collect();
        let values = nodes.iter().map(|l| m(l.re)).collect();
        Self::new(nodes, values, label).expect("matching lengths")
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Pointwise product with another spectrum on the same nodes.
    pub fn product(&self, other: &SpectralFunction) -> Result<Self> {
        if self.lambda_nodes != other.lambda_nodes {
            return Err(Error::Input("spectra are sampled on different nodes".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        let mut out = Self::new(self.lambda_nodes.clone(), values, format!("{}*{}", self.source_label, other.source_label))?;
        out.tail = self.tail.max(other.tail);
        out.warnings = self.warnings.iter().chain(&other.warnings).cloned().collect();
        Ok(out)
    }

    pub fn is_on_grid(&self, model: &ManifoldModel) -> bool {
        let lambdas = model.spectral.lambdas();
        self.lambda_nodes.len() == lambdas.len()
            && self.lambda_nodes.iter().zip(&lambdas).all(|(a, &b)| a.im == 0.0 && a.re == b)
    }
}

/// Largest integrand magnitude `|u φ A|` on the last radial panel.
fn tail_of(model: &ManifoldModel, f: &RadialFunction, phi: impl Fn(usize) -> Complex64) -> f64 {
    let n = f.len();
    let dens = model.density_at_nodes();
    (n - model.grid.order..n).map(|i| (f.values[i] * phi(i)).norm() * dens[i]).fold(0.0, f64::max)
}

/// `f̂(λ) = Σ w_i u(r_i) φ_λ(r_i) A(r_i)` for each λ.
pub fn spherical_transform(model: &ManifoldModel, f: &RadialFunction, lambdas: &[Complex64]) -> Result<SpectralFunction> {
    f.check_grid(model)?;
    for l in lambdas {
        if l.im.abs() > model.rho || !l.re.is_finite() || !l.im.is_finite() {
            return Err(Error::Domain { lambda: l.to_string(), halfwidth: model.rho });
        }
    }
    let table = model.cache.table.get().cloned();
    let results: Vec<Result<(Complex64, f64)>> = lambdas
        .par_iter()
        .map(|&l| {
            if let Some(t) = &table {
                if l.im == 0.0 {
                    if let Some(j) = t.index_of(l.re.abs()) {
                        let row = t.row(j);
                        let v = model.integrate_radial(
                            &f.values.iter().zip(row).map(|(u, &p)| u * p).collect::<Vec<_>>(),
                        );
                        return Ok((v, tail_of(model, f, |i| Complex64::new(row[i], 0.0))));
                    }
                }
            }
            let e = radial_eigenfunction(model, l)?;
            let v = model.integrate_radial(&f.values.iter().zip(&e.values).map(|(u, p)| u * p).collect::<Vec<_>>());
            Ok((v, tail_of(model, f, |i| e.values[i])))
        })
        .collect();
    let mut values = Vec::with_capacity(lambdas.len());
    let mut tail = 0.0_f64;
    for r in results {
        let (v, t) = r?;
        values.push(v);
        tail = tail.max(t);
    }
    finish(lambdas.to_vec(), values, tail, &f.label)
}

fn finish(nodes: Vec<Complex64>, values: Vec<Complex64>, tail: f64, label: &str) -> Result<SpectralFunction> {
    if tail > TAIL_FAIL {
        return Err(Error::Truncation(format!(
            "transform integrand of {label} is {tail:.3e} at the truncation radius (limit {TAIL_FAIL:e})"
        )));
    }
    let mut out = SpectralFunction::new(nodes, values, format!("hat[{label}]"))?;
    out.tail = tail;
    if tail > TAIL_WARN {
        out.warnings.push(format!("integrand tail {tail:.3e} exceeds {TAIL_WARN:e}"));
    }
    Ok(out)
}

/// Transform on the model's real spectral grid, through the cached table.
pub fn transform_on_grid(model: &ManifoldModel, f: &RadialFunction) -> Result<SpectralFunction> {
    f.check_grid(model)?;
    let table = spectral_table(model)?;
    let values = eigen::transform_on_table(model, &table, &f.values);
    let tail = (0..table.len())
        .map(|j| {
            let row = table.row(j);
            tail_of(model, f, |i| Complex64::new(row[i], 0.0))
        })
        .fold(0.0, f64::max);
    let nodes = table.lambdas.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    finish(nodes, values, tail, &f.label)
}

/// `f(r) = κ Σ_j q_j f̂(λ_j) φ_{λ_j}(r) |c(λ_j)|^{-2}` on the radial grid.
pub fn inverse_transform(model: &ManifoldModel, spec: &SpectralFunction) -> Result<RadialFunction> {
    let kappa = eigen::calibration(model)?;
    if !spec.is_on_grid(model) {
        return Err(Error::Input(
            "inverse transform needs the spectrum sampled on the model's real spectral grid".into(),
        ));
    }
    let table = spectral_table(model)?;
    let last = table.len() - 1;
    let edge = spec.values[last].norm() * kappa * table.density[last];
    if edge > TAIL_FAIL {
        return Err(Error::Truncation(format!(
            "spectral tail |f^(L)| weight(L) = {edge:.3e} at L = {} exceeds {TAIL_FAIL:e}",
            table.lambdas[last]
        )));
    }
    let weight: Vec<f64> = table.density.iter().map(|d| d * kappa).collect();
    let values = eigen::invert_on_table(&table, &spec.values, &weight);
    RadialFunction::new(model.grid.clone(), values, format!("inv[{}]", spec.source_label))
}

/// Relative `L²(A dr)` distance `‖f − g‖/‖g‖`.
pub fn relative_l2(model: &ManifoldModel, f: &RadialFunction, g: &RadialFunction) -> f64 {
    let dens = model.density_at_nodes();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..f.len() {
        let m = model.grid.weights[i] * dens[i];
        num += m * (f.values[i] - g.values[i]).norm_sqr();
        den += m * g.values[i].norm_sqr();
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// Relative L² defect of `invert(transform(f))` against `f`.
pub fn round_trip_defect(model: &ManifoldModel, f: &RadialFunction) -> Result<f64> {
    let spec = transform_on_grid(model, f)?;
    let back = inverse_transform(model, &spec)?;
    Ok(relative_l2(model, &back, f))
}

/// `|g(λ₀) − mean over the circle |λ−λ₀| = radius|`, the trapezoid form of
/// the Cauchy integral.
pub fn cauchy_defect(g: impl Fn(Complex64) -> Result<Complex64>, center: Complex64, radius: f64, points: usize) -> Result<f64> {
    let mut mean = Complex64::new(0.0, 0.0);
    for k in 0..points {
        let z = center + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / points as f64);
        mean += g(z)?;
    }
    mean /= points as f64;
    Ok((g(center)? - mean).norm())
}

/// Default Cauchy test centers and radius inside `S_p`.
pub fn holomorphy_test_points(model: &ManifoldModel, p: f64) -> Result<(Vec<Complex64>, f64)> {
    let b = strip_halfwidth(model, p)?;
    let radius = (0.1_f64).min(0.4 * b);
    let im = (0.6 * b).min(b - radius * 1.5).max(0.0);
    let centers = [0.0, 1.0, 2.5]
        .iter()
        .flat_map(|&re| [Complex64::new(re, 0.0), Complex64::new(re, im)])
        .collect();
    Ok((centers, radius))
}

/// Maximum Cauchy-integral defect of `f̂` over the given centers.
pub fn holomorphy_check_at(
    model: &ManifoldModel,
    f: &RadialFunction,
    p: f64,
    centers: &[Complex64],
    radius: f64,
) -> Result<f64> {
    let b = strip_halfwidth(model, p)?;
    f.check_grid(model)?;
    let mut worst = 0.0_f64;
    for &c in centers {
        if c.im.abs() + radius >= b {
            return Err(Error::Input(format!(
                "Cauchy circle around {c} with radius {radius} leaves the strip |Im| < {b}"
            )));
        }
        let mut nodes = vec![c];
        for k in 0..CAUCHY_POINTS {
            nodes.push(c + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / CAUCHY_POINTS as f64));
        }
        let s = spherical_transform(model, f, &nodes)?;
        let mean: Complex64 = s.values[1..].iter().sum::<Complex64>() / CAUCHY_POINTS as f64;
        worst = worst.max((s.values[0] - mean).norm());
    }
    Ok(worst)
}

/// Holomorphy probe on the default test set of `S_p`.
pub fn holomorphy_check(model: &ManifoldModel, f: &RadialFunction, p: f64) -> Result<f64> {
    let (centers, radius) = holomorphy_test_points(model, p)?;
    holomorphy_check_at(model, f, p, &centers, radius)
}

/// Values on the axial grid (model radial nodes × polar angles about o,
/// measured from the ray towards the translate center).
#[derive(Debug, Clone)]
pub struct AxialField {
    pub center_distance: f64,
    pub radii: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Row-major by radius: `values[i * thetas.len() + k]`.
    pub values: Vec<Complex64>,
}

impl AxialField {
    pub fn from_fn(model: &ManifoldModel, center_distance: f64, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let thetas = model.sphere.thetas.clone();
        let values = model
            .grid
            .nodes
            .par_iter()
            .flat_map_iter(|&r| thetas.iter().map(move |&t| (r, t)).collect::<Vec<_>>())
            .map(|(r, t)| f(r, t))
            .collect();
        Self { center_distance, radii: model.grid.nodes.clone(), thetas, values }
    }

    pub fn at(&self, i: usize, k: usize) -> Complex64 {
        self.values[i * self.thetas.len() + k]
    }

    /// Largest spread over θ at a fixed radius.
    pub fn theta_variation(&self) -> f64 {
        let nt = self.thetas.len();
        self.values
            .chunks(nt)
            .map(|row| {
                let first = row[0];
                row.iter().map(|v| (v - first).norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `∫ g dvol` for `g` given pointwise on the axial grid.
    pub fn integrate_with(&self, model: &ManifoldModel, g: impl Fn(usize, usize, Complex64) -> Complex64) -> Complex64 {
        let dens = model.density_at_nodes();
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..self.radii.len() {
            let mut ring = Complex64::new(0.0, 0.0);
            for (k, w) in model.sphere.weights.iter().enumerate() {
                ring += g(i, k, self.at(i, k)) * *w;
            }
            total += ring * (model.grid.weights[i] * dens[i]);
        }
        total
    }

    pub fn lp_norm(&self, model: &ManifoldModel, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Input(format!("need 1 <= p < inf, got {p}")));
        }
        Ok(self.integrate_with(model, |_, _, v| Complex64::new(v.norm().powf(p), 0.0)).re.powf(1.0 / p))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `τ_R f` sampled on the axial grid: `(r, θ) ↦ u(d)` with `d` the distance to
/// the axis point at distance `R`.
pub fn translate_radial(model: &ManifoldModel, f: &RadialFunction, big_r: f64) -> Result<AxialField> {
    model.require_hyperbolic("translate_radial")?;
    f.check_grid(model)?;
    if !(big_r >= 0.0) || !big_r.is_finite() {
        return Err(Error::Input(format!("translation distance must be >= 0, got {big_r}")));
    }
    Ok(AxialField::from_fn(model, big_r, |r, t| f.eval(axial_distance(r, t, big_r))))
}

/// `∫ (τ_R f)(z) φ_λ(d(z, x_R)) dvol(z)`, the transform of the translate
/// based at its own center.
pub fn translated_transform(model: &ManifoldModel, f: &RadialFunction, big_r: f64, lambda: Complex64) -> Result<Complex64> {
    let field = translate_radial(model, f, big_r)?;
    let phi = radial_eigenfunction(model, lambda)?;
    Ok(field.integrate_with(model, |i, k, v| {
        let d = axial_distance(field.radii[i], field.thetas[k], big_r);
        if d > model.r_max {
            Complex64::new(0.0, 0.0)
        } else {
            v * phi.value_at(d)
        }
    }))
}
