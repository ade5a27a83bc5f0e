//! Manifold models: sphere-volume density, ρ, radial quadrature, radial
//! functions and their L^p norms, and two-center geometry on hyperbolic space.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::ModelCache;
use crate::error::{Error, Result};
use crate::quadrature::{sphere_area, RadialGrid, SphereQuadrature};
use crate::spline::CubicSpline;

pub const DEFAULT_R_MAX: f64 = 20.0;
pub const DEFAULT_GRID_SIZE: usize = 4096;
pub const DEFAULT_THETA_NODES: usize = 128;

/// Sphere-volume density `A(r)` of a harmonic manifold.
pub trait Density: Send + Sync + fmt::Debug {
    fn value(&self, r: f64) -> f64;
    /// `A'(r) / A(r)`.
    fn log_derivative(&self, r: f64) -> f64;
}

/// `A(r) = ω_{n-1} sinh^{n-1}(r)` on real hyperbolic space.
#[derive(Debug, Clone)]
pub struct HyperbolicDensity {
    dimension: usize,
    omega: f64,
}

impl HyperbolicDensity {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, omega: sphere_area(dimension - 1) }
    }
}

impl Density for HyperbolicDensity {
    fn value(&self, r: f64) -> f64 {
        self.omega * r.sinh().powi(self.dimension as i32 - 1)
    }

    fn log_derivative(&self, r: f64) -> f64 {
        (self.dimension as f64 - 1.0) / r.tanh()
    }
}

/// Density tabulated at sample radii; interpolates `ln A(r) − (n−1) ln r`
/// with a natural cubic spline.
#[derive(Debug, Clone)]
pub struct TabulatedDensity {
    dimension: usize,
    spline: CubicSpline,
    r_last: f64,
}

impl TabulatedDensity {
    pub fn new(dimension: usize, radii: &[f64], values: &[f64]) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 4 {
            return Err(Error::Model("tabulated density needs at least 4 samples".into()));
        }
        let mut xs = Vec::new();
        let mut gs = Vec::new();
        for (&r, &a) in radii.iter().zip(values) {
            if r <= 0.0 {
                continue;
            }
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::Model(format!("density must be positive, A({r}) = {a}")));
            }
            xs.push(r);
            gs.push(a.ln() - (dimension as f64 - 1.0) * r.ln());
        }
        let r_last = *xs.last().ok_or_else(|| Error::Model("no positive radii".into()))?;
        let spline = CubicSpline::natural(xs, gs)
            .ok_or_else(|| Error::Model("density radii must be strictly increasing".into()))?;
        Ok(Self { dimension, spline, r_last })
    }

    /// Reads a CSV with header `r,density`.
    pub fn from_csv(dimension: usize, path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for row in reader.deserialize() {
            let (r, a): (f64, f64) = row?;
            radii.push(r);
            values.push(a);
        }
        Self::new(dimension, &radii, &values)
    }

    pub fn last_radius(&self) -> f64 {
        self.r_last
    }
}

impl Density for TabulatedDensity {
    fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let (g, _) = self.spline.eval(r);
        (g + (self.dimension as f64 - 1.0) * r.ln()).exp()
    }

    fn log_derivative(&self, r: f64) -> f64 {
        let (_, dg) = self.spline.eval(r);
        (self.dimension as f64 - 1.0) / r + dg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Hyperbolic,
    CustomDensity,
}

/// Uniform spectral grid `λ_j = j Λ/(N−1)` on `[0, Λ]` with trapezoid weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub lambda_max: f64,
    pub nodes: usize,
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self { lambda_max: 50.0, nodes: 2048 }
    }
}

impl SpectralGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_max > 0.0) || self.nodes < 16 {
            return Err(Error::Input(format!(
                "spectral grid needs lambda_max > 0 and >= 16 nodes, got {:?}",
                self
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.lambda_max / (self.nodes - 1) as f64
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes).map(|j| j as f64 * h).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.nodes];
        w[0] = 0.5 * h;
        w[self.nodes - 1] = 0.5 * h;
        w
    }
}

/// Which model to build.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Hyperbolic,
    Custom { density: Arc<dyn Density>, rho: Option<f64> },
}

/// A harmonic-manifold model: density, ρ, and quadrature. Immutable apart from
/// the lazily filled calibration/spectral cache.
pub struct ManifoldModel {
    pub dimension: usize,
    pub rho: f64,
    pub kind: ModelKind,
    pub r_max: f64,
    pub grid: Arc<RadialGrid>,
    pub spectral: SpectralGrid,
    pub sphere: SphereQuadrature,
    density: Arc<dyn Density>,
    density_at_nodes: Vec<f64>,
    pub(crate) cache: ModelCache,
}

impl fmt::Debug for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldModel")
            .field("dimension", &self.dimension)
            .field("rho", &self.rho)
            .field("kind", &self.kind)
            .field("r_max", &self.r_max)
            .field("grid_len", &self.grid.len())
            .field("spectral", &self.spectral)
            .finish()
    }
}

/// Builds a model of the given kind, dimension, truncation radius and grid size.
pub fn build_model(spec: ModelSpec, n: usize, r_max: f64, grid_size: usize) -> Result<ManifoldModel> {
    ManifoldModel::build(spec, n, r_max, grid_size, SpectralGrid::default(), DEFAULT_THETA_NODES)
}

impl ManifoldModel {
    pub fn hyperbolic(n: usize, r_max: f64, grid_size: usize) -> Result<Self> {
        build_model(ModelSpec::Hyperbolic, n, r_max, grid_size)
    }

    pub fn build(
        spec: ModelSpec,
        n: usize,
        r_max: f64,
        grid_size: usize,
        spectral: SpectralGrid,
        theta_nodes: usize,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Input(format!("dimension must be >= 2, got {n}")));
        }
        if theta_nodes < 8 {
            return Err(Error::Input(format!("need at least 8 angular nodes, got {theta_nodes}")));
        }
        spectral.validate()?;
        let grid = Arc::new(RadialGrid::new(r_max, grid_size)?);
        let (kind, density, rho): (_, Arc<dyn Density>, f64) = match spec {
            ModelSpec::Hyperbolic => {
                (ModelKind::Hyperbolic, Arc::new(HyperbolicDensity::new(n)), (n as f64 - 1.0) / 2.0)
            }
            ModelSpec::Custom { density, rho } => {
                let rho = match rho {
                    Some(v) => v,
                    None => 0.5 * density.log_derivative(r_max),
                };
                (ModelKind::CustomDensity, density, rho)
            }
        };
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Model(format!("rho must be positive, got {rho}")));
        }
        let mut density_at_nodes = Vec::with_capacity(grid.len());
        for &r in grid.nodes.iter().chain(std::iter::once(&r_max)) {
            let a = density.value(r);
            let la = density.log_derivative(r);
            if !(a > 0.0) || !a.is_finite() || !la.is_finite() {
                return Err(Error::Model(format!("density not positive/finite at r = {r}: A = {a}")));
            }
            if r < r_max {
                density_at_nodes.push(a);
            }
        }
        Ok(Self {
            dimension: n,
            rho,
            kind,
            r_max,
            grid,
            spectral,
            sphere: SphereQuadrature::new(n, theta_nodes),
            density,
            density_at_nodes,
            cache: ModelCache::default(),
        })
    }

    pub fn density(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            self.density.value(r)
        }
    }

    pub fn log_density_derivative(&self, r: f64) -> f64 {
        self.density.log_derivative(r)
    }

    /// `A(r_i)` at the grid nodes.
    pub fn density_at_nodes(&self) -> &[f64] {
        &self.density_at_nodes
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.kind == ModelKind::Hyperbolic
    }

    pub(crate) fn require_hyperbolic(&self, what: &str) -> Result<()> {
        if self.is_hyperbolic() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{what} needs two-center geometry, which a custom density does not determine"
            )))
        }
    }

    /// Σ w_i g(r_i) A(r_i).
    pub fn integrate_radial(&self, values: &[Complex64]) -> Complex64 {
        values
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.density_at_nodes)
            .map(|((v, w), a)| v * (w * a))
            .sum()
    }
}

/// Half-width `(1 − 2/p)ρ` of the strip on which φ_λ ∈ L^p.
pub fn strip_halfwidth(model: &ManifoldModel, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(model.rho);
    }
    if !(p > 2.0) {
        return Err(Error::Input(format!("the strip is defined for p > 2, got p = {p}")));
    }
    Ok((1.0 - 2.0 / p) * model.rho)
}

/// Sampled radial profile `u(r_i)` on a model grid.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    pub values: Vec<Complex64>,
    pub grid: Arc<RadialGrid>,
    pub label: String,
    nonnegative: bool,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "profile has {} samples but the grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { values, grid, label: label.into(), nonnegative: false })
    }

    pub fn from_fn(model: &ManifoldModel, label: impl Into<String>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = model.grid.nodes.iter().map(|&r| f(r)).collect();
        Self { values, grid: model.grid.clone(), label: label.into(), nonnegative: false }
    }

    pub fn from_real_fn(model: &ManifoldModel, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(model, label, |r| Complex64::new(f(r), 0.0))
    }

    pub fn zeros(model: &ManifoldModel, label: impl Into<String>) -> Self {
        Self::from_fn(model, label, |_| Complex64::new(0.0, 0.0))
    }

    /// Tags the function as nonnegative after checking every sample.
    pub fn into_nonnegative(mut self) -> Result<Self> {
        if let Some(v) = self.values.iter().find(|v| v.im != 0.0 || v.re < 0.0) {
            return Err(Error::Input(format!("{} is not nonnegative (sample {v})", self.label)));
        }
        self.nonnegative = true;
        Ok(self)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Interpolated profile at `r`; zero beyond the truncation radius.
    pub fn eval(&self, r: f64) -> Complex64 {
        if r > self.grid.r_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.grid.interpolate(&self.values, r.max(0.0))
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.nonnegative = false;
        out
    }

    pub fn check_grid(&self, model: &ManifoldModel) -> Result<()> {
        if self.grid.same_as(&model.grid) {
            Ok(())
        } else {
            Err(Error::Input(format!("{} lives on a different radial grid", self.label)))
        }
    }

    /// Largest magnitude over the final panel, a proxy for truncation.
    pub fn tail_magnitude(&self) -> f64 {
        let k = self.grid.order;
        self.values[self.values.len() - k..].iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `(Σ w_i |u(r_i)|^p A(r_i))^{1/p}`.
pub fn lp_norm_radial(model: &ManifoldModel, f: &RadialFunction, p: f64) -> Result<f64> {
    f.check_grid(model)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Input(format!("lp_norm_radial needs 1 <= p < inf, got {p}")));
    }
    let sum: f64 = f
        .values
        .iter()
        .zip(&model.grid.weights)
        .zip(model.density_at_nodes())
        .map(|((v, w), a)| w * a * v.norm().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// Max norm over the grid nodes (the `p = ∞` proxy).
pub fn sup_norm(f: &RadialFunction) -> f64 {
    f.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Distance between the points at radius `r` and `big_r` from the origin whose
/// rays form angle `theta`. Uses
/// `sinh²(d/2) = sinh²((r−R)/2) + sinh r sinh R sin²(θ/2)`, which keeps full
/// relative accuracy for small `d`.
pub fn two_center_distance(model: &ManifoldModel, r: f64, big_r: f64, theta: f64) -> Result<f64> {
    model.require_hyperbolic("two_center_distance")?;
    if r < 0.0 || big_r < 0.0 {
        return Err(Error::Input("radii must be nonnegative".into()));
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Input(format!("theta must lie in [0, pi], got {theta}")));
    }
    Ok(hyperbolic_distance(r, big_r, theta))
}

#[inline]
pub(crate) fn hyperbolic_distance(r: f64, big_r: f64, theta: f64) -> f64 {
    let a = (0.5 * (r - big_r)).sinh();
    let s = (0.5 * theta).sin();
    let q = a * a + r.sinh() * big_r.sinh() * s * s;
    2.0 * q.sqrt().asinh()
}

/// Distance from the point `(r, θ)` (polar about the origin, θ from the
/// reference axis) to the axis point at signed position `s`.
#[inline]
pub(crate) fn axial_distance(r: f64, theta: f64, s: f64) -> f64 {
    if s >= 0.0 {
        hyperbolic_distance(r, s, theta)
    } else {
        hyperbolic_distance(r, -s, std::f64::consts::PI - theta)
    }
}
