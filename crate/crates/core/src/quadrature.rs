//! Composite Gauss–Legendre radial grids, panel-local barycentric
//! interpolation and the normalized sphere-average rule in the polar angle.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gauss–Legendre rule mapped to `[0, 1]`, nodes ascending.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    let order = NonZeroUsize::new(order.max(1)).expect("nonzero");
    let rule = GaussLegendre::new(order);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Barycentric weights for Lagrange interpolation on arbitrary distinct nodes.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    // common rescaling keeps the weights O(1)
    let scale = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        for v in &mut w {
            *v /= scale;
        }
    }
    w
}

/// Values of all Lagrange basis polynomials at `x`.
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(hit) = nodes.iter().position(|&t| t == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[hit] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for j in 0..nodes.len() {
        let t = bary[j] / (x - nodes[j]);
        out[j] = t;
        denom += t;
    }
    for v in out.iter_mut() {
        *v /= denom;
    }
}

/// Barycentric interpolation of `values` given on `nodes`.
pub fn barycentric_eval<T: Scalar>(nodes: &[f64], bary: &[f64], values: &[T], x: f64) -> T {
    let mut num = T::zero();
    let mut den = 0.0;
    for j in 0..nodes.len() {
        let dx = x - nodes[j];
        if dx == 0.0 {
            return values[j];
        }
        let t = bary[j] / dx;
        num += values[j] * t;
        den += t;
    }
    num * (1.0 / den)
}

/// Spectral differentiation matrix (row-major) for the given nodes.
pub fn differentiation_matrix(nodes: &[f64], bary: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

/// Composite Gauss–Legendre grid on `[0, r_max]` with equal panels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub panels: usize,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Reference Gauss nodes on `[0, 1]`.
    pub ref_nodes: Vec<f64>,
    pub ref_weights: Vec<f64>,
    pub ref_bary: Vec<f64>,
}

/// Minimum number of panels in a composite grid.
pub const MIN_PANELS: usize = 32;
/// Largest per-panel Gauss order.
pub const MAX_GRID_SIZE: usize = 1 << 20;
pub const MAX_ORDER: usize = 16;

impl RadialGrid {
    /// Builds a grid with roughly `grid_size` nodes; the panel count is rounded
    /// up so that `panels * order >= grid_size` and `panels >= 32`.
    pub fn new(r_max: f64, grid_size: usize) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::Input(format!("r_max must be positive, got {r_max}")));
        }
        if !(16..=MAX_GRID_SIZE).contains(&grid_size) {
            return Err(Error::Input(format!("grid_size must lie in [16, {MAX_GRID_SIZE}], got {grid_size}")));
        }
        let order = (grid_size / MIN_PANELS).clamp(2, MAX_ORDER);
        let panels = grid_size.div_ceil(order).max(MIN_PANELS);
        Ok(Self::with_panels(r_max, panels, order))
    }

    pub fn with_panels(r_max: f64, panels: usize, order: usize) -> Self {
        let (ref_nodes, ref_weights) = gauss_legendre_unit(order);
        let ref_bary = barycentric_weights(&ref_nodes);
        let h = r_max / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let left = k as f64 * h;
            for (x, w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(left + h * x);
                weights.push(h * w);
            }
        }
        Self { r_max, panels, order, nodes, weights, ref_nodes, ref_weights, ref_bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panel_width(&self) -> f64 {
        self.r_max / self.panels as f64
    }

    /// Index of the panel containing `r` (clamped to the grid).
    pub fn panel_of(&self, r: f64) -> usize {
        let k = (r / self.panel_width()).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.panels - 1)
        }
    }

    /// Σ w_i g(r_i).
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * g(r)).sum()
    }

    /// Panel-local Lagrange interpolation of grid samples at `r ∈ [0, r_max]`.
    pub fn interpolate<T: Scalar>(&self, values: &[T], r: f64) -> T {
        debug_assert_eq!(values.len(), self.len());
        let k = self.panel_of(r);
        let h = self.panel_width();
        let x = (r - k as f64 * h) / h;
        let slice = &values[k * self.order..(k + 1) * self.order];
        barycentric_eval(&self.ref_nodes, &self.ref_bary, slice, x)
    }

    /// Same node layout as `other`.
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.panels == other.panels && self.order == other.order && self.r_max == other.r_max
    }
}

/// Normalized surface measure on geodesic spheres in the polar angle `θ ∈ [0, π]`
/// about a fixed axis: weights include `sin^{n-2}θ · ω_{n-2}/ω_{n-1}` and sum to 1.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(dimension: usize, nodes: usize) -> Self {
        let (x, w) = gauss_legendre_unit(nodes);
        let pi = std::f64::consts::PI;
        let ratio = sphere_area(dimension - 2) / sphere_area(dimension - 1);
        let thetas: Vec<f64> = x.iter().map(|t| pi * t).collect();
        let weights = thetas
            .iter()
            .zip(&w)
            .map(|(&th, &wi)| pi * wi * th.sin().powi(dimension as i32 - 2) * ratio)
            .collect();
        Self { thetas, weights }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// Area ω_k of the unit sphere S^k ⊂ R^{k+1}.
pub fn sphere_area(k: usize) -> f64 {
    let pi = std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * pi,
        _ => 2.0 * pi / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}
