//! Radial eigenfunctions φ_λ of the Laplacian, the c-function extracted from
//! their asymptotics, and the calibrated Plancherel weight.
//!
//! The radial equation `u'' + (A'/A) u' + (λ² + ρ²) u = 0` is integrated panel
//! by panel with implicit Gauss collocation (16 stages), started off the
//! origin by the regular series and controlled by step doubling.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ManifoldModel, RadialFunction};
use crate::quadrature::{barycentric_weights, differentiation_matrix, gauss_legendre_unit, lagrange_basis};
use crate::quadrature::RadialGrid;
use crate::scalar::{solve_dense, Scalar};

const STAGES: usize = 16;
const REL_TOL: f64 = 1e-10;
const MAX_DEPTH: usize = 40;
const MAX_LAMBDA: f64 = 1e4;
/// Below this |λ| the public c-function refuses to fit.
pub const C_FUNCTION_MIN_LAMBDA: f64 = 0.05;

struct Tableau {
    c: Vec<f64>,
    b: Vec<f64>,
    a: Vec<f64>,
    a2: Vec<f64>,
    bary: Vec<f64>,
}

fn tableau() -> &'static Tableau {
    static T: OnceLock<Tableau> = OnceLock::new();
    T.get_or_init(|| {
        let (c, b) = gauss_legendre_unit(STAGES);
        let bary = barycentric_weights(&c);
        let a = integrated_basis_matrix(&c, &bary, &c);
        let mut a2 = vec![0.0; STAGES * STAGES];
        for i in 0..STAGES {
            for j in 0..STAGES {
                a2[i * STAGES + j] = (0..STAGES).map(|k| a[i * STAGES + k] * a[k * STAGES + j]).sum();
            }
        }
        Tableau { c, b, a, a2, bary }
    })
}

/// Row `i` holds `∫_0^{x_i} ℓ_j(t) dt` for the Lagrange basis on `nodes`.
fn integrated_basis_matrix(nodes: &[f64], bary: &[f64], xs: &[f64]) -> Vec<f64> {
    let s = nodes.len();
    let (qn, qw) = gauss_legendre_unit(s);
    let mut out = vec![0.0; xs.len() * s];
    let mut basis = vec![0.0; s];
    for (i, &x) in xs.iter().enumerate() {
        for (&y, &w) in qn.iter().zip(&qw) {
            lagrange_basis(nodes, bary, x * y, &mut basis);
            for j in 0..s {
                out[i * s + j] += x * w * basis[j];
            }
        }
    }
    out
}

struct PanelSolution<T> {
    u: [T; STAGES],
    v: [T; STAGES],
    f: [T; STAGES],
    u1: T,
    v1: T,
}

struct Integrator<'a, T> {
    model: &'a ManifoldModel,
    k2: T,
    scale_v: f64,
}

impl<'a, T: Scalar> Integrator<'a, T> {
    fn solve_panel(&self, x0: f64, h: f64, u0: T, v0: T) -> Result<PanelSolution<T>> {
        let tab = tableau();
        let k2 = self.k2;
        let mut a_coef = [0.0; STAGES];
        for i in 0..STAGES {
            a_coef[i] = self.model.log_density_derivative(x0 + h * tab.c[i]);
        }
        let mut m = vec![T::zero(); STAGES * STAGES];
        let mut rhs = vec![T::zero(); STAGES];
        let h2 = h * h;
        for i in 0..STAGES {
            for j in 0..STAGES {
                let idx = i * STAGES + j;
                let mut e = k2 * (h2 * tab.a2[idx]) + T::from_f64(h * tab.a[idx] * a_coef[j]);
                if i == j {
                    e += T::from_f64(1.0);
                }
                m[idx] = e;
            }
            rhs[i] = v0 - k2 * u0 * (h * tab.c[i]);
        }
        solve_dense(&mut m, &mut rhs, STAGES)
            .ok_or_else(|| Error::Numerical(format!("singular collocation system on [{x0}, {}]", x0 + h)))?;
        let v: [T; STAGES] = rhs.try_into().expect("stage count");
        let mut u = [u0; STAGES];
        let mut f = [T::zero(); STAGES];
        let mut u1 = u0;
        let mut v1 = v0;
        for i in 0..STAGES {
            let mut acc = T::zero();
            for j in 0..STAGES {
                acc += v[j] * tab.a[i * STAGES + j];
            }
            u[i] = u0 + acc * h;
            f[i] = -(v[i] * a_coef[i]) - k2 * u[i];
        }
        for j in 0..STAGES {
            u1 += v[j] * (h * tab.b[j]);
            v1 += f[j] * (h * tab.b[j]);
        }
        if !(u1.modulus().is_finite() && v1.modulus().is_finite()) {
            return Err(Error::Numerical(format!("non-finite solution on [{x0}, {}]", x0 + h)));
        }
        Ok(PanelSolution { u, v, f, u1, v1 })
    }

    fn norm(&self, u: T, v: T) -> f64 {
        u.modulus() + v.modulus() * self.scale_v
    }

    /// Advances from `x0` to `x1`, writing `(u, u')` at each target radius.
    /// `aligned` means the targets are exactly the Gauss stages of `[x0, x1]`.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        x0: f64,
        x1: f64,
        u0: T,
        v0: T,
        targets: &[(usize, f64)],
        aligned: bool,
        out_u: &mut [T],
        out_v: &mut [T],
        depth: usize,
    ) -> Result<(T, T)> {
        let h = x1 - x0;
        let full = self.solve_panel(x0, h, u0, v0)?;
        let left = self.solve_panel(x0, 0.5 * h, u0, v0)?;
        let right = self.solve_panel(x0 + 0.5 * h, 0.5 * h, left.u1, left.v1)?;
        let err = self.norm(full.u1 - right.u1, full.v1 - right.v1);
        let scale = self.norm(right.u1, right.v1).max(self.norm(u0, v0)) + 1e-300;
        if err <= REL_TOL * scale {
            if aligned {
                for (k, &(idx, _)) in targets.iter().enumerate() {
                    out_u[idx] = full.u[k];
                    out_v[idx] = full.v[k];
                }
            } else {
                dense_output(&full, x0, h, u0, v0, targets, out_u, out_v);
            }
            return Ok((full.u1, full.v1));
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Numerical(format!(
                "step control failed on [{x0:.6e}, {x1:.6e}] (error {err:.3e}, scale {scale:.3e})"
            )));
        }
        let mid = x0 + 0.5 * h;
        let split = targets.partition_point(|&(_, r)| r < mid);
        let (u_mid, v_mid) =
            self.advance(x0, mid, u0, v0, &targets[..split], false, out_u, out_v, depth + 1)?;
        self.advance(mid, x1, u_mid, v_mid, &targets[split..], false, out_u, out_v, depth + 1)
    }
}

#[allow(clippy::too_many_arguments)]
fn dense_output<T: Scalar>(
    sol: &PanelSolution<T>,
    x0: f64,
    h: f64,
    u0: T,
    v0: T,
    targets: &[(usize, f64)],
    out_u: &mut [T],
    out_v: &mut [T],
) {
    if targets.is_empty() {
        return;
    }
    let tab = tableau();
    let xs: Vec<f64> = targets.iter().map(|&(_, r)| (r - x0) / h).collect();
    let ib = integrated_basis_matrix(&tab.c, &tab.bary, &xs);
    for (k, &(idx, _)) in targets.iter().enumerate() {
        let mut u = u0;
        let mut v = v0;
        for j in 0..STAGES {
            let w = h * ib[k * STAGES + j];
            u += sol.v[j] * w;
            v += sol.f[j] * w;
        }
        out_u[idx] = u;
        out_v[idx] = v;
    }
}

/// Start radius for the series; kept below the first grid node.
fn start_radius(grid: &RadialGrid, k: f64) -> f64 {
    (1e-4_f64).min(1e-3 / (1.0 + k)).min(0.5 * grid.nodes[0])
}

fn series<T: Scalar>(k2: T, n: usize, r: f64) -> (T, T) {
    let nf = n as f64;
    // φ = 1 − k² r²/(2n) + k⁴ r⁴/(8n(n+2))
    let k4 = k2 * k2;
    let u = T::from_f64(1.0) - k2 * (r * r / (2.0 * nf)) + k4 * (r.powi(4) / (8.0 * nf * (nf + 2.0)));
    let v = -(k2 * (r / nf)) + k4 * (r.powi(3) / (2.0 * nf * (nf + 2.0)));
    (u, v)
}

/// Solves the radial equation with `k² = λ² + ρ²` on the model grid.
fn integrate<T: Scalar>(model: &ManifoldModel, k2: T) -> Result<(Vec<T>, Vec<T>, f64)> {
    let grid = &model.grid;
    let k = k2.modulus().sqrt();
    let r_s = start_radius(grid, k);
    let (u_s, v_s) = series(k2, model.dimension, r_s);
    let integ = Integrator { model, k2, scale_v: 1.0 / (1.0 + k) };
    let n = grid.len();
    let mut out_u = vec![T::zero(); n];
    let mut out_v = vec![T::zero(); n];
    let h = grid.panel_width();
    let aligned_grid = grid.order == STAGES;
    let (mut u, mut v) = (u_s, v_s);
    for p in 0..grid.panels {
        let lo = p * grid.order;
        let targets: Vec<(usize, f64)> = (lo..lo + grid.order).map(|i| (i, grid.nodes[i])).collect();
        let x0 = if p == 0 { r_s } else { p as f64 * h };
        let x1 = (p + 1) as f64 * h;
        let aligned = p > 0 && aligned_grid;
        (u, v) = integ.advance(x0, x1, u, v, &targets, aligned, &mut out_u, &mut out_v, 0)?;
    }
    Ok((out_u, out_v, r_s))
}

/// Max of `|u'' + (A'/A)u' + k²u|` over grid nodes with `r ≥ 0.01`, with `u''`
/// obtained by spectral differentiation of `u'` on each panel.
fn ode_residual<T: Scalar>(model: &ManifoldModel, k2: T, u: &[T], v: &[T]) -> f64 {
    let grid = &model.grid;
    let s = grid.order;
    let d = differentiation_matrix(&grid.ref_nodes, &grid.ref_bary);
    let h = grid.panel_width();
    let mut worst = 0.0_f64;
    for p in 0..grid.panels {
        let lo = p * s;
        for i in 0..s {
            let r = grid.nodes[lo + i];
            if r < 0.01 {
                continue;
            }
            let mut dv = T::zero();
            for j in 0..s {
                dv += v[lo + j] * (d[i * s + j] / h);
            }
            let res = dv + v[lo + i] * model.log_density_derivative(r) + k2 * u[lo + i];
            worst = worst.max(res.modulus());
        }
    }
    worst
}

/// Sampled φ_λ and φ_λ' on the model grid.
#[derive(Debug, Clone)]
pub struct RadialEigenfunction {
    pub lambda: Complex64,
    pub values: Vec<Complex64>,
    pub derivative_values: Vec<Complex64>,
    pub ode_residual: f64,
    pub grid: Arc<RadialGrid>,
    dimension: usize,
    k2: Complex64,
    r_start: f64,
}

impl RadialEigenfunction {
    /// φ_λ at arbitrary `r`: the regular series near the origin, panel
    /// interpolation elsewhere (polynomial extrapolation past `r_max`).
    pub fn value_at(&self, r: f64) -> Complex64 {
        if r <= self.r_start {
            series(self.k2, self.dimension, r).0
        } else {
            self.grid.interpolate(&self.values, r)
        }
    }

    pub fn derivative_at(&self, r: f64) -> Complex64 {
        if r <= self.r_start {
            series(self.k2, self.dimension, r).1
        } else {
            self.grid.interpolate(&self.derivative_values, r)
        }
    }

    pub fn to_radial_function(&self) -> RadialFunction {
        RadialFunction::new(self.grid.clone(), self.values.clone(), format!("phi[{}]", self.lambda))
            .expect("eigenfunction lives on its grid")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) || lambda.norm() >= MAX_LAMBDA {
        return Err(Error::Input(format!("need finite |lambda| < {MAX_LAMBDA}, got {lambda}")));
    }
    Ok(())
}

/// Computes φ_λ on the model grid. Real or purely imaginary λ take a real
/// arithmetic path, so the values are exactly real there.
pub fn radial_eigenfunction(model: &ManifoldModel, lambda: Complex64) -> Result<RadialEigenfunction> {
    check_lambda(lambda)?;
    let k2 = lambda * lambda + model.rho * model.rho;
    let (values, derivative_values, residual, r_start) = if k2.im == 0.0 {
        let (u, v, r_s) = integrate(model, k2.re)
            .map_err(|e| annotate(e, lambda))?;
        let res = ode_residual(model, k2.re, &u, &v);
        (u.iter().map(|x| x.to_c64()).collect(), v.iter().map(|x| x.to_c64()).collect(), res, r_s)
    } else {
        let (u, v, r_s) = integrate(model, k2).map_err(|e| annotate(e, lambda))?;
        let res = ode_residual(model, k2, &u, &v);
        (u, v, res, r_s)
    };
    Ok(RadialEigenfunction {
        lambda,
        values,
        derivative_values,
        ode_residual: residual,
        grid: model.grid.clone(),
        dimension: model.dimension,
        k2,
        r_start,
    })
}

fn annotate(e: Error, lambda: Complex64) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("eigenfunction solve for lambda = {lambda}: {msg}")),
        other => other,
    }
}

/// One value of the c-function with the mismatch between the two fit radii.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CFunctionSample {
    pub lambda: f64,
    pub c_value: Complex64,
    pub fit_residual: f64,
}

/// Solves `ψ = c₊e^{iλr} + c₋e^{−iλr}`, `ψ' = iλ(c₊e^{iλr} − c₋e^{−iλr})` for c₊
/// where `ψ = φ e^{ρr}`.
fn fit_at(rho: f64, lambda: f64, r: f64, phi: f64, dphi: f64) -> Complex64 {
    let g = (rho * r).exp();
    let psi = phi * g;
    let dpsi = (dphi + rho * phi) * g;
    let e = Complex64::from_polar(1.0, lambda * r);
    (Complex64::new(psi, 0.0) + Complex64::new(0.0, -dpsi / lambda)) / (2.0 * e)
}

/// Fit radii `0.8 r_max` and `0.9 r_max`.
pub fn fit_radii(model: &ManifoldModel) -> (f64, f64) {
    (0.8 * model.r_max, 0.9 * model.r_max)
}

fn fit_c(model: &ManifoldModel, lambda: f64, eval: impl Fn(f64) -> (f64, f64)) -> Result<CFunctionSample> {
    let (r1, r2) = fit_radii(model);
    let (p1, d1) = eval(r1);
    let (p2, d2) = eval(r2);
    let c1 = fit_at(model.rho, lambda, r1, p1, d1);
    let c2 = fit_at(model.rho, lambda, r2, p2, d2);
    let c = 0.5 * (c1 + c2);
    if !(c.norm() > 0.0) || !c.norm().is_finite() {
        return Err(Error::Numerical(format!("c-function fit is singular at lambda = {lambda}")));
    }
    Ok(CFunctionSample { lambda, c_value: c, fit_residual: (c1 - c2).norm() / c.norm() })
}

fn c_from_profile(model: &ManifoldModel, lambda: f64, u: &[f64], v: &[f64]) -> Result<CFunctionSample> {
    fit_c(model, lambda, |r| (model.grid.interpolate(u, r), model.grid.interpolate(v, r)))
}

/// c(λ) for real λ with `|λ| ≥ 0.05`.
pub fn c_function(model: &ManifoldModel, lambda: f64) -> Result<CFunctionSample> {
    if !lambda.is_finite() || lambda.abs() >= MAX_LAMBDA {
        return Err(Error::Input(format!("need finite |lambda| < {MAX_LAMBDA}, got {lambda}")));
    }
    if lambda.abs() < C_FUNCTION_MIN_LAMBDA {
        return Err(Error::Input(format!(
            "c-function fit is ill-conditioned for |lambda| < {C_FUNCTION_MIN_LAMBDA} (got {lambda})"
        )));
    }
    c_unguarded(model, lambda)
}

fn c_unguarded(model: &ManifoldModel, lambda: f64) -> Result<CFunctionSample> {
    let k2 = lambda * lambda + model.rho * model.rho;
    let (u, v, _) = integrate(model, k2).map_err(|e| annotate(e, Complex64::new(lambda, 0.0)))?;
    c_from_profile(model, lambda, &u, &v)
}

/// `|c(λ)|^{-2}` without calibration; zero at λ = 0.
pub fn raw_plancherel_density(model: &ManifoldModel, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let c = c_unguarded(model, lambda)?;
    Ok(c.c_value.norm_sqr().recip())
}

/// `κ |c(λ)|^{-2}`; needs a calibrated model.
pub fn plancherel_weight(model: &ManifoldModel, lambda: f64) -> Result<f64> {
    let kappa = calibration(model)?;
    Ok(kappa * raw_plancherel_density(model, lambda)?)
}

/// Stored calibration constant κ.
pub fn calibration(model: &ManifoldModel) -> Result<f64> {
    model.cache.kappa.get().copied().ok_or(Error::Uncalibrated)
}

pub fn is_calibrated(model: &ManifoldModel) -> bool {
    model.cache.kappa.get().is_some()
}

/// φ_λ(r_i) and `|c(λ)|^{-2}` tabulated on the model's real spectral grid.
#[derive(Debug)]
pub struct SpectralTable {
    pub lambdas: Vec<f64>,
    /// Trapezoid weights of the spectral grid.
    pub quad_weights: Vec<f64>,
    /// Uncalibrated `|c(λ_j)|^{-2}`.
    pub density: Vec<f64>,
    pub fit_residuals: Vec<f64>,
    pub max_ode_residual: f64,
    rows: Vec<f64>,
    n_r: usize,
}

impl SpectralTable {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.n_r..(j + 1) * self.n_r]
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Index of `lambda` on the grid, if it is a node.
    pub fn index_of(&self, lambda: f64) -> Option<usize> {
        let h = self.lambdas[1] - self.lambdas[0];
        let j = (lambda / h).round();
        if j < 0.0 || j as usize >= self.lambdas.len() {
            return None;
        }
        let j = j as usize;
        (self.lambdas[j] == lambda).then_some(j)
    }
}

#[derive(Debug, Default)]
pub(crate) struct ModelCache {
    pub(crate) kappa: OnceLock<f64>,
    pub(crate) table: OnceLock<Arc<SpectralTable>>,
}

/// Builds (once per model) the real spectral table.
pub fn spectral_table(model: &ManifoldModel) -> Result<Arc<SpectralTable>> {
    if let Some(t) = model.cache.table.get() {
        return Ok(t.clone());
    }
    let lambdas = model.spectral.lambdas();
    let rho2 = model.rho * model.rho;
    let solved: Vec<Result<(Vec<f64>, f64, f64, f64)>> = lambdas
        .par_iter()
        .map(|&lam| {
            let k2 = lam * lam + rho2;
            let (u, v, _) = integrate(model, k2).map_err(|e| annotate(e, Complex64::new(lam, 0.0)))?;
            let res = ode_residual(model, k2, &u, &v);
            let (dens, fit) = if lam == 0.0 {
                (0.0, 0.0)
            } else {
                let c = c_from_profile(model, lam, &u, &v)?;
                (c.c_value.norm_sqr().recip(), c.fit_residual)
            };
            Ok((u, dens, fit, res))
        })
        .collect();
    let n_r = model.grid.len();
    let mut rows = Vec::with_capacity(n_r * lambdas.len());
    let mut density = Vec::with_capacity(lambdas.len());
    let mut fit_residuals = Vec::with_capacity(lambdas.len());
    let mut max_res = 0.0_f64;
    for s in solved {
        let (u, d, f, r) = s?;
        rows.extend_from_slice(&u);
        density.push(d);
        fit_residuals.push(f);
        max_res = max_res.max(r);
    }
    let table = Arc::new(SpectralTable {
        quad_weights: model.spectral.weights(),
        lambdas,
        density,
        fit_residuals,
        max_ode_residual: max_res,
        rows,
        n_r,
    });
    let _ = model.cache.table.set(table);
    Ok(model.cache.table.get().expect("just set").clone())
}

/// `Σ_j q_j ρ_j f̂_j φ_{λ_j}(r_i)` with `ρ_j = weight(λ_j)`.
pub(crate) fn invert_on_table(table: &SpectralTable, spectrum: &[Complex64], weight: &[f64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); table.n_r];
    for j in 0..table.len() {
        let c = spectrum[j] * (table.quad_weights[j] * weight[j]);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (o, &phi) in out.iter_mut().zip(table.row(j)) {
            *o += c * phi;
        }
    }
    out
}

/// `Σ_i w_i A_i u_i φ_{λ_j}(r_i)` for every table row.
pub(crate) fn transform_on_table(model: &ManifoldModel, table: &SpectralTable, values: &[Complex64]) -> Vec<Complex64> {
    let weighted: Vec<Complex64> = values
        .iter()
        .zip(&model.grid.weights)
        .zip(model.density_at_nodes())
        .map(|((v, w), a)| v * (w * a))
        .collect();
    (0..table.len())
        .into_par_iter()
        .map(|j| weighted.iter().zip(table.row(j)).map(|(w, &p)| w * p).sum())
        .collect()
}

fn bump(model: &ManifoldModel, width: f64) -> Vec<Complex64> {
    model.grid.nodes.iter().map(|r| Complex64::new((-(r / width).powi(2)).exp(), 0.0)).collect()
}

/// Least-squares κ with `κ·I f ≈ f` in `L²(A dr)`, where `I` is the inversion
/// integral with the given spectral weight and `f = exp(−(r/width)²)`.
pub fn calibration_constant_with(model: &ManifoldModel, width: f64, weight: &[f64]) -> Result<f64> {
    if !(width > 0.0) {
        return Err(Error::Input(format!("bump width must be positive, got {width}")));
    }
    let table = spectral_table(model)?;
    if weight.len() != table.len() {
        return Err(Error::Input("weight must be sampled on the spectral grid".into()));
    }
    let f = bump(model, width);
    let spectrum = transform_on_table(model, &table, &f);
    let inv = invert_on_table(&table, &spectrum, weight);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..f.len() {
        let m = model.grid.weights[i] * model.density_at_nodes()[i];
        num += m * (inv[i].conj() * f[i]).re;
        den += m * inv[i].norm_sqr();
    }
    let kappa = num / den;
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Numerical(format!("calibration produced kappa = {kappa}")));
    }
    Ok(kappa)
}

/// κ for the measured weight `|c|^{-2}` and a bump of the given width,
/// without storing it.
pub fn calibration_constant(model: &ManifoldModel, width: f64) -> Result<f64> {
    let table = spectral_table(model)?;
    calibration_constant_with(model, width, &table.density)
}

/// Calibrates the model against the unit-width Gaussian bump and stores κ.
/// Subsequent calls return the stored value.
pub fn calibrate_inversion(model: &ManifoldModel) -> Result<f64> {
    if let Some(&k) = model.cache.kappa.get() {
        return Ok(k);
    }
    let kappa = calibration_constant(model, 1.0)?;
    let _ = model.cache.kappa.set(kappa);
    calibration(model)
}

/// Empirical constants of the c-function envelope: `|c|^{-1}/|λ|` on
/// `[0.1, 1]` and `|c|^{-1}/λ^{(n−1)/2}` on `[5, 50]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CEstimate {
    pub small_min: f64,
    pub small_max: f64,
    pub large_min: f64,
    pub large_max: f64,
    /// Smallest C with both envelopes holding.
    pub constant: f64,
    /// Oscillation of `log|c|^{-1} − ((n−1)/2) log λ` on `[5, 50]`.
    pub log_oscillation: f64,
}

pub fn fit_c_estimate(model: &ManifoldModel) -> Result<CEstimate> {
    let table = spectral_table(model)?;
    let half = (model.dimension as f64 - 1.0) / 2.0;
    let (mut smin, mut smax, mut lmin, mut lmax) = (f64::INFINITY, 0.0_f64, f64::INFINITY, 0.0_f64);
    for (&lam, &d) in table.lambdas.iter().zip(&table.density) {
        let inv_c = d.sqrt();
        if (0.1..=1.0).contains(&lam) {
            let q = inv_c / lam;
            smin = smin.min(q);
            smax = smax.max(q);
        }
        if (5.0..=50.0).contains(&lam) {
            let q = inv_c / lam.powf(half);
            lmin = lmin.min(q);
            lmax = lmax.max(q);
        }
    }
    if !smin.is_finite() || !lmin.is_finite() {
        return Err(Error::Input("spectral grid does not cover [0.1, 1] and [5, 50]".into()));
    }
    let constant = [smax, 1.0 / smin, lmax, 1.0 / lmin].into_iter().fold(1.0, f64::max);
    Ok(CEstimate {
        small_min: smin,
        small_max: smax,
        large_min: lmin,
        large_max: lmax,
        constant,
        log_oscillation: (lmax / lmin).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn h3() -> ManifoldModel {
        ManifoldModel::hyperbolic(3, 20.0, 4096).unwrap()
    }

    fn exact_h3(lambda: Complex64, r: f64) -> Complex64 {
        if lambda.norm() == 0.0 {
            return Complex64::new(r / r.sinh(), 0.0);
        }
        (lambda * r).sin() / (lambda * r.sinh())
    }

    #[test]
    fn matches_closed_form_on_h3() {
        let m = h3();
        for lam in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.4), Complex64::new(30.0, 0.0)] {
            let e = radial_eigenfunction(&m, lam).unwrap();
            for (i, &r) in m.grid.nodes.iter().enumerate() {
                if !(0.01..=10.0).contains(&r) {
                    continue;
                }
                let want = exact_h3(lam, r);
                assert!((e.values[i] - want).norm() <= 1e-8 * want.norm().max(1e-3 * (-r).exp()), "lam={lam} r={r}");
            }
        }
    }

    #[test]
    fn named_values() {
        let m = h3();
        let e = radial_eigenfunction(&m, Complex64::new(1.0, 0.0)).unwrap();
        assert!((e.value_at(1.0).re - 0.716_022_915_360_434).abs() < 1e-10);
        let e0 = radial_eigenfunction(&m, Complex64::new(0.0, 0.0)).unwrap();
        assert!((e0.value_at(1.0).re - 0.850_918_128_239_321).abs() < 1e-10);
        assert!((e0.value_at(0.0).re - 1.0).abs() < 1e-15);
        assert!((e.value_at(1e-5).re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn real_path_gives_real_values_and_evenness() {
        let m = h3();
        let a = radial_eigenfunction(&m, Complex64::new(0.0, 0.7)).unwrap();
        assert!(a.values.iter().all(|v| v.im == 0.0));
        let p = radial_eigenfunction(&m, Complex64::new(1.3, 0.2)).unwrap();
        let q = radial_eigenfunction(&m, Complex64::new(-1.3, -0.2)).unwrap();
        for (x, y) in p.values.iter().zip(&q.values) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn imaginary_rho_is_constant_one() {
        let m = h3();
        let e = radial_eigenfunction(&m, Complex64::new(0.0, 1.0)).unwrap();
        assert!(e.values.iter().all(|v| (v.re - 1.0).abs() < 1e-12));
    }

    #[test]
    fn residual_is_small() {
        let m = h3();
        for lam in [Complex64::new(0.5, 0.0), Complex64::new(50.0, 0.0), Complex64::new(3.0, 1.0)] {
            let e = radial_eigenfunction(&m, lam).unwrap();
            assert!(e.ode_residual < 1e-7 * (1.0 + lam.norm_sqr()), "lam={lam}: {}", e.ode_residual);
        }
    }

    #[test]
    fn large_lambda_is_refused() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        assert!(matches!(radial_eigenfunction(&m, Complex64::new(2e4, 0.0)), Err(Error::Input(_))));
    }

    #[test]
    fn c_function_on_h3() {
        let m = h3();
        let c1 = c_function(&m, 1.0).unwrap();
        let c2 = c_function(&m, 2.0).unwrap();
        let ratio = c1.c_value.norm_sqr() / c2.c_value.norm_sqr();
        assert!((ratio - 4.0).abs() < 1e-3);
        // c = 1/(iλ)
        assert!((c2.c_value - Complex64::new(0.0, -0.5)).norm() < 1e-8);
        let neg = c_function(&m, -2.0).unwrap();
        assert!((neg.c_value - c2.c_value.conj()).norm() < 1e-8);
        assert!(c2.fit_residual < 1e-5);
        assert!(matches!(c_function(&m, 0.01), Err(Error::Input(_))));
    }

    #[test]
    fn c_function_on_h2() {
        let m = ManifoldModel::hyperbolic(2, 20.0, 4096).unwrap();
        let c = c_function(&m, 1.0).unwrap();
        assert!(c.fit_residual < 1e-5);
        let want = PI * (PI).tanh();
        assert!((c.c_value.norm_sqr().recip() - want).abs() / want < 1e-6);
    }

    #[test]
    fn uncalibrated_weight_is_refused() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        assert!(matches!(plancherel_weight(&m, 1.0), Err(Error::Uncalibrated)));
    }
}
