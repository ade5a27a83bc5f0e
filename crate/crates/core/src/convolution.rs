//! Convolution with radial functions and radial measures: Fourier-side for
//! any model, direct axial quadrature on hyperbolic models.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::spectral_table;
use crate::error::{Error, Result};
use crate::model::{axial_distance, lp_norm_radial, sup_norm, ManifoldModel, RadialFunction};
use crate::transform::{inverse_transform, transform_on_grid, AxialField, SpectralFunction};

/// Widths of the Gaussian approximate identity.
pub const APPROXIMATE_IDENTITY_WIDTHS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

/// `f * g` through `(f*g)^ = f̂ ĝ` and inversion.
pub fn convolve_radial(model: &ManifoldModel, f: &RadialFunction, g: &RadialFunction) -> Result<RadialFunction> {
    let fh = transform_on_grid(model, f)?;
    let gh = transform_on_grid(model, g)?;
    let mut out = inverse_transform(model, &fh.product(&gh)?)?;
    out.label = format!("{}*{}", f.label, g.label);
    Ok(out)
}

/// Left operand of a direct convolution.
#[derive(Debug, Clone, Copy)]
pub enum ConvolutionInput<'a> {
    Radial(&'a RadialFunction),
    Axial(&'a AxialField),
}

/// `(f * g)(x_s) = ∫ f(y) g(d(y, x_s)) dvol(y)` for axis points at signed
/// distance `s` from o, by axial quadrature. For radial `f` the polar
/// coordinates are centered on whichever factor is more concentrated.
pub fn convolve_direct(
    model: &ManifoldModel,
    f: ConvolutionInput<'_>,
    g: &RadialFunction,
    eval_points: &[f64],
) -> Result<Vec<Complex64>> {
    model.require_hyperbolic("convolve_direct")?;
    g.check_grid(model)?;
    if eval_points.iter().any(|s| !s.is_finite()) {
        return Err(Error::Input("evaluation points must be finite".into()));
    }
    match f {
        ConvolutionInput::Radial(f) => {
            f.check_grid(model)?;
            let (center, other) = if effective_radius(model, g) <= effective_radius(model, f) { (g, f) } else { (f, g) };
            let other = UniformProfile::new(other);
            Ok(eval_points.par_iter().map(|&s| polar_sum(model, center, &other, s)).collect())
        }
        ConvolutionInput::Axial(field) => {
            if field.radii.len() != model.grid.len() || field.thetas.len() != model.sphere.len() {
                return Err(Error::Input("axial field does not live on the model's axial grid".into()));
            }
            let g = UniformProfile::new(g);
            Ok(eval_points
                .par_iter()
                .map(|&s| {
                    field.integrate_with(model, |i, k, v| v * g.eval(axial_distance(field.radii[i], field.thetas[k], s)))
                })
                .collect())
        }
    }
}

/// `Σ_i w_i A_i c(r_i) ⟨o(d(r_i, θ, s))⟩_θ`, polar coordinates about the
/// center of `c`, evaluated `|s|` away from the center of `o`.
fn polar_sum(model: &ManifoldModel, c: &RadialFunction, o: &UniformProfile, s: f64) -> Complex64 {
    let grid = &model.grid;
    let dens = model.density_at_nodes();
    let half_sin2: Vec<f64> = model.sphere.thetas.iter().map(|t| (0.5 * t).sin().powi(2)).collect();
    let s_abs = s.abs();
    let sinh_s = s_abs.sinh();
    let cut = significant_nodes(model, c);
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..cut {
        let ci = c.values[i];
        if ci == Complex64::new(0.0, 0.0) {
            continue;
        }
        let r = grid.nodes[i];
        // sinh²(d/2) = sinh²((r−s)/2) + sinh r sinh s sin²(θ/2); the sign of s
        // only mirrors θ, which the polar average does not see
        let a = (0.5 * (r - s_abs)).sinh().powi(2);
        let b = r.sinh() * sinh_s;
        let mut ring = Complex64::new(0.0, 0.0);
        for (q, w) in half_sin2.iter().zip(&model.sphere.weights) {
            ring += o.eval(2.0 * (a + b * q).sqrt().asinh()) * *w;
        }
        total += ci * ring * (grid.weights[i] * dens[i]);
    }
    total
}

/// Radial profile resampled on a fine uniform grid with four-point Lagrange
/// interpolation; the even extension supplies the point left of the origin.
pub(crate) struct UniformProfile {
    h: f64,
    r_max: f64,
    vals: Vec<Complex64>,
}

impl UniformProfile {
    const INTERVALS: usize = 1 << 15;

    pub(crate) fn new(f: &RadialFunction) -> Self {
        let r_max = f.grid.r_max;
        let n = Self::INTERVALS;
        let h = r_max / n as f64;
        let mut vals = Vec::with_capacity(n + 4);
        vals.push(f.grid.interpolate(&f.values, h));
        for i in 0..=n + 2 {
            vals.push(f.grid.interpolate(&f.values, (i as f64 * h).min(r_max + 2.0 * h)));
        }
        Self { h, r_max, vals }
    }

    #[inline]
    pub(crate) fn eval(&self, r: f64) -> Complex64 {
        if r > self.r_max {
            return Complex64::new(0.0, 0.0);
        }
        let x = r / self.h;
        let i = (x.floor() as usize).min(Self::INTERVALS - 1);
        let t = x - i as f64;
        // nodes i−1, i, i+1, i+2 live at vals[i..i+4]
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        let v = &self.vals[i..i + 4];
        v[0] * w0 + v[1] * w1 + v[2] * w2 + v[3] * w3
    }
}

/// Number of leading grid nodes carrying all but `1e-15` of `∫|f| dvol`.
fn significant_nodes(model: &ManifoldModel, f: &RadialFunction) -> usize {
    let dens = model.density_at_nodes();
    let mass: Vec<f64> = (0..f.len()).map(|i| f.values[i].norm() * dens[i] * model.grid.weights[i]).collect();
    let total: f64 = mass.iter().sum();
    let mut tail = 0.0;
    for i in (0..mass.len()).rev() {
        tail += mass[i];
        if tail > 1e-15 * total {
            return i + 1;
        }
    }
    0
}

/// Radius beyond which `f` carries negligible `L¹` mass.
pub fn effective_radius(model: &ManifoldModel, f: &RadialFunction) -> f64 {
    match significant_nodes(model, f) {
        0 => 0.0,
        n if n == f.len() => model.r_max,
        n => model.grid.nodes[n],
    }
}

/// Atom of a radial measure: mass `m` spread as the normalized sphere
/// average at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub r: f64,
    pub mass: Complex64,
}

/// Radial complex measure `Σ m_k σ_{r_k} + g dvol`.
#[derive(Debug, Clone, Default)]
pub struct RadialMeasure {
    pub atoms: Vec<Atom>,
    pub density: Option<RadialFunction>,
}

impl RadialMeasure {
    pub fn unit_atom() -> Self {
        Self { atoms: vec![Atom { r: 0.0, mass: Complex64::new(1.0, 0.0) }], density: None }
    }

    pub fn sphere_average(r0: f64) -> Self {
        Self { atoms: vec![Atom { r: r0, mass: Complex64::new(1.0, 0.0) }], density: None }
    }

    pub fn from_density(g: RadialFunction) -> Self {
        Self { atoms: Vec::new(), density: Some(g) }
    }

    /// `Σ |m_k| + ‖g‖₁`.
    pub fn total_variation(&self, model: &ManifoldModel) -> Result<f64> {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass.norm()).sum();
        let dens = match &self.density {
            Some(g) => lp_norm_radial(model, g, 1.0)?,
            None => 0.0,
        };
        Ok(atoms + dens)
    }

    pub fn validate(&self, model: &ManifoldModel) -> Result<()> {
        for a in &self.atoms {
            if !(a.r >= 0.0) || a.r >= 0.5 * model.r_max {
                return Err(Error::Input(format!(
                    "atom radius {} must lie in [0, {})",
                    a.r,
                    0.5 * model.r_max
                )));
            }
            if !(a.mass.re.is_finite() && a.mass.im.is_finite()) {
                return Err(Error::Input("atom mass must be finite".into()));
            }
        }
        if let Some(g) = &self.density {
            g.check_grid(model)?;
        }
        Ok(())
    }

    /// `m_μ(λ) = Σ m_k φ_λ(r_k) + ĝ(λ)` on the real spectral grid.
    pub fn symbol_on_grid(&self, model: &ManifoldModel) -> Result<SpectralFunction> {
        self.validate(model)?;
        let table = spectral_table(model)?;
        let mut spec = match &self.density {
            Some(g) => transform_on_grid(model, g)?,
            None => SpectralFunction::from_symbol(model, "0", |_| Complex64::new(0.0, 0.0)),
        };
        for (j, v) in spec.values.iter_mut().enumerate() {
            for a in &self.atoms {
                let phi = if a.r == 0.0 { 1.0 } else { model.grid.interpolate(table.row(j), a.r) };
                *v += a.mass * phi;
            }
        }
        spec.source_label = "measure".into();
        Ok(spec)
    }

    /// `m_μ(λ)` at an arbitrary λ in the closed strip `|Im λ| ≤ ρ`.
    pub fn symbol(&self, model: &ManifoldModel, lambda: Complex64) -> Result<Complex64> {
        self.validate(model)?;
        let mut total = match &self.density {
            Some(g) => crate::transform::spherical_transform(model, g, &[lambda])?.values[0],
            None => Complex64::new(0.0, 0.0),
        };
        if self.atoms.iter().any(|a| a.r > 0.0) {
            let phi = crate::eigen::radial_eigenfunction(model, lambda)?;
            for a in &self.atoms {
                total += a.mass * phi.value_at(a.r);
            }
        } else {
            total += self.atoms.iter().map(|a| a.mass).sum::<Complex64>();
        }
        Ok(total)
    }
}

/// `f * μ` through the measure symbol.
pub fn convolve_measure(model: &ManifoldModel, f: &RadialFunction, mu: &RadialMeasure) -> Result<RadialFunction> {
    let sym = mu.symbol_on_grid(model)?;
    let fh = transform_on_grid(model, f)?;
    let mut out = inverse_transform(model, &fh.product(&sym)?)?;
    out.label = format!("{}*mu", f.label);
    Ok(out)
}

/// Outcome of `‖f*g‖_p ≤ ‖f‖_p ‖g‖₁`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct YoungReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks the Young bound; `p = ∞` uses the max norm over grid nodes.
pub fn young_bound_check(model: &ManifoldModel, f: &RadialFunction, g: &RadialFunction, p: f64) -> Result<YoungReport> {
    if !(p >= 1.0) {
        return Err(Error::Input(format!("need p >= 1, got {p}")));
    }
    let conv = convolve_radial(model, f, g)?;
    let g1 = lp_norm_radial(model, g, 1.0)?;
    let (lhs, fp) = if p.is_infinite() {
        (sup_norm(&conv), sup_norm(f))
    } else {
        (lp_norm_radial(model, &conv, p)?, lp_norm_radial(model, f, p)?)
    };
    let rhs = fp * g1;
    Ok(YoungReport { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-6) })
}

/// Unit-mass Gaussian `c·exp(−(r/width)²)`.
pub fn approximate_identity(model: &ManifoldModel, width: f64) -> Result<RadialFunction> {
    if !(width > 0.0) {
        return Err(Error::Input(format!("width must be positive, got {width}")));
    }
    let g = RadialFunction::from_real_fn(model, format!("bump[{width}]"), |r| (-(r / width).powi(2)).exp());
    let mass = lp_norm_radial(model, &g, 1.0)?;
    Ok(g.scaled(Complex64::new(1.0 / mass, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_radius_is_bounded() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        assert!(RadialMeasure::sphere_average(9.9).validate(&m).is_ok());
        assert!(matches!(RadialMeasure::sphere_average(10.0).validate(&m), Err(Error::Input(_))));
        assert!(matches!(RadialMeasure::sphere_average(-1.0).validate(&m), Err(Error::Input(_))));
    }

    #[test]
    fn total_variation_dominates_mass() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        let mu = RadialMeasure {
            atoms: vec![
                Atom { r: 0.0, mass: Complex64::new(1.0, 0.0) },
                Atom { r: 1.0, mass: Complex64::new(-0.5, 0.5) },
            ],
            density: Some(RadialFunction::from_real_fn(&m, "g", |r| -(-r * r).exp())),
        };
        let tv = mu.total_variation(&m).unwrap();
        let total: Complex64 = mu.atoms.iter().map(|a| a.mass).sum();
        assert!(tv >= total.norm());
        assert!(tv >= lp_norm_radial(&m, mu.density.as_ref().unwrap(), 1.0).unwrap());
    }

    #[test]
    fn approximate_identity_has_unit_mass() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 4096).unwrap();
        for w in APPROXIMATE_IDENTITY_WIDTHS {
            let g = approximate_identity(&m, w).unwrap();
            assert!((m.integrate_radial(&g.values).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_needs_hyperbolic() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        let g = RadialFunction::from_real_fn(&m, "g", |r| (-r * r).exp());
        assert!(convolve_direct(&m, ConvolutionInput::Radial(&g), &g, &[f64::NAN]).is_err());
    }
}
