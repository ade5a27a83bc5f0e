//! Radial L^p multipliers: heat semigroup, sphere means, convolution by
//! kernels and measures, and user symbols. Symbols are evaluated on strips,
//! applied spectrally to radial functions and spatially (through the kernel)
//! on hyperbolic models.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::convolution::{convolve_direct, Atom, ConvolutionInput, RadialMeasure, UniformProfile};
use crate::eigen::radial_eigenfunction;
use crate::error::{Error, Result};
use crate::model::{axial_distance, strip_halfwidth, ManifoldModel, RadialFunction};
use crate::quadrature::RadialGrid;
use crate::transform::{
    inverse_transform, spherical_transform, transform_on_grid, AxialField, SpectralFunction,
};

pub type SymbolFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum MultiplierKind {
    Heat { t: f64 },
    SphereMean { r0: f64 },
    ConvKernel { g: RadialFunction },
    ConvMeasure { mu: RadialMeasure },
    CustomSymbol { symbol: SymbolFn, halfwidth: f64 },
}

impl fmt::Debug for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Heat { t } => write!(f, "Heat {{ t: {t} }}"),
            Self::SphereMean { r0 } => write!(f, "SphereMean {{ r0: {r0} }}"),
            Self::ConvKernel { g } => write!(f, "ConvKernel {{ g: {} }}", g.label),
            Self::ConvMeasure { mu } => write!(f, "ConvMeasure {{ atoms: {} }}", mu.atoms.len()),
            Self::CustomSymbol { halfwidth, .. } => write!(f, "CustomSymbol {{ halfwidth: {halfwidth} }}"),
        }
    }
}

/// An operator descriptor with a symbol holomorphic on `|Im λ| < strip_halfwidth`.
#[derive(Debug, Clone)]
pub struct Multiplier {
    pub kind: MultiplierKind,
    pub strip_halfwidth: f64,
}

/// Decay rate β of `|g(r)| ~ e^{−βr}` measured between `r_max/2` and `3r_max/4`.
fn decay_rate(model: &ManifoldModel, g: &RadialFunction) -> f64 {
    let (a, b) = (0.5 * model.r_max, 0.75 * model.r_max);
    let (ga, gb) = (g.eval(a).norm(), g.eval(b).norm());
    if gb == 0.0 || ga == 0.0 {
        return f64::INFINITY;
    }
    (ga.ln() - gb.ln()) / (b - a)
}

fn kernel_halfwidth(model: &ManifoldModel, g: &RadialFunction) -> f64 {
    let beta = decay_rate(model, g);
    model.rho.min((beta - model.rho).max(0.0))
}

impl Multiplier {
    pub fn heat(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Input(format!("heat time must be positive, got {t}")));
        }
        Ok(Self { kind: MultiplierKind::Heat { t }, strip_halfwidth: f64::INFINITY })
    }

    pub fn sphere_mean(model: &ManifoldModel, r0: f64) -> Result<Self> {
        RadialMeasure::sphere_average(r0).validate(model)?;
        Ok(Self { kind: MultiplierKind::SphereMean { r0 }, strip_halfwidth: model.rho })
    }

    pub fn conv_kernel(model: &ManifoldModel, g: RadialFunction) -> Result<Self> {
        g.check_grid(model)?;
        let halfwidth = kernel_halfwidth(model, &g);
        Ok(Self { kind: MultiplierKind::ConvKernel { g }, strip_halfwidth: halfwidth })
    }

    pub fn conv_measure(model: &ManifoldModel, mu: RadialMeasure) -> Result<Self> {
        mu.validate(model)?;
        let halfwidth = match &mu.density {
            Some(g) => kernel_halfwidth(model, g),
            None => model.rho,
        };
        Ok(Self { kind: MultiplierKind::ConvMeasure { mu }, strip_halfwidth: halfwidth })
    }

    pub fn custom(symbol: SymbolFn, halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) {
            return Err(Error::Input(format!("declared halfwidth must be positive, got {halfwidth}")));
        }
        Ok(Self { kind: MultiplierKind::CustomSymbol { symbol, halfwidth }, strip_halfwidth: halfwidth })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            MultiplierKind::Heat { t } => format!("heat(t={t})"),
            MultiplierKind::SphereMean { r0 } => format!("sphere_mean(r0={r0})"),
            MultiplierKind::ConvKernel { g } => format!("conv_kernel({})", g.label),
            MultiplierKind::ConvMeasure { .. } => "conv_measure".into(),
            MultiplierKind::CustomSymbol { .. } => "custom_symbol".into(),
        }
    }
}

/// `m_T(λ)` for `|Im λ| < strip_halfwidth`.
pub fn symbol_eval(model: &ManifoldModel, t: &Multiplier, lambda: Complex64) -> Result<Complex64> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) || lambda.im.abs() >= t.strip_halfwidth {
        return Err(Error::Domain { lambda: lambda.to_string(), halfwidth: t.strip_halfwidth });
    }
    match &t.kind {
        MultiplierKind::Heat { t } => Ok((-(lambda * lambda + model.rho * model.rho) * *t).exp()),
        MultiplierKind::SphereMean { r0 } => {
            if *r0 == 0.0 {
                return Ok(Complex64::new(1.0, 0.0));
            }
            Ok(radial_eigenfunction(model, lambda)?.value_at(*r0))
        }
        MultiplierKind::ConvKernel { g } => Ok(spherical_transform(model, g, &[lambda])?.values[0]),
        MultiplierKind::ConvMeasure { mu } => mu.symbol(model, lambda),
        MultiplierKind::CustomSymbol { symbol, .. } => Ok(symbol(lambda)),
    }
}

/// Symbol on the model's real spectral grid.
pub fn symbol_on_grid(model: &ManifoldModel, t: &Multiplier) -> Result<SpectralFunction> {
    let mut spec = match &t.kind {
        MultiplierKind::Heat { t } => {
            let rho2 = model.rho * model.rho;
            SpectralFunction::from_symbol(model, "heat", |l| Complex64::new((-(l * l + rho2) * t).exp(), 0.0))
        }
        MultiplierKind::SphereMean { r0 } => RadialMeasure::sphere_average(*r0).symbol_on_grid(model)?,
        MultiplierKind::ConvKernel { g } => transform_on_grid(model, g)?,
        MultiplierKind::ConvMeasure { mu } => mu.symbol_on_grid(model)?,
        MultiplierKind::CustomSymbol { symbol, .. } => {
            SpectralFunction::from_symbol(model, "custom", |l| symbol(Complex64::new(l, 0.0)))
        }
    };
    spec.source_label = t.label();
    Ok(spec)
}

/// `Tf = invert(m_T f̂)`.
pub fn apply_multiplier(model: &ManifoldModel, t: &Multiplier, f: &RadialFunction) -> Result<RadialFunction> {
    let sym = symbol_on_grid(model, t)?;
    let fh = transform_on_grid(model, f)?;
    let mut out = inverse_transform(model, &fh.product(&sym)?)?;
    out.label = format!("{}[{}]", t.label(), f.label);
    Ok(out)
}

/// Heat kernel `h_t` by inversion of `e^{−t(λ²+ρ²)}`.
pub fn heat_kernel_profile(model: &ManifoldModel, t: f64) -> Result<RadialFunction> {
    let m = Multiplier::heat(t)?;
    let sym = symbol_on_grid(model, &m)?;
    let mut h = inverse_transform(model, &sym)?;
    h.label = format!("h[{t}]");
    Ok(h)
}

/// Spatial realization of a multiplier, truncated to `r ≤ r_max/2`.
#[derive(Debug, Clone)]
pub enum KernelRealization {
    Function(RadialFunction),
    Measure { atoms: Vec<Atom>, density: Option<RadialFunction> },
}

fn truncate_half(model: &ManifoldModel, g: &RadialFunction) -> RadialFunction {
    let half = 0.5 * model.r_max;
    let mut out = g.clone();
    for (v, &r) in out.values.iter_mut().zip(&model.grid.nodes) {
        if r > half {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    out
}

pub fn kernel_realization(model: &ManifoldModel, t: &Multiplier) -> Result<KernelRealization> {
    model.require_hyperbolic("kernel-side application")?;
    Ok(match &t.kind {
        MultiplierKind::Heat { t } => KernelRealization::Function(truncate_half(model, &heat_kernel_profile(model, *t)?)),
        MultiplierKind::SphereMean { r0 } => KernelRealization::Measure {
            atoms: vec![Atom { r: *r0, mass: Complex64::new(1.0, 0.0) }],
            density: None,
        },
        MultiplierKind::ConvKernel { g } => KernelRealization::Function(truncate_half(model, g)),
        MultiplierKind::ConvMeasure { mu } => KernelRealization::Measure {
            atoms: mu.atoms.clone(),
            density: mu.density.as_ref().map(|g| truncate_half(model, g)),
        },
        MultiplierKind::CustomSymbol { .. } => {
            return Err(Error::Unsupported("a custom symbol has no kernel realization".into()))
        }
    })
}

impl KernelRealization {
    /// `(T u)` at distance `d` from the center of the radial function `u`.
    pub fn apply(&self, model: &ManifoldModel, u: &RadialFunction, distances: &[f64]) -> Result<Vec<Complex64>> {
        match self {
            KernelRealization::Function(k) => convolve_direct(model, ConvolutionInput::Radial(u), k, distances),
            KernelRealization::Measure { atoms, density } => {
                let profile = UniformProfile::new(u);
                let mut out: Vec<Complex64> = distances
                    .par_iter()
                    .map(|&d| {
                        atoms
                            .iter()
                            .map(|a| {
                                let avg: Complex64 = model
                                    .sphere
                                    .thetas
                                    .iter()
                                    .zip(&model.sphere.weights)
                                    .map(|(t, w)| profile.eval(axial_distance(a.r, *t, d)) * *w)
                                    .sum();
                                a.mass * avg
                            })
                            .sum()
                    })
                    .collect();
                if let Some(g) = density {
                    let extra = convolve_direct(model, ConvolutionInput::Radial(u), g, distances)?;
                    out.iter_mut().zip(extra).for_each(|(o, e)| *o += e);
                }
                Ok(out)
            }
        }
    }

    /// `(T F)(x_s)` for a field on the axial grid about o.
    pub fn apply_axial(&self, model: &ManifoldModel, field: &AxialField, points: &[f64]) -> Result<Vec<Complex64>> {
        match self {
            KernelRealization::Function(k) => convolve_direct(model, ConvolutionInput::Axial(field), k, points),
            KernelRealization::Measure { .. } => Err(Error::Unsupported(
                "measure kernels act on translated radial terms, not on sampled axial fields".into(),
            )),
        }
    }

    /// `T u` on the full model grid, evaluated on a coarser composite grid and
    /// interpolated back.
    pub fn apply_radial(&self, model: &ManifoldModel, u: &RadialFunction) -> Result<RadialFunction> {
        let panels = (model.grid.panels / 8).max(crate::quadrature::MIN_PANELS);
        let coarse = RadialGrid::with_panels(model.r_max, panels, crate::quadrature::MAX_ORDER);
        let vals = self.apply(model, u, &coarse.nodes)?;
        let values = model.grid.nodes.iter().map(|&r| coarse.interpolate(&vals, r)).collect();
        RadialFunction::new(model.grid.clone(), values, format!("K[{}]", u.label))
    }
}

/// Unit-mass Gaussian probe `c·exp(−(r/width)²)`.
pub fn gaussian_probe(model: &ManifoldModel, width: f64) -> Result<RadialFunction> {
    crate::convolution::approximate_identity(model, width)
}

/// `m(λ_j) = (Tφ)^(λ_j) / φ̂(λ_j)` for the given probe.
pub fn extract_symbol_with_probe(
    model: &ManifoldModel,
    apply_fn: &dyn Fn(&RadialFunction) -> Result<RadialFunction>,
    probe: &RadialFunction,
    lambdas: &[Complex64],
) -> Result<SpectralFunction> {
    let image = apply_fn(probe)?;
    let ph = spherical_transform(model, probe, lambdas)?;
    let th = spherical_transform(model, &image, lambdas)?;
    let mut values = Vec::with_capacity(lambdas.len());
    for ((l, a), b) in lambdas.iter().zip(&ph.values).zip(&th.values) {
        if a.norm() < 1e-9 {
            return Err(Error::ProbeZero { lambda: l.to_string(), magnitude: a.norm() });
        }
        values.push(b / a);
    }
    SpectralFunction::new(lambdas.to_vec(), values, format!("symbol[{}]", image.label))
}

/// Symbol extraction with the unit-width Gaussian probe.
pub fn extract_symbol(
    model: &ManifoldModel,
    apply_fn: &dyn Fn(&RadialFunction) -> Result<RadialFunction>,
    lambdas: &[Complex64],
) -> Result<SpectralFunction> {
    let probe = gaussian_probe(model, 1.0)?;
    extract_symbol_with_probe(model, apply_fn, &probe, lambdas)
}

/// 8×8 sample of `S_p`: `Re λ ∈ [0, 4]`, `|Im λ| ≤ 0.9 b`.
pub fn strip_sample(model: &ManifoldModel, p: f64) -> Result<Vec<Complex64>> {
    let b = strip_halfwidth(model, p)?;
    let mut out = Vec::with_capacity(64);
    for i in 0..8 {
        for j in 0..8 {
            let re = 4.0 * i as f64 / 7.0;
            let im = 0.9 * b * (2.0 * j as f64 / 7.0 - 1.0);
            out.push(Complex64::new(re, im));
        }
    }
    Ok(out)
}

/// True iff `|m_T|` varies by more than `1e-9 (1 + max|m_T|)` on the strip sample.
pub fn nonconstancy_check(model: &ManifoldModel, t: &Multiplier, p: f64) -> Result<bool> {
    let pts = strip_sample(model, p)?;
    let b = strip_halfwidth(model, p)?;
    let vals: Vec<Result<f64>> = pts
        .par_iter()
        .map(|&l| {
            if l.im.abs() >= t.strip_halfwidth {
                return Err(Error::Domain { lambda: l.to_string(), halfwidth: t.strip_halfwidth.min(b) });
            }
            symbol_eval(model, t, l).map(|v| v.norm())
        })
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for v in vals {
        let v = v?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo > 1e-9 * (1.0 + hi))
}

/// Sample radii for the eigen-relation: 24 points in `(0, r_max/2]`.
pub fn eigen_relation_radii(model: &ManifoldModel) -> Vec<f64> {
    (1..=24).map(|i| 0.5 * model.r_max * i as f64 / 24.0).collect()
}

/// `max|Tφ_λ − m(λ)φ_λ| / max|φ_λ|` over the sample radii, with `T` applied
/// through its kernel.
pub fn eigen_relation_defect(model: &ManifoldModel, t: &Multiplier, lambda: Complex64) -> Result<f64> {
    let phi = radial_eigenfunction(model, lambda)?;
    let m = symbol_eval(model, t, lambda)?;
    let kernel = kernel_realization(model, t)?;
    let radii = eigen_relation_radii(model);
    let tphi = kernel.apply(model, &phi.to_radial_function(), &radii)?;
    let mut num = 0.0_f64;
    let mut den = 0.0_f64;
    for (r, v) in radii.iter().zip(&tphi) {
        let p = phi.value_at(*r);
        num = num.max((v - m * p).norm());
        den = den.max(p.norm());
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_symbol_values() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        let h1 = Multiplier::heat(1.0).unwrap();
        let v = symbol_eval(&m, &h1, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v.re - (-1.0_f64).exp()).abs() < 1e-15);
        let h = Multiplier::heat(0.5).unwrap();
        let v = symbol_eval(&m, &h, Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - (-1.0_f64).exp()).abs() < 1e-15);
        assert!(Multiplier::heat(0.0).is_err());
    }

    #[test]
    fn domain_is_enforced() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        let s = Multiplier::sphere_mean(&m, 1.0).unwrap();
        assert!(matches!(symbol_eval(&m, &s, Complex64::new(0.0, 1.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn kernel_halfwidth_follows_decay() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 512).unwrap();
        let g = RadialFunction::from_real_fn(&m, "e", |r| (-2.5 * r).exp());
        let t = Multiplier::conv_kernel(&m, g).unwrap();
        assert!((t.strip_halfwidth - 1.0).abs() < 1e-9);
        let g = RadialFunction::from_real_fn(&m, "e", |r| (-1.5 * r).exp());
        let t = Multiplier::conv_kernel(&m, g).unwrap();
        assert!((t.strip_halfwidth - 0.5).abs() < 1e-9);
        let g = RadialFunction::from_real_fn(&m, "gauss", |r| (-r * r).exp());
        assert_eq!(Multiplier::conv_kernel(&m, g).unwrap().strip_halfwidth, 1.0);
    }

    #[test]
    fn custom_symbols_have_no_kernel() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        let c = Multiplier::custom(Arc::new(|l| l * l), 0.5).unwrap();
        assert!(matches!(kernel_realization(&m, &c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn strip_sample_has_64_points_inside() {
        let m = ManifoldModel::hyperbolic(3, 20.0, 256).unwrap();
        let pts = strip_sample(&m, 4.0).unwrap();
        assert_eq!(pts.len(), 64);
        assert!(pts.iter().all(|l| l.im.abs() < 0.5));
    }
}
