//! CSV and JSON formats. Floats are written with 17 significant digits.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chaos::OrbitRecord;
use crate::convolution::{Atom, RadialMeasure};
use crate::eigen::{CFunctionSample, RadialEigenfunction};
use crate::error::{Error, Result};
use crate::model::{ManifoldModel, ModelKind, ModelSpec, RadialFunction, SpectralGrid, TabulatedDensity};
use crate::multiplier::Multiplier;
use crate::spline::CubicSpline;
use crate::transform::{AxialField, SpectralFunction};

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.16e}")
}

fn write_rows<W: Write>(w: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `r,re,im` on the function's grid.
pub fn write_radial_csv<W: Write>(w: W, f: &RadialFunction) -> Result<()> {
    write_rows(
        w,
        &["r", "re", "im"],
        f.grid.nodes.iter().zip(&f.values).map(|(r, v)| vec![fmt17(*r), fmt17(v.re), fmt17(v.im)]),
    )
}

#[derive(Deserialize)]
struct RadialRow {
    r: f64,
    re: f64,
    im: f64,
}

const MIRRORED_SAMPLES: usize = 8;

/// Reads `r,re,im`. Samples at the model's nodes are taken as they are;
/// other radii are resampled with cubic splines, and the function is set to
/// zero beyond the last sample.
pub fn read_radial_csv(model: &ManifoldModel, path: &Path) -> Result<RadialFunction> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        let row: RadialRow = row?;
        if !(row.r.is_finite() && row.re.is_finite() && row.im.is_finite()) || row.r < 0.0 {
            return Err(Error::Input(format!("bad row r = {} in {}", row.r, path.display())));
        }
        rows.push(row);
    }
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let nodes = &model.grid.nodes;
    let on_grid = rows.len() == nodes.len() && rows.iter().zip(nodes).all(|(a, r)| (a.r - r).abs() <= 1e-12 * (1.0 + r));
    if on_grid {
        let values = rows.iter().map(|a| Complex64::new(a.re, a.im)).collect();
        return RadialFunction::new(model.grid.clone(), values, label);
    }
    if rows.len() < 4 {
        return Err(Error::Input(format!("{} has {} rows; need 4 or more", path.display(), rows.len())));
    }
    let (lo, hi) = (rows[0].r, rows[rows.len() - 1].r);
    // Profiles are even in r, so a few mirrored samples stand in for f'(0) = 0.
    let mirrored = if lo == 0.0 { rows.len().min(MIRRORED_SAMPLES + 1) - 1 } else { 0 };
    let ext: Vec<(f64, f64, f64)> = rows[1..=mirrored]
        .iter()
        .rev()
        .map(|a| (-a.r, a.re, a.im))
        .chain(rows.iter().map(|a| (a.r, a.re, a.im)))
        .collect();
    let xs: Vec<f64> = ext.iter().map(|a| a.0).collect();
    let bad = || Error::Input(format!("radii in {} must be strictly increasing", path.display()));
    let re = CubicSpline::natural(xs.clone(), ext.iter().map(|a| a.1).collect()).ok_or_else(bad)?;
    let im = CubicSpline::natural(xs, ext.iter().map(|a| a.2).collect()).ok_or_else(bad)?;
    if lo > nodes[0] {
        return Err(Error::Input(format!("{} starts at r = {lo}; samples must reach the center", path.display())));
    }
    let values = nodes
        .iter()
        .map(|&r| if r > hi { Complex64::new(0.0, 0.0) } else { Complex64::new(re.eval(r).0, im.eval(r).0) })
        .collect();
    RadialFunction::new(model.grid.clone(), values, label)
}

/// `r,re_phi,im_phi,re_dphi,im_dphi`.
pub fn write_eigen_csv<W: Write>(w: W, e: &RadialEigenfunction) -> Result<()> {
    write_rows(
        w,
        &["r", "re_phi", "im_phi", "re_dphi", "im_dphi"],
        e.grid.nodes.iter().zip(e.values.iter().zip(&e.derivative_values)).map(|(r, (v, d))| {
            vec![fmt17(*r), fmt17(v.re), fmt17(v.im), fmt17(d.re), fmt17(d.im)]
        }),
    )
}

/// `lambda,re_c,im_c,residual`.
pub fn write_c_table_csv<W: Write>(w: W, samples: &[CFunctionSample]) -> Result<()> {
    write_rows(
        w,
        &["lambda", "re_c", "im_c", "residual"],
        samples.iter().map(|s| vec![fmt17(s.lambda), fmt17(s.c_value.re), fmt17(s.c_value.im), fmt17(s.fit_residual)]),
    )
}

/// `lambda_re,lambda_im,re,im`.
pub fn write_spectral_csv<W: Write>(w: W, f: &SpectralFunction) -> Result<()> {
    write_rows(
        w,
        &["lambda_re", "lambda_im", "re", "im"],
        f.lambda_nodes.iter().zip(&f.values).map(|(l, v)| vec![fmt17(l.re), fmt17(l.im), fmt17(v.re), fmt17(v.im)]),
    )
}

/// `r,theta,re,im`, radius-major.
pub fn write_axial_csv<W: Write>(w: W, f: &AxialField) -> Result<()> {
    let rows = f.radii.iter().enumerate().flat_map(move |(i, r)| {
        f.thetas.iter().enumerate().map(move |(k, t)| {
            let v = f.at(i, k);
            vec![fmt17(*r), fmt17(*t), fmt17(v.re), fmt17(v.im)]
        })
    });
    write_rows(w, &["r", "theta", "re", "im"], rows)
}

/// `step,norm,log_norm`.
pub fn write_orbit_csv<W: Write>(w: W, o: &OrbitRecord) -> Result<()> {
    write_rows(
        w,
        &["step", "norm", "log_norm"],
        o.norms.iter().enumerate().map(|(n, v)| vec![n.to_string(), fmt17(*v), fmt17(v.ln())]),
    )
}

/// Resolves `path` against the directory of the file that named it.
pub fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub r: f64,
    pub mass_re: f64,
    #[serde(default)]
    pub mass_im: f64,
}

/// `{"atoms": [{"r", "mass_re", "mass_im"}], "density_csv": path or null}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
    #[serde(default)]
    pub density_csv: Option<String>,
}

impl MeasureJson {
    pub fn to_measure(&self, model: &ManifoldModel, base: &Path) -> Result<RadialMeasure> {
        let density = match &self.density_csv {
            Some(p) => Some(read_radial_csv(model, &resolve(base, p))?),
            None => None,
        };
        let mu = RadialMeasure {
            atoms: self.atoms.iter().map(|a| Atom { r: a.r, mass: Complex64::new(a.mass_re, a.mass_im) }).collect(),
            density,
        };
        mu.validate(model)?;
        Ok(mu)
    }
}

/// Multiplier descriptor, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierJson {
    Heat { t: f64 },
    SphereMean { r0: f64 },
    ConvKernel { csv: String },
    ConvMeasure { measure: MeasureJson },
}

impl MultiplierJson {
    pub fn to_multiplier(&self, model: &ManifoldModel, base: &Path) -> Result<Multiplier> {
        match self {
            MultiplierJson::Heat { t } => Multiplier::heat(*t),
            MultiplierJson::SphereMean { r0 } => Multiplier::sphere_mean(model, *r0),
            MultiplierJson::ConvKernel { csv } => Multiplier::conv_kernel(model, read_radial_csv(model, &resolve(base, csv))?),
            MultiplierJson::ConvMeasure { measure } => Multiplier::conv_measure(model, measure.to_measure(model, base)?),
        }
    }

    /// Reads a descriptor file; relative paths inside resolve against its directory.
    pub fn load(model: &ManifoldModel, path: &Path) -> Result<Multiplier> {
        let text = std::fs::read_to_string(path)?;
        let desc: MultiplierJson = serde_json::from_str(&text)?;
        desc.to_multiplier(model, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Model block of the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub kind: ModelKind,
    pub n: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// CSV `r,density` for `custom_density`.
    #[serde(default)]
    pub density_csv: Option<String>,
    /// Overrides ρ for `custom_density`; otherwise `A'/(2A)` at `r_max`.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_theta_nodes")]
    pub theta_nodes: usize,
}

fn default_r_max() -> f64 {
    crate::model::DEFAULT_R_MAX
}

fn default_grid_size() -> usize {
    crate::model::DEFAULT_GRID_SIZE
}

fn default_theta_nodes() -> usize {
    crate::model::DEFAULT_THETA_NODES
}

impl Default for ModelDescriptor {
    fn default() -> Self {
        Self {
            kind: ModelKind::Hyperbolic,
            n: 3,
            r_max: default_r_max(),
            grid_size: default_grid_size(),
            density_csv: None,
            rho: None,
            theta_nodes: default_theta_nodes(),
        }
    }
}

impl ModelDescriptor {
    pub fn build(&self, spectral: SpectralGrid, base: &Path) -> Result<ManifoldModel> {
        let spec = match self.kind {
            ModelKind::Hyperbolic => {
                if self.density_csv.is_some() || self.rho.is_some() {
                    return Err(Error::Input("density_csv and rho apply to custom_density models only".into()));
                }
                ModelSpec::Hyperbolic
            }
            ModelKind::CustomDensity => {
                let path = self
                    .density_csv
                    .as_ref()
                    .ok_or_else(|| Error::Input("custom_density needs density_csv".into()))?;
                let density = TabulatedDensity::from_csv(self.n, &resolve(base, path))?;
                if density.last_radius() < self.r_max {
                    return Err(Error::Model(format!(
                        "density table ends at r = {}, before r_max = {}",
                        density.last_radius(),
                        self.r_max
                    )));
                }
                ModelSpec::Custom { density: Arc::new(density), rho: self.rho }
            }
        };
        ManifoldModel::build(spec, self.n, self.r_max, self.grid_size, spectral, self.theta_nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt17(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn multiplier_descriptors_parse() {
        let h: MultiplierJson = serde_json::from_str(r#"{"kind":"heat","t":1.0}"#).unwrap();
        assert_eq!(h, MultiplierJson::Heat { t: 1.0 });
        let s: MultiplierJson = serde_json::from_str(r#"{"kind":"sphere_mean","r0":1.0}"#).unwrap();
        assert_eq!(s, MultiplierJson::SphereMean { r0: 1.0 });
        let m: MultiplierJson = serde_json::from_str(
            r#"{"kind":"conv_measure","measure":{"atoms":[{"r":0.0,"mass_re":1.0,"mass_im":0.0}],"density_csv":null}}"#,
        )
        .unwrap();
        assert!(matches!(m, MultiplierJson::ConvMeasure { .. }));
        assert!(serde_json::from_str::<MultiplierJson>(r#"{"kind":"heat"}"#).is_err());
        assert!(serde_json::from_str::<MultiplierJson>(r#"{"kind":"warp","t":1}"#).is_err());
    }
}
