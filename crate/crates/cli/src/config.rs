use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use radial_chaos::io::ModelDescriptor;
use radial_chaos::model::{ManifoldModel, SpectralGrid};
use radial_chaos::{Error, Result};
use serde::{Deserialize, Serialize};

/// Run configuration, read from `--config` or defaulted to H³.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelDescriptor,
    #[serde(default)]
    pub spectral: SpectralGrid,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Directory relative paths in the config resolve against.
    #[serde(skip)]
    pub base: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelDescriptor::default(),
            spectral: SpectralGrid::default(),
            tolerances: BTreeMap::new(),
            output_dir: None,
            seed: 0,
            base: PathBuf::from("."),
        }
    }
}

const DEFAULT_TOLERANCES: [(&str, f64); 3] = [("ode_residual", 1e-7), ("roundtrip", 1e-3), ("periodic", 1e-2)];

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Input(format!("cannot read config {}: {e}", p.display())))?;
                let mut cfg: RunConfig = serde_json::from_str(&text)?;
                cfg.base = p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
                cfg
            }
            None => RunConfig::default(),
        };
        for (k, v) in DEFAULT_TOLERANCES {
            cfg.tolerances.entry(k.to_string()).or_insert(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Input(format!("tolerance '{k}' must be positive, got {v}")));
        }
        self.spectral.validate()
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn build_model(&self) -> Result<ManifoldModel> {
        self.model.build(self.spectral, &self.base)
    }
}
