use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dgp::{generate_dgp, DgpKind, DgpSpec};
use crate::error::{Error, Result};
use crate::fen::{FenArchitecture, TrainConfig};
use crate::imaging::{ImagingMethod, ImagingOptions};
use crate::io::{load_csv, CsvSchema};
use crate::regress::RegressorSpec;
use crate::series::CenterRangeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Dgp(DgpSpec),
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Dgp(DgpSpec::new(DgpKind::C1, 1500, 7))
    }
}

impl DataSource {
    /// Relative CSV paths are resolved against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<CenterRangeSeries> {
        match self {
            DataSource::Dgp(spec) => generate_dgp(spec),
            DataSource::Csv { path, schema } => {
                let path = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                Ok(load_csv(path, *schema)?.to_center_range())
            }
        }
    }
}

/// Lag orders; a missing value is chosen from the partial autocorrelations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrdersConfig {
    pub center: Option<usize>,
    pub range: Option<usize>,
    pub max_lag: usize,
}

impl Default for OrdersConfig {
    fn default() -> Self {
        Self { center: None, range: None, max_lag: 40 }
    }
}

/// Network settings shared by every depth candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub width: usize,
    pub stem_stride: usize,
    pub feature_dim: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let a = FenArchitecture::default();
        Self { width: a.width, stem_stride: a.stem_stride, feature_dim: a.feature_dim }
    }
}

impl NetworkConfig {
    pub fn architecture(&self, blocks: usize) -> FenArchitecture {
        FenArchitecture {
            blocks,
            width: self.width,
            stem_stride: self.stem_stride,
            feature_dim: self.feature_dim,
            ..FenArchitecture::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub orders: OrdersConfig,
    pub segment_lengths: Vec<usize>,
    pub depths: Vec<usize>,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub imaging: ImagingOptions,
    /// Encodings used for feature extraction.
    pub methods: Vec<ImagingMethod>,
    pub regressors: Vec<RegressorSpec>,
    /// Chronological fraction of targets used for fitting.
    pub split: f64,
    /// Train the network and pick orders on the training prefix only.
    pub leak_free: bool,
    /// Score on the training rows instead of the held-out tail (sanity check).
    pub eval_on_train: bool,
    pub seed: u64,
    /// Worker thread cap; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            orders: OrdersConfig::default(),
            segment_lengths: vec![30, 35, 40, 45, 50, 55],
            depths: vec![1, 2, 3],
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            imaging: ImagingOptions::default(),
            methods: ImagingMethod::ALL.to_vec(),
            regressors: RegressorSpec::roster(),
            split: 0.8,
            leak_free: true,
            eval_on_train: false,
            seed: 0,
            jobs: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let DataSource::Dgp(spec) = &self.data {
            spec.validate().map_err(|e| config_err(e.to_string()))?;
        }
        if self.segment_lengths.is_empty() || self.segment_lengths.iter().any(|&d| d < 2) {
            return Err(config_err("segment_lengths must be non-empty and every length >= 2"));
        }
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err(config_err("depths must be non-empty and positive"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(config_err(format!("split must lie in (0, 1), got {}", self.split)));
        }
        if self.methods.is_empty() {
            return Err(config_err("at least one imaging method is required"));
        }
        if self.regressors.is_empty() {
            return Err(config_err("at least one regressor is required"));
        }
        if self.orders.max_lag < 1 || self.orders.center == Some(0) || self.orders.range == Some(0) {
            return Err(config_err("orders and max_lag must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(config_err("jobs must be positive"));
        }
        for r in &self.regressors {
            r.validate().map_err(|e| config_err(e.to_string()))?;
        }
        self.train.validate().map_err(|e| config_err(e.to_string()))?;
        for &d in &self.depths {
            self.network.architecture(d).validate().map_err(|e| config_err(e.to_string()))?;
        }
        if self.imaging.mtf_bins < 2 || self.imaging.resize.is_some_and(|s| s < 2) {
            return Err(config_err("mtf_bins and resize must be at least 2"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form (defaults filled in). `jobs`
    /// does not affect results and is excluded.
    pub fn hash(&self) -> String {
        let canonical = Self { jobs: None, ..self.clone() };
        let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Human-readable description of the work a run would perform.
    pub fn plan(&self) -> String {
        let mut out = String::new();
        let data = match &self.data {
            DataSource::Dgp(s) => format!("dgp {} length {} seed {}", s.kind, s.length, s.seed),
            DataSource::Csv { path, schema } => format!("csv {} ({schema:?})", path.display()),
        };
        let order = |o: Option<usize>| o.map_or_else(|| "auto".to_string(), |v| v.to_string());
        out.push_str(&format!("data: {data}\n"));
        out.push_str(&format!(
            "orders: center {}, range {} (max lag {})\n",
            order(self.orders.center),
            order(self.orders.range),
            self.orders.max_lag
        ));
        out.push_str(&format!(
            "network candidates: {} (depths {:?} x segment lengths {:?})\n",
            self.depths.len() * self.segment_lengths.len(),
            self.depths,
            self.segment_lengths
        ));
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let regs: Vec<&str> = self.regressors.iter().map(RegressorSpec::name).collect();
        out.push_str(&format!(
            "prediction cells: {} (regressors {:?} x [raw + {:?}] x [center, range])\n",
            self.regressors.len() * (1 + self.methods.len()) * 2,
            regs,
            methods
        ));
        out.push_str(&format!(
            "split {} chronological, leak_free {}, seed {}, config hash {}\n",
            self.split,
            self.leak_free,
            self.seed,
            self.hash()
        ));
        out
    }
}
