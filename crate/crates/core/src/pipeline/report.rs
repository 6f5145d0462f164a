use std::path::Path;

use serde::{Deserialize, Serialize};

use super::selection::FenSelection;
use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::metrics::MetricSet;
use crate::series::Component;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
}

/// Lag orders used; `auto_*` holds the raw selection when it was not pinned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderChoice {
    pub center: usize,
    pub range: usize,
    pub auto_center: Option<usize>,
    pub auto_range: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub regressor: String,
    /// `raw` or an imaging method name.
    pub method: String,
    pub source: Component,
    pub train_rows: Option<usize>,
    pub eval_rows: Option<usize>,
    pub metrics: Option<MetricSet>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdeEntry {
    pub regressor: String,
    pub method: String,
    pub value: Option<f64>,
    pub single_root: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub meta: ReportMeta,
    pub observations: usize,
    /// First target index of the evaluation tail.
    pub split_index: usize,
    pub evaluated_on: String,
    pub orders: OrderChoice,
    pub fen_selection: FenSelection,
    pub cells: Vec<CellResult>,
    pub mde: Vec<MdeEntry>,
}

const CSV_HEADER: [&str; 13] = [
    "regressor",
    "method",
    "source",
    "mse",
    "mae",
    "mape",
    "smape",
    "mde",
    "mde_single_root",
    "error",
    "seed",
    "config_hash",
    "version",
];

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

impl ExperimentReport {
    pub fn cell(&self, regressor: &str, method: &str, source: Component) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.regressor == regressor && c.method == method && c.source == source)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per cell plus one `interval` row per MDE entry.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        let meta = [self.meta.seed.to_string(), self.meta.config_hash.clone(), self.meta.version.clone()];
        for c in &self.cells {
            let m = c.metrics;
            let mut rec = vec![
                c.regressor.clone(),
                c.method.clone(),
                c.source.to_string(),
                opt(m.map(|m| m.mse)),
                opt(m.map(|m| m.mae)),
                opt(m.and_then(|m| m.mape)),
                opt(m.and_then(|m| m.smape)),
                String::new(),
                String::new(),
                c.error.clone().unwrap_or_default(),
            ];
            rec.extend(meta.iter().cloned());
            w.write_record(&rec).map_err(csv_err)?;
        }
        for e in &self.mde {
            let mut rec = vec![
                e.regressor.clone(),
                e.method.clone(),
                "interval".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                opt(e.value),
                opt(e.single_root),
                e.error.clone().unwrap_or_default(),
            ];
            rec.extend(meta.iter().cloned());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("report.csv"), self.to_csv()?)?;
        Ok(())
    }

    pub fn summary_table(&self) -> String {
        let c = &self.fen_selection.chosen;
        let mut out = format!(
            "selected network: depth {}, segment length {}, best epoch {}, accuracy {:.4}\n",
            c.depth, c.segment_len, c.best_epoch, c.accuracy
        );
        out.push_str(&format!(
            "orders: center {}, range {}; evaluated on {} (split index {} of {})\n",
            self.orders.center, self.orders.range, self.evaluated_on, self.split_index, self.observations
        ));
        out.push_str(&format!(
            "{:<8} {:<6} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "model", "method", "mse_c", "mse_r", "mae_c", "mae_r", "mde"
        ));
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        for e in &self.mde {
            let get = |src| self.cell(&e.regressor, &e.method, src).and_then(|c| c.metrics);
            let (mc, mr) = (get(Component::Center), get(Component::Range));
            out.push_str(&format!(
                "{:<8} {:<6} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
                e.regressor,
                e.method,
                fmt(mc.map(|m| m.mse)),
                fmt(mr.map(|m| m.mse)),
                fmt(mc.map(|m| m.mae)),
                fmt(mr.map(|m| m.mae)),
                fmt(e.value)
            ));
        }
        out
    }
}
