use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::{CellResult, ExperimentReport, MdeEntry, OrderChoice, ReportMeta};
use super::seeds::cell_seed;
use super::selection::{build_feature_datasets, select_network_on, FenSelection};
use crate::dataset::build_lag_dataset;
use crate::error::{Error, Result};
use crate::fen::FenModel;
use crate::imaging::ImagingMethod;
use crate::metrics::{mde, mde_single_root, MetricSet};
use crate::regress::{fit, RegressorSpec};
use crate::series::{CenterRangeSeries, Component};
use crate::stats::select_order;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Feature source of a prediction cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Raw,
    Extracted(ImagingMethod),
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::Extracted(m) => m.name(),
        }
    }

    fn code(self) -> u64 {
        match self {
            Variant::Raw => 0,
            Variant::Extracted(m) => u64::from(m.label()),
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    /// The selected network, with run provenance attached.
    pub model: FenModel,
}

/// Rows of one regression problem, tagged with their target indices.
struct Rows {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    first_target: usize,
}

struct Prediction {
    start: usize,
    truth: Vec<f64>,
    pred: Vec<f64>,
}

fn prefix(series: &CenterRangeSeries, n: usize) -> Result<CenterRangeSeries> {
    CenterRangeSeries::new(series.center()[..n].to_vec(), series.range()[..n].to_vec())
}

fn choose_order(pinned: Option<usize>, x: &[f64], max_lag: usize) -> Result<(usize, Option<usize>)> {
    match pinned {
        Some(a) => Ok((a, None)),
        None => {
            let auto = select_order(x, max_lag.min(x.len() - 1))?;
            // Lag windows are imaged, and images need at least two pixels per side.
            Ok((auto.max(2), Some(auto)))
        }
    }
}

fn unique_labels(specs: &[RegressorSpec]) -> Vec<String> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if specs.iter().filter(|o| o.name() == s.name()).count() > 1 {
                format!("{}{}", s.name(), i)
            } else {
                s.name().to_string()
            }
        })
        .collect()
}

fn seeded(spec: &RegressorSpec, master: u64, key: &[u64]) -> RegressorSpec {
    match *spec {
        RegressorSpec::Mlp { hidden, epochs, learning_rate, seed } => {
            let mut k = vec![seed];
            k.extend_from_slice(key);
            RegressorSpec::Mlp { hidden, epochs, learning_rate, seed: cell_seed(master, &k) }
        }
        ref other => other.clone(),
    }
}

fn evaluate(spec: &RegressorSpec, rows: &Rows, cut: usize, on_train: bool) -> Result<(MetricSet, Prediction, usize)> {
    let split = cut.saturating_sub(rows.first_target).min(rows.y.len());
    let (train_x, test_x) = rows.x.split_at(split);
    let (train_y, test_y) = rows.y.split_at(split);
    let model = fit(spec, train_x, train_y)?;
    let (eval_x, eval_y, start) =
        if on_train { (train_x, train_y, rows.first_target) } else { (test_x, test_y, rows.first_target + split) };
    let pred = model.predict(eval_x)?;
    let metrics = MetricSet::compute(eval_y, &pred)?;
    Ok((metrics, Prediction { start, truth: eval_y.to_vec(), pred }, train_y.len()))
}

fn paired_mde(c: &Prediction, r: &Prediction) -> Result<(f64, f64)> {
    let start = c.start.max(r.start);
    let end = (c.start + c.pred.len()).min(r.start + r.pred.len());
    if end <= start {
        return Err(Error::InsufficientData("center and range evaluations do not overlap".into()));
    }
    let (ci, ri) = (start - c.start, start - r.start);
    let n = end - start;
    let args = (&c.truth[ci..ci + n], &c.pred[ci..ci + n], &r.truth[ri..ri + n], &r.pred[ri..ri + n]);
    Ok((mde(args.0, args.1, args.2, args.3)?, mde_single_root(args.0, args.1, args.2, args.3)?))
}

/// Runs network selection and the raw-versus-extracted prediction grid.
/// `base_dir` resolves relative CSV paths in the config.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_inner(cfg, base_dir)),
        None => run_inner(cfg, base_dir),
    }
}

fn run_inner(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<ExperimentOutput> {
    let series = cfg.data.load(base_dir).map_err(|e| e.in_stage("loading data"))?;
    let total = series.len();
    let cut = ((cfg.split * total as f64).round() as usize).min(total - 1);
    let fit_part = if cfg.leak_free { prefix(&series, cut)? } else { series.clone() };

    let stage = |e: Error| e.in_stage("order selection");
    let (center_order, auto_center) =
        choose_order(cfg.orders.center, fit_part.center(), cfg.orders.max_lag).map_err(stage)?;
    let (range_order, auto_range) =
        choose_order(cfg.orders.range, fit_part.range(), cfg.orders.max_lag).map_err(stage)?;
    let max_order = center_order.max(range_order);
    if cut < max_order + 2 {
        return Err(stage(Error::InsufficientData(format!(
            "split leaves {cut} training observations, too few for lag order {max_order}"
        ))));
    }

    let (selection, mut model) =
        select_network_on(&fit_part, cfg).map_err(|e| e.in_stage("network selection"))?;
    let meta = ReportMeta { seed: cfg.seed, config_hash: cfg.hash(), version: TOOL_VERSION.to_string() };
    model.provenance.insert("config_hash".into(), meta.config_hash.clone());
    model.provenance.insert("seed".into(), meta.seed.to_string());
    model.provenance.insert("version".into(), meta.version.clone());

    let variants: Vec<Variant> =
        std::iter::once(Variant::Raw).chain(cfg.methods.iter().map(|&m| Variant::Extracted(m))).collect();
    let datasets: Vec<Result<(Rows, Rows)>> = variants
        .par_iter()
        .map(|&v| match v {
            Variant::Raw => {
                let c = build_lag_dataset(series.center(), center_order, Component::Center)?;
                let r = build_lag_dataset(series.range(), range_order, Component::Range)?;
                Ok((
                    Rows { x: c.windows, y: c.targets, first_target: center_order },
                    Rows { x: r.windows, y: r.targets, first_target: range_order },
                ))
            }
            Variant::Extracted(m) => {
                let (c, r) = build_feature_datasets(&model, &series, (center_order, range_order), m, &cfg.imaging)?;
                Ok((
                    Rows { x: c.features, y: c.targets, first_target: center_order },
                    Rows { x: r.features, y: r.targets, first_target: range_order },
                ))
            }
        })
        .collect();

    let labels = unique_labels(&cfg.regressors);
    let mut jobs = Vec::new();
    for ri in 0..cfg.regressors.len() {
        for vi in 0..variants.len() {
            for source in [Component::Center, Component::Range] {
                jobs.push((ri, vi, source));
            }
        }
    }
    let outcomes: Vec<Result<(MetricSet, Prediction, usize)>> = jobs
        .par_iter()
        .map(|&(ri, vi, source)| {
            let (c, r) = datasets[vi].as_ref().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let rows = if source == Component::Center { c } else { r };
            let key = [0xb2, ri as u64, variants[vi].code(), source as u64];
            evaluate(&seeded(&cfg.regressors[ri], cfg.seed, &key), rows, cut, cfg.eval_on_train)
        })
        .collect();

    let mut cells = Vec::with_capacity(jobs.len());
    let mut mde_entries = Vec::new();
    for (pair, chunk) in jobs.chunks(2).zip(outcomes.chunks(2)) {
        let (ri, vi, _) = pair[0];
        for (&(_, _, source), outcome) in pair.iter().zip(chunk) {
            cells.push(CellResult {
                regressor: labels[ri].clone(),
                method: variants[vi].label().to_string(),
                source,
                train_rows: outcome.as_ref().map(|o| o.2).ok(),
                eval_rows: outcome.as_ref().map(|o| o.1.pred.len()).ok(),
                metrics: outcome.as_ref().ok().map(|o| o.0),
                error: outcome.as_ref().err().map(ToString::to_string),
            });
        }
        let value = match (&chunk[0], &chunk[1]) {
            (Ok(c), Ok(r)) => paired_mde(&c.1, &r.1),
            (Err(e), _) | (_, Err(e)) => Err(Error::InvalidArgument(e.to_string())),
        };
        mde_entries.push(MdeEntry {
            regressor: labels[ri].clone(),
            method: variants[vi].label().to_string(),
            value: value.as_ref().ok().map(|v| v.0),
            single_root: value.as_ref().ok().map(|v| v.1),
            error: value.as_ref().err().map(ToString::to_string),
        });
    }

    let report = ExperimentReport {
        meta,
        observations: total,
        split_index: cut,
        evaluated_on: if cfg.eval_on_train { "train".into() } else { "test".into() },
        orders: OrderChoice { center: center_order, range: range_order, auto_center, auto_range },
        fen_selection: selection,
        cells,
        mde: mde_entries,
    };
    Ok(ExperimentOutput { report, model })
}

/// Loads the configured data and runs network selection only.
pub fn select_network(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<(FenSelection, FenModel)> {
    cfg.validate()?;
    let series = cfg.data.load(base_dir)?;
    let fit_part = if cfg.leak_free {
        let cut = ((cfg.split * series.len() as f64).round() as usize).min(series.len() - 1);
        prefix(&series, cut)?
    } else {
        series
    };
    select_network_on(&fit_part, cfg)
}
