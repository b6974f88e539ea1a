//! End-to-end runs behind the command-line tool: fit on a stratified split,
//! evaluate a model on the test split, and the grid-search benchmark.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::dataio::{
    load_csv, odds_reference, stratified_holdout, stratified_split, LabeledDataset, SplitIndices,
};
use crate::detector::{fit, grid_search, DetectorModel, FitConfig, Label};
use crate::error::{DmkdeError, Result};
use crate::metrics::{self, MetricSummary};
use crate::oracle::{kde_scores, reference_classifier};
use crate::report::{
    canonical_json, predictions_csv, timings_json, write_text, OracleReport, PredictionRow,
    RefitSizes, RunReport, SplitSizes, REPORT_SCHEMA_VERSION,
};

struct Stopwatch {
    timings: BTreeMap<String, f64>,
    last: Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            timings: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        let ms = (now - self.last).as_secs_f64() * 1e3;
        self.timings
            .insert(stage.to_string(), (ms * 1e3).round() / 1e3);
        self.last = now;
    }
}

/// Report, per-sample predictions and (for fits) the model.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: DetectorModel,
    pub report: RunReport,
    pub predictions: Vec<PredictionRow>,
}

impl RunOutcome {
    /// Write `report.json`, `predictions.csv` and `timings.json` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>, prefix: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| DmkdeError::io(dir, e))?;
        write_text(
            dir.join(format!("{prefix}report.json")),
            &self.report.to_canonical_json()?,
        )?;
        write_text(
            dir.join(format!("{prefix}predictions.csv")),
            &predictions_csv(&self.predictions),
        )?;
        write_text(
            dir.join(format!("{prefix}timings.json")),
            &timings_json(&self.report.timings_ms)?,
        )
    }
}

fn split_sizes(split: &SplitIndices) -> SplitSizes {
    SplitSizes {
        train: split.train.len(),
        val: split.val.len(),
        test: split.test.len(),
    }
}

fn score_split(
    model: &DetectorModel,
    ds: &LabeledDataset,
    indices: &[usize],
) -> Result<(Vec<PredictionRow>, MetricSummary)> {
    let part = ds.subset(indices);
    let scored = model.predict_rows(part.features())?;
    let rows: Vec<PredictionRow> = indices
        .iter()
        .zip(&scored)
        .zip(part.labels())
        .map(|((&index, &(label, density)), &truth)| PredictionRow {
            index,
            density,
            label,
            truth: Some(truth),
        })
        .collect();
    let predicted: Vec<u8> = scored.iter().map(|(l, _)| l.as_u8()).collect();
    let summary = metrics::summarize(part.labels(), &predicted)?;
    Ok((rows, summary))
}

/// Compare the detector's test labels and scores with the exact-KDE reference
/// built from the same training and validation rows (in the model's
/// standardized space, at bandwidth `σ/√2`).
pub fn oracle_check(
    model: &DetectorModel,
    ds: &LabeledDataset,
    train: &[usize],
    val: &[usize],
    test: &[usize],
    predictions: &[PredictionRow],
) -> Result<OracleReport> {
    let kde_sigma = model.embedding().sigma() / std::f64::consts::SQRT_2;
    let train_x = model.transform(ds.subset(train).features())?;
    let val_x = model.transform(ds.subset(val).features())?;
    let test_x = model.transform(ds.subset(test).features())?;
    let reference = reference_classifier(
        train_x.view(),
        val_x.view(),
        test_x.view(),
        model.anomaly_rate(),
        kde_sigma,
    )?;
    let ours: Vec<u8> = predictions.iter().map(|p| p.label.as_u8()).collect();
    let theirs: Vec<u8> = reference.iter().map(|l| l.as_u8()).collect();
    let label_agreement = metrics::agreement(&ours, &theirs)?;
    let kde = kde_scores(train_x.view(), kde_sigma, test_x.view())?;
    let qde: Vec<f64> = predictions.iter().map(|p| p.density).collect();
    Ok(OracleReport {
        kde_sigma,
        label_agreement,
        spearman: metrics::spearman(&qde, &kde).ok(),
    })
}

/// Split, fit on train, calibrate on validation; the report scores the validation split.
pub fn run_fit(ds: &LabeledDataset, cfg: &RunConfig, with_oracle: bool) -> Result<RunOutcome> {
    let mut clock = Stopwatch::start();
    let split = stratified_split(ds, cfg.test_frac, cfg.val_frac, cfg.seed)?;
    clock.lap("split");
    let fit_cfg = cfg.fit_config();
    let model = fit(
        ds.subset(&split.train).features(),
        ds.subset(&split.val).features(),
        ds.anomaly_rate(),
        &fit_cfg,
    )?;
    clock.lap("fit");
    let (predictions, summary) = score_split(&model, ds, &split.val)?;
    clock.lap("score");
    let oracle = if with_oracle {
        let o = oracle_check(
            &model,
            ds,
            &split.train,
            &split.val,
            &split.val,
            &predictions,
        )?;
        clock.lap("oracle");
        Some(o)
    } else {
        None
    };
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "fit".to_string(),
        dataset: ds.summary(),
        config: fit_cfg,
        split_seed: split.seed,
        split_sizes: split_sizes(&split),
        refit_sizes: None,
        evaluated_split: "val".to_string(),
        threshold: model.threshold(),
        anomaly_rate: model.anomaly_rate(),
        metrics: summary,
        oracle,
        grid: None,
        timings_ms: clock.timings,
    };
    Ok(RunOutcome {
        model,
        report,
        predictions,
    })
}

/// The run configuration as it applies to `model`: hyperparameters baked
/// into the model override the file/flag values.
fn config_for_model(model: &DetectorModel, cfg: &RunConfig) -> FitConfig {
    FitConfig {
        sigma: model.embedding().sigma(),
        embed_dim: model.embedding().embed_dim(),
        use_aff: model.use_aff(),
        standardize: model.standardizer().is_some(),
        ..cfg.fit_config()
    }
}

/// Re-create the split with the run seed and score `model` on its test part.
pub fn run_eval(
    ds: &LabeledDataset,
    model: &DetectorModel,
    cfg: &RunConfig,
    with_oracle: bool,
) -> Result<RunOutcome> {
    if ds.dim() != model.input_dim() {
        return Err(DmkdeError::DimensionMismatch {
            expected: model.input_dim(),
            found: ds.dim(),
        });
    }
    let mut clock = Stopwatch::start();
    let split = stratified_split(ds, cfg.test_frac, cfg.val_frac, cfg.seed)?;
    clock.lap("split");
    let (predictions, summary) = score_split(model, ds, &split.test)?;
    clock.lap("score");
    let oracle = if with_oracle {
        let o = oracle_check(
            model,
            ds,
            &split.train,
            &split.val,
            &split.test,
            &predictions,
        )?;
        clock.lap("oracle");
        Some(o)
    } else {
        None
    };
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "eval".to_string(),
        dataset: ds.summary(),
        config: config_for_model(model, cfg),
        split_seed: split.seed,
        split_sizes: split_sizes(&split),
        refit_sizes: None,
        evaluated_split: "test".to_string(),
        threshold: model.threshold(),
        anomaly_rate: model.anomaly_rate(),
        metrics: summary,
        oracle,
        grid: None,
        timings_ms: clock.timings,
    };
    Ok(RunOutcome {
        model: model.clone(),
        report,
        predictions,
    })
}

/// Grid search on train/validation, refit the best configuration on
/// train ∪ validation (re-split with the run seed so the threshold still has
/// held-out densities to calibrate on), then score the test split.
pub fn benchmark_dataset(
    ds: &LabeledDataset,
    cfg: &RunConfig,
    with_oracle: bool,
) -> Result<RunOutcome> {
    if cfg.grid_is_empty() {
        return Err(DmkdeError::Config("empty hyperparameter grid".into()));
    }
    let mut clock = Stopwatch::start();
    let split = stratified_split(ds, cfg.test_frac, cfg.val_frac, cfg.seed)?;
    let train = ds.subset(&split.train);
    let val = ds.subset(&split.val);
    clock.lap("split");
    let grid = cfg.resolve_grid(train.features())?;
    let (best, grid_report) = grid_search(
        train.features(),
        val.features(),
        val.labels(),
        ds.anomaly_rate(),
        &grid,
        &cfg.fit_config(),
    )?;
    clock.lap("grid_search");

    let mut combined: Vec<usize> = split.train.iter().chain(&split.val).copied().collect();
    combined.sort_unstable();
    let combined_labels: Vec<u8> = combined.iter().map(|&i| ds.labels()[i]).collect();
    let (rest, holdout) = stratified_holdout(&combined_labels, cfg.val_frac, cfg.seed)?;
    let refit_train: Vec<usize> = rest.iter().map(|&i| combined[i]).collect();
    let refit_val: Vec<usize> = holdout.iter().map(|&i| combined[i]).collect();
    let model = fit(
        ds.subset(&refit_train).features(),
        ds.subset(&refit_val).features(),
        ds.anomaly_rate(),
        &best,
    )?;
    clock.lap("refit");
    let (predictions, summary) = score_split(&model, ds, &split.test)?;
    clock.lap("score");
    let oracle = if with_oracle {
        let o = oracle_check(
            &model,
            ds,
            &refit_train,
            &refit_val,
            &split.test,
            &predictions,
        )?;
        clock.lap("oracle");
        Some(o)
    } else {
        None
    };
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "benchmark".to_string(),
        dataset: ds.summary(),
        config: best,
        split_seed: split.seed,
        split_sizes: split_sizes(&split),
        refit_sizes: Some(RefitSizes {
            train: refit_train.len(),
            val: refit_val.len(),
        }),
        evaluated_split: "test".to_string(),
        threshold: model.threshold(),
        anomaly_rate: model.anomaly_rate(),
        metrics: summary,
        oracle,
        grid: Some(grid_report),
        timings_ms: clock.timings,
    };
    Ok(RunOutcome {
        model,
        report,
        predictions,
    })
}

/// One line of the benchmark summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub status: String,
    pub instances: Option<usize>,
    pub dimensions: Option<usize>,
    pub outlier_rate: Option<f64>,
    pub sigma: Option<f64>,
    pub embed_dim: Option<usize>,
    pub use_aff: Option<bool>,
    pub f1_weighted: Option<f64>,
    pub f1_anomaly: Option<f64>,
    pub accuracy: Option<f64>,
    pub reference_f1: Option<f64>,
}

impl SummaryRow {
    fn failed(dataset: String, err: &DmkdeError) -> Self {
        SummaryRow {
            reference_f1: odds_reference(&dataset).map(|r| r.reference_f1),
            dataset,
            status: format!("failed: {err}"),
            instances: None,
            dimensions: None,
            outlier_rate: None,
            sigma: None,
            embed_dim: None,
            use_aff: None,
            f1_weighted: None,
            f1_anomaly: None,
            accuracy: None,
        }
    }

    fn from_report(report: &RunReport) -> Self {
        SummaryRow {
            dataset: report.dataset.name.clone(),
            status: "ok".to_string(),
            instances: Some(report.dataset.instances),
            dimensions: Some(report.dataset.dimensions),
            outlier_rate: Some(report.dataset.outlier_rate),
            sigma: Some(report.config.sigma),
            embed_dim: Some(report.config.embed_dim),
            use_aff: Some(report.config.use_aff),
            f1_weighted: Some(report.metrics.f1_weighted),
            f1_anomaly: Some(report.metrics.f1_anomaly),
            accuracy: Some(report.metrics.accuracy),
            reference_f1: odds_reference(&report.dataset.name).map(|r| r.reference_f1),
        }
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

/// CSV rendering of the summary table.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "dataset",
        "instances",
        "dimensions",
        "outlier_rate",
        "sigma",
        "embed_dim",
        "use_aff",
        "f1_weighted",
        "f1_anomaly",
        "accuracy",
        "reference_f1",
        "status",
    ];
    // Writing to a Vec cannot fail.
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            opt(&r.instances),
            opt(&r.dimensions),
            opt(&r.outlier_rate),
            opt(&r.sigma),
            opt(&r.embed_dim),
            opt(&r.use_aff),
            opt(&r.f1_weighted),
            opt(&r.f1_anomaly),
            opt(&r.accuracy),
            opt(&r.reference_f1),
            r.status.clone(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

/// Markdown rendering with F1 to three decimals, like a results table.
pub fn summary_markdown(rows: &[SummaryRow]) -> String {
    let mut out = String::from("| Data Set | Instances | Dimensions | Outlier Rate | F1 (weighted) | Reference F1 | Status |\n|---|---|---|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            r.dataset,
            opt(&r.instances),
            opt(&r.dimensions),
            r.outlier_rate
                .map(|v| format!("{v:.4}"))
                .unwrap_or_default(),
            r.f1_weighted.map(|v| format!("{v:.3}")).unwrap_or_default(),
            r.reference_f1
                .map(|v| format!("{v:.3}"))
                .unwrap_or_default(),
            r.status
        ));
    }
    out
}

/// CSV files directly inside `dir`, sorted by name.
pub fn dataset_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| DmkdeError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

/// Benchmark every CSV in `data_dir`, writing per-dataset reports and
/// `summary.{csv,json,md}` into `out_dir`. A failing dataset is recorded in
/// the summary and does not stop the run.
pub fn run_benchmark_dir(
    data_dir: impl AsRef<Path>,
    cfg: &RunConfig,
    out_dir: impl AsRef<Path>,
    with_oracle: bool,
) -> Result<Vec<SummaryRow>> {
    if cfg.grid_is_empty() {
        return Err(DmkdeError::Config("empty hyperparameter grid".into()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| DmkdeError::io(out_dir, e))?;
    let mut rows = Vec::new();
    for path in dataset_files(data_dir)? {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let outcome = load_csv(&path, &cfg.csv_options())
            .and_then(|ds| benchmark_dataset(&ds, cfg, with_oracle));
        match outcome {
            Ok(run) => {
                run.write_to(out_dir, &format!("{name}."))?;
                rows.push(SummaryRow::from_report(&run.report));
            }
            Err(err) => rows.push(SummaryRow::failed(name, &err)),
        }
    }
    write_text(out_dir.join("summary.csv"), &summary_csv(&rows))?;
    write_text(out_dir.join("summary.md"), &summary_markdown(&rows))?;
    write_text(out_dir.join("summary.json"), &canonical_json(&rows)?)?;
    Ok(rows)
}

/// Score every row of a feature table; truth is attached when labels exist.
pub fn predict_table(
    model: &DetectorModel,
    features: ndarray::ArrayView2<f64>,
    labels: Option<&[u8]>,
) -> Result<Vec<PredictionRow>> {
    let scored = model.predict_rows(features)?;
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(index, (label, density))| PredictionRow {
            index,
            density,
            label,
            truth: labels.map(|l| l[index]),
        })
        .collect())
}

/// Count of anomaly labels in a prediction list.
pub fn anomaly_count(rows: &[PredictionRow]) -> usize {
    rows.iter().filter(|r| r.label == Label::Anomaly).count()
}
